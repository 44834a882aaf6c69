"""Sensitivity and maximal pattern entropy for concrete
measure-preserving systems.

The toolkit computes partition joins along arbitrary time patterns,
maximizes their entropy over patterns (the p* search), estimates the
maximal pattern entropy h* through the subadditive p*(k)/k profile, and
runs empirical testers for partition-based sensitivity notions on
exactly computable reference systems.
"""

__version__ = "0.1.0"

from .errors import (
    HorizonError,
    KindError,
    SamplingError,
    SpanError,
    ValidationError,
)
from .numcore import (
    BestIntersection,
    DensityEstimate,
    FiniteTimeSet,
    ProbVector,
    best_k_intersection,
    density_estimate,
    shannon_entropy,
    standard_checkpoints,
    uniformity_bound,
)
from .partitions import (
    IntervalPartition,
    JointDistribution,
    ProductPartition,
    SymbolMapPartition,
    TimePattern,
    WordPartition,
    atom_count,
    atom_measures,
    atoms,
    fiber_partition,
    halves_partition,
    joint_distribution,
    joint_entropy,
    orbit_atom_sequence,
    partition_entropy,
    refine,
    refines,
    trivial_partition,
)
from .pattern_entropy import (
    HStarProfile,
    PatternSearchResult,
    PatternSweepResult,
    brute_force_p_star,
    circle_pattern_sweep,
    h_star_family_sweep,
    h_star_profile,
    p_star,
    sequence_entropy_profile,
)
from .sensitivity import (
    Arc,
    Cylinder,
    FamilySensitivityResult,
    FullSpace,
    SensitivityReport,
    SeparationRecord,
    construct_witnesses,
    default_target_family,
    mean_sensitivity_estimate,
    n_sensitivity_trial,
    pair_separation_density,
    sensitivity_search,
    separation_time_set,
    weak_sensitivity_trial,
)
from .systems import (
    Bernoulli,
    CirclePoint,
    FiberedPoint,
    FiniteExtension,
    Markov,
    ProductSystem,
    Rotation,
    SturmianCoding,
    Substitution,
    SymbolicPoint,
    apply_shift,
    metric_distance,
    metric_distance_info,
    orbit_pair_distances,
    pattern_letter_distribution,
    point_symbols,
    positive_words,
    sample_point,
    thue_morse,
    word_frequency,
)
