"""Empirical testers for the partition-based sensitivity notions.

A trial samples witness points inside a positive-measure target set,
computes the time set where the witness orbits occupy pairwise distinct
atoms, and reports window densities of that set.  Verdicts are always
"witnessed" or "not-witnessed-at-budget": absence of a witness is not
certifiable by finite search, and the report language reflects that.

Where the conditional law mu(. | A) is exactly implementable
(spliced i.i.d. coordinates, Markov continuation, occurrence offsets in
a substitution prefix, integer arc intersections) the samplers draw
from it directly; rejection sampling is the generic fallback with a
budget tied to the target measure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import rng
from .errors import KindError, SamplingError, ValidationError
from .numcore import DensityEstimate, FiniteTimeSet, density_estimate, standard_checkpoints
from .partitions import TimePattern, atom_count, orbit_atom_sequence
from .pattern_entropy import DEFAULT_NODE_BUDGET, p_star
from .systems import (
    CIRCLE,
    Bernoulli,
    CirclePoint,
    FiberedPoint,
    FiniteExtension,
    Markov,
    Rotation,
    SturmianCoding,
    Substitution,
    SymbolicPoint,
    apply_shift,
    extend_point,
    is_symbolic,
    orbit_pair_distances,
    point_symbols,
    points_distinct,
    sample_point,
    word_frequency,
)

_DISTINCT_RETRIES = 128


# ---------------------------------------------------------------------------
# target sets


@dataclass(frozen=True)
class FullSpace:
    kind = "full"

    def describe(self) -> str:
        return "full"


@dataclass(frozen=True)
class Cylinder:
    """Points whose symbols at [position, position+len(word)) equal word."""

    word: tuple
    position: int = 0
    kind = "cylinder"

    def __post_init__(self):
        object.__setattr__(self, "word", tuple(int(a) for a in self.word))
        if not self.word:
            raise ValidationError("cylinder word must be non-empty")
        if self.position < 0:
            raise ValidationError("cylinder position must be >= 0")

    def describe(self) -> str:
        w = "".join(str(a) for a in self.word)
        return f"cylinder({w}@{self.position})"


@dataclass(frozen=True)
class Arc:
    """Circle arc [lo, hi); on fibered systems, the base arc times the
    full fiber."""

    lo: float
    hi: float
    kind = "arc"

    def __post_init__(self):
        if not (0.0 <= self.lo < self.hi <= 1.0):
            raise ValidationError("arc must satisfy 0 <= lo < hi <= 1")

    @property
    def lo_units(self) -> int:
        return int(round(self.lo * CIRCLE))

    @property
    def hi_units(self) -> int:
        return int(round(self.hi * CIRCLE))

    def describe(self) -> str:
        return f"arc[{self.lo:g},{self.hi:g})"


TargetSet = FullSpace | Cylinder | Arc


def _sturmian_cell_arcs(sys: SturmianCoding, word, position):
    """Integer arcs of {x : coding of x has `word` at `position`}."""
    a = sys.alpha_units
    shifts = [((position + i) * a) % CIRCLE for i in range(len(word))]
    cuts = set()
    for s in shifts:
        cuts.add((0 - s) % CIRCLE)
        cuts.add((sys.cut_units - s) % CIRCLE)
    eps = sorted(cuts)
    arcs = []
    for i, lo in enumerate(eps):
        hi = eps[i + 1] if i + 1 < len(eps) else eps[0] + CIRCLE
        length = hi - lo
        if length <= 0:
            continue
        mid = (lo + length // 2) % CIRCLE
        letters = tuple(0 if (mid + s) % CIRCLE < sys.cut_units else 1 for s in shifts)
        if letters == tuple(word):
            arcs.append((lo, length))
    return arcs


# Substitution cylinder measures used for budgets and reports stabilize
# at this coarser tolerance; the 1e-7 default is unreachable for deep
# words within the prefix cap.
MEASURE_TOL = 1e-5


def target_measure(sys, target) -> float:
    """mu(A); raises unless positive (null targets are rejected)."""
    if isinstance(target, FullSpace):
        return 1.0
    if isinstance(target, Cylinder):
        if not is_symbolic(sys):
            raise KindError("cylinder targets need a symbolic system")
        tol = MEASURE_TOL if isinstance(sys, Substitution) else None
        m = word_frequency(sys, target.word, tol=tol)
        if m <= 0.0:
            raise ValidationError(f"cylinder {target.describe()} has zero measure")
        return m
    if isinstance(target, Arc):
        if isinstance(sys, (Rotation, FiniteExtension)):
            m = (target.hi_units - target.lo_units) / CIRCLE
            if m <= 0.0:
                raise ValidationError("arc quantizes to the empty set")
            return m
        raise KindError("arc targets need a circle-based system")
    raise KindError(f"unknown target kind {target!r}")


def target_contains(sys, target, x) -> bool:
    if isinstance(target, FullSpace):
        return True
    if isinstance(target, Cylinder):
        end = target.position + len(target.word)
        syms = point_symbols(sys, x, end)
        return bool(np.array_equal(syms[target.position : end],
                                   np.asarray(target.word, dtype=syms.dtype)))
    units = x.units
    return target.lo_units <= units < target.hi_units


def sample_in_target(sys, target, seed: int, horizon: int):
    """Draw a point with law mu(. | target), deterministically in seed."""
    target_measure(sys, target)  # validates positivity / kind
    if isinstance(target, FullSpace):
        return sample_point(sys, seed, horizon)
    key = rng.derive_key(sys.seed, "target", seed)
    if isinstance(target, Cylinder):
        q, w = target.position, target.word
        need = max(horizon, q + len(w))
        if isinstance(sys, Bernoulli):
            base = sample_point(sys, seed, need)
            symbols = base.symbols.copy()
            symbols[q : q + len(w)] = w
            return SymbolicPoint(symbols, gen=base.gen)
        if isinstance(sys, Markov) and q == 0:
            point = SymbolicPoint(np.asarray(w, dtype=np.int16),
                                  gen=("markov", rng.derive_key(sys.seed, "sample", seed), 0))
            return extend_point(sys, point, need)
        if isinstance(sys, Substitution):
            depth = sys.depth_for_length(64 * need)
            prefix = sys.prefix(depth)
            limit = prefix.size - need + 1
            ok = np.ones(limit, dtype=bool)
            for i, letter in enumerate(w):
                ok &= prefix[q + i : q + i + limit] == letter
            occ = np.nonzero(ok)[0]
            if occ.size == 0:
                raise SamplingError(f"{target.describe()} never occurs in the sampled prefix")
            off = int(occ[rng.integer_below(key, 0, occ.size)])
            return SymbolicPoint(prefix[off : off + need].copy(), gen=("offset", off))
        if isinstance(sys, SturmianCoding):
            arcs = _sturmian_cell_arcs(sys, w, q)
            return CirclePoint(_sample_in_arcs(arcs, key, 0))
        return _rejection_sample(sys, target, seed, need)
    # arc targets
    if isinstance(sys, FiniteExtension):
        units = _sample_in_arcs([(target.lo_units, target.hi_units - target.lo_units)], key, 0)
        fiber = rng.integer_below(key, 1, sys.fiber_size)
        return FiberedPoint(units, fiber)
    units = _sample_in_arcs([(target.lo_units, target.hi_units - target.lo_units)], key, 0)
    return CirclePoint(units)


def _sample_in_arcs(arcs, key: int, index: int) -> int:
    total = sum(length for _, length in arcs)
    if total <= 0:
        raise SamplingError("empty arc family")
    r = min(int(rng.uniform(key, index) * total), total - 1)
    for lo, length in arcs:
        if r < length:
            return (lo + r) % CIRCLE
        r -= length
    raise AssertionError("unreachable")


def _rejection_sample(sys, target, seed: int, horizon: int):
    measure = target_measure(sys, target)
    budget = max(1000, int(math.ceil(200.0 / measure)))
    for j in range(budget):
        x = sample_point(sys, rng.derive_key(seed, "rejection", j), horizon)
        if target_contains(sys, target, x):
            return x
    raise SamplingError(
        f"rejection budget {budget} exhausted for target {target.describe()}"
    )


def _distinct_witnesses(sys, target, n: int, seed: int, horizon: int):
    points, seeds = [], []
    for i in range(n):
        for retry in range(_DISTINCT_RETRIES):
            sub = rng.derive_key(seed, "witness", i, retry)
            x = sample_in_target(sys, target, sub, horizon)
            if all(points_distinct(sys, x, y) for y in points):
                points.append(x)
                seeds.append(sub)
                break
        else:
            raise SamplingError(f"could not draw {n} distinct points in {target.describe()}")
    return points, tuple(seeds)


# ---------------------------------------------------------------------------
# records and reports


@dataclass(frozen=True)
class SeparationRecord:
    """One sensitivity trial: witnesses, separation time set, densities."""

    witness_seeds: tuple
    separation_set: FiniteTimeSet
    density: DensityEstimate
    all_distinct_atoms_fraction: float


@dataclass(frozen=True)
class CesaroRecord:
    """One mean-sensitivity trial: running averages of the minimal
    pairwise orbit distance at checkpoint windows."""

    witness_seeds: tuple
    checkpoints: tuple  # ((N', average), ...)
    liminf_proxy: float


@dataclass(frozen=True)
class SensitivityReport:
    notion: str  # strong | weak | mean | pair
    n: int
    delta_estimate: float
    trials: tuple
    verdict: str  # witnessed | not-witnessed-at-budget

    @property
    def proxies(self) -> tuple:
        out = []
        for t in self.trials:
            if isinstance(t, CesaroRecord):
                out.append(t.liminf_proxy)
            elif self.notion == "weak":
                out.append(t.density.upper_proxy)
            else:
                out.append(t.density.lower_proxy)
        return tuple(out)


@dataclass(frozen=True)
class WitnessConstruction:
    """Outcome of the pattern-guided witness construction."""

    found: bool
    points: tuple
    pattern: TimePattern | None
    attempts: int


@dataclass(frozen=True)
class FamilySensitivityResult:
    """Sensitivity verdict over a family of shrinking target sets.

    The family delta is the minimum over targets of the per-target best
    proxy: an empirical stand-in for a sensitive constant valid for
    every tested A."""

    notion: str
    n: int
    per_target: tuple  # ((target description, SensitivityReport), ...)
    family_delta: float
    verdict: str


def separation_time_set(sys, part, points, n_steps: int) -> FiniteTimeSet:
    """Times k < n_steps at which the orbit atoms are pairwise distinct."""
    seqs = np.vstack([orbit_atom_sequence(sys, part, x, n_steps) for x in points])
    if seqs.shape[0] == 1:
        distinct = np.ones(n_steps, dtype=bool)
    else:
        srt = np.sort(seqs, axis=0)
        distinct = np.all(np.diff(srt, axis=0) != 0, axis=0)
    return FiniteTimeSet(np.nonzero(distinct)[0], n_steps)


def n_sensitivity_trial(sys, part, target, n: int, n_steps: int, seed: int) -> SeparationRecord:
    """Sample n distinct points in the target and measure the density of
    their pairwise-distinct-atom times over [0, n_steps)."""
    if n < 2:
        raise ValidationError("n must be >= 2")
    r = atom_count(sys, part)
    if r < n:
        raise ValidationError(f"partition has {r} atoms; n-sensitivity needs at least n={n}")
    points, seeds = _distinct_witnesses(sys, target, n, seed, n_steps)
    f = separation_time_set(sys, part, points, n_steps)
    dens = density_estimate(f, standard_checkpoints(n_steps))
    return SeparationRecord(seeds, f, dens, len(f) / n_steps)


def weak_sensitivity_trial(sys, part, target, n: int, n_steps: int, seed: int) -> SeparationRecord:
    """Identical trial data; the weak notion reads the upper-density proxy."""
    return n_sensitivity_trial(sys, part, target, n, n_steps, seed)


def construct_witnesses(sys, part, target, n: int, horizon: int, seed: int,
                        sample_horizon: int = 256,
                        node_budget: int = DEFAULT_NODE_BUDGET,
                        attempts: int = 2000) -> WitnessConstruction:
    """Pattern-guided witness construction.

    Finds a high-entropy n-pattern (t_1 < ... < t_n) with `p_star`, then
    samples a single point z conditioned on T^{t_i} z landing in the
    target for every i, and returns the shifted points x_i = T^{t_i} z.
    Whenever the orbit of z revisits the product cell those points
    occupy, the x_i sit in pairwise distinct atoms simultaneously.
    """
    if atom_count(sys, part) < n:
        return WitnessConstruction(False, (), None, 0)
    pattern = p_star(sys, part, n, horizon, node_budget=node_budget).best_pattern
    times = pattern.times
    need = sample_horizon + times[-1]
    z = None
    used = 0
    if isinstance(target, FullSpace):
        z = sample_point(sys, rng.derive_key(seed, "construct"), need)
        used = 1
    elif isinstance(target, Cylinder) and isinstance(sys, Bernoulli):
        # splice the cylinder word at every shifted window; a letter
        # conflict means the intersection is exactly null
        constraints: dict[int, int] = {}
        for t in times:
            for i, letter in enumerate(target.word):
                pos = t + target.position + i
                if constraints.setdefault(pos, letter) != letter:
                    return WitnessConstruction(False, (), pattern, 0)
        base = sample_point(sys, rng.derive_key(seed, "construct"), need)
        symbols = base.symbols.copy()
        for pos, letter in constraints.items():
            symbols[pos] = letter
        z = SymbolicPoint(symbols, gen=base.gen)
        used = 1
    elif isinstance(target, Cylinder) and isinstance(sys, Substitution):
        depth = sys.depth_for_length(64 * need)
        prefix = sys.prefix(depth)
        limit = prefix.size - need + 1
        ok = np.ones(limit, dtype=bool)
        for t in times:
            for i, letter in enumerate(target.word):
                p = t + target.position + i
                ok &= prefix[p : p + limit] == letter
        occ = np.nonzero(ok)[0]
        if occ.size == 0:
            return WitnessConstruction(False, (), pattern, 0)
        off = int(occ[rng.integer_below(rng.derive_key(seed, "construct"), 0, occ.size)])
        z = SymbolicPoint(prefix[off : off + need].copy(), gen=("offset", off))
        used = 1
    elif isinstance(target, Cylinder) and isinstance(sys, SturmianCoding):
        pieces = [_sturmian_cell_arcs(sys, target.word, target.position + t) for t in times]
        arcs = _intersect_arc_families(pieces)
        if not arcs:
            return WitnessConstruction(False, (), pattern, 0)
        z = CirclePoint(_sample_in_arcs(arcs, rng.derive_key(seed, "construct"), 0))
        used = 1
    elif isinstance(target, Arc) and isinstance(sys, (Rotation, SturmianCoding)):
        a = sys.alpha_units
        pieces = []
        for t in times:
            shift = (t * a) % CIRCLE
            lo = (target.lo_units - shift) % CIRCLE
            pieces.append([(lo, target.hi_units - target.lo_units)])
        arcs = _intersect_arc_families(pieces)
        if not arcs:
            return WitnessConstruction(False, (), pattern, 0)
        z = CirclePoint(_sample_in_arcs(arcs, rng.derive_key(seed, "construct"), 0))
        used = 1
    else:
        # generic rejection against the simultaneous-visit condition
        for j in range(attempts):
            cand = sample_point(sys, rng.derive_key(seed, "construct", j), need)
            used = j + 1
            if all(target_contains(sys, target, apply_shift(sys, cand, t)) for t in times):
                z = cand
                break
        if z is None:
            return WitnessConstruction(False, (), pattern, used)
    points = tuple(apply_shift(sys, z, t) for t in times)
    for i in range(len(points)):
        for j in range(i + 1, len(points)):
            if not points_distinct(sys, points[i], points[j]):
                return WitnessConstruction(False, (), pattern, used)
    return WitnessConstruction(True, points, pattern, used)


def _split_arc(lo: int, length: int):
    """Circle arc (start, length) as linear [a, b) pieces inside [0, M)."""
    if lo + length <= CIRCLE:
        return [(lo, lo + length)]
    return [(lo, CIRCLE), (0, lo + length - CIRCLE)]


def _intersect_arc_families(families):
    """Intersect unions of integer circle arcs; returns (lo, length) pieces."""
    current = [piece for lo, length in families[0] for piece in _split_arc(lo, length)]
    for fam in families[1:]:
        pieces = [piece for lo, length in fam for piece in _split_arc(lo, length)]
        nxt = []
        for a1, b1 in current:
            for a2, b2 in pieces:
                lo, hi = max(a1, a2), min(b1, b2)
                if hi > lo:
                    nxt.append((lo, hi))
        current = nxt
        if not current:
            return []
    return [(lo, hi - lo) for lo, hi in current]


def mean_sensitivity_estimate(sys, target, n: int, n_steps: int, trials: int,
                              seed: int) -> SensitivityReport:
    """Mean sensitivity via the metric: running averages of the minimal
    pairwise orbit distance, with the liminf proxy read off the suffix
    checkpoints."""
    if n < 2:
        raise ValidationError("n must be >= 2")
    if trials < 1:
        raise ValidationError("at least one trial is required")
    records = []
    cps = standard_checkpoints(n_steps)
    for t in range(trials):
        points, seeds = _distinct_witnesses(sys, target, n, rng.derive_key(seed, "trial", t), n_steps)
        mins = None
        for i in range(n):
            for j in range(i + 1, n):
                d = orbit_pair_distances(sys, points[i], points[j], n_steps)
                mins = d if mins is None else np.minimum(mins, d)
        csum = np.cumsum(mins)
        rows = tuple((int(c), float(csum[c - 1] / c)) for c in cps)
        suffix = rows[len(rows) // 2 :]
        liminf = min(v for _, v in suffix)
        records.append(CesaroRecord(seeds, rows, liminf))
    delta = max(r.liminf_proxy for r in records)
    verdict = "witnessed" if delta > 0 else "not-witnessed-at-budget"
    return SensitivityReport("mean", n, delta, tuple(records), verdict)


def pair_separation_density(sys, part, trials: int, n_steps: int, seed: int) -> SensitivityReport:
    """Separation densities of independent mu x mu pairs from the full
    space.  For a sensitive partition the proxies concentrate above a
    common positive level (the almost-every-pair characterization)."""
    if trials < 1:
        raise ValidationError("at least one trial is required")
    records = []
    for t in range(trials):
        points, seeds = _distinct_witnesses(sys, FullSpace(), 2, rng.derive_key(seed, "pair", t), n_steps)
        f = separation_time_set(sys, part, points, n_steps)
        dens = density_estimate(f, standard_checkpoints(n_steps))
        records.append(SeparationRecord(seeds, f, dens, len(f) / n_steps))
    delta = max(r.density.lower_proxy for r in records)
    verdict = "witnessed" if delta > 0 else "not-witnessed-at-budget"
    return SensitivityReport("pair", 2, delta, tuple(records), verdict)


def default_target_family(sys, depths=range(1, 11), seed: int = 0) -> list:
    """Adversarial family of shrinking positive-measure targets.

    Symbolic kinds: cylinders on the first d coordinates of a seeded
    typical point (measure roughly shrinking geometrically).  Circle
    kinds: nested arcs of length 2**-d.  Shrinking sets are where
    non-sensitive systems fail, so sensitivity claims are probed
    against every member.
    """
    depths = list(depths)
    if is_symbolic(sys):
        ref = sample_point(sys, rng.derive_key(seed, "family"), max(depths))
        syms = point_symbols(sys, ref, max(depths))
        return [Cylinder(tuple(int(a) for a in syms[:d]), 0) for d in depths]
    if isinstance(sys, (Rotation, FiniteExtension)):
        u = rng.uniform(rng.derive_key(seed, "family"), 0) * 0.5
        return [Arc(u, u + 2.0 ** (-d)) for d in depths]
    raise KindError(f"no default target family for kind {sys.kind}")


def sensitivity_search(sys, part, n: int, targets, n_steps: int, trials: int,
                       seed: int, notion: str = "strong",
                       construct_horizon: int | None = None,
                       node_budget: int = DEFAULT_NODE_BUDGET) -> FamilySensitivityResult:
    """Run trials (and, when requested, the constructive witness
    procedure) against every target in the family.

    The family delta is min over targets of the best per-target proxy;
    the verdict is "witnessed" only when every target produced a
    strictly positive proxy.
    """
    if notion not in ("strong", "weak"):
        raise ValidationError("notion must be 'strong' or 'weak'")
    per_target = []
    family_delta = math.inf
    for ti, target in enumerate(targets):
        records = []
        for tr in range(trials):
            records.append(
                n_sensitivity_trial(sys, part, target, n, n_steps,
                                    rng.derive_key(seed, "target", ti, "trial", tr))
            )
        if construct_horizon is not None:
            built = construct_witnesses(sys, part, target, n, construct_horizon,
                                        rng.derive_key(seed, "target", ti, "construct"),
                                        node_budget=node_budget)
            if built.found:
                f = separation_time_set(sys, part, built.points, n_steps)
                dens = density_estimate(f, standard_checkpoints(n_steps))
                records.append(SeparationRecord((), f, dens, len(f) / n_steps))
        proxies = [r.density.upper_proxy if notion == "weak" else r.density.lower_proxy
                   for r in records]
        delta = max(proxies)
        verdict = "witnessed" if delta > 0 else "not-witnessed-at-budget"
        report = SensitivityReport(notion, n, delta, tuple(records), verdict)
        per_target.append((target.describe(), report))
        family_delta = min(family_delta, delta)
    verdict = "witnessed" if family_delta > 0 else "not-witnessed-at-budget"
    return FamilySensitivityResult(notion, n, tuple(per_target), family_delta, verdict)
