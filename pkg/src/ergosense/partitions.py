"""Finite measurable partitions, joins along time patterns, and
partition entropy.

Symbolic partitions are functions of a sliding window of coordinates;
circle partitions are unions of arcs with integer endpoints.  Joint
distributions along a time pattern are computed exactly per system kind
(product / chain formulas, stabilized substitution counts, integer arc
arrangements) with zero-mass atom tuples dropped eagerly.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import systems
from .errors import KindError, SpanError, ValidationError
from .numcore import ProbVector, entropy_of
from .systems import (
    CIRCLE,
    DEFAULT_SPAN_LIMIT,
    FiniteExtension,
    ProductSystem,
    Rotation,
    SturmianCoding,
    circle_units,
    is_symbolic,
    pattern_letter_distribution,
    point_symbols,
)


@dataclass(frozen=True)
class TimePattern:
    """Strictly increasing tuple of non-negative integer times."""

    times: tuple

    def __post_init__(self):
        t = tuple(int(x) for x in self.times)
        object.__setattr__(self, "times", t)
        if not t:
            raise ValidationError("a time pattern needs at least one time")
        if t[0] < 0:
            raise ValidationError("times must be non-negative")
        if any(b <= a for a, b in zip(t, t[1:])):
            raise ValidationError("times must be strictly increasing")

    def __len__(self):
        return len(self.times)

    @property
    def span(self) -> int:
        return self.times[-1] - self.times[0] + 1


@dataclass(frozen=True)
class JointDistribution:
    """Distribution of atom tuples along a time pattern."""

    pattern: TimePattern
    dist: ProbVector

    def entropy(self) -> float:
        return self.dist.entropy()

    def marginal(self, i: int) -> dict:
        """Mass of each atom at pattern position i."""
        out: dict = {}
        for mass, labels in zip(self.dist.probs, self.dist.labels):
            out[labels[i]] = out.get(labels[i], 0.0) + mass
        return out


# ---------------------------------------------------------------------------
# partition kinds


class WordPartition:
    """Partition of a symbolic system by the word on coordinates [0, L)."""

    kind = "word"

    def __init__(self, length: int):
        if length < 1:
            raise ValidationError("window length must be >= 1")
        self.window = int(length)

    def atom_of_word(self, word: tuple):
        return word

    def describe(self) -> str:
        return f"word(L={self.window})"


class SymbolMapPartition:
    """Partition of a symbolic system by a total map letter -> atom id.

    With the identity map this is the letter partition; coarser maps
    merge letters.  Also serves as the fiber partition of a finite
    extension (letters = fiber indices).
    """

    kind = "symbol_map"

    def __init__(self, mapping: Sequence[int]):
        m = tuple(int(v) for v in mapping)
        if not m:
            raise ValidationError("symbol map must cover the alphabet")
        self.mapping = m
        self.window = 1

    def atom_of_word(self, word: tuple):
        letter = word[0]
        if letter >= len(self.mapping):
            raise ValidationError(f"letter {letter} outside the mapped alphabet")
        return self.mapping[letter]

    def describe(self) -> str:
        return f"symbol_map({','.join(str(v) for v in self.mapping)})"


class WindowFunctionPartition:
    """Partition by an explicit total map on window words (refinement
    results live here)."""

    kind = "window_function"

    def __init__(self, window: int, mapping: dict):
        self.window = int(window)
        self.mapping = dict(mapping)

    def atom_of_word(self, word: tuple):
        return self.mapping[word]

    def describe(self) -> str:
        return f"window_function(L={self.window},{len(set(self.mapping.values()))} atoms)"


class IntervalPartition:
    """Partition of the circle into finite unions of arcs.

    ``atoms`` is a list of arc lists; each arc is (lo, hi) with
    0 <= lo < hi <= 1 (a wrap-around atom is given as two arcs).  The
    arcs must tile the circle exactly; endpoints are quantized onto the
    dyadic integer grid, so overlap/cover checks are exact.
    """

    kind = "interval"

    @staticmethod
    def _to_units(endpoint) -> int:
        if endpoint in (1, 1.0):
            return CIRCLE
        return circle_units(endpoint)

    def __init__(self, atoms: Sequence[Sequence[tuple]]):
        if not atoms:
            raise ValidationError("interval partition needs at least one atom")
        segs = []
        atom_arcs = []
        for idx, arcs in enumerate(atoms):
            if not arcs:
                raise ValidationError("every atom needs at least one arc")
            units = []
            for lo, hi in arcs:
                lo_u = self._to_units(lo)
                hi_u = self._to_units(hi)
                if not (0 <= lo_u < hi_u <= CIRCLE):
                    raise ValidationError(f"bad arc ({lo}, {hi}) in atom {idx}")
                segs.append((lo_u, hi_u, idx))
                units.append((lo_u, hi_u))
            atom_arcs.append(tuple(units))
        segs.sort()
        if segs[0][0] != 0 or segs[-1][1] != CIRCLE:
            raise ValidationError("arcs must cover the circle")
        for (l1, h1, _), (l2, h2, _) in zip(segs, segs[1:]):
            if h1 != l2:
                raise ValidationError("arcs must tile the circle without gaps or overlaps")
        self.atom_arcs = tuple(atom_arcs)
        self.n_atoms = len(atoms)
        # segment table: bounds[i] <= x < bounds[i+1]  ->  segment_atoms[i]
        self.bounds = np.asarray([s[0] for s in segs] + [CIRCLE], dtype=np.uint64)
        self.segment_atoms = np.asarray([s[2] for s in segs], dtype=np.int64)

    def atom_at(self, units: np.ndarray) -> np.ndarray:
        idx = np.searchsorted(self.bounds, np.asarray(units, dtype=np.uint64), side="right") - 1
        return self.segment_atoms[idx]

    def describe(self) -> str:
        return f"interval({self.n_atoms} atoms)"


def halves_partition() -> IntervalPartition:
    return IntervalPartition([[(0.0, 0.5)], [(0.5, 1.0)]])


def full_circle_partition() -> IntervalPartition:
    return IntervalPartition([[(0.0, 1.0)]])


class ProductPartition:
    """Pair of partitions for product or fibered systems."""

    kind = "product"

    def __init__(self, components: Sequence):
        comps = tuple(components)
        if len(comps) < 2:
            raise ValidationError("a product partition needs >= 2 components")
        self.components = comps

    def describe(self) -> str:
        return "product(" + ",".join(c.describe() for c in self.components) + ")"


def fiber_partition(sys: FiniteExtension) -> ProductPartition:
    """The natural fiber partition of a finite extension: full base
    circle times the singleton partition of the fiber."""
    return ProductPartition([full_circle_partition(), SymbolMapPartition(range(sys.fiber_size))])


Partition = WordPartition | SymbolMapPartition | WindowFunctionPartition | IntervalPartition | ProductPartition


def trivial_partition(sys):
    """The one-atom partition of the given system."""
    if is_symbolic(sys):
        return SymbolMapPartition([0] * sys.alphabet_size)
    if isinstance(sys, Rotation):
        return full_circle_partition()
    if isinstance(sys, FiniteExtension):
        return ProductPartition([full_circle_partition(), SymbolMapPartition([0] * sys.fiber_size)])
    if isinstance(sys, ProductSystem):
        return ProductPartition([trivial_partition(c) for c in sys.components])
    raise KindError(f"no trivial partition for kind {sys.kind}")


def _is_window_partition(part) -> bool:
    return isinstance(part, (WordPartition, SymbolMapPartition, WindowFunctionPartition))


def _check_compat(sys, part):
    if _is_window_partition(part):
        if not is_symbolic(sys):
            raise KindError(f"window partitions need a symbolic system, got {sys.kind}")
    elif isinstance(part, IntervalPartition):
        if not isinstance(sys, Rotation) or isinstance(sys, SturmianCoding):
            raise KindError("interval partitions apply to plain rotations only")
    elif isinstance(part, ProductPartition):
        if isinstance(sys, ProductSystem):
            if len(part.components) != len(sys.components):
                raise KindError("product partition arity mismatch")
            for c, p in zip(sys.components, part.components):
                _check_compat(c, p)
        elif isinstance(sys, FiniteExtension):
            if len(part.components) != 2:
                raise KindError("fibered systems take (base, fiber) product partitions")
            base, fiber = part.components
            if not isinstance(base, IntervalPartition) or not isinstance(fiber, SymbolMapPartition):
                raise KindError("fibered partitions are (interval, symbol_map) pairs")
        else:
            raise KindError(f"product partitions do not apply to kind {sys.kind}")
    else:
        raise KindError(f"unknown partition kind {type(part).__name__}")


# ---------------------------------------------------------------------------
# atoms and joint distributions


def atoms(sys, part, span_limit: int = DEFAULT_SPAN_LIMIT) -> list:
    """Canonical (sorted) labels of the positive-measure atoms."""
    _check_compat(sys, part)
    if _is_window_partition(part):
        words = systems.positive_words(sys, part.window, span_limit=span_limit)
        return sorted({part.atom_of_word(w) for w in words})
    if isinstance(part, IntervalPartition):
        return list(range(part.n_atoms))
    if isinstance(sys, ProductSystem):
        comp = [atoms(c, p, span_limit) for c, p in zip(sys.components, part.components)]
        return [tuple(t) for t in itertools.product(*comp)]
    # finite extension: base atoms x fiber atoms, all of positive mass
    base, fiber = part.components
    fiber_labels = sorted({fiber.atom_of_word((j,)) for j in range(sys.fiber_size)})
    return [(b, f) for b in range(base.n_atoms) for f in fiber_labels]


def atom_count(sys, part, span_limit: int = DEFAULT_SPAN_LIMIT) -> int:
    return len(atoms(sys, part, span_limit))


def _window_joint_masses(sys, part, times, depth, span_limit) -> dict:
    window = part.window
    span = times[-1] + window - times[0]
    if span > span_limit:
        raise SpanError(f"pattern span {span} exceeds the limit {span_limit}")
    positions = sorted({t + o for t in times for o in range(window)})
    pos_index = {p: i for i, p in enumerate(positions)}
    letter_dist = pattern_letter_distribution(sys, positions, depth=depth, span_limit=span_limit)
    out: dict[tuple, float] = {}
    slots = [[pos_index[t + o] for o in range(window)] for t in times]
    for assign, mass in letter_dist.items():
        label = tuple(part.atom_of_word(tuple(assign[i] for i in slot)) for slot in slots)
        out[label] = out.get(label, 0.0) + mass
    return out


def _rotation_joint_masses(sys: Rotation, part: IntervalPartition, times) -> dict:
    a = sys.alpha_units
    shifts = [(t * a) % CIRCLE for t in times]
    cuts = set()
    for shift in shifts:
        for b in part.bounds[:-1].tolist():
            cuts.add((b - shift) % CIRCLE)
    eps = sorted(cuts)
    out: dict[tuple, float] = {}
    n = len(eps)
    for i, lo in enumerate(eps):
        hi = eps[i + 1] if i + 1 < n else eps[0] + CIRCLE
        length = hi - lo
        if length <= 0:
            continue
        mid = (lo + length // 2) % CIRCLE
        label = tuple(int(part.atom_at(np.asarray([(mid + s) % CIRCLE], dtype=np.uint64))[0]) for s in shifts)
        out[label] = out.get(label, 0.0) + length / CIRCLE
    return out


def _extension_joint_masses(sys: FiniteExtension, part: ProductPartition, times) -> dict:
    base_part, fiber_part = part.components
    a = sys.alpha_units
    t_max = times[-1]
    cuts = set()
    for i in range(t_max):
        shift = (i * a) % CIRCLE
        for b in sys.breaks_units:
            cuts.add((b - shift) % CIRCLE)
    for t in times:
        shift = (t * a) % CIRCLE
        for b in base_part.bounds[:-1].tolist():
            cuts.add((b - shift) % CIRCLE)
    eps = sorted(cuts)
    m = sys.fiber_size
    out: dict[tuple, float] = {}
    n = len(eps)
    steps_times = np.arange(t_max, dtype=np.uint64) if t_max else np.empty(0, dtype=np.uint64)
    for i, lo in enumerate(eps):
        hi = eps[i + 1] if i + 1 < n else eps[0] + CIRCLE
        length = hi - lo
        if length <= 0:
            continue
        mid = (lo + length // 2) % CIRCLE
        # cocycle partial sums S_t(mid) for each pattern time
        if t_max:
            orbit = sys.base.orbit_units(mid, steps_times)
            steps = sys.cocycle_at(orbit)
            csum = np.concatenate([[0], np.cumsum(steps)])
        else:
            csum = np.zeros(1, dtype=np.int64)
        base_labels = []
        fiber_sums = []
        for t in times:
            pos = (mid + t * a) % CIRCLE
            base_labels.append(int(base_part.atom_at(np.asarray([pos], dtype=np.uint64))[0]))
            fiber_sums.append(int(csum[t]) % m)
        weight = length / CIRCLE / m
        for j in range(m):
            label = tuple(
                (bl, fiber_part.atom_of_word((((j + fs) % m),)))
                for bl, fs in zip(base_labels, fiber_sums)
            )
            out[label] = out.get(label, 0.0) + weight
    return out


def joint_masses(sys, part, pattern: TimePattern, depth=None,
                 span_limit: int = DEFAULT_SPAN_LIMIT) -> dict:
    """{atom-label tuple: mass} for the join along the pattern.

    Zero-mass tuples never appear.  ``depth`` pins the sigma-depth of
    substitution counting (None = stabilized estimate).
    """
    _check_compat(sys, part)
    times = pattern.times
    if _is_window_partition(part):
        return _window_joint_masses(sys, part, times, depth, span_limit)
    if isinstance(part, IntervalPartition):
        return _rotation_joint_masses(sys, part, times)
    if isinstance(sys, ProductSystem):
        comp = [joint_masses(c, p, pattern, depth, span_limit)
                for c, p in zip(sys.components, part.components)]
        out: dict[tuple, float] = {}
        for combo in itertools.product(*(c.items() for c in comp)):
            mass = 1.0
            for _, m in combo:
                mass *= m
            label = tuple(zip(*(lab for lab, _ in combo)))
            out[label] = out.get(label, 0.0) + mass
        return out
    return _extension_joint_masses(sys, part, times)


def joint_distribution(sys, part, pattern: TimePattern, depth=None,
                       span_limit: int = DEFAULT_SPAN_LIMIT) -> JointDistribution:
    masses = joint_masses(sys, part, pattern, depth=depth, span_limit=span_limit)
    labels = sorted(masses)
    probs = [masses[l] for l in labels]
    return JointDistribution(pattern, ProbVector(tuple(probs), tuple(labels)))


def joint_entropy(sys, part, pattern: TimePattern, depth=None,
                  span_limit: int = DEFAULT_SPAN_LIMIT) -> float:
    """Entropy of the join along the pattern (nats); skips labeling."""
    return entropy_of(joint_masses(sys, part, pattern, depth=depth, span_limit=span_limit).values())


def partition_entropy(sys, part, span_limit: int = DEFAULT_SPAN_LIMIT) -> float:
    """Entropy of the atom-measure vector."""
    return joint_entropy(sys, part, TimePattern((0,)), span_limit=span_limit)


def atom_measures(sys, part, span_limit: int = DEFAULT_SPAN_LIMIT) -> ProbVector:
    """Single-time atom distribution with canonical labels."""
    jd = joint_distribution(sys, part, TimePattern((0,)), span_limit=span_limit)
    return ProbVector(jd.dist.probs, tuple(l[0] for l in jd.dist.labels))


# ---------------------------------------------------------------------------
# refinement


_REFINE_SPACE_CAP = 1 << 20


def refine(a, b, alphabet_size: int | None = None):
    """Common refinement a v b; result atoms are (atom of a, atom of b)
    pairs with empty pairs dropped at evaluation time."""
    if _is_window_partition(a) and _is_window_partition(b):
        if alphabet_size is None:
            sizes = [len(p.mapping) for p in (a, b) if isinstance(p, SymbolMapPartition)]
            sizes += [max(w) + 1 for p in (a, b) if isinstance(p, WindowFunctionPartition)
                      for w in p.mapping]
            if not sizes:
                raise ValidationError("refining two word partitions needs alphabet_size")
            alphabet_size = max(sizes)
        window = max(a.window, b.window)
        if alphabet_size ** window > _REFINE_SPACE_CAP:
            raise SpanError("refined window space too large")
        mapping = {}
        for word in itertools.product(range(alphabet_size), repeat=window):
            mapping[word] = (a.atom_of_word(word[: a.window]), b.atom_of_word(word[: b.window]))
        return WindowFunctionPartition(window, mapping)
    if isinstance(a, IntervalPartition) and isinstance(b, IntervalPartition):
        bounds = sorted(set(a.bounds[:-1].tolist()) | set(b.bounds[:-1].tolist()))
        arcs_by_pair: dict[tuple, list] = {}
        for i, lo in enumerate(bounds):
            hi = bounds[i + 1] if i + 1 < len(bounds) else CIRCLE
            mid = lo + (hi - lo) // 2
            pair = (
                int(a.atom_at(np.asarray([mid], dtype=np.uint64))[0]),
                int(b.atom_at(np.asarray([mid], dtype=np.uint64))[0]),
            )
            arcs_by_pair.setdefault(pair, []).append((lo / CIRCLE, hi / CIRCLE))
        pairs = sorted(arcs_by_pair)
        return IntervalPartition([arcs_by_pair[p] for p in pairs])
    if isinstance(a, ProductPartition) and isinstance(b, ProductPartition):
        if len(a.components) != len(b.components):
            raise KindError("product partition arity mismatch")
        return ProductPartition([refine(x, y, alphabet_size) for x, y in zip(a.components, b.components)])
    raise KindError(f"cannot refine {type(a).__name__} with {type(b).__name__}")


def refines(fine, coarse, alphabet_size: int | None = None, probe: int = 4096) -> bool:
    """True when every atom of ``coarse`` is a union of atoms of ``fine``.

    Window partitions are checked exactly over the window space; interval
    partitions exactly over boundary segments.
    """
    if _is_window_partition(fine) and _is_window_partition(coarse):
        if fine.window < coarse.window:
            return False
        if alphabet_size is None:
            raise ValidationError("refines() on word partitions needs alphabet_size")
        seen: dict = {}
        for word in itertools.product(range(alphabet_size), repeat=fine.window):
            fa = fine.atom_of_word(word[: fine.window])
            ca = coarse.atom_of_word(word[: coarse.window])
            if seen.setdefault(fa, ca) != ca:
                return False
        return True
    if isinstance(fine, IntervalPartition) and isinstance(coarse, IntervalPartition):
        seen = {}
        for i, lo in enumerate(fine.bounds[:-1].tolist()):
            hi = fine.bounds[i + 1]
            mid = lo + (int(hi) - lo) // 2
            fa = int(fine.segment_atoms[i])
            ca = int(coarse.atom_at(np.asarray([mid], dtype=np.uint64))[0])
            if seen.setdefault(fa, ca) != ca:
                return False
        # fine segments must not straddle coarse boundaries
        return set(coarse.bounds.tolist()) <= set(fine.bounds.tolist())
    raise KindError("refines() supports matching partition kinds only")


# ---------------------------------------------------------------------------
# orbit atom sequences


def orbit_atom_sequence(sys, part, x, n: int, span_limit: int = DEFAULT_SPAN_LIMIT) -> np.ndarray:
    """Atom index of T^k x for k = 0..n-1 (indices into `atoms(sys, part)`).

    Windows that never acquired positive estimated mass (possible for
    substitution estimates) are appended after the canonical atoms in
    deterministic sorted order.
    """
    _check_compat(sys, part)
    if _is_window_partition(part):
        window = part.window
        syms = point_symbols(sys, x, n + window - 1).astype(np.int64)
        s = sys.alphabet_size
        codes = syms[:n].copy()
        for o in range(1, window):
            codes = codes * s + syms[o : o + n]
        label_list = atoms(sys, part, span_limit)
        label_index = {lab: i for i, lab in enumerate(label_list)}

        def code_to_word(c):
            letters = []
            for _ in range(window):
                letters.append(int(c % s))
                c //= s
            return tuple(reversed(letters))

        uniq = np.unique(codes)
        lookup = {}
        unseen = []
        for c in uniq.tolist():
            lab = part.atom_of_word(code_to_word(c))
            if lab in label_index:
                lookup[c] = label_index[lab]
            else:
                unseen.append((lab, c))
        for j, (_, c) in enumerate(sorted(unseen)):
            lookup[c] = len(label_list) + j
        # vectorized translate via sorted unique codes
        uniq_sorted = np.asarray(sorted(lookup), dtype=np.int64)
        vals = np.asarray([lookup[c] for c in uniq_sorted.tolist()], dtype=np.int64)
        return vals[np.searchsorted(uniq_sorted, codes)]
    if isinstance(part, IntervalPartition):
        orbit = sys.orbit_units(x.units, np.arange(n, dtype=np.uint64))
        return part.atom_at(orbit)
    if isinstance(sys, ProductSystem):
        comp = [orbit_atom_sequence(c, p, xc, n, span_limit)
                for c, p, xc in zip(sys.components, part.components, x.components)]
        sizes = [atom_count(c, p, span_limit) + 1 for c, p in zip(sys.components, part.components)]
        out = np.zeros(n, dtype=np.int64)
        for arr, size in zip(comp, sizes):
            out = out * size + arr
        return out
    base_part, fiber_part = part.components
    orbit = sys.base.orbit_units(x.units, np.arange(n, dtype=np.uint64))
    base_idx = base_part.atom_at(orbit)
    fibers = sys.fiber_orbit(x, n)
    fiber_map = np.asarray([fiber_part.atom_of_word((j,)) for j in range(sys.fiber_size)], dtype=np.int64)
    fiber_labels = sorted(set(fiber_map.tolist()))
    fiber_index = {lab: i for i, lab in enumerate(fiber_labels)}
    fiber_idx = np.asarray([fiber_index[int(v)] for v in fiber_map[fibers]], dtype=np.int64)
    return base_idx * len(fiber_labels) + fiber_idx
