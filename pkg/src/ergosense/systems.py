"""Concrete measure-preserving systems behind uniform oracles.

Every system exposes: exact or stabilized word/cylinder frequencies
(symbolic kinds), a seeded point sampler, orbit iteration, and a metric.
Circle-based kinds (rotation, Sturmian coding, finite group extensions)
represent points as integers on the dyadic grid Z / 2**63, so rotation
orbits, arc measures and the rotation isometry are computed exactly in
integer arithmetic; only the final conversion to float rounds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import rng
from .errors import HorizonError, KindError, SamplingError, SpanError, ValidationError

CIRCLE_BITS = 63
CIRCLE = 1 << CIRCLE_BITS
_CIRCLE_MASK = np.uint64(CIRCLE - 1)

DEFAULT_SPAN_LIMIT = 4096

# Substitution word-frequency stabilization: successive sigma-depths m and
# m+2 must agree to this tolerance before an estimate is accepted.
SUBSTITUTION_TOL = 1e-7
_MAX_PREFIX_LEN = 1 << 25


def circle_units(x: float) -> int:
    """Quantize a point of [0, 1) onto the dyadic grid Z / 2**63."""
    u = int(round(float(x) * CIRCLE)) % CIRCLE
    return u


def circle_float(u: int) -> float:
    return u / CIRCLE


def check_irrational_surrogate(alpha: float, max_den: int = 1000, tol: float = 1e-12) -> None:
    """Reject rotation numbers within tol of a rational p/q, q <= max_den."""
    a = float(alpha)
    if not (0.0 < a < 1.0):
        raise ValidationError("rotation number must lie in (0, 1)")
    for q in range(1, max_den + 1):
        p = round(a * q)
        if abs(a - p / q) < tol:
            raise ValidationError(
                f"rotation number {a!r} is within {tol} of {p}/{q}; "
                "an irrational surrogate is required"
            )


# ---------------------------------------------------------------------------
# point handles


@dataclass(frozen=True)
class SymbolicPoint:
    """First ``len(symbols)`` coordinates of a symbolic point, plus the
    generator state needed to extend the sequence deterministically."""

    symbols: np.ndarray
    gen: tuple | None = None

    @property
    def horizon(self) -> int:
        return int(self.symbols.size)


@dataclass(frozen=True)
class CirclePoint:
    """A point of the circle in integer units (exact)."""

    units: int

    @property
    def value(self) -> float:
        return circle_float(self.units)


@dataclass(frozen=True)
class FiberedPoint:
    """Base circle point plus a finite fiber index."""

    units: int
    fiber: int


@dataclass(frozen=True)
class ProductPoint:
    components: tuple


# ---------------------------------------------------------------------------
# systems


class Bernoulli:
    """I.i.d. letters with a fixed distribution."""

    kind = "bernoulli"
    symbolic = True

    def __init__(self, probs: Sequence[float], seed: int = 0):
        p = tuple(float(x) for x in probs)
        if len(p) < 2:
            raise ValidationError("alphabet must have at least 2 letters")
        if any(x < 0 for x in p):
            raise ValidationError("letter probabilities must be non-negative")
        if abs(math.fsum(p) - 1.0) > 1e-9:
            raise ValidationError("letter probabilities must sum to 1")
        self.probs = p
        self.alphabet_size = len(p)
        self.seed = int(seed)
        self._cum = np.cumsum(p)[:-1]

    def describe(self) -> str:
        return f"bernoulli({','.join(f'{x:g}' for x in self.probs)})"


class Markov:
    """Stationary irreducible Markov chain over a finite alphabet."""

    kind = "markov"
    symbolic = True

    def __init__(self, transition, stationary=None, seed: int = 0):
        P = np.asarray(transition, dtype=float)
        if P.ndim != 2 or P.shape[0] != P.shape[1] or P.shape[0] < 2:
            raise ValidationError("transition matrix must be square, size >= 2")
        if np.any(P < 0):
            raise ValidationError("transition probabilities must be non-negative")
        rows = P.sum(axis=1)
        if np.max(np.abs(rows - 1.0)) > 1e-12:
            raise ValidationError("transition rows must sum to 1 within 1e-12")
        n = P.shape[0]
        reach = np.eye(n, dtype=bool) | (P > 0)
        closure = reach.copy()
        for _ in range(n):
            closure = closure | (closure @ reach)
        if not closure.all():
            raise ValidationError("transition matrix must be irreducible")
        if stationary is None:
            pi = self._solve_stationary(P)
        else:
            pi = np.asarray(stationary, dtype=float)
        if pi.shape != (n,) or np.any(pi <= 0):
            raise ValidationError("stationary vector must be positive")
        if np.max(np.abs(pi @ P - pi)) > 1e-10:
            raise ValidationError("stationary vector must satisfy pi P = pi within 1e-10")
        if abs(pi.sum() - 1.0) > 1e-10:
            raise ValidationError("stationary vector must sum to 1")
        self.transition = P
        self.stationary = pi
        self.alphabet_size = n
        self.seed = int(seed)
        self._cum_rows = np.cumsum(P, axis=1)[:, :-1]
        self._cum_pi = np.cumsum(pi)[:-1]
        self._power_cache: dict[int, np.ndarray] = {0: np.eye(n)}

    @staticmethod
    def _solve_stationary(P: np.ndarray) -> np.ndarray:
        n = P.shape[0]
        A = np.vstack([P.T - np.eye(n), np.ones((1, n))])
        b = np.zeros(n + 1)
        b[-1] = 1.0
        pi, *_ = np.linalg.lstsq(A, b, rcond=None)
        return pi

    def power(self, gap: int) -> np.ndarray:
        """P**gap, cached."""
        if gap not in self._power_cache:
            self._power_cache[gap] = self.power(gap - 1) @ self.transition
        return self._power_cache[gap]

    def describe(self) -> str:
        return f"markov({self.alphabet_size} states)"


class Substitution:
    """Primitive constant-alphabet substitution with its unique shift
    invariant measure, realized by counting in long prefixes of the
    fixed point starting from letter 0."""

    kind = "substitution"
    symbolic = True

    def __init__(self, rules: Sequence[Sequence[int]], seed: int = 0, tol: float = SUBSTITUTION_TOL):
        rules = tuple(tuple(int(a) for a in r) for r in rules)
        s = len(rules)
        if s < 2:
            raise ValidationError("alphabet must have at least 2 letters")
        for r in rules:
            if not r:
                raise ValidationError("substitution images must be non-empty")
            if any(a < 0 or a >= s for a in r):
                raise ValidationError("substitution image letter out of range")
        if rules[0][0] != 0:
            raise ValidationError(
                "the image of letter 0 must start with 0 so prefixes of the "
                "fixed point are nested (relabel the alphabet if needed)"
            )
        M = np.zeros((s, s), dtype=np.int64)
        for a, image in enumerate(rules):
            for b in image:
                M[a, b] += 1
        if not self._is_primitive(M):
            raise ValidationError("substitution matrix must be primitive")
        self.rules = rules
        self.matrix = M
        self.alphabet_size = s
        self.seed = int(seed)
        self.tol = float(tol)
        self._images = [np.asarray(r, dtype=np.int16) for r in rules]
        self._lengths = [len(r) for r in rules]
        self._word = np.asarray([0], dtype=np.int16)
        self._depth = 0
        # letter counts of sigma^m(0), kept as exact Python ints
        self._count_cache = [tuple(1 if a == 0 else 0 for a in range(s))]
        # stabilized pattern distributions, keyed (offsets, tol)
        self._pattern_cache: dict = {}

    @staticmethod
    def _is_primitive(M: np.ndarray) -> bool:
        n = M.shape[0]
        # Wielandt: primitive iff M**(n^2 - 2n + 2) is strictly positive
        target = n * n - 2 * n + 2
        acc = np.eye(n, dtype=bool)
        base = M > 0
        t = target
        while t:
            if t & 1:
                acc = (acc.astype(np.int8) @ base.astype(np.int8)) > 0
            base_next = (base.astype(np.int8) @ base.astype(np.int8)) > 0
            base = base_next
            t >>= 1
        return bool(acc.all())

    def _counts_at(self, depth: int) -> tuple:
        while len(self._count_cache) <= depth:
            prev = self._count_cache[-1]
            nxt = [0] * self.alphabet_size
            for a, c in enumerate(prev):
                if c:
                    for b in range(self.alphabet_size):
                        nxt[b] += c * int(self.matrix[a, b])
            self._count_cache.append(tuple(nxt))
        return self._count_cache[depth]

    def prefix_length(self, depth: int) -> int:
        """Exact length of sigma^depth(0)."""
        return sum(self._counts_at(depth))

    def depth_for_length(self, min_len: int) -> int:
        """Smallest depth whose prefix reaches min_len symbols.

        Scans from zero (length lookups are cached integers) so the
        answer never depends on how deep the word cache already is;
        sampling offsets derived from it stay reproducible.
        """
        d = 0
        while self.prefix_length(d) < min_len:
            d += 1
        return d

    def _apply_once(self, word: np.ndarray) -> np.ndarray:
        lens = set(self._lengths)
        if len(lens) == 1:
            q = lens.pop()
            table = np.vstack(self._images)
            return table[word].reshape(-1)
        lengths = np.asarray(self._lengths, dtype=np.int64)[word]
        total = int(lengths.sum())
        starts = np.concatenate([[0], np.cumsum(lengths)[:-1]])
        block = np.repeat(np.arange(word.size, dtype=np.int64), lengths)
        offs = np.arange(total, dtype=np.int64) - starts[block]
        flat = np.concatenate(self._images)
        img_start = np.concatenate([[0], np.cumsum(self._lengths)[:-1]])
        return flat[img_start[word[block]] + offs].astype(np.int16)

    def prefix(self, depth: int) -> np.ndarray:
        """sigma^depth(0) (a prefix of the one-sided fixed point)."""
        if self.prefix_length(depth) > _MAX_PREFIX_LEN:
            raise SpanError(
                f"substitution prefix at depth {depth} exceeds the "
                f"{_MAX_PREFIX_LEN}-symbol cap"
            )
        while self._depth < depth:
            self._word = self._apply_once(self._word)
            self._depth += 1
        return self._word[: self.prefix_length(depth)]

    def describe(self) -> str:
        body = ";".join("".join(str(a) for a in r) for r in self.rules)
        return f"substitution({body})"


def thue_morse(seed: int = 0) -> Substitution:
    """The Thue-Morse substitution 0 -> 01, 1 -> 10."""
    return Substitution(((0, 1), (1, 0)), seed=seed)


class Rotation:
    """Rotation of the circle by an irrational surrogate, on the dyadic
    integer grid (exact arithmetic)."""

    kind = "rotation"
    symbolic = False

    def __init__(self, alpha, seed: int = 0):
        a = float(alpha)
        check_irrational_surrogate(a)
        units = circle_units(a) | 1  # force an odd numerator: exact orbits never collide
        self.alpha_units = units
        self.alpha = circle_float(units)
        check_irrational_surrogate(self.alpha)
        self.seed = int(seed)

    def orbit_units(self, start: int, times: np.ndarray) -> np.ndarray:
        """(start + t * alpha) on the integer circle, exactly, vectorized.

        2**64 = 2 * 2**63 vanishes mod 2**63, so letting uint64 wrap and
        masking the low 63 bits gives the exact residue.
        """
        t = np.asarray(times, dtype=np.uint64)
        return (np.uint64(start) + t * np.uint64(self.alpha_units)) & _CIRCLE_MASK

    def step_units(self, start: int, t: int) -> int:
        return (start + t * self.alpha_units) % CIRCLE

    def describe(self) -> str:
        return f"rotation({self.alpha!r})"


class SturmianCoding(Rotation):
    """Two-letter coding of an irrational rotation: letter 0 on [0, cut),
    letter 1 on [cut, 1).  Symbolic, with exact arc-length cylinder
    measures."""

    kind = "sturmian"
    symbolic = True

    def __init__(self, alpha, cut, seed: int = 0):
        super().__init__(alpha, seed=seed)
        c = float(cut)
        if not (0.0 < c < 1.0):
            raise ValidationError("cut point must lie in (0, 1)")
        self.cut_units = circle_units(c)
        if self.cut_units in (0, CIRCLE):
            raise ValidationError("cut point quantized onto 0; choose another cut")
        self.cut = circle_float(self.cut_units)
        self.alphabet_size = 2

    def symbols_at(self, start: int, times: np.ndarray) -> np.ndarray:
        pos = self.orbit_units(start, times)
        return (pos >= np.uint64(self.cut_units)).astype(np.int16)

    def describe(self) -> str:
        return f"sturmian({self.alpha!r},{self.cut!r})"


class FiniteExtension:
    """Skew product over an irrational rotation with a finite cyclic
    fiber: (z, j) -> (z + alpha, j + c(z)) with c a step function on the
    circle into Z/m.  The invariant measure is arc length times uniform
    fiber mass."""

    kind = "finite_extension"
    symbolic = False

    def __init__(self, alpha, fiber_size: int, breakpoints, values, seed: int = 0):
        self.base = Rotation(alpha, seed=seed)
        m = int(fiber_size)
        if m < 2:
            raise ValidationError("fiber size must be >= 2")
        breaks = [circle_units(b) for b in breakpoints]
        vals = [int(v) % m for v in values]
        if len(breaks) != len(vals) or not breaks:
            raise ValidationError("cocycle needs matching breakpoints and values")
        if breaks[0] != 0:
            raise ValidationError("first cocycle breakpoint must be 0")
        if any(b2 <= b1 for b1, b2 in zip(breaks, breaks[1:])):
            raise ValidationError("cocycle breakpoints must be strictly increasing")
        self.fiber_size = m
        self.breaks_units = tuple(breaks)
        self.values = tuple(vals)
        self.seed = int(seed)
        self._breaks_arr = np.asarray(breaks, dtype=np.uint64)
        self._values_arr = np.asarray(vals, dtype=np.int64)
        self.alpha_units = self.base.alpha_units
        self.alpha = self.base.alpha

    def cocycle_at(self, units: np.ndarray) -> np.ndarray:
        idx = np.searchsorted(self._breaks_arr, np.asarray(units, dtype=np.uint64), side="right") - 1
        return self._values_arr[idx]

    def fiber_orbit(self, point: FiberedPoint, n: int) -> np.ndarray:
        """Fiber indices of T^k(point) for k = 0..n-1."""
        base_orbit = self.base.orbit_units(point.units, np.arange(n, dtype=np.uint64))
        steps = self.cocycle_at(base_orbit)
        sums = np.concatenate([[0], np.cumsum(steps[:-1])])
        return ((point.fiber + sums) % self.fiber_size).astype(np.int64)

    def cocycle_sum(self, start_units: int, t: int) -> int:
        if t == 0:
            return 0
        base_orbit = self.base.orbit_units(start_units, np.arange(t, dtype=np.uint64))
        return int(self.cocycle_at(base_orbit).sum()) % self.fiber_size

    def describe(self) -> str:
        return f"finite_extension({self.alpha!r}, m={self.fiber_size})"


class ProductSystem:
    """Direct product of systems with the product measure."""

    kind = "product"
    symbolic = False

    def __init__(self, components: Sequence, seed: int = 0):
        comps = tuple(components)
        if len(comps) < 2:
            raise ValidationError("a product needs at least 2 components")
        self.components = comps
        self.seed = int(seed)

    def describe(self) -> str:
        return "product(" + ",".join(c.describe() for c in self.components) + ")"


SystemSpec = Bernoulli | Markov | Substitution | SturmianCoding | Rotation | FiniteExtension | ProductSystem


def is_symbolic(sys) -> bool:
    return bool(getattr(sys, "symbolic", False))


# ---------------------------------------------------------------------------
# word / pattern frequencies


def _validate_word(sys, word) -> tuple:
    w = tuple(int(a) for a in word)
    if not w:
        raise ValidationError("word must be non-empty")
    if any(a < 0 or a >= sys.alphabet_size for a in w):
        raise ValidationError("word letter outside the alphabet")
    return w


def _markov_pattern_dfs(sys: Markov, positions, out, prefix, weight, idx):
    # weight already includes the occupation probability of prefix
    if weight <= 0.0:
        return
    if idx == len(positions):
        out[tuple(prefix)] = weight
        return
    if idx == 0:
        for a in range(sys.alphabet_size):
            p = sys.stationary[a]
            if p > 0:
                prefix.append(a)
                _markov_pattern_dfs(sys, positions, out, prefix, weight * p, idx + 1)
                prefix.pop()
        return
    gap = positions[idx] - positions[idx - 1]
    row = sys.power(gap)[prefix[-1]]
    for a in range(sys.alphabet_size):
        p = row[a]
        if p > 0:
            prefix.append(a)
            _markov_pattern_dfs(sys, positions, out, prefix, weight * p, idx + 1)
            prefix.pop()


def _bernoulli_pattern(sys: Bernoulli, positions) -> dict:
    out: dict[tuple, float] = {}
    support = [a for a, p in enumerate(sys.probs) if p > 0]

    def rec(idx, weight, prefix):
        if idx == len(positions):
            out[tuple(prefix)] = weight
            return
        for a in support:
            prefix.append(a)
            rec(idx + 1, weight * sys.probs[a], prefix)
            prefix.pop()

    rec(0, 1.0, [])
    return out


def _substitution_counts(word: np.ndarray, offsets, alphabet_size: int) -> dict:
    span = offsets[-1] + 1
    nwin = word.size - span + 1
    if nwin < 1:
        raise SpanError("substitution prefix shorter than the requested span")
    k = len(offsets)
    code = word[offsets[0] : offsets[0] + nwin].astype(np.int64)
    for o in offsets[1:]:
        code = code * alphabet_size + word[o : o + nwin]
    uniq, counts = np.unique(code, return_counts=True)
    out = {}
    for c, cnt in zip(uniq.tolist(), counts.tolist()):
        letters = []
        v = c
        for _ in range(k):
            letters.append(v % alphabet_size)
            v //= alphabet_size
        out[tuple(reversed(letters))] = cnt / nwin
    return out


def _substitution_pattern(sys: Substitution, positions, depth=None, tol=None) -> dict:
    offsets = [p - positions[0] for p in positions]
    span = offsets[-1] + 1
    if depth is not None:
        return _substitution_counts(sys.prefix(depth), offsets, sys.alphabet_size)
    tol = sys.tol if tol is None else float(tol)
    cache_key = (tuple(offsets), tol)
    hit = sys._pattern_cache.get(cache_key)
    if hit is not None:
        return hit
    need = max(16384, 64 * span)
    m = sys.depth_for_length(need)
    while True:
        if sys.prefix_length(m + 2) > _MAX_PREFIX_LEN:
            raise SamplingError(
                "substitution frequencies failed to stabilize within the "
                f"{_MAX_PREFIX_LEN}-symbol prefix cap (tol={tol})"
            )
        d1 = _substitution_counts(sys.prefix(m), offsets, sys.alphabet_size)
        d2 = _substitution_counts(sys.prefix(m + 2), offsets, sys.alphabet_size)
        keys = set(d1) | set(d2)
        diff = max(abs(d1.get(t, 0.0) - d2.get(t, 0.0)) for t in keys)
        if diff < tol:
            sys._pattern_cache[cache_key] = d2
            return d2
        m += 2


def _sturmian_pattern(sys: SturmianCoding, positions) -> dict:
    cellmaps = []
    for t in positions:
        shift = (t * sys.alpha_units) % CIRCLE
        cellmaps.append(shift)
    endpoints = set()
    for shift in cellmaps:
        endpoints.add((0 - shift) % CIRCLE)
        endpoints.add((sys.cut_units - shift) % CIRCLE)
    eps = sorted(endpoints)
    out: dict[tuple, float] = {}
    n = len(eps)
    for i, lo in enumerate(eps):
        hi = eps[(i + 1) % n] if i + 1 < n else eps[0] + CIRCLE
        length = hi - lo
        if length <= 0:
            continue
        mid = (lo + length // 2) % CIRCLE
        letters = tuple(
            0 if (mid + shift) % CIRCLE < sys.cut_units else 1 for shift in cellmaps
        )
        out[letters] = out.get(letters, 0.0) + length / CIRCLE
    return out


def pattern_letter_distribution(sys, positions: Sequence[int], depth=None, tol=None,
                                span_limit: int = DEFAULT_SPAN_LIMIT) -> dict:
    """Exact joint law of the letters at the given coordinates.

    Returns {letter tuple: probability} with zero-mass tuples omitted.
    For substitutions the law is the stabilized occurrence-count
    estimate at tolerance ``tol`` (system default when None), or a
    fixed sigma-depth estimate when ``depth`` is given.
    """
    if not is_symbolic(sys):
        raise KindError(f"{sys.kind} is not a symbolic system")
    pos = [int(p) for p in positions]
    if not pos or any(b <= a for a, b in zip(pos, pos[1:])) or pos[0] < 0:
        raise ValidationError("positions must be strictly increasing and non-negative")
    span = pos[-1] - pos[0] + 1
    if span > span_limit:
        raise SpanError(f"span {span} exceeds the limit {span_limit}")
    if isinstance(sys, Bernoulli):
        return _bernoulli_pattern(sys, pos)
    if isinstance(sys, Markov):
        out: dict[tuple, float] = {}
        _markov_pattern_dfs(sys, pos, out, [], 1.0, 0)
        return out
    if isinstance(sys, Substitution):
        return _substitution_pattern(sys, pos, depth=depth, tol=tol)
    if isinstance(sys, SturmianCoding):
        return _sturmian_pattern(sys, pos)
    raise KindError(f"unsupported symbolic kind {sys.kind}")


def word_frequency(sys, word, tol=None, span_limit: int = DEFAULT_SPAN_LIMIT) -> float:
    """Measure of the cylinder fixed by ``word`` at the origin.

    ``tol`` loosens the substitution stabilization rule for callers that
    only need bookkeeping precision (deep cylinder words cannot reach
    the default 1e-7 within the prefix cap).
    """
    w = _validate_word(sys, word)
    if len(w) > span_limit:
        raise SpanError(f"word length {len(w)} exceeds the span limit {span_limit}")
    if isinstance(sys, Bernoulli):
        out = 1.0
        for a in w:
            out *= sys.probs[a]
        return out
    if isinstance(sys, Markov):
        out = float(sys.stationary[w[0]])
        for a, b in zip(w, w[1:]):
            out *= sys.transition[a, b]
        return float(out)
    dist = pattern_letter_distribution(sys, range(len(w)), tol=tol, span_limit=span_limit)
    return dist.get(w, 0.0)


def factor_words(sys: Substitution, length: int) -> list:
    """Distinct length-``length`` windows of the fixed point, enumerated
    at a set-stabilized depth (the set must agree between depths m and
    m+2).  Much cheaper than frequency stabilization when only the
    positive-word set is needed."""
    m = sys.depth_for_length(max(4096, 64 * length))
    while True:
        if sys.prefix_length(m + 2) > _MAX_PREFIX_LEN:
            raise SamplingError("factor set failed to stabilize within the prefix cap")
        s1 = set(_substitution_counts(sys.prefix(m), list(range(length)), sys.alphabet_size))
        s2 = set(_substitution_counts(sys.prefix(m + 2), list(range(length)), sys.alphabet_size))
        if s1 == s2:
            return sorted(s2)
        m += 2


def positive_words(sys, length: int, span_limit: int = DEFAULT_SPAN_LIMIT) -> list:
    """All words of the given length with positive (estimated) frequency,
    in lexicographic order."""
    if isinstance(sys, Substitution):
        return factor_words(sys, length)
    dist = pattern_letter_distribution(sys, range(length), span_limit=span_limit)
    return sorted(dist)


# ---------------------------------------------------------------------------
# sampling, orbits, shifts


def sample_point(sys, seed: int, horizon: int = 1):
    """Draw a mu-distributed point, deterministically in (sys, seed).

    ``horizon`` is the number of symbolic coordinates realized up front;
    symbolic points extend on demand.
    """
    if horizon < 1:
        raise ValidationError("horizon must be >= 1")
    key = rng.derive_key(sys.seed, "sample", seed)
    if isinstance(sys, Bernoulli):
        u = rng.uniform_array(key, 0, horizon)
        symbols = np.searchsorted(sys._cum, u, side="right").astype(np.int16)
        return SymbolicPoint(symbols, gen=("iid", key, 0))
    if isinstance(sys, Markov):
        u = rng.uniform_array(key, 0, horizon).tolist()
        symbols = np.empty(horizon, dtype=np.int16)
        state = int(np.searchsorted(sys._cum_pi, u[0], side="right"))
        symbols[0] = state
        cum_rows = [row.tolist() for row in sys._cum_rows]
        for i in range(1, horizon):
            row = cum_rows[state]
            x = u[i]
            s = 0
            while s < len(row) and x >= row[s]:
                s += 1
            state = s
            symbols[i] = s
        return SymbolicPoint(symbols, gen=("markov", key, 0))
    if isinstance(sys, Substitution):
        depth = sys.depth_for_length(64 * horizon)
        plen = sys.prefix_length(depth)
        offset = min(int(rng.uniform(key, 0) * (plen - horizon + 1)), plen - horizon)
        word = sys.prefix(depth)
        return SymbolicPoint(word[offset : offset + horizon].copy(), gen=("offset", offset))
    if isinstance(sys, SturmianCoding) or isinstance(sys, Rotation):
        units = rng.u64(key, 0) >> 1
        return CirclePoint(units)
    if isinstance(sys, FiniteExtension):
        units = rng.u64(key, 0) >> 1
        fiber = min(int(rng.uniform(key, 1) * sys.fiber_size), sys.fiber_size - 1)
        return FiberedPoint(units, fiber)
    if isinstance(sys, ProductSystem):
        comps = tuple(
            sample_point(c, rng.derive_key(seed, "component", i), horizon)
            for i, c in enumerate(sys.components)
        )
        return ProductPoint(comps)
    raise KindError(f"cannot sample from kind {sys.kind}")


def point_symbols(sys, x, n: int) -> np.ndarray:
    """First n symbolic coordinates of x, extending deterministically."""
    if isinstance(sys, SturmianCoding):
        if not isinstance(x, CirclePoint):
            raise KindError("sturmian points are circle points")
        return sys.symbols_at(x.units, np.arange(n, dtype=np.uint64))
    if not is_symbolic(sys):
        raise KindError(f"{sys.kind} has no symbolic coordinates")
    if not isinstance(x, SymbolicPoint):
        raise KindError("expected a symbolic point")
    if x.horizon >= n:
        return x.symbols[:n]
    ext = extend_point(sys, x, n)
    return ext.symbols[:n]


def extend_point(sys, x: SymbolicPoint, n: int) -> SymbolicPoint:
    """Return a copy of x with horizon >= n (same underlying point)."""
    if x.horizon >= n:
        return x
    if x.gen is None:
        raise HorizonError(
            f"point horizon {x.horizon} < {n} and the point carries no generator state"
        )
    mode = x.gen[0]
    if mode == "iid":
        _, key, start = x.gen
        extra = rng.uniform_array(key, start + x.horizon, n - x.horizon)
        more = np.searchsorted(sys._cum, extra, side="right").astype(np.int16)
        return SymbolicPoint(np.concatenate([x.symbols, more]), gen=x.gen)
    if mode == "markov":
        _, key, start = x.gen
        u = rng.uniform_array(key, start + x.horizon, n - x.horizon).tolist()
        out = np.empty(n - x.horizon, dtype=np.int16)
        state = int(x.symbols[-1])
        cum_rows = [row.tolist() for row in sys._cum_rows]
        for i, ui in enumerate(u):
            row = cum_rows[state]
            s = 0
            while s < len(row) and ui >= row[s]:
                s += 1
            state = s
            out[i] = s
        return SymbolicPoint(np.concatenate([x.symbols, out]), gen=x.gen)
    if mode == "offset":
        (_, offset) = x.gen
        depth = sys.depth_for_length(offset + n)
        word = sys.prefix(depth)
        return SymbolicPoint(word[offset : offset + n].copy(), gen=x.gen)
    raise HorizonError(f"unknown generator state {mode!r}")


def apply_shift(sys, x, t: int):
    """The point T^t x."""
    if t < 0:
        raise ValidationError("only forward shifts are supported")
    if t == 0:
        return x
    if isinstance(sys, SturmianCoding):
        return CirclePoint(sys.step_units(x.units, t))
    if isinstance(sys, (Bernoulli, Markov, Substitution)):
        x = extend_point(sys, x, t + 1)
        if x.gen is not None and x.gen[0] in ("iid", "markov"):
            mode, key, start = x.gen
            gen = (mode, key, start + t)
        elif x.gen is not None and x.gen[0] == "offset":
            gen = ("offset", x.gen[1] + t)
        else:
            gen = None
        return SymbolicPoint(x.symbols[t:].copy(), gen=gen)
    if isinstance(sys, Rotation):
        return CirclePoint(sys.step_units(x.units, t))
    if isinstance(sys, FiniteExtension):
        delta = sys.cocycle_sum(x.units, t)
        return FiberedPoint(sys.base.step_units(x.units, t), (x.fiber + delta) % sys.fiber_size)
    if isinstance(sys, ProductSystem):
        return ProductPoint(tuple(apply_shift(c, p, t) for c, p in zip(sys.components, x.components)))
    raise KindError(f"cannot shift kind {sys.kind}")


def points_distinct(sys, x, y, resolution: int = 64) -> bool:
    """Distinctness check: exact for circle kinds, first ``resolution``
    coordinates for symbolic ones."""
    if isinstance(sys, (Rotation, SturmianCoding)) and isinstance(x, CirclePoint):
        return x.units != y.units
    if isinstance(sys, FiniteExtension):
        return (x.units, x.fiber) != (y.units, y.fiber)
    if isinstance(sys, ProductSystem):
        return any(points_distinct(c, a, b, resolution) for c, a, b in zip(sys.components, x.components, y.components))
    ax = point_symbols(sys, x, resolution)
    ay = point_symbols(sys, y, resolution)
    return bool(np.any(ax != ay))


# ---------------------------------------------------------------------------
# metric


def arc_distance_units(a: int, b: int) -> int:
    d = (a - b) % CIRCLE
    return min(d, CIRCLE - d)


def metric_distance_info(sys, x, y, horizon: int = 4096):
    """(distance, resolved).  Symbolic kinds use 2**-(first difference);
    when the prefixes agree over the whole horizon the true distance is
    below 2**-horizon and the value is returned with resolved=False."""
    if isinstance(sys, Rotation) and not isinstance(sys, SturmianCoding):
        return arc_distance_units(x.units, y.units) / CIRCLE, True
    if isinstance(sys, FiniteExtension):
        base = arc_distance_units(x.units, y.units) / CIRCLE
        return base + (0.0 if x.fiber == y.fiber else 1.0), True
    if isinstance(sys, ProductSystem):
        pairs = [metric_distance_info(c, a, b, horizon) for c, a, b in zip(sys.components, x.components, y.components)]
        return max(d for d, _ in pairs), all(r for _, r in pairs)
    if is_symbolic(sys):
        ax = point_symbols(sys, x, horizon)
        ay = point_symbols(sys, y, horizon)
        diffs = np.nonzero(ax != ay)[0]
        if diffs.size == 0:
            return 2.0 ** (-horizon), False
        return 2.0 ** (-int(diffs[0])), True
    raise KindError(f"no metric for kind {sys.kind}")


def metric_distance(sys, x, y, horizon: int = 4096) -> float:
    return metric_distance_info(sys, x, y, horizon)[0]


def orbit_pair_distances(sys, x, y, n: int, pad: int = 64) -> np.ndarray:
    """d(T^k x, T^k y) for k = 0..n-1, vectorized per kind.

    Symbolic kinds resolve first differences up to ``pad`` coordinates
    past the window; unresolved tails use the 2**-(remaining horizon)
    upper bound.
    """
    if isinstance(sys, Rotation) and not isinstance(sys, SturmianCoding):
        d = arc_distance_units(x.units, y.units) / CIRCLE
        return np.full(n, d)
    if isinstance(sys, FiniteExtension):
        base = arc_distance_units(x.units, y.units) / CIRCLE
        fx = sys.fiber_orbit(x, n)
        fy = sys.fiber_orbit(y, n)
        return base + (fx != fy).astype(float)
    if isinstance(sys, ProductSystem):
        comps = [orbit_pair_distances(c, a, b, n, pad) for c, a, b in zip(sys.components, x.components, y.components)]
        return np.max(np.vstack(comps), axis=0)
    if is_symbolic(sys):
        h = n + pad
        ax = point_symbols(sys, x, h).astype(np.int64)
        ay = point_symbols(sys, y, h).astype(np.int64)
        diffs = np.nonzero(ax != ay)[0]
        ks = np.arange(n, dtype=np.int64)
        if diffs.size == 0:
            return np.exp2(-(h - ks).astype(float))
        idx = np.searchsorted(diffs, ks, side="left")
        nxt = np.where(idx < diffs.size, diffs[np.minimum(idx, diffs.size - 1)], h)
        return np.exp2(-(nxt - ks).astype(float))
    raise KindError(f"no metric for kind {sys.kind}")
