"""Probability vectors, entropy, integer-set densities, and two
quantitative entropy bounds used throughout the toolkit.

All entropies are in nats (natural log); callers that want bits rescale
on output.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ValidationError

PROB_TOL = 1e-9


def _entropy_terms(masses) -> float:
    # 0 * log 0 = 0 by explicit branch, never by float limits
    total = 0.0
    for m in masses:
        if m > 0.0:
            total -= m * math.log(m)
    return total


@dataclass(frozen=True)
class ProbVector:
    """A finite probability distribution over labeled outcomes."""

    probs: tuple
    labels: tuple

    def __post_init__(self):
        probs = tuple(float(p) for p in self.probs)
        labels = tuple(self.labels)
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "labels", labels)
        if len(probs) != len(labels):
            raise ValidationError("probs and labels must have equal length")
        if len(probs) == 0:
            raise ValidationError("empty distribution")
        if any(p < 0.0 for p in probs):
            raise ValidationError("negative probability entry")
        s = math.fsum(probs)
        if abs(s - 1.0) > PROB_TOL:
            raise ValidationError(f"probabilities sum to {s!r}, not 1 within {PROB_TOL}")
        if len(set(labels)) != len(labels):
            raise ValidationError("labels must be pairwise distinct")

    @classmethod
    def from_masses(cls, masses: Sequence[float], labels=None) -> "ProbVector":
        if labels is None:
            labels = tuple(range(len(masses)))
        return cls(tuple(masses), tuple(labels))

    def entropy(self) -> float:
        return _entropy_terms(self.probs)


def shannon_entropy(p: ProbVector) -> float:
    """Entropy -sum p_i log p_i in nats; always in [0, log len(p)]."""
    return p.entropy()


def entropy_of(masses) -> float:
    """Entropy of a bare non-negative mass sequence (no validation).

    Convenience for internal callers that already hold a normalized
    vector and do not need labels.
    """
    return _entropy_terms(masses)


@dataclass(frozen=True)
class FiniteTimeSet:
    """A finite set of non-negative integer times inside a window [0, N)."""

    times: np.ndarray
    window: int

    def __post_init__(self):
        times = np.asarray(self.times, dtype=np.int64)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "window", int(self.window))
        if times.ndim != 1:
            raise ValidationError("times must be one-dimensional")
        if times.size:
            if times[0] < 0:
                raise ValidationError("times must be >= 0")
            if np.any(np.diff(times) <= 0):
                raise ValidationError("times must be strictly increasing")
            if times[-1] >= self.window:
                raise ValidationError("all times must be < window")
        if self.window <= 0:
            raise ValidationError("window must be positive")

    def __len__(self):
        return int(self.times.size)


@dataclass(frozen=True)
class DensityEstimate:
    """Window densities of a finite time set plus liminf/limsup proxies.

    The proxies are taken over the suffix half of the checkpoint
    windows; they are estimates of the lower/upper density, never the
    true limits (finite data cannot realize those).
    """

    window_densities: tuple  # ((N_1, d_1), ..., (N_m, d_m))
    lower_proxy: float
    upper_proxy: float

    def __post_init__(self):
        if self.lower_proxy > self.upper_proxy + 1e-15:
            raise ValidationError("lower_proxy must be <= upper_proxy")
        for n, d in self.window_densities:
            if not (0.0 <= d <= 1.0):
                raise ValidationError(f"window density {d} outside [0,1] at N={n}")

    @property
    def gap(self) -> float:
        """Spread between the upper and lower proxies."""
        return self.upper_proxy - self.lower_proxy


def density_estimate(f: FiniteTimeSet, checkpoints: Sequence[int]) -> DensityEstimate:
    """Count densities #(F cap [0,N))/N at each checkpoint window.

    The liminf proxy is the minimum, and the limsup proxy the maximum,
    over the last half of the checkpoint list.
    """
    cps = [int(c) for c in checkpoints]
    if not cps:
        raise ValidationError("checkpoints must be non-empty")
    if any(b <= a for a, b in zip(cps, cps[1:])):
        raise ValidationError("checkpoints must be strictly increasing")
    if cps[0] <= 0:
        raise ValidationError("checkpoints must be positive")
    if cps[-1] > f.window:
        raise ValidationError("checkpoints must not exceed the time-set window")
    counts = np.searchsorted(f.times, np.asarray(cps, dtype=np.int64), side="left")
    dens = [(n, int(c) / n) for n, c in zip(cps, counts)]
    suffix = dens[len(dens) // 2 :]
    lower = min(d for _, d in suffix)
    upper = max(d for _, d in suffix)
    return DensityEstimate(tuple(dens), lower, upper)


def standard_checkpoints(n: int) -> tuple:
    """The default checkpoint ladder {N/8, N/4, N/2, N} (deduplicated)."""
    ladder = sorted({max(1, n // 8), max(1, n // 4), max(1, n // 2), n})
    return tuple(ladder)


def uniformity_bound(k: int, eps: float) -> float:
    """Entropy gap forcing near-uniformity of a k-atom distribution.

    Returns lambda > 0 such that any distribution q on k outcomes with
    H(q) > log k - lambda has every coordinate within eps of 1/k.  The
    value is log k minus the maximal entropy over distributions with one
    coordinate at distance exactly eps from 1/k and the rest uniform on
    the remainder; concavity of H makes this family extremal (confirmed
    for small k by `offuniform_entropy_grid_max`).
    """
    if k < 2:
        raise ValidationError("k must be >= 2")
    eps = float(eps)
    if not (0.0 < eps <= 1.0 - 1.0 / k):
        # eps = 1 - 1/k is the boundary case: the perturbed coordinate
        # reaches 1 and the off-uniform entropy collapses to 0.
        raise ValidationError(f"eps must lie in (0, 1 - 1/k] = (0, {1.0 - 1.0 / k}]")
    best = 0.0
    for signed in (eps, -eps):
        head = 1.0 / k + signed
        if head < -1e-15 or head > 1.0 + 1e-15:
            continue
        head = min(max(head, 0.0), 1.0)
        rest = (1.0 - head) / (k - 1)
        h = _entropy_terms([head] + [rest] * (k - 1))
        best = max(best, h)
    lam = math.log(k) - best
    if lam <= 0.0:
        raise ValidationError("degenerate uniformity bound")  # unreachable for valid eps
    return lam


def offuniform_entropy_grid_max(k: int, eps: float, resolution: int = 60) -> float:
    """Max entropy over grid distributions with some |q_i - 1/k| >= eps.

    Brute-force check of the extremal family behind `uniformity_bound`:
    the returned value can never exceed log k - uniformity_bound(k, eps)
    by more than float noise.  Exponential in k; intended for k <= 4.
    """
    if k > 5:
        raise ValidationError("grid confirmation supported for k <= 5 only")
    best = 0.0
    target = 1.0 / k
    for comp in itertools.combinations(range(resolution + k - 1), k - 1):
        parts = []
        prev = -1
        for c in comp:
            parts.append(c - prev - 1)
            prev = c
        parts.append(resolution + k - 2 - prev)
        q = [p / resolution for p in parts]
        if max(abs(x - target) for x in q) >= eps:
            best = max(best, _entropy_terms(q))
    return best


@dataclass(frozen=True)
class BestIntersection:
    """Result of the best k-fold intersection search."""

    indices: tuple
    measure: float
    exact: bool


def best_k_intersection(
    sets: Sequence[np.ndarray],
    k: int,
    weights: np.ndarray | None = None,
    exhaustive_limit: int = 20,
    beam_width: int = 64,
) -> BestIntersection:
    """Find k of the given sets whose intersection has maximal measure.

    ``sets`` are boolean masks over a common finite space; ``weights``
    are point masses (uniform if omitted).  Exhaustive for up to
    ``exhaustive_limit`` sets, greedy beam search beyond (flagged
    non-exact).  Ties break to the lexicographically smallest index
    tuple.
    """
    n = len(sets)
    if k < 1:
        raise ValidationError("k must be >= 1")
    if k > n:
        raise ValidationError(f"k={k} exceeds number of sets {n}")
    masks = [np.asarray(s, dtype=bool) for s in sets]
    space = masks[0].shape[0]
    for m in masks:
        if m.shape != (space,):
            raise ValidationError("all sets must be masks over the same space")
    if weights is None:
        w = np.full(space, 1.0 / space)
    else:
        w = np.asarray(weights, dtype=float)
        if w.shape != (space,):
            raise ValidationError("weights must match the space size")

    def measure(mask):
        return float(w[mask].sum())

    if n <= exhaustive_limit:
        best_idx, best_val = None, -1.0
        # DFS over index combinations, reusing prefix intersections
        stack = [((), np.ones(space, dtype=bool), 0)]
        while stack:
            prefix, mask, start = stack.pop()
            if len(prefix) == k:
                val = measure(mask)
                if val > best_val:
                    best_val, best_idx = val, prefix
                continue
            remaining = k - len(prefix)
            # push in reverse so lexicographically smaller branches pop first
            for i in range(n - remaining, start - 1, -1):
                stack.append((prefix + (i,), mask & masks[i], i + 1))
        return BestIntersection(best_idx, best_val, True)

    # Greedy beam: extend partial index tuples, keep the top beam by measure.
    beam = [((), np.ones(space, dtype=bool), 1.0)]
    for depth in range(k):
        candidates = []
        for prefix, mask, _ in beam:
            start = prefix[-1] + 1 if prefix else 0
            for i in range(start, n - (k - depth - 1)):
                nm = mask & masks[i]
                candidates.append((prefix + (i,), nm, measure(nm)))
        candidates.sort(key=lambda t: (-t[2], t[0]))
        beam = candidates[:beam_width]
    best = beam[0]
    return BestIntersection(best[0], best[2], False)
