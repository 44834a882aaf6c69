"""Experiment configuration: a single YAML file with nested tables.

Rotation numbers and other circle coordinates may be given as decimal
strings; they are parsed to full double precision before being
quantized onto the integer circle grid.  Every stochastic command
requires a seed (in the file or on the command line).
"""

from __future__ import annotations

from pathlib import Path

import yaml

from .errors import ValidationError
from .partitions import (
    IntervalPartition,
    ProductPartition,
    SymbolMapPartition,
    WordPartition,
    fiber_partition,
    trivial_partition,
)
from .sensitivity import Arc, Cylinder, FullSpace, default_target_family
from .systems import (
    Bernoulli,
    FiniteExtension,
    Markov,
    ProductSystem,
    Rotation,
    SturmianCoding,
    Substitution,
)


def load_config(path) -> dict:
    text = Path(path).read_text()
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ValidationError(f"config parse error in {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ValidationError(f"config {path} must be a mapping")
    return data


def _num(value, field: str) -> float:
    """Accept floats or decimal strings (full double precision)."""
    try:
        return float(value)
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"{field}: expected a number, got {value!r}") from exc


def _require(d: dict, key: str, field: str):
    if key not in d:
        raise ValidationError(f"{field}.{key}: missing required field")
    return d[key]


def _parse_rules(raw, field: str):
    rules = []
    for i, image in enumerate(raw):
        if isinstance(image, str):
            rules.append(tuple(int(ch) for ch in image))
        else:
            rules.append(tuple(int(a) for a in image))
        if not rules[-1]:
            raise ValidationError(f"{field}[{i}]: empty substitution image")
    return tuple(rules)


def system_from_config(d: dict, field: str = "system"):
    if not isinstance(d, dict):
        raise ValidationError(f"{field}: expected a mapping")
    kind = _require(d, "kind", field)
    seed = int(d.get("seed", 0))
    try:
        if kind == "bernoulli":
            return Bernoulli(_require(d, "probs", field), seed=seed)
        if kind == "markov":
            return Markov(_require(d, "transition", field), d.get("stationary"), seed=seed)
        if kind == "substitution":
            return Substitution(_parse_rules(_require(d, "rules", field), f"{field}.rules"),
                                seed=seed, tol=float(d.get("tol", 1e-7)))
        if kind == "rotation":
            return Rotation(_num(_require(d, "alpha", field), f"{field}.alpha"), seed=seed)
        if kind == "sturmian":
            return SturmianCoding(_num(_require(d, "alpha", field), f"{field}.alpha"),
                                  _num(_require(d, "cut", field), f"{field}.cut"), seed=seed)
        if kind == "finite_extension":
            return FiniteExtension(
                _num(_require(d, "alpha", field), f"{field}.alpha"),
                int(_require(d, "fiber_size", field)),
                [_num(b, f"{field}.breakpoints") for b in _require(d, "breakpoints", field)],
                [int(v) for v in _require(d, "values", field)],
                seed=seed,
            )
        if kind == "product":
            comps = [system_from_config(c, f"{field}.components[{i}]")
                     for i, c in enumerate(_require(d, "components", field))]
            return ProductSystem(comps, seed=seed)
    except ValidationError as exc:
        raise ValidationError(f"{field}: {exc}") from exc
    raise ValidationError(f"{field}.kind: unknown system kind {kind!r}")


def partition_from_config(d: dict, sys, field: str = "partition"):
    if not isinstance(d, dict):
        raise ValidationError(f"{field}: expected a mapping")
    kind = _require(d, "kind", field)
    if kind == "word":
        return WordPartition(int(_require(d, "length", field)))
    if kind == "symbol_map":
        return SymbolMapPartition([int(v) for v in _require(d, "map", field)])
    if kind == "interval":
        atoms = []
        for arcs in _require(d, "atoms", field):
            atoms.append([(_num(lo, f"{field}.atoms"), _num(hi, f"{field}.atoms"))
                          for lo, hi in arcs])
        return IntervalPartition(atoms)
    if kind == "product":
        comps = [partition_from_config(c, None, f"{field}.components[{i}]")
                 for i, c in enumerate(_require(d, "components", field))]
        return ProductPartition(comps)
    if kind == "fiber":
        if not isinstance(sys, FiniteExtension):
            raise ValidationError(f"{field}: fiber partitions need a finite_extension system")
        return fiber_partition(sys)
    if kind == "trivial":
        return trivial_partition(sys)
    raise ValidationError(f"{field}.kind: unknown partition kind {kind!r}")


def targets_from_config(run: dict, sys, seed: int):
    raw = run.get("targets")
    if raw is None:
        depths = run.get("family_depths", list(range(1, 11)))
        return default_target_family(sys, depths=[int(x) for x in depths], seed=seed)
    out = []
    for i, t in enumerate(raw):
        field = f"run.targets[{i}]"
        kind = _require(t, "kind", field)
        if kind == "full":
            out.append(FullSpace())
        elif kind == "cylinder":
            word = t.get("word")
            if isinstance(word, str):
                word = tuple(int(ch) for ch in word)
            out.append(Cylinder(tuple(int(a) for a in word), int(t.get("position", 0))))
        elif kind == "arc":
            out.append(Arc(_num(_require(t, "lo", field), field),
                           _num(_require(t, "hi", field), field)))
        else:
            raise ValidationError(f"{field}.kind: unknown target kind {kind!r}")
    return out
