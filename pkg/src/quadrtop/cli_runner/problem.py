"""Problem specs: JSON/TOML parsing into exact quadratic maps and cones."""

from __future__ import annotations

import json
import logging
import sys
from dataclasses import dataclass, field
from functools import cached_property
from fractions import Fraction
from pathlib import Path

from ..omega_geometry.cone import PolyhedralCone, cone_from_spec
from ..quad_core import QuadraticForm, QuadraticMap, to_fraction

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

log = logging.getLogger(__name__)

DEFAULT_OPTIONS = {"mesh_depth": 2, "max_extra_depth": 3, "gap_floor": 1e-8, "seed": 0}


class SchemaError(ValueError):
    """Input does not follow the problem schema."""


@dataclass
class ProblemSpec:
    n: int
    k: int
    forms: list[QuadraticForm]
    cone: str | list = "zero"
    options: dict = field(default_factory=dict)
    name: str = ""

    def __post_init__(self):
        if len(self.forms) != self.k + 1:
            raise SchemaError(f"expected k+1 = {self.k + 1} forms, got {len(self.forms)}")
        for t, f in enumerate(self.forms):
            if f.dim != self.n + 1:
                raise SchemaError(f"form {t} is {f.dim}x{f.dim}, expected {self.n + 1}x{self.n + 1}")
        self.options = {**DEFAULT_OPTIONS, **self.options}

    @cached_property
    def qmap(self) -> QuadraticMap:
        return QuadraticMap(tuple(self.forms), dim=self.n + 1)

    @property
    def K(self) -> PolyhedralCone:
        return cone_from_spec(self.cone, self.k + 1)

    def to_json(self) -> dict:
        if self.cone in ("zero", "orthant"):
            cone = {"type": self.cone}
        else:
            cone = {"type": "generators", "rays": [[str(Fraction(x)) for x in r] for r in self.cone]}
        return {
            "name": self.name,
            "n": self.n,
            "k": self.k,
            "forms": [f.upper_triangle() for f in self.forms],
            "cone": cone,
            "options": dict(sorted(self.options.items())),
        }


def _form_from_json(raw, dim: int, index: int) -> QuadraticForm:
    if raw and isinstance(raw[0], (list, tuple)):
        rows = [[to_fraction(x) for x in r] for r in raw]
        if len(rows) != dim or any(len(r) != dim for r in rows):
            raise SchemaError(f"form {index} must be {dim}x{dim}")
        for i in range(dim):
            for j in range(i + 1, dim):
                if rows[i][j] != rows[j][i]:
                    raise SchemaError(f"form {index} is not symmetric at entry ({i},{j}): {rows[i][j]} != {rows[j][i]}")
        return QuadraticForm.from_matrix(rows)
    if len(raw) != dim * (dim + 1) // 2:
        raise SchemaError(f"form {index} needs {dim * (dim + 1) // 2} upper-triangle entries, got {len(raw)}")
    return QuadraticForm.from_upper_triangle(raw, dim)


def _cone_from_json(raw) -> str | list:
    if raw is None:
        return "zero"
    if isinstance(raw, str):
        raw = {"type": raw}
    kind = raw.get("type")
    if kind in ("zero", "orthant"):
        return kind
    if kind == "generators":
        rays = raw.get("rays", [])
        return [[to_fraction(x) for x in r] for r in rays] if rays else "zero"
    raise SchemaError(f"unknown cone type {kind!r}")


def problem_from_dict(data: dict, name: str = "") -> ProblemSpec:
    try:
        n, k = int(data["n"]), int(data["k"])
        forms_raw = data["forms"]
    except KeyError as exc:
        raise SchemaError(f"missing field {exc.args[0]!r}") from None
    if len(forms_raw) != k + 1:
        raise SchemaError(f"expected k+1 = {k + 1} forms, got {len(forms_raw)}")
    forms = [_form_from_json(f, n + 1, t) for t, f in enumerate(forms_raw)]
    cone = _cone_from_json(data.get("cone"))
    if isinstance(cone, list) and any(len(r) != k + 1 for r in cone):
        raise SchemaError(f"cone rays must have k+1 = {k + 1} coordinates")
    options = dict(data.get("options", {}))
    unknown = set(options) - set(DEFAULT_OPTIONS)
    if unknown:
        raise SchemaError(f"unknown options {sorted(unknown)}")
    return ProblemSpec(n, k, forms, cone, options, data.get("name", name))


def parse_problem(source: str | Path) -> ProblemSpec:
    """Read a problem from a JSON or TOML file, or from literal JSON/TOML text."""
    literal = isinstance(source, str) and ("\n" in source or source.lstrip().startswith("{"))
    if literal:
        text, name = source, ""
        is_toml = not source.lstrip().startswith("{")
    else:
        path = Path(source)
        text, name = path.read_text(), path.stem
        is_toml = path.suffix == ".toml"
    try:
        data = tomllib.loads(text) if is_toml else json.loads(text)
    except (json.JSONDecodeError, tomllib.TOMLDecodeError) as exc:
        raise SchemaError(f"cannot parse problem: {exc}") from None
    return problem_from_dict(data, name)


def quadric_problem(a: int, b: int, n: int) -> ProblemSpec:
    """Single form x_0^2 + ... + x_{a-1}^2 - x_a^2 - ... - x_{a+b-1}^2 in n+1 variables."""
    if a < 0 or b < 0 or a + b > n + 1:
        raise SchemaError(f"signature ({a},{b}) does not fit in {n + 1} variables")
    diag = [1] * a + [-1] * b + [0] * (n + 1 - a - b)
    return ProblemSpec(n, 0, [QuadraticForm.diagonal(diag)], "zero", {}, f"quadric_{a}_{b}_{n}")
