"""Scenario documents: JSON files that fix an algebra, a split, a representation,
fields, a Lagrangian and sampling settings for the checks."""

import hashlib
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional

import numpy as np

from .connections import ConnectionOnSigma, ConnectionOnX, Section, f_labels
from .coset import CosetChart
from .errors import CosetGaugeError, ScenarioParseError, ValidationError
from .expr import ZERO, ExprArray, FieldExprError, parse
from .invariance import FACTORED, RAW, MatterLagrangian
from .lie import (
    BUILTIN_ALGEBRAS,
    HRepresentation,
    LieAlgebraData,
    ReductiveSplit,
    algebra_from_matrices,
    check_reductive,
)

DEFAULT_TOLERANCES = {
    "reductive": 1e-12,
    "theorem1": 1e-5,
    "theorem4": 1e-6,
    "invariance": 1e-5,
    "theorem6": 1e-5,
    "affinity": 1e-9,
    "control": 1e-2,
    "detection": 1e-3,
}
GAUGE_FAMILIES = ("constant", "constant_h", "affine", "affine_sin")
BUILTIN_SCENARIOS = ("so3_so2", "su2_u1", "so3_so2_raw", "so3_bad_split", "abelian")


def canonical_json(data) -> str:
    return json.dumps(data, sort_keys=True, separators=(",", ":"), ensure_ascii=False, allow_nan=False)


def scenario_hash(data) -> str:
    return hashlib.sha256(canonical_json(data).encode("utf-8")).hexdigest()


@dataclass(frozen=True, eq=False)
class Scenario:
    name: str
    data: dict
    hash: str
    alg: LieAlgebraData
    split: ReductiveSplit
    rep: Optional[HRepresentation]
    chart: Optional[CosetChart]
    base_dim: int
    fibre_dim: int
    conn_x: Optional[ConnectionOnX] = None
    conn_sigma: Optional[ConnectionOnSigma] = None
    higgs: Optional[Section] = None
    matter: Optional[Section] = None
    lagrangian: Optional[MatterLagrangian] = None
    gauge_family: dict = field(default_factory=dict)
    domain: np.ndarray = None  # (D, 2)
    sigma_radius: float = 1.0
    tolerances: dict = field(default_factory=dict)
    seed: int = 0

    @property
    def n(self) -> int:
        return self.alg.dim


def _require(data, key, kind, where="scenario"):
    if key not in data:
        raise ValidationError(f"{where}: missing required key {key!r}")
    value = data[key]
    if not isinstance(value, kind):
        raise ValidationError(f"{where}: {key!r} must be {getattr(kind, '__name__', kind)}")
    return value


def _int(value, where):
    if isinstance(value, bool) or not isinstance(value, int):
        raise ValidationError(f"{where} must be an integer, got {value!r}")
    return value


def _matrix_stack(value, where):
    try:
        arr = np.asarray(value, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"{where}: not a numeric array ({exc})") from None
    if arr.ndim != 3 or arr.shape[1] != arr.shape[2]:
        raise ValidationError(f"{where}: expected a list of square matrices, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{where}: non-finite entries")
    return arr


def _algebra(block) -> LieAlgebraData:
    if isinstance(block, str):
        block = {"builtin": block}
    if not isinstance(block, dict):
        raise ValidationError("algebra must be a built-in name or an object")
    if "builtin" in block:
        name = block["builtin"]
        if name not in BUILTIN_ALGEBRAS:
            raise ValidationError(f"unknown built-in algebra {name!r}; known: {sorted(BUILTIN_ALGEBRAS)}")
        return BUILTIN_ALGEBRAS[name]()
    mats = _matrix_stack(_require(block, "matrices", list, "algebra"), "algebra.matrices")
    labels = tuple(block.get("labels", ())) or tuple(f"e{p + 1}" for p in range(mats.shape[0]))
    return algebra_from_matrices(mats, labels=labels, name=block.get("name", "custom"))


def _expr(text, variables, where):
    if not isinstance(text, str):
        raise ValidationError(f"{where}: expression must be a string")
    try:
        return parse(text, variables)
    except FieldExprError as exc:
        raise ScenarioParseError(f"{where}: {exc}") from None


def _index_key(key, arity, where):
    try:
        parts = tuple(int(p) for p in str(key).split(","))
    except ValueError:
        raise ValidationError(f"{where}: bad index key {key!r}") from None
    if len(parts) != arity:
        raise ValidationError(f"{where}: index key {key!r} needs {arity} comma-separated entries")
    return parts


def _expr_array(block, shape, axes, variables, where):
    """``block`` maps 1-based keys like ``"p,l"`` to expressions. ``axes`` maps each
    1-based label to its slot along that axis."""
    if block is None:
        return ExprArray(shape)
    if not isinstance(block, dict):
        raise ValidationError(f"{where} must be an object mapping indices to expressions")
    entries = {}
    for key, text in block.items():
        labels = _index_key(key, len(shape), where)
        slots = []
        for label, axis in zip(labels, axes):
            if label not in axis:
                raise ValidationError(f"{where}: index {label} in key {key!r} is out of range {sorted(axis)}")
            slots.append(axis[label])
        entries[tuple(slots)] = _expr(text, variables, f"{where}[{key}]")
    return ExprArray(shape, {k: v for k, v in entries.items() if v != ZERO})


def _tolerances(block):
    tol = dict(DEFAULT_TOLERANCES)
    if block is None:
        return tol
    if not isinstance(block, dict):
        raise ValidationError("tolerances must be an object")
    for key, value in block.items():
        if key not in DEFAULT_TOLERANCES:
            raise ValidationError(f"unknown tolerance {key!r}")
        if isinstance(value, bool) or not isinstance(value, (int, float)) or not value > 0:
            raise ValidationError(f"tolerance {key!r} must be a positive number")
        tol[key] = float(value)
    return tol


def _domain(block, D):
    if block is None:
        return np.array([[-1.0, 1.0]] * D), 1.0
    if not isinstance(block, dict):
        raise ValidationError("domain must be an object")
    box = np.asarray(block.get("x", [[-1.0, 1.0]] * D), dtype=float)
    if box.shape != (D, 2) or not np.all(box[:, 0] < box[:, 1]):
        raise ValidationError(f"domain.x must be {D} intervals [lo, hi] with lo < hi")
    radius = block.get("sigma_radius", 1.0)
    if isinstance(radius, bool) or not isinstance(radius, (int, float)) or not radius > 0:
        raise ValidationError("domain.sigma_radius must be a positive number")
    return box, float(radius)


def build_scenario(data: dict, name: str = "", require_reductive: bool = True) -> Scenario:
    """Validate a parsed scenario document.

    With ``require_reductive=False`` only the algebra, split and representation are
    built and a non-reductive split is tolerated; this is what ``check-reductive`` needs.
    """
    if not isinstance(data, dict):
        raise ValidationError("scenario must be a JSON object")
    name = data.get("name", name)
    alg = _algebra(_require(data, "algebra", (str, dict)))
    h_one = _require(data, "h_indices", list)
    h = [_int(i, "h_indices entry") - 1 for i in h_one]
    if len(set(h)) != len(h) or any(not 0 <= i < alg.dim for i in h):
        raise ValidationError(f"h_indices must be distinct integers in 1..{alg.dim}")
    split = ReductiveSplit.from_h(alg.dim, h)
    D = _int(data.get("base_dim", 2), "base_dim")
    if D < 1:
        raise ValidationError("base_dim must be positive")
    tolerances = _tolerances(data.get("tolerances"))
    seed = _int(data.get("seed", 0), "seed")
    common = dict(name=name, data=data, hash=scenario_hash(data), alg=alg, split=split,
                  base_dim=D, tolerances=tolerances, seed=seed)

    rep = None
    if "representation" in data:
        gens = _matrix_stack(data["representation"], "representation") if data["representation"] else None
        if gens is None or gens.shape[0] != split.h_dim:
            raise ValidationError(f"representation needs one generator per h index ({split.h_dim})")
        rep = HRepresentation(gens)
    fibre_dim = rep.fibre_dim if rep is not None else 0
    if "fibre_dim" in data and _int(data["fibre_dim"], "fibre_dim") != fibre_dim:
        raise ValidationError(f"fibre_dim {data['fibre_dim']} does not match the representation ({fibre_dim})")

    report = check_reductive(alg, split, tolerances["reductive"])
    if not require_reductive:
        return Scenario(rep=rep, chart=None, fibre_dim=fibre_dim, **common)
    if not (report.subalgebra and report.f_h_in_f):
        bad = report.violations[0]
        raise ValidationError(f"split is not reductive: {bad.condition} fails, {bad.describe(alg.basis_labels)}")
    if rep is None:
        raise ValidationError("scenario: missing required key 'representation'")
    comm = rep.commutation_residual(alg, split)
    if comm > 1e-9:
        raise ValidationError(f"representation does not respect the h brackets (residual {comm:.3e})")
    try:
        chart = CosetChart(alg, split, rep)
    except CosetGaugeError as exc:
        raise ValidationError(str(exc)) from None

    n, F, H, k = alg.dim, split.f_dim, split.h_dim, fibre_dim
    labels = f_labels(chart)
    xvars = [f"x{i}" for i in range(1, D + 1)]
    xsvars = xvars + [f"s{m}" for m in labels]
    all_axis = {p + 1: p for p in range(n)}
    h_axis = {a + 1: slot for slot, a in enumerate(split.h_indices)}
    f_axis = {m + 1: slot for slot, m in enumerate(split.f_indices)}
    base_axis = {l: l - 1 for l in range(1, D + 1)}
    fibre_axis = {i: i - 1 for i in range(1, k + 1)}

    conn_x = ConnectionOnX(_expr_array(data.get("connection_on_x"), (n, D), (all_axis, base_axis), xvars,
                                       "connection_on_x"))
    cs = data.get("connection_on_sigma")
    conn_sigma = None
    if cs is not None:
        if not isinstance(cs, dict) or set(cs) - {"x", "s"}:
            raise ValidationError("connection_on_sigma must be an object with keys 'x' and 's'")
        conn_sigma = ConnectionOnSigma(
            _expr_array(cs.get("x"), (H, D), (h_axis, base_axis), xsvars, "connection_on_sigma.x"),
            _expr_array(cs.get("s"), (H, F), (h_axis, f_axis), xsvars, "connection_on_sigma.s"),
            labels,
        )
    higgs = Section(_expr_array(data.get("higgs"), (F,), (f_axis,), xvars, "higgs"))
    matter = Section(_expr_array(data.get("matter"), (k,), (fibre_axis,), xvars, "matter"))

    lagrangian = None
    if data.get("lagrangian") is not None:
        block = data["lagrangian"]
        if not isinstance(block, dict):
            raise ValidationError("lagrangian must be an object with 'kind' and 'expr'")
        kind = block.get("kind")
        if kind not in (FACTORED, RAW):
            raise ValidationError(f"lagrangian.kind must be {FACTORED!r} or {RAW!r}")
        body = _expr(_require(block, "expr", str, "lagrangian"), None, "lagrangian.expr")
        lagrangian = MatterLagrangian(kind, body, k, D, labels)

    family = data.get("gauge_parameters", {"family": "affine_sin", "scale": 1.0})
    if not isinstance(family, dict) or family.get("family") not in GAUGE_FAMILIES:
        raise ValidationError(f"gauge_parameters.family must be one of {GAUGE_FAMILIES}")
    scale = family.get("scale", 1.0)
    if isinstance(scale, bool) or not isinstance(scale, (int, float)) or not scale > 0:
        raise ValidationError("gauge_parameters.scale must be a positive number")
    family = {"family": family["family"], "scale": float(scale)}

    box, radius = _domain(data.get("domain"), D)
    if not radius < chart.chart_radius:
        raise ValidationError(f"domain.sigma_radius {radius} must be below the chart radius {chart.chart_radius:.6g}")
    return Scenario(rep=rep, chart=chart, fibre_dim=k, conn_x=conn_x, conn_sigma=conn_sigma, higgs=higgs,
                    matter=matter, lagrangian=lagrangian, gauge_family=family, domain=box,
                    sigma_radius=radius, **common)


def read_document(path) -> dict:
    """Read a scenario file, or a built-in scenario when ``path`` is one of its names."""
    p = Path(path)
    if not p.exists() and str(path) in BUILTIN_SCENARIOS:
        text = resources.files("cosetgauge").joinpath("scenarios").joinpath(f"{path}.json").read_text(encoding="utf-8")
        source = f"<builtin {path}>"
    else:
        try:
            text = p.read_text(encoding="utf-8")
        except OSError as exc:
            raise ScenarioParseError(f"cannot read scenario {path}: {exc.strerror}") from None
        source = str(path)
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioParseError(f"{source}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None


def load_scenario(path, require_reductive: bool = True) -> Scenario:
    data = read_document(path)
    return build_scenario(data, name=Path(str(path)).stem, require_reductive=require_reductive)


def builtin_path(name: str):
    return resources.files("cosetgauge").joinpath("scenarios").joinpath(f"{name}.json")
