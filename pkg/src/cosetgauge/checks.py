"""Seeded sample scans behind every command. Each returns a list of CheckRecord.

Sample ``i`` of a check draws from ``default_rng([seed, stream, i])``, so results do
not depend on the number of workers or on which other checks ran.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .connections import (
    InducedConnectionOnSigma,
    JetPointY,
    covariant_differential_pullback,
    h_component_reduced,
    jet_of_sections,
    pullback_connection,
    theorem1_residual,
    vertical_covariant_differential,
)
from .coset import DEFAULT_FD_STEP
from .errors import CosetGaugeError
from .expr import ExprArray, parse
from .exprcorpus import run_corpus
from .invariance import RAW, GaugeParameter, lie_derivative
from .lie import check_reductive, killing_form
from .reconstruction import (
    config_from_fields,
    reconstruct,
    reduced_vertical_differential,
    theta_affinity_residual,
)
from .scenario import Scenario

MAX_LOGGED_ERRORS = 5
STREAMS = {"theorem1": 1, "theorem4": 2, "invariance": 3, "theorem6": 4}
NONTRIVIAL_XI = 0.1
CONTROL_SHIFT = 0.1
CONTROL_MIN_ACTION = 0.2
DETECTION_FRACTION = 0.9


@dataclass
class CheckRecord:
    name: str
    samples: int
    max_residual: float
    mean_residual: float
    tolerance: float
    passed: bool
    criterion: str = "max <= tolerance"
    argmax: int = -1
    errors: int = 0
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "samples": self.samples,
            "max_residual": self.max_residual,
            "mean_residual": self.mean_residual,
            "tolerance": self.tolerance,
            "pass": self.passed,
            "criterion": self.criterion,
            "argmax": self.argmax,
            "errors": self.errors,
            "details": self.details,
        }


@dataclass
class ScanSettings:
    samples: int
    seed: int
    fd_step: float = DEFAULT_FD_STEP
    richardson: bool = False
    workers: int = 1
    tol: float = None  # overrides the primary tolerance when set


def sample_rng(seed, stream, i):
    return np.random.default_rng([int(seed), int(stream), int(i)])


def _run(n, fn, workers):
    """Evaluate ``fn(i)`` for each sample; exceptions of this package become strings."""

    def safe(i):
        try:
            return fn(i)
        except (CosetGaugeError, np.linalg.LinAlgError, FloatingPointError) as exc:
            return f"{type(exc).__name__}: {exc}"

    if workers > 1 and n > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(safe, range(n)))
    return [safe(i) for i in range(n)]


def _errors_of(name, results, log):
    count = 0
    for i, r in enumerate(results):
        if isinstance(r, str):
            count += 1
            if len(log) < MAX_LOGGED_ERRORS:
                log.append({"check": name, "sample": i, "error": r})
    return count


def _reduce_max(name, results, key, tol, errors, details=None) -> CheckRecord:
    """Pass when every sample succeeded and the largest value is within ``tol``."""
    vals = [(i, r[key]) for i, r in enumerate(results) if not isinstance(r, str) and key in r]
    if vals:
        arr = np.array([v for _, v in vals])
        k = int(np.argmax(arr))
        mx, mean, arg = float(arr[k]), float(arr.mean()), vals[k][0]
    else:
        mx, mean, arg = 0.0, 0.0, -1
    return CheckRecord(name, len(vals), mx, mean, float(tol), bool(errors == 0 and mx <= tol),
                       argmax=arg, errors=errors, details=details or {})


def _reduce_min(name, values, tol, errors, details=None) -> CheckRecord:
    """Sensitivity control: pass when every listed value exceeds ``tol`` (and at least one exists)."""
    if values:
        arr = np.array([v for _, v in values])
        k = int(np.argmin(arr))
        mn = float(arr[k])
        rec = CheckRecord(name, len(values), float(arr.max()), float(arr.mean()), float(tol),
                          bool(errors == 0 and mn > tol), criterion="min > tolerance",
                          argmax=values[k][0], errors=errors, details=dict(details or {}, min_residual=mn))
        return rec
    return CheckRecord(name, 0, 0.0, 0.0, float(tol), False, criterion="min > tolerance", errors=errors,
                       details=dict(details or {}, note="no eligible samples"))


def _extrapolated(fn, step, richardson):
    """``fn(step)``, or the Richardson combination of steps h and h/2 for second-order differences."""
    if not richardson:
        return fn(step)
    return (4.0 * fn(step / 2) - fn(step)) / 3.0


# ------------------------------------------------------------------ random fields


def _num(v: float) -> str:
    return repr(float(v))


def random_field(rng, rows, D, family, scale, active=None) -> ExprArray:
    """Random algebra-valued field as parsed expressions.

    ``constant``/``constant_h``: c; ``affine``: c + b.x; ``affine_sin``: c + b.x + d sin(w.x + phi).
    Only rows listed in ``active`` (default all) are populated.
    """
    active = range(rows) if active is None else active
    entries = {}
    xs = [f"x{l}" for l in range(1, D + 1)]
    for p in active:
        terms = [_num(rng.uniform(-scale, scale))]
        if family in ("affine", "affine_sin"):
            terms += [f"{_num(rng.uniform(-scale, scale))}*{x}" for x in xs]
        if family == "affine_sin":
            arg = " + ".join([f"{_num(rng.uniform(-1.5, 1.5))}*{x}" for x in xs] + [_num(rng.uniform(-np.pi, np.pi))])
            terms.append(f"{_num(rng.uniform(-0.5 * scale, 0.5 * scale))}*sin({arg})")
        entries[(p,)] = parse(" + ".join(terms))
    return ExprArray((rows,), entries)


def _uniform_box(rng, box):
    return box[:, 0] + (box[:, 1] - box[:, 0]) * rng.random(box.shape[0])


def _uniform_ball(rng, dim, radius):
    if dim == 0:
        return np.zeros(0)
    v = rng.standard_normal(dim)
    v /= np.linalg.norm(v)
    return v * radius * rng.random() ** (1.0 / dim)


def random_jet(rng, scn: Scenario) -> JetPointY:
    x = _uniform_box(rng, scn.domain)
    F, k, D = scn.split.f_dim, scn.fibre_dim, scn.base_dim
    sigma = _uniform_ball(rng, F, scn.sigma_radius)
    return JetPointY(x, sigma, rng.uniform(-1, 1, k), rng.uniform(-1, 1, (F, D)), rng.uniform(-1, 1, (k, D)))


def sigma_connection(scn: Scenario, step=DEFAULT_FD_STEP):
    """The scenario's connection on Sigma, or the one induced by its connection on X."""
    if scn.conn_sigma is not None:
        return scn.conn_sigma
    return InducedConnectionOnSigma(scn.conn_x, scn.chart, step)


# ------------------------------------------------------------------ algebraic checks


def validate_algebra(scn: Scenario, tol=1e-10):
    alg = scn.alg
    n = alg.dim
    kappa = killing_form(alg)
    details = {"dim": n, "killing_rank": int(np.linalg.matrix_rank(kappa, tol=1e-9))}
    records = [
        CheckRecord("algebra.antisymmetry", n * n * n, alg.antisymmetry_residual(), 0.0, tol, False),
        CheckRecord("algebra.jacobi", n ** 4, alg.jacobi_residual(), 0.0, tol, False),
        CheckRecord("algebra.realization", n * n, alg.realization_residual(), 0.0, tol, False, details=details),
    ]
    for r in records:
        r.mean_residual = r.max_residual
        r.passed = bool(r.max_residual <= tol)
    if scn.rep is not None:
        res = scn.rep.commutation_residual(alg, scn.split)
        records.append(CheckRecord("representation.brackets", scn.split.h_dim ** 2, res, res, tol, bool(res <= tol)))
    return records


def reductive(scn: Scenario, tol=None):
    tol = scn.tolerances["reductive"] if tol is None else tol
    report = check_reductive(scn.alg, scn.split, tol)
    labels = scn.alg.basis_labels
    messages = [f"[{labels[v.p]},{labels[v.q]}] not in {v.condition[-1]}: {v.describe(labels)}"
                for v in report.violations]
    worst = max((abs(v.value) for v in report.violations), default=0.0)
    n = scn.alg.dim
    details = {
        "h_indices": [i + 1 for i in scn.split.h_indices],
        "violations": messages,
        "subalgebra": report.subalgebra,
        "f_h_in_f": report.f_h_in_f,
        "f_f_in_h": report.f_f_in_h,
    }
    return [CheckRecord("reductive", n * n * n, float(worst), float(worst), float(tol), report.valid,
                        criterion="no violating triple", details=details)]


# ------------------------------------------------------------------ sampled checks


def theorem1(scn: Scenario, s: ScanSettings, log):
    stream = STREAMS["theorem1"]
    h = list(scn.split.h_indices)
    tol = scn.tolerances["theorem1"] if s.tol is None else s.tol

    def one(i):
        rng = sample_rng(s.seed, stream, i)
        x = _uniform_box(rng, scn.domain)
        u = random_field(rng, scn.n, scn.base_dim, "affine_sin", 1.0, active=h)
        return {"residual": theorem1_residual(scn.conn_x, scn.chart, scn.higgs, u, x, s.fd_step)}

    results = _run(s.samples, one, s.workers)
    errors = _errors_of("theorem1", results, log)
    return [_reduce_max("theorem1", results, "residual", tol, errors)]


def theorem4(scn: Scenario, s: ScanSettings, log):
    """Vertical differential restricted to jets of (h, y) against the pulled-back covariant differential."""
    stream = STREAMS["theorem4"]
    tol = scn.tolerances["theorem4"] if s.tol is None else s.tol
    induced = InducedConnectionOnSigma(scn.conn_x, scn.chart, s.fd_step)
    rep = scn.rep

    def one(i):
        rng = sample_rng(s.seed, stream, i)
        x = _uniform_box(rng, scn.domain)
        jet = jet_of_sections(scn.higgs, scn.matter, x, s.fd_step)
        out = {}
        if scn.conn_sigma is not None:
            Dt = vertical_covariant_differential(scn.conn_sigma, rep, jet)
            B = pullback_connection(scn.conn_sigma, scn.chart, scn.higgs, x, s.fd_step)
            out["explicit"] = float(np.max(np.abs(Dt - covariant_differential_pullback(B, rep, jet.y, jet.y_jet))))
        Abar, _ = h_component_reduced(scn.conn_x, scn.chart, scn.higgs, x, s.fd_step)
        B = pullback_connection(induced, scn.chart, scn.higgs, x, s.fd_step)
        out["pullback"] = float(np.max(np.abs(B - Abar)))
        Dt = vertical_covariant_differential(induced, rep, jet)
        ref = covariant_differential_pullback(Abar, rep, jet.y, jet.y_jet)
        out["induced"] = float(np.max(np.abs(Dt - ref)))
        return out

    results = _run(s.samples, one, s.workers)
    errors = _errors_of("theorem4", results, log)
    records = []
    if scn.conn_sigma is not None:
        records.append(_reduce_max("theorem4.explicit_connection", results, "explicit", tol, errors))
    records.append(_reduce_max("theorem4.induced_connection", results, "induced", tol, errors))
    records.append(_reduce_max("theorem2_3.pullback_is_reduced_connection", results, "pullback", tol, errors))
    return records


def invariance(scn: Scenario, s: ScanSettings, log):
    stream = STREAMS["invariance"]
    tol = scn.tolerances["invariance"] if s.tol is None else s.tol
    L = scn.lagrangian
    if L is None:
        return [CheckRecord("invariance", 0, 0.0, 0.0, tol, False, details={"note": "scenario has no lagrangian"})]
    conn = sigma_connection(scn, s.fd_step)
    fam = scn.gauge_family

    def one(i):
        rng = sample_rng(s.seed, stream, i)
        jet = random_jet(rng, scn)
        active = scn.split.h_indices if fam["family"] == "constant_h" else None
        xi = GaugeParameter(random_field(rng, scn.n, scn.base_dim, fam["family"], fam["scale"], active=active))
        value = _extrapolated(lambda h: lie_derivative(L, conn, scn.rep, scn.chart, xi, jet, step=h),
                              s.fd_step, s.richardson)
        return {"residual": abs(value), "xi_norm": float(np.linalg.norm(xi.at(jet.x)))}

    results = _run(s.samples, one, s.workers)
    errors = _errors_of("invariance", results, log)
    details = {"lagrangian": L.kind, "gauge_family": fam["family"]}
    records = [_reduce_max("invariance", results, "residual", tol, errors, details)]
    if L.kind == RAW:
        threshold = scn.tolerances["detection"]
        eligible = [r for r in results if not isinstance(r, str) and r["xi_norm"] >= NONTRIVIAL_XI]
        hits = sum(1 for r in eligible if r["residual"] > threshold)
        fraction = hits / len(eligible) if eligible else 0.0
        records.append(CheckRecord(
            "invariance.detection_power", len(eligible), fraction, fraction, DETECTION_FRACTION,
            bool(eligible) and fraction >= DETECTION_FRACTION,
            criterion=f"fraction of samples with |xi| >= {NONTRIVIAL_XI} and residual > {threshold} is >= tolerance",
            errors=errors, details={"hits": hits, "threshold": threshold},
        ))
    return records


def theorem6(scn: Scenario, s: ScanSettings, log, affinity_samples=50):
    stream = STREAMS["theorem6"]
    tol = scn.tolerances["theorem6"] if s.tol is None else s.tol
    chart, rep = scn.chart, scn.rep
    induced = InducedConnectionOnSigma(scn.conn_x, chart, s.fd_step)
    h0 = chart.split.h_indices[0] if chart.h_dim else None

    def one(i):
        rng = sample_rng(s.seed, stream, i)
        x = _uniform_box(rng, scn.domain)
        point = config_from_fields(scn.conn_x, chart, scn.higgs, scn.matter, x, s.fd_step)
        ref = reduced_vertical_differential(scn.conn_x, chart, scn.higgs, scn.matter, x, s.fd_step)
        rec = reconstruct(chart, point, step=s.fd_step)
        out = {
            "discrepancy": float(np.max(np.abs(rec.vertical_differential - ref))),
            "theta_residual": float(np.max(rec.theta.residual, initial=0.0)),
            "rank": rec.theta.rank,
        }
        jet = JetPointY(point.x, point.sigma, point.y, point.sigma_jet, point.y_jet)
        out["induced"] = float(np.max(np.abs(vertical_covariant_differential(induced, rep, jet)
                                             - rec.vertical_differential)))
        if h0 is not None:
            shift = np.zeros_like(point.a)
            shift[h0, 0] = CONTROL_SHIFT
            bad = reconstruct(chart, point, theta_shift=shift, step=s.fd_step).vertical_differential
            out["control"] = float(np.max(np.abs(bad - ref)))
            out["control_action"] = float(np.linalg.norm(rep.generators[0] @ point.y))
        if i < affinity_samples:
            delta = rng.uniform(-1, 1, point.sigma_jet.shape)
            out["affinity"] = theta_affinity_residual(chart, point, delta, step=s.fd_step)
        return out

    results = _run(s.samples, one, s.workers)
    errors = _errors_of("theorem6", results, log)
    ok = [r for r in results if not isinstance(r, str)]
    ranks = sorted({r["rank"] for r in ok})
    details = {"theta_ranks": ranks, "algebra_dim": scn.n,
               "minimum_norm_choice": any(r < scn.n for r in ranks)}
    records = [
        _reduce_max("theorem6", results, "discrepancy", tol, errors, details),
        _reduce_max("theorem6.theta_consistency", results, "theta_residual", 1e-8, errors),
        _reduce_max("theorem6.induced_connection", results, "induced", tol, errors),
        _reduce_max("theorem6.theta_affinity", results, "affinity", scn.tolerances["affinity"], errors),
    ]
    if h0 is not None:
        eligible = [(i, r["control"]) for i, r in enumerate(results)
                    if not isinstance(r, str) and r["control_action"] >= CONTROL_MIN_ACTION]
        records.append(_reduce_min("theorem6.corrupted_theta_control", eligible, scn.tolerances["control"], errors,
                                   {"shift": CONTROL_SHIFT, "min_generator_action": CONTROL_MIN_ACTION}))
    return records


def parser_corpus(samples=10_000, seed=0):
    out = run_corpus(n=samples, seed=seed)
    bad = out["parse_failures"] + out["value_mismatches"] + out["roundtrip_mismatches"]
    details = {k: out[k] for k in ("parse_failures", "value_mismatches", "roundtrip_mismatches")}
    details["examples"] = out["examples"]
    return [CheckRecord("parser.corpus", samples, float(bad), float(bad) / max(samples, 1), 0.0, bad == 0,
                        criterion="no mismatching expression", details=details)]
