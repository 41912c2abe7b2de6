"""Seeded sampling, the check registry and report assembly."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from . import adapted_frame as af
from . import connection_curvature as cc
from . import kaehler_lift as kl
from .adapted_frame import CotangentPoint
from .exceptions import ConfigError, DomainViolation
from .kaehler_lift import LiftParameters
from .space_form import SpaceFormModel
from .tensor_calculus import FrameTensor, check_positive_definite, invert_spd

MODELS = {"flat": 0, "sphere": 1, "hyperbolic": -1}

NEGATIVE_CONTROL_THRESHOLD = 1e-3
HOLOMORPHIC_VARIANCE_FLOOR = 1e-4


@dataclass(frozen=True)
class CheckSpec:
    name: str
    tol_class: str  # "first" or "second"
    base_tol: float
    integrable_only: bool = False


CHECKS = (
    CheckSpec("bracket", "first", 1e-8),
    CheckSpec("metric_inverse", "first", 1e-10),
    CheckSpec("j_squared", "first", 1e-9),
    CheckSpec("hermitian", "first", 1e-9),
    CheckSpec("dphi", "first", 1e-9),
    CheckSpec("nijenhuis", "first", 1e-9),
    CheckSpec("nijenhuis_agreement", "second", 1e-7),
    CheckSpec("connection", "first", 1e-8),
    CheckSpec("connection_axioms", "first", 1e-8),
    CheckSpec("connection_readings", "first", 1e-9, integrable_only=True),
    CheckSpec("curvature", "second", 1e-6, integrable_only=True),
    CheckSpec("einstein", "second", 1e-8, integrable_only=True),
    CheckSpec("nabla_K", "second", 1e-6, integrable_only=True),
    CheckSpec("nabla_J", "second", 1e-7, integrable_only=True),
    CheckSpec("holomorphic", "first", 1e-9, integrable_only=True),
)
CHECK_NAMES = tuple(c.name for c in CHECKS)
_DEFAULT_SCALE = {"first": 1e-8, "second": 1e-6}


@dataclass(frozen=True)
class RunConfig:
    """Parameters of a verification run.

    Per-check tolerances are the check's default scaled by
    ``tol_first / 1e-8`` or ``tol_second / 1e-6`` according to the
    derivative order the check involves, so the defaults reproduce the
    documented thresholds exactly.
    """

    model: str = "hyperbolic"
    c: Optional[float] = None
    A: float = 1.0
    n: int = 2
    samples: int = 100
    seed: int = 0
    tol_first: float = 1e-8
    tol_second: float = 1e-6
    v_override: Optional[float] = None
    checks: Optional[tuple] = None
    output_path: Optional[str] = None
    holo_directions: int = 2

    def __post_init__(self):
        if self.model not in MODELS:
            raise ConfigError(f"model must be one of {sorted(MODELS)}")
        c = float(MODELS[self.model]) if self.c is None else float(self.c)
        if not math.isfinite(c) or np.sign(c) != MODELS[self.model]:
            raise ConfigError(f"curvature c={c} does not match model '{self.model}'")
        object.__setattr__(self, "c", c)
        if not (math.isfinite(self.A) and self.A > 0):
            raise ConfigError("A must be positive")
        if self.n not in (2, 3, 4):
            raise ConfigError("dimension must be 2, 3 or 4")
        if self.samples < 1:
            raise ConfigError("samples must be >= 1")
        if self.seed < 0:
            raise ConfigError("seed must be a non-negative integer")
        if not (self.tol_first > 0 and self.tol_second > 0):
            raise ConfigError("tolerances must be positive")
        if self.v_override is not None and not math.isfinite(self.v_override):
            raise ConfigError("v override must be finite")
        if self.holo_directions < 1:
            raise ConfigError("holo_directions must be >= 1")
        checks = CHECK_NAMES if self.checks is None else tuple(self.checks)
        unknown = sorted(set(checks) - set(CHECK_NAMES))
        if unknown:
            raise ConfigError(f"unknown checks: {', '.join(unknown)}")
        object.__setattr__(self, "checks", tuple(c for c in CHECK_NAMES if c in checks))

    @property
    def space_form(self) -> SpaceFormModel:
        return SpaceFormModel(self.n, self.c)

    @property
    def lift(self) -> LiftParameters:
        return LiftParameters(self.A, self.v_override)

    def tolerance(self, spec: CheckSpec) -> float:
        scale = self.tol_first if spec.tol_class == "first" else self.tol_second
        return spec.base_tol * scale / _DEFAULT_SCALE[spec.tol_class]


@dataclass
class CheckRecord:
    name: str
    points_evaluated: int
    max_abs_residual: Optional[float]
    tolerance: float
    passed: bool
    mode: str = "residual"  # residual | negative_control | skipped
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = {
            "name": self.name,
            "mode": self.mode,
            "points_evaluated": self.points_evaluated,
            "max_abs_residual": self.max_abs_residual,
            "tolerance": self.tolerance,
            "pass": self.passed,
        }
        if self.details:
            d["details"] = self.details
        return d


@dataclass
class VerificationReport:
    config: RunConfig
    checks: list
    readings: Optional[dict]
    holomorphic_samples: list

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks if c.mode != "skipped")

    def check(self, name: str) -> CheckRecord:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_dict(self) -> dict:
        cfg = asdict(self.config)
        cfg["checks"] = list(cfg["checks"])
        return {
            "config": cfg,
            "checks": [c.to_dict() for c in self.checks],
            "reading_consistency": self.readings,
            "holomorphic_samples": self.holomorphic_samples,
            "summary": {"pass": self.passed},
        }

    def to_json(self) -> str:
        return dumps(self.to_dict())


# -- deterministic JSON ------------------------------------------------------

def _fmt(x) -> str:
    if x is None:
        return "null"
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if not math.isfinite(x):
            return "null"
        return format(x, ".16e")
    if isinstance(x, str):
        return json.dumps(x, ensure_ascii=False)
    raise TypeError(f"cannot serialize {type(x).__name__}")


def dumps(obj, indent: int = 2, _level: int = 0) -> str:
    """JSON text with every float in scientific notation at 17 significant digits."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{_fmt(str(k))}: {dumps(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(obj.tolist() if isinstance(obj, np.ndarray) else obj)
        if not seq:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in seq):
            return "[" + ", ".join(_fmt(v) for v in seq) + "]"
        return "[\n" + ",\n".join(pad + dumps(v, indent, _level + 1) for v in seq) + "\n" + end + "]"
    return _fmt(obj)


# -- sampling ---------------------------------------------------------------

def point_rng(seed: int, index: int) -> np.random.Generator:
    """Independent generator for sample ``index``; results never depend on evaluation order."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))


def momentum_bound(model: SpaceFormModel, params: LiftParameters) -> float:
    """Upper bound for ``|p|^2 = 2t`` used when sampling.

    Where ``v < 0`` the lifted metric needs ``2t |v| < A``; samples stay at
    90% of that bound.  Otherwise ``|p|^2`` ranges up to ``10 A^2``.
    """
    v = params.v_for(model)
    if v < 0:
        return 0.9 * params.A / -v
    return 10.0 * params.A ** 2


def _sample_one(model: SpaceFormModel, params: LiftParameters, rng: np.random.Generator) -> CotangentPoint:
    n = model.n
    radius = 0.8 * model.chart_radius if math.isfinite(model.chart_radius) else 2.0
    d = rng.standard_normal(n)
    q = radius * rng.uniform() ** (1.0 / n) * d / np.linalg.norm(d)
    g = model.metric_field(q)
    xi = rng.standard_normal(n)
    target = momentum_bound(model, params) * rng.uniform()
    p = xi * math.sqrt(target / float(xi @ np.linalg.solve(g, xi)))
    return CotangentPoint(q, p)


def sample_points(config: RunConfig, seed: Optional[int] = None) -> list:
    model, params = config.space_form, config.lift
    s = config.seed if seed is None else seed
    return [_sample_one(model, params, point_rng(s, i)) for i in range(config.samples)]


def sample_directions(config: RunConfig, seed: Optional[int] = None) -> list:
    s = config.seed if seed is None else seed
    N = 2 * config.n
    out = []
    for i in range(config.samples):
        rng = point_rng(s, i)
        _sample_one(config.space_form, config.lift, rng)
        out.append([rng.standard_normal(N) for _ in range(config.holo_directions)])
    return out


# -- per-point evaluation ----------------------------------------------------

def _metric_inverse_residual(model, params, pt) -> float:
    lm = kl.lifted_metric_components(model, params, pt)
    res = kl.inverse_residual(model, params, pt)
    res = max(res, float(np.max(np.abs(invert_spd(FrameTensor((0, 2), lm.G)).components - lm.H))))
    if params.is_integrable(model):
        res = max(res, float(np.max(np.abs(kl.integrable_inverse_closed_form(model, params, pt) - lm.H))))
    w_identity = lm.w * params.A * (params.A + 2 * lm.t * lm.v) + lm.v
    res = max(res, abs(w_identity))
    if not check_positive_definite(kl.metric_G(model, params, pt)):
        res = math.inf
    return res


def _evaluate(name: str, model, params, pt) -> float:
    if name == "bracket":
        return max(af.bracket_residual(model, pt), af.coframe_residual(model, pt))
    if name == "metric_inverse":
        return _metric_inverse_residual(model, params, pt)
    if name == "j_squared":
        return kl.j_squared_residual(model, params, pt)
    if name == "hermitian":
        return kl.hermitian_residual(model, params, pt)
    if name == "dphi":
        return max(kl.dphi_residual(model, params, pt), kl.phi_constancy_residual(model, params, pt))
    if name == "nijenhuis":
        return max(kl.nijenhuis_closed_form(model, params, pt).max_abs(),
                   kl.nijenhuis_definition(model, params, pt).max_abs())
    if name == "nijenhuis_agreement":
        a = kl.nijenhuis_closed_form(model, params, pt).full
        b = kl.nijenhuis_definition(model, params, pt).full
        return float(np.max(np.abs(a - b)))
    if name == "connection":
        a = cc.koszul_connection(model, params, pt).coefficients
        b = cc.connection_closed_form(model, params, pt).coefficients
        return float(np.max(np.abs(a - b)))
    if name == "connection_axioms":
        r1 = cc.connection_axiom_residuals(model, params, pt)
        r2 = cc.connection_axiom_residuals(model, params, pt, cc.koszul_connection(model, params, pt))
        return max(r1 + r2)
    if name == "curvature":
        a = cc.curvature_numeric(model, params, pt).K
        b = cc.curvature_closed_form(model, params, pt).K
        return float(np.max(np.abs(a - b)))
    if name == "einstein":
        # the closed-form Ricci and the one traced from the differentiated curvature
        res = cc.ricci_and_einstein(model, params, pt)[1]
        ric = cc.curvature_numeric(model, params, pt).ricci
        G = cc.metric_value(model, params, pt)
        return max(res, float(np.max(np.abs(ric - model.c * model.n / params.A * G))))
    if name == "nabla_K":
        return cc.covariant_derivative_K(model, params, pt)
    if name == "nabla_J":
        return cc.covariant_derivative_J(model, params, pt)
    raise KeyError(name)


def _holomorphic_values(model, params, pt, dirs) -> tuple[list, float]:
    values, scaling = [], 0.0
    for X in dirs:
        h = cc.holomorphic_sectional_curvature(model, params, pt, X)
        for lam in (3.0, -0.7):
            scaling = max(scaling, abs(cc.holomorphic_sectional_curvature(model, params, pt, lam * X) - h))
        values.append(h)
    return values, scaling


def run_verification(config: RunConfig) -> VerificationReport:
    """Evaluate the selected checks over the seeded sample and aggregate by max."""
    model, params = config.space_form, config.lift
    integrable = params.is_integrable(model)
    points = sample_points(config)
    directions = sample_directions(config)
    active = [s for s in CHECKS if s.name in config.checks and (integrable or not s.integrable_only)]
    worst = {s.name: 0.0 for s in active}
    readings_rep = None
    factors = []
    holo, holo_scaling = [], 0.0

    # points outermost so the per-point jet caches are reused across checks
    for pt, dirs in zip(points, directions):
        for spec in active:
            if spec.name == "connection_readings":
                r = cc.reading_consistency(model, params, pt)
                readings_rep = r if readings_rep is None else readings_rep.merge(r)
            elif spec.name == "holomorphic":
                values, scaling = _holomorphic_values(model, params, pt, dirs)
                holo_scaling = max(holo_scaling, scaling)
                holo.extend({"q": list(pt.q), "p": list(pt.p), "direction": X.tolist(), "value": h}
                            for X, h in zip(dirs, values))
            else:
                worst[spec.name] = max(worst[spec.name], _evaluate(spec.name, model, params, pt))
                if spec.name == "einstein":
                    factors.append(cc.curvature_closed_form(model, params, pt).einstein_factor)
                    factors.append(cc.curvature_numeric(model, params, pt).einstein_factor)

    records = []
    readings = None
    for spec in CHECKS:
        if spec.name not in config.checks:
            continue
        tol = config.tolerance(spec)
        npts = len(points)
        if spec not in active:
            rec = CheckRecord(spec.name, 0, None, tol, True, mode="skipped",
                              details={"reason": "requires v = -c/A"})
        elif spec.name == "connection_readings":
            rec, readings = _reading_record(readings_rep, npts, tol)
        elif spec.name == "holomorphic":
            rec = _holomorphic_record(model, holo, holo_scaling, tol)
        elif spec.name == "nijenhuis" and not integrable:
            w = worst[spec.name]
            rec = CheckRecord(spec.name, npts, w, NEGATIVE_CONTROL_THRESHOLD, w > NEGATIVE_CONTROL_THRESHOLD,
                              mode="negative_control",
                              details={"expect": "max component above threshold (J not integrable)"})
        else:
            w = worst[spec.name]
            rec = CheckRecord(spec.name, npts, w, tol, w < tol)
            if spec.name == "einstein":
                rec.details = {"expected_factor": model.c * model.n / params.A,
                               "observed_factor_range": [min(factors), max(factors)]}
        records.append(rec)

    report = VerificationReport(config, records, readings, holo)
    if config.output_path:
        with open(config.output_path, "w", encoding="utf-8") as fh:
            fh.write(report.to_json() + "\n")
    return report


def _reading_record(rep: cc.ReadingReport, npts: int, tol: float):
    q_match, p_match = rep.q_match(tol), rep.p_match(tol)
    summary = {
        "s_residual": rep.s_residual,
        "q_momentum_free_residual": rep.q_free,
        "q_momentum_corrected_residual": rep.q_corrected,
        "p_momentum_free_residual": rep.p_free,
        "p_momentum_corrected_residual": rep.p_corrected,
        "q_matching_reading": q_match,
        "p_matching_reading": p_match,
    }
    best = max(rep.s_residual, min(rep.q_free, rep.q_corrected), min(rep.p_free, rep.p_corrected))
    ok = rep.s_residual < tol and q_match != "none" and p_match != "none"
    return CheckRecord("connection_readings", npts, best, tol, ok, details=summary), summary


def _holomorphic_record(model, samples, scaling, tol) -> CheckRecord:
    values = np.array([s["value"] for s in samples])
    variance = float(np.var(values, ddof=1)) if len(values) > 1 else 0.0
    if model.c != 0:
        ok = scaling < tol and variance > HOLOMORPHIC_VARIANCE_FLOOR
        expect = f"sample variance > {HOLOMORPHIC_VARIANCE_FLOOR:g}"
    else:
        ok = scaling < tol and float(np.max(np.abs(values))) < tol
        expect = "H identically zero"
    return CheckRecord("holomorphic", len(samples), scaling, tol, ok,
                       details={"variance": variance, "expect": expect,
                                "min": float(values.min()), "max": float(values.max())})


def holomorphic_samples(config: RunConfig) -> list:
    """``H(X)`` over the seeded (point, direction) pairs, for external plotting."""
    model, params = config.space_form, config.lift
    out = []
    for pt, dirs in zip(sample_points(config), sample_directions(config)):
        for X in dirs:
            out.append({"q": list(pt.q), "p": list(pt.p), "direction": X.tolist(),
                        "value": cc.holomorphic_sectional_curvature(model, params, pt, X)})
    return out


# -- tube sweep ----------------------------------------------------------------

def sweep_tube(c: float, A: float, n: int = 2, steps: int = 40, q=None, beyond: float = 1.25) -> list:
    """Rows along ``p = s e_1`` at fixed ``q`` from ``t = 0`` past the tube boundary.

    Each row reports ``t``, ``t / t_max`` with ``t_max = A^2 / (2c)``, the
    tube flag, whether the lifted-metric operations raised, and (where
    defined) the extreme eigenvalues of the horizontal block ``G_ij``, the
    vertical block ``H^ij`` and the full metric.
    """
    if not c > 0:
        raise ConfigError("sweep-tube needs positive curvature")
    model = SpaceFormModel(n, c)
    params = LiftParameters(A)
    q = np.zeros(n) if q is None else np.asarray(q, dtype=float)
    g = model.metric_field(q)
    t_max = A * A / (2 * c)
    e1 = np.zeros(n)
    e1[0] = 1.0
    unit = e1 / math.sqrt(float(e1 @ np.linalg.solve(g, e1)))
    rows = []
    fracs = [k / steps for k in range(steps)]
    fracs += [1.0 - 10.0 ** -j for j in range(3, 9)] + [1.0, 1.1, beyond]
    for frac in sorted(set(fracs)):
        t = float(frac * t_max)
        pt = CotangentPoint(q, unit * math.sqrt(2 * t))
        # horizontal block stays defined past the boundary
        v = params.v_for(model)
        G_raw = A * g + v * np.outer(pt.p, pt.p)
        row = {
            "t": t,
            "fraction": float(frac),
            "in_tube": kl.tube_check(model, params, pt),
            "domain_error": False,
            "min_eig_horizontal": float(np.linalg.eigvalsh(G_raw)[0]),
            "max_eig_vertical": None,
            "min_eig_metric": None,
            "positive_definite": check_positive_definite(G_raw),
        }
        try:
            M = kl.metric_G(model, params, pt)
            lm = kl.lifted_metric_components(model, params, pt)
        except DomainViolation:
            row["domain_error"] = True
        else:
            row["max_eig_vertical"] = float(np.linalg.eigvalsh(lm.H)[-1])
            row["min_eig_metric"] = float(np.linalg.eigvalsh(M)[0])
            row["positive_definite"] = check_positive_definite(M)
        rows.append(row)
    return rows
