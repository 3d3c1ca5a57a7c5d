"""Curved submodels, priors on model coordinates, and exact posterior
computation for deterministic data sequences.

A model is a map eta from a 1-D coordinate set M into the natural-parameter
domain of a generating family.  Priors live on the model coordinate
(uniform by default; only the topological support matters for the limit
theory).  Posterior masses are computed by adaptive quadrature in the log
domain with max-subtraction inside the exponent, which keeps the n=4096
spike and the exponentially small tails representable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
from scipy.optimize import minimize_scalar

from . import legendre
from .errors import DegeneratePosterior, RateUnbounded
from .families import (
    GeneratingFamily,
    as_point,
    builtin,
    cumulant,
    log_likelihood,
)
from .intervals import Interval, complement, intersect_unions, normalize_union
from .quadrature import log_integral_peaked, logsumexp_pair

INF = float("inf")


# ---------------------------------------------------------------------------
# events
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ModelEvent:
    """Finite union of coordinate intervals; interiors and closures are
    derived exactly from the endpoints."""

    intervals: tuple

    def __post_init__(self):
        object.__setattr__(self, "intervals", normalize_union(self.intervals))

    def contains(self, z: float) -> bool:
        return any(iv.contains(z) for iv in self.intervals)

    def interior(self) -> "ModelEvent":
        ivs = [iv.interior() for iv in self.intervals]
        return ModelEvent(tuple(iv for iv in ivs if iv is not None))

    def closure(self) -> "ModelEvent":
        return ModelEvent(tuple(iv.closure() for iv in self.intervals))

    def complement(self) -> "ModelEvent":
        return ModelEvent(complement(self.intervals))

    @staticmethod
    def from_json(obj: dict) -> "ModelEvent":
        ivs = []
        for lo, hi in obj["intervals"]:
            ivs.append(Interval(_parse_endpoint(lo), _parse_endpoint(hi)))
        return ModelEvent(tuple(ivs))

    def to_json(self) -> dict:
        return {
            "intervals": [
                [_emit_endpoint(iv.lo), _emit_endpoint(iv.hi)]
                for iv in self.intervals
            ]
        }


def _parse_endpoint(v):
    if v == "inf":
        return INF
    if v == "-inf":
        return -INF
    return float(v)


def _emit_endpoint(v):
    if v == INF:
        return "inf"
    if v == -INF:
        return "-inf"
    return v


def event_at_least(z0: float) -> ModelEvent:
    return ModelEvent((Interval(z0, INF),))


def event_interval(lo: float, hi: float, lo_closed=True, hi_closed=True) -> ModelEvent:
    return ModelEvent((Interval(lo, hi, lo_closed, hi_closed),))


# ---------------------------------------------------------------------------
# curved models
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CurvedModel:
    """Parameter map eta: M -> dom(kappa) with Jacobian, affine or curved."""

    name: str
    family: GeneratingFamily
    kind: str                 # "affine" | "curve"
    map: Callable[[float], np.ndarray]
    jacobian: Callable[[float], np.ndarray]
    coord_intervals: tuple    # M as a union of Intervals (with openness)


def _build_hw_line():
    fam = builtin("hardy-weinberg-saturated")
    return CurvedModel(
        name="hw-line",
        family=fam,
        kind="affine",
        map=lambda z: np.array([z, -z]),
        jacobian=lambda z: np.array([1.0, -1.0]),
        coord_intervals=(Interval(-INF, INF),),
    )


def _build_gauss_mean_eq_sd():
    fam = builtin("gauss-parabola")
    return CurvedModel(
        name="gauss-mean-eq-sd",
        family=fam,
        kind="curve",
        map=lambda z: np.array([z, -0.5 * z * z]),
        jacobian=lambda z: np.array([1.0, -z]),
        coord_intervals=(Interval(0.0, INF, lo_closed=False),),
    )


def _build_strip_curve():
    fam = builtin("strip-measure")

    def emb(z):
        return np.array([z, math.sqrt(max(1.0 - z ** 3, 0.0))])

    def jac(z):
        root = math.sqrt(max(1.0 - z ** 3, 1e-300))
        return np.array([1.0, -1.5 * z * z / root])

    return CurvedModel(
        name="strip-curve",
        family=fam,
        kind="curve",
        map=emb,
        jacobian=jac,
        coord_intervals=(Interval(0.0, 1.0, lo_closed=False, hi_closed=True),),
    )


def _build_poisson_line():
    fam = builtin("poisson")
    return CurvedModel(
        name="poisson-line",
        family=fam,
        kind="affine",
        map=lambda z: np.array([z]),
        jacobian=lambda z: np.array([1.0]),
        coord_intervals=(Interval(-INF, INF),),
    )


_MODEL_FACTORIES = {
    "hw-line": _build_hw_line,
    "gauss-mean-eq-sd": _build_gauss_mean_eq_sd,
    "strip-curve": _build_strip_curve,
    "poisson-line": _build_poisson_line,
}

_MODEL_CACHE: dict = {}


def model_names():
    return sorted(_MODEL_FACTORIES)


def builtin_model(name: str) -> CurvedModel:
    try:
        factory = _MODEL_FACTORIES[name]
    except KeyError:
        raise KeyError(
            f"unknown builtin model {name!r}; available: {model_names()}"
        ) from None
    if name not in _MODEL_CACHE:
        _MODEL_CACHE[name] = factory()
    return _MODEL_CACHE[name]


def with_adjoined_origin(model: CurvedModel) -> CurvedModel:
    """Close the lower coordinate endpoint of a model (adjoin the limit
    point to M); used to exhibit boundary-condition failures."""
    ivs = tuple(
        replace(iv, lo_closed=math.isfinite(iv.lo)) for iv in model.coord_intervals
    )
    return replace(model, name=model.name + "+origin", coord_intervals=ivs)


def validate_model(model: CurvedModel, n_grid: int = 64) -> None:
    """Grid checks of the model invariants: image inside the essential
    domain, nonvanishing Jacobian on the coordinate interior, injectivity.

    The grid insets by 1e-4 of the span: closer to an open endpoint the
    image can fall on the domain boundary in double precision even though
    it is interior mathematically (e.g. sqrt(1 - z^3) rounds to 1)."""
    for iv in model.coord_intervals:
        lo = iv.lo if math.isfinite(iv.lo) else -4.0
        hi = iv.hi if math.isfinite(iv.hi) else 4.0
        span = hi - lo
        zs = np.linspace(lo + 1e-4 * span, hi - 1e-4 * span, n_grid)
        images = np.array([model.map(z) for z in zs])
        for z, th in zip(zs, images):
            if not math.isfinite(cumulant(model.family, th)):
                raise ValueError(f"{model.name}: eta({z}) leaves the domain")
            if np.linalg.norm(model.jacobian(z)) <= 0.0:
                raise ValueError(f"{model.name}: Jacobian vanishes at {z}")
        diffs = np.linalg.norm(np.diff(images, axis=0), axis=1)
        if np.any(diffs <= 0.0):
            raise ValueError(f"{model.name}: eta is not injective on the grid")


def hw_line_mle_coordinate(t) -> float:
    """Closed-form constrained MLE coordinate on the hw-line for data mean
    t = (x, y): log(1+x-y) - log(1-x+y).  Infinite at the two degenerate
    corners."""
    x, y = float(t[0]), float(t[1])
    a = 1.0 + x - y
    b = 1.0 - x + y
    if a <= 0.0:
        return -INF
    if b <= 0.0:
        return INF
    return math.log(a) - math.log(b)


def gauss_mean_eq_sd_mle_coordinate(t) -> float:
    """Closed-form constrained MLE coordinate for the mean=sd curve at data
    mean t = (x, y) with y > x^2: (x + sqrt(x^2 + 4y)) / (2y)."""
    x, y = float(t[0]), float(t[1])
    return (x + math.sqrt(x * x + 4.0 * y)) / (2.0 * y)


# ---------------------------------------------------------------------------
# priors
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Prior:
    """Atomless prior on model coordinates with closed topological support.

    Only the support enters the limit theory; the default density is
    uniform over the support (reproducible and positive on its interior).
    """

    model: CurvedModel
    support: tuple                       # closed, bounded Intervals
    density: Callable[[float], float] = field(default=None)

    def __post_init__(self):
        ivs = normalize_union(
            Interval(iv.lo, iv.hi, True, True) for iv in self.support
        )
        closure_m = normalize_union(
            iv.closure() for iv in self.model.coord_intervals
        )
        for iv in ivs:
            if not iv.bounded:
                raise ValueError("prior support intervals must be bounded")
            if not any(
                m.lo <= iv.lo and iv.hi <= m.hi for m in closure_m
            ):
                raise ValueError(
                    f"support interval [{iv.lo}, {iv.hi}] is not contained in "
                    f"the closure of the model coordinate set"
                )
        object.__setattr__(self, "support", ivs)
        if self.density is None:
            total = sum(iv.length for iv in ivs)
            if total <= 0.0:
                raise ValueError("prior support has zero length")
            const = 1.0 / total

            def uniform(z, _ivs=ivs, _c=const):
                return _c if any(iv.contains(z) for iv in _ivs) else 0.0

            object.__setattr__(self, "density", uniform)

    def log_density(self, z: float) -> float:
        p = self.density(z)
        return math.log(p) if p > 0.0 else -INF


def uniform_prior(model: CurvedModel, lo: float, hi: float) -> Prior:
    return Prior(model=model, support=(Interval(lo, hi),))


# ---------------------------------------------------------------------------
# posterior quadrature
# ---------------------------------------------------------------------------


def _coordinate_loglik(prior: Prior, xbar):
    model = prior.model

    def l_of(z):
        return log_likelihood(model.family, model.map(float(z)), xbar)

    return l_of


def _piece_peak(l_of, a, b, n_scan=33):
    inset = 1e-12 * max(1.0, abs(a), abs(b))
    zs = np.linspace(a + inset, b - inset, n_scan)
    vals = np.array([l_of(z) for z in zs])
    if not np.any(np.isfinite(vals)):
        return None
    i = int(np.nanargmax(np.where(np.isfinite(vals), vals, -INF)))
    lo = zs[max(i - 1, 0)]
    hi = zs[min(i + 1, n_scan - 1)]
    res = minimize_scalar(
        lambda z: -l_of(z) if math.isfinite(l_of(z)) else 1e300,
        bounds=(lo, hi), method="bounded", options={"xatol": 1e-12},
    )
    return float(res.x) if math.isfinite(res.fun) else float(zs[i])


def _log_weighted_integral(prior: Prior, xbar, n: int, pieces) -> float:
    """log ∫ exp(n l(eta(z); xbar)) p(z) dz over a union of bounded
    intervals, with per-piece max subtraction."""
    l_of = _coordinate_loglik(prior, xbar)
    total = -INF
    for iv in pieces:
        if iv.degenerate:
            continue
        a, b = iv.lo, iv.hi
        peak = _piece_peak(l_of, a, b)
        if peak is None:
            continue
        h = 1e-5 * max(1.0, b - a)
        l_p = l_of(peak)
        curv = abs(l_of(peak + h) + l_of(peak - h) - 2.0 * l_p) / (h * h)
        width = 1.0 / math.sqrt(max(n * curv, (2.0 / (b - a)) ** 2))

        def logf(z):
            lz = l_of(z)
            if not math.isfinite(lz):
                return -INF
            lp = prior.log_density(z)
            if lp == -INF:
                return -INF
            return n * lz + lp

        piece_log = log_integral_peaked(logf, a, b, peak, width)
        total = logsumexp_pair(total, piece_log)
    return total


def log_posterior_mass(prior: Prior, xbar, n: int, event: ModelEvent) -> float:
    """log pi_n(A | xbar): exact Bayes ratio in the log domain."""
    xb = as_point(xbar, prior.model.family.dim, "sample mean")
    log_den = _log_weighted_integral(prior, xb, n, prior.support)
    if log_den == -INF:
        raise DegeneratePosterior(
            "posterior normalizer underflowed: support is off the domain"
        )
    pieces_num = intersect_unions(event.intervals, prior.support)
    if not pieces_num:
        return -INF
    log_num = _log_weighted_integral(prior, xb, n, pieces_num)
    return min(log_num - log_den, 0.0)


def posterior_mass(prior: Prior, xbar, n: int, event: ModelEvent) -> float:
    lm = log_posterior_mass(prior, xbar, n, event)
    return math.exp(lm) if lm > -745.0 else 0.0


# ---------------------------------------------------------------------------
# decay rates and extrapolation
# ---------------------------------------------------------------------------


@dataclass
class DecayEstimate:
    schedule: tuple
    rates: np.ndarray
    extrapolated: float


def fit_rate_limit(ns, rates) -> float:
    """Least-squares fit of r_n = r_inf + c/n over the last half of the
    schedule (shared by the posterior and enumeration oracles)."""
    ns = np.asarray(ns, dtype=float)
    rates = np.asarray(rates, dtype=float)
    if np.any(~np.isfinite(rates)):
        return INF
    start = len(ns) - len(ns) // 2
    tail_n = ns[start:]
    tail_r = rates[start:]
    design = np.column_stack([np.ones_like(tail_n), 1.0 / tail_n])
    coef, *_ = np.linalg.lstsq(design, tail_r, rcond=None)
    return float(coef[0])


def decay_rate_estimate(
    prior: Prior, mu0, event: ModelEvent, schedule, sequence=None
) -> DecayEstimate:
    """Per-n rates r_n = -(1/n) log pi_n(A | xbar_n) and their extrapolated
    limit.  The default data sequence is constant at mu0."""
    schedule = tuple(int(n) for n in schedule)
    if any(b <= a for a, b in zip(schedule, schedule[1:])):
        raise ValueError("schedule must be strictly increasing")
    mu = as_point(mu0, prior.model.family.dim, "limit mean")
    seq = sequence if sequence is not None else (lambda n: mu)
    pieces_num = intersect_unions(event.intervals, prior.support)
    effective = [iv for iv in pieces_num if not iv.degenerate]
    if not effective:
        rates = np.full(len(schedule), INF)
        return DecayEstimate(schedule, rates, INF)
    rates = []
    for n in schedule:
        lm = log_posterior_mass(prior, seq(n), n, event)
        if lm == -INF:
            raise RateUnbounded(
                f"posterior mass is exactly zero at n={n} for a non-null event"
            )
        rates.append(-lm / n)
    rates = np.array(rates)
    return DecayEstimate(schedule, rates, fit_rate_limit(schedule, rates))


# ---------------------------------------------------------------------------
# limiting MLE over the prior support, with boundary-condition report
# ---------------------------------------------------------------------------


@dataclass
class LimitingMle:
    theta_nu: np.ndarray | None
    coordinate: float | None
    value: float
    boundary_flag: bool
    continuity_report: dict
    legendre: legendre.LegendreResult


def _continuity_sequence(family, model, z_point, z_inner, n_points=8):
    """kappa along a geometric coordinate sequence approaching z_point."""
    seq = []
    for j in range(1, n_points + 1):
        z = z_point + (z_inner - z_point) * 2.0 ** (-j)
        seq.append(float(cumulant(family, model.map(z))))
    return seq


def _continuity_check(family, model, z_point, z_inner):
    theta = model.map(z_point)
    kappa_pt = float(cumulant(family, theta))
    seq = _continuity_sequence(family, model, z_point, z_inner)
    gap = abs(seq[-1] - kappa_pt)
    is_cont = math.isfinite(kappa_pt) and gap <= 0.05 * max(1.0, abs(kappa_pt))
    return {
        "coordinate": z_point,
        "theta": [float(v) for v in theta],
        "kappa_at_point": kappa_pt,
        "kappa_sequence": seq,
        "is_continuity_point": bool(is_cont),
    }


def _condition_c(model: CurvedModel):
    """Condition on T = eta(M): every boundary point of dom(kappa) that M
    reaches must be a continuity point for kappa along the curve."""
    family = model.family
    checks = []
    for iv in model.coord_intervals:
        for z_end, closed in ((iv.lo, iv.lo_closed), (iv.hi, iv.hi_closed)):
            if not (closed and math.isfinite(z_end)):
                continue
            theta = model.map(z_end)
            if not family.domain.is_boundary(theta):
                continue
            z_inner = z_end + (0.5 if z_end == iv.lo else -0.5) * min(
                1.0, iv.length if iv.bounded else 1.0
            )
            checks.append(_continuity_check(family, model, z_end, z_inner))
    holds = all(c["is_continuity_point"] for c in checks)
    return {"holds": bool(holds), "boundary_points": checks}


def limiting_mle(prior: Prior, mu0) -> LimitingMle:
    """Maximizer of l(.; mu0) over the prior support, seen as the limiting
    constrained MLE, together with the numeric boundary-condition report."""
    model = prior.model
    family = model.family
    mu = as_point(mu0, family.dim, "limit mean")
    constraint = legendre.ConstraintSet.curve(model, intervals=prior.support)
    res = legendre.conjugate_constrained(family, constraint, mu)
    boundary_flag = res.argmax is not None and not family.domain.interior(res.argmax)
    if res.argmax is None:
        cond_b = {"holds": False, "mode": "supremum-not-attained"}
    elif not boundary_flag:
        cond_b = {"holds": True, "mode": "interior-maximizer"}
    else:
        z_nu = res.coordinate
        inner = None
        for iv in prior.support:
            if iv.contains(z_nu):
                inner = z_nu + (0.5 if abs(z_nu - iv.lo) < abs(z_nu - iv.hi) else -0.5) \
                    * min(1.0, iv.length)
                break
        check = _continuity_check(family, model, z_nu, inner)
        cond_b = {
            "holds": bool(check["is_continuity_point"]),
            "mode": "boundary-maximizer",
            "check": check,
        }
    report = {"condition_b": cond_b, "condition_c": _condition_c(model)}
    return LimitingMle(
        theta_nu=res.argmax,
        coordinate=res.coordinate,
        value=res.value,
        boundary_flag=bool(boundary_flag),
        continuity_report=report,
        legendre=res,
    )


# ---------------------------------------------------------------------------
# posterior-study JSON descriptors
# ---------------------------------------------------------------------------


@dataclass
class PosteriorStudy:
    prior: Prior
    mu0: np.ndarray
    event: ModelEvent
    schedule: tuple


def posterior_study_from_descriptor(obj: dict) -> PosteriorStudy:
    """Scenario descriptor:
    {"model": "hw-line", "prior": {"kind": "uniform", "support": [a, b]},
     "mu0": [...], "event": {"intervals": [[lo, hi], ...]},
     "schedule": [n1, n2, ...]}
    """
    model = builtin_model(obj["model"])
    prior_obj = obj["prior"]
    if prior_obj.get("kind") != "uniform":
        raise ValueError("only uniform prior descriptors are supported")
    lo, hi = prior_obj["support"]
    prior = uniform_prior(model, float(lo), float(hi))
    mu0 = np.asarray(obj["mu0"], dtype=float)
    event = ModelEvent.from_json(obj["event"])
    schedule = tuple(int(n) for n in obj["schedule"])
    return PosteriorStudy(prior=prior, mu0=mu0, event=event, schedule=schedule)


def posterior_study_descriptor(study: PosteriorStudy) -> dict:
    support = study.prior.support
    if len(support) != 1:
        raise ValueError("descriptor form requires a single support interval")
    return {
        "model": study.prior.model.name,
        "prior": {"kind": "uniform", "support": [support[0].lo, support[0].hi]},
        "mu0": [float(v) for v in study.mu0],
        "event": study.event.to_json(),
        "schedule": list(study.schedule),
    }
