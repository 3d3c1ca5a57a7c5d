"""Log-domain quadrature helpers for sharply peaked integrands.

Both the reduced strip-measure cumulant and the posterior normalizing
integrals are of the form log ∫ exp(g(x)) w(x) dx with a single dominant
peak whose location can be far from the origin and whose width shrinks
like n^(-1/2).  Everything here subtracts the peak value before
exponentiating and reports results on the log scale.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .errors import NumericsError, QuadratureFailure

_LOG_ZERO = float("-inf")


@dataclass(frozen=True)
class QuadraturePolicy:
    """Window/refinement policy for peaked 1-D integrands.

    window_halfwidth: integration window extends this many standard widths
    (1/sqrt(|curvature at peak|)) on each side of the located maximizer.
    """

    rel_tol: float = 1e-9
    window_halfwidth: float = 12.0
    newton_steps: int = 100
    quad_limit: int = 300


DEFAULT_POLICY = QuadraturePolicy()


def require_finite(x, what="value"):
    """Reject NaN; +-inf passes through (extended reals are legitimate)."""
    arr = np.asarray(x, dtype=float)
    if np.isnan(arr).any():
        raise NumericsError(f"NaN encountered in {what}")
    return x


def locate_peak(f, df, d2f, x0, steps=100, tol=1e-13):
    """Locate a maximizer of a single- or few-peaked exponent from a
    starting guess.

    Newton on the derivative converges quadratically in the concave basin
    around the guess; if the curvature flips sign along the way (the
    exponent need not be globally concave) an expanding grid search on the
    objective itself takes over, refined by a bounded golden search.
    """
    x = float(x0)
    for _ in range(steps):
        g1 = df(x)
        g2 = d2f(x)
        if not math.isfinite(g1) or not math.isfinite(g2) or g2 >= 0.0:
            break
        x_new = x - g1 / g2
        if abs(x_new - x) <= tol * (1.0 + abs(x)):
            if d2f(x_new) < 0.0 and f(x_new) >= f(x0):
                return x_new
            break
        x = x_new
    else:
        if d2f(x) < 0.0 and f(x) >= f(x0):
            return x
    from scipy.optimize import minimize_scalar

    span = 1.0 + abs(x0)
    for _ in range(60):
        grid = np.linspace(x0 - span, x0 + span, 81)
        vals = np.array([f(u) for u in grid])
        best = int(np.argmax(vals))
        if 0 < best < len(grid) - 1 and math.isfinite(vals[best]):
            res = minimize_scalar(
                lambda u: -f(u) if math.isfinite(f(u)) else 1e300,
                bounds=(grid[best - 1], grid[best + 1]),
                method="bounded",
                options={"xatol": 1e-12 * (1.0 + abs(grid[best]))},
            )
            return float(res.x)
        span *= 4.0
    raise QuadratureFailure(f"could not bracket an interior peak near {x0!r}")


def log_integral_peaked(
    logf, a, b, peak, width, policy: QuadraturePolicy = DEFAULT_POLICY
):
    """log ∫_a^b exp(logf(x)) dx with a known interior peak and width scale.

    QUADPACK refines adaptively; breakpoints seeded at the peak and a few
    widths out keep the spike from being skipped at small widths.
    """
    m = logf(peak)
    require_finite(m, "peak log-integrand")
    if m == _LOG_ZERO:
        return _LOG_ZERO

    def shifted(x):
        v = logf(x) - m
        return math.exp(v) if v > -745.0 else 0.0

    pts = []
    for k in (-16.0, -4.0, -1.0, 0.0, 1.0, 4.0, 16.0):
        p = peak + k * width
        if a < p < b:
            pts.append(p)
    pts = sorted(set(pts))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        val, err, info, *rest = quad(
            shifted,
            a,
            b,
            points=pts or None,
            limit=policy.quad_limit,
            epsabs=0.0,
            epsrel=max(policy.rel_tol, 1e-13),
            full_output=1,
        ) + (None,) * 0
    if val <= 0.0:
        return _LOG_ZERO
    if err > 1e4 * policy.rel_tol * abs(val):
        raise QuadratureFailure(
            f"peaked integral error {err:.3e} exceeds tolerance "
            f"(value {val:.3e}, window [{a:.3g}, {b:.3g}])"
        )
    return m + math.log(val)


def log_integral_whole_line(
    logf, dlogf, d2logf, x_guess, policy: QuadraturePolicy = DEFAULT_POLICY
):
    """log ∫_R exp(logf) dx for a single-peak exponent on the whole line.

    The maximizer is located by Newton from ``x_guess`` and the window is
    maximizer +- window_halfwidth standard widths, wide enough that the
    truncated tails are below the relative tolerance.
    """
    x_star = locate_peak(logf, dlogf, d2logf, x_guess, steps=policy.newton_steps)
    curv = d2logf(x_star)
    if not math.isfinite(curv) or curv >= 0.0:
        raise QuadratureFailure(
            f"no negative curvature at located peak x={x_star:.6g}"
        )
    width = 1.0 / math.sqrt(-curv)
    a = x_star - policy.window_halfwidth * width
    b = x_star + policy.window_halfwidth * width
    return log_integral_peaked(logf, a, b, x_star, width, policy)


def logsumexp_pair(la, lb):
    """log(exp(la) + exp(lb)) for extended reals."""
    if la == _LOG_ZERO:
        return lb
    if lb == _LOG_ZERO:
        return la
    m = max(la, lb)
    return m + math.log(math.exp(la - m) + math.exp(lb - m))


def gauss_legendre(order):
    """Cached Gauss-Legendre nodes/weights on [-1, 1]."""
    cached = _GL_CACHE.get(order)
    if cached is None:
        cached = np.polynomial.legendre.leggauss(order)
        _GL_CACHE[order] = cached
    return cached


_GL_CACHE: dict = {}


def composite_gl(fn, panels, order=40):
    """Composite Gauss-Legendre quadrature over breakpoints ``panels``.

    ``fn`` is evaluated pointwise (scalar in, scalar out).
    """
    x, w = gauss_legendre(order)
    total = 0.0
    for a, b in zip(panels[:-1], panels[1:]):
        mid = 0.5 * (a + b)
        half = 0.5 * (b - a)
        vals = np.array([fn(float(mid + half * xi)) for xi in x])
        total += half * float(np.dot(w, vals))
    return total
