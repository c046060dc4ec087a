"""Dirichlet series of Hecke eigenvalues along a quadratic sequence.

    D_f(s; P) = sum_{gamma in Z} lambda(P(gamma)) / P(gamma)^s,   P(x) = x^2 + a x + b,

evaluated by a symmetric scan |gamma + a/2| <= G in the region of absolute
convergence.  The discarded tail is bounded with |lambda(n)| <= d(n) <= C(eps) n^eps.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.special import gamma as gamma_fn

from . import arith

THETA = 7 / 64
MIN_SIGMA = 0.75
_EPS_GRID = (0.05, 0.075, 0.1, 0.125, 0.15, 0.2, 0.25, 0.3, 0.4)


class DepthError(ValueError):
    """The eigenvalue table is too short; ``needed`` is the depth required."""

    def __init__(self, needed: int, have: int):
        super().__init__(f"table depth {have} is too small, need N_max >= {needed}")
        self.needed = needed
        self.have = have


@dataclass(frozen=True)
class QuadPoly:
    a: int
    b: int

    def __post_init__(self):
        if self.D_shift <= 0:
            raise ValueError(f"x^2 + {self.a}x + {self.b} is not positive definite")

    @property
    def D_shift(self) -> Fraction:
        return Fraction(self.b) - Fraction(self.a * self.a, 4)

    def __call__(self, g):
        return g * g + self.a * g + self.b

    def gammas(self, G: float) -> np.ndarray:
        """Integers gamma with |gamma + a/2| <= G, ascending."""
        lo = math.ceil(-G - self.a / 2)
        hi = math.floor(G - self.a / 2)
        return np.arange(lo, hi + 1, dtype=np.int64)

    def radius_for(self, n_max: int) -> float:
        """Largest G with P(gamma) <= n_max on the whole scan window."""
        room = n_max - float(self.D_shift)
        if room < 0:
            raise DepthError(int(math.ceil(self.D_shift)) + 1, n_max)
        return math.sqrt(room)


@dataclass(frozen=True)
class MockTable:
    """lambda(n) = scale for every n >= 1, with no depth limit."""

    scale: float = 1.0
    N_max: float = math.inf
    label: str = "mock"

    def lam_values(self, n: np.ndarray) -> np.ndarray:
        return np.full(np.shape(n), self.scale, dtype=float)


def lam_values(table, n: np.ndarray) -> np.ndarray:
    if isinstance(table, MockTable):
        return table.lam_values(n)
    top = int(n.max()) if len(n) else 0
    if top > table.N_max:
        raise DepthError(top, table.N_max)
    return table.lam[n]


def coeff_bound_scale(table) -> float:
    """Factor c with |lambda(n)| <= c d(n) for the table."""
    return abs(table.scale) if isinstance(table, MockTable) else 1.0


@dataclass(frozen=True)
class QuadSeriesPoint:
    poly: QuadPoly
    s: complex
    value: complex
    truncation: float
    tail_bound: float
    terms: int = field(default=0, compare=False)


def tail_bound(poly: QuadPoly, sigma: float, G: float, scale: float = 1.0) -> float:
    """Bound for sum over |gamma + a/2| > G of d(P)/P^sigma, times ``scale``.

    With t = |gamma + a/2| one has P >= t^2, so each side is at most
    C(eps) (G^-k + int_G^inf t^-k dt) with k = 2 (sigma - eps) > 1.
    """
    best = math.inf
    for eps in _EPS_GRID:
        k = 2 * (sigma - eps)
        if k <= 1:
            continue
        C = arith.divisor_bound_constant(eps)
        side = G ** (-k) + G ** (1 - k) / (k - 1)
        best = min(best, 2 * C * side)
    return scale * best


def _terms(table, poly: QuadPoly, s: complex, G: float):
    g = poly.gammas(G)
    P = poly(g)
    order = np.argsort(P, kind="stable")
    P = P[order]
    lam = lam_values(table, P)
    if np.imag(s) == 0:
        t = lam * np.exp(-float(np.real(s)) * np.log(P.astype(float)))
    else:
        t = lam * np.exp(-complex(s) * np.log(P.astype(float)))
    return P, t


def _csum(t: np.ndarray) -> complex:
    if np.iscomplexobj(t):
        return complex(math.fsum(t.real), math.fsum(t.imag))
    return math.fsum(t)


def default_radius(table, poly: QuadPoly, sigma: float, tol: float = 1e-12, cap: float = 2e6) -> float:
    if isinstance(table, MockTable):
        G = 64.0
        while G < cap and tail_bound(poly, sigma, G, coeff_bound_scale(table)) > tol:
            G *= 2
        return min(G, cap)
    return poly.radius_for(table.N_max)


def series_eval(table, poly: QuadPoly, s: complex, G: float | None = None) -> QuadSeriesPoint:
    """D_f(s; P) by a symmetric scan of radius G (default: the table depth)."""
    sigma = float(np.real(s))
    if sigma <= MIN_SIGMA:
        raise ValueError(f"Re(s) = {sigma} is outside the convergence region Re(s) > {MIN_SIGMA}")
    if G is None:
        G = default_radius(table, poly, sigma)
    P, t = _terms(table, poly, s, G)
    val = _csum(t)
    if np.imag(s) == 0:
        val = float(np.real(val))
    return QuadSeriesPoint(poly, s, val, G, tail_bound(poly, sigma, G, coeff_bound_scale(table)), len(t))


def divisor_majorant(poly: QuadPoly, sigma: float, G: float) -> float:
    """sum_{|gamma + a/2| <= G} d(P(gamma)) / P(gamma)^sigma."""
    g = poly.gammas(G)
    P = np.sort(poly(g))
    d = arith.divisor_table(int(P.max()))[P]
    return math.fsum(d * np.exp(-sigma * np.log(P.astype(float))))


def epstein_comparison(s: float, b: float) -> float:
    """int_R (x^2 + b)^-s dx = sqrt(pi) Gamma(s - 1/2) / Gamma(s) * b^(1/2 - s)."""
    return math.sqrt(math.pi) * gamma_fn(s - 0.5) / gamma_fn(s) * b ** (0.5 - s)


def reference_slope(s: float, theta: float = THETA) -> float:
    return 0.5 - s - (1 - 2 * theta) / 16


@dataclass(frozen=True)
class ExponentFit:
    s: float
    b: np.ndarray
    values: np.ndarray
    slope: float
    intercept: float
    residuals: np.ndarray
    reference_slope: float
    epstein_slope: float
    truncation: float
    tail_bounds: np.ndarray


def exponent_fit(table, s: float, b_list, G: float | None = None) -> ExponentFit:
    """Least-squares slope of log|D_f(s; x^2 + b)| against log b.

    All b share one truncation radius, so the fit is not biased by
    b-dependent cutoffs.
    """
    bs = np.array(sorted(set(int(b) for b in b_list)), dtype=np.int64)
    if len(bs) < 5:
        raise ValueError(f"need at least 5 distinct b values to fit, got {len(bs)}")
    if bs.min() < 1:
        raise ValueError("b must be positive")
    if G is None:
        if isinstance(table, MockTable):
            G = default_radius(table, QuadPoly(0, int(bs.min())), s)
        else:
            G = QuadPoly(0, int(bs.max())).radius_for(table.N_max)
    pts = [series_eval(table, QuadPoly(0, int(b)), s, G) for b in bs]
    vals = np.array([p.value for p in pts], dtype=float)
    ok = np.abs(vals) > 0
    if ok.sum() < 5:
        raise ValueError("fewer than 5 nonzero values to fit")
    x, y = np.log(bs[ok].astype(float)), np.log(np.abs(vals[ok]))
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    return ExponentFit(s, bs, vals, float(slope), float(intercept), resid, reference_slope(s), 0.5 - s, G,
                       np.array([p.tail_bound for p in pts]))


def log_spaced_b(lo: int, hi: int, count: int) -> list[int]:
    return sorted(set(int(round(v)) for v in np.geomspace(lo, hi, count)))


# ---------------------------------------------------------------------------
# theta series and the unfolding identity

def theta_shift_coeffs(beta: int, N_max: int) -> dict[int, int]:
    """n -> #{alpha in Z : (beta + 2 alpha)^2 = n} for 0 <= n <= N_max (nonzero entries)."""
    if N_max < 1:
        raise ValueError("N_max must be at least 1")
    out: dict[int, int] = {}
    r = math.isqrt(N_max)
    for m in range(-r, r + 1):
        if (m - beta) % 2 == 0:
            out[m * m] = out.get(m * m, 0) + 1
    return dict(sorted(out.items()))


def _fourier_side(table, poly: QuadPoly, s: float, G: float, scale: float, du: float = 0.02) -> float:
    """c^(s+1/4) int_0^inf F(c y) y^(s+1/4) dy/y with F(y) = sum_gamma a(P) e^(-16 pi P y).

    a(n) = lambda(n) sqrt(n) are the weight-2 Fourier coefficients.  The
    integral is a trapezoid rule in u = log y, which converges
    geometrically for this doubly-exponentially decaying integrand.
    """
    P, _ = _terms(table, poly, s, G)
    Pf = P.astype(float)
    coef = lam_values(table, P) * np.sqrt(Pf)
    k = s + 0.25
    # window: the integrand is negligible outside [lo, hi] in u
    hi = math.log(60.0 / (16 * math.pi * scale * Pf[0]))
    lo = math.log(1e-40 ** (1 / k)) - math.log(scale)
    u = np.arange(lo, hi + du, du)
    y = scale * np.exp(u)
    F = np.empty(len(u))
    for i in range(len(u)):
        z = 16 * math.pi * y[i] * Pf
        keep = z < 745.0
        F[i] = math.fsum(coef[keep] * np.exp(-z[keep]))
    return scale ** k * math.fsum(F * np.exp(k * u)) * du


def unfolding_check(table, poly: QuadPoly, s: float, scale: float = 1.0, G: float = 400.0) -> float:
    """Relative residual of the unfolded Mellin identity at real s >= 2.5.

    Left: the y-integral of the Fourier expansion, done numerically.
    Right: Gamma(s + 1/4) (16 pi)^-(s + 1/4) D_f(s - 1/4; P), the term-wise
    evaluation of the same integral.  Both use the same gamma window.
    """
    if s < 2.5:
        raise ValueError("unfolding check needs s >= 2.5 for absolute convergence")
    left = _fourier_side(table, poly, s, G, scale)
    right = gamma_fn(s + 0.25) * (16 * math.pi) ** (-(s + 0.25)) * series_eval(table, poly, s - 0.25, G).value
    if not (math.isfinite(left) and math.isfinite(right)) or right == 0:
        raise ArithmeticError("unfolding integral did not converge")
    return abs(left - right) / abs(right)
