"""Inverse Mellin smoothing kernels on vertical lines.

The base kernel is

    V(x) = 1/(4 pi i) int_(sigma) G(s) x^-s ds / s^2,
    G(s) = Gamma(s+1)^d Gamma(s+2)^d cos(pi s / 200)^-200 (2 pi)^(-2 d s),

and W multiplies the integrand by the partial Dirichlet L-function
L^(N)(2s+1, chi_D).  Integrals are computed by the trapezoid rule in
t = Im s, which converges geometrically for these analytic integrands.

Three evaluation routes exist for V:

* a literal line at a user-given abscissa (used to test contour independence),
* for x < 0.1, the double-pole residue plus a line at Re s = -1/2, which avoids
  the x^-sigma blow-up that ruins accuracy on lines to the right,
* for 0.1 <= x < 1, a line at Re s = 1,
* for x >= 1, a line through the approximate saddle of |G(s) x^-s|.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Callable, Iterable

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.special import loggamma

LEFT_SIGMA = -0.5
MID_SIGMA = 1.0
RESIDUE_BELOW = 0.1
LOG_2PI = math.log(2 * math.pi)


@dataclass(frozen=True)
class KernelSpec:
    """Parameters of the smoothing kernels.

    ``sigma`` and ``T`` may be left as None to be chosen automatically.
    ``gamma_shift`` moves both gamma factors, so -0.5 gives
    Gamma(s+1/2) Gamma(s+3/2).
    """

    cos_exponent: int = 200
    cos_scale: float = 200.0
    sigma: float | None = None
    T: float | None = None
    dt: float = 0.02
    degree: int = 1
    gamma_shift: float = 0.0

    def __post_init__(self):
        if self.sigma is not None:
            if self.sigma <= 0:
                raise ValueError("sigma must be positive")
            if abs(self.sigma) >= self.cos_scale / 2:
                raise ValueError("sigma must stay left of the first cosine pole")
        if self.T is not None and self.T <= 0:
            raise ValueError("T must be positive")
        if self.dt <= 0:
            raise ValueError("dt must be positive")

    def with_sigma(self, sigma: float) -> "KernelSpec":
        return replace(self, sigma=sigma)


DEFAULT_SPEC = KernelSpec()


class KernelError(ValueError):
    pass


def log_G(s, spec: KernelSpec = DEFAULT_SPEC):
    """log of the archimedean bundle G(s), principal branch, vectorised."""
    s = np.asarray(s, dtype=complex)
    d = spec.degree
    sh = spec.gamma_shift
    out = d * (loggamma(s + 1 + sh) + loggamma(s + 2 + sh))
    out = out - spec.cos_exponent * np.log(np.cos(np.pi * s / spec.cos_scale))
    return out - 2 * d * LOG_2PI * s


def G(s, spec: KernelSpec = DEFAULT_SPEC):
    return np.exp(log_G(s, spec))


def G_taylor0(spec: KernelSpec = DEFAULT_SPEC) -> tuple[float, float]:
    """(G(0), G'(0)) in closed form."""
    from scipy.special import digamma, gamma

    sh = spec.gamma_shift
    d = spec.degree
    g0 = (gamma(1 + sh) * gamma(2 + sh)) ** d
    dlog = d * (digamma(1 + sh) + digamma(2 + sh)) - 2 * d * LOG_2PI
    return float(g0), float(g0 * dlog)


def V_residue(x, spec: KernelSpec = DEFAULT_SPEC):
    """Contribution of the double pole at s = 0: (G'(0) - G(0) log x) / 2."""
    g0, g1 = G_taylor0(spec)
    return 0.5 * (g1 - g0 * np.log(x))


def small_x_law(spec: KernelSpec = DEFAULT_SPEC) -> tuple[float, float]:
    """(R0, R1) with V(x) = R1 - R0 log x + o(1) as x -> 0."""
    g0, g1 = G_taylor0(spec)
    return 0.5 * g0, 0.5 * g1


# ---------------------------------------------------------------------------
# line integrals

def _tgrid(sigma: float, spec: KernelSpec, extra_decay: float = 0.0) -> np.ndarray:
    """Uniform t-grid on [0, T] reaching far enough that the integrand is negligible."""
    if spec.T is not None:
        T = spec.T
    else:
        probe = np.arange(0.0, 400.0, 0.25)
        s = sigma + 1j * probe
        mag = np.real(log_G(s, spec)) - 2 * np.log(np.abs(s)) + extra_decay * probe
        cut = mag.max() - 48.0
        above = np.flatnonzero(mag > cut)
        T = probe[above[-1]] + 1.0 if len(above) else 10.0
    n = int(math.ceil(T / spec.dt))
    return np.arange(n + 1) * spec.dt


def _line_integral(xs, sigma: float, spec: KernelSpec, extra: Callable | None = None,
                   chunk: int = 256) -> np.ndarray:
    """(1/4 pi i) int_(sigma) G(s) extra(s) x^-s ds/s^2 for each x, real part."""
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    t = _tgrid(sigma, spec)
    s = sigma + 1j * t
    logint = log_G(s, spec) - 2 * np.log(s)
    if extra is not None:
        logint = logint + np.log(extra(s))
    w = np.full(len(t), spec.dt)
    w[0] *= 0.5
    w[-1] *= 0.5
    out = np.empty(len(xs))
    lx = np.log(xs)
    for i in range(0, len(xs), chunk):
        block = lx[i : i + chunk, None]
        terms = np.exp(logint[None, :] - s[None, :] * block)
        out[i : i + chunk] = (terms.real * w).sum(axis=1) / (2 * np.pi)
    return out


@lru_cache(maxsize=64)
def _sigma_grid_envelope(spec: KernelSpec) -> tuple[np.ndarray, np.ndarray]:
    """sigma grid and log B(sigma), B = (1/2pi) int_0^inf |G(s)/s^2| dt."""
    sigmas = np.arange(0.25, min(90.0, spec.cos_scale / 2 - 5), 0.25)
    logB = np.empty(len(sigmas))
    for i, sg in enumerate(sigmas):
        t = _tgrid(sg, replace(spec, T=None, dt=0.05))
        s = sg + 1j * t
        lm = np.real(log_G(s, spec)) - 2 * np.log(np.abs(s))
        top = lm.max()
        logB[i] = top + math.log(np.exp(lm - top).sum() * 0.05 / (2 * np.pi))
    return sigmas, logB


def auto_sigma(x: float, spec: KernelSpec = DEFAULT_SPEC) -> float:
    """Abscissa minimising the integrand envelope B(sigma) x^-sigma."""
    sigmas, logB = _sigma_grid_envelope(replace(spec, sigma=None))
    k = int(np.argmin(logB - sigmas * math.log(x)))
    return float(sigmas[k])


def V_envelope(x, spec: KernelSpec = DEFAULT_SPEC):
    """Rigorous-in-exact-arithmetic bound |V(x)| <= min_sigma B(sigma) x^-sigma."""
    sigmas, logB = _sigma_grid_envelope(replace(spec, sigma=None))
    x = np.atleast_1d(np.asarray(x, dtype=float))
    vals = np.exp((logB[None, :] - np.outer(np.log(x), sigmas)).min(axis=1))
    return vals


def V(x, spec: KernelSpec = DEFAULT_SPEC, sigma: float | None = None):
    """The kernel V at x > 0 (scalar or array).

    With an explicit ``sigma`` (or ``spec.sigma``) the literal line integral
    is returned.  Otherwise the route is chosen per x as described in the
    module docstring.
    """
    scalar = np.ndim(x) == 0
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    if (xs <= 0).any():
        raise ValueError("V needs x > 0")
    sigma = spec.sigma if sigma is None else sigma
    if sigma is not None:
        KernelSpec(**{**spec.__dict__, "sigma": sigma})  # validate
        out = _line_integral(xs, sigma, spec)
    else:
        out = np.empty(len(xs))
        left = xs < RESIDUE_BELOW
        if left.any():
            out[left] = V_residue(xs[left], spec) + _line_integral(xs[left], LEFT_SIGMA, spec)
        mid = (xs >= RESIDUE_BELOW) & (xs < 1.0)
        if mid.any():
            out[mid] = _line_integral(xs[mid], MID_SIGMA, spec)
        right = np.flatnonzero(xs >= 1.0)
        if len(right):
            sig = np.array([auto_sigma(v, spec) for v in xs[right]])
            for sg in np.unique(sig):
                idx = right[sig == sg]
                out[idx] = _line_integral(xs[idx], float(sg), spec)
    return float(out[0]) if scalar else out


def quadrature_error_estimate(x: float, spec: KernelSpec = DEFAULT_SPEC, sigma: float | None = None) -> float:
    """|V(x; dt) - V(x; dt/2)|, a practical measure of discretisation error."""
    a = V(x, spec, sigma)
    b = V(x, replace(spec, dt=spec.dt / 2), sigma)
    return abs(a - b)


def V_checked(x: float, tol: float, spec: KernelSpec = DEFAULT_SPEC, sigma: float | None = None) -> float:
    """V(x), raising KernelError if (T, dt) cannot reach the tolerance."""
    err = quadrature_error_estimate(x, spec, sigma)
    if err > tol:
        raise KernelError(f"tolerance {tol:.1e} not reached with dt={spec.dt}, T={spec.T}; "
                          f"achievable about {err:.1e}")
    return V(x, spec, sigma)


# ---------------------------------------------------------------------------
# W

def _check_w_sigma(sigma: float) -> None:
    if not 2 * sigma + 1 > 1.2:
        raise ValueError(f"W needs Re(2 sigma + 1) > 1.2, got sigma={sigma}")


def W(x, D: int, conductor: int, spec: KernelSpec = DEFAULT_SPEC, sigma: float = 3.0,
      lfactor: bool = True):
    """1/(4 pi i) int_(sigma) L^(N)(2s+1, chi_D) G(s) x^-s ds/s^2.

    With ``lfactor=False`` the L-function is replaced by 1 and W reduces to
    the V-type kernel of the same spec.
    """
    from . import arith, lseries

    sigma = spec.sigma if spec.sigma is not None else sigma
    _check_w_sigma(sigma)
    scalar = np.ndim(x) == 0
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    if lfactor:
        removed = tuple(arith.prime_factors(conductor))
        extra = lambda s: lseries.dirichlet_L(2 * s + 1, D, removed)  # noqa: E731
    else:
        extra = None
    out = _line_integral(xs, sigma, spec, extra)
    return float(out[0]) if scalar else out


def W_direct(x: float, D: int, conductor: int, spec: KernelSpec = DEFAULT_SPEC,
             b_max: int | None = None) -> float:
    """sum_{(b,N)=1} chi_D(b)/b V(x b^2), truncated where V is negligible."""
    from . import arith

    if b_max is None:
        b_max = max(1, int(math.sqrt(60.0 / x)) + 1)
    b = np.arange(1, b_max + 1)
    chi = arith.kronecker_table(int(D), b_max)[1:].astype(float)
    for p in arith.prime_factors(conductor):
        chi[b % p == 0] = 0.0
    keep = chi != 0
    vals = V(x * b[keep] ** 2.0, spec)
    return math.fsum(chi[keep] / b[keep] * vals)


# ---------------------------------------------------------------------------
# residues

FactorBundle = Callable | Iterable


def _as_factor_list(factors) -> list[tuple[str, Callable]]:
    if callable(factors):
        return [(getattr(factors, "__name__", "bundle"), factors)]
    if isinstance(factors, dict):
        return list(factors.items())
    out = []
    for i, item in enumerate(factors):
        if callable(item):
            out.append((getattr(item, "__name__", f"factor{i}"), item))
        else:
            out.append((str(item[0]), item[1]))
    return out


def evaluate_bundle(factors, s) -> np.ndarray:
    """Product of the bundle's factors at s, naming any factor that fails."""
    s = np.asarray(s, dtype=complex)
    total = np.ones_like(s)
    for name, fn in _as_factor_list(factors):
        try:
            v = np.asarray(fn(s), dtype=complex)
        except Exception as exc:
            raise ArithmeticError(f"factor '{name}' failed near s=0: {exc}") from exc
        if not np.all(np.isfinite(v)):
            raise ArithmeticError(f"factor '{name}' is not finite near s=0")
        total = total * v
    return total


def residue_at_zero(factors, h: float = 1e-3) -> tuple[float, float]:
    """(F(0), F'(0)) for the product F of the given factors.

    The integral (1/2 pi i) int F(s) x^-s ds/s^2 has residue
    F'(0) - F(0) log x at the double pole.  F'(0) is a central difference
    with one Richardson step.
    """
    s = np.array([0.0, h, -h, h / 2, -h / 2])
    v = evaluate_bundle(factors, s)
    d1 = (v[1] - v[2]) / (2 * h)
    d2 = (v[3] - v[4]) / h
    return float(v[0].real), float(((4 * d2 - d1) / 3).real)


def residue_circle(factors, radius: float = 0.125, nodes: int = 64) -> tuple[float, float]:
    """(F(0), F'(0)) by trapezoidal Cauchy integrals on a small circle."""
    k = np.arange(nodes)
    z = radius * np.exp(2j * np.pi * k / nodes)
    v = evaluate_bundle(factors, z)
    return float(v.mean().real), float((v / z).mean().real)


# ---------------------------------------------------------------------------
# cached kernel

class KernelValueCache:
    """Cubic spline of V(e^u) on a uniform grid in u = log x.

    Below the grid the residue route is used directly; above it V is
    evaluated by quadrature (it is already below 1e-20 there by default).
    """

    def __init__(self, spec: KernelSpec = DEFAULT_SPEC, x_min: float = 1e-8, x_max: float = 40.0,
                 step: float = 0.005):
        self.spec = replace(spec, sigma=None)
        self.x_min, self.x_max, self.step = x_min, x_max, step
        n = int(math.ceil((math.log(x_max) - math.log(x_min)) / step))
        self.u = math.log(x_min) + step * np.arange(n + 1)
        self.values = V(np.exp(self.u), self.spec)
        self.spline = CubicSpline(self.u, self.values)
        self.values.setflags(write=False)

    def __call__(self, x):
        scalar = np.ndim(x) == 0
        xs = np.atleast_1d(np.asarray(x, dtype=float))
        u = np.log(xs)
        out = np.empty(len(xs))
        mid = (u >= self.u[0]) & (u <= self.u[-1])
        out[mid] = self.spline(u[mid])
        rest = ~mid
        if rest.any():
            out[rest] = V(xs[rest], self.spec)
        return float(out[0]) if scalar else out

    def max_interp_error(self, samples: int = 400) -> float:
        """Largest |spline - direct| at grid midpoints (dyadic refinement)."""
        idx = np.linspace(0, len(self.u) - 2, samples).astype(int)
        mids = self.u[idx] + self.step / 2
        direct = V(np.exp(mids), self.spec)
        return float(np.abs(self.spline(mids) - direct).max())


@lru_cache(maxsize=8)
def kernel_cache(spec: KernelSpec = DEFAULT_SPEC) -> KernelValueCache:
    return KernelValueCache(spec)
