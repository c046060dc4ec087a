"""Dirichlet L-functions of quadratic characters, zeta, and the symmetric square.

L(s, chi_D) for arbitrary complex s is computed by splitting n into
residue classes mod |D| and applying Euler-Maclaurin to each class tail
(a Hurwitz-zeta style evaluation).  At s = 1 a Gaussian-smoothed sum is
also available: for an odd character its smoothing error involves only
L(1-2k, chi) = 0, so it is accurate far beyond what the bare smoothing
length suggests.  The imprimitive symmetric square is evaluated as its
primitive part (Gaussian-smoothed, trivial zeros again killing the
leading error terms) times exact Euler factors at the bad primes.
"""
from __future__ import annotations

import math
import weakref
from dataclasses import dataclass

import numpy as np
from scipy.special import bernoulli

from . import arith, hecke

EULER_GAMMA = 0.57721566490153286
_EM_TERMS = 12
_B2J = np.array([float(b) for b in bernoulli(2 * _EM_TERMS)[2::2]])  # B_2, B_4, ...


@dataclass(frozen=True)
class LValueRequest:
    kind: str  # "dirichlet_chi", "sym2" or "zeta"
    argument: complex
    D: int | None = None
    removed_primes: tuple = ()
    smoothing_X: float | None = None

    def __post_init__(self):
        if self.kind not in ("dirichlet_chi", "sym2", "zeta"):
            raise ValueError(f"unknown L-value kind {self.kind!r}")
        if self.kind == "dirichlet_chi" and self.D is None:
            raise ValueError("dirichlet_chi needs a discriminant")


def _phi(z):
    """expm1(z)/z, stable near 0, for complex arrays."""
    z = np.asarray(z, dtype=complex)
    out = np.empty_like(z)
    small = np.abs(z) < 1e-2
    zs = z[small]
    out[small] = 1 + zs / 2 * (1 + zs / 3 * (1 + zs / 4 * (1 + zs / 5 * (1 + zs / 6))))
    zl = z[~small]
    out[~small] = (np.exp(zl) - 1) / zl
    return out


def _integral_term(s, a, la, q):
    # int_0^inf (a + k q)^-s dk = a^(1-s) / (q (s-1)).  Subtracting the
    # s-independent 1/(q (s-1)), which cancels because the weights sum to
    # zero, leaves -log(a) phi((1-s) log a) / q, finite at s = 1.
    return -(la * _phi((1 - s) * la)) / q


def _em_tail(s, starts, q, weights):
    """sum_r weights[r] sum_{k>=0} (starts[r] + k q)^-s by Euler-Maclaurin.

    ``weights`` must sum to zero (see _integral_term).  Vectorised over s.
    """
    s = s[:, None]
    a = starts[None, :].astype(float)
    la = np.log(a)
    f0 = np.exp(-s * la)
    total = _integral_term(s, a, la, q) + f0 / 2
    # f^(m)(0) = rising(-s, m) q^m a^(-s-m), with rising(-s, m) = (-s)(-s-1)...(-s-m+1)
    rising = -s  # m = 1
    ratio = q / a
    power = f0 * ratio
    for j in range(1, _EM_TERMS + 1):
        m = 2 * j - 1
        if j > 1:
            rising = rising * (-s - (m - 2)) * (-s - (m - 1))
            power = power * ratio * ratio
        total = total - _B2J[j - 1] / math.factorial(2 * j) * rising * power
    return (total * weights[None, :]).sum(axis=1)


def dirichlet_L(s, D: int, removed=(), chunk: int = 64):
    """L^(removed)(s, chi_D) for complex s (scalar or array)."""
    D = int(getattr(D, "D", D))
    scalar = np.ndim(s) == 0
    s = np.atleast_1d(np.asarray(s, dtype=complex))
    q = abs(D)
    chi = arith.kronecker_table(D, q - 1).astype(float) if q > 1 else np.ones(1)
    smax = float(np.abs(s).max()) if len(s) else 1.0
    K = max(4, int(math.ceil((smax + 2 * _EM_TERMS + 4) / math.pi)))
    n = np.arange(1, K * q)
    chin = np.resize(chi, K * q)[1:]
    keep = chin != 0
    n, chin = n[keep], chin[keep]
    ln = np.log(n)
    r = np.flatnonzero(chi)
    starts = K * q + r
    weights = chi[r]
    out = np.empty(len(s), dtype=complex)
    for i in range(0, len(s), chunk):
        sb = s[i : i + chunk]
        direct = np.exp(-np.outer(sb, ln)) @ chin
        out[i : i + chunk] = direct + _em_tail(sb, starts, q, weights)
    for p in removed:
        out *= 1 - arith.kronecker(D, p) * np.exp(-s * math.log(p))
    return complex(out[0]) if scalar else out


def L_chi_smoothed(s: complex, D: int, X: float | None = None, removed=()) -> complex:
    """sum chi_D(n) n^-s exp(-(n/X)^2), Euler factors at ``removed`` divided out.

    Exponentially accurate at s = 1 for odd chi_D with the default X; at
    other s the error is O(X^-2) and X must be raised accordingly.
    """
    D = int(getattr(D, "D", D))
    q = abs(D)
    if X is None:
        X = 3.0 * q + 30.0 if s == 1 else max(3.0 * q, 3e5)
    nmax = int(6.5 * X) + 1
    n = np.arange(1, nmax + 1)
    chi = arith.kronecker_table(D, nmax)[1:].astype(float)
    terms = chi * np.exp(-s * np.log(n) - (n / X) ** 2)
    val = complex(math.fsum(terms.real), math.fsum(terms.imag))
    for p in removed:
        val *= 1 - arith.kronecker(D, p) * p ** (-s)
    return val


def L_chi(s, D: int, removed=(), method: str = "hurwitz"):
    """L^(removed)(s, chi_D); ``method`` is 'hurwitz' or 'smoothed'."""
    if np.ndim(s) == 0 and np.real(s) < 0.9 and method == "smoothed":
        raise ValueError("series evaluation needs Re(s) >= 0.9")
    if method == "smoothed":
        return L_chi_smoothed(s, D, removed=removed)
    v = dirichlet_L(s, D, removed)
    if np.ndim(s) == 0 and np.imag(s) == 0:
        return float(np.real(v))
    return v


def L_chi_plain(s: float, D: int, n_max: int) -> float:
    n = np.arange(1, n_max + 1)
    chi = arith.kronecker_table(int(D), n_max)[1:].astype(float)
    return math.fsum(chi * n ** (-float(s)))


def L_chi_derivative(D: int, removed=(), method: str = "complex_step", X: float | None = None) -> float:
    """d/ds L^(removed)(s, chi_D) at s = 1.

    'complex_step' differentiates the Euler-Maclaurin evaluation along the
    imaginary axis (exact to rounding because L is real on the real line).
    'smoothed' uses exp(-n/X) smoothing with two Richardson steps in X.
    """
    D = int(getattr(D, "D", D))
    if method == "complex_step":
        h = 1e-30
        return float(dirichlet_L(1 + 1j * h, D, removed).imag / h)
    if method != "smoothed":
        raise ValueError(f"unknown method {method!r}")
    q = abs(D)
    X = X or max(1e3, 5.0 * q)
    vals = [_smoothed_derivative(D, X * 2 ** k, removed) for k in range(3)]
    # error expansion in powers of 1/X: kill the X^-1 and X^-2 terms
    r1 = [2 * vals[k + 1] - vals[k] for k in range(2)]
    return 4 / 3 * r1[1] - r1[0] / 3


def _smoothed_derivative(D, X, removed):
    nmax = int(40 * X) + 1
    n = np.arange(1, nmax + 1, dtype=float)
    chi = arith.kronecker_table(D, nmax)[1:].astype(float)
    ln = np.log(n)
    w = chi / n * np.exp(-n / X)
    L = math.fsum(w)
    dL = -math.fsum(w * ln)
    for p in removed:
        c = arith.kronecker(D, p)
        e = 1 - c / p
        dL = dL * e + L * c * math.log(p) / p
        L = L * e
    return dL


def class_number_value(h: int, w: int, D: int) -> float:
    """2 pi h / (w sqrt|D|)."""
    return 2 * math.pi * h / (w * math.sqrt(abs(D)))


# ---------------------------------------------------------------------------
# S(X, alpha)

def S_X_alpha(X: float, D: int, tol: float = 1e-16) -> float:
    """sum_n tau(n)/n exp(-n/X) by direct summation over n <= X log(1/tol)."""
    from .classfield import tau_table

    if X <= 0:
        raise ValueError("X must be positive")
    nmax = max(1, int(X * math.log(1 / tol)) + 1)
    t = tau_table(int(D), nmax)[1:]
    n = np.arange(1, nmax + 1, dtype=float)
    return math.fsum(t / n * np.exp(-n / X))


def S_X_alpha_asymptotic(X: float, D: int) -> float:
    """L(1) log X + L'(1) + L(0)/(2X), the pole contributions of the Mellin form.

    With Gamma(w) zeta(1+w) = 1/w^2 + O(1) the Euler constants cancel, and
    the pole of Gamma at w = -1 contributes -zeta(0) L(0, chi) / X.  Further
    poles meet trivial zeros of zeta or L, so the remainder is tiny.
    """
    from .classfield import class_number

    L1 = L_chi(1.0, D)
    dL = L_chi_derivative(D)
    w = {-3: 6, -4: 4}.get(int(D), 2)
    L0 = 2.0 * class_number(int(D)) / w
    return L1 * math.log(X) + dL + L0 / (2 * X)


# ---------------------------------------------------------------------------
# zeta

def zeta(s):
    """Riemann zeta by Euler-Maclaurin, complex s away from 1."""
    scalar = np.ndim(s) == 0
    s = np.atleast_1d(np.asarray(s, dtype=complex))
    smax = float(np.abs(s).max())
    M = max(10, int(math.ceil((smax + 2 * _EM_TERMS + 4) / math.pi)))
    n = np.arange(1, M)
    direct = np.exp(-np.outer(s, np.log(n))).sum(axis=1)
    a = float(M)
    f0 = np.exp(-s * math.log(a))
    total = a * f0 / (s - 1) + f0 / 2
    rising = -s
    power = f0 / a
    for j in range(1, _EM_TERMS + 1):
        m = 2 * j - 1
        if j > 1:
            rising = rising * (-s - (m - 2)) * (-s - (m - 1))
            power = power / (a * a)
        total = total - _B2J[j - 1] / math.factorial(2 * j) * rising * power
    out = direct + total
    if scalar:
        v = out[0]
        return float(v.real) if v.imag == 0 else complex(v)
    return out


def zeta_value(s: float) -> float:
    if s <= 1:
        raise ValueError("zeta_value needs s > 1")
    return float(np.real(zeta(float(s))))


def zeta_log_derivative(s: float) -> float:
    h = 1e-30
    z = zeta(complex(s, h))
    return float((z.imag / h) / z.real)


# ---------------------------------------------------------------------------
# symmetric square

SYM2_CONVENTION = "imprimitive"


def _sym2_primitive_local(table: hecke.EigenvalueTable, nmax: int) -> tuple[np.ndarray, np.ndarray]:
    keep = table.primes <= nmax
    primes, ap = table.primes[keep], table.ap[keep]
    kmax = max(1, int(math.log2(max(nmax, 2)))) + 1
    ap2 = ap.astype(float) ** 2 / primes
    e1 = ap2 - 1.0
    bad = np.array([table.conductor % int(p) == 0 for p in primes], dtype=bool)
    local = np.zeros((len(primes), kmax + 1))
    local[:, 0] = 1.0
    for k in range(1, kmax + 1):
        c1 = local[:, k - 1]
        c2 = local[:, k - 2] if k >= 2 else 0.0
        c3 = local[:, k - 3] if k >= 3 else 0.0
        local[:, k] = np.where(bad, ap2 * c1, e1 * c1 - e1 * c2 + c3)
    return primes, local


_SYM2_CACHE: "weakref.WeakKeyDictionary" = weakref.WeakKeyDictionary()


def sym2_primitive_coefficients(table: hecke.EigenvalueTable, nmax: int) -> np.ndarray:
    """Coefficients of the primitive symmetric square up to nmax (memoised per table)."""
    if nmax > table.N_max:
        raise ValueError(f"table depth {table.N_max} too small, need N_max >= {nmax}")
    per_table = _SYM2_CACHE.setdefault(table, {})
    if nmax not in per_table:
        primes, local = _sym2_primitive_local(table, nmax)
        per_table[nmax] = arith.multiplicative(nmax, primes, local, dtype=float)
    return per_table[nmax]


def sym2_bad_factor(s, table: hecke.EigenvalueTable):
    """Product over bad p of (1 - p^-2s)^-1: imprimitive / primitive."""
    s = np.asarray(s, dtype=complex)
    out = np.ones_like(s)
    for p in arith.prime_factors(table.conductor):
        out = out / (1 - np.exp(-2 * s * math.log(p)))
    return out


def _sym2_gauss(s, table, X):
    nmax = int(6.5 * X)
    c = sym2_primitive_coefficients(table, nmax)[1:]
    n = np.arange(1, nmax + 1, dtype=float)
    keep = c != 0
    n, c = n[keep], c[keep]
    weight = c * np.exp(-(n / X) ** 2)
    ln = np.log(n)
    out = np.empty(len(s), dtype=complex)
    for i, si in enumerate(s):
        terms = weight * np.exp(-si * ln)
        out[i] = complex(math.fsum(terms.real), math.fsum(terms.imag))
    return out


def sym2_L(s, table: hecke.EigenvalueTable, X: float = 2e4, richardson: bool = True):
    """Imprimitive L(s, sym^2 f) for complex s near 1 (vectorised).

    The Gaussian-smoothed primitive sum has error sum_k (-1)^k/k! L(s-2k) X^-2k;
    with ``richardson`` the X^-2 term is eliminated using X and 2X, which
    needs the table to reach 13 X.
    """
    scalar = np.ndim(s) == 0
    s = np.atleast_1d(np.asarray(s, dtype=complex))
    if richardson:
        out = (4 * _sym2_gauss(s, table, 2 * X) - _sym2_gauss(s, table, X)) / 3
    else:
        out = _sym2_gauss(s, table, X)
    out = out * sym2_bad_factor(s, table)
    return complex(out[0]) if scalar else out


def sym2_depth(X: float = 2e4, richardson: bool = True) -> int:
    """Table depth needed by sym2_L with these settings."""
    return int(6.5 * X * (2 if richardson else 1))


def sym2_value(s: float, table: hecke.EigenvalueTable, X: float = 2e4, richardson: bool = True) -> float:
    """Imprimitive L(s, sym^2 f) for real 0.95 <= s <= 1.3."""
    if not 0.95 <= s <= 1.3:
        raise ValueError("sym2_value is meant for 0.95 <= s <= 1.3")
    need = sym2_depth(X, richardson)
    if table.N_max < need:
        raise ValueError(f"table depth {table.N_max} too small, need N_max >= {need}")
    return float(sym2_L(float(s), table, X, richardson).real)


def sym2_plain(s: float, table: hecke.EigenvalueTable, n_max: int) -> float:
    """Partial sum of the imprimitive coefficient series (absolutely convergent for s > 1)."""
    c = hecke.sym2_coefficients(table, n_max)[1:]
    n = np.arange(1, n_max + 1, dtype=float)
    return math.fsum(c * n ** (-float(s)))


def sym2_log_derivative(s: float, table: hecke.EigenvalueTable, X: float = 2e4) -> float:
    h = 1e-30
    v = sym2_L(complex(s, h), table, X)
    return float((v.imag / h) / v.real)
