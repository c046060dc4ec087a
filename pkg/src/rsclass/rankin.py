"""Character averages of Rankin-Selberg central derivatives.

For a newform f of conductor N with root number -1 and an admissible
discriminant D, each class group character chi gives

    L'(chi) = kappa * sum_a lambda(a) r_chi(a) / sqrt(a) * K(a),
    K(a)    = sum_{(b,N)=1} chi_D(b) / b * V(a b^2 / Q),     Q = |D| N.

The average over chi is computed twice: directly from per-character values
and, after orthogonality, as a sum over the lattice of the principal form.
That lattice sum splits into S_main (y = 0) and S_0 (y != 0).  S_main is
also a contour integral whose residue at s = 0 is the main term r(f, D).

All sums are cut at a b^2 <= M = cutoff_mult * Q, and every path uses the
same cut, so the identities between paths hold to rounding error.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import arith, classfield, hecke, lseries, mellin

KAPPA = 2.0
KAPPA_CANDIDATES = {
    "half (bare prefactor of the displayed derivative formula)": 0.5,
    "contour consistency with the main-term integral": 2.0,
    "reflection of the completed L-function with root number -1": 4.0,
}
THETA = 7 / 64
SYM2_X = 2e4


@dataclass(frozen=True)
class TruncationParams:
    """Cutoffs for the double sums; M = cutoff_mult * |D| * N."""

    cutoff_mult: float = 16.0
    kernel: mellin.KernelSpec = field(default_factory=mellin.KernelSpec)
    explicit_max_h: int = 12
    tail_eps: tuple = (0.2, 0.25, 0.3, 0.35)

    def __post_init__(self):
        if not 1.0 <= self.cutoff_mult <= 64.0:
            raise ValueError("cutoff_mult must lie in [1, 64]")

    def cutoff(self, Q: int) -> int:
        return int(self.cutoff_mult * Q)


class AdmissibilityError(ValueError):
    pass


def check_admissible(curve: hecke.CurveSpec, D: int, force: bool = False) -> int:
    """Return eps(f) eps(f x chi_D); refuse +1 unless forced."""
    disc = classfield.as_disc(D)
    if math.gcd(disc.D, curve.conductor) != 1:
        raise AdmissibilityError(f"D={disc.D} is not coprime to the conductor {curve.conductor}")
    sign = hecke.twist_root_number(curve, disc.D) * curve.root_number
    if sign != -1 and not force:
        raise AdmissibilityError(f"D={disc.D}: eps(f) eps(f x chi_D) = +1, not admissible")
    return sign


# ---------------------------------------------------------------------------
# weights shared by every path

@dataclass(frozen=True, eq=False)
class Weights:
    """A(a) K(a) for 1 <= a <= M, plus the data it was built from."""

    D: int
    Q: int
    M: int
    w: np.ndarray = field(repr=False)  # index a, w[0] = 0
    table: hecke.EigenvalueTable = field(repr=False)


def b_kernel(D: int, conductor: int, Q: int, M: int, vfun) -> np.ndarray:
    """K(a) = sum_{(b,N)=1, a b^2 <= M} chi_D(b)/b V(a b^2/Q), 0 <= a <= M."""
    K = np.zeros(M + 1)
    bmax = math.isqrt(M)
    chi = arith.kronecker_table(int(D), bmax).astype(float)
    for p in arith.prime_factors(conductor):
        chi[::p] = 0.0
    for b in range(1, bmax + 1):
        if chi[b] == 0:
            continue
        amax = M // (b * b)
        a = np.arange(1, amax + 1, dtype=float)
        K[1 : amax + 1] += chi[b] / b * vfun(a * (b * b) / Q)
    return K


def build_weights(curve: hecke.CurveSpec, D: int, params: TruncationParams, cache_dir=None) -> Weights:
    disc = classfield.as_disc(D)
    Q = disc.absD * curve.conductor
    M = params.cutoff(Q)
    table = hecke.build_table(curve, max(M, lseries.sym2_depth(SYM2_X)), cache_dir)
    vfun = mellin.kernel_cache(params.kernel)
    K = b_kernel(disc.D, curve.conductor, Q, M, vfun)
    a = np.arange(M + 1, dtype=float)
    a[0] = 1.0
    A = table.lam[: M + 1] / np.sqrt(a)
    w = A * K
    w[0] = 0.0
    w.setflags(write=False)
    return Weights(disc.D, Q, M, w, table)


def _lattice_sum(weights: np.ndarray, vals: np.ndarray) -> float:
    return math.fsum(weights[np.sort(vals)])


# ---------------------------------------------------------------------------
# per-character values

def lprime_central(curve, D, chi: classfield.ClassCharacter, params: TruncationParams = TruncationParams(),
                   force: bool = False, weights: Weights | None = None) -> float:
    """kappa * sum_a lambda(a) r_chi(a)/sqrt(a) K(a) at matched truncation."""
    check_admissible(curve, D, force)
    G = classfield.class_group(int(classfield.as_disc(D).D))
    W_ = weights or build_weights(curve, D, params)
    r = classfield.r_chi(G, chi, W_.M).r
    val = KAPPA * complex(math.fsum((W_.w * r.real)), math.fsum(W_.w * r.imag))
    if abs(val.imag) > 1e-10 * max(1.0, abs(val.real)):
        raise ArithmeticError(f"non-real central derivative {val}")
    return val.real


def character_values(G: classfield.ClassGroupData, weights: Weights, explicit: bool) -> list[float]:
    """L'(chi) for every character of G, in characters(G) order."""
    chars = classfield.characters(G)
    if explicit:
        R = classfield.class_representation_table(G, weights.M)
        out = []
        for chi in chars:
            r = classfield.r_chi(G, chi, weights.M, R).r
            out.append(complex(math.fsum(weights.w * r.real), math.fsum(weights.w * r.imag)))
    else:
        # class sums T_C = (1/w) sum_n A(n) K(n) R_C(n), then L'(chi) = kappa sum_C chi(C) T_C
        T = np.array([
            _lattice_sum(weights.w, classfield.lattice_points(f, weights.M)[2]) / G.w
            for f in G.reduced_forms
        ])
        out = [complex(v) for v in (np.array([chi.values(G) for chi in chars]) @ T)]
    vals = [KAPPA * v for v in out]
    for v in vals:
        if abs(v.imag) > 1e-9 * max(1.0, abs(v.real)):
            raise ArithmeticError(f"non-real central derivative {v}")
    return [v.real for v in vals]


def average_direct(curve, D, params: TruncationParams = TruncationParams(), force: bool = False,
                   weights: Weights | None = None) -> float:
    check_admissible(curve, D, force)
    G = classfield.class_group(int(classfield.as_disc(D).D))
    W_ = weights or build_weights(curve, D, params)
    vals = character_values(G, W_, G.h <= params.explicit_max_h)
    return math.fsum(vals) / G.h


# ---------------------------------------------------------------------------
# geometric side

def average_geometric(curve, D, params: TruncationParams = TruncationParams(), force: bool = False,
                      weights: Weights | None = None) -> tuple[float, float]:
    """(S_main, S_0) from the principal-form lattice.

    The full lattice Z^2 minus the origin is summed and divided by w, which
    counts each principal ideal once.  Quotienting only by +-1 instead would
    over-count by w/2 for D = -3, -4.
    """
    check_admissible(curve, D, force)
    disc = classfield.as_disc(D)
    W_ = weights or build_weights(curve, D, params)
    f = classfield.principal_form(disc.D)
    X, Y, vals = classfield.lattice_points(f, W_.M)
    nz = vals > 0
    on_axis = nz & (Y == 0)
    off_axis = nz & (Y != 0)
    w = disc.w
    S_main = KAPPA / w * _lattice_sum(W_.w, vals[on_axis])
    S_0 = KAPPA / w * _lattice_sum(W_.w, vals[off_axis])
    return S_main, S_0


def half_lattice_sum(curve, D, params: TruncationParams = TruncationParams(), force: bool = False,
                     weights: Weights | None = None) -> float:
    """Sum over (x, y) != 0 modulo +-1 (y > 0, or y = 0 < x), unnormalised."""
    check_admissible(curve, D, force)
    disc = classfield.as_disc(D)
    W_ = weights or build_weights(curve, D, params)
    X, Y, vals = classfield.lattice_points(classfield.principal_form(disc.D), W_.M)
    keep = (Y > 0) | ((Y == 0) & (X > 0))
    return _lattice_sum(W_.w, vals[keep])


def S_main_closed(curve, D, params: TruncationParams = TruncationParams(), weights: Weights | None = None) -> float:
    """(2 kappa / w) sum_{g>=1} lambda(g^2)/g K(g^2): the y = 0 sum written out."""
    disc = classfield.as_disc(D)
    W_ = weights or build_weights(curve, D, params)
    g = np.arange(1, math.isqrt(W_.M) + 1)
    return 2 * KAPPA / disc.w * math.fsum(W_.w[g * g])


# ---------------------------------------------------------------------------
# main term

def main_term_bundle(curve, D, table: hecke.EigenvalueTable, spec: mellin.KernelSpec = mellin.DEFAULT_SPEC):
    """Named factors whose product F(s) gives S_main = (2 kappa / w) (1/4 pi i) int F ds/s^2."""
    disc = classfield.as_disc(D)
    Q = disc.absD * curve.conductor
    removed = tuple(arith.prime_factors(curve.conductor))
    return [
        ("L^(N)(2s+1, chi_D)", lambda s: lseries.dirichlet_L(2 * s + 1, disc.D, removed)),
        ("L(2s+1, sym2 f)", lambda s: lseries.sym2_L(2 * s + 1, table, SYM2_X)),
        ("1/zeta(4s+2)", lambda s: 1.0 / lseries.zeta(4 * s + 2)),
        ("gamma-cosine factor", lambda s: mellin.G(s, spec)),
        ("conductor power", lambda s: np.exp(np.asarray(s) * math.log(Q))),
    ]


def main_term(curve, D, params: TruncationParams = TruncationParams(), cache_dir=None,
              method: str = "fd") -> float:
    """r(f, D) = (kappa / w) F'(0): the residue of the S_main integral at s = 0."""
    disc = classfield.as_disc(D)
    table = hecke.build_table(curve, lseries.sym2_depth(SYM2_X), cache_dir)
    bundle = main_term_bundle(curve, disc.D, table, params.kernel)
    if method == "fd":
        _, R1 = mellin.residue_at_zero(bundle)
    else:
        _, R1 = mellin.residue_circle(bundle)
    return KAPPA / disc.w * R1


def c_F_theory(spec: mellin.KernelSpec = mellin.DEFAULT_SPEC) -> float:
    """Constant in the closed form of r: G'(0)/(2 G(0)) - 2 zeta'/zeta(2)."""
    g0, g1 = mellin.G_taylor0(spec)
    return 0.5 * g1 / g0 - 2 * lseries.zeta_log_derivative(2.0)


@dataclass(frozen=True)
class MainTermPieces:
    A: float  # (2/w) L^(N)(1, chi) L(1, sym2) / zeta(2)
    B: float  # log Q / 2 + L'/L(1, chi) + L'/L(1, sym2)
    L1: float  # L(1, chi_D)


def main_term_pieces(curve, D, cache_dir=None) -> MainTermPieces:
    disc = classfield.as_disc(D)
    table = hecke.build_table(curve, lseries.sym2_depth(SYM2_X), cache_dir)
    removed = tuple(arith.prime_factors(curve.conductor))
    LN = lseries.L_chi(1.0, disc.D, removed)
    dLN = lseries.L_chi_derivative(disc.D, removed)
    s2 = lseries.sym2_value(1.0, table, SYM2_X)
    ds2 = lseries.sym2_log_derivative(1.0, table, SYM2_X)
    Q = disc.absD * curve.conductor
    A = 2.0 / disc.w * LN * s2 / lseries.zeta_value(2.0)
    B = 0.5 * math.log(Q) + dLN / LN + ds2
    return MainTermPieces(A, B, lseries.L_chi(1.0, disc.D))


def main_term_closed(curve, D, cache_dir=None, spec: mellin.KernelSpec = mellin.DEFAULT_SPEC) -> float:
    p = main_term_pieces(curve, D, cache_dir)
    return KAPPA * p.A * (p.B + c_F_theory(spec))


def calibrate_kappa(curve, D: int = -4, params: TruncationParams = TruncationParams(), sigma: float = 3.0,
                    cache_dir=None) -> float:
    """Ratio of the S_main contour integral (1/2 pi i) int F ds/s^2 to the kappa = 1 lattice sum.

    The lattice sum is rescaled by w/2 first, so the ratio is the kappa
    that makes both readings of S_main agree once units are counted once.
    """
    disc = classfield.as_disc(D)
    W_ = build_weights(curve, disc.D, params, cache_dir)
    g = np.arange(1, math.isqrt(W_.M) + 1)
    lattice = math.fsum(W_.w[g * g])  # sum_{g>=1} over b and g, no prefactor
    removed = tuple(arith.prime_factors(curve.conductor))
    coeffs = hecke.sym2_coefficients(W_.table, 4000)[1:]
    n = np.arange(1, 4001, dtype=float)

    def extra(s):
        u = 2 * s + 1
        sym = np.exp(-np.outer(u, np.log(n))) @ coeffs
        return lseries.dirichlet_L(u, disc.D, removed) * sym / lseries.zeta(4 * s + 2)

    contour = 2.0 * float(mellin._line_integral(np.array([1.0 / W_.Q]), sigma, params.kernel, extra)[0])
    # lattice S_main with kappa = 1 is (2/w) * lattice; the contour reading is
    # (2/w) * contour once the unit over-count is removed
    return contour / lattice


# ---------------------------------------------------------------------------
# tail certificate

def tail_certificate(Q: int, M: int, params: TruncationParams = TruncationParams()) -> float:
    """Upper bound for the part of any character sum with a b^2 > M.

    Uses |lambda(a) r_chi(a)| <= d(a)^2 <= C(eps)^2 a^(2 eps), the envelope
    |V(x)| <= min_sigma B(sigma) x^-sigma and an integral comparison for the
    decreasing summand in a, for every b.  The best eps of the grid is kept.
    """
    eps_grid = params.tail_eps if isinstance(params.tail_eps, tuple) else (params.tail_eps,)
    return min(_tail_for_eps(Q, M, eps, params.kernel) for eps in eps_grid)


def _tail_for_eps(Q: int, M: int, eps: float, spec: mellin.KernelSpec) -> float:
    C2 = arith.divisor_bound_constant(eps) ** 2
    # I(x0) = int_{x0}^inf x^(2 eps - 1/2) Venv(x) dx on a log grid
    u = np.linspace(math.log(1e-3), math.log(5e3), 6000)
    x = np.exp(u)
    env = mellin.V_envelope(x, spec)
    integrand = x ** (2 * eps + 0.5) * env  # dx = x du
    du = u[1] - u[0]
    cum = np.concatenate([np.cumsum((integrand[::-1][1:] + integrand[::-1][:-1]) * du / 2)[::-1], [0.0]])

    bmax = int(math.sqrt(5e3 * Q)) + 1
    b = np.arange(1, bmax + 1, dtype=float)
    a0 = np.floor(M / (b * b)) + 1
    x0 = a0 * b * b / Q
    tail_int = np.interp(np.log(x0), u, cum, left=cum[0], right=0.0)
    head = a0 ** (2 * eps - 0.5) * mellin.V_envelope(x0, spec)
    total = math.fsum((head + (Q / (b * b)) ** (2 * eps + 0.5) * tail_int) / b)
    return KAPPA * C2 * total


def required_cutoff(Q: int, tol: float, params: TruncationParams = TruncationParams()) -> float:
    """Smallest cutoff_mult (in steps of 2) whose tail certificate is below tol."""
    cm = params.cutoff_mult
    while cm <= 64.0:
        if tail_certificate(Q, int(cm * Q), params) <= tol:
            return cm
        cm += 2.0
    raise ArithmeticError(f"no cutoff up to 64 |D| N certifies the tail below {tol:.1e}")


# ---------------------------------------------------------------------------
# reports

@dataclass
class AverageReport:
    curve: str
    D: int
    h: int
    w: int
    S_direct: float
    S_geometric: float
    S_main: float
    S_0: float
    r: float
    kappa: float
    per_character: list
    M: int
    tail_bound: float
    identity_error: float
    partition_error: float
    sign: int
    forced: bool
    sym2_convention: str = lseries.SYM2_CONVENTION
    unit_overcount: float = 1.0
    tolerance: float = 1e-8

    @property
    def S(self) -> float:
        return self.S_direct

    @property
    def abs_err(self) -> float:
        return abs(self.S_direct - self.r)

    @property
    def normalized_err(self) -> float:
        return abs(self.D) ** ((1 - 2 * THETA) / 16) * self.abs_err

    @property
    def identities_ok(self) -> bool:
        return self.identity_error <= self.tolerance and self.partition_error <= self.tolerance

    def to_dict(self) -> dict:
        d = asdict(self)
        d.update(abs_err=self.abs_err, normalized_err=self.normalized_err, identities_ok=self.identities_ok)
        return d


def identity_tolerance(S_scale: float) -> float:
    return 1e-8 * max(1.0, abs(S_scale))


def average_report(curve, D, params: TruncationParams = TruncationParams(), force: bool = False,
                   cache_dir=None) -> AverageReport:
    sign = check_admissible(curve, D, force)
    disc = classfield.as_disc(D)
    G = classfield.class_group(disc.D)
    W_ = build_weights(curve, disc.D, params, cache_dir)
    vals = character_values(G, W_, G.h <= params.explicit_max_h)
    S_direct = math.fsum(vals) / G.h
    S_main, S_0 = average_geometric(curve, disc.D, params, force, W_)
    X, Y, v = classfield.lattice_points(classfield.principal_form(disc.D), W_.M)
    S_geometric = KAPPA / disc.w * _lattice_sum(W_.w, v[v > 0])
    r = main_term(curve, disc.D, params, cache_dir)
    tail = tail_certificate(W_.Q, W_.M, params)
    tol = identity_tolerance(S_geometric)
    if tail > tol:
        raise ArithmeticError(f"D={disc.D}: tail bound {tail:.2e} exceeds {tol:.1e}; "
                              f"use cutoff_mult >= {required_cutoff(W_.Q, tol, params)}")
    return AverageReport(
        curve=curve.label, D=disc.D, h=G.h, w=disc.w,
        S_direct=S_direct, S_geometric=S_geometric, S_main=S_main, S_0=S_0, r=r,
        kappa=KAPPA, per_character=vals, M=W_.M,
        tail_bound=tail,
        identity_error=abs(S_direct - S_geometric),
        partition_error=abs(S_main + S_0 - S_geometric),
        sign=sign, forced=force and sign != -1,
        unit_overcount=disc.w / 2,
        tolerance=tol,
    )


SCAN_COLUMNS = ["D", "h", "S_direct", "S_geometric", "S_main", "S_0", "r", "abs_err", "normalized_err"]


def fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.15g}"


@dataclass
class ScanRow:
    D: int
    report: AverageReport | None = None
    error: str = ""


def average_scan(curve, D_list, params: TruncationParams = TruncationParams(), force: bool = False,
                   cache_dir=None) -> list[ScanRow]:
    """One AverageReport per D; failures are recorded and the scan continues."""
    rows = []
    for D in D_list:
        try:
            rows.append(ScanRow(int(D), average_report(curve, int(D), params, force, cache_dir)))
        except (ValueError, ArithmeticError) as exc:
            rows.append(ScanRow(int(D), None, str(exc)))
    return rows


def scan_to_csv(rows: list[ScanRow]) -> str:
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(SCAN_COLUMNS + ["error"])
    for row in rows:
        rep = row.report
        if rep is None:
            wr.writerow([row.D] + [""] * (len(SCAN_COLUMNS) - 1) + [row.error])
            continue
        err = "" if rep.identities_ok else "identity check failed"
        wr.writerow([fmt(rep.D), fmt(rep.h), fmt(rep.S_direct), fmt(rep.S_geometric), fmt(rep.S_main),
                     fmt(rep.S_0), fmt(rep.r), fmt(rep.abs_err), fmt(rep.normalized_err), err])
    return buf.getvalue()


def scan_to_json(rows: list[ScanRow]) -> str:
    out = []
    for row in rows:
        if row.report is None:
            out.append({"D": row.D, "error": row.error})
        else:
            d = row.report.to_dict()
            out.append({k: (fmt(v) if isinstance(v, float) else v) for k, v in d.items()})
    return json.dumps(out, indent=1)


def admissible_discriminants(curve, count: int, lo: int = -3, limit: int = -10**6) -> list[int]:
    """The first ``count`` admissible fundamental D <= lo, by increasing |D|."""
    out = []
    D = lo
    while len(out) < count and D >= limit:
        if arith.is_fundamental(D) and math.gcd(D, curve.conductor) == 1:
            if hecke.twist_root_number(curve, D) * curve.root_number == -1:
                out.append(D)
        D -= 1
    return out
