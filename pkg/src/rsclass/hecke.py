"""Hecke eigenvalues of the newform attached to a rational elliptic curve.

a_p comes from point counts on the minimal model: a direct character sum
for small p and a Mestre-style baby-step giant-step for larger p.  The
full table a_n follows from the Hecke recursion at prime powers and
multiplicativity.  Prime traces can be cached on disk as CSV with a
checksum line.
"""
from __future__ import annotations

import hashlib
import json
import math
import random
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import arith

NAIVE_LIMIT = 2000


@dataclass(frozen=True)
class CurveSpec:
    a1: int
    a2: int
    a3: int
    a4: int
    a6: int
    conductor: int
    root_number: int
    label: str = ""

    def __post_init__(self):
        if self.discriminant == 0:
            raise ValueError("singular Weierstrass equation")
        if self.root_number not in (-1, 1):
            raise ValueError("root number must be +1 or -1")
        bad = set(arith.prime_factors(self.conductor))
        if not bad <= set(arith.prime_factors(self.discriminant)):
            raise ValueError("conductor has primes not dividing the discriminant")

    @property
    def ainv(self) -> tuple[int, ...]:
        return (self.a1, self.a2, self.a3, self.a4, self.a6)

    @property
    def b_invariants(self) -> tuple[int, int, int, int]:
        a1, a2, a3, a4, a6 = self.ainv
        b2 = a1 * a1 + 4 * a2
        b4 = 2 * a4 + a1 * a3
        b6 = a3 * a3 + 4 * a6
        b8 = a1 * a1 * a6 + 4 * a2 * a6 - a1 * a3 * a4 + a2 * a3 * a3 - a4 * a4
        return b2, b4, b6, b8

    @property
    def c4(self) -> int:
        b2, b4, _, _ = self.b_invariants
        return b2 * b2 - 24 * b4

    @property
    def c6(self) -> int:
        b2, b4, b6, _ = self.b_invariants
        return -b2 ** 3 + 36 * b2 * b4 - 216 * b6

    @property
    def discriminant(self) -> int:
        b2, b4, b6, b8 = self.b_invariants
        return -b2 * b2 * b8 - 8 * b4 ** 3 - 27 * b6 * b6 + 9 * b2 * b4 * b6

    def is_bad(self, p: int) -> bool:
        return self.conductor % p == 0

    def to_json(self) -> dict:
        return {"label": self.label, "ainv": list(self.ainv), "conductor": self.conductor,
                "root_number": self.root_number}

    @classmethod
    def from_json(cls, obj) -> "CurveSpec":
        if isinstance(obj, str):
            obj = json.loads(obj)
        a1, a2, a3, a4, a6 = (int(v) for v in obj["ainv"])
        return cls(a1, a2, a3, a4, a6, int(obj["conductor"]), int(obj["root_number"]),
                   str(obj.get("label", "")))


CURVE_11A = CurveSpec(0, -1, 1, -10, -20, 11, 1, "11a")
CURVE_37A = CurveSpec(0, 0, 1, -1, 0, 37, -1, "37a")
CURVES = {"11a": CURVE_11A, "11a1": CURVE_11A, "37a": CURVE_37A, "37a1": CURVE_37A}


def load_curve(ref: str | Path) -> CurveSpec:
    """A CurveSpec from a built-in label or a JSON file."""
    if str(ref) in CURVES:
        return CURVES[str(ref)]
    return CurveSpec.from_json(Path(ref).read_text())


# ---------------------------------------------------------------------------
# point counting

def count_points_brute(curve: CurveSpec, p: int) -> int:
    """Projective points over F_p, singular point included, by testing every (x, y)."""
    a1, a2, a3, a4, a6 = (c % p for c in curve.ainv)
    y = np.arange(p, dtype=np.int64)
    n = 1
    step = max(1, 2_000_000 // p)
    for lo in range(0, p, step):
        x = np.arange(lo, min(p, lo + step), dtype=np.int64)[:, None]
        rhs = (((x + a2) * x % p + a4) * x + a6) % p
        lhs = (y * y + (a1 * x + a3) % p * y) % p
        n += int(np.count_nonzero(lhs == rhs))
    return n


def _ap_char_sum(curve: CurveSpec, p: int) -> int:
    # completing the square: (2y + a1 x + a3)^2 = 4x^3 + b2 x^2 + 2 b4 x + b6
    b2, b4, b6, _ = curve.b_invariants
    x = np.arange(p, dtype=np.int64)
    f = (((4 * x + b2) % p * x + 2 * b4) % p * x + b6) % p
    is_sq = np.zeros(p, dtype=np.int64)
    is_sq[(x * x) % p] = 1
    leg = 2 * is_sq - 1
    leg[0] = 0
    return -int(leg[f].sum())


def ap_naive(curve: CurveSpec, p: int) -> int:
    """p + 1 - #E(F_p), counting the singular point at bad primes too.

    With that count the same formula yields +1, -1, 0 for split, nonsplit
    and additive reduction.
    """
    if p == 2:
        return p + 1 - count_points_brute(curve, p)
    return _ap_char_sum(curve, p)


def _ec_add(P, Q, A, p):
    if P is None:
        return Q
    if Q is None:
        return P
    x1, y1 = P
    x2, y2 = Q
    if x1 == x2:
        if (y1 + y2) % p == 0:
            return None
        lam = (3 * x1 * x1 + A) * pow(2 * y1, -1, p) % p
    else:
        lam = (y2 - y1) * pow(x2 - x1, -1, p) % p
    x3 = (lam * lam - x1 - x2) % p
    return x3, (lam * (x1 - x3) - y1) % p


def _ec_mul(k, P, A, p):
    if k < 0:
        k = -k
        P = None if P is None else (P[0], -P[1] % p)
    R = None
    while k:
        if k & 1:
            R = _ec_add(R, P, A, p)
        P = _ec_add(P, P, A, p)
        k >>= 1
    return R


def _random_point(A, B, p, rng):
    while True:
        x = rng.randrange(p)
        r = (x * x * x + A * x + B) % p
        if r == 0:
            return (x, 0)
        if pow(r, (p - 1) // 2, p) == 1:
            return (x, _sqrt_mod(r, p))


def _sqrt_mod(a, p):
    """Tonelli-Shanks square root of a quadratic residue a mod odd prime p."""
    a %= p
    if p % 4 == 3:
        return pow(a, (p + 1) // 4, p)
    q, s = p - 1, 0
    while q % 2 == 0:
        q //= 2
        s += 1
    z = 2
    while pow(z, (p - 1) // 2, p) != p - 1:
        z += 1
    m, c, t, r = s, pow(z, q, p), pow(a, q, p), pow(a, (q + 1) // 2, p)
    while t != 1:
        i, tt = 0, t
        while tt != 1:
            tt = tt * tt % p
            i += 1
        b = pow(c, 1 << (m - i - 1), p)
        m, c, t, r = i, b * b % p, t * b * b % p, r * b % p
    return r


def _traces_killing(P, sign, A, p, bound):
    """All t in [-bound, bound] with (p + 1 - sign*t) P = O, by BSGS."""
    m = math.isqrt(2 * bound + 1) + 1
    baby = {}
    R = None
    for j in range(m):
        baby.setdefault(R, []).append(j)
        R = _ec_add(R, P, A, p)
    mP_neg = _ec_mul(-m, P, A, p)
    # want u*P = (p+1) P with u = sign*t; write u = -bound + k*m + j
    Z = _ec_mul(p + 1 + bound, P, A, p)
    out = []
    for k in range((2 * bound) // m + 2):
        for j in baby.get(Z, ()):
            u = -bound + k * m + j
            if -bound <= u <= bound:
                out.append(sign * u)
        Z = _ec_add(Z, mP_neg, A, p)
    return set(out)


def ap_bsgs(curve: CurveSpec, p: int, max_points: int = 24) -> int:
    """a_p at a good prime p > 3 by baby-step giant-step in the Hasse interval.

    Points of the curve and of its quadratic twist cut the candidate set
    down; #E + #E' = 2p + 2 links the two.  Falls back to the character
    sum if the candidates never narrow to one.
    """
    A = (-27 * curve.c4) % p
    B = (-54 * curve.c6) % p
    bound = math.isqrt(4 * p)
    rng = random.Random(p)
    d = 2
    while pow(d, (p - 1) // 2, p) != p - 1:
        d += 1
    At, Bt = A * d * d % p, B * d * d * d % p
    cand = None
    for i in range(max_points):
        if i % 2 == 0:
            P = _random_point(A, B, p, rng)
            s = _traces_killing(P, 1, A, p, bound)
        else:
            P = _random_point(At, Bt, p, rng)
            s = _traces_killing(P, -1, At, p, bound)
        cand = s if cand is None else cand & s
        if len(cand) == 1:
            return cand.pop()
    return _ap_char_sum(curve, p)


def ap_point_count(curve: CurveSpec, p: int) -> int:
    if not arith.is_prime(p):
        raise ValueError(f"{p} is not prime")
    if p <= NAIVE_LIMIT or curve.discriminant % p == 0:
        return ap_naive(curve, p)
    return ap_bsgs(curve, p)


def reduction_type(curve: CurveSpec, p: int) -> str:
    """'good', 'split', 'nonsplit' or 'additive' at p."""
    if curve.discriminant % p:
        return "good"
    if curve.c4 % p == 0:
        return "additive"
    return {1: "split", -1: "nonsplit"}[ap_naive(curve, p)]


# ---------------------------------------------------------------------------
# tables

def prime_traces(curve: CurveSpec, N_max: int) -> tuple[np.ndarray, np.ndarray]:
    primes = arith.primes_upto(max(N_max, 2))
    ap = np.array([ap_point_count(curve, int(p)) for p in primes], dtype=np.int64)
    return primes, ap


def _checksum(primes: np.ndarray, ap: np.ndarray) -> str:
    h = hashlib.sha256()
    h.update(np.ascontiguousarray(primes, dtype="<i8").tobytes())
    h.update(np.ascontiguousarray(ap, dtype="<i8").tobytes())
    return h.hexdigest()


def _cache_path(cache_dir: Path, label: str, N_max: int) -> Path:
    return Path(cache_dir) / f"ap_{label or 'curve'}_{N_max}.csv"


def save_traces(path: Path, curve: CurveSpec, N_max: int, primes, ap) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [f"# label={curve.label} N_max={N_max} ainv={','.join(map(str, curve.ainv))} "
             f"sha256={_checksum(primes, ap)}", "p,ap"]
    lines += [f"{p},{a}" for p, a in zip(primes.tolist(), ap.tolist())]
    tmp = path.with_suffix(".tmp")
    tmp.write_text("\n".join(lines) + "\n")
    tmp.replace(path)


def load_traces(path: Path, curve: CurveSpec):
    """(N_max, primes, ap) from a cache file, or None if absent or corrupt."""
    path = Path(path)
    try:
        text = path.read_text().splitlines()
        head = dict(kv.split("=", 1) for kv in text[0].lstrip("# ").split())
        if head["ainv"] != ",".join(map(str, curve.ainv)):
            return None
        body = np.array([[int(v) for v in ln.split(",")] for ln in text[2:] if ln], dtype=np.int64)
        primes, ap = body[:, 0].copy(), body[:, 1].copy()
        if _checksum(primes, ap) != head["sha256"]:
            return None
        return int(head["N_max"]), primes, ap
    except (OSError, ValueError, KeyError, IndexError):
        return None


def _extend_traces(curve: CurveSpec, have, N_max: int):
    """Traces up to N_max, reusing (primes, ap) already known below some depth."""
    if have is None:
        return prime_traces(curve, N_max)
    depth, primes, ap = have
    more = arith.primes_upto(max(N_max, 2))
    more = more[more > depth]
    extra = np.array([ap_point_count(curve, int(p)) for p in more], dtype=np.int64)
    return np.concatenate([primes, more]), np.concatenate([ap, extra])


def cached_traces(curve: CurveSpec, N_max: int, cache_dir=None, known=None):
    """Prime traces up to N_max, reusing any valid cache.

    A cache of at least that depth is truncated; otherwise the deepest
    shallower cache (or ``known``, an in-memory (depth, primes, ap)) is
    extended and the result saved.
    """
    below = known
    if cache_dir is not None:
        cache_dir = Path(cache_dir)
        best = None
        for f in sorted(cache_dir.glob(f"ap_{curve.label or 'curve'}_*.csv")):
            got = load_traces(f, curve)
            if got is None:
                continue
            if got[0] >= N_max and (best is None or got[0] < best[0]):
                best = got
            elif got[0] < N_max and (below is None or got[0] > below[0]):
                below = got
        if best is not None:
            keep = best[1] <= N_max
            return best[1][keep], best[2][keep]
    primes, ap = _extend_traces(curve, below, N_max)
    if cache_dir is not None:
        save_traces(_cache_path(cache_dir, curve.label, N_max), curve, N_max, primes, ap)
    return primes, ap


def _exponent_axis(N_max: int) -> int:
    return max(1, int(math.log2(max(N_max, 2)))) + 1


def prime_power_table(curve: CurveSpec, primes: np.ndarray, ap: np.ndarray, kmax: int) -> np.ndarray:
    """a_{p^k} for each prime and 0 <= k <= kmax, via the Hecke recursion."""
    local = np.zeros((len(primes), kmax + 1), dtype=np.int64)
    local[:, 0] = 1
    if kmax >= 1:
        local[:, 1] = ap
    bad = np.array([curve.conductor % int(p) == 0 for p in primes], dtype=bool)
    for k in range(2, kmax + 1):
        good_val = ap * local[:, k - 1] - primes * local[:, k - 2]
        local[:, k] = np.where(bad, ap * local[:, k - 1], good_val)
    return local


@dataclass(frozen=True, eq=False)
class EigenvalueTable:
    curve: CurveSpec
    N_max: int
    a: np.ndarray = field(repr=False)  # int64, a[0] = 0
    lam: np.ndarray = field(repr=False)  # float, a_n / sqrt(n)
    primes: np.ndarray = field(repr=False)
    ap: np.ndarray = field(repr=False)

    @property
    def conductor(self) -> int:
        return self.curve.conductor

    @property
    def root_number(self) -> int:
        return self.curve.root_number

    def lam_p(self, p: int) -> float:
        return self.lam[p]


def table_from_traces(curve: CurveSpec, N_max: int, primes: np.ndarray, ap: np.ndarray) -> EigenvalueTable:
    local = prime_power_table(curve, primes, ap, _exponent_axis(N_max))
    a = arith.multiplicative(N_max, primes, local, dtype=np.int64)
    lam = np.zeros(N_max + 1)
    lam[1:] = a[1:] / np.sqrt(np.arange(1, N_max + 1))
    for arr in (a, lam, primes, ap):
        arr.setflags(write=False)
    return EigenvalueTable(curve, N_max, a, lam, primes, ap)


_TABLES: dict = {}
_VIEWS: dict = {}


DEPTH_QUANTUM = 1 << 18


def build_table(curve: CurveSpec, N_max: int, cache_dir=None) -> EigenvalueTable:
    """a_n and lambda_n for n <= N_max; memoised in-process per curve.

    New traces are computed to the next multiple of DEPTH_QUANTUM, so a
    sequence of slowly growing requests does not recount every prime.
    """
    if N_max < 1:
        raise ValueError("N_max must be at least 1")
    key = curve.ainv
    have = _TABLES.get(key)
    if have is None or have.N_max < N_max:
        depth = -(-N_max // DEPTH_QUANTUM) * DEPTH_QUANTUM
        known = None if have is None else (have.N_max, np.array(have.primes), np.array(have.ap))
        primes, ap = cached_traces(curve, depth, cache_dir, known)
        have = table_from_traces(curve, depth, primes, ap)
        _TABLES[key] = have
    if have.N_max == N_max:
        return have
    view = _VIEWS.get((key, have.N_max, N_max))
    if view is None:
        keep = have.primes <= N_max
        view = table_from_traces(curve, N_max, have.primes[keep].copy(), have.ap[keep].copy())
        if len(_VIEWS) >= 8:
            _VIEWS.pop(next(iter(_VIEWS)))
        _VIEWS[(key, have.N_max, N_max)] = view
    return view


def clear_memory_cache() -> None:
    _TABLES.clear()
    _VIEWS.clear()


# ---------------------------------------------------------------------------
# symmetric square, twists, root number

def sym2_local(curve: CurveSpec, p: int, ap: int, kmax: int) -> np.ndarray:
    """Coefficients of the imprimitive local factor of zeta(2s) sum lambda(m^2) m^-s at p."""
    c = np.zeros(kmax + 1)
    c[0] = 1.0
    if curve.conductor % p:
        e1 = ap * ap / p - 1.0
        for k in range(1, kmax + 1):
            c[k] = e1 * c[k - 1] - (e1 * c[k - 2] if k >= 2 else 0.0) + (c[k - 3] if k >= 3 else 0.0)
        return c
    # bad p: (1 - lambda(p)^2 X)^-1 (1 - X^2)^-1, lambda(p)^2 = ap^2 / p
    r = ap * ap / p
    for k in range(1, kmax + 1):
        c[k] = r * c[k - 1] + (c[k - 2] if k >= 2 else 0.0) - (r * c[k - 3] if k >= 3 else 0.0)
    return c


def sym2_coefficients(table: EigenvalueTable, N_max: int) -> np.ndarray:
    """c(n), n <= N_max, with sum c(n) n^-s = zeta(2s) sum_m lambda(m^2) m^-s."""
    if N_max > table.N_max:
        raise ValueError(f"table depth {table.N_max} < requested {N_max}")
    keep = table.primes <= N_max
    primes, ap = table.primes[keep], table.ap[keep]
    kmax = _exponent_axis(N_max)
    ap2 = ap.astype(float) ** 2 / primes
    e1 = ap2 - 1.0
    local = np.zeros((len(primes), kmax + 1))
    local[:, 0] = 1.0
    bad = np.array([table.conductor % int(p) == 0 for p in primes], dtype=bool)
    for k in range(1, kmax + 1):
        c1 = local[:, k - 1]
        c2 = local[:, k - 2] if k >= 2 else 0.0
        c3 = local[:, k - 3] if k >= 3 else 0.0
        local[:, k] = np.where(bad, ap2 * c1 + c2 - ap2 * c3, e1 * c1 - e1 * c2 + c3)
    return arith.multiplicative(N_max, primes, local, dtype=float)


def twist_root_number(curve: CurveSpec, D: int) -> int:
    """Root number of the quadratic twist by chi_D: chi_D(-N) * eps(f)."""
    D = int(getattr(D, "D", D))
    if math.gcd(D, curve.conductor) != 1:
        raise ValueError(f"D={D} is not coprime to the conductor {curve.conductor}")
    return arith.kronecker(D, -curve.conductor) * curve.root_number


def is_admissible(curve: CurveSpec, D: int) -> bool:
    """True when eps(f) * eps(f x chi_D) = -1, i.e. chi_D(-N) = -1."""
    return twist_root_number(curve, D) * curve.root_number == -1


def completed_value_at_one(table: EigenvalueTable, eps: int, t: float) -> float:
    """Lambda(f, 1) from the split theta integral at the point t.

    sum_n a_n/c_n (exp(-c_n t) + eps exp(-c_n / t)), c_n = 2 pi n / sqrt(N).
    Independent of t exactly when eps is the true root number.
    """
    N = table.conductor
    n = np.arange(1, table.N_max + 1)
    c = 2 * math.pi * n / math.sqrt(N)
    a = table.a[1:].astype(float)
    return float(math.fsum(a / c * (np.exp(-c * t) + eps * np.exp(-c / t))))


def root_number_residual(table: EigenvalueTable, eps: int, t1: float = 1.2, t2: float = 0.8) -> float:
    return abs(completed_value_at_one(table, eps, t1) - completed_value_at_one(table, eps, t2))


def verify_root_number(curve: CurveSpec, N_terms: int | None = None) -> bool:
    """Check the declared root number against the functional equation numerically."""
    N_terms = N_terms or max(200, int(60 * math.sqrt(curve.conductor)))
    t = build_table(curve, N_terms)
    good = root_number_residual(t, curve.root_number)
    wrong = root_number_residual(t, -curve.root_number)
    return good < 1e-10 and wrong > 1e-4
