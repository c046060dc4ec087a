"""Class groups of imaginary quadratic fields via reduced binary quadratic forms.

Ideal classes of the maximal order of discriminant D < 0 are modelled by
reduced positive definite forms (a, b, c) with b*b - 4ac = D.  The inverse
of the class of (a, b, c) is the class of (a, -b, c).  On top of the group
law we build the character group, the theta coefficients

    r_chi(n) = sum over ideals of norm n of chi(ideal),

and the divisor function tau(n) = sum_{m | n} chi_D(m).
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np

from . import arith


@dataclass(frozen=True)
class FundamentalDiscriminant:
    """A negative fundamental discriminant.

    ``alpha`` is the squarefree integer with Q(sqrt(-alpha)) = Q(sqrt(D)).
    ``parity_basis`` is True when the ring of integers is Z[(1+sqrt(-alpha))/2]
    (D = 1 mod 4) and False when it is Z[sqrt(-alpha)] (D = 0 mod 4).
    """

    D: int
    alpha: int
    parity_basis: bool

    def __post_init__(self):
        D = self.D
        if D >= 0:
            raise ValueError(f"discriminant must be negative, got {D}")
        if not arith.is_fundamental(D):
            raise ValueError(f"{D} is not a fundamental discriminant")
        expect_alpha = -D if D % 4 == 1 else -D // 4
        if self.alpha != expect_alpha:
            raise ValueError(f"alpha={self.alpha} does not match D={D}")
        if self.parity_basis != (D % 4 == 1):
            raise ValueError("parity_basis inconsistent with D mod 4")

    @classmethod
    def from_D(cls, D: int) -> "FundamentalDiscriminant":
        D = int(D)
        if D >= 0 or not arith.is_fundamental(D):
            sq = arith.square_factor(D) if D else 0
            why = f" (divisible by {sq}^2)" if sq > 1 else ""
            raise ValueError(f"{D} is not a negative fundamental discriminant{why}")
        alpha = -D if D % 4 == 1 else -D // 4
        return cls(D, alpha, D % 4 == 1)

    @property
    def absD(self) -> int:
        return -self.D

    @property
    def w(self) -> int:
        return {-3: 6, -4: 4}.get(self.D, 2)


def as_disc(D) -> FundamentalDiscriminant:
    if isinstance(D, FundamentalDiscriminant):
        return D
    return FundamentalDiscriminant.from_D(int(D))


def fundamental_discriminant(alpha: int) -> FundamentalDiscriminant:
    """Normalise a squarefree alpha > 0 to the discriminant of Q(sqrt(-alpha))."""
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    sq = arith.square_factor(alpha)
    if sq > 1:
        raise ValueError(f"alpha={alpha} is not squarefree: divisible by {sq}^2")
    D = -alpha if (-alpha) % 4 == 1 else -4 * alpha
    return FundamentalDiscriminant(D, alpha, D % 4 == 1)


def kronecker_symbol(D: int, n: int) -> int:
    return arith.kronecker(int(D), int(n))


# ---------------------------------------------------------------------------
# forms

@dataclass(frozen=True, order=True)
class QuadraticForm:
    a: int
    b: int
    c: int

    @property
    def disc(self) -> int:
        return self.b * self.b - 4 * self.a * self.c

    def is_reduced(self) -> bool:
        a, b, c = self.a, self.b, self.c
        if not (abs(b) <= a <= c):
            return False
        if (abs(b) == a or a == c) and b < 0:
            return False
        return True

    def inverse(self) -> "QuadraticForm":
        return reduce(QuadraticForm(self.a, -self.b, self.c))

    def __call__(self, x, y):
        return self.a * x * x + self.b * x * y + self.c * y * y

    def as_list(self) -> list[int]:
        return [self.a, self.b, self.c]


def reduce(f: QuadraticForm) -> QuadraticForm:
    """Unique reduced form in the proper equivalence class of f."""
    a, b, c = int(f.a), int(f.b), int(f.c)
    if b * b - 4 * a * c >= 0 or a <= 0:
        raise ValueError(f"form {(a, b, c)} is not positive definite")
    while True:
        if not (-a < b <= a):
            r = (a - b) // (2 * a)
            b, c = b + 2 * a * r, a * r * r + b * r + c
        if a > c:
            a, b, c = c, -b, a
            continue
        if a == c and b < 0:
            b = -b
        return QuadraticForm(a, b, c)


def _xgcd(a: int, b: int) -> tuple[int, int, int]:
    """(u, v, g) with u*a + v*b = g = gcd(a, b) >= 0."""
    u0, v0, u1, v1 = 1, 0, 0, 1
    while b:
        q, r = divmod(a, b)
        a, b = b, r
        u0, u1 = u1, u0 - q * u1
        v0, v1 = v1, v0 - q * v1
    if a < 0:
        a, u0, v0 = -a, -u0, -v0
    return u0, v0, a


def compose(f1: QuadraticForm, f2: QuadraticForm) -> QuadraticForm:
    """Gauss composition of two primitive forms of the same discriminant."""
    if f1.disc != f2.disc:
        raise ValueError(f"discriminant mismatch: {f1.disc} vs {f2.disc}")
    if f1.a > f2.a:
        f1, f2 = f2, f1
    a1, b1, c1 = f1.a, f1.b, f1.c
    a2, b2, c2 = f2.a, f2.b, f2.c
    s = (b1 + b2) // 2
    n = b2 - s
    if a2 % a1 == 0:
        y1, d = 0, a1
    else:
        u, _, d = _xgcd(a2, a1)
        y1 = u
    if s % d == 0:
        y2, x2, d1 = -1, 0, d
    else:
        x2, y2, d1 = _xgcd(s, d)
        y2 = -y2
    v1 = a1 // d1
    v2 = a2 // d1
    r = (y1 * y2 * n - x2 * c2) % v1
    b3 = b2 + 2 * v2 * r
    a3 = v1 * v2
    c3 = (c2 * d1 + r * (b2 + v2 * r)) // v1
    return reduce(QuadraticForm(a3, b3, c3))


def reduced_forms(D: int) -> list[QuadraticForm]:
    """All reduced primitive forms of discriminant D, principal form first."""
    D = int(D)
    out = []
    amax = math.isqrt(-D // 3)
    for a in range(1, amax + 1):
        b = np.arange(-a + 1, a + 1, dtype=np.int64)
        b = b[(b - D) % 2 == 0]
        num = b * b - D
        ok = num % (4 * a) == 0
        b, c = b[ok], num[ok] // (4 * a)
        keep = (c >= a) & ~((c == a) & (b < 0))
        for bi, ci in zip(b[keep], c[keep]):
            if math.gcd(math.gcd(a, int(bi)), int(ci)) == 1:
                out.append(QuadraticForm(a, int(bi), int(ci)))
    return out


def class_number(D: int) -> int:
    return len(reduced_forms(D))


def principal_form(D: int) -> QuadraticForm:
    D = int(D)
    if D % 4 == 0:
        return QuadraticForm(1, 0, -D // 4)
    return QuadraticForm(1, 1, (1 - D) // 4)


# ---------------------------------------------------------------------------
# group structure

@dataclass(frozen=True, eq=False)
class ClassGroupData:
    disc: FundamentalDiscriminant
    reduced_forms: tuple
    h: int
    w: int
    generators: tuple  # of (QuadraticForm, order)
    composition_table: np.ndarray = field(repr=False)
    dlog: np.ndarray = field(repr=False)  # (h, n_gens) exponent vectors

    @property
    def D(self) -> int:
        return self.disc.D

    @property
    def orders(self) -> tuple[int, ...]:
        return tuple(o for _, o in self.generators)

    def index(self, f: QuadraticForm) -> int:
        return self._index()[reduce(f)]

    def _index(self) -> dict:
        cache = self.__dict__.get("_idx")
        if cache is None:
            cache = {g: i for i, g in enumerate(self.reduced_forms)}
            object.__setattr__(self, "_idx", cache)
        return cache

    def inverse_index(self, i: int) -> int:
        return self.index(self.reduced_forms[i].inverse())

    def to_json(self) -> dict:
        return {
            "D": self.D,
            "h": self.h,
            "w": self.w,
            "forms": [f.as_list() for f in self.reduced_forms],
            "generators": [{"form": g.as_list(), "order": o} for g, o in self.generators],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json())

    @classmethod
    def from_json(cls, obj) -> "ClassGroupData":
        if isinstance(obj, str):
            obj = json.loads(obj)
        G = class_group(obj["D"])
        if G.to_json() != obj:
            raise ValueError("serialized class group does not match recomputation")
        return G


def _element_power(table: np.ndarray, x: int, k: int, e: int = 0) -> int:
    y = e
    for _ in range(k):
        y = table[y, x]
    return y


def _order(table: np.ndarray, x: int) -> int:
    k, y = 1, x
    while y != 0:
        y = table[y, x]
        k += 1
    return k


def _primary_basis(table: np.ndarray, members: list[int], orders: dict) -> tuple[list, dict]:
    """Basis of an abelian p-group given as a subset of the table.

    Greedily takes an element of maximal order modulo the subgroup built so
    far and corrects it by a subgroup element so that its true order equals
    its order in the quotient; then the new cyclic factor meets the old
    subgroup trivially.  Returns (generators, {element: exponent tuple}).
    """
    H = {0: ()}
    gens: list[tuple[int, int]] = []
    target = len(members)
    while len(H) < target:
        best = None
        for x in members:
            if x in H:
                continue
            m, y = 1, x
            while y not in H:
                y = table[y, x]
                m += 1
            if best is None or m > best[0]:
                best = (m, x, y)
        m, x, hx = best
        lift = None
        for h0 in H:
            if _element_power(table, h0, m) == hx:
                lift = h0
                break
        if lift is None:
            raise RuntimeError("class group decomposition failed to lift a generator")
        inv = next(z for z in H if table[z, lift] == 0)
        g = table[x, inv]
        gens.append((g, m))
        newH = {}
        for h0, vec in H.items():
            y = h0
            for j in range(m):
                newH[y] = vec + (j,)
                y = table[y, g]
        H = newH
    return gens, H


@lru_cache(maxsize=512)
def class_group(D) -> ClassGroupData:
    """Reduced forms, composition table and a cyclic decomposition for D."""
    disc = as_disc(D)
    forms = reduced_forms(disc.D)
    h = len(forms)
    idx = {f: i for i, f in enumerate(forms)}
    table = np.zeros((h, h), dtype=np.int64)
    for i in range(h):
        for j in range(i, h):
            k = idx[compose(forms[i], forms[j])]
            table[i, j] = table[j, i] = k
    orders = {x: _order(table, x) for x in range(h)}

    gens: list[tuple[int, int]] = []
    parts = []
    for p in arith.prime_factors(h) if h > 1 else []:
        members = [x for x in range(h) if _is_p_power(orders[x], p)]
        pg, H = _primary_basis(table, members, orders)
        parts.append((p, len(members), pg, H))
        gens.extend(pg)

    dlog = np.zeros((h, len(gens)), dtype=np.int64)
    col = 0
    for p, pa, pg, H in parts:
        cofactor = h // pa
        e = cofactor * pow(cofactor, -1, pa)  # idempotent for the p-part
        for x in range(h):
            xp = _element_power(table, x, e % h)
            dlog[x, col : col + len(pg)] = H[xp]
        col += len(pg)

    G = ClassGroupData(
        disc=disc,
        reduced_forms=tuple(forms),
        h=h,
        w=disc.w,
        generators=tuple((forms[g], m) for g, m in gens),
        composition_table=table,
        dlog=dlog,
    )
    table.setflags(write=False)
    dlog.setflags(write=False)
    _check_decomposition(G)
    return G


def _is_p_power(n: int, p: int) -> bool:
    while n % p == 0:
        n //= p
    return n == 1


def _check_decomposition(G: ClassGroupData) -> None:
    if math.prod(G.orders) != G.h:
        raise RuntimeError(f"generator orders {G.orders} do not multiply to h={G.h}")
    seen = {tuple(row) for row in G.dlog.tolist()}
    if len(seen) != G.h:
        raise RuntimeError("discrete logarithms are not injective")


# ---------------------------------------------------------------------------
# characters

def _root_of_unity(angle: Fraction) -> complex:
    angle = angle % 1
    q = angle.denominator
    if q == 1:
        return 1.0 + 0.0j
    if q == 2:
        return -1.0 + 0.0j
    if q == 4:
        return 1j if angle.numerator == 1 else -1j
    t = 2.0 * math.pi * float(angle)
    return complex(math.cos(t), math.sin(t))


@dataclass(frozen=True)
class ClassCharacter:
    """Character given by exponents k_i against generators of orders n_i.

    chi(prod g_i^{v_i}) = exp(2 pi i sum k_i v_i / n_i).
    """

    exponents: tuple
    moduli: tuple

    @property
    def order(self) -> int:
        o = 1
        for k, n in zip(self.exponents, self.moduli):
            o = math.lcm(o, n // math.gcd(k, n))
        return o

    @property
    def is_trivial(self) -> bool:
        return all(k % n == 0 for k, n in zip(self.exponents, self.moduli))

    @property
    def is_real(self) -> bool:
        return self.order <= 2

    def conjugate(self) -> "ClassCharacter":
        return ClassCharacter(tuple((-k) % n for k, n in zip(self.exponents, self.moduli)), self.moduli)

    def angle(self, vec) -> Fraction:
        return sum((Fraction(int(k) * int(v), n) for k, v, n in zip(self.exponents, vec, self.moduli)), Fraction(0)) % 1

    def value(self, G: ClassGroupData, i: int) -> complex:
        return _root_of_unity(self.angle(G.dlog[i]))

    def values(self, G: ClassGroupData) -> np.ndarray:
        return np.array([self.value(G, i) for i in range(G.h)], dtype=complex)


def characters(G: ClassGroupData) -> list[ClassCharacter]:
    """All h characters, trivial first, in lexicographic exponent order."""
    mods = G.orders
    return [ClassCharacter(tuple(k), mods) for k in itertools.product(*(range(n) for n in mods))]


# ---------------------------------------------------------------------------
# theta coefficients

def lattice_points(f: QuadraticForm, N_max: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """All (x, y) with 0 <= f(x, y) <= N_max, as arrays (X, Y, f(X, Y)).

    Rows y are scanned with |y| <= sqrt(4 a N / |D|) and exact integer
    bounds on x from (2ax + by)^2 + |D| y^2 = 4 a f(x, y).
    """
    a, b, D = f.a, f.b, f.disc
    absD = -D
    N = int(N_max)
    ymax = math.isqrt(4 * a * N // absD)
    ys = np.arange(-ymax, ymax + 1, dtype=np.int64)
    delta = 4 * a * N - absD * ys * ys
    s = np.array([math.isqrt(int(v)) for v in delta], dtype=np.int64)
    lo = -((b * ys + s) // (2 * a))  # ceil((-b y - s) / 2a)
    hi = (s - b * ys) // (2 * a)
    cnt = np.maximum(hi - lo + 1, 0)
    Y = np.repeat(ys, cnt)
    start = np.repeat(lo, cnt)
    offs = np.arange(int(cnt.sum()), dtype=np.int64) - np.repeat(np.cumsum(cnt) - cnt, cnt)
    X = start + offs
    vals = a * X * X + b * X * Y + f.c * Y * Y
    return X, Y, vals


def representation_counts(f: QuadraticForm, N_max: int) -> np.ndarray:
    """R(n) = #{(x, y) in Z^2 : f(x, y) = n} for 0 <= n <= N_max."""
    _, _, vals = lattice_points(f, N_max)
    return np.bincount(vals, minlength=N_max + 1)[: N_max + 1]


@dataclass(frozen=True, eq=False)
class ThetaCoefficients:
    character: ClassCharacter
    N_max: int
    r: np.ndarray  # complex, index n, r[0] = 0

    def __getitem__(self, n: int) -> complex:
        return self.r[n]


def class_representation_table(G: ClassGroupData, N_max: int) -> np.ndarray:
    """Integer array (h, N_max+1) of representation counts per reduced form."""
    R = np.stack([representation_counts(f, N_max) for f in G.reduced_forms])
    R[:, 0] = 0
    return R


def r_chi(G: ClassGroupData, chi: ClassCharacter, N_max: int, R: np.ndarray | None = None) -> ThetaCoefficients:
    """r_chi(n) = sum_C chi(C) R_C(n) / w for 1 <= n <= N_max.

    The form of C and of its inverse represent the same integers equally
    often, so the orientation of the class-form dictionary drops out.
    """
    if N_max < 1:
        raise ValueError("N_max must be at least 1")
    if R is None:
        R = class_representation_table(G, N_max)
    vals = chi.values(G)
    r = (vals @ R[:, : N_max + 1]) / G.w
    if chi.is_real:
        r = r.real.astype(complex)
    return ThetaCoefficients(chi, N_max, r)


# ---------------------------------------------------------------------------
# divisor function

def tau(D, n: int) -> int:
    """sum_{m | n} chi_D(m)."""
    D = as_disc(D).D if not isinstance(D, int) else D
    if n < 1:
        raise ValueError("n must be positive")
    t = 1
    for p in arith.prime_factors(n):
        k = 0
        m = n
        while m % p == 0:
            m //= p
            k += 1
        c = arith.kronecker(D, p)
        t *= k + 1 if c == 1 else (1 if c == 0 else (k + 1) % 2)
    return t


@lru_cache(maxsize=2)
def _prime_power_levels(N_max: int) -> list[tuple[np.ndarray, np.ndarray, np.ndarray]]:
    """Per factor level j: (indices m with a j-th prime, that prime, its exponent)."""
    P, K = arith.factor_table(N_max)
    out = []
    for Pj, Kj in zip(P, K):
        idx = np.flatnonzero(Kj)
        out.append((idx, Pj[idx], Kj[idx].astype(np.intp)))
    return out


def tau_table(D: int, N_max: int) -> np.ndarray:
    """tau(n) for 0 <= n <= N_max (tau(0) = 0)."""
    D = int(getattr(D, "D", D))
    period = arith.kronecker_table(D, -D - 1)
    kmax = max(1, int(math.log2(max(N_max, 2)))) + 1
    k = np.arange(kmax + 1)
    # rows: chi(p) = -1, 0, 1
    lut = np.stack([(k + 1) % 2, np.ones_like(k), k + 1])
    out = np.ones(N_max + 1, dtype=np.int64)
    for idx, p, e in _prime_power_levels(int(N_max)):
        c = period[p % len(period)]
        out[idx] *= lut[c + 1, e]
    out[0] = 0
    return out
