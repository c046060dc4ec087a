import itertools
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rsclass import arith, classfield as cf
from rsclass.classfield import QuadraticForm as Form

CLASS_NUMBER_ONE = [-3, -4, -7, -8, -11, -19, -43, -67, -163]
CLASS_NUMBER_TWO = [-15, -20, -24, -35, -40, -51, -52, -88, -91, -115, -123, -148,
                    -187, -232, -235, -267, -403, -427]


def naive_reduced(D):
    """Reduced forms by brute force over |b| <= a <= c."""
    out = []
    a = 1
    while 3 * a * a <= -D:
        for b in range(-a + 1, a + 1):
            if (b * b - D) % (4 * a):
                continue
            c = (b * b - D) // (4 * a)
            if c < a or (c == a and b < 0) or math.gcd(math.gcd(a, b), c) != 1:
                continue
            out.append((a, b, c))
        a += 1
    return sorted(out)


def test_discriminant_normalisation():
    assert cf.fundamental_discriminant(1).D == -4
    assert cf.fundamental_discriminant(3).D == -3
    assert cf.fundamental_discriminant(5).D == -20
    d = cf.fundamental_discriminant(23)
    assert (d.D, d.alpha, d.parity_basis) == (-23, 23, True)
    with pytest.raises(ValueError, match="2\\^2"):
        cf.fundamental_discriminant(12)
    with pytest.raises(ValueError):
        cf.as_disc(-12)


def test_reduce_examples():
    assert cf.reduce(Form(2, 3, 4)) == Form(2, -1, 3)
    assert cf.reduce(Form(3, 1, 2)) == Form(2, -1, 3)
    with pytest.raises(ValueError):
        cf.reduce(Form(1, 0, -1))


def test_compose_examples():
    f = Form(2, 1, 3)
    assert cf.compose(f, f) == Form(2, -1, 3)
    assert cf.compose(f, Form(2, -1, 3)) == Form(1, 1, 6)


@pytest.mark.parametrize("D", CLASS_NUMBER_ONE)
def test_class_number_one(D):
    assert cf.class_number(D) == 1


@pytest.mark.parametrize("D", CLASS_NUMBER_TWO)
def test_class_number_two(D):
    assert cf.class_number(D) == 2


def test_reduced_forms_match_brute_force():
    for D in arith.fundamental_discriminants(-1500, -3):
        assert sorted(f.as_list() for f in cf.reduced_forms(D)) == [list(t) for t in naive_reduced(D)]


@pytest.mark.parametrize("D,orders", [(-23, (3,)), (-84, (2, 2)), (-4420, (4, 2, 2)), (-47, (5,))])
def test_group_structure(D, orders):
    G = cf.class_group(D)
    assert tuple(sorted(G.orders, reverse=True)) == orders
    assert G.reduced_forms[0] == cf.principal_form(D)


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(arith.fundamental_discriminants(-3000, -3)))
def test_composition_table_is_abelian_group(D):
    G = cf.class_group(D)
    T = G.composition_table
    h = G.h
    assert np.all(T[0] == np.arange(h))
    assert np.array_equal(T, T.T)
    for i, j, k in itertools.islice(itertools.product(range(h), repeat=3), 200):
        assert T[T[i, j], k] == T[i, T[j, k]]
    assert all(T[i, G.inverse_index(i)] == 0 for i in range(h))


@settings(max_examples=25, deadline=None)
@given(st.sampled_from(arith.fundamental_discriminants(-2000, -3)))
def test_characters_are_homomorphisms(D):
    G = cf.class_group(D)
    chars = cf.characters(G)
    assert len(chars) == G.h and chars[0].is_trivial
    T = G.composition_table
    for chi in chars[:6]:
        v = chi.values(G)
        assert np.allclose(v[T], np.multiply.outer(v, v), atol=1e-13)


def test_json_roundtrip():
    G = cf.class_group(-23)
    obj = json.loads(G.dumps())
    assert obj == {"D": -23, "h": 3, "w": 2, "forms": [[1, 1, 6], [2, -1, 3], [2, 1, 3]],
                   "generators": obj["generators"]}
    assert cf.ClassGroupData.from_json(obj).h == 3


def test_representation_counts_sum_of_two_squares():
    R = cf.representation_counts(cf.principal_form(-4), 50)
    r2 = [sum(1 for x in range(-8, 9) for y in range(-8, 9) if x * x + y * y == n) for n in range(51)]
    assert R.tolist() == r2
    assert R[5] == 8


def test_theta_sums_give_tau():
    """sum over classes of R_C(n)/w equals tau(n) for every n."""
    for D in (-3, -4, -23, -71, -84):
        G = cf.class_group(D)
        R = cf.class_representation_table(G, 2000)
        assert np.array_equal(R.sum(axis=0)[1:], G.w * cf.tau_table(D, 2000)[1:])


def test_r_chi_conjugation_and_trivial():
    G = cf.class_group(-23)
    chars = cf.characters(G)
    r = [cf.r_chi(G, chi, 500).r for chi in chars]
    assert np.allclose(r[1], np.conj(r[2]))
    assert np.allclose(r[0].real, cf.tau_table(-23, 500))
    assert np.all(r[0].imag == 0)


@settings(max_examples=60)
@given(st.sampled_from([-3, -4, -7, -23, -47, -84, -4003]), st.integers(1, 3000), st.integers(1, 3000))
def test_tau_multiplicative(D, m, n):
    if math.gcd(m, n) == 1:
        assert cf.tau(D, m * n) == cf.tau(D, m) * cf.tau(D, n)


def test_tau_at_squares_positive():
    # tau(p^2) = 2 + chi(p) can be 1, so only tau(square) >= 1 holds in general
    for D in (-3, -23, -71):
        t = cf.tau_table(D, 10_000)
        sq = np.arange(1, 101) ** 2
        assert np.all(t[sq] >= 1)
        assert np.all(t >= 0)
