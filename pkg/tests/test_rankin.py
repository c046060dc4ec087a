import math

import numpy as np
import pytest

from rsclass import classfield, hecke, rankin

C37 = hecke.CURVE_37A
SMOKE = [-3, -4, -23, -47, -71]


@pytest.fixture(scope="module")
def reports(trace_cache):
    return {D: rankin.average_report(C37, D, force=True, cache_dir=trace_cache) for D in SMOKE}


def test_lprime_trivial_character_frozen(trace_cache):
    G = classfield.class_group(-4)
    chi = classfield.characters(G)[0]
    v = rankin.lprime_central(C37, -4, chi, weights=rankin.build_weights(C37, -4, rankin.TruncationParams(), trace_cache))
    assert v == pytest.approx(0.56167305242826, abs=1e-11)


def test_doubled_cutoff_is_stable(trace_cache):
    G = classfield.class_group(-4)
    chi = classfield.characters(G)[0]
    vals = []
    for cm in (16.0, 32.0):
        p = rankin.TruncationParams(cutoff_mult=cm)
        vals.append(rankin.lprime_central(C37, -4, chi, p, weights=rankin.build_weights(C37, -4, p, trace_cache)))
    tail = rankin.tail_certificate(4 * 37, 16 * 4 * 37)
    assert abs(vals[0] - vals[1]) <= tail + 1e-14


def test_conjugate_characters_agree(reports):
    vals = reports[-23].per_character
    assert len(vals) == 3
    # characters(G) lists the trivial character first, then a conjugate pair
    assert vals[1] == pytest.approx(vals[2], rel=1e-12)


def test_h1_average_is_the_single_value(reports):
    for D in (-3, -4):
        rep = reports[D]
        assert rep.h == 1
        assert rep.S_direct == pytest.approx(rep.per_character[0], rel=1e-14)


@pytest.mark.parametrize("D", SMOKE)
def test_identities_on_smoke_set(reports, D):
    rep = reports[D]
    assert rep.identities_ok
    assert rep.identity_error <= rep.tolerance
    assert rep.tail_bound <= rep.tolerance
    assert rep.forced == (D == -23)


@pytest.mark.parametrize("D", SMOKE)
def test_main_term_positive(reports, D):
    assert reports[D].r > 0


def test_half_lattice_counts_each_pair_once(trace_cache):
    p = rankin.TruncationParams()
    for D in (-3, -4, -47):
        W_ = rankin.build_weights(C37, D, p, trace_cache)
        half = rankin.half_lattice_sum(C37, D, p, force=True, weights=W_)
        _, _, v = classfield.lattice_points(classfield.principal_form(D), W_.M)
        full = math.fsum(W_.w[v[v > 0]])
        assert 2 * half == pytest.approx(full, rel=1e-13)


def test_unit_overcount_recorded(reports):
    assert reports[-3].unit_overcount == 3
    assert reports[-4].unit_overcount == 2
    assert reports[-47].unit_overcount == 1


def test_S_main_closed_matches_lattice(trace_cache):
    p = rankin.TruncationParams()
    W_ = rankin.build_weights(C37, -47, p, trace_cache)
    S_main, _ = rankin.average_geometric(C37, -47, p, weights=W_)
    assert rankin.S_main_closed(C37, -47, p, W_) == pytest.approx(S_main, rel=1e-13)


@pytest.mark.parametrize("D", [-4, -47, -71])
def test_main_term_methods_agree(trace_cache, D):
    fd = rankin.main_term(C37, D, cache_dir=trace_cache)
    circ = rankin.main_term(C37, D, cache_dir=trace_cache, method="circle")
    closed = rankin.main_term_closed(C37, D, trace_cache)
    assert circ == pytest.approx(fd, rel=1e-9)
    assert closed == pytest.approx(fd, rel=1e-9)


def test_calibrated_kappa_is_two(trace_cache):
    k = rankin.calibrate_kappa(C37, -4, cache_dir=trace_cache)
    assert k == pytest.approx(rankin.KAPPA, abs=1e-9)
    others = [v for v in rankin.KAPPA_CANDIDATES.values() if v != rankin.KAPPA]
    assert all(abs(k - v) > 0.4 for v in others)


def test_character_values_linear_in_weights(trace_cache):
    W_ = rankin.build_weights(C37, -47, rankin.TruncationParams(), trace_cache)
    G = classfield.class_group(-47)
    base = rankin.character_values(G, W_, explicit=True)
    scaled = rankin.Weights(W_.D, W_.Q, W_.M, 3.5 * W_.w, W_.table)
    assert np.allclose(rankin.character_values(G, scaled, explicit=True), 3.5 * np.array(base), rtol=1e-13)


def test_explicit_and_class_sum_paths_agree(trace_cache):
    W_ = rankin.build_weights(C37, -71, rankin.TruncationParams(), trace_cache)
    G = classfield.class_group(-71)
    a = rankin.character_values(G, W_, explicit=True)
    b = rankin.character_values(G, W_, explicit=False)
    assert np.allclose(a, b, rtol=1e-11, atol=1e-12)


def test_empty_scan():
    assert rankin.average_scan(C37, []) == []


def test_inadmissible_rejected():
    with pytest.raises(rankin.AdmissibilityError, match="not admissible"):
        rankin.check_admissible(C37, -23)
    assert rankin.check_admissible(C37, -23, force=True) == 1
    assert rankin.check_admissible(C37, -47) == -1


def test_non_coprime_rejected_even_when_forced():
    with pytest.raises(rankin.AdmissibilityError, match="coprime"):
        rankin.check_admissible(C37, -148, force=True)


def test_scan_records_failures_and_continues(trace_cache):
    rows = rankin.average_scan(C37, [-23, -4], cache_dir=trace_cache)
    assert rows[0].report is None and "admissible" in rows[0].error
    assert rows[1].report is not None


def test_short_cutoff_aborts_with_requirement(trace_cache):
    with pytest.raises(ArithmeticError, match="cutoff_mult >="):
        rankin.average_report(C37, -47, rankin.TruncationParams(cutoff_mult=2.0), cache_dir=trace_cache)


def test_tail_certificate_decreases_with_cutoff():
    Q = 71 * 37
    vals = [rankin.tail_certificate(Q, int(cm * Q)) for cm in (4, 8, 16, 32)]
    assert all(b < a for a, b in zip(vals, vals[1:]))


def test_truncation_params_validated():
    with pytest.raises(ValueError):
        rankin.TruncationParams(cutoff_mult=0.5)


def test_csv_and_json_rows(reports):
    rows = [rankin.ScanRow(D, reports[D]) for D in (-4, -47)] + [rankin.ScanRow(-7, None, "skipped")]
    text = rankin.scan_to_csv(rows)
    lines = text.strip().split("\n")
    assert lines[0].split(",") == rankin.SCAN_COLUMNS + ["error"]
    assert len(lines) == 4 and lines[-1].endswith("skipped")
    assert '"D": -47' in rankin.scan_to_json(rows)


def test_admissible_discriminants_first_few():
    assert rankin.admissible_discriminants(C37, 4) == [-3, -4, -7, -11]
