import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from decotunnel.errors import DomainError, PoleError, RootFindingError
from decotunnel.spectral import (
    MODE_COLUMNS,
    POLE_GUARD,
    ROOT_TOL,
    BoxGeometry,
    ClassThresholds,
    ModeClass,
    a_resonant_asymptote,
    b_resonant_asymptote,
    classify_mode,
    dispersion_residual,
    find_modes,
    find_pair,
    intermediate_limit,
    mode_rows,
    near_resonant_params,
    pair_modes,
    pole_lattice,
    regularized_residual,
    resonance_limit,
    symmetric_mode_asymptote,
)


def scan_root_count(g, k_max, n=400_000):
    """Sign changes of sin(kL) + (2 s~/k) sin(k x_A) sin(k x_B) on a fine grid."""
    k = np.linspace(k_max * 1e-6, k_max, n)
    f = np.sin(k * g.length) + 2 * g.s_tilde / k * np.sin(k * g.x_A) * np.sin(k * g.x_B)
    return int(np.count_nonzero(np.signbit(f[1:]) != np.signbit(f[:-1])))


def quadratic_oracle(theta, k0, g):
    """Roots of 1/(x_B dk + theta) + 1/(x_A dk - theta) + 2 s_hat = 0 via numpy.roots."""
    s = g.s_tilde / k0
    xa, xb = g.x_A, g.x_B
    coeffs = [2 * s * xa * xb, g.length + 2 * s * theta * (xa - xb), -2 * s * theta**2]
    return sorted(np.roots(coeffs).real)


# dispersion residual ---------------------------------------------------------


def test_residual_refuses_poles():
    g = BoxGeometry(1.0, 1.0, 50.0)
    with pytest.raises(PoleError):
        dispersion_residual(math.pi, g)
    with pytest.raises(PoleError):
        dispersion_residual(math.pi + 0.5 * POLE_GUARD, g)
    with pytest.raises(DomainError):
        dispersion_residual(0.0, g)


def test_regularized_residual_finite_at_poles():
    g = BoxGeometry(1.0, 1.0, 50.0)
    assert regularized_residual(math.pi, g) == pytest.approx(0.0, abs=1e-14)
    assert math.isfinite(regularized_residual(2.0, g))


def test_symmetric_first_root_matches_asymptote():
    g = BoxGeometry(1.0, 1.0, 50.0)
    k = find_modes(g, 3.5)[0].k
    assert abs(dispersion_residual(k, g)) < 1e-8
    assert k == pytest.approx(3.0788, rel=1.5e-3)
    assert k == pytest.approx(symmetric_mode_asymptote(1, 1.0, 50.0), rel=1.5e-3)


def test_transparent_limit_roots():
    g = BoxGeometry(1.0, 1.0, 1e-9)
    ks = [m.k for m in find_modes(g, 5.0)]
    # free box of length 2: k = pi j / 2
    np.testing.assert_allclose(ks, [math.pi / 2, math.pi, 3 * math.pi / 2], rtol=1e-6)


def test_symmetric_six_modes():
    g = BoxGeometry(1.0, 1.0, 50.0)
    modes = find_modes(g, 3 * math.pi + 0.1)
    ks = [m.k for m in modes]
    assert len(ks) == 6
    np.testing.assert_allclose(ks[1::2], [math.pi, 2 * math.pi, 3 * math.pi], rtol=1e-14)
    for j, k in enumerate(ks[0::2], start=1):
        assert k == pytest.approx(symmetric_mode_asymptote(j, 1.0, 50.0), rel=3e-3)
    assert all(m.mode_class is ModeClass.RESONANT for m in modes)
    assert [m.double_pole for m in modes] == [False, True] * 3


def test_asymmetric_box_classes():
    g = BoxGeometry(2.0, 1.0, 100.0)
    modes = find_modes(g, 2 * math.pi + 0.01)
    assert [m.mode_class for m in modes] == [
        ModeClass.NON_RESONANT_A,
        ModeClass.RESONANT,
        ModeClass.RESONANT,
        ModeClass.NON_RESONANT_A,
        ModeClass.RESONANT,
        ModeClass.RESONANT,
    ]
    assert modes[0].k == pytest.approx(1.5669, abs=1e-4)
    assert modes[0].j_B == 0
    pairs = pair_modes(modes, g)
    assert [p.indices for p in pairs] == [(2, 1), (4, 2)]
    assert pairs[0].plus.k == pytest.approx(math.pi, rel=1e-14)
    assert pairs[0].xi == pytest.approx(-1 / math.sqrt(2), rel=1e-10)


def test_single_section_asymptotes():
    s_tilde = 400.0
    g = BoxGeometry(2.0, 1.0, s_tilde)
    m = find_modes(g, 1.7)[0]
    k, ratio = a_resonant_asymptote(1, g)
    assert m.k == pytest.approx(k, rel=1e-5)
    assert m.amp_ratio == pytest.approx(ratio, rel=0.02)
    assert m.mode_class is ModeClass.NON_RESONANT_A

    g = BoxGeometry(1.0, 2.0, s_tilde)
    m = find_modes(g, 1.7)[0]
    k, ratio = b_resonant_asymptote(1, g)
    assert m.k == pytest.approx(k, rel=1e-5)
    assert m.amp_ratio == pytest.approx(ratio, rel=0.02)
    assert m.mode_class is ModeClass.NON_RESONANT_B


@settings(max_examples=30, deadline=None)
@given(
    st.floats(min_value=0.5, max_value=2.0),
    st.floats(min_value=0.5, max_value=2.0),
    st.floats(min_value=1.0, max_value=200.0),
)
def test_root_count_matches_sign_scan(xa, xb, s):
    g = BoxGeometry(xa, xb, s)
    k_max = 15.0
    poles = [p for p, _ in pole_lattice(g, k_max)]
    # the scan cannot resolve roots squeezed between nearly coincident poles
    assume(min(np.diff(poles)) > 1e-3)
    assume(all(abs(p - k_max) > 1e-3 for p in poles))
    modes = find_modes(g, k_max)
    assert len(modes) == scan_root_count(g, k_max)


@settings(max_examples=40, deadline=None)
@given(
    st.floats(min_value=0.3, max_value=3.0),
    st.floats(min_value=0.3, max_value=3.0),
    st.floats(min_value=0.5, max_value=500.0),
)
def test_mode_invariants(xa, xb, s):
    g = BoxGeometry(xa, xb, s)
    modes = find_modes(g, 12.0)
    ks = [m.k for m in modes]
    assert all(b > a for a, b in zip(ks, ks[1:]))
    for m in modes:
        assert abs(regularized_residual(m.k, g)) < ROOT_TOL
        assert m.energy == pytest.approx(0.5 * m.k**2)
        assert m.k0 * xa == pytest.approx(math.pi * m.j_A - m.theta, abs=1e-9)
        assert m.k0 * xb == pytest.approx(math.pi * m.j_B + m.theta, abs=1e-9)
        assert abs(m.theta) <= math.pi / 2 + 1e-12
        if not m.double_pole:
            expected = -math.sin(m.k * xa) / math.sin(m.k * xb)
            assert m.amp_ratio == pytest.approx(expected, rel=1e-12)


def test_find_modes_rejects_small_k_max():
    with pytest.raises(DomainError):
        find_modes(BoxGeometry(1.0, 1.0, 10.0), 1.0)


@pytest.mark.parametrize("field", ["x_A", "x_B", "s_tilde"])
@pytest.mark.parametrize("bad", [0.0, -1.0, math.nan, math.inf])
def test_geometry_validation(field, bad):
    kwargs = {"x_A": 1.0, "x_B": 1.0, "s_tilde": 1.0, field: bad}
    with pytest.raises(DomainError):
        BoxGeometry(**kwargs)


def test_root_finding_error_carries_bracket():
    err = RootFindingError("no sign change", (1.0, 2.0))
    assert err.bracket == (1.0, 2.0)


# classification --------------------------------------------------------------


@pytest.mark.parametrize(
    "eta,ratio,expected",
    [
        (0.0, 1.0, ModeClass.RESONANT),
        (0.29, 1.0, ModeClass.RESONANT),
        (-1.0, 1.0, ModeClass.NEAR_RESONANT),
        (10.0, 1.0, ModeClass.INTERMEDIATE),
        (40.0, 0.01, ModeClass.NON_RESONANT_A),
        (-40.0, 50.0, ModeClass.NON_RESONANT_B),
    ],
)
def test_classify(eta, ratio, expected):
    assert classify_mode(eta, 100.0, ratio) is expected


def test_custom_thresholds():
    t = ClassThresholds(resonant=1.0, near_resonant=2.0, intermediate_fraction=0.5)
    assert classify_mode(0.5, 100.0, 1.0, t) is ModeClass.RESONANT
    assert classify_mode(45.0, 100.0, 1.0, t) is ModeClass.INTERMEDIATE


# near-resonant branches -----------------------------------------------------


def test_exact_resonance_limits():
    g = BoxGeometry(1.0, 1.0, 100.0)
    p = near_resonant_params(0.0, math.pi, g)
    s = 100.0 / math.pi
    assert p.dk_plus == 0.0
    assert p.dk_minus == pytest.approx(-1.0 / s, rel=1e-14)
    assert p.ratio_plus == 1.0
    assert p.ratio_minus == pytest.approx(-1.0, rel=1e-14)
    assert p.xi == 1.0


@settings(max_examples=100)
@given(
    st.floats(min_value=0.2, max_value=5.0),
    st.floats(min_value=0.2, max_value=5.0),
    st.floats(min_value=-1.5, max_value=1.5),
    st.floats(min_value=10.0, max_value=1e4),
    st.sampled_from([1, -1]),
)
def test_branch_product_and_quadratic(xa, xb, theta, s_hat, sigma):
    g = BoxGeometry(xa, xb, s_hat * 3.0)
    p = near_resonant_params(theta, 3.0, g, sigma)
    assert p.ratio_minus * p.ratio_plus == pytest.approx(-xa / xb, rel=1e-9)
    assert p.F_minus * p.F_plus == pytest.approx(-xb / xa, rel=1e-9)
    lo, hi = quadratic_oracle(theta, 3.0, g)
    scale = max(abs(lo), abs(hi))
    assert p.dk_minus == pytest.approx(lo, abs=1e-9 * scale)
    assert p.dk_plus == pytest.approx(hi, abs=1e-9 * scale)
    assert p.D == pytest.approx((p.eta * (xa - xb) + g.length) ** 2 + 4 * xa * xb * p.eta**2, rel=1e-12)
    if abs(p.eta) < 100:
        for dk, r in ((lo, p.ratio_minus), (hi, p.ratio_plus)):
            assert r == pytest.approx(sigma / (1 + 2 * p.s_hat * (xb * dk + theta)), rel=1e-6)


def test_intermediate_asymptote():
    g = BoxGeometry(1.0, 1.3, 1000.0 * math.pi)
    s_hat = 1000.0
    theta = 50.0 / (2 * s_hat)
    p = near_resonant_params(theta, math.pi, g, sigma=1)
    lim = intermediate_limit(p.eta, s_hat, g)
    for key in ("dk_minus", "dk_plus", "ratio_minus", "ratio_plus"):
        assert getattr(p, key) == pytest.approx(lim[key], rel=0.05), key
    p = near_resonant_params(-theta, math.pi, g, sigma=1)
    lim = intermediate_limit(p.eta, s_hat, g)
    for key in ("dk_minus", "dk_plus", "ratio_minus", "ratio_plus"):
        assert getattr(p, key) == pytest.approx(lim[key], rel=0.05), key


@pytest.mark.parametrize("eta", [1e-3, -1e-3, 1e-2])
def test_resonance_expansion(eta):
    g = BoxGeometry(1.0, 1.5, 300.0)
    k0 = 3.0
    s_hat = 100.0
    p = near_resonant_params(eta / (2 * s_hat), k0, g)
    lim = resonance_limit(eta, s_hat, g)
    assert p.dk_minus == pytest.approx(lim["dk_minus"], rel=5 * eta**2 + 1e-9)
    assert p.ratio_minus == pytest.approx(lim["ratio_minus"], rel=5 * eta**2 + 1e-9)
    assert p.ratio_plus == pytest.approx(lim["ratio_plus"], rel=5 * eta**2 + 1e-9)
    assert p.dk_plus == pytest.approx(lim["dk_plus"], rel=5 * abs(eta) + 1e-9)


def test_exact_pair_product_close_to_minus_one():
    for s in (50.0, 200.0, 800.0):
        g = BoxGeometry(2.0, 1.0, s * math.pi)
        pair = find_pair(g, 2, 1)
        assert abs(pair.ratio_product(g) + 1.0) < 5.0 / s**2


def test_near_resonant_pair_frequency():
    # x_B slightly longer than x_A gives a small detuning at (1, 1)
    g = BoxGeometry(1.0, 1.003, 300 * math.pi)
    pair = find_pair(g, 1, 1)
    assert pair.plus.mode_class is ModeClass.NEAR_RESONANT
    p = near_resonant_params(pair.plus.theta, pair.k0, g, pair.sigma)
    assert pair.delta_omega == pytest.approx(p.delta_omega, rel=0.01)
    assert pair.xi == pytest.approx(p.xi, rel=0.02)


def test_splitting_shrinks_with_barrier():
    widths = [find_pair(BoxGeometry(1.0, 1.0, s), 1, 1).delta_omega for s in (20, 200, 2000)]
    assert widths[0] > widths[1] > widths[2]
    assert widths[2] == pytest.approx(math.pi**2 / 2000, rel=0.01)


def test_find_pair_missing():
    with pytest.raises(DomainError):
        find_pair(BoxGeometry(1.0, 1.0, 100.0), 5, 7)


def test_mode_rows_shape():
    modes = find_modes(BoxGeometry(1.0, 1.0, 50.0), 7.0)
    rows = mode_rows(modes)
    assert len(rows[0]) == len(MODE_COLUMNS)
    assert rows[1][-1] == "Resonant"
