import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import jv

from _support import RADIUS, WAVELENGTH, ring
from ringvortex.array_field import (
    COMPONENTS,
    EVALUATORS,
    ArrayConfig,
    FieldAmplitudes,
    ObservationPoint,
    TruncationPolicy,
    continuous_limit,
    electric_field,
    emitter_positions,
    exact_dipole_sum,
    farfield_dipole_sum,
    flux_density,
    jacobi_anger_series,
    kappa,
    make_sampler,
    ring_normalization,
    theta_k,
)
from ringvortex.errors import ConfigError, DomainError


def naive_exact(cfg, point):
    """Oracle: textbook per-emitter dipole sum in Cartesian geometry."""
    rho, phi = point.arrays()
    z, n, big_r, k, m, l = point.z, cfg.n_emitters, cfg.radius, cfg.k, cfg.m_z, cfg.phase_param
    acc = np.zeros((3,) + rho.shape, dtype=complex)
    for j in range(n):
        pj = 2 * math.pi * j / n
        dx = big_r * math.cos(pj) - rho * np.cos(phi)
        dy = big_r * math.sin(pj) - rho * np.sin(phi)
        s = np.hypot(dx, dy)
        dist = np.sqrt(z * z + s * s)
        c, sn = z / dist, s / dist
        e = np.exp(1j * np.arctan2(dy, dx))
        common = np.exp(1j * l * pj) * np.exp(1j * k * (dist - z)) / dist
        acc[0] += common * (1 + m * c * c) * e ** (m - 1)
        acc[1] += common * math.sqrt(2) * sn * c * e**m
        acc[2] += common * (1 - m * c * c) * e ** (m + 1)
    return acc * cfg.amplitude_scale / (n * 16 * math.pi) * np.exp(1j * k * z)


def scipy_continuous(cfg, point):
    """Oracle: the N -> infinity closed form with scipy's Bessel functions."""
    rho, phi = point.arrays()
    th = math.atan(cfg.radius / point.z)
    kap = cfg.k * math.sin(th)
    n = cfg.phase_param + cfg.m_z
    m = cfg.m_z
    pref = math.sqrt(kap / (2 * math.pi)) * np.exp(1j * cfg.k * math.cos(th) * point.z)
    c2 = math.cos(th) ** 2
    return pref * np.array([
        -0.5j * np.exp(1j * (n - 1) * phi) * jv(n - 1, kap * rho) * (1 + m * c2),
        m / (2 * math.sqrt(2)) * np.exp(1j * n * phi) * jv(n, kap * rho) * math.sin(2 * th),
        0.5j * np.exp(1j * (n + 1) * phi) * jv(n + 1, kap * rho) * (1 - m * c2),
    ])


def grid_point(extent, res, z):
    t = np.linspace(-extent, extent, res)
    gx, gy = np.meshgrid(t, t)
    return ObservationPoint.from_cartesian(gx, gy, z)


# -- types -------------------------------------------------------------------


def test_config_validation():
    with pytest.raises(ConfigError):
        ArrayConfig(0, RADIUS, 1, -1, WAVELENGTH)
    with pytest.raises(ConfigError):
        ArrayConfig(3, -1.0, 1, -1, WAVELENGTH)
    with pytest.raises(ConfigError):
        ArrayConfig(3, RADIUS, 1, 0, WAVELENGTH)
    with pytest.raises(ConfigError):
        ArrayConfig(3, RADIUS, 1, -1, 0.0)


def test_derived_quantities():
    cfg = ring(12, 1)
    assert cfg.k == pytest.approx(2 * math.pi / WAVELENGTH)
    assert cfg.rayleigh_range == pytest.approx(math.pi, rel=1e-15)
    assert theta_k(cfg, 1.0) == pytest.approx(math.atan(RADIUS))
    assert kappa(cfg, 1.0) == pytest.approx(cfg.k * math.sin(math.atan(RADIUS)))


def test_observation_point_validation():
    with pytest.raises(DomainError):
        ObservationPoint(0.0, 0.0, 0.0)
    with pytest.raises(DomainError):
        ObservationPoint(-1e-6, 0.0, 1.0)
    p = ObservationPoint.from_cartesian(0.0, -2.0, 1.0)
    assert p.rho == 2.0 and p.phi_rho == pytest.approx(-math.pi / 2)


def test_truncation_policy_validation():
    with pytest.raises(ConfigError):
        TruncationPolicy(max_lattice_index=0)
    with pytest.raises(ConfigError):
        TruncationPolicy(term_floor=0.0)


def test_emitter_positions():
    one = emitter_positions(ring(1, 0))
    assert one == [(0.0, (RADIUS, 0.0, 0.0))]
    four = emitter_positions(ring(4, 0))
    assert [p for p, _ in four] == pytest.approx([0, math.pi / 2, math.pi, 3 * math.pi / 2])
    for _, pos in emitter_positions(ring(7, 2)):
        assert math.hypot(*pos) == pytest.approx(RADIUS, rel=1e-15)


# -- exact sum ---------------------------------------------------------------


def test_exact_single_emitter_overhead():
    cfg = ring(1, 0, +1)
    z = 0.5
    a = exact_dipole_sum(cfg, ObservationPoint(RADIUS, 0.0, z))
    expected = 2.0 / (16 * math.pi * z) * np.exp(1j * cfg.k * z)
    assert a.a_plus == pytest.approx(expected, rel=1e-12)
    assert abs(a.a_zero) < 1e-12 * abs(expected)
    assert abs(a.a_minus) < 1e-12 * abs(expected)


@pytest.mark.parametrize("n,l,m_z", [(12, 1, -1), (3, 2, -1), (12, 1, 1), (1, 0, 1), (5, -2, 1)])
def test_exact_matches_naive_sum(n, l, m_z):
    cfg = ring(n, l, m_z)
    rho = np.linspace(1e-5, 2e-3, 40)
    phi = np.linspace(0.0, 6.0, 40)
    for z in (2e-3, 0.05):
        point = ObservationPoint(rho, phi, z)
        got = exact_dipole_sum(cfg, point).stack()
        ref = naive_exact(cfg, point)
        norm = np.sqrt(np.sum(np.abs(ref) ** 2, axis=0))
        assert np.max(np.abs(got - ref) / norm) < 1e-9


@pytest.mark.parametrize("n,l,m_z", [(12, 1, -1), (3, 2, -1), (12, 1, 1), (6, 3, 1), (12, 3, -1)])
def test_exact_agrees_with_farfield(n, l, m_z):
    # relative to the local field norm; the weakest component is O(rho/R) off
    cfg = ring(n, l, m_z)
    z = 2 * cfg.rayleigh_range
    rho, phi = np.meshgrid(np.linspace(0.1, 10, 30) * WAVELENGTH, np.linspace(0, 2 * math.pi, 16, endpoint=False))
    point = ObservationPoint(rho, phi, z)
    a = exact_dipole_sum(cfg, point).stack()
    b = farfield_dipole_sum(cfg, point).stack()
    norm = np.sqrt(np.sum(np.abs(a) ** 2, axis=0))
    assert np.max(np.abs(a - b) / norm) < 1e-3


# -- far-field sum and series ------------------------------------------------


def test_farfield_axis_selection():
    cfg = ring(12, 1)
    a = farfield_dipole_sum(cfg, ObservationPoint(0.0, 0.0, cfg.rayleigh_range))
    assert a.a_plus == 0 and a.a_minus == 0
    assert abs(a.a_zero) > 0


def test_series_axis_value():
    cfg = ring(12, 1)
    z = cfg.rayleigh_range
    s = jacobi_anger_series(cfg, ObservationPoint(0.0, 0.0, z))
    f = farfield_dipole_sum(cfg, ObservationPoint(0.0, 0.0, z))
    assert s.a_plus == 0 and s.a_minus == 0
    assert s.a_zero == pytest.approx(f.a_zero, rel=1e-14)


@pytest.mark.parametrize("n", [3, 6, 12])
@pytest.mark.parametrize("l", [1, 2, 3])
def test_series_equals_direct_sum(n, l):
    cfg = ring(n, l)
    point = grid_point(10 * WAVELENGTH, 24, cfg.rayleigh_range)
    a = farfield_dipole_sum(cfg, point).stack()
    b = jacobi_anger_series(cfg, point).stack()
    norm = np.sqrt(np.sum(np.abs(a) ** 2, axis=0))
    assert np.max(np.abs(a - b) / norm) <= 1e-10


def test_series_equals_direct_sum_far_from_axis():
    # kappa*rho ~ 10: many lattice orders contribute
    cfg = ring(5, 2, +1)
    z = 2 * cfg.rayleigh_range
    point = grid_point(10 / kappa(cfg, z), 15, z)
    a = farfield_dipole_sum(cfg, point).stack()
    b = jacobi_anger_series(cfg, point).stack()
    assert np.max(np.abs(a - b)) <= 1e-10 * np.max(np.abs(a))


def test_series_forced_truncation_is_worse():
    cfg = ring(3, 1)
    point = grid_point(10 * WAVELENGTH, 16, cfg.rayleigh_range)
    a = farfield_dipole_sum(cfg, point).stack()
    b = jacobi_anger_series(cfg, point, TruncationPolicy(max_lattice_index=1)).stack()
    norm = np.sqrt(np.sum(np.abs(a) ** 2, axis=0))
    assert np.max(np.abs(a - b) / norm) > 1e-10


def test_leading_order_of_sparse_array():
    # N=3, l=2: the minus component is dominated by order -1, not +2
    cfg = ring(3, 2)
    z = 2 * cfg.rayleigh_range
    rho = 0.5 * WAVELENGTH
    phi = np.linspace(0, 2 * math.pi, 64, endpoint=False)
    a = jacobi_anger_series(cfg, ObservationPoint(np.full_like(phi, rho), phi, z))
    ratio = a.a_minus / np.exp(-1j * phi)
    assert np.std(ratio) < 1e-3 * np.abs(np.mean(ratio))


# -- continuous limit --------------------------------------------------------


@pytest.mark.parametrize("l,m_z", [(1, -1), (0, 1), (3, -1), (2, 1), (-2, 1)])
def test_continuous_matches_scipy_oracle(l, m_z):
    cfg = ring(12, l, m_z)
    z = cfg.rayleigh_range
    point = grid_point(3e-3, 21, z)
    got = continuous_limit(cfg, point).stack()
    ref = scipy_continuous(cfg, point)
    assert np.max(np.abs(got - ref)) < 1e-12 * np.max(np.abs(ref))


def test_continuous_axis_examples():
    cfg = ring(12, 1, -1)
    a = continuous_limit(cfg, ObservationPoint(0.0, 0.0, cfg.rayleigh_range))
    assert a.a_plus == 0 and a.a_minus == 0 and a.a_zero != 0
    cfg = ring(12, 0, +1)
    a = continuous_limit(cfg, ObservationPoint(0.0, 0.0, cfg.rayleigh_range))
    assert a.a_plus != 0 and a.a_zero == 0 and a.a_minus == 0


@pytest.mark.parametrize("l,m_z", [(1, -1), (3, -1), (2, 1)])
def test_continuous_plus_phase_advance(l, m_z):
    cfg = ring(12, l, m_z)
    phi = np.linspace(0, 2 * math.pi, 513)
    a = continuous_limit(cfg, ObservationPoint(np.full_like(phi, WAVELENGTH), phi, cfg.rayleigh_range))
    total = np.sum(np.angle(a.a_plus[1:] / a.a_plus[:-1]))
    assert total == pytest.approx(2 * math.pi * (l + m_z - 1), abs=1e-9)


def test_continuum_limit_large_n():
    cfg = ring(512, 1)
    z = cfg.rayleigh_range
    r, p = np.meshgrid(np.linspace(0, 5 * WAVELENGTH, 51), np.linspace(0, 2 * math.pi, 8, endpoint=False))
    point = ObservationPoint(r, p, z)
    f = farfield_dipole_sum(cfg, point).stack()
    c = ring_normalization(cfg, z) * continuous_limit(cfg, point).stack()
    for i in range(3):
        assert np.max(np.abs(f[i] - c[i])) <= 1e-3 * np.max(np.abs(c[i]))


def test_continuum_same_sign_zero_component_sign():
    # for m_z = +1 the longitudinal term of the closed form has the opposite sign
    cfg = ring(512, 1, +1)
    z = cfg.rayleigh_range
    point = ObservationPoint(np.linspace(0.1, 5, 20) * WAVELENGTH, np.linspace(0, 3, 20), z)
    f = farfield_dipole_sum(cfg, point).stack()
    c = ring_normalization(cfg, z) * continuous_limit(cfg, point).stack()
    for i in (0, 2):
        assert np.max(np.abs(f[i] - c[i])) <= 1e-3 * np.max(np.abs(c[i]))
    assert np.max(np.abs(f[1] + c[1])) <= 1e-3 * np.max(np.abs(c[1]))


def test_helicity_normalization_flag():
    cfg = ring(12, 1)
    p = ObservationPoint(WAVELENGTH, 0.3, 2.0)
    a = continuous_limit(cfg, p).stack()
    b = continuous_limit(cfg, p, normalize_helicity=True).stack()
    c2 = math.cos(theta_k(cfg, 2.0)) ** 2
    assert np.allclose(b, a / math.sqrt((1 + c2) / 2), rtol=1e-15, atol=0)


# -- derived fields and symmetries -------------------------------------------


def test_electric_field_examples():
    e = electric_field(FieldAmplitudes(1, 0, 0), 1.0)
    assert e.a_plus == -1j and e.a_zero == 0 and e.a_minus == 0
    a = FieldAmplitudes(0.3 + 1j, -2j, 0.5)
    assert electric_field(a, 7.0).norm_sq() == pytest.approx(49.0 * a.norm_sq())
    with pytest.raises(DomainError):
        electric_field(a, 0.0)


def test_flux_examples():
    assert flux_density(FieldAmplitudes(0, 0, 0), 0.1) == 0.0
    e = FieldAmplitudes(1 + 1j, 0.5, -2j)
    assert flux_density(e.scaled(3 - 4j), 0.2) == pytest.approx(25 * flux_density(e, 0.2))


def test_flux_ring_with_dark_core():
    cfg = ring(12, 1)
    z = 2 * cfg.rayleigh_range
    rho = np.linspace(0, 5 / kappa(cfg, z), 400)
    a = farfield_dipole_sum(cfg, ObservationPoint(rho, 0.0 * rho, z))
    transverse = np.abs(a.a_plus) ** 2 + np.abs(a.a_minus) ** 2
    assert transverse[0] == 0.0
    flux = np.asarray(flux_density(electric_field(a, cfg.omega), theta_k(cfg, z)))
    peak = np.argmax(flux)
    assert 0 < peak < rho.size - 1
    assert flux[0] < 1e-3 * flux[peak]


@pytest.mark.parametrize("evaluator", EVALUATORS)
@pytest.mark.parametrize("n", [3, 5, 12])
def test_discrete_rotation_symmetry(evaluator, n):
    cfg = ring(n, 2)
    z = 1.5 * cfg.rayleigh_range
    sampler = make_sampler(cfg, evaluator)
    rho, phi = np.meshgrid(np.linspace(0, 8, 17) * WAVELENGTH, np.linspace(0, 2 * math.pi, 11))
    f0 = sampler(ObservationPoint(rho, phi, z)).norm_sq()
    f1 = sampler(ObservationPoint(rho, phi + 2 * math.pi / n, z)).norm_sq()
    assert np.max(np.abs(f1 - f0)) <= 1e-12 * np.max(f0)


@settings(max_examples=40, deadline=None)
@given(n=st.integers(1, 16), l=st.integers(-6, 6), m_z=st.sampled_from([-1, 1]))
def test_null_selection_on_axis(n, l, m_z):
    cfg = ArrayConfig(n, RADIUS, l, m_z, WAVELENGTH)
    point = ObservationPoint(0.0, 0.0, cfg.rayleigh_range)
    for evaluator in ("farfield", "series", "exact"):
        a = make_sampler(cfg, evaluator)(point)
        scale = math.sqrt(a.norm_sq())
        for c in COMPONENTS:
            reachable = cfg.component_order(c) % n == 0
            mag = abs(a.component(c))
            if reachable:
                assert mag > 1e-12 * scale
            else:
                assert mag <= 1e-12 * scale


@settings(max_examples=30, deadline=None)
@given(scale=st.floats(0.01, 100.0), evaluator=st.sampled_from(EVALUATORS))
def test_linearity_in_amplitude(scale, evaluator):
    base = ring(6, 1)
    scaled = ring(6, 1, amplitude_scale=scale)
    p = ObservationPoint(np.array([0.5, 3.0]) * WAVELENGTH, np.array([0.2, 2.0]), base.rayleigh_range)
    a = make_sampler(base, evaluator)(p).stack()
    b = make_sampler(scaled, evaluator)(p).stack()
    assert np.allclose(b, scale * a, rtol=1e-13, atol=0)


def test_scalar_and_array_inputs_agree():
    cfg = ring(6, 2)
    z = cfg.rayleigh_range
    rho = np.array([0.3, 2.0]) * WAVELENGTH
    phi = np.array([1.0, -2.0])
    for ev in EVALUATORS:
        s = make_sampler(cfg, ev)
        arr = s(ObservationPoint(rho, phi, z)).stack()
        for i in range(2):
            one = s(ObservationPoint(float(rho[i]), float(phi[i]), z))
            assert isinstance(one.a_plus, complex)
            norm = np.sqrt(np.sum(np.abs(arr[:, i]) ** 2))
            assert np.max(np.abs(one.stack() - arr[:, i])) <= 1e-14 * norm


def test_unknown_evaluator():
    with pytest.raises(ConfigError):
        make_sampler(ring(3, 1), "magic")


def mpmath_exact(cfg, rho, phi, z):
    """High-precision oracle for the per-emitter sum at a single point."""
    import mpmath as mp

    with mp.workdps(40):
        n, m, l = cfg.n_emitters, cfg.m_z, cfg.phase_param
        big_r, k = mp.mpf(cfg.radius), 2 * mp.pi / mp.mpf(cfg.wavelength)
        rho, phi, z = mp.mpf(rho), mp.mpf(phi), mp.mpf(z)
        acc = [mp.mpc(0)] * 3
        for j in range(n):
            pj = 2 * mp.pi * j / n
            dx, dy = big_r * mp.cos(pj) - rho * mp.cos(phi), big_r * mp.sin(pj) - rho * mp.sin(phi)
            dist = mp.sqrt(z * z + dx * dx + dy * dy)
            c, s = z / dist, mp.sqrt(dx * dx + dy * dy) / dist
            e = mp.expj(mp.atan2(dy, dx))
            common = mp.expj(l * pj) * mp.expj(k * (dist - z)) / dist
            acc[0] += common * (1 + m * c * c) * e ** (m - 1)
            acc[1] += common * mp.sqrt(2) * s * c * e**m
            acc[2] += common * (1 - m * c * c) * e ** (m + 1)
        return np.array([complex(a / (n * 16 * mp.pi)) for a in acc])


@pytest.mark.parametrize("n,l,m_z", [(6, 2, -1), (12, 3, -1), (7, 2, 1)])
def test_exact_near_axis_against_mpmath(n, l, m_z):
    # near the axis the terms cancel to high order (the field is ~1e-10 of one
    # term for l=3), which bounds extended-precision accuracy at ~1e-12 of the norm;
    # compare modulo the common exp(ikz)
    cfg = ring(n, l, m_z)
    z = cfg.rayleigh_range
    for rho, phi in ((0.3e-6, 1.0), (2e-6, -2.0), (1e-4, 0.5)):
        got = exact_dipole_sum(cfg, ObservationPoint(rho, phi, z)).stack() * np.exp(-1j * cfg.k * z)
        ref = mpmath_exact(cfg, rho, phi, z)
        r = np.vdot(got, ref)
        got = got * r / abs(r)
        assert np.max(np.abs(got - ref)) < 1e-11 * np.linalg.norm(ref)
