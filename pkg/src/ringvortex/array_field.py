"""Vector field of a phased ring of dipole emitters.

Four evaluators share one set of conventions:

* ``exact_dipole_sum``      per-emitter distances and angles, no approximation
* ``farfield_dipole_sum``   common angle theta_k and a linearised phase
* ``jacobi_anger_series``   the far-field sum rewritten as Bessel vortices
* ``continuous_limit``      the N -> infinity closed form

Amplitudes are returned in the spherical basis ``eta_{+1}, eta_0, eta_{-1}``
with ``eta_{+-1} = (-+1, -i, 0)/sqrt(2)`` and ``eta_0 = z``. The physical
prefactor ``omega_0^2 e^2 / (eps_0 c^2)`` is folded into ``amplitude_scale``
and every field is reported at t = 0.

All evaluators are vectorised: ``ObservationPoint.rho`` and ``phi_rho`` may be
arrays of matching shape; ``z`` is a scalar.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ConfigError, DomainError, SingularityError
from .specfun import bessel_ladder

SPEED_OF_LIGHT = 299_792_458.0

COMPONENTS = ("plus", "zero", "minus")
# offset of each component's azimuthal order from l + m_z
COMPONENT_SHIFT = {"plus": -1, "zero": 0, "minus": 1}

_MINUS_I_POW = np.array([1.0, -1.0j, -1.0, 1.0j])


@dataclass(frozen=True)
class ArrayConfig:
    """Geometry and phase program of the ring array (SI units)."""

    n_emitters: int
    radius: float
    phase_param: int
    m_z: int
    wavelength: float
    amplitude_scale: float = 1.0

    def __post_init__(self):
        if int(self.n_emitters) != self.n_emitters or self.n_emitters < 1:
            raise ConfigError(f"n_emitters must be a positive integer, got {self.n_emitters!r}")
        if not self.radius > 0 or not math.isfinite(self.radius):
            raise ConfigError(f"radius must be > 0, got {self.radius!r}")
        if not self.wavelength > 0 or not math.isfinite(self.wavelength):
            raise ConfigError(f"wavelength must be > 0, got {self.wavelength!r}")
        if self.m_z not in (-1, 1):
            raise ConfigError(f"m_z must be -1 or +1, got {self.m_z!r}")
        if int(self.phase_param) != self.phase_param:
            raise ConfigError(f"phase_param must be an integer, got {self.phase_param!r}")
        if not math.isfinite(self.amplitude_scale):
            raise ConfigError("amplitude_scale must be finite")

    @property
    def k(self) -> float:
        return 2.0 * math.pi / self.wavelength

    @property
    def omega(self) -> float:
        return SPEED_OF_LIGHT * self.k

    @property
    def rayleigh_range(self) -> float:
        """z_R = pi w0^2 / lambda with the waist taken equal to the ring radius."""
        return math.pi * self.radius**2 / self.wavelength

    def component_order(self, component: str) -> int:
        """Azimuthal (m = 0) order l + m_z + shift of a spherical component."""
        return self.phase_param + self.m_z + COMPONENT_SHIFT[component]


@dataclass(frozen=True)
class ObservationPoint:
    """Cylindrical coordinates (rho, phi_rho, z); rho and phi_rho may be arrays."""

    rho: float | np.ndarray
    phi_rho: float | np.ndarray
    z: float

    def __post_init__(self):
        if not (self.z > 0 and math.isfinite(self.z)):
            raise DomainError(f"observation plane must satisfy z > 0, got {self.z!r}")
        rho = np.asarray(self.rho, dtype=float)
        if np.any(rho < 0) or not np.all(np.isfinite(rho)):
            raise DomainError("rho must be finite and non-negative")
        if not np.all(np.isfinite(np.asarray(self.phi_rho, dtype=float))):
            raise DomainError("phi_rho must be finite")

    @classmethod
    def from_cartesian(cls, x, y, z: float) -> "ObservationPoint":
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        rho = np.hypot(x, y)
        phi = np.arctan2(y, x)
        if rho.ndim == 0:
            return cls(float(rho), float(phi), z)
        return cls(rho, phi, z)

    def arrays(self) -> tuple[np.ndarray, np.ndarray]:
        rho, phi = np.broadcast_arrays(
            np.asarray(self.rho, dtype=float), np.asarray(self.phi_rho, dtype=float)
        )
        return rho, phi


@dataclass(frozen=True)
class FieldAmplitudes:
    """Complex spherical-basis amplitudes (a+, a0, a-) at one or many points."""

    a_plus: complex | np.ndarray
    a_zero: complex | np.ndarray
    a_minus: complex | np.ndarray

    def component(self, name: str):
        return {"plus": self.a_plus, "zero": self.a_zero, "minus": self.a_minus}[name]

    def norm_sq(self):
        return abs(self.a_plus) ** 2 + abs(self.a_zero) ** 2 + abs(self.a_minus) ** 2

    def scaled(self, c: complex) -> "FieldAmplitudes":
        return FieldAmplitudes(c * self.a_plus, c * self.a_zero, c * self.a_minus)

    def stack(self) -> np.ndarray:
        """Array of shape (3, ...) ordered (plus, zero, minus)."""
        return np.stack(np.broadcast_arrays(self.a_plus, self.a_zero, self.a_minus))


@dataclass(frozen=True)
class TruncationPolicy:
    """Truncation of the Bessel-vortex lattice sums.

    ``max_lattice_index=None`` picks M per point so that every dropped order
    satisfies ``|n| > kappa*rho + margin``. Terms whose Bessel factor is below
    ``term_floor`` times the largest one in the same component are skipped.
    """

    max_lattice_index: int | None = None
    term_floor: float = 1e-16
    margin: int = 40

    def __post_init__(self):
        if self.max_lattice_index is not None and self.max_lattice_index < 1:
            raise ConfigError("max_lattice_index must be >= 1")
        if not self.term_floor > 0:
            raise ConfigError("term_floor must be > 0")

    def lattice_index(self, x: np.ndarray, base: int, n: int) -> np.ndarray:
        if self.max_lattice_index is not None:
            return np.full(x.shape, self.max_lattice_index, dtype=np.int64)
        # smallest |order| left out is (M+1)N - |base|
        need = np.abs(x) + self.margin + abs(base)
        return np.maximum(np.floor(need / n).astype(np.int64), 1)


# -- geometry ----------------------------------------------------------------


def theta_k(config: ArrayConfig, z: float) -> float:
    """Ray angle from an emitter to the axis point at distance z."""
    return math.atan2(config.radius, z)


def kappa(config: ArrayConfig, z: float) -> float:
    """Transverse wavenumber k sin(theta_k)."""
    return config.k * math.sin(theta_k(config, z))


def emitter_positions(config: ArrayConfig) -> list[tuple[float, tuple[float, float, float]]]:
    """``(phi_j, (x, y, 0))`` for j = 0..N-1 with phi_j = 2 pi j / N."""
    out = []
    for j in range(config.n_emitters):
        phi = 2.0 * math.pi * j / config.n_emitters
        out.append((phi, (config.radius * math.cos(phi), config.radius * math.sin(phi), 0.0)))
    return out


def _root_of_unity(order: int, j: int, n: int) -> complex:
    """exp(i order phi_j), reduced modulo N before taking the angle."""
    r = (order * j) % n
    return complex(math.cos(2.0 * math.pi * r / n), math.sin(2.0 * math.pi * r / n))


def _helicity_brackets(m_z: int, cos_t, sin_t):
    """(1 + m_z cos^2, 1 - m_z cos^2) with the small one written as sin^2 (no cancellation)."""
    wide, narrow = 1.0 + cos_t * cos_t, sin_t * sin_t
    return (wide, narrow) if m_z > 0 else (narrow, wide)


def _brackets(config: ArrayConfig, z: float) -> tuple[float, float, float]:
    th = theta_k(config, z)
    plus, minus = _helicity_brackets(config.m_z, math.cos(th), math.sin(th))
    return plus, math.sin(2.0 * th) / math.sqrt(2.0), minus


def _farfield_prefactor(config: ArrayConfig, rho: np.ndarray, z: float) -> np.ndarray:
    """A/(16 pi z) exp(i k (z + (R^2 + rho^2)/(2z))), shared by two evaluators."""
    k = config.k
    curvature = k * (config.radius**2 + rho**2) / (2.0 * z)
    return (config.amplitude_scale / (16.0 * math.pi * z)) * np.exp(1j * (k * z)) * np.exp(
        1j * curvature
    )


# -- evaluators --------------------------------------------------------------


def _ring_sum(orders: tuple[int, ...], n: int, u0: np.ndarray, phi: np.ndarray) -> list[np.ndarray]:
    """S_L = sum_j exp(i L phi_j) exp(-i u0 cos(phi - phi_j)) for each L in ``orders``.

    Near the axis u0 << 1 and high-order sums cancel to ~u0^|L| from unit
    terms. Each exponential is split as 1 + d_j with d_j computed without
    cancellation, the constant part summed exactly over the roots of unity,
    and the remainder accumulated in extended precision.
    """
    ld = np.longdouble
    two_pi = 2 * np.arccos(ld(-1))
    u = u0.astype(ld)
    ph = phi.astype(ld)
    roots = np.exp(1j * two_pi * np.arange(n, dtype=ld) / n).astype(np.clongdouble)
    sums = [np.zeros(u.shape, dtype=np.clongdouble) for _ in orders]
    for j in range(n):
        arg = u * np.cos(ph - two_pi * j / n)
        s_half = np.sin(arg / 2)
        d = (-2 * s_half * s_half) - 1j * np.sin(arg)
        for s, order in zip(sums, orders):
            s += roots[(order * j) % n] * d
    out = []
    for s, order in zip(sums, orders):
        if order % n == 0:
            s += n
        out.append(s.astype(complex))
    return out


def farfield_dipole_sum(config: ArrayConfig, point: ObservationPoint) -> FieldAmplitudes:
    """Direct sum over emitters in the regime z >> R >> rho.

    Every emitter shares the angle theta_k and its own azimuth phi_j; the
    phase is ``k(z + (R^2+rho^2)/(2z)) - kappa rho cos(phi_rho - phi_j)``.
    """
    rho, phi = point.arrays()
    n = config.n_emitters
    orders = tuple(config.component_order(c) for c in COMPONENTS)
    s_plus, s_zero, s_minus = _ring_sum(orders, n, kappa(config, point.z) * rho, phi)
    pref = _farfield_prefactor(config, rho, point.z) / n
    b_plus, b_zero, b_minus = _brackets(config, point.z)
    return _maybe_scalar(
        FieldAmplitudes(pref * b_plus * s_plus, pref * b_zero * s_zero, pref * b_minus * s_minus),
        point,
    )


def lattice_sum(
    base: int, n: int, x: np.ndarray, phi: np.ndarray, policy: TruncationPolicy
) -> np.ndarray:
    """C = sum_m (-i)^n' J_n'(x) exp(i n' phi) over n' = base + m N, |m| <= M."""
    m_point = policy.lattice_index(x, base, n)
    m_top = int(m_point.max()) if m_point.size else 0
    need = abs(base) + n * m_point
    top = abs(base) + n * m_top
    ladder = bessel_ladder(top, x, need=need)
    orders = base + n * np.arange(-m_top, m_top + 1)
    in_range = np.abs(orders - base)[:, None] <= (n * m_point).ravel()[None, :]
    mags = np.abs(ladder[np.abs(orders)]).reshape(orders.size, -1)
    floor = policy.term_floor * np.max(np.where(in_range, mags, 0.0), axis=0).reshape(x.shape)
    total = np.zeros(x.shape, dtype=complex)
    for m in range(-m_top, m_top + 1):
        order = base + m * n
        jn = ladder[abs(order)]
        if order < 0 and order % 2:
            jn = -jn
        keep = (abs(m) <= m_point) & (np.abs(jn) >= floor)
        term = _MINUS_I_POW[order % 4] * jn * np.exp(1j * order * phi)
        total += np.where(keep, term, 0.0)
    return total


def jacobi_anger_series(
    config: ArrayConfig, point: ObservationPoint, policy: TruncationPolicy | None = None
) -> FieldAmplitudes:
    """Far-field sum evaluated as a lattice of Bessel vortices.

    Only orders ``n = l + m_z + shift + m N`` survive the sum over emitters, so
    each component is a sparse Bessel series. Prefactor and phase convention
    match :func:`farfield_dipole_sum` exactly.
    """
    policy = policy or TruncationPolicy()
    rho, phi = point.arrays()
    x = kappa(config, point.z) * rho
    n = config.n_emitters
    pref = _farfield_prefactor(config, rho, point.z)
    brackets = _brackets(config, point.z)
    comps = [
        pref * b * lattice_sum(config.component_order(c), n, x, phi, policy)
        for c, b in zip(COMPONENTS, brackets)
    ]
    return _maybe_scalar(FieldAmplitudes(*comps), point)


def continuous_limit(
    config: ArrayConfig, point: ObservationPoint, normalize_helicity: bool = False
) -> FieldAmplitudes:
    """Closed-form field of a continuous ring (N -> infinity).

    Carries its own normalisation ``A sqrt(kappa/2pi) exp(i k_z z)``; use
    :func:`ring_normalization` to compare against the finite-N evaluators.
    ``normalize_helicity`` applies the optional ``[(1+cos^2 theta_k)/2]^(-1/2)``
    amplitude correction.
    """
    rho, phi = point.arrays()
    th = theta_k(config, point.z)
    kap = config.k * math.sin(th)
    x = kap * rho
    m = config.m_z
    base = config.phase_param + m
    c2 = math.cos(th) ** 2
    pref = config.amplitude_scale * math.sqrt(kap / (2.0 * math.pi)) * np.exp(
        1j * config.k * math.cos(th) * point.z
    )
    if normalize_helicity:
        pref = pref / math.sqrt((1.0 + c2) / 2.0)

    def jn(order):
        vals = bessel_ladder(abs(order), x)[abs(order)]
        return -vals if (order < 0 and order % 2) else vals

    b_plus, b_minus = _helicity_brackets(m, math.cos(th), math.sin(th))
    a_plus = pref * (-0.5j) * np.exp(1j * (base - 1) * phi) * jn(base - 1) * b_plus
    a_minus = pref * (0.5j) * np.exp(1j * (base + 1) * phi) * jn(base + 1) * b_minus
    a_zero = pref * (m / (2.0 * math.sqrt(2.0))) * np.exp(1j * base * phi) * jn(base) * math.sin(
        2.0 * th
    )
    return _maybe_scalar(FieldAmplitudes(a_plus, a_zero, a_minus), point)


def ring_normalization(config: ArrayConfig, z: float) -> complex:
    """Constant G with ``farfield ~= G * continuous_limit`` as N grows.

    Ratio of the on-axis prefactors and of the leading-order phases
    ``(-i)^(l+m_z-1)`` versus ``-i/2``. Exact in relative phase for m_z = -1;
    for m_z = +1 the two closed forms disagree in the sign of the eta_0 term.
    """
    th = theta_k(config, z)
    kap = config.k * math.sin(th)
    k = config.k
    ring = (1.0 / (16.0 * math.pi * z)) * np.exp(1j * (k * z)) * np.exp(
        1j * k * config.radius**2 / (2.0 * z)
    )
    ring *= _MINUS_I_POW[(config.phase_param + config.m_z - 1) % 4]
    cont = math.sqrt(kap / (2.0 * math.pi)) * np.exp(1j * k * math.cos(th) * z) * (-0.5j)
    return complex(ring / cont)


def _expm1i(angle: np.ndarray) -> np.ndarray:
    """exp(i angle) - 1 without cancellation for small angles."""
    h = np.sin(0.5 * angle)
    return -2.0 * h * h + 1j * np.sin(angle)


def _grow(a, b):
    """(1 + a)(1 + b) - 1."""
    return a + b + a * b


def exact_dipole_sum(config: ArrayConfig, point: ObservationPoint) -> FieldAmplitudes:
    """Sum of dipole fields with exact per-emitter distance, polar angle and azimuth.

    The in-plane azimuth is that of ``r_j - rho`` so the sum reduces to
    :func:`farfield_dipole_sum` as rho/R and R/z go to zero.

    Each term is written as its on-axis value (a root of unity times a
    common factor) times ``1 + d_j``. Every factor of ``d_j`` is expressed
    through ``s^2 - R^2 = rho (rho - 2 R cos)`` and evaluated in extended
    precision, since near the axis the d_j cancel to high order in kappa*rho.
    """
    ld = np.longdouble
    rho, phi = point.arrays()
    rho = rho.astype(ld)
    phi = phi.astype(ld)
    n = config.n_emitters
    m = config.m_z
    orders = tuple(config.component_order(c) for c in COMPONENTS)
    powers = (m - 1, m, m + 1)
    two_pi = 2 * np.arccos(ld(-1))
    z = ld(point.z)
    big_r = ld(config.radius)
    k = two_pi / ld(config.wavelength)

    dist0 = np.sqrt(z * z + big_r * big_r)
    cos0, sin0 = z / dist0, big_r / dist0
    b0_plus, b0_minus = _helicity_brackets(m, cos0, sin0)
    base = (b0_plus, np.sqrt(ld(2)) * sin0 * cos0, b0_minus)
    delta0 = big_r * big_r / (dist0 + z)
    roots = np.exp(1j * two_pi * np.arange(n, dtype=ld) / n).astype(np.clongdouble)

    sums = [np.zeros(rho.shape, dtype=np.clongdouble) for _ in orders]
    for j in range(n):
        rel = phi - two_pi * j / n
        ds2 = rho * (rho - 2 * big_r * np.cos(rel))  # s^2 - R^2
        s2 = np.maximum(big_r * big_r + ds2, ld(0))
        dist = np.sqrt(z * z + s2)
        if np.any(dist == 0):
            raise SingularityError(f"observation point coincides with emitter {j}")
        ddist = ds2 / (dist + dist0)
        phase = _expm1i(k * (ds2 - delta0 * ddist) / (dist + z))
        amp = _grow(phase, -ddist / dist)
        # polar-angle brackets relative to their on-axis values
        narrow = (z * z) * ds2 / (big_r * big_r * dist * dist)
        wide = -(z * z) * ds2 / (dist * dist * (dist0 * dist0 + z * z))
        zero = _grow(ds2 / (big_r * (np.sqrt(s2) + big_r)), -ds2 / (dist * dist))
        eps = (wide, zero, narrow) if m > 0 else (narrow, zero, wide)
        # azimuth of r_j - rho relative to phi_j
        psi = np.arctan2(-rho * np.sin(rel), big_r - rho * np.cos(rel))
        for acc, order, p, e in zip(sums, orders, powers, eps):
            acc += roots[(order * j) % n] * _grow(_grow(amp, e), _expm1i(p * psi))
    pref = config.amplitude_scale / (n * 16.0 * math.pi * float(dist0)) * np.exp(
        1j * (config.k * point.z)
    ) * np.exp(1j * float(k * delta0))
    comps = []
    for acc, order, b in zip(sums, orders, base):
        if order % n == 0:
            acc += n
        comps.append(pref * float(b) * acc.astype(complex))
    return _maybe_scalar(FieldAmplitudes(*comps), point)


def electric_field(a: FieldAmplitudes, omega: float) -> FieldAmplitudes:
    """E = dA/dt = -i omega A for a field oscillating as exp(-i omega t)."""
    if not omega > 0:
        raise DomainError("omega must be positive")
    return a.scaled(-1j * omega)


def flux_density(e: FieldAmplitudes, theta: float):
    """Energy flux cos(theta_k) (|E|^2 + |B|^2)/4 with |B| = |E| in the radiation zone."""
    return math.cos(theta) * e.norm_sq() / 2.0


def _maybe_scalar(a: FieldAmplitudes, point: ObservationPoint) -> FieldAmplitudes:
    if np.ndim(point.rho) == 0 and np.ndim(point.phi_rho) == 0:
        return FieldAmplitudes(complex(a.a_plus), complex(a.a_zero), complex(a.a_minus))
    return a


Sampler = Callable[[ObservationPoint], FieldAmplitudes]

EVALUATORS = ("exact", "farfield", "series", "continuous")


def make_sampler(
    config: ArrayConfig, evaluator: str = "farfield", policy: TruncationPolicy | None = None
) -> Sampler:
    """Bind an evaluator to a configuration: ``sampler(point) -> FieldAmplitudes``."""
    if evaluator == "exact":
        return lambda p: exact_dipole_sum(config, p)
    if evaluator == "farfield":
        return lambda p: farfield_dipole_sum(config, p)
    if evaluator == "series":
        pol = policy or TruncationPolicy()
        return lambda p: jacobi_anger_series(config, p, pol)
    if evaluator == "continuous":
        return lambda p: continuous_limit(config, p)
    raise ConfigError(f"unknown evaluator {evaluator!r}; expected one of {EVALUATORS}")
