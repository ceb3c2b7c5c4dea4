"""3D polarization of a vector field: spin density matrix and its parameters.

Conventions follow the spin-1 orientation/alignment parameterisation

    rho = 1/3 { I + 3/2 sum p_i S_i + 2/3 sum_{i<j} p_ij P_ij
                + 1/6 (p_xx - p_yy)(P_xx - P_yy) + 1/2 p_zz P_zz }

with Cartesian spin matrices (S_i)_jk = -i eps_ijk and quadrupole operators
P_ij = 3/2 (S_i S_j + S_j S_i) - 2 delta_ij. Spherical amplitudes map to
Cartesian ones through a_+- = (-+a_x + i a_y)/sqrt(2), a_0 = a_z.
"""

from __future__ import annotations

import math
from dataclasses import astuple, dataclass, fields

import numpy as np

from .array_field import FieldAmplitudes
from .errors import UndefinedPolarizationError, UnsupportedCaseError

SQRT2 = math.sqrt(2.0)

PARAM_NAMES = ("p_x", "p_y", "p_z", "p_xy", "p_xz", "p_yz", "p_xx_minus_yy", "p_zz")

# (low, high) for every parameter of a pure state
BOUNDS = {
    "p_x": (-1.0, 1.0),
    "p_y": (-1.0, 1.0),
    "p_z": (-1.0, 1.0),
    "p_xy": (-1.5, 1.5),
    "p_xz": (-1.5, 1.5),
    "p_yz": (-1.5, 1.5),
    "p_xx_minus_yy": (-3.0, 3.0),
    "p_zz": (-2.0, 1.0),
}


@dataclass(frozen=True)
class PolarizationState:
    intensity: float
    p_x: float
    p_y: float
    p_z: float
    p_xy: float
    p_xz: float
    p_yz: float
    p_xx_minus_yy: float
    p_zz: float

    def params(self) -> tuple[float, ...]:
        return astuple(self)[1:]

    def within_bounds(self, slack: float = 1e-12) -> bool:
        return all(
            BOUNDS[f.name][0] - slack <= getattr(self, f.name) <= BOUNDS[f.name][1] + slack
            for f in fields(self)[1:]
        )


def cartesian_amplitudes(a_plus, a_zero, a_minus):
    """(a_x, a_y, a_z) from spherical amplitudes; the only place the convention lives."""
    a_x = (a_minus - a_plus) / SQRT2
    a_y = -1j * (a_plus + a_minus) / SQRT2
    return a_x, a_y, a_zero


def spherical_amplitudes(a_x, a_y, a_z):
    """Inverse of :func:`cartesian_amplitudes`."""
    return (-a_x + 1j * a_y) / SQRT2, a_z, (a_x + 1j * a_y) / SQRT2


def _intensity(a: FieldAmplitudes) -> float:
    i = float(a.norm_sq())
    if not (i > 0.0 and math.isfinite(i)):
        raise UndefinedPolarizationError("field vanishes; polarization is undefined")
    return i


def density_matrix(a: FieldAmplitudes) -> np.ndarray:
    """Normalised 3x3 density matrix rho_ij = a_i a_j^* in the Cartesian basis."""
    norm = math.sqrt(_intensity(a))
    v = np.array(cartesian_amplitudes(a.a_plus, a.a_zero, a.a_minus), dtype=complex) / norm
    return np.outer(v, v.conj())


def polarization_params(a: FieldAmplitudes) -> PolarizationState:
    """Intensity and the eight orientation/alignment parameters of one field point."""
    intensity = _intensity(a)
    ap, a0, am = (complex(c) for c in (a.a_plus, a.a_zero, a.a_minus))
    ax, ay, az = cartesian_amplitudes(ap, a0, am)
    s = 1.0 / intensity
    return PolarizationState(
        intensity=intensity,
        p_x=-2.0 * (ay * az.conjugate()).imag * s,
        p_y=-2.0 * (az * ax.conjugate()).imag * s,
        p_z=(abs(ap) ** 2 - abs(am) ** 2) * s,
        p_xy=-3.0 * (ax * ay.conjugate()).real * s,
        p_xz=-3.0 * (ax * az.conjugate()).real * s,
        p_yz=-3.0 * (ay * az.conjugate()).real * s,
        p_xx_minus_yy=6.0 * (ap * am.conjugate()).real * s,
        p_zz=(abs(ap) ** 2 + abs(am) ** 2 - 2.0 * abs(a0) ** 2) * s,
    )


def polarization_arrays(a: FieldAmplitudes) -> dict[str, np.ndarray]:
    """Vectorised :func:`polarization_params`; undefined points come back as NaN.

    Also returns ``intensity`` and a boolean ``defined`` mask.
    """
    ap, a0, am = (np.asarray(c, dtype=complex) for c in (a.a_plus, a.a_zero, a.a_minus))
    ap, a0, am = np.broadcast_arrays(ap, a0, am)
    intensity = np.abs(ap) ** 2 + np.abs(a0) ** 2 + np.abs(am) ** 2
    defined = (intensity > 0.0) & np.isfinite(intensity)
    s = np.where(defined, 1.0 / np.where(defined, intensity, 1.0), np.nan)
    ax, ay, az = cartesian_amplitudes(ap, a0, am)
    out = {
        "p_x": -2.0 * (ay * az.conj()).imag * s,
        "p_y": -2.0 * (az * ax.conj()).imag * s,
        "p_z": (np.abs(ap) ** 2 - np.abs(am) ** 2) * s,
        "p_xy": -3.0 * (ax * ay.conj()).real * s,
        "p_xz": -3.0 * (ax * az.conj()).real * s,
        "p_yz": -3.0 * (ay * az.conj()).real * s,
        "p_xx_minus_yy": 6.0 * (ap * am.conj()).real * s,
        "p_zz": (np.abs(ap) ** 2 + np.abs(am) ** 2 - 2.0 * np.abs(a0) ** 2) * s,
    }
    out["intensity"] = intensity
    out["defined"] = defined
    return out


# spin-1 operators in the Cartesian basis
_EPS = np.zeros((3, 3, 3))
for _i, _j, _k in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
    _EPS[_i, _j, _k] = 1.0
    _EPS[_i, _k, _j] = -1.0
SPIN = -1j * _EPS


def quadrupole(i: int, j: int) -> np.ndarray:
    si, sj = SPIN[i], SPIN[j]
    return 1.5 * (si @ sj + sj @ si) - 2.0 * np.eye(3) * (i == j)


def reconstruct_density(p: PolarizationState) -> np.ndarray:
    """Rebuild the unit-trace density matrix from the eight parameters."""
    rho = np.eye(3, dtype=complex)
    rho += 1.5 * (p.p_x * SPIN[0] + p.p_y * SPIN[1] + p.p_z * SPIN[2])
    rho += (2.0 / 3.0) * (p.p_xy * quadrupole(0, 1) + p.p_yz * quadrupole(1, 2) + p.p_xz * quadrupole(0, 2))
    rho += (1.0 / 6.0) * p.p_xx_minus_yy * (quadrupole(0, 0) - quadrupole(1, 1))
    rho += 0.5 * p.p_zz * quadrupole(2, 2)
    return rho / 3.0


# -- leading-order small-angle limits -----------------------------------------


def _inv_factorial(n: int) -> float:
    return 0.0 if n < 0 else 1.0 / math.factorial(n)


def _opposite_weights(l: int, x: float) -> tuple[float, float, float]:
    """Leading-order |E_+|^2, |E_0|^2, |E_-|^2 for m_z = -1 with theta_k^(2l) dropped."""
    q = x / 2.0
    w_plus = _inv_factorial(l - 2) ** 2 * q ** (2 * abs(l - 2))
    w_zero = 2.0 * _inv_factorial(l - 1) ** 2 * q ** (2 * abs(l - 1))
    w_minus = 4.0 * _inv_factorial(l) ** 2 * q ** (2 * l)
    return w_plus, w_zero, w_minus


def analytic_small_angle(l: int, m_z: int, x: float) -> tuple[float, float]:
    """Closed-form (p_z, p_zz) near the axis, to leading order in theta_k.

    ``x`` is k*rho. Same-sign (m_z = +1, l >= 0) fields saturate at (1, 1);
    for m_z = -1 the result depends on x alone, not on the distance z.
    """
    if m_z not in (-1, 1) or l < 0 or int(l) != l:
        raise UnsupportedCaseError(f"no closed form for l={l!r}, m_z={m_z!r}")
    if m_z == 1 or l == 0:
        if m_z == -1:
            return -1.0, 1.0
        return 1.0, 1.0
    q2 = (x / 2.0) ** 2
    if l == 1:
        return -q2 / (q2 + 0.5), (q2 - 1.0) / (q2 + 0.5)
    if l == 2:
        return (1.0 - q2) / (1.0 + q2), (1.0 + q2 * q2 - 4.0 * q2) / (1.0 + q2 * q2 + 2.0 * q2)
    w_plus, w_zero, w_minus = _opposite_weights(l, x)
    total = w_plus + w_zero + w_minus
    if total == 0.0:
        raise UndefinedPolarizationError(f"leading-order field vanishes at x={x!r}")
    return (w_plus - w_minus) / total, (w_plus + w_minus - 2.0 * w_zero) / total
