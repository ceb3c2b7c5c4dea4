"""Special-function kernels: integer-order Bessel J and the d^1 emission weights.

Bessel functions of the first kind are evaluated without external libraries:
an ascending power series near the origin and Miller's backward recurrence
elsewhere. The recurrence is normalised with the Neumann identity
``J_0^2 + 2 sum_{n>=1} J_n^2 = 1``; the overall sign comes from
``J_0 + 2 sum_{k>=1} J_{2k} = 1``. Negative orders and arguments are
reduced with the reflection identities, never evaluated directly.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import DomainError

__all__ = [
    "SERIES_LIMIT",
    "DomainError",
    "bessel_j",
    "bessel_ladder",
    "bessel_orders",
    "wigner_d1",
]

# Below this |x| the power series is used; its cancellation factor
# I_n(x)/|J_n(x)| stays under ~10 here because J_0 has no zero before 2.405.
SERIES_LIMIT = 2.0

_RESCALE_AT = 1e100


def _series(n: int, x: np.ndarray) -> np.ndarray:
    """Ascending series for J_n(x), n >= 0, used for small |x|."""
    half = 0.5 * x
    if n == 0:
        term = np.ones_like(x)
    else:
        with np.errstate(divide="ignore", under="ignore"):
            log_t0 = n * np.log(np.abs(half)) - math.lgamma(n + 1)
            term = np.where(half == 0.0, 0.0, np.exp(log_t0))
        term = term * np.where(half < 0.0, (-1.0) ** n, 1.0)
    total = term.copy()
    q = half * half
    k = 0
    while True:
        k += 1
        term = -term * q / (k * (n + k))
        total += term
        if np.all(np.abs(term) <= 1e-17 * np.abs(total)) or k > 200:
            return total


def _miller_start(x: np.ndarray, need: np.ndarray) -> np.ndarray:
    """Per-point starting order for the backward recurrence.

    Past the turning point n ~ x the functions decay like Ai over a width of
    (x/2)^(1/3); 20 such widths plus a fixed margin puts the seed far below
    double precision. Depends only on (x, need) so batch results are
    independent of how points are grouped.
    """
    m = np.maximum(need, np.ceil(x)).astype(np.int64)
    start = m + (20.0 * np.cbrt(m / 2.0)).astype(np.int64) + 30
    return start + (start % 2)


def _miller(n_max: int, x: np.ndarray, start: np.ndarray) -> np.ndarray:
    """J_0..J_{n_max} at positive x (1-D) by normalised backward recurrence."""
    out = np.zeros((n_max + 1, x.size))
    f_hi = np.zeros_like(x)
    f = np.zeros_like(x)
    sq = np.zeros_like(x)
    even = np.zeros_like(x)
    top = int(start.max())
    for n in range(top, 0, -1):
        seed = start == n
        if seed.any():
            f[seed] = 1.0
        if n <= n_max:
            out[n] = f
        sq += f * f
        if n % 2 == 0:
            even += f
        f_lo = (2.0 * n / x) * f - f_hi
        f_hi, f = f, f_lo
        big = np.abs(f) > _RESCALE_AT
        if big.any():
            s = 1.0 / _RESCALE_AT
            f[big] *= s
            f_hi[big] *= s
            sq[big] *= s * s
            even[big] *= s
            if n <= n_max:
                with np.errstate(under="ignore"):
                    out[n:, big] *= s
    out[0] = f
    norm = np.sqrt(f * f + 2.0 * sq)
    sign = np.sign(f + 2.0 * even)
    return out * (sign / norm)


def bessel_ladder(n_max: int, x, need=None) -> np.ndarray:
    """Return J_n(x) for n = 0..n_max, shape ``(n_max + 1,) + x.shape``.

    ``need`` optionally gives, per point, the highest order that must be
    accurate; orders above it may be returned as zero. It defaults to
    ``n_max`` everywhere.
    """
    if n_max < 0:
        raise ValueError("n_max must be non-negative")
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise DomainError("Bessel argument must be finite")
    shape = x.shape
    flat = x.ravel()
    if need is None:
        need_flat = np.full(flat.size, n_max, dtype=np.int64)
    else:
        need_flat = np.broadcast_to(np.asarray(need, dtype=np.int64), shape).ravel()
        need_flat = np.minimum(need_flat, n_max)
    ax = np.abs(flat)
    out = np.zeros((n_max + 1, flat.size))

    small = ax < SERIES_LIMIT
    if small.any():
        xs = ax[small]
        for n in range(n_max + 1):
            out[n, small] = _series(n, xs)
    large = ~small
    if large.any():
        xl = ax[large]
        out[:, large] = _miller(n_max, xl, _miller_start(xl, need_flat[large]))

    neg = flat < 0.0
    if neg.any():
        out[1::2, neg] *= -1.0
    return out.reshape((n_max + 1,) + shape)


def bessel_orders(orders, x) -> np.ndarray:
    """J_n(x) for every signed order in ``orders``; shape ``(len(orders),) + x.shape``."""
    orders = np.asarray(orders, dtype=np.int64).ravel()
    if orders.size == 0:
        return np.zeros((0,) + np.shape(x))
    top = int(np.abs(orders).max())
    ladder = bessel_ladder(top, x)
    vals = ladder[np.abs(orders)]
    odd_neg = (orders < 0) & (orders % 2 == 1)
    vals[odd_neg] *= -1.0
    return vals


def bessel_j(n: int, x):
    """Bessel function of the first kind J_n(x) for integer n and real x.

    Accepts scalar or array ``x``; returns a float for scalar input.

    >>> round(bessel_j(0, 1.0), 15)
    0.765197686557967
    """
    n = int(n)
    xa = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(xa)):
        raise DomainError("Bessel argument must be finite")
    vals = bessel_ladder(abs(n), xa)[abs(n)]
    if n < 0 and n % 2:
        vals = -vals
    if np.ndim(x) == 0:
        return float(vals)
    return vals


def wigner_d1(m_z: int, theta):
    """Helicity weights ``((1 + m_z cos t)/2, (1 - m_z cos t)/2)`` of a spin-1 emitter.

    These are the d^1 rotation-matrix elements giving how much of each photon
    helicity an atom with magnetic number ``m_z`` emits at polar angle ``theta``.
    """
    if m_z not in (-1, 0, 1):
        raise DomainError(f"m_z must be -1, 0 or +1, got {m_z!r}")
    c = np.cos(theta)
    alpha_plus = 0.5 * (1.0 + m_z * c)
    alpha_minus = 0.5 * (1.0 - m_z * c)
    if np.ndim(theta) == 0:
        return float(alpha_plus), float(alpha_minus)
    return alpha_plus, alpha_minus
