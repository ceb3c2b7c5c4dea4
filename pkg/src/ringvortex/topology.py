"""Topological structure of the array field: charges, thresholds, winding, singularities."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .array_field import COMPONENT_SHIFT, COMPONENTS, ObservationPoint, Sampler
from .errors import ConfigError, DomainError, WindingResolutionError

UNDEFINED = None

# loop samples below this fraction of the loop maximum make the winding undefined
AMPLITUDE_FLOOR = 1e-3
# largest accepted phase step between neighbouring samples, in units of pi
MAX_STEP = 0.9
# candidate minima deeper than this fraction of the grid maximum are singular
NULL_DEPTH = 1e-6


def _check_component(component: str) -> None:
    if component not in COMPONENTS:
        raise ConfigError(f"component must be one of {COMPONENTS}, got {component!r}")


def component_thresholds(l: int, m_z: int) -> dict[str, int]:
    """Least N keeping the m=0 order the unique minimum for each component."""
    n = l + m_z
    return {"plus": 2 * n - 1, "zero": 2 * n + 1, "minus": 2 * n + 3}


def min_atoms(l: int, m_z: int) -> int:
    """Least number of emitters for which all three components carry their m=0 vortex.

    >>> min_atoms(1, -1), min_atoms(2, -1), min_atoms(1, 1)
    (3, 5, 7)
    """
    if l < 0:
        raise DomainError("phase parameter l must be non-negative")
    if m_z not in (-1, 1):
        raise DomainError(f"m_z must be -1 or +1, got {m_z!r}")
    return 2 * (l + m_z) + 3


@dataclass(frozen=True)
class ChargeReport:
    component: str
    leading_orders: tuple[int, ...]
    lattice_stride: int
    base_order: int

    @property
    def mixed(self) -> bool:
        """Two orders tie for the minimum, so no single winding exists."""
        return len(self.leading_orders) > 1

    @property
    def charge(self) -> int | None:
        return None if self.mixed else self.leading_orders[0]


def leading_charges(l: int, m_z: int, n_emitters: int) -> dict[str, ChargeReport]:
    """Minimal-|n| entries of the order lattice ``base + m N`` for every component."""
    if n_emitters < 1:
        raise DomainError("n_emitters must be at least 1")
    out = {}
    for c in COMPONENTS:
        base = l + m_z + COMPONENT_SHIFT[c]
        r = base % n_emitters
        cands = sorted({r, r - n_emitters}, key=lambda v: (abs(v), v))
        best = abs(cands[0])
        orders = tuple(sorted(v for v in cands if abs(v) == best))
        out[c] = ChargeReport(c, orders, n_emitters, base)
    return out


def _loop_values(sampler: Sampler, component, radius, z, samples, center):
    phi = 2.0 * math.pi * np.arange(samples) / samples
    cx, cy = center
    x = cx + radius * np.cos(phi)
    y = cy + radius * np.sin(phi)
    a = sampler(ObservationPoint.from_cartesian(x, y, z))
    return np.asarray(a.component(component), dtype=complex).reshape(samples)


def winding_number(
    sampler: Sampler,
    component: str,
    loop_radius: float,
    z: float,
    samples: int = 256,
    center: tuple[float, float] = (0.0, 0.0),
) -> int | None:
    """Net phase winding of one component on a circle, or ``None`` if undefined.

    Raises WindingResolutionError when neighbouring samples differ in phase
    by more than 0.9 pi; more samples usually resolve it.
    """
    _check_component(component)
    if not loop_radius > 0:
        raise DomainError("loop_radius must be positive")
    if samples < 64:
        raise DomainError("at least 64 loop samples are required")
    vals = _loop_values(sampler, component, loop_radius, z, samples, center)
    mag = np.abs(vals)
    top = mag.max()
    if not top > 0 or np.any(mag < AMPLITUDE_FLOOR * top):
        return UNDEFINED
    steps = np.angle(np.roll(vals, -1) / vals)
    if np.any(np.abs(steps) > MAX_STEP * math.pi):
        raise WindingResolutionError(
            f"phase step {np.abs(steps).max():.3f} rad exceeds {MAX_STEP} pi; increase samples above {samples}"
        )
    return int(round(steps.sum() / (2.0 * math.pi)))


@dataclass(frozen=True)
class SingularityRecord:
    location: tuple[float, float]
    kind: str  # "phase-vortex" or "flux-null"
    winding: int | None
    component: str


@dataclass(frozen=True)
class GridSpec:
    """Square grid of ``resolution`` points per axis over [-extent, extent]^2 at distance z."""

    extent: float
    resolution: int
    z: float
    center: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if not self.extent > 0:
            raise ConfigError("grid extent must be positive")
        if self.resolution < 2:
            raise ConfigError("grid resolution must be at least 2")
        if not self.z > 0:
            raise ConfigError("z must be positive")

    @property
    def step(self) -> float:
        return 2.0 * self.extent / (self.resolution - 1)

    def axes(self) -> tuple[np.ndarray, np.ndarray]:
        t = np.linspace(-self.extent, self.extent, self.resolution)
        return self.center[0] + t, self.center[1] + t


def _local_minima(mag: np.ndarray) -> list[tuple[int, int]]:
    """Interior cells not larger than any of their eight neighbours."""
    pad = np.pad(mag, 1, constant_values=np.inf)
    core = pad[1:-1, 1:-1]
    is_min = np.ones(mag.shape, dtype=bool)
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            if di or dj:
                shifted = pad[1 + di : pad.shape[0] - 1 + di, 1 + dj : pad.shape[1] - 1 + dj]
                is_min &= core <= shifted
    is_min[0, :] = is_min[-1, :] = is_min[:, 0] = is_min[:, -1] = False
    return [tuple(ij) for ij in np.argwhere(is_min)]


def singularity_scan(
    sampler: Sampler,
    grid: GridSpec,
    component: str,
    samples: int = 256,
) -> list[SingularityRecord]:
    """Locate zeros of one field component and classify them by phase winding.

    Grid minima are polished with a simplex search, kept if the refined
    magnitude is below ``NULL_DEPTH`` times the grid maximum, and confirmed by
    a winding measurement on a loop of two grid cells.
    """
    _check_component(component)
    xs, ys = grid.axes()
    gx, gy = np.meshgrid(xs, ys)  # rows follow y
    field = sampler(ObservationPoint.from_cartesian(gx, gy, grid.z))
    mag = np.abs(np.asarray(field.component(component), dtype=complex))
    top = mag.max()
    if not top > 0:
        return []
    h = grid.step

    def amp(v):
        p = ObservationPoint.from_cartesian(np.array([v[0]]), np.array([v[1]]), grid.z)
        return float(np.abs(np.asarray(sampler(p).component(component))).reshape(-1)[0]) / top

    records = []
    for i, j in _local_minima(mag):
        x0, y0 = gx[i, j], gy[i, j]
        best = (x0, y0)
        depth = mag[i, j] / top
        if depth > NULL_DEPTH:
            res = minimize(
                amp,
                np.array([x0, y0]),
                method="Nelder-Mead",
                options={"xatol": 1e-4 * h, "fatol": 1e-14, "initial_simplex": [[x0, y0], [x0 + h / 2, y0], [x0, y0 + h / 2]]},
            )
            if abs(res.x[0] - x0) <= h and abs(res.x[1] - y0) <= h:
                best, depth = (float(res.x[0]), float(res.x[1])), float(res.fun)
        if depth > NULL_DEPTH:
            continue
        try:
            w = winding_number(sampler, component, 2.0 * h, grid.z, samples, center=best)
        except WindingResolutionError:
            w = None
        if w:
            records.append(SingularityRecord(best, "phase-vortex", w, component))
        else:
            records.append(SingularityRecord(best, "flux-null", None, component))
    records.sort(key=lambda r: (round(r.location[1] / h), round(r.location[0] / h)))
    return records
