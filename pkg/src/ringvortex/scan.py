"""Scan configuration, grid evaluation and CSV export.

A config file is YAML with up to four sections::

    array:      {N: 12, l: 1, m_z: -1, radius: 1.0e-3, wavelength: 1.0e-6, amplitude: 1.0}
    scan:       {z: [1zR, 1.5zR, 2zR], extent: 5.0e-6, resolution: 65, evaluator: farfield}
    truncation: {max_lattice_index: null, term_floor: 1.0e-16, margin: 40}
    outputs:    [all-params]

Array keys may also sit at the top level, so ``{N: 12, l: 1, m_z: -1}`` is a
complete config. Distances along z are metres, or multiples of the Rayleigh
range when written with a ``zR`` suffix.
"""

from __future__ import annotations

import io
import math
import os
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .array_field import (
    EVALUATORS,
    ArrayConfig,
    FieldAmplitudes,
    ObservationPoint,
    TruncationPolicy,
    electric_field,
    make_sampler,
    theta_k,
)
from .errors import ConfigError
from .polarization import PARAM_NAMES, polarization_arrays

THREADS_ENV = "RINGVORTEX_MAX_THREADS"

OUTPUT_KINDS = ("flux", "p_z", "p_zz", "all-params", "components")

COLUMNS = (
    "rho_x_m",
    "rho_y_m",
    "flux_au",
    "re_a_plus",
    "im_a_plus",
    "re_a_zero",
    "im_a_zero",
    "re_a_minus",
    "im_a_minus",
) + PARAM_NAMES + ("defined_flag",)

# defined_flag values
DEFINED, UNDEFINED, FAILED = 1, 0, -1
UNDEFINED_MARK = "undefined"
FAILED_MARK = "error"

_ARRAY_KEYS = {
    "N": "n_emitters",
    "l": "phase_param",
    "m_z": "m_z",
    "radius": "radius",
    "wavelength": "wavelength",
    "amplitude": "amplitude_scale",
}
_SCAN_KEYS = ("z", "extent", "resolution", "evaluator")
_TRUNC_KEYS = ("max_lattice_index", "term_floor", "margin")
_SECTIONS = ("array", "scan", "truncation", "outputs")

_Z_RE = re.compile(r"^\s*([-+0-9.eE]+)\s*\*?\s*(zR|z_R|m)?\s*$")


@dataclass(frozen=True)
class ScanConfig:
    array: ArrayConfig
    z_list: tuple[float, ...]
    grid_extent: float
    grid_resolution: int = 65
    evaluator: str = "farfield"
    truncation: TruncationPolicy = field(default_factory=TruncationPolicy)
    outputs: tuple[str, ...] = ("all-params",)

    def __post_init__(self):
        if int(self.grid_resolution) != self.grid_resolution or self.grid_resolution < 2:
            raise ConfigError(f"grid_resolution must be an integer >= 2, got {self.grid_resolution!r}")
        if not (self.grid_extent > 0 and math.isfinite(self.grid_extent)):
            raise ConfigError(f"grid_extent must be > 0, got {self.grid_extent!r}")
        if not self.z_list:
            raise ConfigError("z list must not be empty")
        for z in self.z_list:
            if not (z > 0 and math.isfinite(z)):
                raise ConfigError(f"every z must be > 0, got {z!r}")
        if self.evaluator not in EVALUATORS:
            raise ConfigError(f"evaluator must be one of {EVALUATORS}, got {self.evaluator!r}")
        for o in self.outputs:
            if o not in OUTPUT_KINDS:
                raise ConfigError(f"unknown output {o!r}; expected a subset of {OUTPUT_KINDS}")

    @property
    def rayleigh_range(self) -> float:
        return self.array.rayleigh_range

    def with_evaluator(self, evaluator: str) -> "ScanConfig":
        return ScanConfig(
            self.array, self.z_list, self.grid_extent, self.grid_resolution,
            evaluator, self.truncation, self.outputs,
        )

    def to_flat(self) -> dict[str, object]:
        """Dotted-key view of the config; floats render with repr so they round-trip."""
        a = self.array
        t = self.truncation
        return {
            "array.N": a.n_emitters,
            "array.l": a.phase_param,
            "array.m_z": a.m_z,
            "array.radius": a.radius,
            "array.wavelength": a.wavelength,
            "array.amplitude": a.amplitude_scale,
            "scan.z": list(self.z_list),
            "scan.extent": self.grid_extent,
            "scan.resolution": self.grid_resolution,
            "scan.evaluator": self.evaluator,
            "truncation.max_lattice_index": t.max_lattice_index,
            "truncation.term_floor": t.term_floor,
            "truncation.margin": t.margin,
            "outputs": list(self.outputs),
        }


# -- loading -----------------------------------------------------------------


def _key_lines(text: str) -> dict[tuple[str, ...], int]:
    """1-based line of every mapping key, for diagnostics."""
    lines: dict[tuple[str, ...], int] = {}
    try:
        root = yaml.compose(text, Loader=yaml.SafeLoader)
    except yaml.YAMLError:
        return lines

    def walk(node, path):
        if isinstance(node, yaml.MappingNode):
            for k, v in node.value:
                key = path + (str(k.value),)
                lines[key] = k.start_mark.line + 1
                walk(v, key)

    walk(root, ())
    return lines


def _where(lines, *path) -> str:
    line = lines.get(tuple(path))
    name = ".".join(path)
    return f"{name} (line {line})" if line else name


def _as_float(value, what: str) -> float:
    if isinstance(value, bool):
        raise ConfigError(f"{what}: expected a number, got {value!r}")
    try:
        return float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{what}: expected a number, got {value!r}") from None


def _as_int(value, what: str) -> int:
    v = _as_float(value, what)
    if v != int(v):
        raise ConfigError(f"{what}: expected an integer, got {value!r}")
    return int(v)


def parse_z(value, z_r: float, what: str = "z") -> float:
    """Metres from a number or a string such as ``'1.5zR'`` or ``'3.0 m'``."""
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    m = _Z_RE.match(str(value))
    if not m:
        raise ConfigError(f"{what}: cannot read distance {value!r}; use metres or a zR suffix")
    scale = z_r if m.group(2) in ("zR", "z_R") else 1.0
    return _as_float(m.group(1), what) * scale


def config_from_dict(data: dict, lines: dict | None = None) -> ScanConfig:
    """Validate a parsed mapping and fill defaults."""
    lines = lines or {}
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError("config must be a mapping")
    array = dict(data.get("array") or {})
    for key in data:
        if key in _ARRAY_KEYS:
            if key in array:
                raise ConfigError(f"{_where(lines, key)}: given both at top level and in 'array'")
            array[key] = data[key]
        elif key not in _SECTIONS:
            raise ConfigError(f"unknown key {_where(lines, key)}")
    for key in array:
        if key not in _ARRAY_KEYS:
            raise ConfigError(f"unknown key {_where(lines, 'array', key)}")
    for key in ("N", "l", "m_z"):
        if key not in array:
            raise ConfigError(f"missing required key array.{key}")

    try:
        arr = ArrayConfig(
            n_emitters=_as_int(array["N"], _where(lines, "array", "N")),
            radius=_as_float(array.get("radius", 1.0e-3), _where(lines, "array", "radius")),
            phase_param=_as_int(array["l"], _where(lines, "array", "l")),
            m_z=_as_int(array["m_z"], _where(lines, "array", "m_z")),
            wavelength=_as_float(array.get("wavelength", 1.0e-6), _where(lines, "array", "wavelength")),
            amplitude_scale=_as_float(array.get("amplitude", 1.0), _where(lines, "array", "amplitude")),
        )
    except ConfigError as exc:
        raise ConfigError(f"array: {exc}") from None

    scan = data.get("scan") or {}
    if not isinstance(scan, dict):
        raise ConfigError(f"{_where(lines, 'scan')} must be a mapping")
    for key in scan:
        if key not in _SCAN_KEYS:
            raise ConfigError(f"unknown key {_where(lines, 'scan', key)}")
    z_raw = scan.get("z", ["1zR", "1.5zR", "2zR"])
    if not isinstance(z_raw, list):
        z_raw = [z_raw]
    z_list = tuple(parse_z(v, arr.rayleigh_range, _where(lines, "scan", "z")) for v in z_raw)

    trunc = data.get("truncation") or {}
    if not isinstance(trunc, dict):
        raise ConfigError(f"{_where(lines, 'truncation')} must be a mapping")
    for key in trunc:
        if key not in _TRUNC_KEYS:
            raise ConfigError(f"unknown key {_where(lines, 'truncation', key)}")
    m_raw = trunc.get("max_lattice_index")
    policy = TruncationPolicy(
        max_lattice_index=None if m_raw is None else _as_int(m_raw, _where(lines, "truncation", "max_lattice_index")),
        term_floor=_as_float(trunc.get("term_floor", 1e-16), _where(lines, "truncation", "term_floor")),
        margin=_as_int(trunc.get("margin", 40), _where(lines, "truncation", "margin")),
    )

    outputs = data.get("outputs", ["all-params"])
    if outputs is None:
        outputs = []
    if isinstance(outputs, str):
        outputs = [outputs]

    return ScanConfig(
        array=arr,
        z_list=z_list,
        grid_extent=_as_float(scan.get("extent", 5.0 * arr.wavelength), _where(lines, "scan", "extent")),
        grid_resolution=_as_int(scan.get("resolution", 65), _where(lines, "scan", "resolution")),
        evaluator=str(scan.get("evaluator", "farfield")),
        truncation=policy,
        outputs=tuple(str(o) for o in outputs),
    )


def _metadata_to_dict(text: str) -> dict:
    """Rebuild a nested config from the ``# config.a.b = value`` lines of an export."""
    out: dict = {}
    for raw in text.splitlines():
        if not raw.startswith("#"):
            break
        body = raw[1:].strip()
        if not body.startswith("config.") or "=" not in body:
            continue
        key, _, value = body.partition("=")
        path = key.strip().split(".")[1:]
        node = out
        for p in path[:-1]:
            node = node.setdefault(p, {})
        node[path[-1]] = yaml.safe_load(value.strip())
    return out


def load_config(path) -> ScanConfig:
    """Read a YAML config, or the metadata header of an exported CSV."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    if text.startswith("#"):
        return config_from_dict(_metadata_to_dict(text))
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f" at line {mark.line + 1}, column {mark.column + 1}" if mark else ""
        raise ConfigError(f"{path}: YAML parse error{where}: {getattr(exc, 'problem', exc)}") from None
    return config_from_dict(data, _key_lines(text))


# -- evaluation --------------------------------------------------------------


def resolve_threads(requested: int | None = None) -> int:
    """Worker count: the request (or CPU count), capped by $RINGVORTEX_MAX_THREADS."""
    n = requested if requested else (os.cpu_count() or 1)
    cap = os.environ.get(THREADS_ENV)
    if cap:
        try:
            n = min(n, max(1, int(cap)))
        except ValueError:
            raise ConfigError(f"{THREADS_ENV} must be an integer, got {cap!r}") from None
    return max(1, int(n))


@dataclass
class CellTable:
    """Per-point records of a scan in row-major order."""

    metadata: dict[str, object]
    x: np.ndarray
    y: np.ndarray
    flux: np.ndarray
    amplitudes: np.ndarray  # (3, n) complex
    params: dict[str, np.ndarray]
    status: np.ndarray  # DEFINED, UNDEFINED or FAILED per cell
    shape: tuple[int, ...] = ()

    @property
    def size(self) -> int:
        return int(self.x.size)

    @property
    def rho(self) -> np.ndarray:
        return np.hypot(self.x, self.y)

    def grid(self, name: str) -> np.ndarray:
        """A column reshaped to the scan shape (NaN where not defined)."""
        if name == "flux_au":
            col = self.flux
        else:
            col = self.params[name]
        return np.asarray(col).reshape(self.shape)

    def to_csv(self) -> str:
        buf = io.StringIO()
        for key, value in self.metadata.items():
            buf.write(f"# {key} = {_render_meta(value)}\n")
        buf.write(",".join(COLUMNS) + "\n")
        for i in range(self.size):
            buf.write(",".join(self._row(i)) + "\n")
        return buf.getvalue()

    def _row(self, i: int) -> list[str]:
        st = int(self.status[i])
        cells = [_num(self.x[i]), _num(self.y[i])]
        if st == FAILED:
            cells += [FAILED_MARK] * (7 + len(PARAM_NAMES))
        else:
            cells.append(_num(self.flux[i]))
            for c in self.amplitudes[:, i]:
                cells += [_num(c.real), _num(c.imag)]
            if st == DEFINED:
                cells += [_num(self.params[p][i]) for p in PARAM_NAMES]
            else:
                cells += [UNDEFINED_MARK] * len(PARAM_NAMES)
        cells.append(str(st))
        return cells

    def write(self, path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.to_csv(), encoding="utf-8")
        return path


def _num(v) -> str:
    v = float(v)
    if v == 0.0:
        v = 0.0  # drop the sign of negative zero
    return format(v, ".16e")


def _render_meta(value) -> str:
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_render_meta(v) for v in value) + "]"
    if value is None:
        return "null"
    return str(value)


def _evaluate_chunk(config: ScanConfig, z: float, x: np.ndarray, y: np.ndarray):
    sampler = make_sampler(config.array, config.evaluator, config.truncation)
    status = np.full(x.shape, DEFINED, dtype=np.int64)
    amps = np.zeros((3,) + x.shape, dtype=complex)
    try:
        amps[:] = sampler(ObservationPoint.from_cartesian(x, y, z)).stack()
    except (ArithmeticError, ValueError):
        # isolate the offending cells; the rest of the chunk is still valid
        for i in range(x.size):
            try:
                p = ObservationPoint.from_cartesian(x[i : i + 1], y[i : i + 1], z)
                amps[:, i] = sampler(p).stack()[:, 0]
            except (ArithmeticError, ValueError):
                status[i] = FAILED
    bad = ~np.all(np.isfinite(amps), axis=0)
    status[bad] = FAILED
    amps[:, bad] = 0.0
    return amps, status


def evaluate_cells(
    config: ScanConfig, z: float, x: np.ndarray, y: np.ndarray, row_len: int, threads: int | None = None
) -> CellTable:
    """Evaluate the configured evaluator at the given points (flattened row-major).

    Work is split into fixed chunks of ``row_len`` points, so the numbers do
    not depend on how many threads run them.
    """
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    starts = list(range(0, x.size, max(1, row_len)))
    chunks = [(x[s : s + row_len], y[s : s + row_len]) for s in starts]
    workers = min(resolve_threads(threads), max(1, len(chunks)))
    if workers == 1:
        results = [_evaluate_chunk(config, z, cx, cy) for cx, cy in chunks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda c: _evaluate_chunk(config, z, *c), chunks))
    if results:
        amps = np.concatenate([r[0] for r in results], axis=1)
        status = np.concatenate([r[1] for r in results])
    else:
        amps = np.zeros((3, 0), dtype=complex)
        status = np.zeros(0, dtype=np.int64)

    a = FieldAmplitudes(amps[0], amps[1], amps[2])
    e = electric_field(a, config.array.omega)
    flux = math.cos(theta_k(config.array, z)) * np.asarray(e.norm_sq()) / 2.0
    params = polarization_arrays(e)
    status = np.where((status == DEFINED) & ~params["defined"], UNDEFINED, status)
    return CellTable({}, x, y, flux, amps, {p: params[p] for p in PARAM_NAMES}, status)


def _metadata(config: ScanConfig, kind: str, z: float, extra: dict | None = None) -> dict:
    meta: dict[str, object] = {
        "format": f"ringvortex {kind} v1",
        "z_m": z,
        "z_over_zR": z / config.rayleigh_range,
        "evaluator": config.evaluator,
    }
    if extra:
        meta.update(extra)
    meta.update({f"config.{k}": v for k, v in config.to_flat().items()})
    return meta


def field_map(config: ScanConfig, z: float, threads: int | None = None, timestamp: str | None = None) -> CellTable:
    """Square grid of cells over [-extent, extent]^2 at distance z.

    Rows follow rho_y, columns rho_x. An empty ``outputs`` list yields a
    metadata-only map with no cells.
    """
    n = config.grid_resolution
    extra = {"grid": f"{n}x{n}"}
    if timestamp:
        extra["timestamp"] = timestamp
    meta = _metadata(config, "field-map", z, extra)
    if not config.outputs:
        empty = np.zeros(0)
        return CellTable(meta, empty, empty, empty, np.zeros((3, 0), complex),
                         {p: empty for p in PARAM_NAMES}, np.zeros(0, np.int64), (0, 0))
    t = np.linspace(-config.grid_extent, config.grid_extent, n)
    gx, gy = np.meshgrid(t, t)
    table = evaluate_cells(config, z, gx, gy, n, threads)
    table.metadata = meta
    table.shape = (n, n)
    return table


def field_maps(config: ScanConfig, threads: int | None = None) -> list[CellTable]:
    return [field_map(config, z, threads) for z in config.z_list]


def radial_profile(
    config: ScanConfig, azimuth: float, z: float, rho=None, threads: int | None = None
) -> CellTable:
    """Cut along a fixed azimuth; rho defaults to ``resolution`` points on [0, extent]."""
    if rho is None:
        rho = np.linspace(0.0, config.grid_extent, config.grid_resolution)
    rho = np.atleast_1d(np.asarray(rho, dtype=float))
    if np.any(rho < 0):
        raise ConfigError("profile radii must be non-negative")
    x = rho * math.cos(azimuth)
    y = rho * math.sin(azimuth)
    table = evaluate_cells(config, z, x, y, max(1, config.grid_resolution), threads)
    table.metadata = _metadata(config, "radial-profile", z, {"azimuth_rad": float(azimuth)})
    table.shape = rho.shape
    return table


# -- optional rendering ------------------------------------------------------

_PNG_SCALES = {
    "flux": ("flux_au", "viridis", None),
    "p_z": ("p_z", "RdBu_r", (-1.0, 1.0)),
    "p_zz": ("p_zz", "RdBu_r", (-2.0, 1.0)),
}


def render_heatmaps(table: CellTable, out_dir, stem: str, outputs) -> list[Path]:
    """PNG heatmaps for the flux / p_z / p_zz outputs requested (needs matplotlib)."""
    try:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        raise ConfigError("PNG output needs matplotlib: pip install 'artifact[plot]'") from None
    wanted = [o for o in _PNG_SCALES if o in outputs or "all-params" in outputs and o != "flux"]
    if "flux" in outputs:
        wanted = ["flux"] + [w for w in wanted if w != "flux"]
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    ext = float(np.max(np.abs(table.x))) if table.size else 1.0
    paths = []
    for name in wanted:
        column, cmap, limits = _PNG_SCALES[name]
        data = table.grid(column)
        fig, ax = plt.subplots(figsize=(5, 4))
        kw = {"vmin": limits[0], "vmax": limits[1]} if limits else {}
        im = ax.imshow(data, origin="lower", extent=(-ext, ext, -ext, ext), cmap=cmap, **kw)
        fig.colorbar(im, ax=ax, label=name)
        ax.set_xlabel("rho_x [m]")
        ax.set_ylabel("rho_y [m]")
        path = out_dir / f"{stem}_{name}.png"
        fig.savefig(path, dpi=120)
        plt.close(fig)
        paths.append(path)
    return paths
