"""Synthetic wideband UM-MIMO channel generation and angular dictionaries.

Geometric multipath channels for uniform planar arrays (UPA): per-tap channel
matrices built from pulse-shaped path contributions, frequency-domain channels
via a DFT over delay taps, and the on-grid virtual-channel dictionary used by
the sparse estimators.

Vectorization convention used throughout the package: vec{X} stacks columns
(Fortran order), so vec{A X B} = (B^T kron A) vec{X} holds exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class ArrayGeometry:
    """UPA layout: n_x antennas on the x-axis, n_z on the z-axis."""

    n_x: int
    n_z: int

    def __post_init__(self):
        if self.n_x < 1 or self.n_z < 1:
            raise ValueError(f"antenna counts must be >= 1, got ({self.n_x}, {self.n_z})")

    @property
    def size(self) -> int:
        return self.n_x * self.n_z


@dataclass(frozen=True)
class GridSpec:
    """Angular grid sizes per axis at Rx and Tx."""

    g_rx: int
    g_rz: int
    g_tx: int
    g_tz: int

    def __post_init__(self):
        if min(self.g_rx, self.g_rz, self.g_tx, self.g_tz) < 1:
            raise ValueError("grid sizes must be >= 1")

    @property
    def g_r(self) -> int:
        return self.g_rx * self.g_rz

    @property
    def g_t(self) -> int:
        return self.g_tx * self.g_tz

    @classmethod
    def critical(cls, geom_r: ArrayGeometry, geom_t: ArrayGeometry) -> "GridSpec":
        """Critically sampled grid: one grid point per antenna-axis element."""
        return cls(g_rx=geom_r.n_x, g_rz=geom_r.n_z, g_tx=geom_t.n_x, g_tz=geom_t.n_z)


@dataclass
class PathSet:
    """Multipath components of one channel realization.

    gains: complex path gains, shape (L,)
    delays: path delays in seconds, shape (L,)
    aoa / aod: (azimuth, elevation) pairs in radians, shape (L, 2)
    sampling_period: delay-tap spacing in seconds
    num_taps: number of delay taps the channel is truncated to
    """

    gains: np.ndarray
    delays: np.ndarray
    aoa: np.ndarray
    aod: np.ndarray
    sampling_period: float
    num_taps: int

    def __post_init__(self):
        self.gains = np.asarray(self.gains, dtype=np.complex128)
        self.delays = np.asarray(self.delays, dtype=np.float64)
        self.aoa = np.asarray(self.aoa, dtype=np.float64).reshape(-1, 2)
        self.aod = np.asarray(self.aod, dtype=np.float64).reshape(-1, 2)
        L = len(self.gains)
        if L < 1:
            raise ValueError("a PathSet needs at least one path")
        if not (len(self.delays) == len(self.aoa) == len(self.aod) == L):
            raise ValueError("gains/delays/aoa/aod length mismatch")
        if self.sampling_period <= 0:
            raise ValueError("sampling_period must be positive")
        if self.num_taps < 1:
            raise ValueError("num_taps must be >= 1")
        horizon = self.num_taps * self.sampling_period
        if np.any(self.delays < 0) or np.any(self.delays >= horizon):
            raise ValueError("delays must lie in [0, num_taps * sampling_period)")

    @property
    def n_paths(self) -> int:
        return len(self.gains)


@dataclass
class ChannelRealization:
    """Frequency-domain channel: per_subcarrier has shape (K, N_r, N_t)."""

    per_subcarrier: np.ndarray
    source: PathSet

    @property
    def n_subcarriers(self) -> int:
        return self.per_subcarrier.shape[0]


def steering_from_frequencies(geom: ArrayGeometry, u, v) -> np.ndarray:
    """Unit-norm UPA steering vector for spatial frequencies (u, v).

    u drives the x-axis phase progression, v the z-axis one; the array response
    only depends on the angles through u = sin(theta)cos(phi) and v = sin(phi).
    """
    ax = np.exp(-1j * np.pi * u * np.arange(geom.n_x))
    az = np.exp(-1j * np.pi * v * np.arange(geom.n_z))
    return np.kron(ax, az) / np.sqrt(geom.size)


def steering_vector(geom: ArrayGeometry, theta: float, phi: float) -> np.ndarray:
    """Unit-norm UPA steering vector for azimuth theta and elevation phi."""
    return steering_from_frequencies(geom, np.sin(theta) * np.cos(phi), np.sin(phi))


def raised_cosine(t, sampling_period: float, rolloff: float = 0.8):
    """Raised-cosine pulse evaluated at time t (seconds).

    Singular points t = +-T_s/(2*rolloff) are evaluated by the analytic limit.
    Accepts scalars or arrays.
    """
    if sampling_period <= 0:
        raise ValueError("sampling_period must be positive")
    if not 0.0 <= rolloff <= 1.0:
        raise ValueError("rolloff must be in [0, 1]")
    tau = np.asarray(t, dtype=np.float64) / sampling_period
    if rolloff == 0.0:
        out = np.sinc(tau)
    else:
        den = 1.0 - (2.0 * rolloff * tau) ** 2
        singular = np.isclose(den, 0.0, atol=1e-12)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.sinc(tau) * np.cos(np.pi * rolloff * tau) / den
        limit = (np.pi / 4.0) * np.sinc(1.0 / (2.0 * rolloff))
        out = np.where(singular, limit, out)
    return out if out.ndim else float(out)


def sample_paths(
    rng: np.random.Generator,
    n_paths: int,
    num_taps: int,
    sampling_period: float = 1.0,
    azimuth_range=(-np.pi, np.pi),
    elevation_range=(-np.pi / 2, np.pi / 2),
) -> PathSet:
    """Draw a random PathSet: CN(0,1) gains, uniform delays and angles.

    Delays are continuous on [0, (num_taps-1)*T_s] so the true angles/delays do
    not align with any grid. Deterministic for a given generator state.
    """
    if n_paths < 1:
        raise ValueError("n_paths must be >= 1")
    gains = (rng.standard_normal(n_paths) + 1j * rng.standard_normal(n_paths)) / np.sqrt(2.0)
    delays = rng.uniform(0.0, (num_taps - 1) * sampling_period, size=n_paths)
    az_lo, az_hi = azimuth_range
    el_lo, el_hi = elevation_range
    aoa = np.column_stack([rng.uniform(az_lo, az_hi, n_paths), rng.uniform(el_lo, el_hi, n_paths)])
    aod = np.column_stack([rng.uniform(az_lo, az_hi, n_paths), rng.uniform(el_lo, el_hi, n_paths)])
    return PathSet(gains, delays, aoa, aod, sampling_period, num_taps)


def delay_tap_channel(
    paths: PathSet,
    geom_r: ArrayGeometry,
    geom_t: ArrayGeometry,
    d: int,
    rolloff: float = 0.8,
) -> np.ndarray:
    """Channel matrix of delay tap d: sqrt(NtNr/L) sum_l a_l p(dTs - tau_l) aR aT^H."""
    if not 0 <= d < paths.num_taps:
        raise ValueError(f"tap index {d} outside [0, {paths.num_taps})")
    n_r, n_t = geom_r.size, geom_t.size
    H = np.zeros((n_r, n_t), dtype=np.complex128)
    pulse = raised_cosine(d * paths.sampling_period - paths.delays, paths.sampling_period, rolloff)
    for l in range(paths.n_paths):
        a_r = steering_vector(geom_r, paths.aoa[l, 0], paths.aoa[l, 1])
        a_t = steering_vector(geom_t, paths.aod[l, 0], paths.aod[l, 1])
        H += paths.gains[l] * pulse[l] * np.outer(a_r, a_t.conj())
    return np.sqrt(n_r * n_t / paths.n_paths) * H


def frequency_channel(
    paths: PathSet,
    geom_r: ArrayGeometry,
    geom_t: ArrayGeometry,
    n_subcarriers: int,
    rolloff: float = 0.8,
) -> ChannelRealization:
    """Per-subcarrier channel H[k] = sum_d H_d exp(-j 2 pi k d / K), k = 0..K-1."""
    if n_subcarriers < 1:
        raise ValueError("n_subcarriers must be >= 1")
    taps = np.stack(
        [delay_tap_channel(paths, geom_r, geom_t, d, rolloff) for d in range(paths.num_taps)]
    )
    k = np.arange(n_subcarriers)
    d = np.arange(paths.num_taps)
    phase = np.exp(-2j * np.pi * np.outer(k, d) / n_subcarriers)
    per_sc = np.tensordot(phase, taps, axes=(1, 0))
    return ChannelRealization(per_sc, paths)


def grid_frequencies(g: int) -> np.ndarray:
    """Quantized spatial frequencies {-1 + 2/g, ..., 1} (g points, step 2/g)."""
    return -1.0 + 2.0 * np.arange(1, g + 1) / g


def grid_angles(g_x: int, g_z: int) -> np.ndarray:
    """All (u, v) spatial-frequency pairs of the angular grid, x-major order.

    Returns shape (g_x*g_z, 2); u is the x-axis frequency, v the z-axis one.
    Pairs with u^2 + v^2 > 1 do not correspond to a physical angle pair but are
    retained: the dictionary is built from the frequencies directly.
    """
    if g_x < 1 or g_z < 1:
        raise ValueError("grid sizes must be >= 1")
    us = grid_frequencies(g_x)
    vs = grid_frequencies(g_z)
    uu, vv = np.meshgrid(us, vs, indexing="ij")
    return np.column_stack([uu.ravel(), vv.ravel()])


@dataclass(frozen=True)
class Dictionary:
    """Gridded steering matrices and the Kronecker dictionary Psi.

    a_r: N_r x G_r, a_t: N_t x G_t, psi: (N_t N_r) x (G_t G_r) with
    vec{H} = psi @ h for on-grid channels under column-stacking vec.
    """

    a_r: np.ndarray
    a_t: np.ndarray
    psi: np.ndarray


def steering_dictionary(geom: ArrayGeometry, g_x: int, g_z: int) -> np.ndarray:
    """Matrix whose columns are steering vectors at the (g_x x g_z) grid points."""
    pairs = grid_angles(g_x, g_z)
    cols = [steering_from_frequencies(geom, u, v) for u, v in pairs]
    return np.stack(cols, axis=1)


def dictionary(geom_r: ArrayGeometry, geom_t: ArrayGeometry, grid: GridSpec) -> Dictionary:
    """Build the virtual-channel dictionary for the given arrays and grid.

    psi = kron(conj(A_t), A_r): the factor order pairs with the column-stacking
    vec convention so that vec{A_r Delta A_t^H} = psi @ vec{Delta} exactly.
    """
    a_r = steering_dictionary(geom_r, grid.g_rx, grid.g_rz)
    a_t = steering_dictionary(geom_t, grid.g_tx, grid.g_tz)
    psi = np.kron(a_t.conj(), a_r)
    return Dictionary(a_r=a_r, a_t=a_t, psi=psi)


def _grid_cell_index(u: float, v: float, g_x: int, g_z: int) -> int:
    """Index of the grid cell whose frequencies match (u, v) exactly, x-major."""
    us = grid_frequencies(g_x)
    vs = grid_frequencies(g_z)
    ix = np.flatnonzero(np.isclose(us, u, atol=1e-9))
    iz = np.flatnonzero(np.isclose(vs, v, atol=1e-9))
    if len(ix) != 1 or len(iz) != 1:
        raise ValueError(f"spatial frequencies ({u:.6f}, {v:.6f}) are not on the grid")
    return int(ix[0]) * g_z + int(iz[0])


def on_grid_sparse_vector(
    paths: PathSet,
    geom_r: ArrayGeometry,
    geom_t: ArrayGeometry,
    grid: GridSpec,
    k: int,
    n_subcarriers: int,
    rolloff: float = 0.8,
) -> np.ndarray:
    """Exact sparse coefficient vector h[k] for paths that sit on the grid.

    Raises if any path's spatial frequencies miss the grid; this exists to
    manufacture exactly-sparse fixtures, not to approximate arbitrary channels.
    """
    h = np.zeros(grid.g_t * grid.g_r, dtype=np.complex128)
    scale = np.sqrt(geom_r.size * geom_t.size / paths.n_paths)
    d = np.arange(paths.num_taps)
    for l in range(paths.n_paths):
        u_r = np.sin(paths.aoa[l, 0]) * np.cos(paths.aoa[l, 1])
        v_r = np.sin(paths.aoa[l, 1])
        u_t = np.sin(paths.aod[l, 0]) * np.cos(paths.aod[l, 1])
        v_t = np.sin(paths.aod[l, 1])
        g_r = _grid_cell_index(u_r, v_r, grid.g_rx, grid.g_rz)
        g_t = _grid_cell_index(u_t, v_t, grid.g_tx, grid.g_tz)
        pulse = raised_cosine(d * paths.sampling_period - paths.delays[l], paths.sampling_period, rolloff)
        coeff = paths.gains[l] * np.sum(pulse * np.exp(-2j * np.pi * k * d / n_subcarriers))
        h[g_t * grid.g_r + g_r] += scale * coeff
    return h


def _angles_for_frequencies(u: float, v: float) -> tuple[float, float]:
    """Azimuth/elevation pair realizing spatial frequencies (u, v).

    Only feasible for u^2 + v^2 <= 1; grid corners outside the unit disk have
    no physical angle pair.
    """
    if u * u + v * v > 1.0 + 1e-12:
        raise ValueError(f"frequencies ({u:.4f}, {v:.4f}) outside the unit disk")
    phi = float(np.arcsin(np.clip(v, -1.0, 1.0)))
    c = np.cos(phi)
    theta = 0.0 if c < 1e-12 else float(np.arcsin(np.clip(u / c, -1.0, 1.0)))
    return theta, phi


def sample_on_grid_paths(
    rng: np.random.Generator,
    grid: GridSpec,
    n_paths: int,
    num_taps: int,
    sampling_period: float = 1.0,
) -> PathSet:
    """Tap-aligned paths on distinct feasible grid cells (oracle fixtures).

    Delays land exactly on tap multiples and every angle pair realizes a grid
    frequency pair, so the resulting channel is exactly sparse on the grid.
    """
    def feasible(g_x, g_z):
        cells = []
        for u in grid_frequencies(g_x):
            for v in grid_frequencies(g_z):
                if u * u + v * v <= 1.0:
                    cells.append((u, v))
        return cells

    rx_cells = feasible(grid.g_rx, grid.g_rz)
    tx_cells = feasible(grid.g_tx, grid.g_tz)
    combos = [(r, t) for r in rx_cells for t in tx_cells]
    if n_paths > len(combos):
        raise ValueError(f"cannot place {n_paths} paths on {len(combos)} feasible cells")
    picks = rng.choice(len(combos), size=n_paths, replace=False)
    gains = (rng.standard_normal(n_paths) + 1j * rng.standard_normal(n_paths)) / np.sqrt(2.0)
    delays = rng.integers(0, num_taps, size=n_paths) * sampling_period
    aoa = np.array([_angles_for_frequencies(*combos[p][0]) for p in picks])
    aod = np.array([_angles_for_frequencies(*combos[p][1]) for p in picks])
    return PathSet(gains, delays, aoa, aod, sampling_period, num_taps)
