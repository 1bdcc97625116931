"""Hybrid-architecture training frames and compressed channel observations.

Each training frame applies a random constant-modulus analog precoder/combiner
pair and a frequency-flat pilot vector; stacking the per-frame Kronecker
blocks yields the measurement matrix Phi acting on vec{H} (column stacking).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channel import Dictionary


@dataclass(frozen=True)
class SystemConfig:
    """Antenna/RF-chain/subcarrier/frame counts of the hybrid system."""

    n_t: int
    n_r: int
    l_t: int
    l_r: int
    k_sub: int
    m_frames: int
    n_s: int = 0  # 0 -> defaults to l_t (training uses N_s = L_t)

    def __post_init__(self):
        if self.n_s == 0:
            object.__setattr__(self, "n_s", self.l_t)
        if not (self.n_s <= self.l_t < self.n_t):
            raise ValueError(f"need n_s <= l_t < n_t, got {self.n_s}, {self.l_t}, {self.n_t}")
        if not (self.n_s <= self.l_r < self.n_r):
            raise ValueError(f"need n_s <= l_r < n_r, got {self.n_s}, {self.l_r}, {self.n_r}")
        if self.k_sub < 1 or self.m_frames < 1:
            raise ValueError("k_sub and m_frames must be >= 1")


@dataclass
class TrainingFrame:
    """One pilot frame: precoder f_tr (N_t x L_t), combiner w_tr (N_r x L_r), pilot q (L_t,)."""

    f_tr: np.ndarray
    w_tr: np.ndarray
    q: np.ndarray


@dataclass
class MeasurementSetup:
    """Frames plus the stacked measurement operator and its sparse-domain form.

    phi: (M*L_r) x (N_t*N_r), row-block m is kron(q_m^T f_m^T, w_m^H);
    a_eff = phi @ psi maps sparse coefficients to observations.
    """

    frames: list
    phi: np.ndarray
    psi: Dictionary
    a_eff: np.ndarray


@dataclass
class Observation:
    """Noisy compressed observation of one subcarrier's channel."""

    y: np.ndarray
    noise_var: float
    snr_db: float


def random_constant_modulus(rows: int, cols: int, modulus: float, rng: np.random.Generator) -> np.ndarray:
    """Matrix of fixed-magnitude entries with i.i.d. uniform phases."""
    if modulus <= 0:
        raise ValueError("modulus must be positive")
    phases = rng.uniform(0.0, 2.0 * np.pi, size=(rows, cols))
    return modulus * np.exp(1j * phases)


def build_frame(cfg: SystemConfig, rng: np.random.Generator) -> TrainingFrame:
    """Random training frame: analog-only beams, CN(0,1) pilot entries.

    The digital factors are identities during training, so f_tr and w_tr carry
    the constant-modulus constraint directly.
    """
    f_rf = random_constant_modulus(cfg.n_t, cfg.l_t, 1.0 / np.sqrt(cfg.n_t), rng)
    w_rf = random_constant_modulus(cfg.n_r, cfg.l_r, 1.0 / np.sqrt(cfg.n_r), rng)
    q = (rng.standard_normal(cfg.l_t) + 1j * rng.standard_normal(cfg.l_t)) / np.sqrt(2.0)
    return TrainingFrame(f_tr=f_rf, w_tr=w_rf, q=q)


def frame_measurement_matrix(frame: TrainingFrame) -> np.ndarray:
    """Per-frame operator kron(q^T f^T, w^H), shape L_r x (N_t*N_r).

    Satisfies kron(q^T f^T, w^H) @ vec{H} = w^H H f q under column-stacking vec.
    """
    tx_row = (frame.f_tr @ frame.q)[None, :]
    return np.kron(tx_row, frame.w_tr.conj().T)


def stack_measurements(frames, psi: Dictionary) -> MeasurementSetup:
    """Stack per-frame blocks in frame order and precompute a_eff = phi @ psi."""
    frames = list(frames)
    if not frames:
        raise ValueError("at least one frame required")
    blocks = [frame_measurement_matrix(f) for f in frames]
    shape = blocks[0].shape
    if any(b.shape != shape for b in blocks):
        raise ValueError("frames disagree on dimensions")
    phi = np.vstack(blocks)
    return MeasurementSetup(frames=frames, phi=phi, psi=psi, a_eff=phi @ psi.psi)


def build_setup(cfg: SystemConfig, psi: Dictionary, rng: np.random.Generator) -> MeasurementSetup:
    """Draw m_frames random frames and stack them into one MeasurementSetup."""
    return stack_measurements([build_frame(cfg, rng) for _ in range(cfg.m_frames)], psi)


def observe(
    setup: MeasurementSetup,
    h,
    snr_db: float,
    rng: np.random.Generator,
) -> Observation:
    """Observe y = Phi Psi h + n at the requested per-observation SNR.

    h may be a sparse coefficient vector (length G_t*G_r) or a channel matrix
    H (N_r x N_t); the noise variance is calibrated against the realized
    signal power. snr_db = inf gives the noiseless observation.
    """
    h = np.asarray(h)
    if h.ndim == 2:
        signal = setup.phi @ h.ravel(order="F")
    elif h.ndim == 1 and h.shape[0] == setup.a_eff.shape[1]:
        signal = setup.a_eff @ h
    else:
        raise ValueError(f"unrecognized channel shape {h.shape}")
    if np.isinf(snr_db):
        return Observation(y=signal, noise_var=0.0, snr_db=snr_db)
    power = float(np.linalg.norm(signal) ** 2) / len(signal)
    if power == 0.0:
        raise ValueError("SNR is undefined for an all-zero signal")
    noise_var = power * 10.0 ** (-snr_db / 10.0)
    noise = np.sqrt(noise_var / 2.0) * (
        rng.standard_normal(len(signal)) + 1j * rng.standard_normal(len(signal))
    )
    return Observation(y=signal + noise, noise_var=noise_var, snr_db=snr_db)


def vec(H: np.ndarray) -> np.ndarray:
    """Column-stacking vectorization (the convention Phi and Psi share)."""
    return np.asarray(H).ravel(order="F")


def unvec(v: np.ndarray, n_r: int, n_t: int) -> np.ndarray:
    """Inverse of vec for an N_r x N_t matrix."""
    return np.asarray(v).reshape(n_r, n_t, order="F")
