"""Coarse channel estimators: complex AMP, OMP, and an LMMSE baseline.

AMP follows the iterative thresholding recursion with both Onsager feedback
terms (over the residual and its conjugate), a noise-variance estimate from
the residual, and complex soft thresholding at lambda * sigma_t. The iteration
assumes an operator whose spectrum resembles an i.i.d. matrix; hybrid
Kronecker-structured operators violate that badly enough to diverge, so the
operator (and observation) can be pre-scaled to the i.i.d.-equivalent spectral
norm before the recursion runs. The recursion itself is never damped or
modified; divergence is raised, not patched.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .measurement import unvec


class AmpDivergenceError(RuntimeError):
    """AMP produced non-finite iterates."""


class RankDeficientError(RuntimeError):
    """A least-squares subproblem lost rank."""


@dataclass(frozen=True)
class AmpConfig:
    """AMP hyperparameters.

    iterations: fixed iteration count T
    lam: constant threshold multiplier (threshold = lam * sigma_t)
    residual_tol: optional early-stop residual norm; disabled when None
    operator_scaling: 'spectral' rescales the operator to the spectral norm an
        i.i.d. matrix of the same shape would have; 'none' runs on the raw
        operator.
    """

    iterations: int = 30
    lam: float = 1.5
    residual_tol: Optional[float] = None
    operator_scaling: str = "spectral"

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.lam <= 0:
            raise ValueError("lam must be positive")
        if self.operator_scaling not in ("spectral", "none"):
            raise ValueError(f"unknown operator_scaling {self.operator_scaling!r}")


@dataclass
class SparseEstimate:
    """Estimated sparse coefficients and (once synthesized) the channel matrix."""

    h_hat: np.ndarray
    h_matrix: Optional[np.ndarray] = None
    support: Optional[np.ndarray] = None


def soft_threshold_complex(z, t: float):
    """Phase-preserving shrinkage: z * max(|z| - t, 0) / |z| (0 stays 0)."""
    if t < 0:
        raise ValueError("threshold must be >= 0")
    z = np.asarray(z, dtype=np.complex128)
    mag = np.abs(z)
    out = z * (np.maximum(mag - t, 0.0) / np.where(mag > 0, mag, 1.0))
    return out if out.ndim else complex(out)


def onsager_coeffs(z, t: float, m_rows: int):
    """Mean Wirtinger derivatives of the shrinkage, normalized by the row count.

    b = (1/M) sum_i d(eta)/dz_i and c = (1/M) sum_i d(eta)/dz_i*; both vanish
    inside the dead zone |z| <= t.
    """
    if m_rows < 1:
        raise ValueError("m_rows must be >= 1")
    z = np.atleast_1d(np.asarray(z, dtype=np.complex128))
    mag = np.abs(z)
    on = mag > t
    with np.errstate(divide="ignore", invalid="ignore"):
        d_z = np.where(on, 1.0 - t / (2.0 * mag), 0.0)
        d_zbar = np.where(on, t * z**2 / (2.0 * mag**3), 0.0)
    return complex(d_z.sum() / m_rows), complex(d_zbar.sum() / m_rows)


def iid_equivalent_spectral_norm(m_rows: int, n_cols: int) -> float:
    """Largest singular value an i.i.d. unit-column-norm matrix would have."""
    return 1.0 + np.sqrt(n_cols / m_rows)


def spectral_scale(a: np.ndarray) -> float:
    """Scale factor that maps the operator onto the i.i.d.-equivalent spectrum."""
    return float(np.linalg.norm(a, 2)) / iid_equivalent_spectral_norm(*a.shape)


def amp(
    y: np.ndarray,
    a_eff: np.ndarray,
    cfg: AmpConfig,
    scale: Optional[float] = None,
) -> SparseEstimate:
    """Run the AMP recursion for cfg.iterations steps and return h_T.

    scale overrides the operator pre-scaling factor (precompute it with
    spectral_scale when calling repeatedly on the same operator).
    """
    y = np.asarray(y, dtype=np.complex128).ravel()
    m_rows, n_cols = a_eff.shape
    if len(y) != m_rows:
        raise ValueError(f"y has length {len(y)}, operator has {m_rows} rows")
    if cfg.operator_scaling == "spectral":
        s = spectral_scale(a_eff) if scale is None else scale
        if s > 0:
            y = y / s
            a_eff = a_eff / s
    a_h = a_eff.conj().T

    h_t = np.zeros(n_cols, dtype=np.complex128)
    r_prev = np.zeros(m_rows, dtype=np.complex128)
    b = 0.0 + 0.0j
    c = 0.0 + 0.0j
    for t in range(cfg.iterations):
        r_t = y - a_eff @ h_t + b * r_prev + c * np.conj(r_prev)
        sigma2 = float(np.linalg.norm(r_t) ** 2) / m_rows
        z_t = h_t + a_h @ r_t
        if not np.all(np.isfinite(z_t)):
            raise AmpDivergenceError(f"AMP diverged at iteration {t}")
        thr = cfg.lam * np.sqrt(sigma2)
        h_t = soft_threshold_complex(z_t, thr)
        b, c = onsager_coeffs(z_t, thr, m_rows)
        r_prev = r_t
        if cfg.residual_tol is not None and np.linalg.norm(r_t) < cfg.residual_tol:
            break
    return SparseEstimate(h_hat=h_t)


def omp(y: np.ndarray, a_eff: np.ndarray, sparsity: int) -> SparseEstimate:
    """Orthogonal matching pursuit: greedy column selection with LS re-fit."""
    y = np.asarray(y, dtype=np.complex128).ravel()
    m_rows, n_cols = a_eff.shape
    if sparsity < 0 or sparsity > min(m_rows, n_cols):
        raise ValueError(f"sparsity {sparsity} outside [0, {min(m_rows, n_cols)}]")
    h = np.zeros(n_cols, dtype=np.complex128)
    support: list[int] = []
    residual = y.copy()
    coeffs = np.zeros(0, dtype=np.complex128)
    for _ in range(sparsity):
        corr = np.abs(a_eff.conj().T @ residual)
        corr[support] = -1.0
        j = int(np.argmax(corr))
        support.append(j)
        active = a_eff[:, support]
        coeffs, _, rank, _ = np.linalg.lstsq(active, y, rcond=None)
        if rank < len(support):
            raise RankDeficientError(f"active set of size {len(support)} has rank {rank}")
        residual = y - active @ coeffs
    h[support] = coeffs
    return SparseEstimate(h_hat=h, support=np.array(sorted(support), dtype=np.int64))


@dataclass
class ChannelStats:
    """First/second moments of vec{H} used by the LMMSE estimator."""

    mean: np.ndarray
    cov: np.ndarray


def estimate_channel_stats(channels) -> ChannelStats:
    """Sample mean/covariance of vec{H} over a list of channel matrices."""
    vecs = np.stack([np.asarray(H).ravel(order="F") for H in channels])
    mean = vecs.mean(axis=0)
    centered = vecs - mean
    cov = centered.conj().T @ centered / len(vecs)
    return ChannelStats(mean=mean, cov=cov)


def lmmse(
    y: np.ndarray,
    phi: np.ndarray,
    stats: ChannelStats,
    noise_var: float,
    n_r: int,
    n_t: int,
) -> np.ndarray:
    """Linear MMSE channel estimate from estimated channel statistics."""
    y = np.asarray(y, dtype=np.complex128).ravel()
    mean, cov = stats.mean, stats.cov
    cross = cov @ phi.conj().T
    inner = phi @ cross + noise_var * np.eye(len(y))
    try:
        gain = np.linalg.solve(inner, y - phi @ mean)
    except np.linalg.LinAlgError as exc:
        raise RankDeficientError(
            "LMMSE inner matrix is singular; a zero noise variance needs a full-rank prior"
        ) from exc
    if not np.all(np.isfinite(gain)):
        raise RankDeficientError("LMMSE solve produced non-finite values")
    return unvec(mean + cross @ gain, n_r, n_t)


def estimate_channel_matrix(
    est: SparseEstimate,
    psi: np.ndarray,
    n_r: int,
    n_t: int,
    mode: str = "project",
) -> np.ndarray:
    """Synthesize the N_r x N_t channel matrix from sparse coefficients.

    'project' computes unvec(psi @ h); 'reshape' reinterprets h itself as the
    virtual-domain matrix, which is only dimension-consistent when the grid is
    critically sized.
    """
    h = est.h_hat
    if mode == "project":
        if psi.shape[1] != len(h):
            raise ValueError(f"psi has {psi.shape[1]} columns, h has length {len(h)}")
        H = unvec(psi @ h, n_r, n_t)
    elif mode == "reshape":
        if len(h) != n_r * n_t:
            raise ValueError(
                f"literal reshape needs a critically sized grid ({len(h)} != {n_r * n_t})"
            )
        H = unvec(h, n_r, n_t)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    est.h_matrix = H
    return H
