"""AirComp distortion model and the real-valued lifting of both subproblems.

Complex vectors ``m`` (receive beamformer, length M) and ``v`` (RIS
reflection vector, length N) are plain numpy arrays. Their real lifts are
``[Re(x); Im(x)]``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelRealization

#: below this the worst aligned gain is treated as zero
ZERO_GAIN = 1e-30


class InfeasibleError(ValueError):
    """A composite channel is orthogonal to the receive beamformer."""


def real_lift(x):
    x = np.asarray(x, dtype=complex)
    return np.concatenate([x.real, x.imag])


def complex_from_lift(x_lift):
    x_lift = np.asarray(x_lift, dtype=float)
    n = x_lift.shape[0] // 2
    return x_lift[:n] + 1j * x_lift[n:]


def lift_hermitian(X):
    """Real symmetric matrix ``R`` with ``lift(x).T @ R @ lift(x) == Re(x^H X x)``."""
    return np.block([[X.real, -X.imag], [X.imag, X.real]])


def composite_channels(channels: ChannelRealization, v):
    """All composite channels ``h_d,k + G diag(h_r,k) v`` stacked as a (K, M) array."""
    v = np.asarray(v, dtype=complex)
    if v.shape != (channels.N,):
        raise ValueError(f"v has shape {v.shape}, expected ({channels.N},)")
    return channels.h_direct + (channels.h_reflect * v) @ channels.G.T


def composite_channel(k, channels: ChannelRealization, v):
    v = np.asarray(v, dtype=complex)
    if v.shape != (channels.N,):
        raise ValueError(f"v has shape {v.shape}, expected ({channels.N},)")
    return channels.h_direct[k] + channels.G @ (channels.h_reflect[k] * v)


def aligned_gains(m, H):
    """``|m^H h_k|^2`` for each row ``h_k`` of ``H``."""
    return np.abs(H @ np.conj(m)) ** 2


def denoising_factor(m, v, channels, P):
    """eta = P * min_k |m^H h_k|^2."""
    gains = aligned_gains(m, composite_channels(channels, v))
    worst = gains.min()
    if worst < ZERO_GAIN:
        raise InfeasibleError(f"device {int(gains.argmin())} has zero aligned gain")
    return P * worst


def transmit_scalars(m, v, channels, eta):
    """Zero-forcing transmit scalars ``w_k = sqrt(eta) (m^H h_k)^* / |m^H h_k|^2``."""
    proj = composite_channels(channels, v) @ np.conj(m)
    gains = np.abs(proj) ** 2
    if gains.min() < ZERO_GAIN:
        raise InfeasibleError(f"device {int(gains.argmin())} has zero aligned gain")
    return np.sqrt(eta) * np.conj(proj) / gains


def misalignment(m, v, channels, w, eta):
    """Signal misalignment part of the distortion, ``sum_k |m^H h_k w_k / sqrt(eta) - 1|^2``."""
    proj = composite_channels(channels, v) @ np.conj(m)
    return float(np.sum(np.abs(proj * w / np.sqrt(eta) - 1.0) ** 2))


def distortion(m, v, channels, w, eta, sigma2):
    """Expected squared error for arbitrary transmit scalars and denoising factor."""
    m = np.asarray(m, dtype=complex)
    return misalignment(m, v, channels, w, eta) + sigma2 * np.vdot(m, m).real / eta


def mse(m, v, channels, P, sigma2):
    """Distortion under zero-forcing transmission: ``sigma2 |m|^2 / (P min_k |m^H h_k|^2)``.

    Returns ``inf`` when some composite channel is (numerically) orthogonal to ``m``.
    """
    m = np.asarray(m, dtype=complex)
    norm2 = np.vdot(m, m).real
    if norm2 <= 0:
        raise ValueError("beamformer must be nonzero")
    worst = aligned_gains(m, composite_channels(channels, v)).min()
    if worst < ZERO_GAIN * norm2:
        return np.inf
    return float(sigma2 * norm2 / (P * worst))


def minmax_objective(m, v, channels):
    """``max_k -|m^H h_k|^2``, the quantity minimized jointly over (m, v)."""
    return float(-aligned_gains(m, composite_channels(channels, v)).min())


@dataclass
class LiftedVSubproblem:
    """Per-device data of ``v~ A_k v~ - 2 v~ b_k - |c_k|^2 = -|c_k + a_k^H v|^2``."""

    A: np.ndarray  # (K, 2N, 2N)
    b: np.ndarray  # (K, 2N)
    c_abs2: np.ndarray  # (K,)

    def values(self, v_lift):
        """Objective of each device at ``v_lift``."""
        return (
            np.einsum("i,kij,j->k", v_lift, self.A, v_lift)
            - 2.0 * self.b @ v_lift
            - self.c_abs2
        )

    def objective(self, v_lift):
        return float(self.values(v_lift).max())


@dataclass
class LiftedMSubproblem:
    """Per-device data of ``m~ H_k m~ = -|m^H h_k|^2``."""

    H: np.ndarray  # (K, 2M, 2M)

    def values(self, m_lift):
        return np.einsum("i,kij,j->k", m_lift, self.H, m_lift)

    def objective(self, m_lift):
        return float(self.values(m_lift).max())


def lift_v_subproblem(m, channels: ChannelRealization) -> LiftedVSubproblem:
    m = np.asarray(m, dtype=complex)
    c = channels.h_direct @ np.conj(m)
    # row k holds a_k^H = m^H G diag(h_r,k)
    a_herm = (np.conj(m) @ channels.G)[None, :] * channels.h_reflect
    a = np.conj(a_herm)
    A = np.stack([lift_hermitian(-np.outer(ak, ak.conj())) for ak in a])
    b = np.concatenate([(c[:, None] * a).real, (c[:, None] * a).imag], axis=1)
    return LiftedVSubproblem(A, b, np.abs(c) ** 2)


def lift_m_subproblem(v, channels: ChannelRealization) -> LiftedMSubproblem:
    H = composite_channels(channels, v)
    return LiftedMSubproblem(np.stack([lift_hermitian(-np.outer(h, h.conj())) for h in H]))
