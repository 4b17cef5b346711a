"""Alternating minimization over the RIS vector and the receive beamformer.

Each block is handled by successive convex approximation: the concave
per-device quadratics are replaced by their tangent planes and the resulting
piecewise-linear problem is solved with Mirror-Prox.

Objective values here are of the order of the squared channel gains
(1e-14 and below in the default geometry), so every stopping threshold is
applied relative to the magnitude of the current objective.
"""
from __future__ import annotations

import csv
import time
from dataclasses import dataclass, field

import numpy as np

from .aircomp import (
    LiftedMSubproblem,
    LiftedVSubproblem,
    complex_from_lift,
    composite_channels,
    lift_m_subproblem,
    lift_v_subproblem,
    minmax_objective,
    mse,
    real_lift,
)
from .channel import ChannelRealization, make_rng
from .saddle import BALL, DISKS, SurrogateData, project_ball, project_disks, solve_saddle

#: relative increase tolerated when accepting an SCA step
DESCENT_SLACK = 1e-9


@dataclass
class AlterMinSettings:
    eps_outer: float = 1e-5
    eps_inner: float = 1e-5
    eps_saddle: float = 1e-5
    max_outer: int = 100
    max_inner: int = 100
    max_saddle_iter: int = 100_000
    descent_safeguard: bool = True
    warm_dual: bool = True
    init: str = "matched"  # or "random"
    n_starts: int = 1

    def __post_init__(self):
        for name in ("eps_outer", "eps_inner", "eps_saddle"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        for name in ("max_outer", "max_inner", "max_saddle_iter", "n_starts"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be at least 1")
        if self.init not in ("matched", "random"):
            raise ValueError(f"unknown initialization {self.init!r}")


@dataclass
class ConvergenceLog:
    objective: list = field(default_factory=list)
    mse: list = field(default_factory=list)
    inner_iters_v: list = field(default_factory=list)
    inner_iters_m: list = field(default_factory=list)
    elapsed_ms: list = field(default_factory=list)
    v_history: list = field(default_factory=list)
    m_history: list = field(default_factory=list)

    def append(self, objective, mse_value, it_v, it_m, elapsed_ms):
        self.objective.append(objective)
        self.mse.append(mse_value)
        self.inner_iters_v.append(it_v)
        self.inner_iters_m.append(it_m)
        self.elapsed_ms.append(elapsed_ms)

    def rows(self):
        return [
            (l, self.objective[l], self.mse[l], self.inner_iters_v[l], self.inner_iters_m[l],
             self.elapsed_ms[l])
            for l in range(len(self.objective))
        ]

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["outer_iter", "objective", "mse", "inner_iters_v", "inner_iters_m",
                             "elapsed_ms"])
            for row in self.rows():
                writer.writerow([row[0], repr(row[1]), repr(row[2]), row[3], row[4],
                                 f"{row[5]:.3f}"])


@dataclass
class SCAResult:
    x: np.ndarray
    objective: float
    iterations: int
    converged: bool
    history: list


def surrogate_v(v_lift_n, lifted: LiftedVSubproblem) -> SurrogateData:
    """Tangent planes of the concave device objectives at ``v_lift_n``."""
    Av = lifted.A @ v_lift_n
    P = 2.0 * (Av - lifted.b)
    q = -(Av @ v_lift_n) - lifted.c_abs2
    return SurrogateData(P, q, DISKS)


def surrogate_m(m_lift_n, lifted: LiftedMSubproblem) -> SurrogateData:
    Hm = lifted.H @ m_lift_n
    return SurrogateData(2.0 * Hm, -(Hm @ m_lift_n), BALL)


def _sca_loop(x_start, objective, make_surrogate, project, settings: AlterMinSettings):
    x = project(np.asarray(x_start, dtype=float))
    f = objective(x)
    history = [f]
    converged = False
    y = None
    n = 0
    while n < settings.max_inner:
        data = make_surrogate(x)
        eps = settings.eps_saddle
        attempts = 4 if settings.descent_safeguard else 1
        accepted = False
        for _ in range(attempts):
            res = solve_saddle(data, x0=x, y0=y if settings.warm_dual else None, eps=eps,
                               max_iter=settings.max_saddle_iter)
            f_new = objective(res.x)
            if not settings.descent_safeguard or f_new <= f + DESCENT_SLACK * abs(f):
                accepted = True
                break
            eps /= 10.0
        n += 1
        if not accepted:
            # incumbent kept: the surrogate cannot improve it at this accuracy
            converged = True
            break
        decrease = f - f_new
        x, f, y = res.x, f_new, res.y
        history.append(f)
        if decrease < settings.eps_inner * abs(history[-2]):
            converged = True
            break
    return SCAResult(x, f, n, converged, history)


def sca_loop_v(v_start, lifted: LiftedVSubproblem, settings: AlterMinSettings) -> SCAResult:
    """SCA over the relaxed RIS vector; the returned objective never exceeds the start's."""
    return _sca_loop(v_start, lifted.objective, lambda x: surrogate_v(x, lifted),
                     project_disks, settings)


def sca_loop_m(m_start, lifted: LiftedMSubproblem, settings: AlterMinSettings) -> SCAResult:
    return _sca_loop(m_start, lifted.objective, lambda x: surrogate_m(x, lifted),
                     project_ball, settings)


def project_unit_modulus(v_lift):
    """Map each real pair to the unit circle; a zero pair goes to phase 0."""
    v = complex_from_lift(v_lift)
    mag = np.abs(v)
    out = np.ones_like(v)
    nz = mag > 0
    out[nz] = v[nz] / mag[nz]
    return out


def random_phases(N, rng):
    return np.exp(1j * rng.uniform(0.0, 2.0 * np.pi, size=N))


def matched_beamformer(channels: ChannelRealization, v):
    """Normalized sum of the composite channels."""
    m = composite_channels(channels, v).sum(axis=0)
    norm = np.linalg.norm(m)
    if norm == 0:
        raise ValueError("composite channels sum to zero")
    return m / norm


def random_beamformer(M, rng):
    m = rng.standard_normal(M) + 1j * rng.standard_normal(M)
    return m / np.linalg.norm(m)


@dataclass
class AlterMinResult:
    m: np.ndarray
    v: np.ndarray
    mse: float
    mse_relaxed: float
    v_relaxed: np.ndarray
    objective: float
    converged: bool
    log: ConvergenceLog
    initial_mse: float

    @property
    def outer_iterations(self):
        return len(self.log.objective) - 1


def _initial_point(channels, init, rng):
    v0 = random_phases(channels.N, rng)
    if init == "random":
        m0 = random_beamformer(channels.M, rng)
    else:
        try:
            m0 = matched_beamformer(channels, v0)
        except ValueError:
            m0 = random_beamformer(channels.M, rng)
    return m0, v0


def _altermin_single(channels, settings, P, sigma2, rng, init):
    start = time.perf_counter()
    m, v = _initial_point(channels, init, rng)
    v_lift, m_lift = real_lift(v), real_lift(m)
    log = ConvergenceLog()
    obj = minmax_objective(m, v, channels)
    initial_mse = mse(m, v, channels, P, sigma2)
    log.append(obj, initial_mse, 0, 0, 0.0)
    log.v_history.append([])
    log.m_history.append([])
    if obj >= 0:
        raise ValueError("every composite channel is orthogonal to the initial beamformer")
    converged = False
    for _ in range(settings.max_outer):
        res_v = sca_loop_v(v_lift, lift_v_subproblem(m, channels), settings)
        v_lift = res_v.x
        v = complex_from_lift(v_lift)
        res_m = sca_loop_m(m_lift, lift_m_subproblem(v, channels), settings)
        m_lift = res_m.x
        norm = np.linalg.norm(m_lift)
        if norm > 0:
            # rescaling to the unit sphere can only lower the objective
            m_lift = m_lift / norm
        m = complex_from_lift(m_lift)
        new_obj = minmax_objective(m, v, channels)
        log.append(new_obj, mse(m, v, channels, P, sigma2), res_v.iterations, res_m.iterations,
                   1e3 * (time.perf_counter() - start))
        log.v_history.append(res_v.history)
        log.m_history.append(res_m.history)
        decrease = obj - new_obj
        obj = new_obj
        if decrease < settings.eps_outer * abs(obj):
            converged = True
            break
    v_final = project_unit_modulus(v_lift)
    return AlterMinResult(
        m=m,
        v=v_final,
        mse=mse(m, v_final, channels, P, sigma2),
        mse_relaxed=mse(m, v, channels, P, sigma2),
        v_relaxed=v,
        objective=obj,
        converged=converged,
        log=log,
        initial_mse=initial_mse,
    )


def altermin(channels: ChannelRealization, settings: AlterMinSettings | None = None, seed=0,
             P=1.0, sigma2=1.0) -> AlterMinResult:
    """Joint beamformer / RIS design minimizing the AirComp MSE.

    ``P`` and ``sigma2`` only scale the reported MSE; the iterates do not
    depend on them. With ``settings.n_starts > 1`` the first run uses
    ``settings.init`` and the others start from random beamformers; the
    lowest final MSE is kept.
    """
    settings = settings or AlterMinSettings()
    rng = make_rng(seed)
    best = None
    for i in range(settings.n_starts):
        init = settings.init if i == 0 else "random"
        res = _altermin_single(channels, settings, P, sigma2, rng, init)
        if best is None or res.mse < best.mse:
            best = res
    return best
