"""Experiment harness: baselines, a brute-force oracle, Monte Carlo sweeps and timing."""
from __future__ import annotations

import csv
import itertools
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np
import yaml
from scipy.optimize import minimize

from .aircomp import aligned_gains, composite_channels, lift_m_subproblem, mse, real_lift
from .altermin import (
    AlterMinSettings,
    altermin,
    complex_from_lift,
    matched_beamformer,
    random_beamformer,
    random_phases,
    sca_loop_m,
)
from .channel import ChannelRealization, SystemConfig, config_from_dict, generate_scenario, make_rng
from .saddle import DISKS, SurrogateData, solve_saddle

METHODS = ("proposed", "random_phase", "no_ris", "brute_force")
AXES = ("M", "N", "K")
BRUTE_FORCE_LIMITS = {"N": 3, "M": 2, "K": 3}


class BaselineResult(NamedTuple):
    m: np.ndarray
    v: np.ndarray | None
    mse: float
    iterations: int = 0
    converged: bool = True


def _optimize_beamformer(channels, v, settings, rng=None):
    """SCA over the beamformer alone, started from the matched filter."""
    try:
        m0 = matched_beamformer(channels, v)
    except ValueError:
        m0 = random_beamformer(channels.M, rng or make_rng(0))
    res = sca_loop_m(real_lift(m0), lift_m_subproblem(v, channels), settings)
    norm = np.linalg.norm(res.x)
    m = complex_from_lift(res.x / norm if norm > 0 else res.x)
    return m, res


def random_phase_baseline(channels: ChannelRealization, settings=None, seed=0, P=1.0,
                          sigma2=1.0) -> BaselineResult:
    """Keep a seeded random RIS configuration fixed and optimize only the beamformer."""
    settings = settings or AlterMinSettings()
    rng = make_rng(seed)
    v = random_phases(channels.N, rng)
    m, res = _optimize_beamformer(channels, v, settings, rng)
    return BaselineResult(m, v, mse(m, v, channels, P, sigma2), res.iterations, res.converged)


def no_ris_baseline(channels: ChannelRealization, settings=None, P=1.0,
                    sigma2=1.0) -> BaselineResult:
    """Direct links only (all reflection coefficients zero)."""
    settings = settings or AlterMinSettings()
    v = np.zeros(channels.N, dtype=complex)
    m, res = _optimize_beamformer(channels, v, settings)
    return BaselineResult(m, None, mse(m, v, channels, P, sigma2), res.iterations, res.converged)


def _beam_grid(M, samples):
    """Unit beamformers covering the sphere up to a common phase."""
    if M == 1:
        return np.ones((1, 1), dtype=complex)
    n_a = max(2, int(round(np.sqrt(samples / 2))))
    n_p = max(2, samples // n_a)
    a = np.linspace(0.0, np.pi / 2, n_a)
    phi = np.linspace(0.0, 2 * np.pi, n_p, endpoint=False)
    A, PHI = np.meshgrid(a, phi, indexing="ij")
    return np.stack([np.cos(A).ravel() + 0j, np.sin(A).ravel() * np.exp(1j * PHI.ravel())], axis=1)


def _worst_gain_on_grid(channels, V, beams, chunk=512):
    """min_k |m^H h_k(v)|^2 for every (v, m) pair; returns (len(V), len(beams))."""
    K, M = channels.K, channels.M
    out = np.empty((V.shape[0], beams.shape[0]))
    BH = beams.conj().T
    for start in range(0, V.shape[0], chunk):
        Vc = V[start:start + chunk]
        H = channels.h_direct[None] + (channels.h_reflect[None] * Vc[:, None, :]) @ channels.G.T
        proj = (H.reshape(-1, M) @ BH).reshape(Vc.shape[0], K, -1)
        out[start:start + chunk] = (proj.real**2 + proj.imag**2).min(axis=1)
    return out


def _angles_to_beam(a, phi):
    return np.array([np.cos(a), np.sin(a) * np.exp(1j * phi)])


def brute_force_small(channels: ChannelRealization, phase_grid_size=24, beam_samples=256,
                      P=1.0, sigma2=1.0, refine=True) -> BaselineResult:
    """Exhaustive phase grid with a sampled beamformer search for tiny systems.

    With ``refine`` the best grid points are polished by a local Nelder-Mead
    search over all angles, which can only lower the returned MSE.
    """
    K, M, N = channels.K, channels.M, channels.N
    if N > BRUTE_FORCE_LIMITS["N"] or M > BRUTE_FORCE_LIMITS["M"] or K > BRUTE_FORCE_LIMITS["K"]:
        raise ValueError(f"brute force is limited to N<=3, M<=2, K<=3; got N={N}, M={M}, K={K}")
    theta = 2 * np.pi * np.arange(phase_grid_size) / phase_grid_size
    grid = np.array(list(itertools.product(theta, repeat=N)))
    V = np.exp(1j * grid)
    beams = _beam_grid(M, beam_samples)
    worst = _worst_gain_on_grid(channels, V, beams)
    flat_best = np.argsort(worst, axis=None)[::-1]
    i, j = np.unravel_index(flat_best[0], worst.shape)
    best_v, best_m, best_gain = V[i], beams[j], worst[i, j]

    if refine:
        def neg_worst(params):
            v = np.exp(1j * params[:N])
            m = np.ones(1, dtype=complex) if M == 1 else _angles_to_beam(params[N], params[N + 1])
            return -aligned_gains(m, composite_channels(channels, v)).min()

        scale = 1.0 / max(best_gain, 1e-300)
        seen = set()
        for flat in flat_best[:200]:
            i, j = np.unravel_index(flat, worst.shape)
            if i in seen:
                continue
            seen.add(i)
            start = list(grid[i])
            if M == 2:
                b = beams[j]
                start += [np.arccos(np.clip(abs(b[0]), 0, 1)), np.angle(b[1]) - np.angle(b[0])]
            res = minimize(lambda p: scale * neg_worst(p), np.array(start), method="Nelder-Mead",
                           options={"xatol": 1e-10, "fatol": 1e-14, "maxiter": 4000})
            gain = -res.fun / scale
            if gain > best_gain:
                best_gain = gain
                best_v = np.exp(1j * res.x[:N])
                best_m = (np.ones(1, dtype=complex) if M == 1
                          else _angles_to_beam(res.x[N], res.x[N + 1]))
            if len(seen) >= 10:
                break
    return BaselineResult(best_m, best_v, mse(best_m, best_v, channels, P, sigma2))


@dataclass
class ExperimentSpec:
    config: SystemConfig = field(default_factory=SystemConfig)
    axis: str | None = None
    values: tuple = ()
    trials: int = 100
    methods: tuple = ("proposed", "random_phase", "no_ris")
    seed: int = 0
    out: str | None = None
    settings: AlterMinSettings = field(default_factory=AlterMinSettings)
    workers: int = 1
    brute_force_cap: int = 18

    def __post_init__(self):
        self.values = tuple(self.values)
        self.methods = tuple(self.methods)
        if self.axis is not None and self.axis not in AXES:
            raise ValueError(f"sweep axis must be one of {AXES} or None, got {self.axis!r}")
        if self.axis is not None and not self.values:
            raise ValueError("a sweep axis needs values")
        if any(v <= 0 for v in self.values) or any(
            b <= a for a, b in zip(self.values, self.values[1:])
        ):
            raise ValueError("sweep values must be positive and increasing")
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        unknown = set(self.methods) - set(METHODS)
        if unknown:
            raise ValueError(f"unknown methods {sorted(unknown)}")
        if "brute_force" in self.methods:
            for cfg in self.configs():
                if cfg.K * cfg.M * cfg.N > self.brute_force_cap:
                    raise ValueError("brute_force requested above the K*M*N cap")

    def configs(self):
        if self.axis is None:
            return [self.config]
        return [self.config.replace(**{self.axis: int(v)}) for v in self.values]

    def points(self):
        if self.axis is None:
            return [(None, self.config)]
        return list(zip(self.values, self.configs()))


@dataclass
class ResultRow:
    method: str
    axis: str
    value: float | None
    seed: int
    mse: float
    time_ms: float
    outer_iters: int
    converged: bool

    @property
    def feasible(self):
        return bool(np.isfinite(self.mse) and self.mse > 0)

    @property
    def mse_db(self):
        return 10.0 * math.log10(self.mse) if self.feasible else math.inf


@dataclass
class SummaryRow:
    method: str
    axis: str
    value: float | None
    trials: int
    mean_mse: float
    converged_fraction: float
    infeasible: int

    @property
    def mean_mse_db(self):
        return 10.0 * math.log10(self.mean_mse) if np.isfinite(self.mean_mse) else math.inf


@dataclass
class ExperimentResult:
    rows: list
    summary: list

    def mean(self, method, value=None):
        for s in self.summary:
            if s.method == method and s.value == value:
                return s.mean_mse
        raise KeyError((method, value))

    def curve(self, method):
        return [(s.value, s.mean_mse) for s in self.summary if s.method == method]

    @property
    def has_infeasible(self):
        return any(not r.feasible for r in self.rows)


def _scenario_seed(seed, trial):
    return (int(seed), int(trial))


def _run_trial(args):
    config, axis, value, trial, methods, seed, settings = args
    channels = generate_scenario(config, _scenario_seed(seed, trial))
    P, sigma2 = config.P, config.sigma2
    rows = []
    for method in methods:
        t0 = time.perf_counter()
        if method == "proposed":
            res = altermin(channels, settings, seed=(seed, trial, 1), P=P, sigma2=sigma2)
            value_mse, iters, conv = res.mse, res.outer_iterations, res.converged
        elif method == "random_phase":
            res = random_phase_baseline(channels, settings, seed=(seed, trial, 2), P=P,
                                        sigma2=sigma2)
            value_mse, iters, conv = res.mse, res.iterations, res.converged
        elif method == "no_ris":
            res = no_ris_baseline(channels, settings, P=P, sigma2=sigma2)
            value_mse, iters, conv = res.mse, res.iterations, res.converged
        else:
            res = brute_force_small(channels, P=P, sigma2=sigma2)
            value_mse, iters, conv = res.mse, 0, True
        elapsed = 1e3 * (time.perf_counter() - t0)
        rows.append(ResultRow(method, axis or "", value, trial, float(value_mse), elapsed,
                              int(iters), bool(conv)))
    return rows


def _summarize(rows, methods):
    summary = []
    order = {m: i for i, m in enumerate(methods)}
    keys = sorted({(r.method, r.value) for r in rows},
                  key=lambda k: (order[k[0]], -math.inf if k[1] is None else k[1]))
    for method, value in keys:
        group = [r for r in rows if r.method == method and r.value == value]
        finite = [r.mse for r in group if r.feasible]
        summary.append(SummaryRow(
            method, group[0].axis, value, len(group),
            float(np.mean(finite)) if finite else math.inf,
            float(np.mean([r.converged for r in group])),
            len(group) - len(finite),
        ))
    return summary


def run_experiment(spec: ExperimentSpec, progress=None) -> ExperimentResult:
    """Run every method on identical channel draws for each (sweep value, trial).

    Trial ``t`` uses the same scenario seed at every sweep value. Rows are
    sorted by (method, sweep value, seed); per-point means follow. When
    ``spec.out`` is set the tables are written as CSV.
    """
    jobs = [
        (cfg, spec.axis, value, trial, spec.methods, spec.seed, spec.settings)
        for value, cfg in spec.points()
        for trial in range(spec.trials)
    ]
    rows = []
    if spec.workers > 1:
        with ProcessPoolExecutor(spec.workers) as pool:
            for chunk in pool.map(_run_trial, jobs):
                rows.extend(chunk)
    else:
        for i, job in enumerate(jobs):
            rows.extend(_run_trial(job))
            if progress:
                progress(i + 1, len(jobs))
    order = {m: i for i, m in enumerate(spec.methods)}
    rows.sort(key=lambda r: (order[r.method], -math.inf if r.value is None else r.value, r.seed))
    result = ExperimentResult(rows, _summarize(rows, spec.methods))
    if spec.out:
        write_results(result, spec.out)
    return result


RESULT_HEADER = ["kind", "method", "axis", "value", "seed", "mse", "mse_db", "outer_iters",
                 "converged", "feasible"]


def _fmt(x):
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if float(x).is_integer() and abs(x) < 1e15:
        return str(int(x))
    return repr(float(x))


def write_results(result: ExperimentResult, path):
    """Trial rows then per-point means. Wall times go to a ``.timing.csv`` sidecar
    so that the main table is reproducible byte for byte."""
    path = Path(path)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(RESULT_HEADER)
        for r in result.rows:
            writer.writerow(["trial", r.method, r.axis, _fmt(r.value), r.seed, _fmt(r.mse),
                             _fmt(r.mse_db), r.outer_iters, _fmt(r.converged), _fmt(r.feasible)])
        for s in result.summary:
            writer.writerow(["mean", s.method, s.axis, _fmt(s.value), "", _fmt(s.mean_mse),
                             _fmt(s.mean_mse_db), "", _fmt(s.converged_fraction),
                             _fmt(s.infeasible == 0)])
    timing_path = path.with_name(path.stem + ".timing.csv")
    with open(timing_path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["method", "axis", "value", "seed", "time_ms"])
        for r in result.rows:
            writer.writerow([r.method, r.axis, _fmt(r.value), r.seed, f"{r.time_ms:.3f}"])
    return path


def read_results(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def load_experiment(path) -> ExperimentSpec:
    """Experiment file: a ``scenario`` mapping (scenario keys) plus an ``experiment`` mapping."""
    with open(path) as fh:
        raw = yaml.safe_load(fh) or {}
    config, scenario_seed = config_from_dict(raw.get("scenario") or {})
    exp = dict(raw.get("experiment") or {})
    settings = AlterMinSettings(**(exp.pop("settings", None) or {}))
    axis = exp.pop("axis", None)
    spec = ExperimentSpec(
        config=config,
        axis=None if axis in (None, "none") else str(axis).upper(),
        values=tuple(exp.pop("values", ())),
        trials=int(exp.pop("trials", 100)),
        methods=tuple(exp.pop("methods", ("proposed", "random_phase", "no_ris"))),
        seed=int(exp.pop("seed", scenario_seed if scenario_seed is not None else 0)),
        out=exp.pop("out", None),
        settings=settings,
        workers=int(exp.pop("workers", 1)),
    )
    if exp:
        raise ValueError(f"unknown experiment keys: {sorted(exp)}")
    return spec


# Sweep presets: large systems (K=200, low_density K=10) and desk-scale sweeps at K=20.
PRESETS = {
    "antennas": dict(axis="M", values=(5, 10, 15, 20, 25, 30), config=dict(K=200, N=50)),
    "elements": dict(axis="N", values=(10, 30, 50, 70, 90), config=dict(K=200, M=20)),
    "devices": dict(axis="K", values=(100, 150, 200, 250, 300), config=dict(M=20, N=50)),
    "low_density": dict(axis="M", values=(5, 10, 15, 20), config=dict(K=10, N=40)),
    "desk_antennas": dict(axis="M", values=(5, 10, 15, 20), config=dict(K=20, N=50)),
    "desk_elements": dict(axis="N", values=(10, 20, 30, 40), config=dict(K=20, M=20)),
}


def preset(name, **overrides) -> ExperimentSpec:
    p = PRESETS[name]
    config = SystemConfig(**p["config"])
    kwargs = dict(config=config, axis=p["axis"], values=p["values"])
    kwargs.update(overrides)
    return ExperimentSpec(**kwargs)


@dataclass
class TimingRow:
    K: int
    N: int
    per_iter_s: float


@dataclass
class TimingTable:
    rows: list
    slope_K: float
    slope_N: float

    def time(self, K, N):
        for r in self.rows:
            if r.K == K and r.N == N:
                return r.per_iter_s
        raise KeyError((K, N))


def _timing_instance(K, N, seed, domain=DISKS):
    rng = make_rng((seed, K, N))
    return SurrogateData(rng.standard_normal((K, 2 * N)), rng.standard_normal(K), domain)


def _time_once(data, iters):
    t0 = time.perf_counter()
    res = solve_saddle(data, eps=0.0, max_iter=iters)
    return (time.perf_counter() - t0) / res.iterations


def time_per_iteration(K, N, iters=1000, repeats=7, seed=0, domain=DISKS):
    """Fastest observed per-iteration Mirror-Prox time on a random (K, 2N) instance."""
    data = _timing_instance(K, N, seed, domain)
    solve_saddle(data, eps=0.0, max_iter=2)  # compile / warm caches
    return float(min(_time_once(data, iters) for _ in range(repeats)))


def timing_sweep(K_values=(100, 200, 400), N_values=(100, 200, 400), K_fixed=None, N_fixed=None,
                 iters=1000, repeats=7, seed=0) -> TimingTable:
    """Per-iteration Mirror-Prox time over a K sweep and an N sweep.

    All sizes are measured round-robin within each repeat so that slow
    drifts of the machine affect them alike; the fastest repeat is kept.
    Returns the measurements and the fitted log-log slopes; linear cost in
    ``K * N`` gives slopes near one.
    """
    K_fixed = K_fixed or K_values[0]
    N_fixed = N_fixed or N_values[0]
    sizes = [(K, N_fixed) for K in K_values]
    sizes += [(K_fixed, N) for N in N_values if (K_fixed, N) not in sizes]
    instances = {size: _timing_instance(*size, seed) for size in sizes}
    for data in instances.values():
        solve_saddle(data, eps=0.0, max_iter=2)
    best = {size: math.inf for size in sizes}
    for _ in range(repeats):
        for size, data in instances.items():
            best[size] = min(best[size], _time_once(data, iters))
    rows = [TimingRow(K, N, float(best[(K, N)])) for K, N in sizes]
    k_rows = [r for r in rows if r.N == N_fixed and r.K in K_values]
    n_rows = [r for r in rows if r.K == K_fixed and r.N in N_values]
    slope_K = float(np.polyfit(np.log([r.K for r in k_rows]),
                               np.log([r.per_iter_s for r in k_rows]), 1)[0])
    slope_N = float(np.polyfit(np.log([r.N for r in n_rows]),
                               np.log([r.per_iter_s for r in n_rows]), 1)[0])
    return TimingTable(rows, slope_K, slope_N)


def write_timing(table: TimingTable, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["K", "N", "per_iter_us"])
        for r in table.rows:
            writer.writerow([r.K, r.N, f"{1e6 * r.per_iter_s:.3f}"])
    return path


@dataclass
class OracleRow:
    seed: int
    K: int
    M: int
    N: int
    mse_altermin: float
    mse_brute_force: float

    @property
    def rel_gap(self):
        return (self.mse_altermin - self.mse_brute_force) / self.mse_brute_force


def oracle_check(config: SystemConfig, trials=20, seed=0, settings=None, phase_grid_size=24,
                 beam_samples=256):
    """Compare altermin against :func:`brute_force_small` on tiny scenarios."""
    settings = settings or AlterMinSettings()
    rows = []
    for t in range(trials):
        channels = generate_scenario(config, _scenario_seed(seed, t))
        am = altermin(channels, settings, seed=(seed, t, 1), P=config.P, sigma2=config.sigma2)
        bf = brute_force_small(channels, phase_grid_size, beam_samples, P=config.P,
                               sigma2=config.sigma2)
        rows.append(OracleRow(t, config.K, config.M, config.N, am.mse, bf.mse))
    return rows
