r"""Mirror-Prox for ``min_{x in X} max_k (p_k^T x + q_k)``.

The piecewise-linear problem is solved as the bilinear saddle problem

    min_{x in X} max_{y in simplex} (P x + q)^T y

with a Euclidean mirror map on ``x`` and the negative entropy on ``y``.
``X`` is either a product of unit disks, pairing coordinate ``i`` with
``N + i`` (``"disks"``), or the unit Euclidean ball (``"ball"``).
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numba
import numpy as np

DISKS = "disks"
BALL = "ball"
_DOMAINS = (DISKS, BALL)
_LOG_FLOOR = -700.0


@dataclass
class SurrogateData:
    """Rows ``p_k`` of ``P`` and offsets ``q_k`` of one linearized subproblem."""

    P: np.ndarray
    q: np.ndarray
    domain: str

    def __post_init__(self):
        self.P = np.ascontiguousarray(self.P, dtype=float)
        self.q = np.ascontiguousarray(self.q, dtype=float)
        if self.P.ndim != 2 or self.q.shape != (self.P.shape[0],):
            raise ValueError(f"P {self.P.shape} and q {self.q.shape} are inconsistent")
        if self.domain not in _DOMAINS:
            raise ValueError(f"unknown domain {self.domain!r}")
        if self.domain == DISKS and self.P.shape[1] % 2:
            raise ValueError("a disk product needs an even dimension")
        if not (np.all(np.isfinite(self.P)) and np.all(np.isfinite(self.q))):
            raise ValueError("surrogate data must be finite")

    @property
    def K(self):
        return self.P.shape[0]

    @property
    def dim(self):
        return self.P.shape[1]

    def primal_value(self, x):
        return float(np.max(self.P @ x + self.q))


@dataclass
class SaddlePoint:
    x: np.ndarray
    y: np.ndarray

    @property
    def z(self):
        return np.concatenate([self.x, self.y])


def operator_F(z: SaddlePoint, data: SurrogateData):
    """Monotone operator ``[P^T y; -(P x + q)]`` of the saddle function."""
    return np.concatenate([data.P.T @ z.y, -(data.P @ z.x + data.q)])


def lipschitz_const(data: SurrogateData):
    """Largest Euclidean row norm of ``P``."""
    if data.K == 0:
        return 0.0
    return float(np.sqrt(np.max(np.sum(data.P**2, axis=1))))


def bregman(z: SaddlePoint, z_ref: SaddlePoint):
    """Bregman divergence of ``0.5|x|^2 + sum y log y`` between ``z`` and ``z_ref``."""
    y, y_ref = np.asarray(z.y, dtype=float), np.asarray(z_ref.y, dtype=float)
    if np.any((y_ref <= 0) & (y > 0)):
        raise ValueError("reference dual point must be positive where y is positive")
    pos = y > 0
    entropy = np.sum(y[pos] * np.log(y[pos] / y_ref[pos]))
    return float(0.5 * np.sum((z.x - z_ref.x) ** 2) + entropy - np.sum(y - y_ref))


def project_disks(u):
    """Scale each pair ``(u_i, u_{N+i})`` back onto the unit disk if it lies outside."""
    u = np.asarray(u, dtype=float)
    n = u.shape[0] // 2
    radius = np.hypot(u[:n], u[n:])
    scale = 1.0 / np.maximum(radius, 1.0)
    return u * np.concatenate([scale, scale])


def project_ball(u):
    u = np.asarray(u, dtype=float)
    return u / max(1.0, float(np.linalg.norm(u)))


def project_simplex(e):
    """Entropic (KL) projection of a positive vector onto the probability simplex."""
    e = np.asarray(e, dtype=float)
    if np.any(e <= 0):
        raise ValueError("simplex projection needs strictly positive entries")
    total = e.sum()
    if total == 1.0:
        return e.copy()
    return e / total


def project_primal(u, domain):
    return project_disks(u) if domain == DISKS else project_ball(u)


def mirror_step(z: SaddlePoint, direction, gamma, domain) -> SaddlePoint:
    """One prox-mapping: move ``z`` against ``gamma * direction`` in the mirror geometry.

    The dual block is updated in log space with a max-shift before exponentiation;
    the shift cancels in the simplex normalization.
    """
    direction = np.asarray(direction, dtype=float)
    D = z.x.shape[0]
    x = project_primal(z.x - gamma * direction[:D], domain)
    if np.any(z.y <= 0):
        raise ValueError("mirror step needs a strictly positive dual point")
    log_e = np.log(z.y) - gamma * direction[D:]
    if not np.all(np.isfinite(log_e)):
        raise FloatingPointError("non-finite dual update; reduce the step size")
    e = np.exp(np.maximum(log_e - log_e.max(), _LOG_FLOOR))
    return SaddlePoint(x, project_simplex(e))


@numba.njit(cache=True, error_model="numpy")
def _project_primal_inplace(x, disks):
    D = x.shape[0]
    if disks:
        n = D // 2
        for i in range(n):
            r = np.sqrt(x[i] * x[i] + x[n + i] * x[n + i])
            if r > 1.0:
                x[i] /= r
                x[n + i] /= r
    else:
        r = np.sqrt(np.sum(x * x))
        if r > 1.0:
            x /= r


@numba.njit(cache=True, error_model="numpy")
def _dual_step(y, s, gamma):
    # y_new ~ y * exp(gamma * s), computed in log space
    log_e = np.log(y) + gamma * s
    # floor keeps every dual weight strictly positive
    log_e = np.maximum(log_e - log_e.max(), _LOG_FLOOR)
    e = np.exp(log_e)
    return e / e.sum()


@numba.njit(cache=True, error_model="numpy")
def _bregman(x, y, x_ref, y_ref):
    d = 0.5 * np.sum((x - x_ref) ** 2)
    for k in range(y.shape[0]):
        if y[k] > 0:
            d += y[k] * np.log(y[k] / y_ref[k])
        d -= y[k] - y_ref[k]
    return d


@numba.njit(cache=True, error_model="numpy")
def _products(P, q, x, y, Pxq, PTy):
    # one pass over P for both P x + q and P^T y
    K, D = P.shape
    PTy[:] = 0.0
    for k in range(K):
        acc = q[k]
        yk = y[k]
        for d in range(D):
            acc += P[k, d] * x[d]
            PTy[d] += P[k, d] * yk
        Pxq[k] = acc


@numba.njit(cache=True, error_model="numpy")
def _mirror_prox(P, q, x0, y0, gamma, disks, eps, max_iter, trace):
    K, D = P.shape
    x = x0.copy()
    y = y0.copy()
    x_sum = np.zeros_like(x)
    y_sum = np.zeros_like(y)
    hist = np.empty((max_iter if trace else 0, 2))
    Pxq = np.empty(K)
    PTy = np.empty(D)
    converged = False
    t = 0
    while t < max_iter:
        # extrapolation at F(z_t)
        _products(P, q, x, y, Pxq, PTy)
        xh = x - gamma * PTy
        _project_primal_inplace(xh, disks)
        yh = _dual_step(y, Pxq, gamma)
        # update from z_t at F(z'_{t+1})
        _products(P, q, xh, yh, Pxq, PTy)
        xn = x - gamma * PTy
        _project_primal_inplace(xn, disks)
        yn = _dual_step(y, Pxq, gamma)
        step = _bregman(x, y, xn, yn)
        x = xn
        y = yn
        x_sum += x
        y_sum += y
        if trace:
            hist[t, 0] = np.max(P @ x + q)
            hist[t, 1] = step
        t += 1
        if step < eps:
            converged = True
            break
    return x, y, x_sum / max(t, 1), y_sum / max(t, 1), t, converged, hist[:t]


@dataclass
class SaddleResult:
    """Outcome of :func:`solve_saddle`.

    ``x``/``y`` is whichever of the ergodic average and the last iterate has
    the lower primal value; both candidates are kept.
    """

    x: np.ndarray
    y: np.ndarray
    value: float
    iterations: int
    converged: bool
    x_avg: np.ndarray
    y_avg: np.ndarray
    x_last: np.ndarray
    y_last: np.ndarray
    gamma: float
    trace: np.ndarray | None = field(default=None, repr=False)

    def write_trace(self, path):
        """Per-iteration CSV: iteration, primal value of the iterate, Bregman step."""
        if self.trace is None:
            raise ValueError("solve_saddle was run without trace=True")
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["iteration", "primal_value", "bregman_step"])
            for t, (value, step) in enumerate(self.trace, start=1):
                writer.writerow([t, repr(float(value)), repr(float(step))])


def solve_saddle(data: SurrogateData, x0=None, y0=None, eps=1e-5, max_iter=100_000, trace=False):
    """Mirror-Prox with step ``1 / (2 L)``.

    Stops once the Bregman divergence between consecutive iterates drops
    below ``eps`` or after ``max_iter`` iterations. ``x0`` defaults to the
    origin and is projected onto the domain; ``y0`` defaults to uniform.
    """
    K, D = data.K, data.dim
    disks = data.domain == DISKS
    x0 = np.zeros(D) if x0 is None else project_primal(np.asarray(x0, dtype=float), data.domain)
    if y0 is None:
        y0 = np.full(K, 1.0 / K)
    else:
        y0 = np.asarray(y0, dtype=float)
        if np.any(y0 <= 0):
            raise ValueError("initial dual point must be strictly positive")
        y0 = y0 / y0.sum()
    L = lipschitz_const(data)
    if L == 0.0:
        # constant objective: every feasible point is optimal
        value = data.primal_value(x0)
        return SaddleResult(x0, y0, value, 0, True, x0, y0, x0, y0, np.inf,
                            np.empty((0, 2)) if trace else None)
    gamma = 1.0 / (2.0 * L)
    x_last, y_last, x_avg, y_avg, t, converged, hist = _mirror_prox(
        data.P, data.q, x0, y0, gamma, disks, float(eps), int(max_iter), bool(trace)
    )
    v_last, v_avg = data.primal_value(x_last), data.primal_value(x_avg)
    if v_avg < v_last:
        x, y, value = x_avg, y_avg, v_avg
    else:
        x, y, value = x_last, y_last, v_last
    return SaddleResult(x, y, value, int(t), bool(converged), x_avg, y_avg, x_last, y_last,
                        gamma, hist if trace else None)


def dual_value(data: SurrogateData, y):
    """``min_{x in X} (P x + q)^T y``, in closed form for both domain kinds."""
    g = data.P.T @ y
    if data.domain == BALL:
        return float(data.q @ y - np.linalg.norm(g))
    n = data.dim // 2
    return float(data.q @ y - np.sum(np.hypot(g[:n], g[n:])))


def duality_gap(data: SurrogateData, x, y):
    """Primal value at ``x`` minus dual value at ``y``; nonnegative for feasible pairs."""
    return data.primal_value(x) - dual_value(data, y)


@numba.njit(cache=True, error_model="numpy")
def _subgradient(P, q, x0, c, disks, iters):
    x = x0.copy()
    best_x = x0.copy()
    vals = P @ x + q
    best = vals.max()
    for t in range(1, iters + 1):
        k = np.argmax(vals)
        x = x - (c / np.sqrt(t)) * P[k]
        _project_primal_inplace(x, disks)
        vals = P @ x + q
        f = vals.max()
        if f < best:
            best = f
            best_x[:] = x
    return best_x, best


def subgradient_oracle(data: SurrogateData, x0=None, iters=100_000, c=None,
                       step_scales=(1.0, 0.3, 0.1)):
    """Projected subgradient descent with step ``c / sqrt(t)``, keeping the best iterate.

    Used for cross-checking :func:`solve_saddle`. The default ``c`` is the
    domain diameter over the Lipschitz constant. The method is run once for
    each multiple of ``c`` in ``step_scales`` and the best point overall is
    returned, which removes most of the sensitivity to the step constant.
    """
    D = data.dim
    x0 = np.zeros(D) if x0 is None else project_primal(np.asarray(x0, dtype=float), data.domain)
    L = lipschitz_const(data)
    if L == 0.0:
        return x0
    if c is None:
        diameter = 2.0 * np.sqrt(D // 2) if data.domain == DISKS else 2.0
        c = diameter / L
    best_x, best = x0, np.inf
    for scale in step_scales:
        x, value = _subgradient(data.P, data.q, x0, float(c * scale), data.domain == DISKS,
                                int(iters))
        if value < best:
            best_x, best = x, value
    return best_x
