# %% [markdown]
# # Mirror-Prox on a piecewise-linear min-max problem
#
# `min_x max_k p_k^T x + q_k` over a product of unit disks, solved as a
# bilinear saddle problem with an entropic mirror map on the simplex. A
# projected subgradient method serves as the reference.

# %%
import time

import numpy as np

from ris_aircomp.saddle import (DISKS, SurrogateData, duality_gap, solve_saddle,
                                subgradient_oracle)

rng = np.random.default_rng(7)
data = SurrogateData(rng.standard_normal((8, 12)), rng.standard_normal(8), DISKS)

t0 = time.perf_counter()
res = solve_saddle(data, eps=1e-12, max_iter=200_000, trace=True)
print(f"Mirror-Prox: value {res.value:.8f} after {res.iterations} iterations "
      f"({time.perf_counter() - t0:.2f} s, converged={res.converged})")
x_sg = subgradient_oracle(data, iters=10**6)
print(f"subgradient: value {data.primal_value(x_sg):.8f}")

# %% [markdown]
# The ergodic average closes its duality gap at the O(1/t) rate while the
# last iterate converges much faster on these polyhedral problems.

# %%
for T in (100, 1000, 10000):
    r = solve_saddle(data, eps=0.0, max_iter=T)
    print(f"T={T:6d}  gap(avg)={duality_gap(data, r.x_avg, r.y_avg):.2e}  "
          f"T*gap={T * duality_gap(data, r.x_avg, r.y_avg):.2f}  "
          f"gap(last)={duality_gap(data, r.x_last, r.y_last):.2e}")

# %%
res.write_trace("mirror_prox_trace.csv")
