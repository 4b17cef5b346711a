# %% [markdown]
# # Channel realizations
#
# One draw of the RIS-assisted uplink: devices scattered in a disk near the
# surface, a weak Rayleigh direct path to the access point and Rician links
# through the RIS.

# %%
import numpy as np

from ris_aircomp import SystemConfig, generate_scenario
from ris_aircomp.channel import path_loss

cfg = SystemConfig(K=20, M=8, N=40)
ch = generate_scenario(cfg, seed=1)
print(ch.h_direct.shape, ch.G.shape, ch.h_reflect.shape)

# %% [markdown]
# Average power of each link next to its large-scale prediction.

# %%
ap, ris = np.array(cfg.geometry.ap), np.array(cfg.geometry.ris)
d_da = np.linalg.norm(ch.device_positions - ap, axis=1)
d_dr = np.linalg.norm(ch.device_positions - ris, axis=1)
print("device-AP  measured %.2e  model %.2e" % (np.mean(np.abs(ch.h_direct) ** 2),
                                               np.mean(path_loss(d_da, cfg.alpha_da, cfg.T0))))
print("device-RIS measured %.2e  model %.2e" % (np.mean(np.abs(ch.h_reflect) ** 2),
                                               np.mean(path_loss(d_dr, cfg.alpha_dr, cfg.T0))))
print("RIS-AP     measured %.2e  model %.2e" % (np.mean(np.abs(ch.G) ** 2),
                                               path_loss(100.0, cfg.alpha_ra, cfg.T0)))

# %% [markdown]
# The cascaded path through a single element is far weaker than the direct
# path; only a coherent combination over many elements makes the RIS count.

# %%
per_element = np.mean(np.abs(ch.h_reflect) ** 2) * np.mean(np.abs(ch.G) ** 2)
direct = np.mean(np.abs(ch.h_direct) ** 2)
for N in (10, 50, 200):
    print(f"N={N:4d}: coherent cascade / direct power = {N**2 * per_element / direct:.3f}")
