# %% [markdown]
# # AirComp distortion under zero-forcing transmit scalars
#
# Every device inverts its effective channel, so the receiver sees the
# exact sum plus noise. The weakest device sets the denoising factor and
# therefore the MSE.

# %%
import numpy as np

from ris_aircomp import (SystemConfig, composite_channels, denoising_factor, generate_scenario,
                         mse, transmit_scalars)
from ris_aircomp.aircomp import distortion, misalignment

cfg = SystemConfig(K=10, M=4, N=16)
ch = generate_scenario(cfg, seed=3)
rng = np.random.default_rng(0)
v = np.exp(1j * rng.uniform(0, 2 * np.pi, cfg.N))
m = composite_channels(ch, v).sum(axis=0)
m /= np.linalg.norm(m)

# %%
eta = denoising_factor(m, v, ch, cfg.P)
w = transmit_scalars(m, v, ch, eta)
print("misalignment:", misalignment(m, v, ch, w, eta))
print("transmit powers / P:", np.round(np.abs(w) ** 2 / cfg.P, 3))

# %% [markdown]
# The general distortion expression and the closed form agree.

# %%
print(distortion(m, v, ch, w, eta, cfg.sigma2), mse(m, v, ch, cfg.P, cfg.sigma2))
print("MSE in dB: %.2f" % (10 * np.log10(mse(m, v, ch, cfg.P, cfg.sigma2))))
