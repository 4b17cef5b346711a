# %% [markdown]
# # Joint beamformer and RIS design
#
# Alternating minimization with SCA surrogates on one scenario, then a small
# Monte Carlo sweep over the number of AP antennas against the random-phase
# and no-RIS baselines.

# %%
import numpy as np

from ris_aircomp import AlterMinSettings, SystemConfig, altermin, generate_scenario
from ris_aircomp.bench import (ExperimentSpec, brute_force_small, no_ris_baseline,
                               random_phase_baseline, run_experiment)

cfg = SystemConfig(K=20, M=8, N=30)
ch = generate_scenario(cfg, seed=0)
res = altermin(ch, P=cfg.P, sigma2=cfg.sigma2)
for l, (obj, value) in enumerate(zip(res.log.objective, res.log.mse)):
    print(f"outer {l}: objective {obj:.4e}  mse {10 * np.log10(value):.3f} dB")
print("relaxed %.4f dB, projected %.4f dB" % (10 * np.log10(res.mse_relaxed),
                                              10 * np.log10(res.mse)))
print("|v| before projection ranges over [%.4f, %.4f]" % (np.abs(res.v_relaxed).min(),
                                                           np.abs(res.v_relaxed).max()))

# %%
for name, r in (("random phase", random_phase_baseline(ch, P=cfg.P, sigma2=cfg.sigma2)),
                ("no RIS", no_ris_baseline(ch, P=cfg.P, sigma2=cfg.sigma2))):
    print(f"{name:>12s}: {10 * np.log10(r.mse):.3f} dB")

# %% [markdown]
# On a tiny system an exhaustive search is affordable; a few random restarts
# of the alternating method close most of the gap to it.

# %%
tiny = generate_scenario(SystemConfig(K=3, M=2, N=3), seed=(5, 0))
bf = brute_force_small(tiny)
for starts in (1, 16):
    am = altermin(tiny, AlterMinSettings(n_starts=starts), seed=1)
    print(f"n_starts={starts:2d}: relative gap to brute force {am.mse / bf.mse - 1:+.3%}")

# %%
spec = ExperimentSpec(config=SystemConfig(K=10, N=20), axis="M", values=(2, 4, 8), trials=10,
                      out="antenna_sweep.csv")
result = run_experiment(spec)
for s in result.summary:
    print(f"{s.method:>13s} M={s.value:2d}: {s.mean_mse_db:7.3f} dB")
