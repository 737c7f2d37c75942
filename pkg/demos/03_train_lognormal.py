"""
Training a qGAN on log-normal data
==================================

One seed of the benchmark configuration: 2000 epochs at a learning rate
of 1e-4, about two minutes on one core.
"""

from dataclasses import replace

import numpy as np

from qgan.cli import build_models
from qgan.config import benchmark_preset, derived_seeds
from qgan.training import train

cfg = benchmark_preset("lognormal", "uniform", 2)
data, generator, discriminator = build_models(cfg, seed=0)
print("training samples:", data.size, "grid counts:", np.bincount(data, minlength=8))

training = replace(cfg.training, seed=derived_seeds(0)["training"])


def progress(epoch, gen, disc, trace):
    if epoch % 250 == 0:
        print(f"epoch {epoch:4d}  L_G {trace.loss_g[-1]:.4f}  L_D {trace.loss_d[-1]:.4f}  "
              f"RE {trace.rel_entropy[-1]:.4f}")


result = train(training, data, generator, discriminator, callback=progress)

print(f"relative entropy {result.initial_rel_entropy:.4f} -> {result.trace.rel_entropy[-1]:.4f}")
ks = result.final_ks
print(f"KS {ks.statistic:.4f} (bound {ks.bound:.4f}), accepted: {ks.accepted}")
print("trained pdf:", np.round(result.generator.probabilities(), 4))
