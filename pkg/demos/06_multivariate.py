"""
A two-dimensional generator
===========================

Two three-qubit registers learn a correlated Gaussian on an 8 x 8 grid.
The preset uses a 512-256 discriminator and 5000 epochs (about half an
hour).  Here a 50-20 discriminator and 2000 epochs keep it to a minute.
Adversarial training in two dimensions oscillates, so the minimum of the
trace is printed next to the final value.
"""

from dataclasses import replace

import numpy as np

from qgan.cli import build_models
from qgan.config import derived_seeds, multivariate_preset
from qgan.generator import index_to_tuple
from qgan.training import train

cfg = multivariate_preset(k=2)
cfg.discriminator.hidden = [50, 20]
data, generator, discriminator = build_models(cfg, seed=2)
print("data shape:", data.shape)

training = replace(cfg.training, epochs=2000, seed=derived_seeds(2)["training"])
result = train(training, data, generator, discriminator)
re = np.array(result.trace.rel_entropy)
print(f"relative entropy {result.initial_rel_entropy:.3f} -> {re[-1]:.3f} (min {re.min():.3f})")

p = result.generator.probabilities()
xy = index_to_tuple(np.arange(p.size), (3, 3))
mean = p @ xy
cov = (xy - mean).T @ ((xy - mean) * p[:, None])
print("generated mean:", np.round(mean, 3))
print("generated covariance:\n", np.round(cov, 3))
