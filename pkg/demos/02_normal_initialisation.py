"""
Fitting a normal input state
============================

The generator can start from a discretised normal distribution instead of
the uniform state.  A small depth-1 circuit is fitted by least squares to
the normal with the mean and standard deviation of the training data.
"""

import numpy as np

from qgan.distributions import TargetSpec, sample_target
from qgan.generator import fit_shape
from qgan.init_fit import FitProblem, discretized_normal, fit_normal_init, fit_residual

samples = sample_target(TargetSpec.lognormal(), 20000, seed=0)
mu, sigma = samples.mean(), samples.std()
target = discretized_normal(mu, sigma)
print(f"data mean {mu:.3f}, std {sigma:.3f}")
print("normal on the grid:", np.round(target, 4))

result = fit_normal_init(FitProblem(target, seed=1))
print("fitted angles:", np.round(result.angles.ravel(), 4))
print(f"residual {result.residual:.2e} after {len(result.history)} steps")

###############################################################################
# A reference set of angles for the same target reaches a similar residual.

reference = np.array([0.3580, 1.0903, 1.5255, 1.3651, 1.4932, -0.9092])
print(f"reference angles residual {fit_residual(fit_shape(3), reference, target):.2e}")
