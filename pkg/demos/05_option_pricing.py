"""
Pricing a European call
=======================

The expected payoff max(S - K, 0) under the discretised log-normal, computed
three ways: exactly, by Monte Carlo sampling, and with amplitude estimation
on the loaded distribution.
"""

import numpy as np

from qgan.config import pricing_preset
from qgan.distributions import analytic_discretized, expected_payoff
from qgan.qae import QaeProblem, monte_carlo_payoff, objective_probability, run_qae

strike = 2
probs = analytic_discretized(pricing_preset().target.spec())
print("discretised law:", np.round(probs, 4))
print(f"exact expected payoff {expected_payoff(probs, strike):.4f}")

rng = np.random.default_rng(0)
mc = monte_carlo_payoff(rng.choice(8, 1024, p=probs), strike)
print(f"Monte Carlo, 1024 samples: {mc.estimate:.4f} +- {mc.ci_halfwidth:.4f}")

problem = QaeProblem(probs, strike, eval_qubits=8)
print(f"objective qubit probability {objective_probability(problem):.5f}")
res = run_qae(problem)
print(f"amplitude estimation, m=8: a={res.amplitude:.5f}, payoff {res.payoff:.4f}, ci {np.round(res.ci, 4)}")

###############################################################################
# More evaluation qubits sharpen the estimate.

for m in (3, 5, 7):
    r = run_qae(QaeProblem(probs, strike, eval_qubits=m))
    print(f"m={m}: payoff {r.payoff:.4f}")
