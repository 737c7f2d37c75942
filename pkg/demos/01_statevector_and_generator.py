"""
A three-qubit generator circuit
===============================

Build the R_Y / CZ ansatz by hand, look at the grid distribution it
produces and draw a few measurement samples.
"""

import numpy as np

from qgan.generator import AnsatzShape, GeneratorModel, InputStateSpec, index_to_tuple
from qgan.statevector import Statevector, cz, h, probabilities

# Qubit 0 is the least significant bit of a basis index.
state = Statevector.zero(2).evolve([h(0)])
print("H on qubit 0:", probabilities(state))

# Bell pair: the CZ between two |+> states gives correlated outcomes after a
# final Hadamard on the target.
bell = Statevector.zero(2).evolve([h(0), h(1), cz(0, 1), h(1)])
print("Bell pair:", np.round(probabilities(bell), 3))

###############################################################################
# A depth-2 generator on 3 qubits has (k+1) n = 9 angles.  With all of them at
# zero and the uniform input state the output is the uniform distribution.

shape = AnsatzShape(3, 2)
model = GeneratorModel(shape, np.zeros(shape.param_shape), InputStateSpec.uniform())
print("zero angles:", np.round(model.probabilities(), 4))

model = GeneratorModel.initialise(shape, InputStateSpec.uniform(), seed=5)
p = model.probabilities()
print("random start:", np.round(p, 4), "sum", p.sum())

counts = model.sample(2000, seed=1)
print("2000 shots:", counts.counts)

###############################################################################
# Two registers of three qubits address a 8 x 8 grid.  Index 9 is 001001 in
# binary, so each register reads 1.

print("index 9 on (3, 3):", index_to_tuple(9, (3, 3)))
