# %% [markdown]
# # Slicing one stabilizer
#
# Measuring S = S_L S_R with two controlled halves that rotate in opposite
# directions makes their overrotations cancel whenever the data sits in the
# +1 eigenspace of S.  On the -1 eigenspace the errors add instead.

# %%
import math

import numpy as np

from stabslice.circuit import Gate, PauliString, circuit_unitary
from stabslice.noise import OverrotationParams, gate_error_angle
from stabslice.slicer import controlled_halves_block

stab = PauliString.uniform("Z", [0, 1, 2, 3])
eps = 0.05
params = OverrotationParams(1.0, 0.0, eps, eps)
order = (4, 0, 1, 2, 3)


def noisy(gates):
    # kappa = 1: the overrotation is just a larger angle in the same direction
    return [g.with_theta(g.theta + g.direction * gate_error_angle(g, params)) for g in gates]


def block(signs):
    return [op for op in controlled_halves_block(stab, 4, signs) if isinstance(op, Gate)]


def fidelity(gates, psi):
    clean = circuit_unitary(gates, order) @ psi
    dirty = circuit_unitary(noisy(gates), order) @ psi
    return abs(np.vdot(clean, dirty)) ** 2


plus_anc = np.array([1, 1]) / math.sqrt(2)
even = np.zeros(16)
even[0b0000] = even[0b0011] = 1 / math.sqrt(2)  # Z0Z1Z2Z3 = +1
odd = np.zeros(16)
odd[0b0001] = odd[0b0111] = 1 / math.sqrt(2)  # Z0Z1Z2Z3 = -1, <Z0Z1> = 0

for name, signs in (("sliced", (1, -1)), ("unsliced", (1, 1))):
    f_plus = fidelity(block(signs), np.kron(plus_anc, even))
    f_minus = fidelity(block(signs), np.kron([0, 1], odd))
    print(f"{name:9s} +1 input: F={f_plus:.12f}   -1 input (control on): F={f_minus:.6f}")
print(f"cos^2(2 eps) = {math.cos(2 * eps) ** 2:.6f}")
