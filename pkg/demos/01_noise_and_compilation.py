# %% [markdown]
# # Overrotation channels and trapped-ion compilations
#
# A gate exp(-i theta G) that overshoots by eps can be modelled two ways:
# coherently, as an extra rotation exp(-i eps G), or stochastically, applying
# G with probability sin^2(eps).  Both have the same average gate fidelity,
# and kappa interpolates between them.

# %%
import numpy as np

from stabslice.circuit import (
    PI,
    Pauli,
    PauliString,
    circuit_unitary,
    compile_cnot,
    compile_sk1,
    equal_up_to_phase,
    planar,
    rotation_unitary,
)
from stabslice.noise import (
    OverrotationParams,
    average_gate_fidelity,
    coherent_channel,
    epsilon_relation_inverse,
    infidelity_to_epsilon,
    sequence_superop,
    sk1_crossover,
    stochastic_channel,
    superop_infidelity,
)

xx = Pauli(PauliString.uniform("X", [0, 1]))
for eps in (0.01, 0.1, 0.5):
    fc = average_gate_fidelity(coherent_channel(xx, eps))
    fs = average_gate_fidelity(stochastic_channel(xx, eps))
    print(f"eps={eps:<5} coherent F={fc:.6f} stochastic F={fs:.6f}")

# %% [markdown]
# The CNOT used for syndrome extraction is built from one Molmer-Sorensen gate
# and four single-qubit pulses.  The two sign choices (s, v) give four
# versions that all implement the same CNOT.

# %%
cnot = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]])
for s in (1, -1):
    for v in (1, -1):
        u = circuit_unitary(compile_cnot(0, 1, s, v), (0, 1))
        print(f"s={s:+d} v={v:+d}: CNOT up to phase -> {equal_up_to_phase(u, cnot)}")

# %% [markdown]
# SK1 replaces a pulse by three pulses whose systematic errors cancel to
# fourth order.  Against stochastic noise the longer sequence just collects
# more error, so it only helps when noise is mostly coherent.

# %%
target = rotation_unitary(planar(0, PI / 2, 0.0))
for f in (1e-3, 3e-3, 1e-2):
    p = OverrotationParams(1.0, f * PI / 4)
    bare = superop_infidelity(sequence_superop([planar(0, PI / 2, 0.0)], p, (0,)), target)
    sk1 = superop_infidelity(sequence_superop(compile_sk1(PI / 2, 0.0), p, (0,)), target)
    print(f"f={f:.0e}: bare {bare:.2e}  SK1 {sk1:.2e}")

eps1 = epsilon_relation_inverse(infidelity_to_epsilon(1e-3))
print(f"SK1 beats the bare pulse above kappa = {sk1_crossover(eps1):.4f}")
