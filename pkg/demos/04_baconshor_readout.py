# %% [markdown]
# # Bacon-Shor-13 with Molmer-Sorensen gates
#
# The weight-6 stabilizers are sliced along their gauge pairs, so the
# X-stabilizer blocks cancel their coherent errors when the X gauges are +1.
# The Z-stabilizer blocks are different.  Their MS errors act as X on the
# ancilla times Z on a data qubit, the Z gauges are not fixed in |0>_L, and
# so these blocks raise false Z-syndrome flags whether or not they are sliced.
# A lookup decoder answers a false flag with an X correction on row 0, which
# the bare Z_L readout sees as a logical error.
#
# The "ideal" readout adds one noiseless Z-syndrome round before reading Z_L.
# That removes the false-flag miscorrections and exposes what slicing buys.

# %%
import math

from stabslice.codes import get_code
from stabslice.evaluator import exact_logical_error, improvement_ratio
from stabslice.noise import OverrotationParams
from stabslice.slicer import SlicingMode, build_extraction_iontrap

code = get_code("baconshor13")
params = OverrotationParams.linked_from_eps2(math.asin(math.sqrt(5e-4)), 1.0)
print(f"eps1={params.eps1:.5f} eps2={params.eps2:.5f}")

for readout in ("bare", "ideal"):
    p = {
        mode: exact_logical_error(build_extraction_iontrap(code, mode), params, code, readout=readout).p_L
        for mode in (SlicingMode.SLICED, SlicingMode.UNSLICED)
    }
    ratio = improvement_ratio(p[SlicingMode.UNSLICED], p[SlicingMode.SLICED])
    print(f"{readout:5s}: sliced {p[SlicingMode.SLICED]:.3e}  unsliced {p[SlicingMode.UNSLICED]:.3e}  ratio {ratio:.1f}")

# %% [markdown]
# Without single-qubit overrotations the sliced circuit would be perfect
# under the ideal readout; with them it is not.

# %%
clean1q = OverrotationParams(1.0, 0.0, params.eps2)
p = exact_logical_error(build_extraction_iontrap(code, SlicingMode.SLICED), clean1q, code, readout="ideal").p_L
print(f"eps1 = 0, ideal readout: sliced p_L = {p:.2e}")
