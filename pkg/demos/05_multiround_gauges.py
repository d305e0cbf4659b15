# %% [markdown]
# # Gauge drift over several rounds
#
# Bacon-Shor slicing relies on the X gauges being +1.  Over many rounds,
# errors and corrections flip gauges, and a fixed (static) slicing loses its
# cancellation.  Four strategies are compared:
#
# * static: the same sliced circuit every round
# * adaptive: MS directions follow the tracked gauge frame
# * perfect-gauge: the frame is reset to +1 before every round
# * worst-gauge: directions chosen against the frame
#
# Shot counts here are small so the script runs in about a minute; the
# acceptance suite uses 10^4 shots.

# %%
import math

import numpy as np

from stabslice.codes import get_code
from stabslice.evaluator import TrajectoryConfig, TrajectoryMode, trajectory_sample
from stabslice.noise import OverrotationParams
from stabslice.slicer import build_extraction_iontrap

code = get_code("baconshor13")
params = OverrotationParams.linked_from_eps2(math.asin(math.sqrt(5e-4)), 1.0)


def family(mode, frame):
    return build_extraction_iontrap(code, mode, frame)


for mode in TrajectoryMode:
    cfg = TrajectoryConfig(mode, rounds=6, shots=1000, seed=1, readout="ideal")
    res = trajectory_sample(cfg, family, params, code)
    curve = np.array2string(res.p_round * 1e4, precision=2)
    print(f"{mode.value:14s} p per round x1e4 {curve}  slope {res.slope:.1e}")
