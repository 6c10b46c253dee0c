"""
Queue upstream of a lane drop
=============================

Three lanes merge into two at x = 0. A slower road downstream holds back
more vehicles upstream of the junction.
"""

#%%
import math

from multilane import run
from multilane.scenario_io import load_bundled


def left_mass(res):
    g = res.grid
    active = sorted(res.scenario.topology.active_left)
    return g.dx * math.fsum(math.fsum(res.final[j - 1, : g.n_left].tolist()) for j in active)


#%%
for name in ("s32_3to2", "s32_3to2_vr2"):
    res = run(load_bundled(name))
    v_r = res.scenario.profiles.right[0].law.v_max
    print(f"V_r = {v_r:g}: vehicles in x < 0 at t = 1: {left_mass(res):.4f}")

#%%
# Separated lanes on the left (first lane walled off) at t = 0.5, for three exit speeds.
for name in ("s33_3to2_cut", "s33_3to2_cut_vr15", "s33_3to2_cut_vr2"):
    res = run(load_bundled(name))
    print(f"{name}: vehicles in x < 0 at t = {res.scenario.T:g}: {left_mass(res):.4f}")
