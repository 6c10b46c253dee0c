"""
Road widening from two to three lanes
=====================================

Two lanes arrive from the left at free speed 1.5 and continue on three
lanes with free speed 1 (or 2). The new third lane starts empty near the
junction and fills through lane changes.
"""

#%%
# Build the bundled scenario and run it to t = 1.
import numpy as np

from multilane import diagnostics as dg
from multilane import run
from multilane.scenario_io import load_bundled

results = {}
for name in ("s31_2to3", "s31_2to3_vr2"):
    results[name] = run(load_bundled(name))

#%%
# Density profiles near the junction at the final time.
res = results["s31_2to3"]
x = res.grid.centers
near = np.abs(x) <= 1.0
for j, row in enumerate(res.final, start=1):
    print(f"lane {j}:", np.round(row[near][::40], 3))

#%%
# The discrete estimates hold on both runs.
for name, r in results.items():
    checks = [dg.bounds_check(r), dg.conservation_check(r), dg.fictive_check(r),
              dg.time_continuity_check(r)]
    print(name, "all pass" if all(c.passed for c in checks) else [c.name for c in checks if not c.passed])

#%%
# Plot the three lanes for both exit speeds (needs matplotlib).
try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
except ImportError:
    plt = None

if plt is not None:
    fig, axes = plt.subplots(3, 1, sharex=True, figsize=(6, 7))
    for name, r in results.items():
        for j, ax in enumerate(axes):
            ax.plot(x, r.final[j], label=name)
            ax.set_ylabel(f"lane {j + 1}")
    axes[0].legend()
    axes[-1].set_xlabel("x")
    fig.savefig("two_to_three_lanes.png", dpi=120)
