"""
Choosing beta from the gain model
=================================

The gain of a sample size weighs the expected progress of one iteration
against its cost. With more constraints already satisfied, small samples
mostly draw satisfied rows and the best beta grows.
"""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from skm.theory import GainModel, gain_curve, optimal_beta

out = Path(__file__).with_name("output")
out.mkdir(exist_ok=True)

fig, ax = plt.subplots()
for s in (0, 50, 100, 150, 199):
    model = GainModel(200, 10, s, c=1.0, C=100.0)
    g = np.asarray(gain_curve(model))
    ax.semilogx(np.arange(1, 201), g, label=f"s = {s}")
    print(f"s = {s:3d}  optimal beta = {optimal_beta(model)}")
ax.set_xlabel("beta")
ax.set_ylabel("gain")
ax.legend()
fig.savefig(out / "gain.svg")
