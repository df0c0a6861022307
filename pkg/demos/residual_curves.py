"""
Residual decay per iteration and per second
===========================================

Larger samples buy more progress per iteration but each iteration costs
more. Plotting against both axes shows the trade-off.
"""

from pathlib import Path

import numpy as np

from skm.harness import plot_curves, residual_curves
from skm.problems import gen_gaussian
from skm.solvers import HaltingRule, SkmConfig

out = Path(__file__).with_name("output")
out.mkdir(exist_ok=True)

p, x_star = gen_gaussian(2000, 50, seed=1)
cap = HaltingRule.iteration_cap()
configs = [SkmConfig(beta=beta, lam=1.6, max_iterations=3000, stride=50, halting=cap,
                     track_satisfied=True)
           for beta in (1, 20, 200, 2000)]
curves = residual_curves(p, configs, witness=x_star)

for c in curves:
    # the distance to any feasible point never grows
    assert np.all(np.diff(c.distance_to_witness) <= 1e-12)
    print(f"beta {c.beta:5d}  residual after {c.iterations[-1]} iterations "
          f"{c.residual_norms[-1]:.2e}  satisfied {c.satisfied_fraction[-1]:.3f}"
          f"  elapsed {1e3 * c.elapsed[-1]:.1f} ms")

plot_curves(curves, out / "residual_vs_iterations.svg", x="iterations")
plot_curves(curves, out / "residual_vs_time.svg", x="time")
