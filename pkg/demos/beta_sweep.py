"""
Time to threshold as a function of the sample size
===================================================

Sweep beta on a 2000 x 50 Gaussian system and look for the sweet spot
between randomized Kaczmarz (beta = 1) and Motzkin's method (beta = m).
"""

from pathlib import Path

from skm.harness import SweepSpec, emit_csv, emit_plot, run_sweep
from skm.problems import gen_gaussian

out = Path(__file__).with_name("output")
out.mkdir(exist_ok=True)

p, x_star = gen_gaussian(2000, 50, seed=5)
betas = (1, 2, 5, 10, 20, 50, 100, 200, 500, 1000, 2000)

# stride "auto" checks the residual every ceil(m / beta) iterations, so the
# O(mn) check costs about as much as the iterations between two checks
spec = SweepSpec(betas, (1.0, 1.6), trials=10, stride="auto")
result = run_sweep(p, spec)

for lam in spec.lambda_grid:
    print(f"lambda = {lam}")
    for beta in betas:
        agg = result.aggregates[(beta, lam)]
        print(f"  beta {beta:5d}  median {1e3 * agg['wall_seconds']['median']:8.3f} ms"
              f"  iterations {agg['iterations']['median']:9.0f}")

emit_csv(result, out / "beta_sweep.csv")
emit_plot(result, out / "beta_sweep.svg")
