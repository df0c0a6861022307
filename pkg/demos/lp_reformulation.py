"""
Linear programs as feasibility problems
=======================================

Given the optimal value p*, the optimal set of an LP is the polyhedron
cut out by its constraints, its bounds and c^T x <= p*.
"""

from importlib import resources
from pathlib import Path

import numpy as np

from skm.linalg import residual
from skm.problems import lp_to_feasibility, read_mps, stacked_shape
from skm.solvers import HaltingRule, SkmConfig, skm_solve

lp = read_mps(Path(str(resources.files("skm") / "data" / "tiny_lp.mps")))
p = lp_to_feasibility(lp)
print("stacked system", "x".join(map(str, stacked_shape(lp))))
print("residual at the known optimum", residual(p, [1.0, 3.0]).max())

tr = skm_solve(p, SkmConfig(beta=4, lam=1.0, max_iterations=100_000,
                            halting=HaltingRule.residual_norm(1e-8)))
print("SKM point", tr.x, "objective", float(np.dot(lp.c, tr.x)), "p* =", lp.p_star)
