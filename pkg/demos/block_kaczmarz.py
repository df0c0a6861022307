"""
Block Kaczmarz against SKM on equality systems
==============================================

Each equation is written as two inequalities for SKM. Block Kaczmarz wins
on well-conditioned Gaussian rows; on nearly identical rows the block
solves buy nothing and the cheaper SKM steps win.
"""

from skm.harness import compare_block_kaczmarz
from skm.problems import gen_correlated_equalities, gen_gaussian_equalities
from skm.solvers import BlockConfig, SkmConfig

skm_cfgs = [SkmConfig(beta=beta, stride=stride, max_iterations=10**6)
            for beta in (1, 10, 100, 4000) for stride in ("auto", 1)]
bk_cfgs = [BlockConfig(block_size=size, max_iterations=10**5) for size in (1, 10, 50, 100, 200)]

families = {
    "gaussian": gen_gaussian_equalities(2000, 50, 0),
    "correlated, width 1e-16": gen_correlated_equalities(2000, 50, 0.9, 0.9 + 1e-16, 0),
}
for label, (A, b, _) in families.items():
    cmp = compare_block_kaczmarz(A, b, skm_cfgs, bk_cfgs, trials=10)
    print(label)
    for (method, param, stride, lam), t in sorted(cmp.medians().items(), key=lambda kv: kv[1]):
        print(f"  {method:3s} {param:5d} stride {str(stride):4s}  {1e3 * t:8.3f} ms")
    print(f"  best SKM {1e3 * cmp.best('SKM'):.3f} ms, best BK {1e3 * cmp.best('BK'):.3f} ms")
