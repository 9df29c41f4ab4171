"""Perturb one coefficient of the connection and see which checks notice."""

from qsnm import QSManifold
from qsnm.manifold import RandomManifoldConfig, random_manifold
from qsnm.verify import run_suite

M = QSManifold.from_spec(random_manifold(RandomManifoldConfig(seed=7, dimension=3)))

for idx, amount in [((0, 0, 1), 1e-3), ((2, 1, 1), -1e-6), ((1, 2, 0), 5e-5)]:
    broken = M.with_connection(M.L1.perturbed(idx, amount))
    failed = [r.name for r in run_suite(broken) if not r.passed]
    print(f"L1{idx} += {amount:g}: {len(failed)} checks fail, e.g. {', '.join(failed[:4])}")
