"""Run the full identity registry on random manifolds of every supported dimension."""

from qsnm import QSManifold
from qsnm.manifold import RandomManifoldConfig, random_manifold
from qsnm.verify import get_check, run_suite

for dim in (2, 3, 4):
    for seed in range(3):
        spec = random_manifold(RandomManifoldConfig(seed=seed, dimension=dim))
        reports = run_suite(QSManifold.from_spec(spec))
        # the co-vanishing check reports residuals that are allowed to be large together
        equalities = [r for r in reports if get_check(r.name).kind == "equality"]
        worst = max(equalities, key=lambda r: r.max_rel_err)
        passed = sum(r.passed for r in reports)
        print(f"dim={dim} seed={seed} spec={spec.spec_hash}  {passed}/{len(reports)} passed"
              f"  worst={worst.name} ({worst.max_rel_err:.2e})")
