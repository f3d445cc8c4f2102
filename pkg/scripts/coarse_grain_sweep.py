"""Sup distance between coarse-grained lattice fields and the effective wave, per seed and epsilon."""
import argparse
import math

from lattice_homog.coarse_grain import coarse_grained_fields
from lattice_homog.coefficients import DistributionSpec, sample_iid
from lattice_homog.homogenization import gaussian_initial_data, initial_state, profiles_from_initial_data
from lattice_homog.integrators import IntegratorSpec, default_dt, integrate


def sup_distance(eps: float, seed: int, T0: float = 1.0) -> float:
    cf = sample_iid(DistributionSpec("uniform", 0.5, 1.5, seed=seed), DistributionSpec.constant(1.0),
                    int(math.ceil(18 / eps)))
    data = gaussian_initial_data(eps)
    t_end = T0 / eps
    n = max(math.ceil(t_end / default_dt(cf)), 2000)
    states = []
    for sign in (1, -1):
        out = integrate(initial_state(data, cf), cf, IntegratorSpec("rk4", t_end / n, sign * t_end, n // 20))
        states += out if sign == 1 else out[1:]
    return coarse_grained_fields(states, cf, eps).sup_distance(profiles_from_initial_data(data, cf))


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, nargs="*", default=[0, 1, 2, 3, 4])
    ap.add_argument("--epsilons", type=float, nargs="*", default=[0.1, 0.05, 0.025])
    args = ap.parse_args()
    print("seed," + ",".join(f"eps={e}" for e in args.epsilons))
    for s in args.seeds:
        print(f"{s}," + ",".join(f"{sup_distance(e, s):.6f}" for e in args.epsilons))
