"""Relative gap between finite-n Laplace transforms and their limits, across n.

Two walks at lambda = 0, t = 1, theta = 1: the i.i.d. size-biased walk against
the stable limit, and the walk of a full exploration against the depleted limit.

    python3 scripts/finite_size_scan.py [--n 10000,100000,1000000] [--reps 2000]
"""
import argparse
import math

import numpy as np

from supergw import continuum
from supergw.configmodel import DegreeModel, explore, sample_degrees
from supergw.harness import ScalingSpec, empirical_laplace, walk_endpoints
from supergw.laws import PowerLaw
from supergw.rng import stream


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", default="10000,100000,1000000")
    ap.add_argument("--reps", type=int, default=2000)
    ap.add_argument("--lam", type=float, default=0.0)
    ap.add_argument("--theta", type=float, default=1.0)
    ap.add_argument("--seed", type=int, default=777)
    args = ap.parse_args()
    th = args.theta
    print("walk,n,replicas,empirical,stderr,reference,relative_gap,z")
    for n in (int(float(x)) for x in args.n.split(",")):
        model = DegreeModel(PowerLaw(1.5, 2), args.lam, n)
        spec = ScalingSpec.stable(n, model.alpha)
        m = spec.index(1.0)
        ref = model.stable_ref()

        ends = walk_endpoints(model, m, args.reps, args.seed, f"scan{n}") * spec.space_scale
        est, se = empirical_laplace(ends, th)
        target = math.exp(continuum.laplace_exponent(ref, th))
        print(f"iid,{n},{args.reps},{est:.5f},{se:.5f},{target:.5f},{est / target - 1:+.4f},{(est - target) / se:+.2f}",
              flush=True)

        reps = max(200, args.reps // max(1, n // 100_000))
        vals = np.empty(reps)
        for r in range(reps):
            deg = sample_degrees(model, stream(args.seed, "scan", n, r, "deg"))
            vals[r] = explore(deg, stream(args.seed, "scan", n, r, "pair")).path[m]
        est, se = empirical_laplace(vals * spec.space_scale, th)
        target = continuum.k_tilde_laplace(ref, th, 1.0)
        print(f"exploration,{n},{reps},{est:.5f},{se:.5f},{target:.5f},{est / target - 1:+.4f},"
              f"{(est - target) / se:+.2f}", flush=True)


if __name__ == "__main__":
    main()
