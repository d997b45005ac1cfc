"""Bulk eigenvalue deviation from classical locations as d_b varies."""
import argparse
import statistics

from biregular_mp import experiments as ex
from biregular_mp.graphs import config_for


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--N", type=int, default=1000)
    ap.add_argument("--degrees", type=int, nargs="+", default=[10, 20, 30])
    ap.add_argument("--gamma", type=float, default=0.5)
    ap.add_argument("--kappa", type=float, default=0.1)
    ap.add_argument("--samples", type=int, default=4)
    ap.add_argument("--seed", type=int, default=20261014)
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()

    for d_b in args.degrees:
        spec = ex.ExperimentSpec(config_for(args.N, d_b, args.gamma), samples=args.samples,
                                 seed=args.seed, name="rigidity")
        devs = [r.value for r in ex.rigidity_run(spec, args.kappa, args.workers).records]
        print(f"d_b={d_b:<3} median={statistics.median(devs):.4f} max={max(devs):.4f} "
              f"all={[round(d, 4) for d in devs]}")


if __name__ == "__main__":
    main()
