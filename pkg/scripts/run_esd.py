"""KS distance and binned masses of the empirical spectrum against MP."""
import argparse

from biregular_mp import experiments as ex
from biregular_mp.graphs import config_for


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--N", type=int, default=1000)
    ap.add_argument("--d_b", type=int, default=30)
    ap.add_argument("--gamma", type=float, default=0.5)
    ap.add_argument("--samples", type=int, default=4)
    ap.add_argument("--bins", type=int, default=10)
    ap.add_argument("--seed", type=int, default=20261014)
    args = ap.parse_args()

    spec = ex.ExperimentSpec(config_for(args.N, args.d_b, args.gamma), samples=args.samples,
                             seed=args.seed, name="esd")
    res = ex.esd_compare_run(spec, ex.default_intervals(spec.gamma, args.bins))
    for r in res.select("ks_distance"):
        print(f"sample {r.sample}: KS = {r.value:.4f}")
    print("interval            empirical  MP")
    for r in res.records:
        if r.sample == 0 and r.quantity.startswith("mass"):
            print(f"{r.quantity[4:]:<19} {r.value:<10.4f} {r.bound:.4f}")


if __name__ == "__main__":
    main()
