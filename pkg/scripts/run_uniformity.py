"""Total variation between chain output and the uniform law on enumerated graphs."""
import argparse

from biregular_mp.graphs import validate_config
from biregular_mp.switching import uniformity_report


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("config", nargs=4, type=int, metavar=("M", "N", "d_b", "d_w"))
    ap.add_argument("--steps", type=int, default=10_000)
    ap.add_argument("--samples", type=int, default=10_000)
    ap.add_argument("--kernel", choices=("mixed", "switching"), default="mixed")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rep = uniformity_report(validate_config(*args.config), args.steps, args.samples, args.seed, args.kernel)
    print(f"|Omega| = {rep.oracle_size}")
    print(f"TV to uniform = {rep.tv_distance:.4f}")
    print(f"(p, q) TV vs edges avoiding v = {rep.pq_tv_avoiding:.4f}, vs all edges = {rep.pq_tv_all_edges:.4f}")


if __name__ == "__main__":
    main()
