"""Maximum of |m_lin| over the energy regimes for a few aspect ratios."""
import argparse

from biregular_mp.mp_law import boundedness_scan


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--gammas", type=float, nargs="+", default=[1.0, 0.5, 0.25])
    ap.add_argument("--Lambda", type=float, default=4.0)
    args = ap.parse_args()
    for g in args.gammas:
        scan = boundedness_scan(g, Lambda=args.Lambda)
        parts = "  ".join(f"{k}={v:.8f}" for k, v in scan.maxima.items())
        print(f"gamma={g:<5} eps={scan.epsilon:.2e} points={scan.n_points}  {parts}")


if __name__ == "__main__":
    main()
