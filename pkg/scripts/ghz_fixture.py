"""One-shot statistics of the GHZ family x|0..0> + sqrt(1-x^2)|1..1>.

Every Z-basis shot is all +1 or all -1, so a single copy reveals one bit and
says nothing about x. The frequency over many copies approaches x^2.
"""

import argparse

import numpy as np

from onecopy.circuit import build_ghz
from onecopy.simulator import sample


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--n", type=int, default=10)
    p.add_argument("--x", type=float, default=0.6)
    p.add_argument("--shots", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--backend", choices=("dense", "mps", "auto"), default="auto")
    args = p.parse_args()

    batch = sample(build_ghz(args.n, args.x), "Z" * args.n, args.seed, args.shots, backend=args.backend)
    v = batch.values
    equal = np.all(v == v[:, :1], axis=1)
    plus = np.mean(v[:, 0] == 1)
    se = np.sqrt(plus * (1 - plus) / args.shots)
    print(f"backend={batch.backend} n={args.n} shots={args.shots}")
    print(f"all-equal outcomes: {equal.mean():.6f}")
    print(f"freq(all +1) = {plus:.4f} +- {se:.4f}   (x^2 = {args.x**2:.4f})")


if __name__ == "__main__":
    main()
