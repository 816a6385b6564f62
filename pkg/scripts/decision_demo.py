"""Classical evaluation of a shallow circuit's output bit from its lightcone.

The work per input is the number of gates in the output qubit's backward
cone, which stays fixed as the register grows.
"""

import argparse
import time

import numpy as np

from onecopy.analysis import decide
from onecopy.circuit import build_random_brickwork


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--ns", type=lambda s: [int(x) for x in s.split(",")], default=[16, 256, 4096, 65536])
    p.add_argument("--depth", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args()

    rng = np.random.default_rng(args.seed)
    print("n,cone_size,gates_applied,p0,verdict,seconds")
    for n in args.ns:
        c = build_random_brickwork(n, args.depth, args.seed)
        bits = rng.integers(0, 2, n).tolist()
        t0 = time.perf_counter()
        d = decide(c, bits)
        dt = time.perf_counter() - t0
        print(f"{n},{d.cone_size},{d.gates_applied},{d.p0:.6f},{d.verdict},{dt:.4f}")


if __name__ == "__main__":
    main()
