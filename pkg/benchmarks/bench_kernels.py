"""Time the compiled scan against the numpy race on the simulator's hot paths.

Each path runs in its own interpreter because the switch is read at import:

    python benchmarks/bench_kernels.py            # both paths, side by side
    python benchmarks/bench_kernels.py --child    # current path only (internal)
"""
import argparse
import json
import os
import subprocess
import sys
import time

CASES = [  # (label, m, lambda, L')
    ("optimize lam=1", 1000, 1.0, 0.25),
    ("optimize lam=1", 4000, 1.0, 0.25),
    ("optimize lam=1", 16000, 1.0, 0.25),
    ("optimize lam=2", 4000, 2.0, 0.08),
    ("optimize lam=0", 4000, 0.0, 0.25),
]


def child(reps):
    import numpy as np
    from mdltemper import _jit, simlab

    rng = np.random.default_rng(0)
    simlab.optimize_bad_stream(100, 1.0, 0.25, rng)  # compile / warm caches
    simlab.sample_first_occurrences(2, 0.5, 1.585, rng)
    out = []
    for label, m, lam, lp in CASES:
        simlab.optimize_bad_stream(m, lam, lp, rng)
        t = time.perf_counter()
        for _ in range(reps):
            simlab.optimize_bad_stream(m, lam, lp, rng)
        out.append((label, m, (time.perf_counter() - t) / reps))
    t = time.perf_counter()
    for _ in range(reps * 20):
        simlab.sample_first_occurrences(2, 0.5, 1.585, rng)
    out.append(("first occurrences", 2, (time.perf_counter() - t) / (reps * 20)))
    json.dump({"jit": _jit.JIT_ENABLED, "rows": out}, sys.stdout)


def run(disable, reps):
    env = dict(os.environ, MDLTEMPER_DISABLE_JIT="1" if disable else "0")
    res = subprocess.run([sys.executable, __file__, "--child", "--reps", str(reps)],
                         env=env, capture_output=True, text=True, check=True)
    return json.loads(res.stdout)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--child", action="store_true")
    ap.add_argument("--reps", type=int, default=50)
    args = ap.parse_args()
    if args.child:
        return child(args.reps)
    jit, numpy_ = run(False, args.reps), run(True, args.reps)
    if not jit["jit"]:
        print("numba not importable: both columns use the numpy path")
    print(f"{'case':<20}{'m':>7}{'numba ms':>11}{'numpy ms':>11}{'ratio':>8}")
    for (label, m, a), (_, _, b) in zip(jit["rows"], numpy_["rows"]):
        print(f"{label:<20}{m:>7}{a * 1e3:>11.3f}{b * 1e3:>11.3f}{b / a:>8.2f}")


if __name__ == "__main__":
    main()
