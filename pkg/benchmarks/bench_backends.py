"""Time the numba kernels against the pure-numpy fallback.

Each backend runs in its own interpreter because SHELLVAR_BACKEND is read at
import time.  Numba timings exclude compilation (one warm-up call first).

    python benchmarks/bench_backends.py [--repeat 3] [--json bench.json]
"""

import argparse
import json
import os
import subprocess
import sys
import time

import numpy as np


def _cases():
    from shellvar import Shell, superball, two_block
    from shellvar.counting import count_dilate, shell_counts
    from shellvar.domain import _volume_cached
    from shellvar.spectral import ft_indicator

    sb, tb = superball(4, 3), two_block()

    def vol():
        _volume_cached.cache_clear()
        from shellvar import volume
        return volume(sb, rtol=1e-6)

    return {
        "count rho=300 (superball)": lambda: count_dilate(sb, 300.0, [0.1, 0.2, 0.3]),
        "count rho=200 (two_block)": lambda: count_dilate(tb, 200.0, [0.1, 0.2, 0.3]),
        "shell counts r=10, 2000 shifts": lambda: shell_counts(sb, Shell(10.0, 0.01), 1, 2000),
        "volume, rtol 1e-6": vol,
        "transform |xi|=3.7, tol 1e-6": lambda: ft_indicator(tb, [1.0, 2.0, 3.0], tol=1e-6),
    }


def child(repeat):
    from shellvar._jit import BACKEND
    out = {}
    for name, fn in _cases().items():
        value = fn()        # warm-up, triggers compilation
        times = []
        for _ in range(repeat):
            t0 = time.perf_counter()
            fn()
            times.append(time.perf_counter() - t0)
        out[name] = {"seconds": min(times), "value": repr(value)}
    print(json.dumps({"backend": BACKEND, "cases": out}))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--json", help="write the timings here")
    ap.add_argument("--child", action="store_true", help=argparse.SUPPRESS)
    args = ap.parse_args()
    if args.child:
        child(args.repeat)
        return
    results = {}
    for backend in ("numba", "numpy"):
        env = dict(os.environ, SHELLVAR_BACKEND=backend)
        res = subprocess.run([sys.executable, __file__, "--child", "--repeat", str(args.repeat)],
                             env=env, capture_output=True, text=True, check=True)
        results[backend] = json.loads(res.stdout.strip().splitlines()[-1])["cases"]
    print(f"{'case':34s} {'numba s':>10s} {'numpy s':>10s} {'speedup':>8s}  same")
    for name in results["numba"]:
        a, b = results["numba"][name], results["numpy"][name]
        speed = b["seconds"] / a["seconds"] if a["seconds"] > 0 else np.inf
        same = a["value"] == b["value"]
        print(f"{name:34s} {a['seconds']:10.4f} {b['seconds']:10.4f} {speed:8.1f}  {same}")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(results, fh, indent=2)


if __name__ == "__main__":
    main()
