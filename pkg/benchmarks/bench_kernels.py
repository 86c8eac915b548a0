"""Time the numba kernels against the numpy fallback on identical inputs.

    python3 benchmarks/bench_kernels.py [--repeat 3] [--json out.json]

Each case runs once per backend to warm up (numba compiles on first call),
then ``--repeat`` times; the best wall time is reported together with the
largest difference between the two backends' outputs.
"""

import argparse
import json
import time

import numpy as np

from floatdual import _backend, kernels
from floatdual.bodies import BpBall, Ellipsoid
from floatdual.directions import circle_angles
from floatdual.invariants import duality_gap


def _cases():
    b4 = BpBall(2, 4.0)
    b15 = BpBall(2, 1.5)
    ell = Ellipsoid((2.0, 1.0))
    th = circle_angles(4096, "quadrant")
    rng = np.random.Generator(np.random.Philox(0x5EED))
    pts = rng.uniform(-1.5, 1.5, size=(10 ** 6, 2))
    apex = np.array([1.05, 0.4])

    def caps(body, depth):
        kind, prm = body.kernel()
        return lambda: kernels.cap_eval(kind, prm, body.volume(), th, depth, 1e-12)[:, 0]

    def heights(body, delta):
        kind, prm = body.kernel()
        return lambda: kernels.cap_height(kind, prm, body.volume(), th, delta * body.volume(),
                                          1e-12, 1e-12)[:, 0]

    def illum(body, delta):
        kind, prm = body.kernel()
        return lambda: kernels.illum_t(kind, prm, body.volume(), th, delta * body.volume(),
                                       1e-12, 1e-12)[:, 0]

    def floating(body, delta):
        kind, prm = body.kernel()
        return lambda: kernels.floating_radial(kind, prm, body.volume(), th, delta * body.volume(),
                                               1e-12, 1e-12)[:, 0]

    def hull(body):
        kind, prm = body.gauge_kernel()
        return lambda: kernels.hull_mask(kind, prm, apex, pts, body.rmax).astype(float)

    def gap(body, delta):
        return lambda: np.array([duality_gap(body, delta).d])

    return [
        ("cap_eval B_4 (1025 dirs)", caps(b4, 1e-3)),
        ("cap_height B_4 delta=1e-4", heights(b4, 1e-4)),
        ("cap_height ellipse delta=1e-4", heights(ell, 1e-4)),
        ("illum_t B_1.5 delta=1e-4", illum(b15, 1e-4)),
        ("floating_radial B_4 delta=1e-3", floating(b4, 1e-3)),
        ("hull_mask B_4 (1e6 points)", hull(b4)),
        ("duality_gap B_4 delta=1e-3", gap(b4, 1e-3)),
    ]


def _time(fn, repeat):
    fn()
    best = float("inf")
    out = None
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t)
    return best, np.asarray(out)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--json", help="also write the results here")
    args = ap.parse_args(argv)
    if not _backend.HAVE_NUMBA:
        raise SystemExit("numba is not importable; nothing to compare")
    rows = []
    print(f"{'case':36s} {'numba [s]':>10s} {'numpy [s]':>10s} {'speedup':>8s} {'max diff':>10s}")
    prev = _backend.backend()
    try:
        for name, fn in _cases():
            _backend.set_backend("numba")
            tn, yn = _time(fn, args.repeat)
            _backend.set_backend("numpy")
            tp, yp = _time(fn, args.repeat)
            diff = float(np.max(np.abs(yn - yp)))
            rows.append({"case": name, "numba_s": tn, "numpy_s": tp, "speedup": tp / tn, "max_diff": diff})
            print(f"{name:36s} {tn:10.4f} {tp:10.4f} {tp / tn:8.1f} {diff:10.2e}")
    finally:
        _backend.set_backend(prev)
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rows, fh, indent=2)


if __name__ == "__main__":
    main()
