"""Time the numba kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat 5] [--I 400] [--particles 200000]

Each kernel is called on identical inputs through both backend modules. The
first numba call (compilation, or cache load) is excluded.
"""
import argparse
import time

import numpy as np

from twostream import ap_diff, ap_hyp
from twostream.kernels import _numba as nbk
from twostream.kernels import _numpy as npk
from twostream.model import ModelParams


def best_of(fn, repeat):
    fn()
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def cases(I, particles):
    rng = np.random.default_rng(0)
    cfg = ap_diff.make_config(ModelParams(lambda0=100.0), I)
    g = cfg.grid
    qp, qm = rng.random(g.shape), rng.random(g.shape)
    out_p, out_m = np.empty_like(qp), np.empty_like(qm)
    a = rng.random(g.shape[1] + 1) * 0.1
    r = g.dt / (cfg.params.epsilon * g.dy)
    c = cfg.relaxation_ratio
    hcfg = ap_hyp.make_config(ModelParams(lambda0=10.0, scaling="hyperbolic"), I)
    w = hcfg.courant * hcfg.weights
    hp, hm = rng.random(hcfg.grid.shape), rng.random(hcfg.grid.shape)
    hop, hom = np.empty_like(hp), np.empty_like(hm)
    x0 = rng.random(particles)
    v0 = np.where(rng.random(particles) < 0.5, 1.0, -1.0)
    y0 = rng.uniform(-0.5, 0.5, particles)

    def mc(mod):
        x, v, y = x0.copy(), v0.copy(), y0.copy()
        mod.mc_advance(x, v, y, 20, 0, 1e-4, 1.0, 1.0, 10.0, 0.5, np.uint64(1))

    return {
        f"sink_sweep {g.shape}": lambda mod: mod.sink_sweep(qp, g.y, g.K, r, out_p),
        f"coupled_implicit {g.shape}": lambda mod: mod.coupled_implicit(qp, qm, a[:-1], a[1:], 1, c, out_p, out_m),
        f"coupled_explicit {hcfg.grid.shape}": lambda mod: mod.coupled_explicit(hp, hm, w, w, 1.0, hop, hom),
        f"mc_advance {particles} x 20 steps": mc,
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--I", type=int, default=400)
    ap.add_argument("--particles", type=int, default=200_000)
    args = ap.parse_args()
    print(f"{'kernel':40s} {'numpy [ms]':>11s} {'numba [ms]':>11s} {'speedup':>8s}")
    for name, run in cases(args.I, args.particles).items():
        t_np = best_of(lambda: run(npk), args.repeat)
        t_nb = best_of(lambda: run(nbk), args.repeat)
        print(f"{name:40s} {1e3 * t_np:11.2f} {1e3 * t_nb:11.2f} {t_np / t_nb:8.1f}")


if __name__ == "__main__":
    main()
