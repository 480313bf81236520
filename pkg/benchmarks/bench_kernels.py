"""Compare the numba and numpy kernel backends.

    python benchmarks/bench_kernels.py [--points N] [--repeat R]

Each kernel is called once to trigger compilation, then timed with timeit
(best of R).  Results are checked for agreement before timing.
"""
import argparse
import timeit

import numpy as np

from ponderomotive import _kernels
from ponderomotive.core import K_B


def cases(n):
    omega = 2 * np.pi * np.linspace(2.4e5, 2.6e5, n)
    noise = dict(omega=omega, m=1.1e-7, wm=2 * np.pi * 249300.0, q=5500.0, s_th=7.3e-29, s_ba=6e-28,
                 kappa=7.7e6, hbar=1.0546e-34, amp=1.0, s_xf=0.0, s_wb=0.0, eps=0.5,
                 a_inj=np.full(n, 3.0))
    logy = np.log(_kernels.numpy_kernels.thermal_displacement(omega, 1.1e-7, 2 * np.pi * 249300.0,
                                                              5500.0, 300 * K_B) + 1e-34)
    fit = (omega, logy, np.ones(n), 249300.0, 45.3, 0.1, np.log(5400.0), np.log(1.0e-7),
           np.log(1e-34), 300 * K_B)
    chi = _kernels.numpy_kernels.susceptibility(omega, 1.1e-7, 2 * np.pi * 249300.0, 5500.0)
    driven = (omega, np.log(np.abs(chi)), np.angle(chi), np.ones(n), True, 249300.0, 45.3,
              0.1, np.log(5400.0), np.log(1.0e-7))
    return {
        "susceptibility": ("susceptibility", (omega, 1.1e-7, 2 * np.pi * 249300.0, 5500.0), {}),
        "quadrature_moments": ("quadrature_moments", (), noise),
        "source_contributions": ("source_contributions", (), dict(noise, eps_d=0.9, phi=0.77)),
        "thermal_fit_eval": ("thermal_fit_eval", fit, {}),
        "driven_fit_eval": ("driven_fit_eval", driven, {}),
    }


def _flat(x):
    if isinstance(x, tuple):
        return np.concatenate([np.ravel(v).astype(complex) for v in x])
    return np.ravel(x).astype(complex)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--points", type=int, default=100_000)
    ap.add_argument("--repeat", type=int, default=7)
    args = ap.parse_args(argv)
    nb, npk = _kernels.numba_kernels, _kernels.numpy_kernels
    if nb is None:
        raise SystemExit("numba is not installed")
    print(f"{'kernel':<22}{'numpy [ms]':>12}{'numba [ms]':>12}{'speedup':>10}")
    for label, (name, pos, kw) in cases(args.points).items():
        f_np, f_nb = getattr(npk, name), getattr(nb, name)
        a, b = _flat(f_np(*pos, **kw)), _flat(f_nb(*pos, **kw))
        if not np.allclose(a, b, rtol=1e-10, atol=1e-12 * np.max(np.abs(a))):
            raise SystemExit(f"{label}: backends disagree")
        t_np = min(timeit.repeat(lambda: f_np(*pos, **kw), number=5, repeat=args.repeat)) / 5
        t_nb = min(timeit.repeat(lambda: f_nb(*pos, **kw), number=5, repeat=args.repeat)) / 5
        print(f"{label:<22}{t_np * 1e3:>12.3f}{t_nb * 1e3:>12.3f}{t_np / t_nb:>10.2f}")


if __name__ == "__main__":
    main()
