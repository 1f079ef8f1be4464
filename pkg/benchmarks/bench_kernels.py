"""Compare the compiled and pure-numpy kernel backends on hot paths.

Runs itself twice as a subprocess -- once with SATSCHED_DISABLE_NUMBA unset
and once with it set -- so each backend initializes from scratch, then prints
a side-by-side table. Workloads are warmed before timing; the reported figure
is the best of ``--repeats`` passes.

Usage: python3 benchmarks/bench_kernels.py [--repeats N]
"""

import argparse
import json
import os
import subprocess
import sys
import time


def _time_workload(fn, repeats):
    fn()  # warm pass, untimed
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def run_worker(repeats):
    import numpy as np

    import satsched as ss
    from satsched import kernels

    kernels.warm_up()
    rng = np.random.default_rng(0)

    n_cdf = 2_000_000
    a_cdf = rng.uniform(5.0, 200.0, n_cdf)
    x_cdf = a_cdf * rng.uniform(0.7, 1.3, n_cdf)

    n_solve = 200_000
    s_solve = rng.uniform(1e-4, 0.5, n_solve)

    n_dig = 2_000_000
    x_dig = rng.uniform(0.5, 500.0, n_dig)

    scenario = ss.load_scenario()
    nano = scenario.platform_named("nano")
    gt = ss.ground_truth_for(scenario, 0)
    legs = ss.comm_legs(scenario, scenario.elevation_deg)
    budget = ss.budget_from_legs(scenario, legs)

    def planner_sweep():
        from satsched.errors import InfeasibleConstraintError
        for n_img in range(1, 9):
            for method in ("gamma", "cantelli"):
                try:
                    ss.select_and_price(method, gt, budget, n_img,
                                        scenario.rho_th, nano)
                except InfeasibleConstraintError:
                    pass

    results = {
        f"gamma cdf kernel ({n_cdf / 1e6:.0f}M pts)":
            _time_workload(lambda: kernels.reg_lower_gamma_arr(a_cdf, x_cdf),
                           repeats),
        f"shape solve ({n_solve / 1e3:.0f}k pts)":
            _time_workload(lambda: kernels.solve_gamma_shape_arr(s_solve),
                           repeats),
        f"digamma ({n_dig / 1e6:.0f}M pts)":
            _time_workload(lambda: kernels.digamma_arr(x_dig), repeats),
        "planner sweep (nano, 16 plans)":
            _time_workload(planner_sweep, repeats),
    }
    print(json.dumps({"backend": kernels.BACKEND, "results": results}))


def run_backend(disable_numba, repeats):
    env = dict(os.environ)
    env.pop("SATSCHED_DISABLE_NUMBA", None)
    if disable_numba:
        env["SATSCHED_DISABLE_NUMBA"] = "1"
    proc = subprocess.run(
        [sys.executable, os.path.abspath(__file__), "--worker",
         "--repeats", str(repeats)],
        capture_output=True, text=True, env=env)
    if proc.returncode != 0:
        sys.stderr.write(proc.stderr)
        raise SystemExit(f"worker failed (disable_numba={disable_numba})")
    return json.loads(proc.stdout.splitlines()[-1])


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=5)
    parser.add_argument("--worker", action="store_true",
                        help=argparse.SUPPRESS)
    args = parser.parse_args()

    if args.worker:
        run_worker(args.repeats)
        return

    fast = run_backend(disable_numba=False, repeats=args.repeats)
    slow = run_backend(disable_numba=True, repeats=args.repeats)
    left, right = fast["backend"], slow["backend"]
    if left == right:
        print(f"note: numba unavailable, both runs used the {left} backend")

    width = max(len(k) for k in fast["results"]) + 2
    print(f"{'workload':<{width}} {left:>12} {right:>12} {'ratio':>8}")
    for name, t_fast in fast["results"].items():
        t_slow = slow["results"][name]
        ratio = t_slow / t_fast if t_fast > 0 else float("inf")
        print(f"{name:<{width}} {t_fast:>10.4f} s {t_slow:>10.4f} s "
              f"{ratio:>7.1f}x")


if __name__ == "__main__":
    main()
