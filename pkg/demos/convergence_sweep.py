"""How fast the discrete game converges to the continuous closed form.

Runs value iteration and fixed-policy evaluation over a range of period
lengths and reports the sup-norm distance to the closed-form value.  Both
errors shrink roughly linearly in the period length.

Run from the repository root:

    python3 demos/convergence_sweep.py [--plot out.png]
"""

from __future__ import annotations

import argparse

import numpy as np

from persuade.model import parse_problem
from persuade.oracle import evaluate_policy_discrete, make_grid, value_iteration
from persuade.solver import solve

RAW = {
    "lambda0": 1.0,
    "lambda1": 1.0,
    "r": 1.0,
    "cuts": [0.0, 0.2, 0.4, 0.6, 0.8, 1.0],
    "levels": [0.0, 0.5, 0.8, 0.95, 1.0],
}

DELTAS = [0.3, 0.1, 0.03, 0.01, 0.003]


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--plot", default=None, help="write a log-log PNG of the errors")
    parser.add_argument("--grid-gap", type=float, default=1e-3)
    args = parser.parse_args()

    problem = parse_problem(RAW)
    solution = solve(problem)
    grid = make_grid(problem, args.grid_gap, extra=solution.cutoffs)
    v_exact = solution.value.value(grid.points)

    vi_errors, pol_errors = [], []
    print(f"{'delta':>8}  {'vi sup error':>14}  {'policy sup error':>17}  {'iterations':>10}")
    for delta in DELTAS:
        dp = value_iteration(problem, delta, grid, tol=1e-6)
        w = evaluate_policy_discrete(problem, solution.policy, delta, grid)
        vi_err = float(np.max(np.abs(dp.values - v_exact)))
        pol_err = float(np.max(np.abs(w.values - v_exact)))
        vi_errors.append(vi_err)
        pol_errors.append(pol_err)
        print(f"{delta:8.3f}  {vi_err:14.6f}  {pol_err:17.6f}  {dp.iterations:10d}")

    rates = np.diff(np.log(vi_errors)) / np.diff(np.log(DELTAS))
    print(f"\nempirical convergence order between consecutive deltas: "
          f"{np.round(rates, 2).tolist()}")

    if args.plot is None:
        return
    try:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        print("matplotlib not available; skipping the plot")
        return

    fig, ax = plt.subplots(figsize=(6, 4.5))
    ax.loglog(DELTAS, vi_errors, "o-", label="value iteration")
    ax.loglog(DELTAS, pol_errors, "s--", label="fixed optimal policy")
    ref = [d * vi_errors[0] / DELTAS[0] for d in DELTAS]
    ax.loglog(DELTAS, ref, ":", color="gray", label="O(delta) reference")
    ax.set_xlabel("period length delta")
    ax.set_ylabel("sup-norm error vs closed form")
    ax.legend()
    fig.tight_layout()
    fig.savefig(args.plot, dpi=150)
    print(f"wrote {args.plot}")


if __name__ == "__main__":
    main()
