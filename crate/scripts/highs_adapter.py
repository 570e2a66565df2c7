#!/usr/bin/env python3
"""External solver wrapper: solve an MPS file with HiGHS and write a solution file.

Usage: highs_adapter.py [--gap G] [--time-limit S] [--threads N] [--log-file F]
                        [--lp-solver choose|simplex|ipm] [--warm-start none|two-stage]
                        model.mps solution.sol

The solution file holds `status <word>`, `objective <value>` and one
`<name> <value>` line per column, as read by `campus-ems --solver external:...`.

`--warm-start two-stage` seeds the search with an incumbent built scenario by
scenario. Rows and columns whose names end in `_s<k>` belong to scenario k and
every other column is first stage. The first stage is held at its bound
closest to zero, each scenario block is solved on its own, and the assembled
point is handed to HiGHS before the full solve. This needs complete recourse;
if any block fails the full solve runs without a start.
"""

import argparse
import re
import sys
import time

import highspy
import numpy as np
import scipy.sparse as sp

SCENARIO = re.compile(r"_s(\d+)$")


def scenario_of(names):
    out = np.full(len(names), -1, dtype=np.int64)
    for i, n in enumerate(names):
        m = SCENARIO.search(n)
        if m:
            out[i] = int(m.group(1))
    return out


def sub_lp(lp, arrays, a_rows, cols, shift, rows):
    cost, lower, upper, row_lower, row_upper, integrality = arrays
    sub = highspy.HighsLp()
    a = a_rows[:, cols].tocsc()
    sub.num_col_ = len(cols)
    sub.num_row_ = len(rows)
    sub.sense_ = lp.sense_
    sub.offset_ = 0.0
    sub.col_cost_ = cost[cols]
    sub.col_lower_ = lower[cols]
    sub.col_upper_ = upper[cols]
    sub.row_lower_ = row_lower[rows] - shift
    sub.row_upper_ = row_upper[rows] - shift
    sub.a_matrix_.format_ = highspy.MatrixFormat.kColwise
    sub.a_matrix_.num_col_ = len(cols)
    sub.a_matrix_.num_row_ = len(rows)
    sub.a_matrix_.start_ = a.indptr
    sub.a_matrix_.index_ = a.indices
    sub.a_matrix_.value_ = a.data
    if integrality:
        sub.integrality_ = [integrality[j] for j in cols]
    return sub


def two_stage_start(lp, gap, deadline):
    """Feasible point from independent scenario solves, or None."""
    cols_s = scenario_of(list(lp.col_names_))
    rows_s = scenario_of(list(lp.row_names_))
    if (rows_s < 0).any() or (cols_s < 0).all():
        return None
    m = lp.a_matrix_
    a = sp.csc_matrix((m.value_, m.index_, m.start_), shape=(lp.num_row_, lp.num_col_)).tocsr()
    lower = np.asarray(lp.col_lower_)
    upper = np.asarray(lp.col_upper_)
    arrays = (
        np.asarray(lp.col_cost_),
        lower,
        upper,
        np.asarray(lp.row_lower_),
        np.asarray(lp.row_upper_),
        list(lp.integrality_),
    )
    first = np.flatnonzero(cols_s < 0)
    x = np.zeros(lp.num_col_)
    x[first] = np.clip(0.0, lower[first], upper[first])
    scenarios = np.unique(cols_s[cols_s >= 0])
    for k, s in enumerate(scenarios):
        rows = np.flatnonzero(rows_s == s)
        cols = np.flatnonzero(cols_s == s)
        a_rows = a[rows]
        outside = np.setdiff1d(a_rows.indices, np.concatenate([cols, first]))
        if outside.size:
            return None
        shift = a_rows[:, first] @ x[first]
        h = highspy.Highs()
        h.setOptionValue("output_flag", False)
        h.setOptionValue("mip_rel_gap", gap)
        left = deadline - time.monotonic()
        if left <= 0:
            return None
        h.setOptionValue("time_limit", left / (len(scenarios) - k))
        h.passModel(sub_lp(lp, arrays, a_rows, cols, shift, rows))
        h.run()
        if h.getInfo().primal_solution_status != 2:
            return None
        x[cols] = h.getSolution().col_value
    return x


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("--gap", type=float, default=1e-4)
    ap.add_argument("--time-limit", type=float, default=None)
    ap.add_argument("--threads", type=int, default=None)
    ap.add_argument("--log-file", default=None)
    ap.add_argument("--lp-solver", choices=["choose", "simplex", "ipm"], default="choose")
    ap.add_argument("--warm-start", choices=["none", "two-stage"], default="none")
    ap.add_argument("model")
    ap.add_argument("solution")
    args = ap.parse_args()
    start = time.monotonic()

    h = highspy.Highs()
    if args.log_file is None:
        h.setOptionValue("output_flag", False)
    else:
        h.setOptionValue("log_to_console", False)
        h.setOptionValue("log_file", args.log_file)
    h.setOptionValue("mip_rel_gap", args.gap)
    h.setOptionValue("mip_lp_solver", args.lp_solver)
    if args.threads is not None:
        h.setOptionValue("threads", args.threads)
    if h.readModel(args.model) != highspy.HighsStatus.kOk:
        print(f"cannot read {args.model}", file=sys.stderr)
        return 1

    if args.warm_start == "two-stage":
        budget = args.time_limit if args.time_limit is not None else float("inf")
        x = two_stage_start(h.getLp(), max(args.gap, 1e-3), start + budget / 2)
        if x is None:
            print("two-stage start unavailable, solving without it", file=sys.stderr)
        else:
            sol = highspy.HighsSolution()
            sol.col_value = list(x)
            sol.value_valid = True
            h.setSolution(sol)
    if args.time_limit is not None:
        h.setOptionValue("time_limit", max(1.0, args.time_limit - (time.monotonic() - start)))
    h.run()

    ms = h.getModelStatus()
    info = h.getInfo()
    has_point = info.primal_solution_status == 2
    if ms == highspy.HighsModelStatus.kOptimal:
        status = "optimal"
    elif ms in (highspy.HighsModelStatus.kInfeasible, highspy.HighsModelStatus.kUnboundedOrInfeasible):
        status = "infeasible"
    elif has_point:
        status = "feasible"
    else:
        status = "limit"

    lines = [f"status {status}"]
    if has_point:
        lines.append(f"objective {info.objective_function_value!r}")
        lp = h.getLp()
        values = h.getSolution().col_value
        for name, v in zip(lp.col_names_, values):
            lines.append(f"{name} {float(v)!r}")
    with open(args.solution, "w") as f:
        f.write("\n".join(lines) + "\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
