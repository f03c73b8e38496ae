"""Command-line front end: subcommands, config loading, CSV/JSON emission.

Exit codes: 0 success, 1 assertion/check failure (first violation printed to
stderr), 2 usage or configuration error. All numeric output is formatted to
12 significant digits; identical argv and seed produce byte-identical output.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys

try:
    import tomllib
except ModuleNotFoundError:  # 3.10
    import tomli as tomllib

from . import acceptance
from .bounds import (
    bce_ratio,
    bm_threshold,
    incomplete_info_lower_bound,
    approx_bne_epsilon,
    pim_bound_incpdf,
    pim_bound_mhr,
    pim_bound_symmetric,
    super_agent_bm_from_eps,
    super_agent_pim,
)
from .core import (
    MechanismKind,
    MechanismSpec,
    derive_rng,
    instance_spec_from_json,
)
from .distributions import parse_marginal, realize
from .equilibrium import constructive_equilibrium, enumerate_pure_nash, expected_utilities
from .errors import DelchoiceError
from .experiments import (
    correspondence_experiment,
    estimate_bce,
    estimate_threshold_utility,
    estimate_worstcase_bne,
    prE_figure_rows,
)
from .orderstats import (
    GapQuery,
    Side,
    gap_expectation,
    gap_expectation_identity,
    lopez_bound,
)

_COMMANDS = (
    "simulate",
    "equilibrium",
    "orderstats",
    "bounds",
    "prE",
    "bce",
    "worstbne",
    "threshold",
    "correspond",
    "verify-all",
)


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return f"{v:.12g}"
    return str(v)


def _json_ready(v):
    if isinstance(v, float):
        return float(f"{v:.12g}")
    if isinstance(v, dict):
        return {k: _json_ready(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_json_ready(x) for x in v]
    return v


def _emit(rows: list[dict], out: str) -> None:
    if out == "json":
        payload = _json_ready(rows[0] if len(rows) == 1 else {"rows": rows})
        sys.stdout.write(json.dumps(payload) + "\n")
        return
    header = list(rows[0].keys())
    sys.stdout.write(",".join(header) + "\n")
    for row in rows:
        sys.stdout.write(",".join(_fmt(row[h]) for h in header) + "\n")


def _fail(message: str) -> int:
    sys.stderr.write(message + "\n")
    return 1


def _usage(message: str) -> int:
    sys.stderr.write(f"error: {message}\n")
    return 2


def _int_list(text: str) -> list[int]:
    return [int(part) for part in str(text).split(",") if part != ""]


def _default_seed() -> int:
    return int(os.environ.get("DELEGATE_SEED", "0"))


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="delchoice",
        description="Delegated-choice mechanisms: simulation, equilibria, bounds.",
    )
    sub = parser.add_subparsers(dest="command")
    for name in _COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--n", type=str, default=None)
        sp.add_argument("--k", type=int, default=None)
        sp.add_argument("--tau", type=float, default=None)
        sp.add_argument("--budget", type=int, default=None)
        sp.add_argument("--alpha", type=float, default=None)
        sp.add_argument("--trials", type=int, default=None)
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--reps", type=int, default=None)
        sp.add_argument("--out", choices=("csv", "json"), default=None)
        sp.add_argument("--config", type=str, default=None)
        if name == "bounds":
            sp.add_argument("--formula", type=str, default=None)
            sp.add_argument("--eps", type=float, default=None)
            sp.add_argument("--L", type=float, default=None)
            sp.add_argument("--s", type=int, default=None)
        if name == "orderstats":
            sp.add_argument("--marginal", type=str, default=None)
            sp.add_argument("--side", choices=("top", "bottom"), default=None)
        if name == "correspond":
            sp.add_argument("--split", type=str, default=None)
        if name == "verify-all":
            sp.add_argument("--quick", action="store_true")
            sp.add_argument("--criteria", type=str, default=None)
    return parser


_CONFIG_KEYS = {
    "n",
    "k",
    "tau",
    "budget",
    "alpha",
    "trials",
    "seed",
    "reps",
    "out",
    "formula",
    "eps",
    "L",
    "s",
    "marginal",
    "side",
    "split",
    "instance",
}


def _load_config(ns) -> dict:
    """Returns {} or the merged manifest; instance JSON goes under 'instance'."""
    path = ns.config
    if path is None:
        return {}
    if path.endswith(".json"):
        with open(path, encoding="utf-8") as fh:
            return {"instance": json.load(fh)}
    with open(path, "rb") as fh:
        manifest = tomllib.load(fh)
    for key in manifest:
        if key not in _CONFIG_KEYS:
            raise ValueError(f"unknown config key: {key}")
    inst = manifest.get("instance")
    if isinstance(inst, str):
        with open(inst, encoding="utf-8") as fh:
            manifest["instance"] = json.load(fh)
    return manifest


def _merged(ns, config: dict, key: str, default=None):
    # Flags override config; config overrides defaults.
    value = getattr(ns, key, None)
    if value is None:
        value = config.get(key, default)
    return value


def _instance_from(ns, config: dict):
    payload = config.get("instance")
    if payload is None:
        raise ValueError("this subcommand needs --config with an instance")
    return instance_spec_from_json(payload)


def _mechanism(tau: float, budget) -> MechanismSpec:
    if budget is None:
        return MechanismSpec(kind=MechanismKind.MSPM, thresholds=tau)
    return MechanismSpec(kind=MechanismKind.RSPM, thresholds=tau, budget=budget)


# ----------------------------------------------------------------------------
# Subcommands
# ----------------------------------------------------------------------------

def _cmd_prE(ns, config) -> int:
    raw_n = _merged(ns, config, "n")
    k = _merged(ns, config, "k")
    if raw_n is None or k is None:
        return _usage("prE requires --n (int or comma list) and --k")
    ns_list = _int_list(raw_n)
    trials = int(_merged(ns, config, "trials", 30000))
    seed = int(_merged(ns, config, "seed", _default_seed()))
    reps = int(_merged(ns, config, "reps", 1))
    rows = prE_figure_rows(ns_list, int(k), trials, seed, reps)
    _emit(rows, _merged(ns, config, "out", "csv"))
    for row in rows:
        if not row["pass"]:
            return _fail(
                f"prE estimate {row['estimate']:.6g} at n={row['n']} k={row['k']} "
                f"fell below a lower bound minus 3 SE"
            )
    return 0


def _cmd_bce(ns, config) -> int:
    n = _merged(ns, config, "n")
    k = _merged(ns, config, "k")
    if n is None or k is None:
        return _usage("bce requires --n and --k")
    (n,) = _int_list(n)
    trials = int(_merged(ns, config, "trials", 30000))
    seed = int(_merged(ns, config, "seed", _default_seed()))
    res = estimate_bce(n, int(k), trials, seed)
    d = res.details
    row = {
        "n": n,
        "k": int(k),
        "trials": trials,
        "seed": seed,
        "lhs": res.estimate,
        "lhs_se": res.std_err,
        "pr_E": d["pr_E"],
        "E_x_max": d["E_x_max"],
        "combined_se": d["combined_se"],
        "ratio": d["ratio"],
        "ratio_se": d["ratio_se"],
        "bce_ratio": res.refs["bce_ratio"],
        "pass": res.passed,
    }
    _emit([row], _merged(ns, config, "out", "csv"))
    if not res.passed:
        failed = [name for name, ok in res.checks.items() if not ok]
        return _fail(f"bce check failed: {failed[0]}")
    return 0


def _cmd_worstbne(ns, config) -> int:
    n = _merged(ns, config, "n")
    k = _merged(ns, config, "k")
    if n is None or k is None:
        return _usage("worstbne requires --n and --k")
    (n,) = _int_list(n)
    trials = int(_merged(ns, config, "trials", 30000))
    seed = int(_merged(ns, config, "seed", _default_seed()))
    res = estimate_worstcase_bne(n, int(k), trials, seed)
    d = res.details
    row = {
        "n": n,
        "k": int(k),
        "trials": trials,
        "seed": seed,
        "gap": res.estimate,
        "gap_se": res.std_err,
        "gap_lower_bound": res.refs["gap_lower_bound"],
        "chosen_mean": d["chosen_mean"],
        "chosen_se": d["chosen_se"],
        "min_exp_upper_bound": res.refs["min_exp_upper_bound"],
        "top_mean": d["top_mean"],
        "top_se": d["top_se"],
        "E_x_max": res.refs["E_x_max"],
        "pass": res.passed,
    }
    _emit([row], _merged(ns, config, "out", "csv"))
    if not res.passed:
        failed = [name for name, ok in res.checks.items() if not ok]
        return _fail(f"worstbne check failed: {failed[0]}")
    return 0


def _cmd_threshold(ns, config) -> int:
    n = _merged(ns, config, "n")
    k = _merged(ns, config, "k")
    if n is None or k is None:
        return _usage("threshold requires --n and --k")
    (n,) = _int_list(n)
    alpha = float(_merged(ns, config, "alpha", 1.0))
    trials = int(_merged(ns, config, "trials", 30000))
    seed = int(_merged(ns, config, "seed", _default_seed()))
    tau = _merged(ns, config, "tau")
    res = estimate_threshold_utility(
        n, int(k), alpha, trials, seed, tau=None if tau is None else float(tau)
    )
    row = {
        "n": n,
        "k": int(k),
        "alpha": alpha,
        "tau": res.refs["tau"],
        "trials": trials,
        "seed": seed,
        "estimate": res.estimate,
        "std_err": res.std_err,
        "threshold": res.refs["threshold"],
        "guarantee": res.refs["guarantee"],
        "pass": res.passed,
    }
    _emit([row], _merged(ns, config, "out", "csv"))
    if not res.passed:
        return _fail(
            f"threshold estimate {res.estimate:.6g} below guarantee "
            f"{res.refs['guarantee']:.6g} minus 3 SE"
        )
    return 0


def _cmd_correspond(ns, config) -> int:
    raw_split = _merged(ns, config, "split")
    if raw_split is None:
        n = _merged(ns, config, "n")
        k = _merged(ns, config, "k")
        if n is None or k is None:
            return _usage("correspond requires --split or both --n and --k")
        (n,) = _int_list(n)
        split = [int(k)] * n
    else:
        split = _int_list(raw_split)
    tau = float(_merged(ns, config, "tau", 0.0))
    trials = int(_merged(ns, config, "trials", 10000))
    seed = int(_merged(ns, config, "seed", _default_seed()))
    res = correspondence_experiment(split, tau, trials, seed)
    row = {
        "split": "x".join(str(s) for s in res["split"]),
        "tau": tau,
        "trials": trials,
        "seed": seed,
        "failures": res["failures"],
        "pass": res["pass"],
    }
    _emit([row], _merged(ns, config, "out", "csv"))
    if not res["pass"]:
        return _fail(f"correspond: {res['failures']} trials had multi < single")
    return 0


def _cmd_orderstats(ns, config) -> int:
    marg_id = _merged(ns, config, "marginal", "uniform01")
    n = _merged(ns, config, "n")
    k = _merged(ns, config, "k")
    if n is None or k is None:
        return _usage("orderstats requires --n and --k")
    (n,) = _int_list(n)
    k = int(k)
    side = Side(_merged(ns, config, "side", "top"))
    marg = parse_marginal(marg_id)
    query = GapQuery(marg, n, k, side)
    gap = gap_expectation(query)
    ident = gap_expectation_identity(query)
    lo, hi = marg.support
    length = hi - lo
    s = n - k if side is Side.TOP else k
    if math.isfinite(length):
        bound = lopez_bound(n, s, length)
        bound_pass = gap <= bound + 1e-9
    else:
        bound = math.inf
        bound_pass = True
    rows = [
        {
            "marginal": marg_id,
            "side": side.value,
            "k": k,
            "n": n,
            "gap": gap,
            "bound": ident,
            "check_name": "identity_cross_check",
            "pass": abs(gap - ident) <= 1e-7,
        },
        {
            "marginal": marg_id,
            "side": side.value,
            "k": k,
            "n": n,
            "gap": gap,
            "bound": bound,
            "check_name": "interval_gap_bound",
            "pass": bound_pass,
        },
    ]
    _emit(rows, _merged(ns, config, "out", "csv"))
    for row in rows:
        if not row["pass"]:
            return _fail(f"orderstats check failed: {row['check_name']}")
    return 0


def _cmd_bounds(ns, config) -> int:
    formula = _merged(ns, config, "formula")
    if formula is None:
        return _usage("bounds requires --formula")
    out = _merged(ns, config, "out", "csv")
    n = _merged(ns, config, "n")
    n = None if n is None else _int_list(n)[0]
    k = _merged(ns, config, "k")
    k = None if k is None else int(k)
    L = _merged(ns, config, "L")
    eps = _merged(ns, config, "eps")
    try:
        if formula == "superagent_bm":
            if eps is None:
                return _usage("superagent_bm requires --eps")
            named = super_agent_bm_from_eps(float(eps))
            payload = {
                "E_X1": named.expected["E_X1"],
                "alg_ceiling": named.expected["alg_ceiling"],
            }
            sys.stdout.write(json.dumps(_json_ready(payload)) + "\n")
            return 0
        if formula == "superagent_pim":
            if eps is None:
                return _usage("superagent_pim requires --eps (and optionally --L)")
            named = super_agent_pim(1.0 if L is None else float(L), float(eps))
            sys.stdout.write(json.dumps(_json_ready(named.expected)) + "\n")
            return 0
        rows = _bounds_rows(formula, n, k, L, eps, ns, config)
    except (TypeError, ValueError) as exc:
        return _usage(f"bounds --formula {formula}: {exc}")
    if rows is None:
        return _usage(f"unknown formula: {formula}")
    _emit(rows, out)
    for row in rows:
        if row["value"] < 0:
            sys.stderr.write(
                f"note: {row['formula']} is negative (vacuous bound), reported as-is\n"
            )
    return 0


def _bounds_rows(formula, n, k, L, eps, ns, config):
    def row(name: str, params: str, value: float) -> dict:
        return {"formula": name, "params": params, "value": value}

    if formula == "mhr":
        return [row("mhr", f"k={k}", pim_bound_mhr(k))]
    if formula == "incpdf":
        return [row("incpdf", f"n={n};k={k}", pim_bound_incpdf(n, k))]
    if formula == "symmetric":
        L = 1.0 if L is None else float(L)
        return [row("symmetric", f"n={n};L={_fmt(L)}", pim_bound_symmetric(n, L))]
    if formula == "incomplete_info":
        return [
            row("incomplete_info", f"n={n};k={k}", incomplete_info_lower_bound(n, k))
        ]
    if formula == "approx_bne":
        return [row("approx_bne", f"n={n}", approx_bne_epsilon(n))]
    if formula == "bce_ratio":
        return [row("bce_ratio", f"n={n}", bce_ratio(n))]
    if formula == "bm_threshold":
        alpha = float(_merged(ns, config, "alpha", 1.0))
        r, guarantee = bm_threshold(alpha, n, k)
        params = f"alpha={_fmt(alpha)};n={n};k={k}"
        return [
            row("bm_threshold_r", params, r),
            row("bm_threshold_guarantee", params, guarantee),
        ]
    if formula == "lopez":
        s = _merged(ns, config, "s")
        if s is None:
            return None
        L = 1.0 if L is None else float(L)
        return [row("lopez", f"n={n};s={int(s)};L={_fmt(L)}", lopez_bound(n, int(s), L))]
    return None


def _cmd_equilibrium(ns, config) -> int:
    spec = _instance_from(ns, config)
    tau = float(_merged(ns, config, "tau", 0.0))
    budget = _merged(ns, config, "budget")
    seed = int(_merged(ns, config, "seed", _default_seed()))
    mech = _mechanism(tau, budget)
    rng = derive_rng(seed, "equilibrium realization")
    inst = realize(spec, rng)
    report = enumerate_pure_nash(inst, mech)
    sys.stdout.write(report.to_json() + "\n")
    if report.violations:
        first = report.violations[0]
        return _fail(
            f"floor violation: utility {first['expected_utility']:.6g} "
            f"< floor {first['floor']:.6g}"
        )
    return 0


def _cmd_simulate(ns, config) -> int:
    spec = _instance_from(ns, config)
    tau = float(_merged(ns, config, "tau", 0.0))
    budget = _merged(ns, config, "budget")
    trials = int(_merged(ns, config, "trials", 30000))
    seed = int(_merged(ns, config, "seed", _default_seed()))
    mech = _mechanism(tau, budget)
    play_spec = MechanismSpec(kind=MechanismKind.MSPM, thresholds=tau)
    total = 0.0
    total_sq = 0.0
    for t in range(trials):
        rng = derive_rng(seed, "simulate realization", t)
        inst = realize(spec, rng)
        profile = constructive_equilibrium(inst, play_spec)
        principal, _ = expected_utilities(inst, mech, profile)
        total += principal
        total_sq += principal * principal
    mean = total / trials
    var = (total_sq - trials * mean * mean) / max(trials - 1, 1)
    se = math.sqrt(max(var, 0.0) / trials)
    row = {
        "n": spec.n,
        "tau": tau,
        "budget": "" if budget is None else budget,
        "trials": trials,
        "seed": seed,
        "estimate": mean,
        "std_err": se,
    }
    _emit([row], _merged(ns, config, "out", "csv"))
    return 0


def _cmd_verify_all(ns, config) -> int:
    numbers = None
    if getattr(ns, "criteria", None):
        numbers = _int_list(ns.criteria)
        known = set(range(1, len(acceptance.CRITERIA) + 1))
        missing = sorted(set(numbers) - known)
        if missing:
            return _usage("unknown criteria: " + ",".join(str(m) for m in missing))
    results = acceptance.run_all(quick=bool(getattr(ns, "quick", False)), numbers=numbers)
    sys.stdout.write(acceptance.format_report(results) + "\n")
    bad = [r for r in results if not r.passed]
    if bad:
        return _fail(f"criterion {bad[0].number} failed: {bad[0].detail}")
    return 0


_DISPATCH = {
    "prE": _cmd_prE,
    "bce": _cmd_bce,
    "worstbne": _cmd_worstbne,
    "threshold": _cmd_threshold,
    "correspond": _cmd_correspond,
    "orderstats": _cmd_orderstats,
    "bounds": _cmd_bounds,
    "equilibrium": _cmd_equilibrium,
    "simulate": _cmd_simulate,
    "verify-all": _cmd_verify_all,
}


def main(argv=None) -> int:
    parser = _build_parser()
    ns = parser.parse_args(argv)
    if ns.command is None:
        parser.print_usage(sys.stderr)
        return 2
    try:
        config = _load_config(ns)
    except (OSError, ValueError, tomllib.TOMLDecodeError) as exc:
        return _usage(f"--config: {exc}")
    try:
        return _DISPATCH[ns.command](ns, config)
    except DelchoiceError as exc:
        return _usage(f"{exc.code}: {exc}")
    except ValueError as exc:
        return _usage(str(exc))


if __name__ == "__main__":
    sys.exit(main())
