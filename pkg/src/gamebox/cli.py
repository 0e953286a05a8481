"""Command-line front end.

Exit codes: 0 success, 1 usage error (bad flags, malformed files,
invalid parameter ranges), 2 computation error (infeasible program,
exceeded budget, violated gate, unsupported capability).  Machine
output goes to stdout (or ``--out``); diagnostics to stderr.  All
randomness derives from ``--seed``; equal invocations produce
byte-identical output.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys

import numpy as np

from . import bounds, diqkd, dpt, games
from .errors import GameboxError, ValidationError


class _Parser(argparse.ArgumentParser):
    """argparse that exits 1 (not 2) on usage errors."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


# ---------------------------------------------------------------------------
# input/output helpers
# ---------------------------------------------------------------------------


def _json_ready(obj):
    if isinstance(obj, dict):
        return {str(k): _json_ready(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_ready(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _json_ready(obj.tolist())
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def _cell_text(value) -> str:
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (dict, list, tuple)):
        return json.dumps(_json_ready(value), sort_keys=True)
    return str(value)


def _to_csv(doc) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    if isinstance(doc, list):
        if not doc:
            return ""
        columns = list(doc[0].keys())
        writer.writerow(columns)
        for row in doc:
            writer.writerow([_cell_text(row[c]) for c in columns])
    else:
        columns = sorted(doc.keys())
        writer.writerow(columns)
        writer.writerow([_cell_text(doc[c]) for c in columns])
    return buf.getvalue()


def _emit(doc, args) -> None:
    if getattr(args, "format", "json") == "csv":
        text = _to_csv(doc)
    else:
        text = json.dumps(_json_ready(doc), sort_keys=True, indent=2) + "\n"
    if getattr(args, "out", None):
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _load_json(path: str):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def _load_game(args) -> games.GamePredicate:
    if getattr(args, "builtin", None):
        return games.builtin_game(args.builtin)
    if getattr(args, "game", None):
        return games.game_from_json(_load_json(args.game))
    raise ValidationError("provide --builtin NAME or --game FILE")


def _int_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(v) for v in text.split(",") if v != "")
    except ValueError:
        raise ValidationError(f"expected comma-separated integers, got {text!r}") from None


def _float_list(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in text.split(",") if v != "")
    except ValueError:
        raise ValidationError(f"expected comma-separated numbers, got {text!r}") from None


# ---------------------------------------------------------------------------
# handlers
# ---------------------------------------------------------------------------


def _cmd_game_value(args):
    game = _load_game(args)
    label = game.name or args.game
    if args.method == "classical":
        res = games.classical_value(game, budget=args.budget)
        doc = {"game": label, "method": "classical", "value": res.value, "kind": res.kind}
    elif args.method == "seesaw":
        dims = _int_list(args.dims) if args.dims else tuple(max(2, s) for s in game.output_sizes)
        res = games.seesaw(game, dims, restarts=args.restarts, seed=args.seed)
        doc = {
            "game": label,
            "method": "seesaw",
            "value": res.value,
            "kind": res.kind,
            "local_dims": list(dims),
            "restarts": args.restarts,
            "seed": args.seed,
        }
    else:  # ns
        value = bounds.ns_game_value(game)
        doc = {"game": label, "method": "ns", "value": value, "kind": "exact"}
    return doc


def _cmd_game_builtin(args):
    return games.game_to_json(games.builtin_game(args.name))


def _cmd_bounds_eff(args):
    game = _load_game(args)
    fn = bounds.eff_ns if args.relaxation == "ns" else bounds.eff_local
    res = fn(game, args.eps, args.variant)
    return {
        "game": game.name or args.game,
        "eps": args.eps,
        "variant": res.variant,
        "relaxation": res.relaxation,
        "eta": res.eta,
        "eff": res.eff,
        "certificate": res.certificate.q.tolist() if res.certificate is not None else None,
    }


def _cmd_bounds_gamma2(args):
    doc = _load_json(args.matrix)
    if args.alpha_approx is not None:
        if not isinstance(doc, dict) or "F" not in doc or "p" not in doc:
            raise ValidationError('gamma2 with --alpha-approx needs a file {"F": ..., "p": ...}')
        F = np.asarray(doc["F"], dtype=float)
        p = np.asarray(doc["p"], dtype=float)
        res = bounds.gamma2_alpha(F, p, args.alpha_approx)
        return {
            "quantity": "gamma2_alpha",
            "alpha": args.alpha_approx,
            "value": res.value,
            "kind": res.kind,
        }
    mat = doc["M"] if isinstance(doc, dict) and "M" in doc else doc
    res = bounds.gamma2_star(np.asarray(mat, dtype=float), restarts=args.restarts)
    return {"quantity": "gamma2_star", "value": res.value, "kind": res.kind}


def _cmd_bounds_check_thm2(args):
    doc = _load_json(args.input)
    if not isinstance(doc, dict) or "f" not in doc or "p" not in doc:
        raise ValidationError('check-thm2 needs a file {"f": 0/1 matrix, "p": probability matrix}')
    res = bounds.check_thm2(np.asarray(doc["f"]), np.asarray(doc["p"], dtype=float), args.eps)
    return {
        "eps": args.eps,
        "alpha": res.alpha,
        "lower": res.lower,
        "upper": res.upper,
        "holds": res.holds,
    }


def _cmd_dpt_bound(args):
    alphabets = _int_list(args.alphabets) if args.alphabets else None
    if args.which == "case-i":
        params = dpt.DPTParams(
            l=args.l, n=args.n, c=args.c, nu=args.nu,
            alphabet_sizes=alphabets, exponent_const=args.exponent_const,
        )
        value = dpt.dpt_case_i_bound(params)
        shown = {"l": args.l, "n": args.n, "c": args.c, "nu": args.nu,
                 "alphabet_sizes": list(alphabets or ()), "exponent_const": args.exponent_const}
        return {"bound_name": "case_i", "params": shown, "value": value}
    if args.which == "case-ii":
        if args.eff is None:
            raise ValidationError("case-ii needs --eff (a partition-bound efficiency)")
        params = dpt.DPTParams(
            l=args.l, n=args.n, c=args.c, eps=args.eps, zeta=args.zeta,
            alphabet_sizes=alphabets, exponent_const=args.exponent_const,
        )
        value = dpt.dpt_case_ii_bound(params, args.eff)
        shown = {"l": args.l, "n": args.n, "c": args.c, "eps": args.eps, "zeta": args.zeta,
                 "eff": args.eff, "alphabet_sizes": list(alphabets or ()),
                 "exponent_const": args.exponent_const}
        return {"bound_name": "case_ii", "params": shown, "value": value}
    # randv
    if args.t is None:
        raise ValidationError("randv needs --t")
    value = dpt.randv_bound(
        args.t, args.n, args.c, args.l, args.nu, args.beta,
        alphabet_sizes=alphabets, mode=args.mode,
    )
    shown = {"t": args.t, "n": args.n, "c": args.c, "l": args.l, "nu": args.nu,
             "beta_const": args.beta, "alphabet_sizes": list(alphabets or ()),
             "mode": args.mode}
    return {"bound_name": "randv", "params": shown, "value": value}


def _cmd_dpt_probe(args):
    game = _load_game(args)
    probe = dpt.RepetitionProbe(
        game=game, n=args.n, comm_bits=args.comm_bits,
        search_budget=args.budget, seed=args.seed,
    )
    done = dpt.empirical_repeated_value(probe)
    return {
        "game": game.name or args.game,
        "n": done.n,
        "comm_bits": done.comm_bits,
        "search_budget": done.search_budget,
        "seed": done.seed,
        "best_value": done.best_value,
        "kind": done.kind,
        "certificate": done.certificate,
    }


def _cmd_dpt_substate(args):
    doc = _load_json(args.input)
    for key in ("sigma_XB", "psi_X", "rho_B"):
        if key not in doc:
            raise ValidationError(f"substate-check input file missing {key!r}")
    report = dpt.substate_perturbation_check_classical(
        np.asarray(doc["sigma_XB"], dtype=float),
        np.asarray(doc["psi_X"], dtype=float),
        np.asarray(doc["rho_B"], dtype=float),
        args.c, args.eps, args.delta0, args.delta1,
    )
    return {
        "status": report.status,
        "smoothing_pd": report.smoothing_pd,
        "marginal_pd": report.marginal_pd,
        "conclusion_pd": report.conclusion_pd,
        "conclusion_threshold": report.conclusion_threshold,
        "conclusion_factor": report.conclusion_factor,
        "witness": report.witness.tolist() if report.witness is not None else None,
    }


def _make_boxes(args, run: int):
    if args.boxes == "honest":
        noise = args.box_delta if args.box_delta is not None else args.delta
        return diqkd.honest_boxes(noise, [args.seed, run, 101])
    if args.boxes == "baseline":
        return diqkd.baseline_cheating_boxes()
    return diqkd.test_set_cheating_boxes(args.guess)


def _cmd_diqkd_run(args):
    params = diqkd.ProtocolParams(
        n=args.n, alpha=args.alpha, gamma=args.gamma, delta=args.delta, seed=args.seed
    )
    adversary = diqkd.load_adversary(args.adversary) if args.adversary else None
    aborts = 0
    qbers = []
    mismatches = []
    leaked = []
    keys_equal = 0
    completed = 0
    for r in range(args.runs):
        budget = diqkd.LeakageBudget(args.limit_bits)
        rec = diqkd.run_protocol(params, _make_boxes(args, r), adversary, budget, run_index=r)
        aborts += int(rec.aborted)
        qbers.append(rec.qber)
        mismatches.append(rec.mismatch_S)
        leaked.append(rec.leaked_bits)
        if not rec.aborted:
            completed += 1
            keys_equal += int(bool(np.array_equal(rec.K_A, rec.K_B)))
    return {
        "n": args.n,
        "alpha": args.alpha,
        "gamma": args.gamma,
        "delta": args.delta,
        "boxes": args.boxes,
        "runs": args.runs,
        "aborts": aborts,
        "abort_freq": aborts / args.runs,
        "qber_mean": float(np.mean(qbers)),
        "mismatch_mean": float(np.mean(mismatches)),
        "leaked_bits_mean": float(np.mean(leaked)),
        "keys_equal_completed": keys_equal,
        "completed": completed,
        "seed": args.seed,
    }


def _cmd_diqkd_rate(args):
    params = diqkd.KeyRateParams(
        alpha=args.alpha, gamma=args.gamma, delta=args.delta,
        c=args.c, n=args.n, nu=args.nu, beta=args.beta, PrE=args.pre,
    )
    rate = diqkd.key_rate(params)
    return {
        "alpha": args.alpha, "gamma": args.gamma, "delta": args.delta, "c": args.c,
        "n": args.n, "nu": args.nu, "beta": args.beta, "PrE": args.pre, **rate,
    }


def _cmd_diqkd_sweep(args):
    axes = {
        "n": [int(v) for v in _float_list(args.n)],
        "alpha": list(_float_list(args.alpha)),
        "gamma": list(_float_list(args.gamma)),
        "delta": list(_float_list(args.delta)),
        "c": list(_float_list(args.c)),
        "nu": list(_float_list(args.nu)),
        "beta": list(_float_list(args.beta)),
    }
    cells = diqkd.expand_grid(axes)
    return diqkd.sweep(cells, args.runs, args.seed)


def _pattern_from_spec(spec: str, n: int):
    if spec == "ones":
        return np.ones(n)
    if spec == "zeros":
        return np.zeros(n)
    if spec.startswith("threshold:"):
        k = int(spec.split(":", 1)[1])
        if not 0 <= k <= n:
            raise ValidationError(f"threshold count {k} outside [0, {n}]")
        z = np.zeros(n)
        z[:k] = 1.0
        return z
    if spec.startswith("iid:"):
        prob = float(spec.split(":", 1)[1])
        if not 0.0 <= prob <= 1.0:
            raise ValidationError(f"iid probability {prob} outside [0, 1]")
        return lambda rng: (rng.random(n) < prob).astype(float)
    raise ValidationError(
        f"unknown pattern {spec!r}; use ones | zeros | threshold:K | iid:P"
    )


def _cmd_diqkd_serfling(args):
    pattern = _pattern_from_spec(args.pattern, args.n)
    res = diqkd.serfling_mc(args.n, args.gamma, args.eps, pattern, args.trials, args.seed)
    return {
        "n": args.n, "gamma": args.gamma, "eps": args.eps,
        "pattern": args.pattern, "trials": args.trials, "seed": args.seed, **res,
    }


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def _add_common(p, seed=True):
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--out", default=None, help="write output to this file instead of stdout")
    if seed:
        p.add_argument("--seed", type=int, default=0)


def _add_game_source(p):
    p.add_argument("--builtin", default=None, help="builtin game name")
    p.add_argument("--game", default=None, help="path to a game JSON file")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="gamebox", description=__doc__)
    top = parser.add_subparsers(dest="group", required=True)

    game = top.add_parser("game", help="game values and descriptions")
    game_sub = game.add_subparsers(dest="cmd", required=True)

    gv = game_sub.add_parser("value", help="classical / see-saw / no-signalling value")
    _add_game_source(gv)
    gv.add_argument("--method", choices=("classical", "seesaw", "ns"), default="classical")
    gv.add_argument("--restarts", type=int, default=20)
    gv.add_argument("--dims", default=None, help="comma-separated local dimensions for see-saw")
    gv.add_argument("--budget", type=int, default=10**8)
    _add_common(gv)
    gv.set_defaults(handler=_cmd_game_value)

    gb = game_sub.add_parser("builtin", help="print a builtin game in the JSON schema")
    gb.add_argument("name")
    _add_common(gb, seed=False)
    gb.set_defaults(handler=_cmd_game_builtin)

    bnd = top.add_parser("bounds", help="partition bounds and factorization norms")
    bnd_sub = bnd.add_subparsers(dest="cmd", required=True)

    be = bnd_sub.add_parser("eff", help="abort-augmented efficiency bound")
    _add_game_source(be)
    be.add_argument("--eps", type=float, default=0.0)
    be.add_argument("--variant", choices=bounds.VARIANTS, default="worst_case")
    be.add_argument("--relaxation", choices=("ns", "local"), default="ns")
    _add_common(be, seed=False)
    be.set_defaults(handler=_cmd_bounds_eff)

    bg = bnd_sub.add_parser("gamma2", help="dual factorization norm / approximate variant")
    bg.add_argument("--matrix", required=True, help="JSON file: matrix, or {M}, or {F, p}")
    bg.add_argument("--alpha-approx", dest="alpha_approx", type=float, default=None)
    bg.add_argument("--restarts", type=int, default=50)
    _add_common(bg, seed=False)
    bg.set_defaults(handler=_cmd_bounds_gamma2)

    bc = bnd_sub.add_parser("check-thm2", help="two-sided discrepancy/efficiency check")
    bc.add_argument("--input", required=True, help='JSON file {"f": ..., "p": ...}')
    bc.add_argument("--eps", type=float, default=0.0)
    _add_common(bc, seed=False)
    bc.set_defaults(handler=_cmd_bounds_check_thm2)

    dp = top.add_parser("dpt", help="direct-product bounds and probes")
    dp_sub = dp.add_subparsers(dest="cmd", required=True)

    db = dp_sub.add_parser("bound", help="closed-form bound evaluators")
    db.add_argument("which", choices=("case-i", "case-ii", "randv"))
    db.add_argument("--l", type=int, default=2)
    db.add_argument("--n", type=int, required=True)
    db.add_argument("--c", type=float, default=0.0)
    db.add_argument("--nu", type=float, default=0.0)
    db.add_argument("--eps", type=float, default=0.0)
    db.add_argument("--zeta", type=float, default=0.5)
    db.add_argument("--eff", type=float, default=None)
    db.add_argument("--t", type=int, default=None)
    db.add_argument("--beta", type=float, default=1.0)
    db.add_argument("--alphabets", default="4,4", help="comma-separated output alphabet sizes")
    db.add_argument("--exponent-const", dest="exponent_const", type=float, default=1.0)
    db.add_argument("--mode", choices=("generic", "mse"), default="generic")
    _add_common(db, seed=False)
    db.set_defaults(handler=_cmd_dpt_bound)

    dpr = dp_sub.add_parser("probe", help="empirical repeated value with communication")
    _add_game_source(dpr)
    dpr.add_argument("--n", type=int, default=1)
    dpr.add_argument("--comm-bits", dest="comm_bits", type=int, default=0)
    dpr.add_argument("--budget", type=int, default=2_000_000)
    _add_common(dpr)
    dpr.set_defaults(handler=_cmd_dpt_probe)

    ds = dp_sub.add_parser("substate-check", help="classical substate perturbation check")
    ds.add_argument("--input", required=True, help="JSON file {sigma_XB, psi_X, rho_B}")
    ds.add_argument("--c", type=float, default=0.0)
    ds.add_argument("--eps", type=float, default=0.0)
    ds.add_argument("--delta0", type=float, default=0.1)
    ds.add_argument("--delta1", type=float, default=0.1)
    _add_common(ds, seed=False)
    ds.set_defaults(handler=_cmd_dpt_substate)

    dq = top.add_parser("diqkd", help="key-distribution simulation and rates")
    dq_sub = dq.add_subparsers(dest="cmd", required=True)

    dr = dq_sub.add_parser("run", help="simulate protocol runs")
    dr.add_argument("--n", type=int, required=True)
    dr.add_argument("--alpha", type=float, default=0.5)
    dr.add_argument("--gamma", type=float, default=0.2)
    dr.add_argument("--delta", type=float, default=0.0)
    dr.add_argument("--runs", type=int, default=1)
    dr.add_argument("--boxes", choices=("honest", "baseline", "test_set"), default="honest")
    dr.add_argument("--box-delta", dest="box_delta", type=float, default=None,
                    help="device noise if different from the protocol delta")
    dr.add_argument("--guess", type=int, default=0, help="rounds the test_set cheater pre-leaks")
    dr.add_argument("--adversary", default=None, help="JSON adversary script")
    dr.add_argument("--limit-bits", dest="limit_bits", type=int, default=0)
    _add_common(dr)
    dr.set_defaults(handler=_cmd_diqkd_run)

    dra = dq_sub.add_parser("rate", help="closed-form key-rate evaluation")
    dra.add_argument("--alpha", type=float, required=True)
    dra.add_argument("--gamma", type=float, required=True)
    dra.add_argument("--delta", type=float, required=True)
    dra.add_argument("--c", type=float, default=0.0)
    dra.add_argument("--n", type=int, required=True)
    dra.add_argument("--nu", type=float, default=0.01)
    dra.add_argument("--beta", type=float, default=1.0)
    dra.add_argument("--pre", type=float, default=1.0, help="non-abort probability PrE")
    _add_common(dra, seed=False)
    dra.set_defaults(handler=_cmd_diqkd_rate)

    dsw = dq_sub.add_parser("sweep", help="grid evaluation to CSV/JSON")
    dsw.add_argument("--n", required=True, help="comma-separated values")
    dsw.add_argument("--alpha", required=True)
    dsw.add_argument("--gamma", required=True)
    dsw.add_argument("--delta", required=True)
    dsw.add_argument("--c", default="0.0")
    dsw.add_argument("--nu", default="0.01")
    dsw.add_argument("--beta", default="1.0")
    dsw.add_argument("--runs", type=int, default=0)
    dsw.add_argument("--format", choices=("json", "csv"), default="csv")
    dsw.add_argument("--out", default=None)
    dsw.add_argument("--seed", type=int, default=0)
    dsw.set_defaults(handler=_cmd_diqkd_sweep)

    dse = dq_sub.add_parser("serfling", help="Monte Carlo sampling-tail check")
    dse.add_argument("--n", type=int, required=True)
    dse.add_argument("--gamma", type=float, required=True)
    dse.add_argument("--eps", type=float, required=True)
    dse.add_argument("--pattern", default="ones", help="ones | zeros | threshold:K | iid:P")
    dse.add_argument("--trials", type=int, default=10000)
    _add_common(dse)
    dse.set_defaults(handler=_cmd_diqkd_serfling)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as done:
        return int(done.code or 0)
    try:
        doc = args.handler(args)
    except ValidationError as exc:
        print(f"gamebox: {exc}", file=sys.stderr)
        return 1
    except (FileNotFoundError, IsADirectoryError, json.JSONDecodeError) as exc:
        print(f"gamebox: {exc}", file=sys.stderr)
        return 1
    except GameboxError as exc:
        print(f"gamebox: {exc}", file=sys.stderr)
        return 2
    _emit(doc, args)
    return 0


if __name__ == "__main__":
    sys.exit(main())
