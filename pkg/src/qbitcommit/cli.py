"""Command-line interface for the bit-commitment simulations.

Subcommands cover probability tables, metric sweeps, noise thresholds,
protocol sessions and the zero-knowledge colouring demo.

Exit codes: 0 success, 1 usage error, 2 validation error or infeasible result.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from .adversary import KINDS, AttackModel
from .channels import NoiseParams, closed_form_cond_probs, numeric_cond_probs
from .link import LinkParams
from .metrics import added_noise_entropy, fidelity_balance, theta_balance_scan
from .protocol import Honest, ProtocolConfig, run_session
from .quantum import ValidationError
from .seeding import substream
from .verifier import TABLE_ROWS, GRID_STEP, Thresholds, solve_pd_delta_star, solve_pd_star, tally, verify_transcript
from . import zk

EXIT_OK, EXIT_USAGE, EXIT_INVALID = 0, 1, 2
ORACLE_TOL = 1e-10


class UsageError(Exception):
    pass


class ArgumentParser(argparse.ArgumentParser):
    """Parser whose usage errors exit with status 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# --- config files -----------------------------------------------------------


def load_config(path: str) -> dict[str, str]:
    """Flat ``key = value`` file; ``#`` starts a comment, dashes in keys become underscores."""
    out = {}
    try:
        fh = open(path, encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read config {path!r}: {exc.strerror}") from None
    with fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected 'key = value'")
            key, value = (s.strip() for s in line.split("=", 1))
            out[key.replace("-", "_")] = value
    return out


def _parse_bool(text: str) -> bool:
    t = text.lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise UsageError(f"not a boolean: {text!r}")


def config_defaults(parser: argparse.ArgumentParser, cfg: dict[str, str]) -> dict:
    """Convert config values with the parser's own option types."""
    actions = {a.dest: a for a in parser._actions}
    out = {}
    for key, text in cfg.items():
        action = actions.get(key)
        if action is None or key in ("help", "config"):
            raise UsageError(f"unknown config key {key!r}")
        if isinstance(action, (argparse._StoreTrueAction, argparse._StoreFalseAction)):
            value = _parse_bool(text)
        else:
            try:
                value = action.type(text) if action.type else text
            except (TypeError, ValueError):
                raise UsageError(f"bad value for {key}: {text!r}") from None
        if action.choices is not None and value not in action.choices:
            raise UsageError(f"{key} must be one of {list(action.choices)}")
        out[key] = value
    return out


# --- output -----------------------------------------------------------------


def _csv_value(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


def render(records: Sequence[dict], fmt: str) -> str:
    if fmt == "json":
        return json.dumps(list(records), indent=1) + "\n"
    if not records:
        return ""
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(records[0]), lineterminator="\n")
    writer.writeheader()
    for r in records:
        writer.writerow({k: _csv_value(v) for k, v in r.items()})
    return buf.getvalue()


def emit(records: Sequence[dict], args) -> None:
    text = render(records, args.format)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def note(message: str) -> None:
    print(message, file=sys.stderr)


def pool_map(fn: Callable, items: Iterable, workers: int) -> list:
    """Ordered map, optionally across processes."""
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items))


def _float_list(text: str) -> list[float]:
    text = text.strip()
    if not text:
        return []
    try:
        return [float(x) for x in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


# --- shared parameter groups ------------------------------------------------


def add_noise_options(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("noise")
    g.add_argument("--theta", type=float, default=math.pi / 4, help="state overlap angle (default pi/4)")
    g.add_argument("--phi", type=float, default=0.0)
    g.add_argument("--pd", type=float, default=0.0, help="total white noise p_d")
    g.add_argument("--pb-prep", type=float, default=0.0)
    g.add_argument("--pb-meas", type=float, default=0.0)
    g.add_argument("--pp-prep", type=float, default=0.0)
    g.add_argument("--pp-meas", type=float, default=0.0)
    g.add_argument("--u-alpha", type=float, default=0.0)
    g.add_argument("--u-lambda", type=float, default=0.0)
    g.add_argument("--u-mu", type=float, default=0.0)
    g.add_argument("--exact-depolarizing", action="store_true", help="compose depolarizing stages multiplicatively")


def noise_from(args) -> NoiseParams:
    return NoiseParams(
        p_d_trans=args.pd,
        p_b_prep=args.pb_prep,
        p_b_meas=args.pb_meas,
        p_p_prep=args.pp_prep,
        p_p_meas=args.pp_meas,
        u_alpha=args.u_alpha,
        u_lambda=args.u_lambda,
        u_mu=args.u_mu,
        exact_depolarizing=args.exact_depolarizing,
    )


def add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=0, help="master seed (default 0)")
    p.add_argument("--out", help="write output here instead of stdout")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--config", help="flat key = value file; flags take precedence")


# --- probs ------------------------------------------------------------------


def cmd_probs(args) -> int:
    params = noise_from(args)
    closed = closed_form_cond_probs(params, args.theta, args.phi)
    numeric = numeric_cond_probs(params, args.theta, args.phi) if args.check_oracle else None
    rows = []
    for c, r, b, p in closed.records():
        row = {"c": c, "r": r, "b": b, "p": p}
        if numeric is not None:
            row["numeric"] = float(numeric[c, r, b])
            row["abs_diff"] = abs(p - row["numeric"])
        rows.append(row)
    emit(rows, args)
    if numeric is not None:
        worst = closed.max_abs_diff(numeric)
        note(f"max |closed - numeric| = {worst:.3e}")
        if worst >= ORACLE_TOL:
            note(f"oracle mismatch above {ORACLE_TOL:g}")
            return EXIT_INVALID
    return EXIT_OK


# --- sweep ------------------------------------------------------------------

SWEEPS = ("theta-pd", "theta-pb", "pd-b", "entropy-delta")


def _sweep_cell(cell):
    kind, x, y, thetas, step = cell
    if kind == "theta-pd":
        p = NoiseParams.white_noise(x)
        return [{"pd": x, "theta": float(t), "balance": fidelity_balance(closed_form_cond_probs(p, t))} for t in thetas]
    if kind == "theta-pb":
        p = NoiseParams(p_b_prep=x)
        return [{"pb": x, "theta": float(t), "balance": fidelity_balance(closed_form_cond_probs(p, t))} for t in thetas]
    if kind == "pd-b":
        # joint bit-flip coefficient b = 1 - 2 p_b
        p = NoiseParams(p_d_trans=x, p_b_prep=(1.0 - y) / 2.0)
        scan = theta_balance_scan(p, thetas)
        return [{"pd": x, "b": y, "theta_star": scan.theta_star, "degenerate": scan.degenerate}]
    n = int(math.floor((1.0 - x) / step + 1e-9))
    deltas = np.arange(n + 1) * step
    curve = added_noise_entropy(NoiseParams.white_noise(x), deltas)
    return [{"pd": x, "delta": float(d), "entropy": float(s)} for d, s in zip(deltas, curve)]


def cmd_sweep(args) -> int:
    if args.theta_points < 1:
        raise UsageError("--theta-points must be at least 1")
    thetas = (np.arange(args.theta_points) + 0.5) * (math.pi / 2) / args.theta_points
    if args.kind == "theta-pb":
        outer, inner = args.pb_values, [None]
    elif args.kind == "pd-b":
        outer, inner = args.pd_values, args.b_values
    else:
        outer, inner = args.pd_values, [None]
    if not outer or not inner:
        raise UsageError("sweep grid is empty")
    if args.kind == "entropy-delta" and not args.delta_step > 0:
        raise UsageError("--delta-step must be positive")
    cells = [(args.kind, x, y, thetas, args.delta_step) for x in outer for y in inner]
    rows = [r for block in pool_map(_sweep_cell, cells, args.workers) for r in block]
    emit(rows, args)
    if args.kind == "entropy-delta":
        for x in outer:
            curve = [r for r in rows if r["pd"] == x]
            best = min(curve, key=lambda r: r["entropy"])
            note(f"p_d = {x:g}: minimum at delta = {best['delta']:.4f}")
    return EXIT_OK


# --- thresholds -------------------------------------------------------------


def cmd_thresholds(args) -> int:
    if args.n < 1:
        raise UsageError("--n must be positive")
    if (args.alpha is None) != (args.beta is None):
        raise UsageError("give both --alpha and --beta, or neither")
    pairs = [(args.alpha, args.beta)] if args.alpha is not None else list(TABLE_ROWS)
    rows = []
    infeasible = False
    for quantity in ("pd_star", "pd_dt_star"):
        if args.table not in ("both", quantity):
            continue
        for a, b in pairs:
            if quantity == "pd_star":
                res = solve_pd_star(a, b, args.n, args.theta, args.step)
            else:
                res = solve_pd_delta_star(args.pd, a, b, args.n, args.theta, args.step)
            msg = "" if res.feasible else ("no feasible p_d" if quantity == "pd_star" else "no feasible p_d(dt)")
            infeasible |= not res.feasible
            rows.append(
                {
                    "quantity": quantity,
                    "alpha_sigmas": a,
                    "beta_sigmas": b,
                    "n": args.n,
                    "pd": args.pd if quantity == "pd_dt_star" else None,
                    "value": res.value,
                    "slack": res.slack,
                    "note": msg,
                }
            )
    emit(rows, args)
    return EXIT_INVALID if infeasible else EXIT_OK


# --- session ----------------------------------------------------------------


def attack_from(args):
    kind = args.attack
    if kind == "honest":
        return Honest(args.commit)
    if kind == "breidbart":
        return AttackModel.breidbart()
    if kind == "added_noise":
        return AttackModel.added_noise(args.delta_pd)
    if kind == "memory":
        return AttackModel.memory(args.pd_dt)
    if kind == "bounded_memory":
        return AttackModel.bounded_memory(args.nu, args.pd_dt)
    return AttackModel.nondemolition(args.p_nd, args.pd_dt)


def _session_job(job):
    cfg, strategy, open_as, th, seed, i = job
    transcript = run_session(cfg, strategy, substream(seed, "session", i), open_as=open_as)
    verdict = verify_transcript(transcript, cfg, th)
    t = tally(transcript)
    row = {
        "session": i,
        "strategy": transcript.strategy_tag,
        "claimed": transcript.claimed_commitment,
        "n": t.n,
        "n_b0": t.n_b(0),
        "n_b1": t.n_b(1),
        "q0_b0": t.q(0, 0),
        "q0_b1": t.q(0, 1),
        "decision": verdict.decision,
        "reason": verdict.reason,
    }
    return row, (transcript.to_json() if i == 0 else None)


def cmd_session(args) -> int:
    if args.sessions < 1:
        raise UsageError("--sessions must be at least 1")
    link = LinkParams(
        mu_photon=args.mu, alpha_abs=args.alpha_abs, length_km=args.length, eta_det=args.eta, p_dark=args.p_dark
    )
    cfg = ProtocolConfig(theta=args.theta, phi=args.phi, n_pulses=args.pulses, noise=noise_from(args), link=link)
    strategy = attack_from(args)
    if not isinstance(strategy, Honest):
        strategy.check_against(cfg.noise)
    th = Thresholds(args.alpha, args.beta, args.min_yield, args.method)
    jobs = [(cfg, strategy, args.commit, th, args.seed, i) for i in range(args.sessions)]
    results = pool_map(_session_job, jobs, args.workers)
    rows = [r for r, _ in results]
    if args.transcript:
        with open(args.transcript, "w", encoding="utf-8") as fh:
            fh.write(results[0][1])
    emit(rows, args)
    accepted = sum(r["decision"] != "reject" for r in rows)
    note(f"{strategy.describe()}: accepted {accepted}/{len(rows)}")
    return EXIT_OK


# --- zk ---------------------------------------------------------------------


def _load_graph(spec: Optional[str], cheat: bool) -> zk.Graph:
    if spec is None:
        return zk.sample_graph("dense20" if cheat else "petersen")
    if spec in zk.BUNDLED_GRAPHS:
        return zk.sample_graph(spec)
    try:
        return zk.read_graph(spec)
    except OSError as exc:
        raise ValidationError(f"cannot read graph {spec!r}: {exc.strerror}") from None


def _zk_job(job):
    g, coloring, rounds, backend_name, rechoose, seed, i = job
    res = zk.zk_session(g, coloring, rounds, substream(seed, "zk", i), zk.make_backend(backend_name), rechoose)
    last = res.rounds[-1] if res.rounds else None
    return {
        "session": i,
        "accepted": res.accepted,
        "rounds_run": res.rounds_run,
        "edge": None if last is None or last.accepted else f"{last.edge[0]}-{last.edge[1]}",
        "reason": "" if last is None else last.reason,
    }


def cmd_zk(args) -> int:
    if args.rounds < 0 or args.sessions < 1:
        raise UsageError("--rounds must be >= 0 and --sessions >= 1")
    g = _load_graph(args.graph, args.cheat)
    if args.cheat or args.rechoose:
        coloring = zk.greedy_partial_coloring(g)
    else:
        coloring = zk.three_coloring(g)
        if coloring is None:
            raise ValidationError("graph has no proper 3-colouring; use --cheat")
    p = zk.proper_fraction(g, coloring)
    jobs = [(g, coloring, args.rounds, args.backend, args.rechoose, args.seed, i) for i in range(args.sessions)]
    rows = pool_map(_zk_job, jobs, args.workers)
    emit(rows, args)
    accepted = sum(r["accepted"] for r in rows)
    note(
        f"{g.vertex_count} vertices, {len(g.edges)} edges, proper fraction {p:.4f}, "
        f"p^n = {p ** args.rounds:.4g}; accepted {accepted}/{len(rows)}"
    )
    return EXIT_OK


# --- entry point ------------------------------------------------------------


def build_parser() -> ArgumentParser:
    parser = ArgumentParser(prog="qbitcommit", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=ArgumentParser)

    p = sub.add_parser("probs", help="conditional probability table")
    add_common(p)
    add_noise_options(p)
    p.add_argument("--check-oracle", action="store_true", help="compare with the numeric Kraus pipeline")
    p.set_defaults(func=cmd_probs)

    p = sub.add_parser("sweep", help="metric surfaces and entropy curves")
    add_common(p)
    p.add_argument("--kind", choices=SWEEPS, default="theta-pd")
    p.add_argument("--theta-points", type=int, default=200)
    p.add_argument("--pd-values", type=_float_list, default=[0.0, 0.1, 0.2, 0.3])
    p.add_argument("--pb-values", type=_float_list, default=[0.0, 0.1, 0.2, 0.3])
    p.add_argument("--b-values", type=_float_list, default=[0.25, 0.5, 0.75, 1.0])
    p.add_argument("--delta-step", type=float, default=1e-3)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("thresholds", help="maximal tolerable noise for given sigma levels")
    add_common(p)
    p.add_argument("--n", type=int, default=50, help="outcomes per prepared state")
    p.add_argument("--pd", type=float, default=0.15, help="link noise for the memory threshold")
    p.add_argument("--theta", type=float, default=math.pi / 4)
    p.add_argument("--alpha", type=float, help="acceptance level in sigmas")
    p.add_argument("--beta", type=float, help="security level in sigmas")
    p.add_argument("--table", choices=("both", "pd_star", "pd_dt_star"), default="both")
    p.add_argument("--step", type=float, default=GRID_STEP)
    p.set_defaults(func=cmd_thresholds)

    p = sub.add_parser("session", help="simulate sessions and Bob's verdicts")
    add_common(p)
    add_noise_options(p)
    p.add_argument("--attack", choices=("honest",) + KINDS, default="honest")
    p.add_argument("--commit", type=int, choices=(0, 1), default=0, help="committed bit, or the bit a cheater opens")
    p.add_argument("--delta-pd", type=float, default=0.0)
    p.add_argument("--pd-dt", type=float, default=0.0)
    p.add_argument("--nu", type=float, default=1.0)
    p.add_argument("--p-nd", type=float, default=1.0)
    p.add_argument("--pulses", type=int, default=10_000)
    p.add_argument("--mu", type=float, default=LinkParams.mu_photon)
    p.add_argument("--eta", type=float, default=LinkParams.eta_det)
    p.add_argument("--length", type=float, default=LinkParams.length_km)
    p.add_argument("--alpha-abs", type=float, default=LinkParams.alpha_abs)
    p.add_argument("--p-dark", type=float, default=LinkParams.p_dark)
    p.add_argument("--alpha", type=float, default=2.0)
    p.add_argument("--beta", type=float, default=2.0)
    p.add_argument("--method", choices=("binomial", "normal"), default="binomial")
    p.add_argument("--min-yield", type=float, default=0.0)
    p.add_argument("--sessions", type=int, default=1)
    p.add_argument("--transcript", help="write the first transcript (JSON) here")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_session)

    p = sub.add_parser("zk", help="zero-knowledge 3-colouring sessions")
    add_common(p)
    p.add_argument("--graph", help=f"edge-list file or one of {', '.join(zk.BUNDLED_GRAPHS)}")
    p.add_argument("--rounds", type=int, default=20)
    p.add_argument("--sessions", type=int, default=1)
    p.add_argument("--cheat", action="store_true", help="prover uses a greedy partial colouring")
    p.add_argument("--rechoose", action="store_true", help="prover changes colours after the challenge")
    p.add_argument("--backend", choices=tuple(zk.BACKENDS), default="ideal")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_zk)
    return parser


def parse(argv: Optional[Sequence[str]] = None) -> argparse.Namespace:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    args = parser.parse_args(argv)
    if args.config:
        subparser = parser._subparsers._group_actions[0].choices[args.command]
        subparser.set_defaults(**config_defaults(subparser, load_config(args.config)))
        args = parser.parse_args(argv)
    return args


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = parse(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"qbitcommit: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValidationError as exc:
        print(f"qbitcommit: error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
