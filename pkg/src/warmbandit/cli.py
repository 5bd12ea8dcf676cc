"""Command-line entry point: ``warmbandit {simulate,bounds,tau,preset,pair}``.

Every run echoes a replay line (all arguments normalized, seed resolved) on
stderr. Failures print one ``error: code=... exit=... detail=...`` line.
Exit codes: 0 ok, 2 usage, 3 precondition, 4 I/O.
"""
import argparse
import os
import shlex
import sys

import numpy as np

from . import sim
from .bounds import BoundQuery, bound_report, format_report, impossibility_pair, impossibility_threshold, tau_star_waterfill
from .comb import CombInstance, Explicit, Influence, InfluenceGraph, MPath, TopM
from .errors import ConfigurationError, RejectedInputError
from .model import BiasBound, format_instance, read_instance
from .plot import render_plot

EXIT_OK, EXIT_USAGE, EXIT_PRECONDITION, EXIT_IO = 0, 2, 3, 4
U64_MAX = 2 ** 64 - 1


class CliError(Exception):
    def __init__(self, code, exit_status, detail):
        super().__init__(detail)
        self.code = code
        self.exit_status = exit_status
        self.detail = detail


def usage_error(detail):
    return CliError("usage", EXIT_USAGE, detail)


def precondition_error(detail):
    return CliError("precondition", EXIT_PRECONDITION, detail)


def io_error(detail):
    return CliError("io", EXIT_IO, detail)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise usage_error(message)


# -- argument value parsing --------------------------------------------------------

def _number(text):
    try:
        return float(text)
    except ValueError:
        raise usage_error(f"not a number: {text!r}") from None


def _integer(text):
    x = _number(text)
    if not x.is_integer():
        raise precondition_error(f"expected an integer, got {text!r}")
    return int(x)


def parse_ts(text):
    """``1000x10`` -> ten arms with 1000 samples; comma lists mix both forms."""
    out = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "x" in part:
            count, reps = part.split("x", 1)
            out.extend([_integer(count)] * _integer(reps))
        else:
            out.append(_integer(part))
    if not out:
        raise usage_error("empty --ts list")
    if min(out) < 0:
        raise precondition_error("offline counts must be >= 0")
    return out


def parse_grid(text):
    if text is None:
        return None
    vals = [_number(p) for p in text.split(",") if p.strip()]
    if not vals:
        raise usage_error("empty --grid")
    return tuple(vals)


def _read_lines(path):
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise io_error(f"cannot read {path}: {exc.strerror}") from None
    return [ln.split("#", 1)[0].strip() for ln in lines if ln.split("#", 1)[0].strip()]


def read_graph(path):
    edges, probs = [], []
    for i, ln in enumerate(_read_lines(path), 1):
        parts = ln.split()
        try:
            u, v, p = int(parts[0]), int(parts[1]), float(parts[2])
        except (ValueError, IndexError):
            raise io_error(f"{path} line {i}: expected 'u v p'") from None
        if len(parts) != 3:
            raise io_error(f"{path} line {i}: expected 'u v p'")
        edges.append((u, v))
        probs.append(p)
    if not edges:
        raise io_error(f"{path}: no edges")
    return InfluenceGraph.from_edges(edges), np.array(probs)


def read_actions(path):
    acts = []
    for i, ln in enumerate(_read_lines(path), 1):
        try:
            acts.append(tuple(sorted(int(x) for x in ln.split())))
        except ValueError:
            raise io_error(f"{path} line {i}: expected space-separated arm indices") from None
    return tuple(acts)


def parse_family(spec, seeds=1):
    """Returns ``(family, edge_probabilities_or_None)``."""
    kind, sep, arg = spec.partition(":")
    if not sep or not arg:
        raise usage_error(f"family must look like kind:arg, got {spec!r}")
    if kind == "topm":
        return TopM(_integer(arg)), None
    if kind == "mpath":
        return MPath(_integer(arg)), None
    if kind == "influence":
        graph, probs = read_graph(arg)
        return Influence(graph, seeds), probs
    if kind == "explicit":
        return Explicit(read_actions(arg)), None
    raise usage_error(f"unknown family kind {kind!r}")


def load_instance(path):
    try:
        return read_instance(path)
    except OSError as exc:
        raise io_error(f"cannot read {path}: {exc.strerror}") from None
    except RejectedInputError as exc:
        raise io_error(f"malformed instance file {path}: {exc}") from None


def comb_from_args(args):
    """CombInstance and bias vector from --family plus an optional --instance file."""
    family, probs = parse_family(args.family, args.seeds)
    if args.instance:
        inst, bound = load_instance(args.instance)
        mu_on, mu_off, t_s, horizon = inst.mu_on, inst.mu_off, inst.offline_counts, inst.horizon
    elif probs is not None:
        if args.t is None:
            raise usage_error("--t is required when the instance comes from a graph file")
        mu_on, mu_off, t_s, horizon, bound = probs, probs, [0] * probs.size, _integer(args.t), None
    else:
        raise usage_error("--instance is required for this family")
    comb = CombInstance(np.array(mu_on, dtype=float), np.array(mu_off, dtype=float), list(t_s), horizon, family)
    v = bound if bound is not None else BiasBound.infinite(comb.k)
    return comb, v


# -- subcommands -------------------------------------------------------------------

def _out_path(args, name):
    return os.path.join(args.out, name)


def _write(path, text):
    try:
        sim.atomic_write_text(path, text)
    except OSError as exc:
        raise io_error(f"cannot write {path}: {exc.strerror}") from None


def cmd_simulate(args, stdout):
    if args.trials < 1:
        raise precondition_error("--trials must be >= 1")
    if args.workers < 1:
        raise precondition_error("--workers must be >= 1")
    if args.stride < 1:
        raise precondition_error("--stride must be >= 1")
    if bool(args.preset) == bool(args.instance or args.family):
        raise usage_error("give either --preset or --instance/--family")
    policies = tuple(p for p in args.policies.split(",") if p) if args.policies else None
    if args.preset:
        if args.preset not in sim.PRESETS:
            raise usage_error(f"unknown preset {args.preset!r}; choose from {', '.join(sim.PRESETS)}")
        kw = {}
        if args.preset == "impossibility":
            kw = dict(beta=args.beta, eps=args.eps, c=args.c, t=_integer(args.t) if args.t else 10_000)
        points = sim.build_sweep(args.preset, parse_grid(args.grid), **kw)
        if policies:
            points = [sim.SweepPoint(p.experiment, p.param, p.instance, p.v, policies) for p in points]
    else:
        name = os.path.splitext(os.path.basename(args.instance or args.family.partition(":")[2]))[0]
        if args.family:
            inst, v = comb_from_args(args)
            default = (sim.COMB_POLICY, sim.COMB_BASELINE)
        else:
            inst, bound = load_instance(args.instance)
            v = bound if bound is not None else BiasBound.infinite(inst.k)
            default = sim.MAB_POLICIES
        points = [sim.SweepPoint(name, 0.0, inst, v, policies or default)]
    summary = sim.run_experiment(points, args.trials, seed=args.seed, workers=args.workers,
                                 trajectories=args.trajectories, fixed_offline=args.fixed_offline,
                                 allow_invalid_v=args.allow_invalid_v)
    summary_path = _out_path(args, "summary.csv")
    _write(summary_path, sim.summary_csv(summary))
    _write(_out_path(args, "raw.csv"), sim.raw_csv(summary))
    written = [summary_path, _out_path(args, "raw.csv")]
    if args.trajectories:
        path = _out_path(args, "trajectories.csv")
        try:
            sim.write_trajectory_csv(summary, path, args.stride)
        except OSError as exc:
            raise io_error(f"cannot write {path}: {exc.strerror}") from None
        written.append(path)
    if args.plot:
        path = _out_path(args, "summary.svg")
        if render_plot(summary_path, path):
            written.append(path)
        else:
            print("warning: empty summary, no plot written", file=sys.stderr)
    for r in summary.rows:
        print(f"{r.experiment},{r.policy},{sim.fmt_num(r.param)},{sim.fmt_num(r.mean)},{sim.fmt_num(r.std)},{r.trials}",
              file=stdout)
    for path in written:
        print(f"wrote {path}", file=sys.stderr)
    return EXIT_OK


def cmd_bounds(args, stdout):
    try:
        query = BoundQuery(args.epsilon, args.consistency_c, args.consistency_p, args.delta)
    except RejectedInputError as exc:
        raise precondition_error(str(exc)) from None
    inst, bound = load_instance(args.instance)
    v = bound if bound is not None else BiasBound.infinite(inst.k)
    comb = None
    if args.family:
        family, _ = parse_family(args.family, args.seeds)
        comb = CombInstance(inst.mu_on, inst.mu_off, list(inst.offline_counts), inst.horizon, family)
    text = format_report(bound_report(inst, v, query, comb))
    stdout.write(text)
    if args.out:
        _write(_out_path(args, "bounds.txt"), text)
    return EXIT_OK


def cmd_tau(args, stdout):
    t_s = parse_ts(args.ts)
    horizon = _integer(args.t)
    mass = _integer(args.mass) if args.mass is not None else None
    if horizon < 0 or (mass is not None and mass < 0):
        raise precondition_error("--t and --mass must be >= 0")
    wf = tau_star_waterfill(t_s, horizon, mass)
    lines = [f"tau_star={sim.fmt_num(wf.tau_star)}", "arm,t_s,n_star"]
    lines += [f"{a},{t_s[a]},{sim.fmt_num(wf.n_star[a])}" for a in range(len(t_s))]
    text = "\n".join(lines) + "\n"
    stdout.write(text)
    if args.out:
        _write(_out_path(args, "tau.csv"), text)
    return EXIT_OK


def _point_text(pt):
    head = f"# experiment={pt.experiment} param={sim.fmt_num(pt.param)} policies={','.join(pt.policies)}\n"
    body = format_instance(pt.instance, pt.v)
    fam = getattr(pt.instance, "family", None)
    if isinstance(fam, MPath):
        body += f"family = mpath:{fam.m}\n"
    elif isinstance(fam, TopM):
        body += f"family = topm:{fam.m}\n"
    return head + body


def cmd_preset(args, stdout):
    if args.name not in sim.PRESETS:
        raise usage_error(f"unknown preset {args.name!r}; choose from {', '.join(sim.PRESETS)}")
    points = sim.build_sweep(args.name, parse_grid(args.grid))
    for i, pt in enumerate(points):
        text = _point_text(pt)
        stdout.write(text)
        if args.out:
            _write(_out_path(args, f"{pt.experiment}_{i:03d}.txt"), text)
    return EXIT_OK


def _join(xs):
    return ",".join(sim.fmt_num(x) for x in xs)


def cmd_pair(args, stdout):
    horizon = _number(args.t)
    ts = _integer(args.ts)
    thr = impossibility_threshold(args.eps, horizon) if horizon > 1 else float("nan")
    p, q = impossibility_pair(args.beta, args.eps, args.c, horizon, (ts, ts))
    lines = [
        f"threshold={sim.fmt_num(thr)}",
        "hypothesis=holds",
        f"gap={sim.fmt_num(horizon ** -args.beta)}",
        f"P.mu_on={_join(p.mu_on)}", f"P.mu_off={_join(p.mu_off)}",
        f"Q.mu_on={_join(q.mu_on)}", f"Q.mu_off={_join(q.mu_off)}",
        f"offline_identical={'true' if np.array_equal(p.mu_off, q.mu_off) else 'false'}",
        f"P.optimal_arm={int(np.argmax(p.mu_on))}", f"Q.optimal_arm={int(np.argmax(q.mu_on))}",
    ]
    stdout.write("\n".join(lines) + "\n")
    return EXIT_OK


# -- parser ------------------------------------------------------------------------

def _seed(text):
    try:
        s = int(text, 0)
    except ValueError:
        raise usage_error(f"seed must be an integer, got {text!r}") from None
    if not 0 <= s <= U64_MAX:
        raise precondition_error("seed must lie in [0, 2^64)")
    return s


def _shared(p, out_required=False):
    p.add_argument("--seed", type=_seed, default=None, help="root seed (u64); drawn from OS entropy if omitted")
    p.add_argument("--out", required=out_required, default=None, help="output directory")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--trajectories", action=argparse.BooleanOptionalAction, default=False)
    p.add_argument("--plot", action=argparse.BooleanOptionalAction, default=True)


def build_parser():
    parser = _Parser(prog="warmbandit", description="Bandits with possibly biased offline data.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    s = sub.add_parser("simulate", help="run a preset sweep or an instance file")
    _shared(s, out_required=True)
    s.add_argument("--preset")
    s.add_argument("--instance")
    s.add_argument("--family", help="topm:m | mpath:m | influence:graphfile | explicit:actionsfile")
    s.add_argument("--seeds", type=int, default=1, help="seed budget for influence families")
    s.add_argument("--grid", help="comma-separated override of the preset parameter grid")
    s.add_argument("--policies", help="comma-separated policy names")
    s.add_argument("--trials", type=int, default=50)
    s.add_argument("--stride", type=int, default=1, help="keep every n-th round in trajectories.csv")
    s.add_argument("--fixed-offline", action=argparse.BooleanOptionalAction, default=False)
    s.add_argument("--allow-invalid-v", action=argparse.BooleanOptionalAction, default=False)
    s.add_argument("--beta", type=float, default=0.25)
    s.add_argument("--eps", type=float, default=0.2)
    s.add_argument("--c", type=float, default=0.1)
    s.add_argument("--t", default=None, help="horizon (impossibility preset, graph-file instances)")
    s.set_defaults(func=cmd_simulate)

    b = sub.add_parser("bounds", help="key=value bound report for an instance file")
    _shared(b)
    b.add_argument("--instance", required=True)
    b.add_argument("--family")
    b.add_argument("--seeds", type=int, default=1)
    b.add_argument("--epsilon", type=float, default=0.5)
    b.add_argument("--consistency-c", type=float, default=1.0)
    b.add_argument("--consistency-p", type=float, default=0.5)
    b.add_argument("--delta", type=float, default=0.1)
    b.set_defaults(func=cmd_bounds)

    t = sub.add_parser("tau", help="water-filling optimum tau* and allocation n*")
    _shared(t)
    t.add_argument("--ts", required=True, help="offline counts, e.g. 1000x10 or 5,0,20")
    t.add_argument("--t", required=True)
    t.add_argument("--mass", default=None, help="total online pulls (defaults to T)")
    t.set_defaults(func=cmd_tau)

    pr = sub.add_parser("preset", help="print the instances of a preset sweep")
    _shared(pr)
    pr.add_argument("name")
    pr.add_argument("--grid")
    pr.set_defaults(func=cmd_preset)

    pa = sub.add_parser("pair", help="impossibility instance pair")
    _shared(pa)
    pa.add_argument("--beta", type=float, required=True)
    pa.add_argument("--eps", type=float, required=True)
    pa.add_argument("--c", type=float, required=True)
    pa.add_argument("--t", required=True)
    pa.add_argument("--ts", default="0", help="offline samples per arm")
    pa.set_defaults(func=cmd_pair)
    return parser, sub


def replay_line(args, subparser):
    """Normalized argument echo that reproduces the run."""
    words = ["warmbandit", args.command]
    for act in subparser._actions:
        if act.dest in ("help",) or not act.option_strings and act.dest == "command":
            continue
        val = getattr(args, act.dest, None)
        if not act.option_strings:
            words.append(str(val))
            continue
        flag = act.option_strings[0]
        if isinstance(act, argparse.BooleanOptionalAction):
            words.append(flag if val else "--no-" + flag[2:])
        elif val is not None:
            words += [flag, str(val)]
    return "replay: " + shlex.join(words)


def main(argv=None, stdout=None):
    stdout = sys.stdout if stdout is None else stdout
    parser, sub = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.seed is None:
            args.seed = int(np.random.SeedSequence().generate_state(1, np.uint64)[0])
        if getattr(args, "out", None):
            args.out = os.path.abspath(args.out)
        if getattr(args, "instance", None):
            args.instance = os.path.abspath(args.instance)
        fam = getattr(args, "family", None)
        if fam and fam.partition(":")[0] in ("influence", "explicit"):
            kind, _, path = fam.partition(":")
            args.family = f"{kind}:{os.path.abspath(path)}"
        print(replay_line(args, sub.choices[args.command]), file=sys.stderr)
        return args.func(args, stdout)
    except CliError as exc:
        err = exc
    except ConfigurationError as exc:
        err = usage_error(str(exc))
    except RejectedInputError as exc:
        err = precondition_error(str(exc))
    except OSError as exc:
        err = io_error(str(exc))
    detail = " ".join(err.detail.split())
    print(f"error: code={err.code} exit={err.exit_status} detail={detail}", file=sys.stderr)
    return err.exit_status


def main_exit():
    sys.exit(main())


if __name__ == "__main__":
    main_exit()
