"""Command-line entry point: ``ckgdefense <command> ...``.

Exit codes: 0 success, 2 bad input or configuration, 1 internal error
(including a golden-file mismatch).
"""

from __future__ import annotations

import argparse
import difflib
import json
import logging
import sys
from pathlib import Path

from . import fixture_path
from .config import Config, ConfigError, load_config
from .kg import Graph, NTriplesError, QuerySyntaxError, ValidationError, evaluate, prefix_aliases, read_graph, write_graph
from .observe import FlowParseError, load_policies, parse_flows
from .pipeline import PipelineError, run_pipeline
from .stix import FetchError, fetch_collection, map_to_triples

log = logging.getLogger("ckgdefense")

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_USAGE = 2

GOLDEN_RULES = "golden/rules.txt"
GOLDEN_RANKED = "golden/ranked.json"


class UsageError(Exception):
    """Bad input from the user; maps to exit code 2."""


def _read_text(path) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror or exc}") from None


def _write_text(path, text: str) -> None:
    p = Path(path)
    if p.parent and not p.parent.exists():
        p.parent.mkdir(parents=True)
    p.write_text(text, encoding="utf-8")


def _load_graph(path, must_exist: bool = True) -> Graph:
    if path is None:
        raise UsageError("no graph file given (use --graph or graph_path in the config)")
    if not Path(path).exists():
        if must_exist:
            raise UsageError(f"graph file not found: {path}")
        return Graph()
    try:
        return read_graph(path)
    except NTriplesError as exc:
        raise UsageError(f"{path}: {exc}") from None


def parse_seeds(text: str) -> tuple[int, ...]:
    """``"0-19"``, ``"1,4,9"`` or a mix such as ``"0-4,10"``."""
    out: list[int] = []
    try:
        for part in text.split(","):
            part = part.strip()
            if not part:
                continue
            lo, sep, hi = part.partition("-")
            if sep and lo:
                a, b = int(lo), int(hi)
                if b < a:
                    raise ValueError(part)
                out.extend(range(a, b + 1))
            else:
                out.append(int(part))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad seed list {text!r}") from None
    if not out:
        raise argparse.ArgumentTypeError("seed list is empty")
    return tuple(out)


def _config(args) -> Config:
    overrides = {}
    for key in ("namespace", "threshold", "eps", "window", "beta", "hops", "gamma", "alpha", "epsilon", "episodes", "seed"):
        overrides[key] = getattr(args, key, None)
    overrides["seeds"] = getattr(args, "seeds", None)
    for key, attr in (("graph_path", "graph"), ("policy_path", "policies"), ("scenario_path", "scenario"), ("families_path", "families")):
        val = getattr(args, attr, None)
        overrides[key] = str(val) if val is not None else None
    return load_config(args.config, overrides)


# -- commands ---------------------------------------------------------------


def cmd_ingest(args) -> int:
    cfg = _config(args)
    graph = _load_graph(cfg.graph_path, must_exist=False)
    try:
        bundle = fetch_collection(args.bundle)
    except FetchError as exc:
        raise UsageError(str(exc)) from None
    mapping = map_to_triples(bundle, cfg.ontology())
    for w in mapping.warnings:
        log.warning("%s", w)
    before = len(graph)
    for t in mapping.triples:
        graph.add(t)
    write_graph(graph, cfg.graph_path)
    print(f"added: {len(graph) - before}")
    print(f"skipped: {len(mapping.skipped)}")
    return EXIT_OK


def cmd_query(args) -> int:
    cfg = _config(args)
    graph = _load_graph(cfg.graph_path)
    text = _read_text(args.file) if args.file else args.query
    if text is None:
        raise UsageError("give a query string or --file")
    try:
        rows = evaluate(graph, text, prefix_aliases(cfg.namespace))
    except QuerySyntaxError as exc:
        raise UsageError(f"query syntax error at position {exc.position}: {exc}") from None
    except ValidationError as exc:
        raise UsageError(f"invalid query: {exc}") from None
    if rows:
        cols = list(rows[0])
    else:
        from .kg import parse_query

        cols = list(parse_query(text, prefix_aliases(cfg.namespace)).projected)
    if not args.no_header:
        print("\t".join("?" + c for c in cols))
    for r in rows:
        print("\t".join(r[c].n3() for c in cols))
    return EXIT_OK


def _pipeline_inputs(args, cfg: Config):
    graph = _load_graph(cfg.graph_path)
    try:
        records = parse_flows(_read_text(args.flows))
    except FlowParseError as exc:
        raise UsageError(f"{args.flows}: {exc}") from None
    policies = []
    if cfg.policy_path:
        try:
            policies = load_policies(_read_text(cfg.policy_path))
        except (ValueError, KeyError, TypeError) as exc:
            raise UsageError(f"{cfg.policy_path}: {exc}") from None
    return graph, records, policies


def cmd_observe(args) -> int:
    cfg = _config(args)
    graph, records, policies = _pipeline_inputs(args, cfg)
    try:
        res = run_pipeline(graph, records, policies, cfg)
    except PipelineError as exc:
        raise UsageError(str(exc)) from None
    accepted = set(map(id, res.accepted))
    for obs in res.observations:
        row = obs.to_dict()
        row["accepted"] = id(obs) in accepted
        print(json.dumps(row, sort_keys=True))
    if args.rejections:
        _write_text(args.rejections, "".join(r.to_json() + "\n" for r in res.rejected))
    return EXIT_OK


def cmd_rules(args) -> int:
    cfg = _config(args)
    graph, records, policies = _pipeline_inputs(args, cfg)
    try:
        res = run_pipeline(graph, records, policies, cfg)
    except PipelineError as exc:
        print(f"error: stage {exc.stage} failed: {exc}", file=sys.stderr)
        return EXIT_USAGE
    rules, ranked = res.rules_text(), res.ranked_json()
    out = Path(args.out)
    ranked_path = Path(args.ranked) if args.ranked else out.with_suffix(".ranked.json")
    _write_text(out, rules)
    _write_text(ranked_path, ranked)
    print(f"rules: {len(res.rules)} -> {out}")
    print(f"observations: {len(res.observations)} accepted: {len(res.accepted)} rejected: {len(res.rejected)}")

    golden_rules = Path(args.golden) if args.golden else fixture_path(GOLDEN_RULES)
    golden_ranked = golden_rules.with_name(Path(GOLDEN_RANKED).name)
    if args.bless:
        _write_text(golden_rules, rules)
        _write_text(golden_ranked, ranked)
        print(f"blessed {golden_rules}")
    elif args.golden is not None or args.check:
        expected = _read_text(golden_rules)
        if expected != rules:
            diff = difflib.unified_diff(expected.splitlines(True), rules.splitlines(True), str(golden_rules), str(out))
            sys.stderr.writelines(diff)
            print("error: rule file differs from the golden file", file=sys.stderr)
            return EXIT_INTERNAL
        print(f"matches golden {golden_rules}")
    return EXIT_OK


def _scenario_and_graph(cfg: Config, guided: bool):
    from .rl.scenario import ScenarioError, load_scenario

    path = cfg.scenario_path or fixture_path("scenario.json")
    try:
        scenario = load_scenario(path)
    except OSError as exc:
        raise UsageError(f"cannot read scenario {path}: {exc.strerror or exc}") from None
    except (ScenarioError, ValueError, KeyError, TypeError) as exc:
        raise UsageError(f"invalid scenario {path}: {exc}") from None
    graph = None
    if guided:
        gp = cfg.graph_path or fixture_path("ckg.nt")
        graph = _load_graph(gp)
    return scenario, graph


def cmd_simulate(args) -> int:
    from .rl.game import Game
    from .rl.protocol import selfplay_protocol

    cfg = _config(args)
    if args.offline:
        return _simulate_offline(args, cfg)
    scenario, graph = _scenario_and_graph(cfg, args.guided)
    label = "guided" if args.guided else "unguided"
    Game(scenario)  # validates the layout before spawning workers
    report = selfplay_protocol(scenario, cfg.shaping(), graph, cfg.episodes, cfg.seeds, label, workers=args.workers)
    text = report.to_json()
    if args.out:
        _write_text(args.out, text)
        log.info("wrote %s", args.out)
    else:
        sys.stdout.write(text)
    if args.timing:
        print(f"wall clock: {report.wall_clock_s:.2f} s", file=sys.stderr)
    return EXIT_OK


def _simulate_offline(args, cfg: Config) -> int:
    from .rl.families import FamilyError, load_families
    from .rl.game import Game
    from .rl.offline import offline_protocol

    scenario, graph = _scenario_and_graph(cfg, True)
    fpath = cfg.families_path or fixture_path("families.json")
    try:
        families = load_families(fpath)
        game = Game(scenario)
        for fam in families:
            fam.check(game)
    except OSError as exc:
        raise UsageError(f"cannot read families {fpath}: {exc.strerror or exc}") from None
    except (FamilyError, ValueError, KeyError, TypeError) as exc:
        raise UsageError(f"invalid families file {fpath}: {exc}") from None
    out = {}
    for fam in families:
        reports = offline_protocol(
            game, fam, graph, cfg.shaping(), log_episodes=args.log_episodes, iterations=args.iterations, seeds=cfg.seeds, log_seed=cfg.seed
        )
        out[fam.name] = {k: r.to_dict() for k, r in reports.items()}
    text = json.dumps(out, indent=2, sort_keys=True) + "\n"
    if args.out:
        _write_text(args.out, text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _fmt(summary) -> str:
    if summary is None:
        return "n/a"
    return f"{summary['mean']:.4f} ± {summary['std']:.4f}"


def render_comparison(a: dict, b: dict) -> str:
    """Side-by-side table of two metrics reports, with the difference of means."""
    from .rl.evaluate import MetricsReport

    ra, rb = MetricsReport.from_dict(a), MetricsReport.from_dict(b)
    la, lb = ra.label or "A", rb.label or "B"
    lines = [f"{'metric':<16}{la:>22}{lb:>22}{'diff':>12}"]
    for name in ("availability", "episode_length", "detection_rate"):
        sa, sb = getattr(ra, name), getattr(rb, name)
        diff = f"{sa['mean'] - sb['mean']:+.4f}" if sa and sb else "n/a"
        lines.append(f"{name:<16}{_fmt(sa):>22}{_fmt(sb):>22}{diff:>12}")
    sa, sb = ra.episode_length, rb.episode_length
    if sa and sb and sb["mean"]:
        lines.append(f"{'length change':<16}{'':>22}{'':>22}{(sa['mean'] - sb['mean']) / sb['mean']:>+12.2%}")
    lines.append(f"{'seeds':<16}{len(ra.per_seed):>22}{len(rb.per_seed):>22}")
    return "\n".join(lines) + "\n"


def cmd_report(args) -> int:
    docs = []
    for p in (args.first, args.second):
        try:
            docs.append(json.loads(_read_text(p)))
        except json.JSONDecodeError as exc:
            raise UsageError(f"{p}: not a metrics report: {exc}") from None
    try:
        text = render_comparison(*docs)
    except (KeyError, TypeError) as exc:
        raise UsageError(f"not a metrics report: missing {exc}") from None
    sys.stdout.write(text)
    return EXIT_OK


# -- parser -----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ckgdefense", description=__doc__.splitlines()[0])
    p.add_argument("--config", help="JSON config file (default: $CKG_CONFIG)")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("ingest", help="map a STIX bundle into the graph file")
    s.add_argument("bundle", help="bundle file path or TAXII/bundle URL")
    s.add_argument("--graph", help="N-Triples graph to update (created if missing)")
    s.add_argument("--namespace")
    s.set_defaults(func=cmd_ingest)

    s = sub.add_parser("query", help="run a SELECT query against the graph")
    s.add_argument("query", nargs="?")
    s.add_argument("--file", help="read the query from a file")
    s.add_argument("--graph")
    s.add_argument("--namespace")
    s.add_argument("--no-header", action="store_true")
    s.set_defaults(func=cmd_query)

    for name, func, help_ in (
        ("observe", cmd_observe, "construct and verify observations from flows"),
        ("rules", cmd_rules, "run the observation-to-rule pipeline"),
    ):
        s = sub.add_parser(name, help=help_)
        s.add_argument("--flows", required=True, help="flow CSV")
        s.add_argument("--policies", help="admin policy JSON array")
        s.add_argument("--graph")
        s.add_argument("--threshold", type=float)
        s.add_argument("--eps", type=float)
        s.add_argument("--window", type=float)
        s.add_argument("--namespace")
        s.set_defaults(func=func)
        if name == "observe":
            s.add_argument("--rejections", help="write rejected observations as JSON lines")
        else:
            s.add_argument("--out", required=True, help="rule file to write")
            s.add_argument("--ranked", help="ranked hypotheses JSON (default: <out>.ranked.json)")
            s.add_argument("--golden", help="compare against this golden rule file")
            s.add_argument("--check", action="store_true", help="compare against the bundled golden file")
            s.add_argument("--bless", action="store_true", help="overwrite the golden file with this run")

    s = sub.add_parser("simulate", help="train and evaluate defenders on a scenario")
    g = s.add_mutually_exclusive_group()
    g.add_argument("--guided", dest="guided", action="store_true", default=True)
    g.add_argument("--unguided", dest="guided", action="store_false")
    s.add_argument("--offline", action="store_true", help="offline prior vs zero initialisation per attacker family")
    s.add_argument("--scenario")
    s.add_argument("--graph")
    s.add_argument("--families")
    s.add_argument("--episodes", type=int)
    s.add_argument("--seeds", type=parse_seeds, help="e.g. 0-19 or 1,2,3")
    s.add_argument("--seed", type=int, help="log seed for --offline")
    s.add_argument("--beta", type=float)
    s.add_argument("--hops", type=int)
    s.add_argument("--gamma", type=float)
    s.add_argument("--alpha", type=float)
    s.add_argument("--epsilon", type=float)
    s.add_argument("--log-episodes", type=int, default=200)
    s.add_argument("--iterations", type=int, default=25)
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--out", help="write the report here instead of stdout")
    s.add_argument("--timing", action="store_true", help="print wall-clock time to stderr")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("report", help="compare two metrics reports")
    s.add_argument("first")
    s.add_argument("second")
    s.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except (UsageError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception:
        log.exception("internal error")
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
