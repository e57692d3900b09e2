"""Command-line entry point: ingest, segment, sweep, analyze, synth, report."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .bursts import SegmentationConfig, segment_corpus
from .errors import ConfigError, CorpusError, EmptyGroupError, PeerburstsError, ValidationError
from .events import FilterConfig, build_corpus, filter_users, read_posts
from .moods import load_mood_map
from .pipeline import (
    EXIT_EMPTY_GROUP,
    EXIT_OK,
    EXIT_VALIDATION,
    FEATURES,
    RunConfig,
    bursts_jsonl,
    corpus_summary,
    dumps,
    run_analyze,
    run_sweep,
    write_atomic,
)
from .synth import GeneratorConfig, generate_corpus, write_corpus

log = logging.getLogger("peerbursts")


def _formats(values):
    out = set()
    for v in values or ["csv,json"]:
        out.update(x.strip() for x in v.split(",") if x.strip())
    return frozenset(out)


def _common(p):
    p.add_argument("--input", help="posts JSONL file")
    p.add_argument("--out-dir", default="out")
    p.add_argument("--n", type=float, default=75.0, help="break multiplier on the median gap")
    p.add_argument("--lexicon", help="support/affect lexicon JSON")
    p.add_argument("--moc-phrases", help="MOC phrase list JSON")
    p.add_argument("--mood-map", help="mood group map JSON")
    p.add_argument("--filter", help="user filter JSON")
    p.add_argument("--format", action="append", help="csv, json or csv,json (repeatable)")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--max-error-rate", type=float, default=0.0,
                   help="tolerated fraction of bad input lines")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    _common(common)
    ap = argparse.ArgumentParser(prog="peerbursts", description=__doc__)
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="cmd", required=True)

    sub.add_parser("ingest", parents=[common], help="validate input and summarise the corpus")

    p = sub.add_parser("segment", parents=[common], help="write bursts.jsonl")
    p.add_argument("--out", help="output path (default OUT_DIR/bursts.jsonl)")

    p = sub.add_parser("sweep", parents=[common], help="bursts/month as a function of N")
    p.add_argument("--n-from", type=float, default=1.0)
    p.add_argument("--n-to", type=float, default=150.0)
    p.add_argument("--n-step", type=float, default=1.0)
    p.add_argument("--out", help="output path (default OUT_DIR/sweep.csv)")

    p = sub.add_parser("analyze", parents=[common], help="full pipeline and report")
    p.add_argument("--features", help="comma-separated comparison features; known: " + ",".join(sorted(FEATURES)))
    p.add_argument("--conditions", help="comma-separated robustness conditions, e.g. n_posts>=15")
    p.add_argument("--ks-method", choices=("asymptotic", "permutation"), default="asymptotic")
    p.add_argument("--no-intermediates", action="store_true")

    p = sub.add_parser("synth", parents=[common], help="generate a synthetic corpus")
    p.add_argument("--config", help="generator config JSON")
    p.add_argument("--n-users", type=int)
    p.add_argument("--out", required=True, help="posts JSONL path")
    p.add_argument("--truth", help="ground-truth JSON path")

    p = sub.add_parser("report", parents=[common], help="print a summary of OUT_DIR/report.json")
    p.add_argument("--report", help="report.json path")
    return ap


def _load(args):
    mood_map = load_mood_map(args.mood_map)
    parsed = read_posts(args.input, mood_map)
    for e in parsed.errors[:20]:
        log.warning("%s", e)
    parsed.raise_if_over(args.max_error_rate)
    raw = build_corpus(parsed.posts, mood_map)
    rules = FilterConfig.from_json(args.filter) if args.filter else FilterConfig()
    return parsed, raw, filter_users(raw, rules)


def _need_input(args):
    if not args.input:
        raise ConfigError(f"{args.cmd} needs --input")


def cmd_ingest(args):
    _need_input(args)
    parsed, raw, corpus = _load(args)
    summary = {"n_lines": parsed.n_lines, "n_errors": len(parsed.errors), **corpus_summary(raw, corpus)}
    sys.stdout.write(dumps(summary))
    return EXIT_OK


def cmd_segment(args):
    _need_input(args)
    _, _, corpus = _load(args)
    bursts = segment_corpus(corpus, SegmentationConfig(args.n))
    out = Path(args.out or Path(args.out_dir) / "bursts.jsonl")
    write_atomic(out, bursts_jsonl(bursts))
    log.info("wrote %d bursts to %s", sum(len(b) for b in bursts.values()), out)
    return EXIT_OK


def cmd_sweep(args):
    _need_input(args)
    _, _, corpus = _load(args)
    out = Path(args.out or Path(args.out_dir) / "sweep.csv")
    run_sweep(corpus, args.n_from, args.n_to, args.n_step, out)
    return EXIT_OK


def cmd_analyze(args):
    _need_input(args)
    kw = {}
    if args.features:
        kw["features"] = tuple(f.strip() for f in args.features.split(",") if f.strip())
    if args.conditions:
        kw["conditions"] = tuple(c.strip() for c in args.conditions.split(",") if c.strip())
    cfg = RunConfig(
        input=args.input,
        out_dir=args.out_dir,
        n_multiplier=args.n,
        filter=FilterConfig.from_json(args.filter) if args.filter else FilterConfig(),
        lexicon_path=args.lexicon,
        moc_phrases_path=args.moc_phrases,
        mood_map_path=args.mood_map,
        formats=_formats(args.format),
        max_error_rate=args.max_error_rate,
        ks_method=args.ks_method,
        write_intermediates=not args.no_intermediates,
        **kw,
    )
    res = run_analyze(cfg)
    for note in res.report["notices"]:
        log.warning("%s", note)
    log.info("wrote %s to %s", ", ".join(res.files), cfg.out_dir)
    return res.exit_code


def cmd_synth(args):
    cfg = GeneratorConfig.from_json(args.config) if args.config else GeneratorConfig()
    over = {}
    if args.seed is not None:
        over["seed"] = args.seed
    if args.n_users is not None:
        over["n_users"] = args.n_users
    if over:
        cfg = GeneratorConfig.from_dict({**cfg.to_dict(), **over})
    posts, truth = generate_corpus(cfg)
    write_corpus(posts, args.out)
    if args.truth:
        write_atomic(Path(args.truth), truth.to_json())
    log.info("wrote %d posts for %d users to %s", len(posts), cfg.n_users, args.out)
    return EXIT_OK


def cmd_report(args):
    path = Path(args.report or Path(args.out_dir) / "report.json")
    rep = json.loads(path.read_text(encoding="utf-8"))
    c, b, h = rep["corpus"], rep["bursts"], rep["cohort"]
    lines = [
        f"peerbursts {rep['tool']['version']}  config {rep['config_hash'][:12]}",
        f"users {c['n_users']} of {c['n_users_total']}, posts {c['n_posts']}, "
        f"median active age {c['active_age_days_median']:.1f} d",
        f"bursts {b['n']}, mean length {b['mean_posts']:.2f} posts, "
        f"mean span {b['mean_span_days']:.3f} d, mean burstiness {b['burstiness_mean']:.4f}",
        f"MOC: {h['pct_users_with_moc']:.2f}% of users, {h['pct_bursts_with_moc']:.2f}% of bursts",
    ]
    if rep["comparison"]:
        lines.append("")
        lines.append(f"{'feature':28s} {'pos mean':>10s} {'neg mean':>10s} {'D':>7s} {'p':>10s}")
        for r in rep["comparison"]:
            lines.append(f"{r['feature']:28s} {r['pos_mean']:10.4f} {r['neg_mean']:10.4f} "
                         f"{r['d_stat']:7.4f} {r['p_value']:10.3g}")
    if rep["robustness"]:
        lines.append("")
        for r in rep["robustness"]:
            ratio = "n/a" if r["ratio"] is None else f"{r['ratio']:.2f}"
            lines.append(f"{r['condition']:28s} {r['mean_conditioned']:8.4f} vs "
                         f"{r['mean_complement']:8.4f}  ratio {ratio}  p {r['p_value']:.3g}")
    for n in rep["notices"]:
        lines.append(f"notice: {n}")
    print("\n".join(lines))
    return rep.get("exit_code", EXIT_OK)


COMMANDS = {
    "ingest": cmd_ingest,
    "segment": cmd_segment,
    "sweep": cmd_sweep,
    "analyze": cmd_analyze,
    "synth": cmd_synth,
    "report": cmd_report,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.cmd](args)
    except ValidationError as e:
        log.error("%s", e)
        return EXIT_VALIDATION
    except EmptyGroupError as e:
        log.error("%s", e)
        return EXIT_EMPTY_GROUP
    except (ConfigError, CorpusError, PeerburstsError, OSError) as e:
        log.error("%s", e)
        return 1


if __name__ == "__main__":
    sys.exit(main())
