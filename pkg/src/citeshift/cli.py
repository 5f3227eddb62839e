"""Command line entry point.

Exit codes: 0 success, 1 data or runtime error, 2 usage error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
import tempfile
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .categories import categories_to_csv, macro_journal_change, read_category_scheme, spearman_rho
from .entropy import InformationError
from .environment import (
    DelineationError,
    correlation_matrix,
    delineate,
    factor_report_csv,
    factor_solution,
    map_csv,
    map_dot,
    mds_embed,
    track_seed,
)
from .ingest import (
    AXES,
    ParseError,
    ValidationError,
    align_years,
    apply_name_changes,
    canonical_id,
    drop_single_relations,
    read_name_changes,
    read_snapshot,
    snapshot_to_text,
    summary_stats,
)
from .rankings import (
    build_change_report,
    file_level_change,
    matrix_term_ranking,
    normalized_ranking,
    report_to_json,
    report_to_csv,
    rows_to_csv,
    vector_change_ranking,
)
from .synth import SynthConfig, default_scenario, generate_pair, matthew_scenario

log = logging.getLogger("citeshift")

SCENARIOS = {
    "default": default_scenario,
    "matthew": matthew_scenario,
    "null": lambda: SynthConfig(rng_seed=6),
}


def _sha256(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _created_utc() -> str:
    # honour SOURCE_DATE_EPOCH so that repeated runs can be byte-identical
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    when = datetime.fromtimestamp(int(epoch), timezone.utc) if epoch else datetime.now(timezone.utc)
    return when.isoformat(timespec="seconds")


def write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


class Outputs:
    """Collects written files and emits the run manifest next to them."""

    def __init__(self, out_dir: str | Path, command: str, args: argparse.Namespace):
        self.dir = Path(out_dir)
        self.command = command
        self.args = args
        self.paths: list[str] = []

    def write(self, name: str, text: str) -> Path:
        path = self.dir / name
        write_atomic(path, text)
        self.paths.append(str(path))
        return path

    def manifest(self, inputs: list[str]) -> Path:
        params = {
            k: v for k, v in sorted(vars(self.args).items()) if k not in ("func", "command")
        }
        manifest = {
            "command": self.command,
            "tool_version": __version__,
            "inputs": {str(p): _sha256(p) for p in inputs},
            "parameters": params,
            "outputs": list(self.paths),
            "created_utc": _created_utc(),
        }
        path = self.dir / f"{self.command}_manifest.json"
        write_atomic(path, json.dumps(manifest, indent=2, default=str) + "\n")
        return path


def _load_pair(args):
    prior = read_snapshot(args.prior)
    post = read_snapshot(args.posterior)
    if args.changes:
        changes = read_name_changes(args.changes)
        prior, warns = apply_name_changes(prior, changes)
        post, _ = apply_name_changes(post, changes)
        for w in warns:
            log.warning(w)
    if not args.keep_singles:
        prior, post = drop_single_relations(prior), drop_single_relations(post)
    return prior, post


def _inputs(args, *extra) -> list[str]:
    paths = [args.prior, args.posterior] + ([args.changes] if args.changes else [])
    return paths + [p for p in extra if p]


def cmd_stats(args) -> int:
    stats = summary_stats(read_snapshot(args.file))
    text = json.dumps(stats.to_dict(), indent=2) + "\n"
    sys.stdout.write(text)
    if args.out:
        out = Outputs(args.out, "stats", args)
        out.write("stats.json", text)
        out.manifest([args.file])
    return 0


def cmd_diff(args) -> int:
    prior, post = _load_pair(args)
    report = build_change_report(align_years(prior, post), args.axis)
    text = report_to_json(report)
    sys.stdout.write(text)
    if args.out:
        out = Outputs(args.out, "diff", args)
        out.write(f"diff_{args.axis}.json", text)
        out.write(f"diff_{args.axis}.csv", report_to_csv(report))
        out.manifest(_inputs(args))
    return 0


def cmd_rank(args) -> int:
    prior, post = _load_pair(args)
    pair = align_years(prior, post)
    ax = args.axis
    out = Outputs(args.out, "rank", args)

    file_i, deltas = file_level_change(pair, ax)
    ordered = sorted(deltas.items(), key=lambda kv: (-kv[1], kv[0]))
    out.write(f"rank_{ax}_file_level.csv", rows_to_csv(("journal", "delta_i_bits"), ordered))

    vectors = vector_change_ranking(pair, ax)
    out.write(
        f"rank_{ax}_vector.csv",
        rows_to_csv(("journal", "i_bits", "n"), ((r.journal, r.i_bits, r.n_comparable) for r in vectors.results)),
    )
    norm = normalized_ranking(vectors.results)
    cols = ("journal", "i_per_log2n", "i_per_n", "n")
    for label, rows in (("log2n", norm.by_log2n), ("n", norm.by_n)):
        out.write(
            f"rank_{ax}_normalized_{label}.csv",
            rows_to_csv(cols, ((r.journal, r.i_per_log2n, r.i_per_n, r.n_comparable) for r in rows)),
        )
    out.write(
        f"rank_{ax}_matrix.csv",
        rows_to_csv(("journal", "matrix_term"), matrix_term_ranking(pair, ax)),
    )
    omitted = sorted(vectors.omitted.items()) + [(j, "channel too narrow: N < 2") for j in norm.omitted]
    out.write(f"rank_{ax}_omitted.csv", rows_to_csv(("journal", "reason"), sorted(omitted)))
    out.manifest(_inputs(args))
    log.info("file-level I = %.3f millibits", file_i * 1000)
    return 0


def cmd_categories(args) -> int:
    prior, post = _load_pair(args)
    scheme = read_category_scheme(args.scheme)
    vectors = vector_change_ranking(align_years(prior, post), args.axis)
    agg = macro_journal_change(vectors.results, scheme)
    out = Outputs(args.out, "categories", args)
    out.write(f"categories_{args.axis}.csv", categories_to_csv(agg.rows))
    rho = None
    if len(agg.rows) >= 2:
        try:
            rho = spearman_rho([r.n_journals for r in agg.rows], [r.i_sum for r in agg.rows])
        except ValueError:
            rho = None
    summary = {
        "axis": args.axis,
        "categories": len(agg.rows),
        "skipped_journals": len(agg.skipped),
        "spearman_size_vs_i_sum": rho,
    }
    out.write(f"categories_{args.axis}_summary.json", json.dumps(summary, indent=2) + "\n")
    out.manifest(_inputs(args, args.scheme))
    return 0


def _threshold_label(t: float) -> str:
    return f"{t:.2f}".replace(".", "p")


def cmd_env(args) -> int:
    prior, post = _load_pair(args)
    seed = canonical_id(args.seed)
    thresholds = [args.threshold] + ([args.zoom_threshold] if args.zoom else [])
    out = Outputs(args.out, "env", args)
    summary = {"seed": seed, "axis": args.axis, "runs": []}
    for t in thresholds:
        solutions = {}
        for label, snap in (("prior", prior), ("posterior", post)):
            env = delineate(snap, seed, t)
            corr = correlation_matrix(env, args.axis)
            sol = factor_solution(corr, rotate=not args.no_rotate)
            stem = f"env_{seed.replace(' ', '_')}_{label}_t{_threshold_label(t)}"
            out.write(f"{stem}_factors.csv", factor_report_csv(sol))
            run = {
                "year": label,
                "threshold_pct": t,
                "journals": len(env.journals),
                "retained_factors": sol.retained,
                "zero_variance": list(corr.zero_variance),
            }
            if len(env.journals) >= 3:
                mds = mds_embed(corr)
                out.write(f"{stem}_map.csv", map_csv(sol, mds))
                out.write(
                    f"{stem}_map.dot",
                    map_dot(sol, mds, name=f"{seed} {label}", edge_threshold=args.edge_threshold),
                )
                run["stress"] = mds.stress
            else:
                log.warning("%s environment at %.2f%% has %d journals; no map", label, t, len(env.journals))
            summary["runs"].append(run)
            solutions[label] = sol
        if solutions["prior"].retained:
            shift = track_seed(solutions["prior"], solutions["posterior"], seed)
            summary["runs"][-1]["seed_shift"] = shift.to_dict()
    out.write(f"env_{seed.replace(' ', '_')}_summary.json", json.dumps(summary, indent=2) + "\n")
    out.manifest(_inputs(args))
    return 0


def cmd_synth(args) -> int:
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            config = SynthConfig.from_dict(json.load(fh))
    else:
        config = SCENARIOS[args.scenario]()
    prior, post, truth = generate_pair(config)
    out = Outputs(args.out, "synth", args)
    out.write("prior.csv", snapshot_to_text(prior))
    out.write("posterior.csv", snapshot_to_text(post))
    out.write("truth.json", truth.to_json())
    out.write("config.json", json.dumps(config.to_dict(), indent=2) + "\n")
    out.manifest([args.config] if args.config else [])
    return 0


def _pair_parser(sub, name: str, help: str, out_required: bool = True):
    p = sub.add_parser(name, help=help)
    p.add_argument("prior", help="prior-year snapshot CSV (citing,cited,count)")
    p.add_argument("posterior", help="posterior-year snapshot CSV")
    p.add_argument("--axis", choices=AXES, default="cited")
    p.add_argument("--changes", help="name-change CSV (old,new,kind)")
    p.add_argument("--keep-singles", action="store_true", help="keep count == 1 relations")
    if out_required:
        p.add_argument("--out", default=".", help="output directory (default: .)")
    else:
        p.add_argument("--out", help="also write files and a manifest here")
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="citeshift",
        description="Entropy-based change detection between two yearly citation networks.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", metavar="{stats,diff,rank,categories,env,synth}")
    sub.required = True

    p = sub.add_parser("stats", help="summary statistics of one snapshot")
    p.add_argument("file")
    p.add_argument("--out", help="also write stats.json and a manifest here")
    p.set_defaults(func=cmd_stats)

    _pair_parser(sub, "diff", "change report (JSON and CSV)", out_required=False).set_defaults(func=cmd_diff)
    _pair_parser(sub, "rank", "file, vector, normalized and matrix rankings").set_defaults(func=cmd_rank)

    p = _pair_parser(sub, "categories", "aggregate vector change per category")
    p.add_argument("--scheme", required=True, help="category CSV (journal,category)")
    p.set_defaults(func=cmd_categories)

    p = _pair_parser(sub, "env", "seed environment factor analysis and maps for both years")
    p.add_argument("--seed", required=True)
    p.add_argument("--threshold", type=float, default=1.0, help="percent of seed totals (default 1.0)")
    p.add_argument("--zoom", action="store_true", help="also analyse at --zoom-threshold")
    p.add_argument("--zoom-threshold", type=float, default=2.0)
    p.add_argument("--no-rotate", action="store_true", help="skip varimax rotation")
    p.add_argument("--edge-threshold", type=float, default=0.5, help="min r for map edges")
    p.set_defaults(func=cmd_env)

    p = sub.add_parser("synth", help="generate a synthetic snapshot pair with ground truth")
    p.add_argument("--config", help="JSON generator config")
    p.add_argument("--scenario", choices=sorted(SCENARIOS), default="default")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)
    return parser


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.func(args)
    except (OSError, ParseError, ValidationError, InformationError, DelineationError, ValueError) as exc:
        print(f"citeshift {args.command}: error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
