"""``fairaudit`` command line.

Exit codes: 0 success, 2 schema, 3 data, 4 config/usage, 5 integrity,
6 replication mismatch.
"""
from __future__ import annotations

import dataclasses
import hashlib
import json
import os
import sys
from pathlib import Path

import click

from . import __version__, compas
from ._accel import backend
from .dataset import CompasRecipe, Schema, load_outcomes
from .errors import ConfigError, FairAuditError, ReplicationMismatch
from .fairness import FairnessConfig, audit, audit_all_pairs, audit_confusions, render_table
from .gaming import GamingConfig, plot_trace, read_key_values, run_gaming_rounds
from .stereotype import (
    AttributePair,
    TokenDistribution,
    bias_report,
    debias_project,
    gender_direction,
    load_embeddings,
    load_wordlist,
    sample_tokens,
)

EXIT_CODES = {"success": 0, "schema": 2, "data": 3, "config": 4, "integrity": 5, "mismatch": 6}


def _sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _command_line(ctx: click.Context) -> list[str]:
    """Canonical argv that reproduces this invocation."""
    argv = ["fairaudit", ctx.info_name]
    for param in ctx.command.params:
        if not isinstance(param, click.Option):
            continue
        value = ctx.params.get(param.name)
        if value is None or value is False or value == ():
            continue
        flag = max(param.opts, key=len)
        if value is True:
            argv.append(flag)
        elif param.multiple:
            for v in value:
                argv += [flag, *(map(str, v) if isinstance(v, tuple) else [str(v)])]
        elif isinstance(value, tuple):
            argv += [flag, *map(str, value)]
        else:
            argv += [flag, str(value)]
    return argv


def audit_run_header(ctx: click.Context, config: dict, inputs: dict[str, str], outputs: list[str]) -> dict:
    return {
        "command": ctx.info_name,
        "command_line": _command_line(ctx),
        "config": config,
        "input_sha256": {name: _sha256(p) for name, p in sorted(inputs.items())},
        "tool_version": __version__,
        "outputs": sorted(outputs),
    }


def write_outputs(out_dir, files: dict[str, str | bytes]) -> list[Path]:
    """Write every file to a temp name first, then rename them all."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    staged = []
    try:
        for name, content in files.items():
            tmp = out_dir / f".{name}.tmp"
            data = content.encode("utf-8") if isinstance(content, str) else content
            tmp.write_bytes(data)
            staged.append((tmp, out_dir / name))
    except BaseException:
        for tmp, _ in staged:
            tmp.unlink(missing_ok=True)
        raise
    for tmp, final in staged:
        os.replace(tmp, final)
    return [final for _, final in staged]


def _dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


@click.group()
@click.version_option(__version__, prog_name="fairaudit")
def cli():
    """Group-fairness audits, COMPAS replication and gaming/stereotype simulations."""


# --------------------------------------------------------------------------
# audit
# --------------------------------------------------------------------------

@cli.command("audit")
@click.option("--input", "input_path", type=click.Path(dir_okay=False), help="Delimited outcome file with header.")
@click.option("--counts", "counts_path", type=click.Path(dir_okay=False),
              help="Checksummed per-group confusion-count file instead of row data.")
@click.option("--recipe", type=click.Choice(["none", "compas", "propublica"]), default="none", show_default=True,
              help="Preset ingestion recipe for the ProPublica two-year CSV.")
@click.option("--truth-col")
@click.option("--pred-col")
@click.option("--score-col")
@click.option("--group-col")
@click.option("--weight-col")
@click.option("--cutoff", type=int, default=5, show_default=True, help="Score cutoff for --score-col.")
@click.option("--delimiter", default=",", show_default=True)
@click.option("--pair", nargs=2, help="Reference group pair, e.g. --pair black white. Default: all pairs.")
@click.option("--epsilon", type=float, default=0.1, show_default=True)
@click.option("--four-fifths", type=float, default=0.8, show_default=True)
@click.option("--mode", type=click.Choice(["absolute-difference", "ratio"]), default="absolute-difference",
              show_default=True)
@click.option("--out", "out_dir", type=click.Path(file_okay=False), required=True)
@click.pass_context
def cmd_audit(ctx, input_path, counts_path, recipe, truth_col, pred_col, score_col, group_col, weight_col, cutoff,
              delimiter, pair, epsilon, four_fifths, mode, out_dir):
    """Fairness report (JSON + text table) for one group pair or all pairs."""
    if (input_path is None) == (counts_path is None):
        raise ConfigError("give exactly one of --input or --counts")
    config = FairnessConfig(epsilon=epsilon, four_fifths_threshold=four_fifths, comparison_mode=mode)
    snapshot = {"fairness": config.to_dict()}
    if counts_path is not None:
        counts = compas.load_count_fixture(counts_path)
        groups = {g: cm for g, cm in counts.items() if g != "all"}
        pairs = [tuple(pair)] if pair else [(a, b) for i, a in enumerate(sorted(groups))
                                            for b in sorted(groups)[i + 1:]]
        fp = _sha256(counts_path)
        reports = [audit_confusions(groups, p, config, overall=counts.get("all"), fingerprint=fp) for p in pairs]
        inputs = {"counts": counts_path}
    else:
        rec = None
        if recipe == "compas":
            rec = CompasRecipe(score_cutoff=cutoff)
        elif recipe == "propublica":
            rec = dataclasses.replace(CompasRecipe.propublica(), score_cutoff=cutoff)
        schema = None
        if rec is None or any((truth_col, pred_col, score_col, group_col)):
            if not truth_col or not group_col:
                raise ConfigError("--truth-col and --group-col are required without a recipe")
            schema = Schema(truth=truth_col, group=group_col, prediction=pred_col, score=score_col,
                            weight=weight_col, score_cutoff=cutoff)
        table = load_outcomes(input_path, schema=schema, recipe=rec, delimiter=delimiter)
        reports = [audit(table, tuple(pair), config)] if pair else audit_all_pairs(table, config)
        snapshot["schema"] = table.schema
        snapshot["rows"] = len(table)
        snapshot["rejected_rows"] = table.rejected
        inputs = {"input": input_path}
    if not reports:
        raise ConfigError("fewer than two groups; nothing to compare")

    outputs = ["report.json", "report.txt"]
    header = audit_run_header(ctx, snapshot, inputs, outputs)
    payload = {"audit_run": header, "reports": [r.to_dict() for r in reports]}
    text = "\n".join(f"== {r.group_pair[0]} vs {r.group_pair[1]} ==\n{render_table(r)}" for r in reports)
    write_outputs(out_dir, {"report.json": _dumps(payload), "report.txt": text})
    for r in reports:
        a, b = r.group_pair
        v = r.verdicts
        click.echo(f"{a} vs {b}: independence={v['independence'].label} separation={v['separation'].label} "
                   f"sufficiency={v['sufficiency'].label} four-fifths={r.four_fifths.value}")


# --------------------------------------------------------------------------
# compas-repro
# --------------------------------------------------------------------------

@cli.command("compas-repro")
@click.option("--fixture", type=click.Path(dir_okay=False), help="Count fixture (default: bundled Table 5b).")
@click.option("--csv", "csv_path", type=click.Path(dir_okay=False),
              help="Also rebuild the counts from the ProPublica two-year CSV and diff them.")
@click.option("--recipe", type=click.Choice(["compas", "propublica"]), default="compas", show_default=True)
@click.option("--json", "as_json", is_flag=True, help="Machine-readable pass/fail per cell on stdout.")
@click.option("--out", "out_dir", type=click.Path(file_okay=False), help="Also write report.json/report.txt here.")
@click.pass_context
def cmd_compas_repro(ctx, fixture, csv_path, recipe, as_json, out_dir):
    """Recompute Table 5 from the fixture and check every printed figure."""
    counts = compas.load_count_fixture(fixture)
    report, checks = compas.check_table5(counts)
    diffs = []
    if csv_path:
        rec = CompasRecipe() if recipe == "compas" else CompasRecipe.propublica()
        diffs = compas.verify_csv(csv_path, rec, fixture)
    cells_5c = [c for c in checks if c.table == "5c"]
    cells_5d = [c for c in checks if c.table == "5d"]
    ok_5c = sum(c.passed for c in cells_5c)
    ok_5d = sum(c.passed for c in cells_5d)
    summary = {
        "metrics_matched": ok_5c,
        "metrics_total": len(cells_5c),
        "fairness_matched": ok_5d,
        "fairness_total": len(cells_5d),
        "csv_checked": bool(csv_path),
        "csv_diffs": [str(d) for d in diffs],
        "tolerance": compas.TOLERANCE,
        "passed": ok_5c == len(cells_5c) and ok_5d == len(cells_5d) and not diffs,
    }
    if as_json:
        click.echo(_dumps({"summary": summary, "cells": [c.to_dict() for c in checks]}), nl=False)
    else:
        click.echo(render_table(report))
        for c in checks:
            if not c.passed:
                click.echo(f"MISMATCH {c.table} {c.name} [{c.panel}]: expected {c.expected}, got {c.actual}")
        for d in diffs:
            click.echo(f"CSV DIFF {d}")
        click.echo(f"{ok_5c}/{len(cells_5c)} metrics matched")
        click.echo(f"{ok_5d}/{len(cells_5d)} fairness determinations matched")
        if csv_path:
            click.echo("CSV pipeline reproduces Table 5b counts" if not diffs
                       else f"CSV pipeline: {len(diffs)} count cells differ")
    if out_dir:
        inputs = {"fixture": fixture or compas.default_fixture_path()}
        if csv_path:
            inputs["csv"] = csv_path
        header = audit_run_header(ctx, {"recipe": recipe, "tolerance": compas.TOLERANCE}, inputs,
                                  ["report.json", "report.txt"])
        payload = {"audit_run": header, "summary": summary, "report": report.to_dict(),
                   "cells": [c.to_dict() for c in checks]}
        write_outputs(out_dir, {"report.json": _dumps(payload), "report.txt": render_table(report)})
    if not summary["passed"]:
        raise ReplicationMismatch("replication mismatch")


# --------------------------------------------------------------------------
# gaming
# --------------------------------------------------------------------------

@cli.command("gaming")
@click.option("--config", "config_path", type=click.Path(dir_okay=False), help="key = value config file.")
@click.option("--seed", type=int, help="Overrides the config seed.")
@click.option("--set", "overrides", multiple=True, metavar="KEY=VALUE", help="Override one config key.")
@click.option("--plot", is_flag=True, help="Write one SVG per panel (needs matplotlib).")
@click.option("--out", "out_dir", type=click.Path(file_okay=False), required=True)
@click.pass_context
def cmd_gaming(ctx, config_path, seed, overrides, plot, out_dir):
    """Simulate gaming under full model disclosure; write the per-round trace."""
    values = read_key_values(config_path) if config_path else {}
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        values[k.strip()] = v.strip()
    if seed is not None:
        values["seed"] = str(seed)
    config = GamingConfig.from_mapping(values)
    if config.seed is None:
        raise ConfigError("no seed: pass --seed or set seed in the config file")
    trace = run_gaming_rounds(config, keep_snapshots=plot)
    first, last = trace.rounds[0], trace.final
    summary = {
        "rounds": len(trace.rounds),
        "termination": trace.termination,
        "round0_train_accuracy": first.train_accuracy,
        "round0_dominance": first.dominance,
        "first_game_acceptance": first.acceptance_rate,
        "final_dominance": last.dominance,
        "final_classifier": {"w_immutable": last.w_immutable, "w_mutable": last.w_mutable, "bias": last.bias},
    }
    files = {"trace.csv": trace.to_csv()}
    outputs = ["trace.csv", "summary.json"]
    inputs = {"config": config_path} if config_path else {}
    header = audit_run_header(ctx, {**config.to_dict(), "backend": backend()}, inputs, outputs)
    files["summary.json"] = _dumps({"audit_run": header, "summary": summary})
    write_outputs(out_dir, files)
    if plot:
        plot_trace(trace, out_dir)
    click.echo(f"{len(trace.rounds)} rounds ({trace.termination}); round-0 accuracy {first.train_accuracy:.4f}; "
               f"dominance {first.dominance:.4f} -> {last.dominance:.4f}; "
               f"first-game acceptance {first.acceptance_rate:.4f}")


# --------------------------------------------------------------------------
# stereotype
# --------------------------------------------------------------------------

@cli.command("stereotype")
@click.option("--embeddings", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--wordlist", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--pair", default="he/she", show_default=True, help="Attribute pair LEFT/RIGHT.")
@click.option("--debias", is_flag=True, help="Also score after projecting out the pair direction.")
@click.option("--direction-pair", "direction_pairs", multiple=True,
              help="Pairs defining the debias direction (default: --pair).")
@click.option("--out", "out_dir", type=click.Path(file_okay=False), required=True)
@click.pass_context
def cmd_stereotype(ctx, embeddings, wordlist, pair, debias, direction_pairs, out_dir):
    """Cosine-difference bias scores of a word list toward an attribute pair."""
    table = load_embeddings(embeddings)
    words = load_wordlist(wordlist)
    attr = AttributePair.parse(pair)
    report = bias_report(words, attr, table)
    files = {"scores.csv": report.to_csv()}
    results = {"before": report.to_dict()}
    if debias:
        dpairs = [AttributePair.parse(p) for p in direction_pairs] or [attr]
        d = gender_direction(dpairs, table)
        exclude = {w for p in dpairs for w in (p.left, p.right)} | {attr.left, attr.right}
        after = bias_report(words, attr, debias_project(table, d, exclude))
        files["scores_debiased.csv"] = after.to_csv()
        results["after"] = after.to_dict()
        results["direction_pairs"] = [str(p) for p in dpairs]
    outputs = sorted([*files, "report.json"])
    header = audit_run_header(ctx, {"pair": str(attr), "debias": debias},
                              {"embeddings": embeddings, "wordlist": wordlist}, outputs)
    files["report.json"] = _dumps({"audit_run": header, **results})
    write_outputs(out_dir, files)
    click.echo(f"{len(report.scores)} words scored against {attr}; mean {report.mean:+.6f}; "
               f"most biased {report.max_abs_word!r}")
    if debias:
        click.echo(f"after debiasing: mean {results['after']['mean']:+.3e}")


# --------------------------------------------------------------------------
# decode
# --------------------------------------------------------------------------

@cli.command("decode")
@click.option("--dist", required=True, help="Token probabilities, e.g. he=0.6,she=0.4")
@click.option("--mode", type=click.Choice(["argmax", "proportional"]), required=True)
@click.option("-n", "n", type=int, default=1000, show_default=True)
@click.option("--seed", type=int, help="Required for proportional mode.")
def cmd_decode(dist, mode, n, seed):
    """Token frequencies under argmax or proportional decoding."""
    probs = {}
    for item in dist.split(","):
        if "=" not in item:
            raise ConfigError(f"--dist entries must be token=prob, got {item!r}")
        tok, p = item.split("=", 1)
        try:
            probs[tok.strip()] = float(p)
        except ValueError:
            raise ConfigError(f"bad probability {p!r}") from None
    freqs = sample_tokens(TokenDistribution.from_mapping(probs), mode, n, seed)
    click.echo(_dumps({"mode": mode, "n": n, "seed": seed, "frequencies": freqs}), nl=False)


def main(argv: list[str] | None = None) -> int:
    try:
        cli.main(args=argv, prog_name="fairaudit", standalone_mode=False)
    except FairAuditError as exc:
        click.echo(f"error: {exc}", err=True)
        return exc.exit_code
    except click.exceptions.Abort:
        click.echo("aborted", err=True)
        return 1
    except click.ClickException as exc:
        exc.show()
        return EXIT_CODES["config"]
    except FileNotFoundError as exc:
        click.echo(f"error: {exc}", err=True)
        return EXIT_CODES["data"]
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
