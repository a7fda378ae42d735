"""Command-line pipeline: enrich, extract, analyze, sweep.

Outputs are written to temporary files and renamed on success, so a
failing run never leaves partial files behind. All randomness flows from
--seed (default 0).
"""

from __future__ import annotations

import json
import os
import sys
import tempfile
from contextlib import contextmanager
from fractions import Fraction

import click

from . import enrichment
from .conformance import import_alignment_results, parse_pnml, token_replay
from .fairness import (apply_relabeling, disc_classifier, disc_data,
                       enumerate_candidates, select_relabeling)
from .harness import (InjectionSpec, SweepParams, run_epsilon_sweep_detailed,
                      run_sweep_detailed, render_report)
from .log_model import parse_xes, serialize_xes
from .situations import (build_annotated_table, load_specification,
                         split_table, table_to_csv)
from .tree import TreeParams, accuracy, export_dot, grow_tree, tree_to_json


@contextmanager
def _atomic_outputs():
    """Collect (path, bytes) pairs; write-and-rename only if the body succeeds."""
    pending = []
    yield pending
    for path, payload in pending:
        directory = os.path.dirname(os.path.abspath(path)) or "."
        os.makedirs(directory, exist_ok=True)
        fd, temp_path = tempfile.mkstemp(dir=directory, prefix=".fairpm-")
        try:
            with os.fdopen(fd, "wb") as handle:
                handle.write(payload if isinstance(payload, bytes) else payload.encode("utf-8"))
            os.replace(temp_path, path)
        except BaseException:
            if os.path.exists(temp_path):
                os.unlink(temp_path)
            raise


def _load_log(path: str):
    with open(path, "rb") as handle:
        if path.endswith(".csv"):
            from .log_model import parse_csv_log
            import io
            return parse_csv_log(io.StringIO(handle.read().decode("utf-8")))
        return parse_xes(handle)


def _load_spec(path: str, epsilon, relabel_mode):
    with open(path, "r", encoding="utf-8") as handle:
        spec = load_specification(handle)
    if epsilon is not None or relabel_mode is not None:
        from dataclasses import replace
        spec = replace(spec,
                       epsilon=spec.epsilon if epsilon is None else epsilon,
                       relabel_mode=relabel_mode or spec.relabel_mode)
    return spec


@click.group()
def main():
    """Fairness-aware process mining toolkit."""


@main.command("enrich")
@click.option("--log", "log_path", required=True, type=click.Path(exists=True))
@click.option("--net", "net_path", type=click.Path(exists=True))
@click.option("--alignments", "alignments_path", type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--delay-fraction", type=float, default=0.02, show_default=True,
              help="Delay threshold as a fraction of the maximum trace duration.")
@click.option("--workload-window-ms", type=int, default=enrichment.WEEK_MS,
              show_default=True)
def cmd_enrich(log_path, net_path, alignments_path, out_path, delay_fraction,
               workload_window_ms):
    """Write an enriched copy of the log (durations, delays, workloads, conformance)."""
    log = _load_log(log_path)
    config = enrichment.EnrichmentConfig(
        delay_threshold_value=delay_fraction, workload_window=workload_window_ms)

    log = enrichment.enrich_trace_duration(log)
    log = enrichment.enrich_trace_delay(log, config)
    log = enrichment.enrich_neighbor_activities(log)
    log = enrichment.enrich_workloads(log, config)

    added = ["trace:duration", "trace:delay", "next:activity", "prev:activity",
             "total:workload", "resource:workload"]
    if alignments_path:
        with open(alignments_path, "rb") as handle:
            results = import_alignment_results(handle.read())
        log = enrichment.enrich_conformance(log, results)
        added += ["trace:deviation", "trace:numberModelMove", "trace:numberLogMove"]
    elif net_path:
        with open(net_path, "rb") as handle:
            net = parse_pnml(handle)
        results = {}
        for trace in log:
            if trace.case_id is not None:
                results[trace.case_id] = token_replay(net, trace)
        log = enrichment.enrich_conformance(log, results)
        added += ["trace:deviation", "trace:numberModelMove", "trace:numberLogMove"]

    with _atomic_outputs() as outputs:
        outputs.append((out_path, serialize_xes(log)))
    click.echo(f"enriched {len(log)} traces; attributes added: {', '.join(added)}")


@main.command("extract")
@click.option("--log", "log_path", required=True, type=click.Path(exists=True))
@click.option("--spec", "spec_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path())
def cmd_extract(log_path, spec_path, out_path):
    """Write the annotated situation feature table as CSV."""
    log = _load_log(log_path)
    spec = _load_spec(spec_path, None, None)
    table = build_annotated_table(log, spec)
    with _atomic_outputs() as outputs:
        outputs.append((out_path, table_to_csv(table)))
    click.echo(f"extracted {len(table)} instances ({table.dropped} dropped)")


@main.command("analyze")
@click.option("--log", "log_path", required=True, type=click.Path(exists=True))
@click.option("--spec", "spec_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--epsilon", type=float, default=None,
              help="Override the spec file's epsilon.")
@click.option("--relabel-mode",
              type=click.Choice(["both", "neg_to_pos", "pos_to_neg"]), default=None)
@click.option("--granularity", type=float, default=1e-3, show_default=True)
@click.option("--train-fraction", type=float, default=0.6, show_default=True)
def cmd_analyze(log_path, spec_path, out_dir, seed, epsilon, relabel_mode,
                granularity, train_fraction):
    """Train standard and fair trees; write DOT files and report.json."""
    log = _load_log(log_path)
    spec = _load_spec(spec_path, epsilon, relabel_mode)

    table = build_annotated_table(log, spec)
    train, test = split_table(table, train_fraction, seed)
    standard = grow_tree(train)

    base_disc = disc_classifier(standard, train).disc
    correct = round(accuracy(standard, train) * len(train))
    base_acc = Fraction(correct, len(train))
    candidates = enumerate_candidates(standard, spec.relabel_mode)
    plan = select_relabeling(base_disc, candidates, spec.epsilon,
                             granularity=granularity, base_acc=base_acc)
    fair = apply_relabeling(standard, plan)

    fair_train_report = disc_classifier(fair, train, epsilon=spec.epsilon)
    report = {
        "config": {
            "epsilon": spec.epsilon,
            "relabel_mode": spec.relabel_mode,
            "seed": seed,
            "granularity": granularity,
            "train_fraction": train_fraction,
        },
        "dropped_instances": table.dropped,
        "disc_data": disc_data(table).to_json(),
        "train": {
            "disc_standard": float(base_disc),
            "disc_fair": fair_train_report.to_json(),
            "acc_standard": accuracy(standard, train),
            "acc_fair": accuracy(fair, train),
        },
        "test": {
            "disc_standard": float(disc_classifier(standard, test).disc),
            "disc_fair": float(disc_classifier(fair, test).disc),
            "acc_standard": accuracy(standard, test),
            "acc_fair": accuracy(fair, test),
        },
        "relabel_plan": plan.to_json(),
        "reverse_discrimination_warning": fair_train_report.reverse_discrimination,
    }

    with _atomic_outputs() as outputs:
        outputs.append((os.path.join(out_dir, "standard.dot"), export_dot(standard)))
        outputs.append((os.path.join(out_dir, "fair.dot"),
                        export_dot(fair, highlight=fair.relabeled)))
        outputs.append((os.path.join(out_dir, "report.json"),
                        json.dumps(report, indent=2) + "\n"))
    click.echo(f"report written to {out_dir} "
               f"(fair train disc {float(fair_train_report.disc):.4f}, "
               f"feasible={plan.feasible})")


def _parse_floats(text):
    return tuple(float(x) for x in text.split(",") if x.strip())


@main.command("sweep")
@click.option("--log", "log_path", required=True, type=click.Path(exists=True))
@click.option("--spec", "spec_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--levels", default=None,
              help="Comma-separated injected discrimination levels.")
@click.option("--repeats", type=int, default=5, show_default=True)
@click.option("--epsilons", default=None,
              help="Comma-separated epsilon values (epsilon sweep mode).")
@click.option("--epsilon", type=float, default=None)
@click.option("--relabel-mode",
              type=click.Choice(["both", "neg_to_pos", "pos_to_neg"]), default=None)
@click.option("--granularity", type=float, default=1e-3, show_default=True)
@click.option("--dot/--no-dot", default=False, show_default=True,
              help="Also write per-row standard/fair DOT files.")
def cmd_sweep(log_path, spec_path, out_dir, seed, levels, repeats, epsilons,
              epsilon, relabel_mode, granularity, dot):
    """Run the controlled-discrimination or epsilon sweep; write sweep.csv."""
    log = _load_log(log_path)
    spec = _load_spec(spec_path, epsilon, relabel_mode)
    table = build_annotated_table(log, spec)
    params = SweepParams(granularity=granularity)

    if epsilons:
        results = run_epsilon_sweep_detailed(
            table, spec, _parse_floats(epsilons), seed, params)
        csv_text = render_report([r for r, _, _ in results], with_epsilon=True)
        tags = [f"eps_{row.epsilon:g}_seed_{row.seed}" for row, _, _ in results]
    else:
        if not levels:
            raise click.UsageError("either --levels or --epsilons is required")
        injection = InjectionSpec(_parse_floats(levels), seed=seed, repeats=repeats)
        results = run_sweep_detailed(table, spec, injection, params)
        csv_text = render_report([r for r, _, _ in results])
        tags = [f"level_{row.injected_level:g}_seed_{row.seed}" for row, _, _ in results]

    with _atomic_outputs() as outputs:
        outputs.append((os.path.join(out_dir, "sweep.csv"), csv_text))
        if dot:
            for tag, (_, standard, fair) in zip(tags, results):
                outputs.append((os.path.join(out_dir, f"{tag}_standard.dot"),
                                export_dot(standard)))
                outputs.append((os.path.join(out_dir, f"{tag}_fair.dot"),
                                export_dot(fair, highlight=fair.relabeled)))
    click.echo(f"{len(results)} sweep rows written to {out_dir}")


if __name__ == "__main__":
    main()
