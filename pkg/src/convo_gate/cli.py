"""convo-gate command line interface."""

from __future__ import annotations

import json
import logging
import sys
from pathlib import Path

import click

from . import __version__
from .augment import sample_windows
from .classifier import load_model
from .config import (
    GatewayConfig,
    gateway_config_from_dict,
    load_schema,
    load_yaml,
    window_config_from_dict,
)
from .corpus import compute_stats, load_manifest, read_corpus, write_corpus
from .core import render_model_input
from .errors import ConvoGateError
from .evaluation import build_report, make_counter, render_report_table, write_reports
from .gateway import GatewayService, create_app, run_batch_filter
from .rng import derive_stream


@click.group()
@click.version_option(__version__)
def main():
    """Intent-based filtering toolkit for multi-party conversations."""
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")


@main.command()
@click.option("--manifest", "manifest_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--schema", "schema_path", default=None, help="Schema YAML (default: built-in)")
@click.option("--on-malformed", type=click.Choice(["abort", "skip"]), default="abort")
def ingest(manifest_path, out_dir, schema_path, on_malformed):
    """Validate and normalize manifest datasets into a corpus directory.

    Whitespace-only turns were already rejected by the format; malformed
    records are skipped or abort per --on-malformed.
    """
    schema = load_schema(schema_path)
    manifest = load_manifest(manifest_path)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for entry in manifest.datasets:
        convs = list(read_corpus(entry.path, schema, on_malformed=on_malformed))
        n = write_corpus(convs, out / f"{entry.name}.jsonl", schema)
        click.echo(f"{entry.name} ({entry.role}): {n} conversations -> {out / (entry.name + '.jsonl')}")


@main.command()
@click.option("--in", "in_path", required=True, type=click.Path(exists=True))
@click.option("--schema", "schema_path", default=None)
@click.option("--counter", default="whitespace", type=click.Choice(["whitespace"]))
def stats(in_path, schema_path, counter):
    """Per-intent label counts and token totals for one corpus file."""
    schema = load_schema(schema_path)
    result = compute_stats(read_corpus(in_path, schema, on_malformed="skip"),
                           schema, make_counter(counter))
    click.echo(f"conversations: {result.total}")
    click.echo(f"tokens:        {result.total_tokens}")
    for intent in schema.ids:
        click.echo(f"{intent}: {result.per_intent_positive[intent]} positive / "
                   f"{result.per_intent_negative[intent]} negative")


@main.command("augment-preview")
@click.option("--in", "in_path", required=True, type=click.Path(exists=True))
@click.option("--config", "config_path", default=None, help="Run config YAML with a window section")
@click.option("--seed", default=None, type=int, help="Overrides the config seed")
@click.option("--limit", default=10, type=int, help="Conversations to preview")
def augment_preview(in_path, config_path, seed, limit):
    """Print the window segments sampling would produce for inspection."""
    data = load_yaml(config_path) if config_path else {}
    schema = load_schema(data.get("schema") if isinstance(data.get("schema"), str) else None)
    cfg = window_config_from_dict(data.get("window"))
    seed = cfg.seed if seed is None else seed
    for conv in list(read_corpus(in_path, schema))[:limit]:
        rng = derive_stream(seed, conv.id)
        segments = sample_windows(conv, cfg, rng)
        click.echo(f"{conv.id} ({len(conv.turns)} turns):")
        for seg in segments:
            text = render_model_input(conv, seg.start_turn, seg.end_turn)
            labels = dict(zip(schema.ids, seg.labels.values)) if seg.labels else None
            click.echo(f"  [{seg.start_turn},{seg.end_turn}) {labels}: {text[:80]}")


@main.command("eval")
@click.option("--manifest", "manifest_path", required=True, type=click.Path(exists=True))
@click.option("--model", "model_path", required=True, type=click.Path(exists=True))
@click.option("--schema", "schema_path", default=None)
@click.option("--predicates", default="any", help="Comma-separated intent ids and/or 'any'")
@click.option("--counter", default="whitespace", type=click.Choice(["whitespace", "external-tokenizer"]))
@click.option("--role", default="test", type=click.Choice(["train", "validation", "test"]))
@click.option("--out", "out_path", default=None, type=click.Path(), help="Machine-readable report file")
def eval_command(manifest_path, model_path, schema_path, predicates, counter, role, out_path):
    """Per-intent metrics and token-reduction reports over test datasets."""
    schema = load_schema(schema_path)
    model = load_model(model_path, schema)
    manifest = load_manifest(manifest_path)
    predicate_list = [p.strip() for p in predicates.split(",") if p.strip()]
    # reporting context: skip and log malformed records rather than aborting
    datasets = [(e.name, list(read_corpus(e.path, schema, on_malformed="skip")))
                for e in manifest.by_role(role)]
    reports = build_report(datasets, model, schema, predicate_list, make_counter(counter, model))
    click.echo(render_report_table(reports, schema, predicate_list))
    if out_path:
        write_reports(reports, out_path)
        click.echo(f"wrote {len(reports)} report records to {out_path}")


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
def serve(config_path):
    """Run the filtering gateway service."""
    import uvicorn

    data = load_yaml(config_path)
    schema = load_schema(data.get("schema") if isinstance(data.get("schema"), str) else None)
    config = gateway_config_from_dict(data["gateway"])
    service = GatewayService(config, schema)
    host, port = config.host_port()
    try:
        uvicorn.run(create_app(service), host=host, port=port, log_level="info")
    finally:
        service.close()


@main.command("filter")
@click.option("--in", "in_path", required=True, type=click.Path(exists=True))
@click.option("--model", "model_path", required=True, type=click.Path(exists=True))
@click.option("--schema", "schema_path", default=None)
@click.option("--predicate", default="any")
@click.option("--out", "out_path", default=None, type=click.Path(), help="Forwarded snippets (JSONL)")
@click.option("--audit", "audit_path", default=None, type=click.Path(), help="Decision audit log")
@click.option("--counter", default="whitespace", type=click.Choice(["whitespace", "external-tokenizer"]))
def filter_command(in_path, model_path, schema_path, predicate, out_path, audit_path, counter):
    """Batch mode: classify a snippet file, keep only predicate matches."""
    schema = load_schema(schema_path)
    config = GatewayConfig(model_path=model_path, predicate=predicate,
                           counter=counter, audit_log=audit_path)
    service = GatewayService(config, schema)
    try:
        final = run_batch_filter(service, read_corpus(in_path, schema), out_path)
    finally:
        service.close()
    click.echo(f"snippets: {final.total_snippets} total, {final.forwarded_snippets} forwarded, "
               f"{final.errored_snippets} errored")
    click.echo(f"tokens: {final.total_tokens} total, {final.forwarded_tokens} forwarded "
               f"({final.reduction_so_far_pct:.2f}% reduction)")


def entrypoint():
    try:
        main()
    except ConvoGateError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)


if __name__ == "__main__":
    entrypoint()
