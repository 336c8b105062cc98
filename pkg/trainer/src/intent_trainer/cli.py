"""trainer command line interface."""

from __future__ import annotations

import click

from .export import export_bundle
from .train import FinetuneConfig, finetune


@click.group()
def main():
    """Fine-tune compact intent classifiers and export gateway bundles."""


@main.command("finetune")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
def finetune_command(config_path):
    """Train from a run-config YAML; writes a checkpoint directory."""
    cfg = FinetuneConfig.from_yaml(config_path)
    out = finetune(cfg)
    click.echo(f"checkpoint written to {out}")


@main.command("export")
@click.option("--ckpt", "ckpt_dir", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path())
def export_command(ckpt_dir, out_dir):
    """Export a checkpoint as a self-verified ONNX bundle."""
    out = export_bundle(ckpt_dir, out_dir)
    click.echo(f"bundle written to {out}")


if __name__ == "__main__":
    main()
