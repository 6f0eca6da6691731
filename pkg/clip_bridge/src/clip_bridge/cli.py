"""Command-line interface: ``extract-text`` and ``extract-images``.

Exit codes: 0 success, 2 configuration error (including an encoder
backend that cannot be constructed), 3 data/format error or I/O failure.
"""

from __future__ import annotations

import sys

import click

from .config import DEFAULT_MODEL_TAG, DEFAULT_PRETRAINED_TAG, ExtractorConfig
from .encoders import ENCODER_KINDS, make_encoder
from .errors import ConfigError, DataError, FormatError
from .extract import embed_images, embed_prompts


def encoder_options(fn):
    for option in reversed((
        click.option("--model-tag", default=DEFAULT_MODEL_TAG, show_default=True),
        click.option(
            "--pretrained-tag", default=DEFAULT_PRETRAINED_TAG, show_default=True
        ),
        click.option("--device", default="cpu", show_default=True),
        click.option("--batch-size", default=32, show_default=True, type=int),
        click.option(
            "--encoder",
            "encoder_kind",
            type=click.Choice(ENCODER_KINDS),
            default="open_clip",
            show_default=True,
            help="Backend: the reference OpenCLIP model, or the offline stub.",
        ),
    )):
        fn = option(fn)
    return fn


@click.group(name="clip-bridge")
@click.version_option(package_name="clip-bridge", prog_name="clip-bridge")
def cli() -> None:
    """Extract text/image embeddings into EMB1 files for the detector."""


@cli.command("extract-text")
@click.option("--prompts", required=True, type=str, help="Paired prompt file.")
@click.option("--out-dir", required=True, type=str)
@encoder_options
def extract_text(prompts, out_dir, model_tag, pretrained_tag, device, batch_size,
                 encoder_kind):
    """Embed a prompt file into normals.emb1 / anomalies.emb1."""
    cfg = ExtractorConfig(
        model_tag=model_tag,
        pretrained_tag=pretrained_tag,
        device=device,
        batch_size=batch_size,
    )
    result = embed_prompts(prompts, out_dir, cfg, make_encoder(encoder_kind, cfg))
    click.echo(
        f"wrote {result.rows} pairs x dim {result.dim} to "
        f"{' and '.join(result.emb1_paths)}"
    )
    if result.overflow_log_path:
        click.echo(f"token overflows logged to {result.overflow_log_path}", err=True)


@cli.command("extract-images")
@click.option("--manifest", required=True, type=str)
@click.option("--out", required=True, type=str, help="EMB1 file to write.")
@click.option("--multi-crop", is_flag=True, help="Five-crop averaged embeddings.")
@click.option(
    "--root",
    default=None,
    type=str,
    help="Directory manifest paths resolve against (default: manifest's directory).",
)
@encoder_options
def extract_images(manifest, out, multi_crop, root, model_tag, pretrained_tag,
                   device, batch_size, encoder_kind):
    """Embed every manifest entry, one EMB1 row per entry in order."""
    cfg = ExtractorConfig(
        model_tag=model_tag,
        pretrained_tag=pretrained_tag,
        device=device,
        batch_size=batch_size,
        multi_crop=multi_crop,
    )
    result = embed_images(
        manifest, out, cfg, make_encoder(encoder_kind, cfg), root=root
    )
    crop_note = "multi-crop" if multi_crop else "center-crop"
    click.echo(f"wrote {result.rows} rows x dim {result.dim} ({crop_note}) to {out}")


def main(argv=None) -> int:
    """Entry point with the bridge's exit-code mapping."""
    try:
        cli.main(args=argv, standalone_mode=False)
        return 0
    except click.exceptions.Abort:
        click.echo("aborted", err=True)
        return 130
    except click.UsageError as exc:
        exc.show()
        return 2
    except click.ClickException as exc:
        exc.show()
        return exc.exit_code
    except (ConfigError, ValueError) as exc:
        click.echo(f"error: {exc}", err=True)
        return 2
    except (FormatError, DataError, OSError) as exc:
        click.echo(f"error: {exc}", err=True)
        return 3


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
