"""Command-line interface.

Subcommands: ``gen-prompts``, ``train``, ``score``, ``eval``, ``sweep``,
``report``, plus the helpers ``make-fixture`` (synthetic end-to-end
data) and ``make-manifest`` (dataset-layout adapters).

Every command accepts ``--config FILE`` (JSON mapping of long option
names to values) with command-line flags taking precedence. Relative
input paths are looked up in the working directory first and then under
``$RANDPROMPT_AD_DATA`` when it is set.

Exit codes: 0 success, 2 configuration error, 3 data/format error,
4 numeric failure.
"""

from __future__ import annotations

import json
import os
import sys
from dataclasses import replace

import click
import numpy as np

from . import adapters, harness, metrics, mlp, prompts, scoring, synthetic
from .embeddings import (
    EmbeddingMatrix,
    PairedEmbeddingSet,
    read_embeddings,
)
from .errors import (
    ConfigError,
    DataError,
    MetricError,
    RandpromptError,
    StateError,
    TrainingError,
)
from .manifest import load_manifest, refs_as_manifest, save_manifest

DATA_ROOT_ENV = "RANDPROMPT_AD_DATA"


def _resolve_input(path: str | None) -> str | None:
    """Relative inputs resolve against cwd, then $RANDPROMPT_AD_DATA."""
    if path is None or os.path.isabs(path) or os.path.exists(path):
        return path
    root = os.environ.get(DATA_ROOT_ENV)
    if root:
        candidate = os.path.join(root, path)
        if os.path.exists(candidate):
            return candidate
    return path


def _load_config_file(ctx: click.Context, param: click.Parameter, value):
    if not value:
        return value
    try:
        with open(value, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {value}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{value}: not valid JSON ({exc})") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"{value}: config must be a JSON object")
    normalized = {str(k).replace("-", "_"): v for k, v in doc.items()}
    ctx.default_map = {**(ctx.default_map or {}), **normalized}
    return value


def config_option(fn):
    return click.option(
        "--config",
        type=str,
        default=None,
        is_eager=True,
        expose_value=False,
        callback=_load_config_file,
        help="JSON file supplying defaults for any option of this command.",
    )(fn)


def _parse_ints(text: str, what: str) -> tuple[int, ...]:
    try:
        values = tuple(int(part) for part in str(text).split(",") if part.strip() != "")
    except ValueError as exc:
        raise ConfigError(f"bad {what} {text!r}: {exc}") from exc
    if not values:
        raise ConfigError(f"{what} must be non-empty")
    return values


def _parse_hidden_dims(text: str) -> tuple[int, int, int]:
    dims = _parse_ints(text, "hidden dims")
    if len(dims) != 3:
        raise ConfigError(f"expected 3 hidden widths, got {text!r}")
    return dims


def _parse_components(text: str) -> tuple[str, ...]:
    requested = [part.strip() for part in str(text).split(",") if part.strip()]
    unknown = [c for c in requested if c not in harness.COMPONENTS]
    if unknown:
        raise ConfigError(
            f"unknown components {unknown}; valid: {', '.join(harness.COMPONENTS)}"
        )
    if not requested:
        raise ConfigError("at least one component is required")
    # canonical fusion order regardless of how they were listed
    return tuple(c for c in harness.COMPONENTS if c in requested)


@click.group(name="randprompt-ad")
@click.version_option(package_name="randprompt-ad", prog_name="randprompt-ad")
def cli() -> None:
    """Zero-shot anomaly detection trained on randomly augmented prompts."""


@cli.command("gen-prompts")
@config_option
@click.option("--out", required=True, type=str, help="Output prompt file.")
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--n-pairs", default=10000, show_default=True, type=int)
@click.option(
    "--word-pair",
    default="default",
    show_default=True,
    help="'normal/anomaly' words, e.g. 'an/a damaged', or 'default'.",
)
@click.option("--l-min", default=5, show_default=True, type=int)
@click.option("--l-max", default=10, show_default=True, type=int)
@click.option("--alphabet", default=prompts.DEFAULT_ALPHABET, show_default=False)
@click.option(
    "--guide",
    is_flag=True,
    help="Emit plain guide prompts (no augmentation) instead of a training set.",
)
@click.option(
    "--manifest",
    default=None,
    type=str,
    help="With --guide: one prompt pair per category of this manifest.",
)
@click.option(
    "--object-word",
    default="object",
    show_default=True,
    help="With --guide and no manifest: the generic object word.",
)
def gen_prompts(
    out, seed, n_pairs, word_pair, l_min, l_max, alphabet, guide, manifest, object_word
):
    """Generate a paired prompt file (training set or plain guides)."""
    pair = prompts.parse_word_pair(word_pair)
    if guide:
        if manifest is not None:
            object_words = load_manifest(_resolve_input(manifest)).categories
        else:
            object_words = [object_word]
        pair_list = prompts.guide_prompt_set(pair, object_words)
        prompts.write_prompt_file(out, pair_list, seed=seed)
        click.echo(f"wrote {len(pair_list)} guide prompt pairs to {out}")
        return
    cfg = prompts.RandomWordConfig(l_min=l_min, l_max=l_max, alphabet=alphabet, seed=seed)
    pair_list = prompts.generate_prompt_set(cfg, pair, n_pairs)
    prompts.write_prompt_file(out, pair_list, seed=seed)
    click.echo(
        f"wrote {len(pair_list)} prompt pairs to {out} "
        f"(backend: {prompts.generation_backend_name(alphabet)})"
    )


@cli.command("train")
@config_option
@click.option("--train-normals", required=True, type=str)
@click.option("--train-anomalies", required=True, type=str)
@click.option("--out", required=True, type=str, help="Checkpoint file to write.")
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--epochs", default=2, show_default=True, type=int)
@click.option("--batch-size", default=128, show_default=True, type=int)
@click.option("--lr", default=1e-3, show_default=True, type=float)
@click.option("--weight-decay", default=1e-4, show_default=True, type=float)
@click.option("--lr-decay-factor", default=0.1, show_default=True, type=float)
@click.option("--hidden-dims", default="512,256,128", show_default=True)
@click.option("--dropout-rate", default=0.2, show_default=True, type=float)
@click.option("--bn-epsilon", default=1e-5, show_default=True, type=float)
@click.option("--bn-momentum", default=0.1, show_default=True, type=float)
@click.option(
    "--raw-inputs",
    is_flag=True,
    help="Feed raw embeddings to the detector instead of row-normalizing.",
)
def train_cmd(
    train_normals,
    train_anomalies,
    out,
    seed,
    epochs,
    batch_size,
    lr,
    weight_decay,
    lr_decay_factor,
    hidden_dims,
    dropout_rate,
    bn_epsilon,
    bn_momentum,
    raw_inputs,
):
    """Train the detector on paired embeddings and save a checkpoint."""
    pairs = PairedEmbeddingSet.load(
        _resolve_input(train_normals), _resolve_input(train_anomalies)
    )
    arch = mlp.MlpArchitecture(
        input_dim=pairs.dim,
        hidden_dims=_parse_hidden_dims(hidden_dims),
        dropout_rate=dropout_rate,
        bn_epsilon=bn_epsilon,
        bn_momentum=bn_momentum,
    )
    cfg = mlp.TrainConfig(
        epochs=epochs,
        batch_size=batch_size,
        lr=lr,
        weight_decay=weight_decay,
        lr_decay_factor=lr_decay_factor,
        seed=seed,
        normalize_inputs=not raw_inputs,
    )
    result = mlp.train(pairs, arch, cfg)
    mlp.save_checkpoint(result.params, cfg, out)
    click.echo(
        f"trained {result.total_steps} steps over {cfg.epochs} epochs; "
        f"final-epoch mean loss {result.epoch_mean_losses[-1]:.6f}; saved {out}"
    )


@cli.command("score")
@config_option
@click.option("--manifest", required=True, type=str)
@click.option("--images", required=True, type=str)
@click.option(
    "--components",
    default="s_pr,s_fnn",
    show_default=True,
    help="Comma-separated subset of s_pr,s_fnn,s_img.",
)
@click.option("--model", default=None, type=str, help="Checkpoint (for s_fnn).")
@click.option("--guide-normals", default=None, type=str, help="EMB1 (for s_pr).")
@click.option("--guide-anomalies", default=None, type=str, help="EMB1 (for s_pr).")
@click.option("--refs", default=None, type=str, help="Reference EMB1 (for s_img).")
@click.option("--k", default=0, show_default=True, type=int, help="Refs per category.")
@click.option("--seed", default=0, show_default=True, type=int, help="Ref sampling seed.")
@click.option("--temperature", default=scoring.DEFAULT_TEMPERATURE, show_default=True, type=float)
@click.option("--out", required=True, type=str, help="Score CSV to write.")
def score_cmd(
    manifest,
    images,
    components,
    model,
    guide_normals,
    guide_anomalies,
    refs,
    k,
    seed,
    temperature,
    out,
):
    """Compute score components (and their sum) for a manifest of images."""
    component_tuple = _parse_components(components)
    manifest_obj = load_manifest(_resolve_input(manifest))
    image_matrix = read_embeddings(_resolve_input(images))
    if image_matrix.count != len(manifest_obj.entries):
        raise DataError(
            f"{images}: {image_matrix.count} rows for "
            f"{len(manifest_obj.entries)} manifest entries"
        )
    ids = tuple(manifest_obj.paths)
    vectors: list[scoring.ScoreVector] = []
    if "s_pr" in component_tuple:
        if guide_normals is None or guide_anomalies is None:
            raise ConfigError("s_pr needs --guide-normals and --guide-anomalies")
        vectors.append(
            harness.prompt_guided_scores(
                read_embeddings(_resolve_input(guide_normals)),
                read_embeddings(_resolve_input(guide_anomalies)),
                image_matrix,
                manifest_obj,
                temperature,
            )
        )
    if "s_fnn" in component_tuple:
        if model is None:
            raise ConfigError("s_fnn needs --model")
        params, train_cfg = mlp.load_checkpoint(_resolve_input(model))
        vectors.append(
            mlp.score_fnn(
                params,
                image_matrix,
                normalize=train_cfg.normalize_inputs,
                sample_ids=ids,
            )
        )
    if "s_img" in component_tuple:
        if refs is None:
            raise ConfigError("s_img needs --refs")
        if k < 1:
            raise ConfigError("s_img needs --k >= 1")
        vectors.append(
            harness.reference_scores(
                read_embeddings(_resolve_input(refs)),
                image_matrix,
                manifest_obj,
                k,
                seed,
            )
        )
    if len(vectors) > 1:
        vectors.append(scoring.fuse(vectors))
    scoring.write_scores_csv(
        out, vectors, manifest_obj.labels, manifest_obj.entry_categories
    )
    kinds = ",".join(v.kind for v in vectors)
    click.echo(f"wrote {len(ids)} samples x [{kinds}] to {out}")


@cli.command("eval")
@config_option
@click.option("--scores", required=True, type=str, help="Score CSV from 'score'.")
@click.option(
    "--score-kind",
    default=None,
    help="Which score column to evaluate (default: 'sum' if present, else the only kind).",
)
@click.option("--out", default=None, type=str, help="Report JSON (default: stdout).")
def eval_cmd(scores, score_kind, out):
    """Evaluate a score CSV into per-category metrics."""
    by_kind = scoring.read_scores_csv(_resolve_input(scores))
    if score_kind is None:
        if "sum" in by_kind:
            score_kind = "sum"
        elif len(by_kind) == 1:
            score_kind = next(iter(by_kind))
        else:
            raise ConfigError(
                f"--score-kind required; file has {sorted(by_kind)}"
            )
    if score_kind not in by_kind:
        raise ConfigError(
            f"score kind {score_kind!r} not in file (has {sorted(by_kind)})"
        )
    vector, labels, categories = by_kind[score_kind]
    report = metrics.evaluate_scores(vector, labels, categories)
    text = metrics.report_to_json(report)
    if out is None:
        click.echo(text, nl=False)
    else:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        click.echo(f"wrote report to {out}")


@cli.command("report")
@config_option
@click.option("--report", "report_path", required=True, type=str, help="Report JSON.")
@click.option("--out", default=None, type=str, help="Write table here instead of stdout.")
def report_cmd(report_path, out):
    """Render a report JSON as an aligned text table."""
    with open(_resolve_input(report_path), "r", encoding="utf-8") as fh:
        report = metrics.report_from_json(fh.read())
    table = metrics.format_report_table(report)
    if out is None:
        click.echo(table, nl=False)
    else:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(table)
        click.echo(f"wrote table to {out}")


@cli.command("sweep")
@config_option
@click.option(
    "--variable",
    type=click.Choice(["n-pairs", "word-pair"]),
    required=True,
)
@click.option(
    "--values",
    required=True,
    help="Comma-separated integers (n-pairs) or semicolon-separated word pairs.",
)
@click.option("--manifest", required=True, type=str)
@click.option("--images", required=True, type=str)
@click.option("--train-normals", required=True, type=str, help="May contain {value}.")
@click.option("--train-anomalies", required=True, type=str, help="May contain {value}.")
@click.option("--guide-normals", default=None, type=str, help="May contain {value}.")
@click.option("--guide-anomalies", default=None, type=str, help="May contain {value}.")
@click.option("--components", default="s_pr,s_fnn", show_default=True)
@click.option(
    "--setup",
    type=click.Choice(["zero-shot-unknown", "zero-shot-known"]),
    default="zero-shot-unknown",
    show_default=True,
)
@click.option("--seeds", default="0,1,2,3,4,5,6,7,8,9", show_default=True)
@click.option("--epochs", default=2, show_default=True, type=int)
@click.option("--batch-size", default=128, show_default=True, type=int)
@click.option("--lr", default=1e-3, show_default=True, type=float)
@click.option("--weight-decay", default=1e-4, show_default=True, type=float)
@click.option("--lr-decay-factor", default=0.1, show_default=True, type=float)
@click.option("--hidden-dims", default="512,256,128", show_default=True)
@click.option("--dropout-rate", default=0.2, show_default=True, type=float)
@click.option("--raw-inputs", is_flag=True)
@click.option("--temperature", default=scoring.DEFAULT_TEMPERATURE, show_default=True, type=float)
@click.option("--out", required=True, type=str, help="Sweep CSV to write.")
@click.option(
    "--out-dir",
    default=None,
    type=str,
    help="Also write one report JSON per value into this directory.",
)
def sweep_cmd(
    variable,
    values,
    manifest,
    images,
    train_normals,
    train_anomalies,
    guide_normals,
    guide_anomalies,
    components,
    setup,
    seeds,
    epochs,
    batch_size,
    lr,
    weight_decay,
    lr_decay_factor,
    hidden_dims,
    dropout_rate,
    raw_inputs,
    temperature,
    out,
    out_dir,
):
    """Run the experiment once per value of a swept variable."""
    variable_name = variable.replace("-", "_")
    if variable_name == "n_pairs":
        value_tuple: tuple = _parse_ints(values, "sweep values")
    else:
        pair_texts = [part.strip() for part in values.split(";") if part.strip()]
        if not pair_texts:
            raise ConfigError("sweep values must be non-empty")
        for text in pair_texts:
            prompts.parse_word_pair(text)  # validation only
        value_tuple = tuple(pair_texts)
    spec = harness.SweepSpec(variable=variable_name, values=value_tuple)
    paths = harness.ExperimentPaths(
        manifest=_resolve_input(manifest),
        images=_resolve_input(images),
        train_normals=_resolve_input(train_normals),
        train_anomalies=_resolve_input(train_anomalies),
        guide_normals=_resolve_input(guide_normals),
        guide_anomalies=_resolve_input(guide_anomalies),
    )
    cfg = harness.ExperimentConfig(
        paths=paths,
        setup=setup.replace("-", "_"),
        components=_parse_components(components),
        seeds=_parse_ints(seeds, "seeds"),
        temperature=temperature,
        train=mlp.TrainConfig(
            epochs=epochs,
            batch_size=batch_size,
            lr=lr,
            weight_decay=weight_decay,
            lr_decay_factor=lr_decay_factor,
            normalize_inputs=not raw_inputs,
        ),
        hidden_dims=_parse_hidden_dims(hidden_dims),
        dropout_rate=dropout_rate,
    )
    results = harness.run_sweep(cfg, spec)
    with open(out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(harness.sweep_to_csv(results, variable_name))
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        for value, report in results:
            name = f"report_{harness.value_slug(value)}.json"
            with open(os.path.join(out_dir, name), "w", encoding="utf-8", newline="\n") as fh:
                fh.write(metrics.report_to_json(report))
    click.echo(f"swept {len(results)} values of {variable_name}; wrote {out}")


@cli.command("make-fixture")
@config_option
@click.option("--out-dir", required=True, type=str)
@click.option("--dim", default=64, show_default=True, type=int)
@click.option("--n-pairs", default=2000, show_default=True, type=int)
@click.option("--n-test", default=500, show_default=True, type=int)
@click.option("--n-refs", default=4, show_default=True, type=int)
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--margin", default=4.0, show_default=True, type=float)
@click.option("--sigma", default=1.0, show_default=True, type=float)
@click.option("--radius", default=10.0, show_default=True, type=float)
@click.option("--categories", default="synthetic", show_default=True)
def make_fixture_cmd(
    out_dir, dim, n_pairs, n_test, n_refs, seed, margin, sigma, radius, categories
):
    """Write a synthetic Gaussian fixture in the pipeline's file layout."""
    category_tuple = tuple(
        part.strip() for part in categories.split(",") if part.strip()
    )
    if not category_tuple:
        raise ConfigError("at least one category name is required")
    fixture = synthetic.make_fixture(
        dim=dim,
        n_pairs=n_pairs,
        n_test=n_test,
        n_refs=n_refs,
        seed=seed,
        margin=margin,
        sigma=sigma,
        radius=radius,
        categories=category_tuple,
    )
    paths = synthetic.write_fixture(fixture, out_dir)
    for name in sorted(paths):
        click.echo(f"{name}: {paths[name]}")


@cli.command("make-manifest")
@config_option
@click.option("--root", required=True, type=str, help="Dataset root directory.")
@click.option(
    "--layout", type=click.Choice(sorted(adapters.LAYOUT_SCANNERS)), required=True
)
@click.option("--out", default=None, type=str, help="Default: <root>/manifest.json.")
@click.option("--max-refs", default=None, type=int, help="Cap references per category.")
@click.option(
    "--refs-manifest-out",
    default=None,
    type=str,
    help="Also write the flattened reference images as their own manifest.",
)
def make_manifest_cmd(root, layout, out, max_refs, refs_manifest_out):
    """Scan a dataset directory layout into a manifest JSON."""
    root = _resolve_input(root)
    if not os.path.isdir(root):
        raise DataError(f"dataset root {root!r} is not a directory")
    manifest = adapters.LAYOUT_SCANNERS[layout](root, max_refs=max_refs)
    out = out or os.path.join(root, "manifest.json")
    save_manifest(manifest, out)
    click.echo(
        f"wrote {len(manifest.entries)} entries "
        f"({len(manifest.categories)} categories) to {out}"
    )
    if refs_manifest_out is not None:
        save_manifest(refs_as_manifest(manifest), refs_manifest_out)
        click.echo(f"wrote reference manifest to {refs_manifest_out}")


def _fail(exc: BaseException, code: int) -> int:
    click.echo(f"error: {exc}", err=True)
    return code


def main(argv=None) -> int:
    """Entry point with toolkit exit-code mapping."""
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
    except (ConfigError, StateError, ValueError) as exc:
        return _fail(exc, 2)
    except (TrainingError, MetricError, FloatingPointError) as exc:
        return _fail(exc, 4)
    except (RandpromptError, OSError) as exc:
        # remaining toolkit errors are data/format problems, as are I/O failures
        return _fail(exc, 3)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
