"""Experiment harness: config validation, scoring helpers, runs, sweeps."""

from __future__ import annotations

import dataclasses

import numpy as np
import pytest

from randprompt_ad import harness
from randprompt_ad.embeddings import EmbeddingMatrix, read_embeddings
from randprompt_ad.errors import ConfigError, DataError
from randprompt_ad.harness import (
    ExperimentConfig,
    ExperimentPaths,
    SweepSpec,
    prompt_guided_scores,
    reference_scores,
    run_few_shot,
    run_sweep,
    run_zero_shot,
    select_reference_rows,
    sweep_to_csv,
    value_slug,
)
from randprompt_ad.manifest import load_manifest
from randprompt_ad.metrics import report_to_json
from randprompt_ad.mlp import TrainConfig
from randprompt_ad.synthetic import make_fixture

FAST_TRAIN = TrainConfig(epochs=2, batch_size=64, lr=1e-2, lr_decay_factor=0.5)


def experiment_paths(paths: dict) -> ExperimentPaths:
    return ExperimentPaths(
        manifest=paths["manifest"],
        images=paths["images"],
        train_normals=paths["train_normals"],
        train_anomalies=paths["train_anomalies"],
        guide_normals=paths["guide_normals"],
        guide_anomalies=paths["guide_anomalies"],
        refs=paths["refs"],
    )


class TestConfigValidation:
    def minimal(self, **overrides) -> ExperimentConfig:
        defaults = dict(
            paths=ExperimentPaths(manifest="m.json", images="i.emb1"),
            components=("s_pr",),
            seeds=(0,),
        )
        defaults.update(overrides)
        return ExperimentConfig(**defaults)

    def test_defaults_accepted(self):
        cfg = self.minimal()
        assert cfg.setup == "zero_shot_unknown"
        assert cfg.meta()["components"] == ["s_pr"]

    @pytest.mark.parametrize(
        "overrides",
        [
            dict(setup="one_shot"),
            dict(components=()),
            dict(components=("s_magic",)),
            dict(components=("s_pr", "s_pr")),
            dict(seeds=()),
            dict(seeds=(1, 1)),
            dict(temperature=0.0),
            dict(temperature=-0.01),
            dict(components=("s_pr", "s_img")),  # s_img outside few_shot
            dict(setup="few_shot", components=("s_img",), k=0),
            dict(setup="few_shot", components=("s_pr",), k=2),  # missing s_img
            dict(k=3),  # k outside few_shot
        ],
    )
    def test_rejections(self, overrides):
        with pytest.raises(ConfigError):
            self.minimal(**overrides)


class TestPromptGuidedScores:
    def test_labels_separated_on_fixture(self, fixture_paths):
        manifest = load_manifest(fixture_paths["manifest"])
        scores = prompt_guided_scores(
            read_embeddings(fixture_paths["guide_normals"]),
            read_embeddings(fixture_paths["guide_anomalies"]),
            read_embeddings(fixture_paths["images"]),
            manifest,
        )
        assert scores.kind == "s_pr"
        assert scores.sample_ids == tuple(manifest.paths)
        labels = manifest.labels
        assert np.median(scores.values[labels == 1]) > np.median(
            scores.values[labels == 0]
        )

    def test_swapping_guides_complements(self, fixture_paths):
        manifest = load_manifest(fixture_paths["manifest"])
        images = read_embeddings(fixture_paths["images"])
        normals = read_embeddings(fixture_paths["guide_normals"])
        anomalies = read_embeddings(fixture_paths["guide_anomalies"])
        forward = prompt_guided_scores(normals, anomalies, images, manifest)
        swapped = prompt_guided_scores(anomalies, normals, images, manifest)
        assert np.allclose(forward.values + swapped.values, 1.0, atol=1e-12)

    def test_per_category_guides(self, two_category_paths):
        manifest = load_manifest(two_category_paths["manifest"])
        images = read_embeddings(two_category_paths["images"])
        guide = read_embeddings(two_category_paths["guide_normals"])
        # Stack the single guide row once per category (sorted order).
        per_cat_n = EmbeddingMatrix(np.repeat(guide.data, 2, axis=0), "text")
        per_cat_a = EmbeddingMatrix(
            np.repeat(read_embeddings(two_category_paths["guide_anomalies"]).data,
                      2, axis=0),
            "text",
        )
        stacked = prompt_guided_scores(per_cat_n, per_cat_a, images, manifest)
        single = prompt_guided_scores(
            read_embeddings(two_category_paths["guide_normals"]),
            read_embeddings(two_category_paths["guide_anomalies"]),
            images,
            manifest,
        )
        assert np.allclose(stacked.values, single.values, atol=1e-12)

    def test_bad_guide_shapes_rejected(self, fixture_paths):
        manifest = load_manifest(fixture_paths["manifest"])
        images = read_embeddings(fixture_paths["images"])
        guide = read_embeddings(fixture_paths["guide_normals"])
        three_rows = EmbeddingMatrix(np.tile(guide.data, (3, 1)), "text")
        with pytest.raises(DataError, match="guide normals"):
            prompt_guided_scores(three_rows, three_rows, images, manifest)
        narrow = EmbeddingMatrix(guide.data[:, :8], "text")
        with pytest.raises(DataError, match="dim"):
            prompt_guided_scores(narrow, narrow, images, manifest)
        two_rows = EmbeddingMatrix(np.tile(guide.data, (2, 1)), "text")
        with pytest.raises(DataError):
            prompt_guided_scores(guide, two_rows, images, manifest)


class TestSelectReferenceRows:
    def manifest(self, fixture_paths):
        return load_manifest(fixture_paths["manifest"])

    def test_deterministic_sorted_in_range(self, fixture_paths):
        manifest = self.manifest(fixture_paths)
        first = select_reference_rows(manifest, k=3, seed=7)
        second = select_reference_rows(manifest, k=3, seed=7)
        rows = first["synthetic"]
        assert np.array_equal(rows, second["synthetic"])
        assert rows.size == 3
        assert np.all(np.diff(rows) > 0)  # sorted, unique
        assert rows.min() >= 0 and rows.max() < 6

    def test_seed_changes_selection(self, fixture_paths):
        manifest = self.manifest(fixture_paths)
        draws = {
            tuple(select_reference_rows(manifest, k=2, seed=s)["synthetic"])
            for s in range(20)
        }
        assert len(draws) > 1

    def test_nested_selections_across_k(self, fixture_paths):
        manifest = self.manifest(fixture_paths)
        small = set(select_reference_rows(manifest, k=2, seed=3)["synthetic"])
        large = set(select_reference_rows(manifest, k=4, seed=3)["synthetic"])
        assert small <= large  # same shuffle, first-k prefixes nest

    def test_multi_category_offsets(self, two_category_paths):
        manifest = load_manifest(two_category_paths["manifest"])
        rows = select_reference_rows(manifest, k=2, seed=0)
        assert sorted(rows) == ["gasket", "widget"]
        # gasket sorts first: rows 0..5; widget: rows 6..11
        assert rows["gasket"].min() >= 0 and rows["gasket"].max() < 6
        assert rows["widget"].min() >= 6 and rows["widget"].max() < 12

    def test_validation(self, fixture_paths):
        manifest = self.manifest(fixture_paths)
        with pytest.raises(ConfigError):
            select_reference_rows(manifest, k=0, seed=0)
        with pytest.raises(ConfigError, match="synthetic"):
            select_reference_rows(manifest, k=7, seed=0)


class TestReferenceScores:
    def test_separates_labels(self, fixture_paths):
        manifest = load_manifest(fixture_paths["manifest"])
        scores = reference_scores(
            read_embeddings(fixture_paths["refs"]),
            read_embeddings(fixture_paths["images"]),
            manifest,
            k=2,
            seed=0,
        )
        assert scores.kind == "s_img"
        labels = manifest.labels
        assert np.median(scores.values[labels == 1]) > np.median(
            scores.values[labels == 0]
        )

    def test_scores_weakly_decrease_with_k(self, fixture_paths):
        # For one seed the k-reference subsets nest, so the max reference
        # cosine can only grow and the score can only shrink.
        manifest = load_manifest(fixture_paths["manifest"])
        refs = read_embeddings(fixture_paths["refs"])
        images = read_embeddings(fixture_paths["images"])
        previous = None
        for k in (1, 2, 4):
            values = reference_scores(refs, images, manifest, k=k, seed=11).values
            if previous is not None:
                assert np.all(values <= previous + 1e-12)
            previous = values

    def test_mismatches_rejected(self, fixture_paths):
        manifest = load_manifest(fixture_paths["manifest"])
        refs = read_embeddings(fixture_paths["refs"])
        images = read_embeddings(fixture_paths["images"])
        with pytest.raises(DataError, match="rows"):
            reference_scores(
                EmbeddingMatrix(refs.data[:3], "image"), images, manifest, 2, 0
            )
        with pytest.raises(DataError, match="dim"):
            reference_scores(
                EmbeddingMatrix(refs.data[:, :8], "image"), images, manifest, 2, 0
            )


class TestRunZeroShot:
    def config(self, paths: dict, **overrides) -> ExperimentConfig:
        defaults = dict(
            paths=experiment_paths(paths),
            components=("s_pr", "s_fnn"),
            seeds=(0, 1),
            train=FAST_TRAIN,
            hidden_dims=(32, 16, 8),
        )
        defaults.update(overrides)
        return ExperimentConfig(**defaults)

    def test_high_auroc_and_determinism(self, fixture_paths):
        cfg = self.config(fixture_paths)
        report = run_zero_shot(cfg)
        assert report.n_runs == 2
        assert report.aggregate["auroc"].mean > 0.95
        assert report.meta["setup"] == "zero_shot_unknown"
        again = run_zero_shot(cfg)
        assert report_to_json(report) == report_to_json(again)

    def test_prompt_only_run_never_trains(self, fixture_paths, monkeypatch):
        def forbidden(*args, **kwargs):
            raise AssertionError("train() must not run for s_pr-only configs")

        monkeypatch.setattr(harness, "train", forbidden)
        report = run_zero_shot(self.config(fixture_paths, components=("s_pr",)))
        assert report.aggregate["auroc"].mean > 0.95
        assert report.meta["components"] == ["s_pr"]

    def test_two_categories_reported(self, two_category_paths):
        report = run_zero_shot(
            self.config(two_category_paths, components=("s_pr",), seeds=(0,))
        )
        assert sorted(report.per_category) == ["gasket", "widget"]
        for category in ("gasket", "widget"):
            assert report.per_category[category]["auroc"].mean > 0.95

    def test_setup_guard(self, fixture_paths):
        cfg = self.config(
            fixture_paths, setup="few_shot", components=("s_pr", "s_img"), k=2
        )
        with pytest.raises(ConfigError):
            run_zero_shot(cfg)

    def test_unset_paths_rejected(self, fixture_paths):
        cfg = self.config(fixture_paths)
        bare = dataclasses.replace(
            cfg,
            paths=ExperimentPaths(
                manifest=fixture_paths["manifest"], images=fixture_paths["images"]
            ),
        )
        with pytest.raises(ConfigError, match="guide_normals"):
            run_zero_shot(bare)

    def test_missing_files_reported(self, fixture_paths, tmp_path):
        cfg = self.config(fixture_paths)
        broken = dataclasses.replace(
            cfg,
            paths=dataclasses.replace(
                cfg.paths, images=str(tmp_path / "absent.emb1")
            ),
        )
        with pytest.raises(FileNotFoundError, match="absent.emb1"):
            run_zero_shot(broken)

    def test_image_count_mismatch_rejected(self, fixture_paths, tmp_path):
        from randprompt_ad.embeddings import write_embeddings

        images = read_embeddings(fixture_paths["images"])
        short = EmbeddingMatrix(images.data[:-1], "image")
        short_path = str(tmp_path / "short.emb1")
        write_embeddings(short, short_path)
        cfg = self.config(fixture_paths)
        broken = dataclasses.replace(
            cfg, paths=dataclasses.replace(cfg.paths, images=short_path)
        )
        with pytest.raises(DataError, match="manifest entries"):
            run_zero_shot(broken)


class TestRunFewShot:
    def test_few_shot_run(self, fixture_paths):
        cfg = ExperimentConfig(
            paths=experiment_paths(fixture_paths),
            setup="few_shot",
            components=("s_pr", "s_img"),
            seeds=(0, 1),
            k=2,
        )
        report = run_few_shot(cfg)
        assert report.aggregate["auroc"].mean > 0.95
        assert report.meta["k"] == 2

    def test_setup_guard(self, fixture_paths):
        cfg = ExperimentConfig(
            paths=experiment_paths(fixture_paths),
            components=("s_pr",),
            seeds=(0,),
        )
        with pytest.raises(ConfigError):
            run_few_shot(cfg)


class TestSweep:
    def test_spec_validation(self):
        with pytest.raises(ConfigError):
            SweepSpec(variable="margin", values=(1,))
        with pytest.raises(ConfigError):
            SweepSpec(variable="n_pairs", values=())

    def test_value_slug(self):
        assert value_slug(2000) == "2000"
        assert value_slug("padded/a damaged") == "padded__a-damaged"

    def test_substitute_touches_every_path(self):
        paths = ExperimentPaths(
            manifest="m-{value}.json",
            images="i-{value}.emb1",
            train_normals="tn-{value}.emb1",
            train_anomalies="ta-{value}.emb1",
            guide_normals="gn-{value}.emb1",
            guide_anomalies="ga-{value}.emb1",
            refs="r-{value}.emb1",
        )
        substituted = harness._substitute(paths, "400")
        for field in dataclasses.fields(substituted):
            value = getattr(substituted, field.name)
            assert "{value}" not in value
            assert "400" in value

    def test_substitute_keeps_none(self):
        paths = ExperimentPaths(manifest="m.json", images="i.emb1")
        substituted = harness._substitute(paths, "x")
        assert substituted.refs is None

    def test_single_value_sweep_matches_direct_run(self, fixture_paths):
        cfg = ExperimentConfig(
            paths=experiment_paths(fixture_paths),
            components=("s_pr",),
            seeds=(0, 1),
        )
        results = run_sweep(cfg, SweepSpec("n_pairs", (400,)))
        assert len(results) == 1
        value, swept = results[0]
        assert value == 400
        direct = run_zero_shot(dataclasses.replace(cfg, n_pairs=400))
        assert report_to_json(swept) == report_to_json(direct)

    def test_word_pair_sweep_sets_meta(self, fixture_paths):
        cfg = ExperimentConfig(
            paths=experiment_paths(fixture_paths),
            components=("s_pr",),
            seeds=(0,),
        )
        results = run_sweep(cfg, SweepSpec("word_pair", ("a/a damaged",)))
        assert results[0][1].meta["word_pair"] == "a/a damaged"

    def test_sweep_csv_layout(self, fixture_paths):
        cfg = ExperimentConfig(
            paths=experiment_paths(fixture_paths),
            components=("s_pr",),
            seeds=(0,),
        )
        results = run_sweep(cfg, SweepSpec("n_pairs", (400,)))
        text = sweep_to_csv(results, "n_pairs")
        lines = text.strip().split("\n")
        assert lines[0] == (
            "variable,value,auroc_mean,auroc_std,aupr_mean,aupr_std,"
            "f1_max_mean,f1_max_std"
        )
        assert lines[1].startswith("n_pairs,400,")
        assert len(lines) == 2
        # values round-trip through repr exactly
        auroc_mean = float(lines[1].split(",")[2])
        assert auroc_mean == results[0][1].aggregate["auroc"].mean

    def test_sweep_paths_substitution_end_to_end(self, tmp_path):
        from randprompt_ad.synthetic import write_fixture

        for n_pairs in (30, 60):
            fx = make_fixture(dim=8, n_pairs=n_pairs, n_test=10, n_refs=2, seed=0)
            write_fixture(fx, str(tmp_path / f"np-{n_pairs}"))
        base = str(tmp_path / "np-{value}")
        cfg = ExperimentConfig(
            paths=ExperimentPaths(
                manifest=f"{base}/manifest.json",
                images=f"{base}/images.emb1",
                guide_normals=f"{base}/guide_normals.emb1",
                guide_anomalies=f"{base}/guide_anomalies.emb1",
            ),
            components=("s_pr",),
            seeds=(0,),
        )
        results = run_sweep(cfg, SweepSpec("n_pairs", (30, 60)))
        assert [value for value, _ in results] == [30, 60]
        for _, report in results:
            assert report.aggregate["auroc"].mean > 0.9
            assert report.meta["n_pairs"] in (30, 60)
