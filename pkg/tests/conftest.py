"""Shared fixtures: synthetic datasets written once per session."""

from __future__ import annotations

import pytest

from randprompt_ad import synthetic


@pytest.fixture(scope="session")
def fixture_paths(tmp_path_factory) -> dict:
    """One-category synthetic dataset, small enough for fast tests."""
    out = tmp_path_factory.mktemp("fixture")
    fix = synthetic.make_fixture(dim=32, n_pairs=400, n_test=120, n_refs=6, seed=0)
    return synthetic.write_fixture(fix, str(out))


@pytest.fixture(scope="session")
def two_category_paths(tmp_path_factory) -> dict:
    """Two-category synthetic dataset for per-category behaviour."""
    out = tmp_path_factory.mktemp("fixture2")
    fix = synthetic.make_fixture(
        dim=32,
        n_pairs=300,
        n_test=80,
        n_refs=6,
        seed=1,
        categories=("widget", "gasket"),
    )
    return synthetic.write_fixture(fix, str(out))
