"""Shared fixtures for the bridge tests.

Everything runs offline against :class:`~clip_bridge.StubEncoder`; tests
that need the real OpenCLIP backend guard themselves with
``pytest.importorskip("open_clip")``.
"""

import json

import pytest
from PIL import Image

from clip_bridge import ExtractorConfig, StubEncoder

#: Small embedding width so stub extraction stays instant.
STUB_DIM = 12


@pytest.fixture()
def cfg():
    # batch_size 3 forces a partial final batch on most fixtures
    return ExtractorConfig(batch_size=3)


@pytest.fixture()
def encoder(cfg):
    return StubEncoder(cfg.model_tag, cfg.pretrained_tag, dim=STUB_DIM)


@pytest.fixture()
def make_prompt_file(tmp_path):
    """Factory writing a well-formed prompt file; returns its path."""

    def _write(pairs, seed=0, name="prompts.txt"):
        lines = [f"#randprompt v1 seed={seed} n={len(pairs)}"]
        for normal, anomaly in pairs:
            lines.append(normal)
            lines.append(anomaly)
        path = tmp_path / name
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        return path

    return _write


@pytest.fixture()
def make_image_tree(tmp_path):
    """Factory building an image directory plus manifest.json.

    ``entries`` is a list of ``(relative_path, label, category, color)``;
    each image is written as a solid-color 300x260 RGB PNG unless
    ``color`` is None (then the path is left missing). Returns
    ``(root, manifest_path)``.
    """

    def _build(entries, size=(300, 260), name="data"):
        root = tmp_path / name
        manifest_entries = []
        for rel_path, label, category, color in entries:
            if color is not None:
                target = root / rel_path
                target.parent.mkdir(parents=True, exist_ok=True)
                Image.new("RGB", size, color).save(target)
            manifest_entries.append(
                {"path": rel_path, "label": label, "category": category}
            )
        root.mkdir(parents=True, exist_ok=True)
        manifest_path = root / "manifest.json"
        manifest_path.write_text(
            json.dumps({"entries": manifest_entries, "refs": {}}, indent=2) + "\n",
            encoding="utf-8",
        )
        return root, manifest_path

    return _build
