"""Bridge fidelity check against a minimal reference OpenCLIP pipeline.

Embeds "a photo of a object" twice — once through clip_bridge and once
with open_clip called directly — and requires cosine >= 1 - 1e-5. Also
round-trips a 100-prompt file to confirm row order. Needs
``open-clip-torch`` installed and the model weights available; run::

    python3 scripts/check_fidelity.py [--model-tag ViT-B-16-plus-240]
                                      [--pretrained-tag laion400m_e31]

Exit code 0 on PASS, 1 on FAIL, 2 if OpenCLIP is unavailable.
"""

from __future__ import annotations

import argparse
import sys
import tempfile

import numpy as np

from clip_bridge.config import ExtractorConfig
from clip_bridge.emb1 import read_emb1
from clip_bridge.encoders import OpenClipEncoder
from clip_bridge.errors import EncoderError
from clip_bridge.extract import embed_prompts

REFERENCE_PROMPT = "a photo of a object"
COSINE_FLOOR = 1.0 - 1e-5


def reference_embedding(model_tag: str, pretrained_tag: str) -> np.ndarray:
    """The minimal reference pipeline: open_clip called directly."""
    import open_clip
    import torch

    model, _, _ = open_clip.create_model_and_transforms(
        model_tag, pretrained=pretrained_tag
    )
    tokenizer = open_clip.get_tokenizer(model_tag)
    with torch.no_grad():
        return (
            model.eval()
            .encode_text(tokenizer([REFERENCE_PROMPT]))
            .numpy()
            .astype(np.float64)[0]
        )


def write_prompt_file(path: str, n_pairs: int) -> list[str]:
    lines = [f"#randprompt v1 seed=0 n={n_pairs}"]
    for i in range(n_pairs):
        lines.append(f"a photo of a test object number {i}")
        lines.append(f"a photo of a damaged test object number {i}")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    return lines[1:]


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--model-tag", default="ViT-B-16-plus-240")
    parser.add_argument("--pretrained-tag", default="laion400m_e31")
    args = parser.parse_args()

    cfg = ExtractorConfig(
        model_tag=args.model_tag, pretrained_tag=args.pretrained_tag
    )
    try:
        encoder = OpenClipEncoder(cfg)
    except EncoderError as exc:
        print(f"SKIP: {exc}", file=sys.stderr)
        return 2

    bridge_rows, _ = encoder.encode_texts([REFERENCE_PROMPT])
    bridge = bridge_rows[0].astype(np.float64)
    reference = reference_embedding(args.model_tag, args.pretrained_tag)
    cosine = float(
        bridge @ reference / (np.linalg.norm(bridge) * np.linalg.norm(reference))
    )
    fidelity_ok = cosine >= COSINE_FLOOR
    print(f"{'PASS' if fidelity_ok else 'FAIL'} text fidelity: cosine {cosine:.8f} "
          f"(floor {COSINE_FLOOR})")

    with tempfile.TemporaryDirectory() as tmp:
        prompt_path = f"{tmp}/prompts.txt"
        lines = write_prompt_file(prompt_path, n_pairs=100)
        result = embed_prompts(prompt_path, tmp, cfg, encoder)
        normals, _ = read_emb1(result.emb1_paths[0])
        # spot-check order: rows 0 and 99 must match their lines' embeddings
        head, _ = encoder.encode_texts([lines[0]])
        tail, _ = encoder.encode_texts([lines[198]])
        order_ok = bool(
            np.allclose(normals[0], head[0], atol=1e-5)
            and np.allclose(normals[99], tail[0], atol=1e-5)
        )
    print(f"{'PASS' if order_ok else 'FAIL'} row order on a 100-prompt file")
    return 0 if (fidelity_ok and order_ok) else 1


if __name__ == "__main__":
    sys.exit(main())
