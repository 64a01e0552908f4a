"""Turn a jsonl text corpus into a SESM embedding file.

One embedding row per corpus line, in file order. Empty texts become
zero rows (with a warning) so row indices always line up with the
corpus. A sidecar manifest records the encoder id, pooling strategy and
row count so downstream experiments stay comparable.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .sesm import write_sesm

log = logging.getLogger(__name__)

DEFAULT_ENCODER = "bert-base-uncased"
POOLING = "mean"


@dataclass
class ExportConfig:
    corpus: str
    out: str
    encoder: str = DEFAULT_ENCODER
    batch: int = 32

    def __post_init__(self):
        if self.batch < 1:
            raise ValueError(f"batch size must be >= 1, got {self.batch}")


class BertMeanEncoder:
    """Pretrained bidirectional encoder with mean pooling.

    Sentence vector = mean of the final-layer token vectors over the
    non-padding positions. The model runs in eval mode with gradients
    disabled, so output is deterministic for a given checkpoint.
    """

    def __init__(self, model_id: str = DEFAULT_ENCODER,
                 model=None, tokenizer=None):
        import torch
        from transformers import AutoModel, AutoTokenizer

        self._torch = torch
        try:
            self.tokenizer = (tokenizer if tokenizer is not None
                              else AutoTokenizer.from_pretrained(model_id))
            self.model = (model if model is not None
                          else AutoModel.from_pretrained(model_id))
        except Exception as exc:
            raise RuntimeError(
                f"cannot load encoder '{model_id}': {exc}") from exc
        self.model.eval()
        self.dim = int(self.model.config.hidden_size)

    def encode(self, texts: list[str]) -> np.ndarray:
        torch = self._torch
        enc = self.tokenizer(texts, padding=True, truncation=True,
                             return_tensors="pt")
        with torch.no_grad():
            hidden = self.model(**enc).last_hidden_state
        mask = enc["attention_mask"].unsqueeze(-1).to(hidden.dtype)
        summed = (hidden * mask).sum(dim=1)
        counts = mask.sum(dim=1).clamp(min=1)
        return (summed / counts).cpu().numpy().astype(np.float32)


def load_texts(path: str | Path) -> list[str]:
    """Texts from a jsonl corpus (``text`` field), in file order."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"corpus file not found: {path}")
    texts = []
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}:{lineno}: invalid JSON: {exc}")
            if "text" not in record:
                raise ValueError(f"{path}:{lineno}: missing 'text' field")
            texts.append(str(record["text"]))
    return texts


def export_embeddings(config: ExportConfig, encoder=None) -> dict:
    """Encode the corpus and write SESM plus a sidecar manifest.

    ``encoder`` may be any object with ``encode(list[str]) -> (n, d)``
    and a ``dim`` attribute; by default the configured pretrained model
    is loaded. Returns the manifest dictionary.
    """
    texts = load_texts(config.corpus)
    if encoder is None:
        encoder = BertMeanEncoder(config.encoder)
    rows = np.zeros((len(texts), encoder.dim), dtype=np.float32)
    non_empty = [(i, t) for i, t in enumerate(texts) if t.strip()]
    n_empty = len(texts) - len(non_empty)
    if n_empty:
        log.warning("%d empty text line(s) exported as zero vectors", n_empty)
    for start in range(0, len(non_empty), config.batch):
        chunk = non_empty[start:start + config.batch]
        vectors = encoder.encode([t for _, t in chunk])
        if vectors.shape[1] != encoder.dim:
            raise ValueError(f"encoder produced dim {vectors.shape[1]}, "
                             f"expected {encoder.dim}")
        for (i, _), vec in zip(chunk, vectors):
            rows[i] = vec
    write_sesm(rows, config.out)
    manifest = {
        "encoder": config.encoder,
        "pooling": POOLING,
        "rows": len(texts),
        "dim": int(encoder.dim),
        "empty_rows": n_empty,
    }
    manifest_path = Path(config.out).with_suffix(
        Path(config.out).suffix + ".manifest.json")
    manifest_path.write_text(json.dumps(manifest, sort_keys=True, indent=2)
                             + "\n", encoding="utf-8")
    return manifest
