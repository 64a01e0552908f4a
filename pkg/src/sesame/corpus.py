"""Corpus ingestion, WER computation and WER bucketing.

A corpus is a line-delimited UTF-8 file of JSON records with fields
``id`` (required), ``text`` (required) and ``wer`` (optional).
Embeddings live in a small binary format ("SESM"): a fixed header
followed by row-major float32 data, one row per corpus line.
"""

from __future__ import annotations

import json
import struct
import unicodedata
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataError, UsageError

DEFAULT_BUCKET_BOUNDS = (0.05, 0.1, 0.15, 0.2, 0.3, 0.5, 1.0)

_SESM_MAGIC = b"SESM"
_SESM_VERSION = 1


@dataclass
class Utterance:
    id: str
    text: str
    wer: float | None = None
    class_label: int | None = None


@dataclass(frozen=True)
class WerScore:
    substitutions: int
    deletions: int
    insertions: int
    reference_length: int

    @property
    def value(self) -> float:
        return (self.substitutions + self.deletions + self.insertions) / self.reference_length


@dataclass(frozen=True)
class BucketSpec:
    """Ordered upper bounds of the ordinal difficulty classes.

    A WER w falls into the smallest class i with w <= upper_bounds[i];
    anything above the last bound goes into the last class.
    """

    upper_bounds: tuple[float, ...] = DEFAULT_BUCKET_BOUNDS

    def __post_init__(self):
        bounds = tuple(float(b) for b in self.upper_bounds)
        object.__setattr__(self, "upper_bounds", bounds)
        if len(bounds) < 2:
            raise UsageError("bucket spec needs at least 2 classes")
        if any(b <= 0 for b in bounds):
            raise UsageError("bucket bounds must be positive")
        if any(b1 >= b2 for b1, b2 in zip(bounds, bounds[1:])):
            raise UsageError("bucket bounds must be strictly increasing")
        if bounds[-1] < 1.0:
            raise UsageError("last bucket bound must be >= 1")

    @property
    def k(self) -> int:
        return len(self.upper_bounds)


def normalize_text(raw: str) -> list[str]:
    """Lowercase, strip punctuation and split on whitespace.

    Unicode punctuation is removed; apostrophes between word characters
    are kept so contractions stay one token.
    """
    lowered = raw.lower()
    out = []
    for i, ch in enumerate(lowered):
        if unicodedata.category(ch).startswith("P"):
            if ch == "'" and 0 < i < len(lowered) - 1 \
                    and lowered[i - 1].isalnum() and lowered[i + 1].isalnum():
                out.append(ch)
            # dropped otherwise
        else:
            out.append(ch)
    return "".join(out).split()


def compute_wer(reference: list[str], hypothesis: list[str]) -> WerScore:
    """Minimal-edit alignment counts between reference and hypothesis.

    Ties in the alignment are broken preferring substitution, then
    insertion, then deletion, so the S/D/I split is deterministic.
    """
    n, m = len(reference), len(hypothesis)
    if n == 0:
        raise UsageError("undefined WER denominator: empty reference")
    # One row of the DP table at a time; each cell is (distance, S, D, I).
    prev = [(j, 0, 0, j) for j in range(m + 1)]
    for i in range(1, n + 1):
        ri = reference[i - 1]
        cur = [(i, 0, i, 0)] + [None] * m
        for j in range(1, m + 1):
            pd, ps, pD, pI = prev[j - 1]
            sub = 0 if ri == hypothesis[j - 1] else 1
            sub_d = pd + sub
            ld, ls, lD, lI = cur[j - 1]
            ud, us, uD, uI = prev[j]
            ins_d = ld + 1
            del_d = ud + 1
            if sub_d <= ins_d and sub_d <= del_d:
                cur[j] = (sub_d, ps + sub, pD, pI)
            elif ins_d <= del_d:
                cur[j] = (ins_d, ls, lD, lI + 1)
            else:
                cur[j] = (del_d, us, uD + 1, uI)
        prev = cur
    _, s, d, ins = prev[m]
    return WerScore(substitutions=s, deletions=d, insertions=ins, reference_length=n)


def bucketize(wer: float, spec: BucketSpec = BucketSpec()) -> int:
    """Smallest class index whose upper bound covers ``wer`` (inclusive)."""
    if wer < 0:
        raise UsageError(f"negative WER: {wer}")
    for i, bound in enumerate(spec.upper_bounds):
        if wer <= bound:
            return i
    return spec.k - 1


def label_corpus(utterances: list[Utterance], spec: BucketSpec = BucketSpec()) -> None:
    """Fill in class_label from wer for every utterance that has one."""
    for utt in utterances:
        if utt.wer is not None:
            utt.class_label = bucketize(utt.wer, spec)


def load_corpus(path: str | Path) -> list[Utterance]:
    """Read a line-delimited corpus, preserving file order."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"corpus file not found: {path}")
    utterances = []
    seen = set()
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}:{lineno}: invalid record: {exc}") from exc
            if not isinstance(rec, dict) or "id" not in rec:
                raise DataError(f"{path}:{lineno}: record missing 'id'")
            if "text" not in rec:
                raise DataError(f"{path}:{lineno}: record missing 'text'")
            uid = str(rec["id"])
            if uid in seen:
                raise DataError(f"{path}:{lineno}: duplicate id '{uid}'")
            seen.add(uid)
            wer = rec.get("wer")
            if wer is not None:
                wer = float(wer)
                if wer < 0:
                    raise DataError(f"{path}:{lineno}: negative wer {wer}")
            utterances.append(Utterance(id=uid, text=str(rec["text"]), wer=wer))
    return utterances


def save_corpus(utterances: list[Utterance], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for utt in utterances:
            rec = {"id": utt.id, "text": utt.text}
            if utt.wer is not None:
                rec["wer"] = utt.wer
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


def save_embeddings(matrix: np.ndarray, path: str | Path) -> None:
    """Write an embedding matrix in the SESM binary format (float32 LE)."""
    matrix = np.asarray(matrix)
    if matrix.ndim != 2:
        raise UsageError(f"embedding matrix must be 2-D, got shape {matrix.shape}")
    count, dim = matrix.shape
    with Path(path).open("wb") as fh:
        fh.write(_SESM_MAGIC)
        fh.write(struct.pack("<HHQI4x", _SESM_VERSION, 0, count, dim))
        fh.write(np.ascontiguousarray(matrix, dtype="<f4").tobytes())


def load_embeddings(path: str | Path, expected_count: int | None = None) -> np.ndarray:
    """Read a SESM file back; bit-exact with save_embeddings."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"embeddings file not found: {path}")
    raw = path.read_bytes()
    header_size = 4 + struct.calcsize("<HHQI4x")
    if len(raw) < header_size:
        raise DataError(f"{path}: truncated header")
    if raw[:4] != _SESM_MAGIC:
        raise DataError(f"{path}: bad magic {raw[:4]!r}, expected {_SESM_MAGIC!r}")
    version, _flags, count, dim = struct.unpack("<HHQI4x", raw[4:header_size])
    if version != _SESM_VERSION:
        raise DataError(f"{path}: unsupported version {version}")
    payload = raw[header_size:]
    expected_bytes = count * dim * 4
    if len(payload) != expected_bytes:
        raise DataError(f"{path}: payload is {len(payload)} bytes, expected {expected_bytes}")
    matrix = np.frombuffer(payload, dtype="<f4").reshape(count, dim)
    if expected_count is not None and count != expected_count:
        raise DataError(f"{path}: contains {count} rows, expected {expected_count}")
    if not np.all(np.isfinite(matrix)):
        raise DataError(f"{path}: non-finite values in payload")
    return matrix
