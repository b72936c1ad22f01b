"""Anchor-pool and rollout-record file formats.

A pool is a pair of files: a UTF-8 JSON manifest and a raw binary payload of
little-endian float32 values. Per instance the payload holds the L start-anchor
rows followed by the L end-anchor rows, each row ``hidden_dim`` floats,
row-major, in manifest order (``payload bytes = N * 2 * L * D * 4``). The
payload lives next to the manifest as ``<stem>.bin`` unless the manifest names
it via the optional ``data_file`` field. Unknown manifest fields are ignored
(kept in ``PoolManifest.extras``) for forward compatibility.

Rollout records are JSON Lines, one object per instance, carrying the evidence
the baseline scorers consume: sampled answers, CoT embeddings, and token
log-probabilities.

Values are stored as float32 but decoded to float64 before any computation;
NaN/Inf anywhere is a hard ingestion error.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    EmptyPool,
    MalformedManifest,
    MalformedRecord,
    NonFiniteValue,
    PositiveLogprob,
    ShapeMismatch,
    SizeMismatch,
)

STORAGE_DTYPE = "f32le"
ANCHOR_ORDER = "start_then_end"

_MANIFEST_FIELDS = (
    "pool_id",
    "instance_count",
    "hidden_dim",
    "layer_count",
    "instance_ids",
    "dtype",
    "anchor_order",
)


@dataclass
class PoolManifest:
    """Describes one anchor dump: sizes, ordering, and instance identity."""

    pool_id: str
    instance_count: int
    hidden_dim: int
    layer_count: int
    instance_ids: list[str]
    dtype: str = STORAGE_DTYPE
    anchor_order: str = ANCHOR_ORDER
    extras: dict = field(default_factory=dict)

    def payload_bytes(self) -> int:
        return self.instance_count * 2 * self.layer_count * self.hidden_dim * 4


@dataclass
class AnchorRecord:
    """Start/end anchor hidden states for one instance, shape (L, D) each."""

    instance_id: str
    start_states: np.ndarray
    end_states: np.ndarray


@dataclass
class RolloutRecord:
    """Per-instance stochastic rollout evidence for the baseline scorers."""

    instance_id: str
    answers: list[str] = field(default_factory=list)
    cot_embeddings: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))
    question_token_logprobs: list[float] = field(default_factory=list)
    answer_token_logprobs: list[float] = field(default_factory=list)
    question_token_len: int = 0
    response_token_len: int = 0


def _validate_manifest(manifest: PoolManifest) -> None:
    m = manifest
    if not isinstance(m.pool_id, str) or not m.pool_id:
        raise MalformedManifest("pool_id must be a nonempty string")
    for name in ("instance_count", "hidden_dim", "layer_count"):
        value = getattr(m, name)
        if not isinstance(value, int) or isinstance(value, bool) or value < 1:
            raise MalformedManifest(f"{name} must be a positive integer, got {value!r}")
    if m.dtype != STORAGE_DTYPE:
        raise MalformedManifest(f"unsupported dtype {m.dtype!r}, expected {STORAGE_DTYPE!r}")
    if m.anchor_order != ANCHOR_ORDER:
        raise MalformedManifest(
            f"unsupported anchor_order {m.anchor_order!r}, expected {ANCHOR_ORDER!r}"
        )
    if not isinstance(m.instance_ids, list) or not all(
        isinstance(i, str) for i in m.instance_ids
    ):
        raise MalformedManifest("instance_ids must be a list of strings")
    if len(m.instance_ids) != m.instance_count:
        raise MalformedManifest(
            f"instance_ids has {len(m.instance_ids)} entries, "
            f"instance_count says {m.instance_count}"
        )
    if len(set(m.instance_ids)) != len(m.instance_ids):
        raise MalformedManifest("instance_ids contain duplicates")


def _parse_manifest(raw: dict) -> PoolManifest:
    if not isinstance(raw, dict):
        raise MalformedManifest("manifest root must be a JSON object")
    missing = [name for name in _MANIFEST_FIELDS if name not in raw]
    if missing:
        raise MalformedManifest(f"manifest missing fields: {', '.join(missing)}")
    extras = {k: v for k, v in raw.items() if k not in _MANIFEST_FIELDS}
    manifest = PoolManifest(
        pool_id=raw["pool_id"],
        instance_count=raw["instance_count"],
        hidden_dim=raw["hidden_dim"],
        layer_count=raw["layer_count"],
        instance_ids=raw["instance_ids"],
        dtype=raw["dtype"],
        anchor_order=raw["anchor_order"],
        extras=extras,
    )
    _validate_manifest(manifest)
    return manifest


def _payload_path(manifest_path: Path, manifest: PoolManifest) -> Path:
    data_file = manifest.extras.get("data_file")
    if data_file is not None:
        if not isinstance(data_file, str) or not data_file:
            raise MalformedManifest("data_file must be a nonempty string")
        return manifest_path.parent / data_file
    return manifest_path.with_suffix(".bin")


def read_pool(manifest_path: str | Path) -> tuple[list[AnchorRecord], PoolManifest]:
    """Load a pool, returning records in manifest order plus the manifest.

    Raises MalformedManifest, SizeMismatch, or NonFiniteValue; a corrupted
    dump never comes back as silently truncated or padded data.
    """
    manifest_path = Path(manifest_path)
    try:
        raw = json.loads(manifest_path.read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        raise MalformedManifest(f"cannot read manifest {manifest_path}: {exc}") from exc
    manifest = _parse_manifest(raw)

    payload_path = _payload_path(manifest_path, manifest)
    try:
        payload = payload_path.read_bytes()
    except OSError as exc:
        raise MalformedManifest(f"cannot read payload {payload_path}: {exc}") from exc

    expected = manifest.payload_bytes()
    if len(payload) != expected:
        raise SizeMismatch(
            f"payload is {len(payload)} bytes, manifest implies {expected}"
        )

    n, layers, dim = manifest.instance_count, manifest.layer_count, manifest.hidden_dim
    values = np.frombuffer(payload, dtype="<f4").astype(np.float64)
    values = values.reshape(n, 2, layers, dim)

    records = []
    for i, instance_id in enumerate(manifest.instance_ids):
        start = values[i, 0]
        end = values[i, 1]
        if not (np.isfinite(start).all() and np.isfinite(end).all()):
            raise NonFiniteValue(f"non-finite anchor value in instance {instance_id!r}")
        records.append(
            AnchorRecord(instance_id=instance_id, start_states=start, end_states=end)
        )
    return records, manifest


def write_pool(
    records: list[AnchorRecord],
    manifest: PoolManifest,
    manifest_path: str | Path,
) -> None:
    """Emit manifest + binary payload such that ``read_pool`` inverts bit-exactly.

    Values are stored as little-endian float32; callers holding float64 data
    outside the float32 range lose precision by definition of the format.
    """
    if manifest.instance_count == 0 or not records:
        raise EmptyPool("refusing to write a pool with zero instances")
    _validate_manifest(manifest)
    if len(records) != manifest.instance_count:
        raise ShapeMismatch(
            f"{len(records)} records but manifest says {manifest.instance_count}"
        )

    shape = (manifest.layer_count, manifest.hidden_dim)
    rows = []
    for record, expected_id in zip(records, manifest.instance_ids):
        if record.instance_id != expected_id:
            raise ShapeMismatch(
                f"record order mismatch: got {record.instance_id!r}, "
                f"manifest expects {expected_id!r}"
            )
        start = np.asarray(record.start_states, dtype=np.float64)
        end = np.asarray(record.end_states, dtype=np.float64)
        if start.shape != shape or end.shape != shape:
            raise ShapeMismatch(
                f"instance {record.instance_id!r} has shapes "
                f"{start.shape}/{end.shape}, manifest expects {shape}"
            )
        if not (np.isfinite(start).all() and np.isfinite(end).all()):
            raise NonFiniteValue(
                f"non-finite anchor value in instance {record.instance_id!r}"
            )
        rows.append(start)
        rows.append(end)

    payload = np.concatenate([r.reshape(-1) for r in rows]).astype("<f4").tobytes()

    manifest_path = Path(manifest_path)
    payload_path = _payload_path(manifest_path, manifest)
    doc = {
        "pool_id": manifest.pool_id,
        "instance_count": manifest.instance_count,
        "hidden_dim": manifest.hidden_dim,
        "layer_count": manifest.layer_count,
        "instance_ids": manifest.instance_ids,
        "dtype": manifest.dtype,
        "anchor_order": manifest.anchor_order,
    }
    doc.update(manifest.extras)
    manifest_path.write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
    payload_path.write_bytes(payload)


def _as_str_list(value, what: str, instance_id: str) -> list[str]:
    if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
        raise MalformedRecord(f"{what} must be a list of strings in {instance_id!r}")
    return value


def _as_logprobs(value, what: str, instance_id: str) -> list[float]:
    if not isinstance(value, list):
        raise MalformedRecord(f"{what} must be a list in {instance_id!r}")
    out = []
    for v in value:
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise MalformedRecord(f"{what} contains a non-number in {instance_id!r}")
        v = float(v)
        if math.isnan(v) or math.isinf(v):
            raise MalformedRecord(f"{what} contains a non-finite value in {instance_id!r}")
        if v > 0:
            raise PositiveLogprob(
                f"{what} contains {v} > 0 in {instance_id!r}; log-probabilities "
                "must be <= 0"
            )
        out.append(v)
    return out


def _as_embeddings(value, instance_id: str) -> np.ndarray:
    if not isinstance(value, list):
        raise MalformedRecord(f"cot_embeddings must be a list in {instance_id!r}")
    if not value:
        return np.zeros((0, 0))
    widths = set()
    for row in value:
        if not isinstance(row, list):
            raise MalformedRecord(f"cot_embeddings rows must be lists in {instance_id!r}")
        widths.add(len(row))
    if len(widths) != 1:
        raise MalformedRecord(f"ragged cot_embeddings in {instance_id!r}")
    arr = np.asarray(value, dtype=np.float64)
    if not np.isfinite(arr).all():
        raise MalformedRecord(f"non-finite cot_embeddings in {instance_id!r}")
    return arr


def _as_token_len(value, what: str, instance_id: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int) or value < 0:
        raise MalformedRecord(f"{what} must be a nonnegative integer in {instance_id!r}")
    return value


def read_rollout_records(path: str | Path) -> list[RolloutRecord]:
    """Parse a JSON Lines rollout file; missing optional fields become empty."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise MalformedRecord(f"cannot read {path}: {exc}") from exc

    records = []
    seen = set()
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except ValueError as exc:
            raise MalformedRecord(f"line {lineno}: invalid JSON: {exc}") from exc
        if not isinstance(obj, dict):
            raise MalformedRecord(f"line {lineno}: record must be a JSON object")
        instance_id = obj.get("instance_id")
        if not isinstance(instance_id, str) or not instance_id:
            raise MalformedRecord(f"line {lineno}: missing or invalid instance_id")
        if instance_id in seen:
            raise MalformedRecord(f"line {lineno}: duplicate instance_id {instance_id!r}")
        seen.add(instance_id)
        records.append(
            RolloutRecord(
                instance_id=instance_id,
                answers=_as_str_list(obj.get("answers", []), "answers", instance_id),
                cot_embeddings=_as_embeddings(obj.get("cot_embeddings", []), instance_id),
                question_token_logprobs=_as_logprobs(
                    obj.get("question_token_logprobs", []),
                    "question_token_logprobs",
                    instance_id,
                ),
                answer_token_logprobs=_as_logprobs(
                    obj.get("answer_token_logprobs", []),
                    "answer_token_logprobs",
                    instance_id,
                ),
                question_token_len=_as_token_len(
                    obj.get("question_token_len", 0), "question_token_len", instance_id
                ),
                response_token_len=_as_token_len(
                    obj.get("response_token_len", 0), "response_token_len", instance_id
                ),
            )
        )
    return records


def write_rollout_records(records: list[RolloutRecord], path: str | Path) -> None:
    """Write rollout records as JSON Lines, one object per instance."""
    lines = []
    for record in records:
        embeddings = np.asarray(record.cot_embeddings, dtype=np.float64)
        lines.append(
            json.dumps(
                {
                    "instance_id": record.instance_id,
                    "answers": list(record.answers),
                    "cot_embeddings": embeddings.tolist() if embeddings.size else [],
                    "question_token_logprobs": [float(v) for v in record.question_token_logprobs],
                    "answer_token_logprobs": [float(v) for v in record.answer_token_logprobs],
                    "question_token_len": int(record.question_token_len),
                    "response_token_len": int(record.response_token_len),
                }
            )
        )
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")
