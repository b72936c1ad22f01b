"""Synthetic anchor pools with planted cluster and utility structure.

Instances are assigned round-robin to ``clusters`` Gaussian modes. Each mode
has a planted shift magnitude (2, 4, 6, ... by cluster index), so the
recovered per-cluster mean utility must come back in planted order; the
true labels and per-instance planted magnitudes go to a sidecar CSV. All
randomness flows from one seed, so identical calls produce bit-identical
files.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InvalidParams
from .pool_io import AnchorRecord, PoolManifest, write_pool

_CENTER_SCALE = 4.0
_WITHIN_CLUSTER_STD = 0.25
_LAYER_NOISE_STD = 0.05
_SHIFT_JITTER = 0.05


@dataclass
class PlantedLabel:
    instance_id: str
    cluster: int
    planted_shift: float


def synth_pool(
    n: int,
    dim: int,
    layers: int = 1,
    clusters: int = 1,
    seed: int = 0,
    pool_id: str | None = None,
) -> tuple[list[AnchorRecord], PoolManifest, list[PlantedLabel]]:
    """Generate an in-memory pool with planted structure."""
    if n < 1 or dim < 1 or layers < 1:
        raise InvalidParams(f"n, dim, layers must be >= 1, got {n}, {dim}, {layers}")
    if not (1 <= clusters <= n):
        raise InvalidParams(f"clusters must be in [1, n], got {clusters} with n={n}")

    rng = np.random.default_rng(seed)
    centers = rng.normal(0.0, _CENTER_SCALE, size=(clusters, dim))
    magnitudes = 2.0 * (np.arange(clusters) + 1)

    records = []
    labels = []
    ids = []
    for i in range(n):
        cluster = i % clusters
        instance_id = f"inst-{i:05d}"
        ids.append(instance_id)

        start = centers[cluster] + rng.normal(0.0, _WITHIN_CLUSTER_STD, size=dim)
        direction = rng.normal(size=dim)
        direction /= np.linalg.norm(direction)
        shift = float(magnitudes[cluster] * abs(1.0 + _SHIFT_JITTER * rng.normal()))
        end = start + shift * direction

        if layers == 1:
            start_states = start[None, :]
            end_states = end[None, :]
        else:
            start_states = start[None, :] + rng.normal(
                0.0, _LAYER_NOISE_STD, size=(layers, dim)
            )
            end_states = end[None, :] + rng.normal(
                0.0, _LAYER_NOISE_STD, size=(layers, dim)
            )

        # Quantize to storage precision up front so in-memory records equal
        # their on-disk round trip bit for bit.
        records.append(
            AnchorRecord(
                instance_id=instance_id,
                start_states=start_states.astype(np.float32).astype(np.float64),
                end_states=end_states.astype(np.float32).astype(np.float64),
            )
        )
        labels.append(
            PlantedLabel(instance_id=instance_id, cluster=cluster, planted_shift=shift)
        )

    manifest = PoolManifest(
        pool_id=pool_id or f"synth-{seed}",
        instance_count=n,
        hidden_dim=dim,
        layer_count=layers,
        instance_ids=ids,
        extras={"seed": seed, "clusters": clusters, "generator": "planted-gaussian"},
    )
    return records, manifest, labels


def write_labels(labels: list[PlantedLabel], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["instance_id", "cluster", "planted_shift"])
        for label in labels:
            writer.writerow([label.instance_id, label.cluster, repr(label.planted_shift)])


def write_synth_pool(
    n: int,
    dim: int,
    layers: int,
    clusters: int,
    seed: int,
    out_dir: str | Path,
    pool_id: str | None = None,
) -> dict[str, Path]:
    """Generate and write pool.json, pool.bin, labels.csv under ``out_dir``."""
    records, manifest, labels = synth_pool(
        n, dim, layers=layers, clusters=clusters, seed=seed, pool_id=pool_id
    )
    out_dir = Path(out_dir)
    manifest_path = out_dir / "pool.json"
    labels_path = out_dir / "labels.csv"
    write_pool(records, manifest, manifest_path)
    write_labels(labels, labels_path)
    return {
        "manifest": manifest_path,
        "payload": out_dir / "pool.bin",
        "labels": labels_path,
    }
