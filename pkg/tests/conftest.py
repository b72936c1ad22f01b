"""Shared builders for the test suite.

Pools are always generated through float32 quantization so that in-memory
arrays equal their on-disk round trip bit for bit (the storage format is
little-endian float32).
"""

import numpy as np

from rirs.features import RirsFeatures
from rirs.pool_io import AnchorRecord, PoolManifest


def quantized(rng: np.random.Generator, shape, scale=1.0) -> np.ndarray:
    return (rng.normal(scale=scale, size=shape).astype(np.float32)).astype(np.float64)


def random_pool(rng: np.random.Generator, n: int, dim: int, layers: int = 1, pool_id="pool"):
    """A valid in-memory pool of n instances with f32-representable values."""
    ids = [f"inst-{i:05d}" for i in range(n)]
    records = [
        AnchorRecord(
            instance_id=i,
            start_states=quantized(rng, (layers, dim)),
            end_states=quantized(rng, (layers, dim)),
        )
        for i in ids
    ]
    manifest = PoolManifest(
        pool_id=pool_id,
        instance_count=n,
        hidden_dim=dim,
        layer_count=layers,
        instance_ids=ids,
    )
    return records, manifest


def make_features(phis, q_tildes, variant="delta") -> list[RirsFeatures]:
    """Hand-built selector inputs; the selectors only read phi and q_tilde."""
    feats = []
    for i, (phi, qt) in enumerate(zip(phis, q_tildes)):
        phi = np.asarray(phi, dtype=np.float64)
        q = float(np.expm1(min(float(qt), 700.0)))  # scaled q_tilde can exceed exp range
        feats.append(
            RirsFeatures(
                instance_id=f"inst-{i:05d}",
                s=np.zeros_like(phi),
                e=np.zeros_like(phi),
                delta=np.zeros_like(phi),
                q=q,
                q_tilde=float(qt),
                phi=phi,
                variant=variant,
            )
        )
    return feats


def random_features(rng: np.random.Generator, n: int, dim: int) -> list[RirsFeatures]:
    """Random unit coverage features with positive utilities."""
    phi = rng.normal(size=(n, dim))
    phi /= np.linalg.norm(phi, axis=1, keepdims=True)
    q_tilde = rng.uniform(0.05, 3.0, size=n)
    return make_features(phi, q_tilde)
