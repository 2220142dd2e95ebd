"""Near-duplicate detection: word shingles, MinHash, LSH banding,
and the keep-oldest temporal policy.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from .corpus import ShuttleId
from .errors import DedupError

DEFAULT_NUM_PERMS = 128
DEFAULT_THRESHOLD = 0.70
DEFAULT_SHINGLE_K = 5

_U64 = np.uint64
_MASK64 = (1 << 64) - 1


@dataclass
class ShingleSet:
    design_id: str
    hashes: frozenset[int]


@dataclass
class MinHashSignature:
    design_id: str
    values: tuple[int, ...]
    seed: int

    @property
    def num_perms(self) -> int:
        return len(self.values)


@dataclass
class LshIndex:
    bands: int
    rows: int
    buckets: dict  # (band index, row tuple) -> set of design_ids

    def insert(self, sig: MinHashSignature) -> None:
        if self.bands * self.rows > len(sig.values):
            raise DedupError("banding exceeds signature length")
        for b in range(self.bands):
            key = (b, sig.values[b * self.rows : (b + 1) * self.rows])
            self.buckets.setdefault(key, set()).add(sig.design_id)


def _hash_shingle(data: bytes, seed: int) -> int:
    digest = hashlib.blake2b(data, digest_size=8, key=seed.to_bytes(8, "little")).digest()
    return int.from_bytes(digest, "little")


def shingle(source: str, k: int = DEFAULT_SHINGLE_K, seed: int = 1, design_id: str = "") -> ShingleSet:
    """Hash all consecutive k-word windows after whitespace tokenization.

    Designs shorter than k words contribute the hash of their full token
    sequence, so tiny-but-distinct texts still fingerprint.
    """
    if k < 1:
        raise DedupError("shingle size must be >= 1")
    words = source.split()
    hashes = set()
    if len(words) < k:
        hashes.add(_hash_shingle("\x1f".join(words).encode("utf-8"), seed))
    else:
        for i in range(len(words) - k + 1):
            hashes.add(_hash_shingle("\x1f".join(words[i : i + k]).encode("utf-8"), seed))
    return ShingleSet(design_id=design_id, hashes=frozenset(hashes))


def _permutation_params(num_perms: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    rng = np.random.default_rng(seed)
    a = rng.integers(0, 1 << 63, size=num_perms, dtype=np.uint64) * _U64(2) + _U64(1)
    b = rng.integers(0, 1 << 63, size=num_perms, dtype=np.uint64) * _U64(2) + rng.integers(
        0, 2, size=num_perms, dtype=np.uint64
    )
    return a, b


def minhash(s: ShingleSet, num_perms: int = DEFAULT_NUM_PERMS, seed: int = 1) -> MinHashSignature:
    """Per-permutation minimum under multiply-add permutations of Z_2^64.

    An odd multiplier makes ``x -> a*x + b (mod 2^64)`` a bijection, so
    matching shingle sets always produce matching signature positions.
    """
    if num_perms < 16:
        raise DedupError("num_perms must be >= 16")
    if not s.hashes:
        raise DedupError(f"empty shingle set for {s.design_id!r}")
    a, b = _permutation_params(num_perms, seed)
    hs = np.fromiter(s.hashes, dtype=np.uint64, count=len(s.hashes))
    values = np.full(num_perms, _MASK64, dtype=np.uint64)
    chunk = 65536
    for lo in range(0, len(hs), chunk):
        part = hs[lo : lo + chunk]
        permuted = part[None, :] * a[:, None] + b[:, None]
        np.minimum(values, permuted.min(axis=1), out=values)
    return MinHashSignature(design_id=s.design_id, values=tuple(int(v) for v in values), seed=seed)


def estimate_jaccard(a: MinHashSignature, b: MinHashSignature) -> float:
    if a.num_perms != b.num_perms or a.seed != b.seed:
        raise DedupError("signatures built with different parameters")
    agree = sum(1 for x, y in zip(a.values, b.values) if x == y)
    return agree / a.num_perms


def exact_jaccard(a: ShingleSet, b: ShingleSet) -> float:
    union = len(a.hashes | b.hashes)
    if union == 0:
        return 1.0
    return len(a.hashes & b.hashes) / union


def choose_bands(num_perms: int = DEFAULT_NUM_PERMS, threshold: float = DEFAULT_THRESHOLD) -> tuple[int, int]:
    """Pick (bands, rows) minimizing false-positive plus false-negative area
    of the S-curve 1-(1-s^r)^b around the target threshold."""
    if not 0 < threshold < 1:
        raise DedupError("threshold must be in (0, 1)")
    grid = 1000
    s_fp = np.linspace(0.0, threshold, grid)
    s_fn = np.linspace(threshold, 1.0, grid)
    best = None
    for rows in range(1, num_perms + 1):
        for bands in range(1, num_perms // rows + 1):
            curve_fp = 1.0 - (1.0 - s_fp**rows) ** bands
            curve_fn = 1.0 - (1.0 - (1.0 - s_fn**rows) ** bands)
            cost = float(np.trapz(curve_fp, s_fp) + np.trapz(curve_fn, s_fn))
            if best is None or cost < best[0]:
                best = (cost, bands, rows)
    return best[1], best[2]


def lsh_probability(jaccard: float, bands: int, rows: int) -> float:
    """Probability the banding flags a pair with the given similarity."""
    return 1.0 - (1.0 - jaccard**rows) ** bands


def build_index(signatures: list[MinHashSignature], bands: int, rows: int) -> LshIndex:
    index = LshIndex(bands=bands, rows=rows, buckets={})
    for sig in signatures:
        index.insert(sig)
    return index


def candidate_pairs(index: LshIndex, signatures: list[MinHashSignature]) -> set[tuple[str, str]]:
    """All unordered id pairs colliding in at least one band."""
    params = {(sig.num_perms, sig.seed) for sig in signatures}
    if len(params) > 1:
        raise DedupError("signatures built with different parameters")
    pairs: set[tuple[str, str]] = set()
    for members in index.buckets.values():
        if len(members) < 2:
            continue
        ordered = sorted(members)
        for i, first in enumerate(ordered):
            for second in ordered[i + 1 :]:
                pairs.add((first, second))
    return pairs


def verify_pairs(
    pairs: set[tuple[str, str]],
    shingles: dict[str, ShingleSet],
    threshold: float = DEFAULT_THRESHOLD,
) -> set[tuple[str, str]]:
    """Confirm candidates by exact Jaccard before calling them duplicates."""
    verified = set()
    for first, second in pairs:
        if exact_jaccard(shingles[first], shingles[second]) >= threshold:
            verified.add((first, second))
    return verified


class _UnionFind:
    def __init__(self):
        self.parent: dict[str, str] = {}

    def find(self, x: str) -> str:
        self.parent.setdefault(x, x)
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, x: str, y: str) -> None:
        rx, ry = self.find(x), self.find(y)
        if rx != ry:
            # deterministic orientation keeps components reproducible
            if rx < ry:
                self.parent[ry] = rx
            else:
                self.parent[rx] = ry


def duplicate_components(duplicate_pairs: set[tuple[str, str]]) -> list[set[str]]:
    """Connected components of the verified duplicate relation."""
    uf = _UnionFind()
    for a, b in duplicate_pairs:
        uf.union(a, b)
    groups: dict[str, set[str]] = {}
    for node in uf.parent:
        groups.setdefault(uf.find(node), set()).add(node)
    return sorted(groups.values(), key=lambda g: min(g))


def temporal_dedup(
    designs: list[tuple[str, ShuttleId]], duplicate_pairs: set[tuple[str, str]]
) -> set[str]:
    """Keep the oldest member of each duplicate component; ties break on id."""
    shuttle_of = dict(designs)
    retained = {design_id for design_id, _ in designs}
    for component in duplicate_components(duplicate_pairs):
        members = sorted(component)
        survivor = min(members, key=lambda d: (shuttle_of[d].ordinal, d))
        for member in members:
            if member != survivor:
                retained.discard(member)
    return retained


def find_duplicates(
    texts: dict[str, str],
    num_perms: int = DEFAULT_NUM_PERMS,
    threshold: float = DEFAULT_THRESHOLD,
    shingle_k: int = DEFAULT_SHINGLE_K,
    seed: int = 1,
) -> tuple[set[tuple[str, str]], dict[str, ShingleSet]]:
    """End-to-end: shingle, sign, band, verify. Returns verified pairs."""
    shingles = {
        design_id: shingle(text, k=shingle_k, seed=seed, design_id=design_id)
        for design_id, text in sorted(texts.items())
    }
    signatures = [minhash(s, num_perms=num_perms, seed=seed) for s in shingles.values()]
    bands, rows = choose_bands(num_perms, threshold)
    index = build_index(signatures, bands, rows)
    candidates = candidate_pairs(index, signatures)
    return verify_pairs(candidates, shingles, threshold), shingles
