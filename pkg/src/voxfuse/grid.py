"""Sparse block-hashed voxel storage and world/grid coordinate algebra.

The world is partitioned into cubic voxels of ``voxel_size_m`` grouped into
dense blocks of ``block_side``^3 voxels. Voxel cubes are half-open
``[min, min + voxel_size)`` with floor indexing, so every finite point maps
to exactly one voxel. Blocks are allocated on demand and held in a dict
keyed by signed block index; unallocated space always reads back as
unobserved.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, GridError

BlockIndex = tuple[int, int, int]
VoxelIndex = tuple[int, int, int]


@dataclass(frozen=True)
class GridSpec:
    """Geometry shared by every layer of one reconstruction."""

    voxel_size_m: float
    truncation_voxels: int = 4
    block_side: int = 8

    def __post_init__(self):
        if not (np.isfinite(self.voxel_size_m) and self.voxel_size_m > 0):
            raise ConfigError(f"voxel_size_m must be positive, got {self.voxel_size_m}")
        if self.truncation_voxels < 1:
            raise ConfigError(f"truncation_voxels must be >= 1, got {self.truncation_voxels}")
        if self.block_side < 1:
            raise ConfigError(f"block_side must be >= 1, got {self.block_side}")

    @property
    def truncation_distance_m(self) -> float:
        return self.truncation_voxels * self.voxel_size_m

    @property
    def block_size_m(self) -> float:
        return self.block_side * self.voxel_size_m


@dataclass(frozen=True)
class TsdfVoxel:
    """One signed-distance cell. weight == 0 means unobserved."""

    distance: float
    weight: float

    @property
    def observed(self) -> bool:
        return self.weight > 0.0


@dataclass(frozen=True)
class FeatureVoxel:
    """One feature cell. Unobserved cells hold the all-zeros vector."""

    feature: np.ndarray
    observed: bool


def point_to_global_voxel(points, spec: GridSpec) -> np.ndarray:
    """Global integer voxel index containing each point, shape (..., 3)."""
    pts = np.asarray(points, dtype=np.float64)
    return np.floor(pts / spec.voxel_size_m).astype(np.int64)


def world_to_voxel(p, spec: GridSpec) -> tuple[BlockIndex, VoxelIndex]:
    """Map a world point to its containing (block, intra-block voxel)."""
    g = point_to_global_voxel(p, spec)
    block = g // spec.block_side
    voxel = g - block * spec.block_side
    return tuple(int(v) for v in block), tuple(int(v) for v in voxel)


def voxel_center(block: BlockIndex, voxel: VoxelIndex, spec: GridSpec) -> np.ndarray:
    """World-frame center of a voxel addressed by (block, intra-block) index."""
    voxel = np.asarray(voxel, dtype=np.int64)
    if np.any(voxel < 0) or np.any(voxel >= spec.block_side):
        raise GridError(f"intra-block index {tuple(voxel)} outside [0, {spec.block_side})")
    g = np.asarray(block, dtype=np.int64) * spec.block_side + voxel
    return global_voxel_center(g, spec)


def global_voxel_center(global_idx, spec: GridSpec) -> np.ndarray:
    """World-frame centers for global voxel indices, shape (..., 3)."""
    g = np.asarray(global_idx, dtype=np.int64)
    return (g.astype(np.float64) + 0.5) * spec.voxel_size_m


class VoxelLayer:
    """Base sparse layer: a dict of dense blocks sharing one GridSpec.

    Iteration is deterministic: blocks in sorted index order, voxels in
    C order (x, then y, then z fastest) within a block.
    """

    def __init__(self, spec: GridSpec):
        self.spec = spec
        self.blocks: dict[BlockIndex, object] = {}

    def _new_block(self):
        raise NotImplementedError

    def get_or_allocate_block(self, index: BlockIndex):
        block = self.blocks.get(index)
        if block is None:
            block = self._new_block()
            self.blocks[index] = block
        return block

    def block(self, index: BlockIndex):
        return self.blocks.get(index)

    def sorted_block_indices(self) -> list[BlockIndex]:
        return sorted(self.blocks.keys())

    @property
    def num_blocks(self) -> int:
        return len(self.blocks)


class TsdfBlock:
    __slots__ = ("distance", "weight")

    def __init__(self, side: int):
        self.distance = np.zeros((side, side, side), dtype=np.float32)
        self.weight = np.zeros((side, side, side), dtype=np.float32)


class TsdfLayer(VoxelLayer):
    """Truncated signed distance layer: per-voxel (distance, weight)."""

    def _new_block(self) -> TsdfBlock:
        return TsdfBlock(self.spec.block_side)

    def lookup_voxel(self, p) -> TsdfVoxel | None:
        """Voxel containing world point p; None if its block is unallocated.

        Never allocates. An allocated voxel with weight == 0 is returned
        as-is (unobserved); its distance is meaningless.
        """
        block_idx, voxel_idx = world_to_voxel(p, self.spec)
        block = self.blocks.get(block_idx)
        if block is None:
            return None
        return TsdfVoxel(
            float(block.distance[voxel_idx]), float(block.weight[voxel_idx])
        )

    def lookup_global(self, g: tuple[int, int, int]) -> TsdfVoxel | None:
        side = self.spec.block_side
        block_idx = tuple(int(v) // side for v in g)
        block = self.blocks.get(block_idx)
        if block is None:
            return None
        voxel_idx = tuple(int(v) - b * side for v, b in zip(g, block_idx))
        return TsdfVoxel(
            float(block.distance[voxel_idx]), float(block.weight[voxel_idx])
        )

    def iter_observed(self):
        """Yield (global_index ndarray (3,), distance, weight), sorted order."""
        side = self.spec.block_side
        for bkey in self.sorted_block_indices():
            block = self.blocks[bkey]
            base = np.asarray(bkey, dtype=np.int64) * side
            mask = block.weight > 0
            for ix, iy, iz in np.argwhere(mask):
                yield (
                    base + (ix, iy, iz),
                    float(block.distance[ix, iy, iz]),
                    float(block.weight[ix, iy, iz]),
                )

    def bit_equal(self, other: "TsdfLayer") -> bool:
        if self.spec != other.spec or set(self.blocks) != set(other.blocks):
            return False
        for key, block in self.blocks.items():
            o = other.blocks[key]
            if not (
                np.array_equal(
                    block.distance.view(np.uint32), o.distance.view(np.uint32)
                )
                and np.array_equal(
                    block.weight.view(np.uint32), o.weight.view(np.uint32)
                )
            ):
                return False
        return True


class FeatureBlock:
    __slots__ = ("feature", "observed")

    def __init__(self, side: int, feature_dim: int):
        self.feature = np.zeros((side, side, side, feature_dim), dtype=np.float32)
        self.observed = np.zeros((side, side, side), dtype=bool)


class FeatureLayer(VoxelLayer):
    """Per-voxel feature vectors co-registered with a TSDF layer."""

    def __init__(self, spec: GridSpec, feature_dim: int):
        if feature_dim < 1:
            raise ConfigError(f"feature_dim must be >= 1, got {feature_dim}")
        super().__init__(spec)
        self.feature_dim = int(feature_dim)

    def _new_block(self) -> FeatureBlock:
        return FeatureBlock(self.spec.block_side, self.feature_dim)

    def lookup_voxel(self, p) -> FeatureVoxel | None:
        block_idx, voxel_idx = world_to_voxel(p, self.spec)
        block = self.blocks.get(block_idx)
        if block is None:
            return None
        return FeatureVoxel(
            block.feature[voxel_idx].copy(), bool(block.observed[voxel_idx])
        )

    def iter_observed(self):
        """Yield (global_index ndarray (3,), feature view), sorted order."""
        side = self.spec.block_side
        for bkey in self.sorted_block_indices():
            block = self.blocks[bkey]
            base = np.asarray(bkey, dtype=np.int64) * side
            for ix, iy, iz in np.argwhere(block.observed):
                yield base + (ix, iy, iz), block.feature[ix, iy, iz]

    def bit_equal(self, other: "FeatureLayer") -> bool:
        if (
            self.spec != other.spec
            or self.feature_dim != other.feature_dim
            or set(self.blocks) != set(other.blocks)
        ):
            return False
        for key, block in self.blocks.items():
            o = other.blocks[key]
            if not (
                np.array_equal(
                    block.feature.view(np.uint32), o.feature.view(np.uint32)
                )
                and np.array_equal(block.observed, o.observed)
            ):
                return False
        return True
