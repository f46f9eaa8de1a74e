"""Zero-isosurface extraction as a featurized vertex cloud.

Runs standard 256-case marching cubes over grid cells spanned by 2x2x2
neighbouring voxel centers. A cell participates only when all 8 corners
are observed with at least ``min_tsdf_weight``; corners with distance
exactly 0 count as inside, which fixes the case-table sign convention.
Edge vertices interpolate the zero crossing linearly between corner
distances, always walking the edge from its lexicographically smaller
corner so adjacent cells produce bit-identical shared vertices.

Triangle connectivity is assembled from the case table and then dropped:
the output is the deduplicated vertex list in (cell index, edge index)
order, each vertex tagged with the nearest observed feature vector.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import numpy as np

from ._mc_tables import EDGE_CORNERS, EDGE_TABLE
from .cloud import FeaturePointCloud
from .errors import ConfigError, FrameError
from .features import query_nearest_features_batch
from .grid import FeatureLayer, TsdfLayer

# Cell corner k sits at the cell origin voxel plus CORNER_OFFSETS[k],
# matching the table layout in _mc_tables.
CORNER_OFFSETS = (
    (0, 0, 0), (1, 0, 0), (1, 1, 0), (0, 1, 0),
    (0, 0, 1), (1, 0, 1), (1, 1, 1), (0, 1, 1),
)


@dataclass(frozen=True)
class MeshingConfig:
    min_tsdf_weight: float = 1.0
    feature_query_radius_voxels: int = 2

    def __post_init__(self):
        if self.min_tsdf_weight < 0:
            raise ConfigError(f"min_tsdf_weight must be >= 0, got {self.min_tsdf_weight}")
        if self.feature_query_radius_voxels < 0:
            raise ConfigError(
                f"feature_query_radius_voxels must be >= 0, got {self.feature_query_radius_voxels}"
            )


@dataclass
class MeshStats:
    cells_meshed: int = 0
    vertices_emitted: int = 0
    vertices_dropped: int = 0


def _padded_field(layer: TsdfLayer, bkey, attr: str) -> np.ndarray:
    """Block field extended by one voxel from +x/+y/+z neighbours, (S+1)^3.

    Voxels belonging to unallocated neighbours read as zero (unobserved).
    """
    side = layer.spec.block_side
    out = np.zeros((side + 1, side + 1, side + 1), dtype=np.float32)
    for sx, sy, sz in product((0, 1), repeat=3):
        nb = layer.blocks.get((bkey[0] + sx, bkey[1] + sy, bkey[2] + sz))
        if nb is None:
            continue
        src = getattr(nb, attr)
        xs = slice(side, side + 1) if sx else slice(0, side)
        ys = slice(side, side + 1) if sy else slice(0, side)
        zs = slice(side, side + 1) if sz else slice(0, side)
        out[xs, ys, zs] = src[
            slice(0, 1) if sx else slice(0, side),
            slice(0, 1) if sy else slice(0, side),
            slice(0, 1) if sz else slice(0, side),
        ]
    return out


def _crossing_cells(layer: TsdfLayer, min_weight: float) -> np.ndarray:
    """Global indices of cells that are fully observed and sign-changing."""
    side = layer.spec.block_side
    found = []
    for bkey in layer.sorted_block_indices():
        dist = _padded_field(layer, bkey, "distance")
        weight = _padded_field(layer, bkey, "weight")
        observed = (weight > 0.0) & (weight >= min_weight)

        all_obs = np.ones((side, side, side), dtype=bool)
        any_inside = np.zeros((side, side, side), dtype=bool)
        all_inside = np.ones((side, side, side), dtype=bool)
        for ox, oy, oz in CORNER_OFFSETS:
            corner_obs = observed[ox:ox + side, oy:oy + side, oz:oz + side]
            corner_in = dist[ox:ox + side, oy:oy + side, oz:oz + side] <= 0.0
            all_obs &= corner_obs
            any_inside |= corner_in
            all_inside &= corner_in
        hits = np.argwhere(all_obs & any_inside & ~all_inside)
        if hits.size:
            found.append(hits + np.asarray(bkey, dtype=np.int64) * side)
    if not found:
        return np.zeros((0, 3), dtype=np.int64)
    cells = np.vstack(found)
    order = np.lexsort((cells[:, 2], cells[:, 1], cells[:, 0]))
    return cells[order]


def _corner_distance(layer: TsdfLayer, g: tuple[int, int, int]) -> float:
    side = layer.spec.block_side
    bkey = (g[0] // side, g[1] // side, g[2] // side)
    block = layer.blocks[bkey]
    return float(
        block.distance[g[0] - bkey[0] * side, g[1] - bkey[1] * side, g[2] - bkey[2] * side]
    )


def _edge_vertex(
    ga: tuple[int, int, int], gb: tuple[int, int, int],
    da: float, db: float, voxel_size: float,
) -> tuple[float, float, float]:
    """Zero crossing on the edge between two voxel centers.

    Interpolates from the lexicographically smaller corner so both cells
    sharing the edge compute the identical float result.
    """
    if gb < ga:
        ga, gb, da, db = gb, ga, db, da
    t = da / (da - db)
    px = ((ga[0] + 0.5) + t * (gb[0] - ga[0])) * voxel_size
    py = ((ga[1] + 0.5) + t * (gb[1] - ga[1])) * voxel_size
    pz = ((ga[2] + 0.5) + t * (gb[2] - ga[2])) * voxel_size
    return (px, py, pz)


def extract_feature_mesh(
    tsdf_layer: TsdfLayer,
    feature_layer: FeatureLayer | None,
    config: MeshingConfig | None = None,
) -> tuple[FeaturePointCloud, MeshStats]:
    """Marching cubes over the TSDF, vertices tagged with nearest features.

    Vertices with no observed feature within the query radius are dropped
    (counted in stats). With feature_layer=None all vertices are kept and
    the cloud's feature matrix has zero columns.
    """
    config = config or MeshingConfig()
    if feature_layer is not None and feature_layer.spec != tsdf_layer.spec:
        raise FrameError("feature and TSDF layers use different grid specs")

    spec = tsdf_layer.spec
    voxel_size = spec.voxel_size_m
    stats = MeshStats()
    cells = _crossing_cells(tsdf_layer, config.min_tsdf_weight)

    seen: dict[tuple[float, float, float], None] = {}
    raw_points: list[tuple[float, float, float]] = []
    for cell in cells:
        cx, cy, cz = (int(cell[0]), int(cell[1]), int(cell[2]))
        corners = [(cx + ox, cy + oy, cz + oz) for ox, oy, oz in CORNER_OFFSETS]
        dists = [_corner_distance(tsdf_layer, g) for g in corners]

        case = 0
        for bit, d in enumerate(dists):
            if d <= 0.0:
                case |= 1 << bit
        edge_bits = EDGE_TABLE[case]
        if edge_bits == 0:
            continue
        stats.cells_meshed += 1

        # The case table's triangle fans reference exactly the crossed
        # edges; only their vertices survive, connectivity is dropped.
        for edge in range(12):
            if not edge_bits & (1 << edge):
                continue
            a, b = EDGE_CORNERS[edge]
            vert = _edge_vertex(corners[a], corners[b], dists[a], dists[b], voxel_size)
            if vert not in seen:
                seen[vert] = None
                raw_points.append(vert)

    if not raw_points:
        cloud = FeaturePointCloud.empty(
            feature_layer.feature_dim if feature_layer is not None else 0
        )
        return cloud, stats

    # Vertices are stored as float32; features are looked up at the stored
    # coordinates so the vertex/feature pairing is reproducible from the output.
    points = np.asarray(raw_points, dtype=np.float64).astype(np.float32)
    if feature_layer is None:
        cloud = FeaturePointCloud(points, np.zeros((len(points), 0), dtype=np.float32))
        stats.vertices_emitted = len(cloud)
        return cloud, stats

    feats, found = query_nearest_features_batch(
        feature_layer, points, config.feature_query_radius_voxels
    )
    stats.vertices_dropped = int((~found).sum())
    if found.any():
        cloud = FeaturePointCloud(points[found], feats[found])
    else:
        cloud = FeaturePointCloud.empty(feature_layer.feature_dim)
    stats.vertices_emitted = len(cloud)
    return cloud, stats


def interpolate_tsdf(layer: TsdfLayer, p) -> float | None:
    """Trilinear TSDF at a world point, over the 8 surrounding voxel centers.

    Returns None when no fully observed interpolation cell contains the
    point. Points exactly on a cell boundary may belong to several cells;
    each is tried in deterministic order.
    """
    spec = layer.spec
    side = spec.block_side
    p = np.asarray(p, dtype=np.float64)
    s = p / spec.voxel_size_m - 0.5
    base = np.floor(s).astype(np.int64)
    frac = s - base

    # Points on (or within float jitter of) a cell boundary belong to both
    # adjacent cells; try each with weights clamped to [0, 1].
    eps = 1e-4
    options = []
    for axis in range(3):
        if frac[axis] < eps:
            options.append((0, -1))
        elif frac[axis] > 1.0 - eps:
            options.append((0, 1))
        else:
            options.append((0,))
    for shift in product(*options):
        cell = base + np.asarray(shift, dtype=np.int64)
        t = np.clip(s - cell, 0.0, 1.0)
        corners = np.empty((2, 2, 2), dtype=np.float64)
        ok = True
        for ox, oy, oz in product((0, 1), repeat=3):
            g = (int(cell[0]) + ox, int(cell[1]) + oy, int(cell[2]) + oz)
            bkey = (g[0] // side, g[1] // side, g[2] // side)
            block = layer.blocks.get(bkey)
            if block is None:
                ok = False
                break
            intra = (g[0] - bkey[0] * side, g[1] - bkey[1] * side, g[2] - bkey[2] * side)
            if block.weight[intra] <= 0.0:
                ok = False
                break
            corners[ox, oy, oz] = block.distance[intra]
        if not ok:
            continue
        c00 = corners[0, 0, 0] * (1 - t[0]) + corners[1, 0, 0] * t[0]
        c01 = corners[0, 0, 1] * (1 - t[0]) + corners[1, 0, 1] * t[0]
        c10 = corners[0, 1, 0] * (1 - t[0]) + corners[1, 1, 0] * t[0]
        c11 = corners[0, 1, 1] * (1 - t[0]) + corners[1, 1, 1] * t[0]
        c0 = c00 * (1 - t[1]) + c10 * t[1]
        c1 = c01 * (1 - t[1]) + c11 * t[1]
        return float(c0 * (1 - t[2]) + c1 * t[2])
    return None
