"""Weighted K-nearest-neighbor inverse-distance interpolation on the sphere.

For a query location the K nearest measurements are found by great-circle
distance, weighted by w = 1/d^p, the weights normalized to sum to one, and
the weighted sum of the measured values returned. The d = 0 singularity is
handled by clamping distances below epsilon_km; when p > 0 and any selected
neighbor is within epsilon_km the result is the mean of those coincident
points, so querying at a measured location reproduces the measurement.

Neighbor search goes through a bucketed latitude/longitude bin index with
ring expansion; the naive full scan is kept as the fallback and as the
reference the index is validated against. Ties at the k-th neighbor break on
the point content (distance, then latitude, longitude, value), which makes
every result invariant to the input ordering.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import EmptyDatasetError
from .geo import EARTH_RADIUS_KM, GeoPoint, GridSpec, cell_centers, geodesic_km_many

# Fig-4-style ablation defaults; None means K = ALL
DEFAULT_K_LIST: tuple[Optional[int], ...] = (10, 200, 1000, None)
DEFAULT_P_LIST: tuple[float, ...] = (1.0, 0.2, 0.0)

# grid-product defaults for regional rasters
DEFAULT_GRID_K = 200
DEFAULT_GRID_P = 0.05


@dataclass(frozen=True)
class ValuedPoint:
    location: GeoPoint
    value: float

    def __post_init__(self):
        if not math.isfinite(self.value):
            raise ValueError("point value must be finite")


@dataclass(frozen=True)
class KnnParams:
    """k = None means use every point (the ablation's K = infinity column)."""

    k: Optional[int] = DEFAULT_GRID_K
    p: float = DEFAULT_GRID_P
    epsilon_km: float = 1e-6

    def __post_init__(self):
        if self.k is not None and self.k < 1:
            raise ValueError("k must be >= 1 (or None for ALL)")
        if not (math.isfinite(self.p) and self.p >= 0.0):
            raise ValueError("p must be finite and >= 0")
        if self.epsilon_km <= 0.0:
            raise ValueError("epsilon_km must be > 0")


class PointSet:
    """Column view of a point list plus the bucketed spatial index."""

    def __init__(self, points: Sequence[ValuedPoint], bin_deg: Optional[float] = None):
        if len(points) == 0:
            raise EmptyDatasetError("interpolation needs at least one measured point")
        self.lats = np.array([p.location.latitude for p in points], dtype=np.float64)
        self.lons = np.array([p.location.longitude for p in points], dtype=np.float64)
        self.values = np.array([p.value for p in points], dtype=np.float64)
        n = len(points)
        if bin_deg is None:
            # aim for a few points per bin over the occupied extent
            lat_span = max(float(self.lats.max() - self.lats.min()), 1e-3)
            lon_span = max(float(self.lons.max() - self.lons.min()), 1e-3)
            bin_deg = math.sqrt(lat_span * lon_span / n) * 2.0
            bin_deg = min(max(bin_deg, 1e-3), 10.0)
        self.bin_deg = bin_deg
        self.ncols = max(int(math.ceil(360.0 / bin_deg)), 1)
        self.nrows = max(int(math.ceil(180.0 / bin_deg)), 1)
        rows = np.clip(((self.lats + 90.0) / bin_deg).astype(np.int64), 0, self.nrows - 1)
        cols = ((self.lons + 180.0) / bin_deg).astype(np.int64) % self.ncols
        self._buckets: dict[tuple[int, int], np.ndarray] = {}
        order = np.lexsort((cols, rows))
        sr, sc = rows[order], cols[order]
        start = 0
        for i in range(1, n + 1):
            if i == n or sr[i] != sr[start] or sc[i] != sc[start]:
                self._buckets[(int(sr[start]), int(sc[start]))] = order[start:i]
                start = i
        # smallest cos(latitude) over the data, for the longitude distance bound
        self._cos_min_pts = float(np.cos(np.radians(np.abs(self.lats).max())))

    def __len__(self) -> int:
        return len(self.values)

    def _ring_bound_km(self, ring: int, cos_q: float) -> float:
        """Lower bound on the distance to any point in bins at Chebyshev ring
        distance >= ring from the query's bin."""
        gap_deg = max(ring - 1, 0) * self.bin_deg
        if gap_deg <= 0.0:
            return 0.0
        bound_lat = EARTH_RADIUS_KM * math.radians(gap_deg)
        half = math.radians(min(gap_deg, 180.0)) / 2.0
        c = math.sqrt(max(cos_q * self._cos_min_pts, 0.0))
        bound_lon = 2.0 * EARTH_RADIUS_KM * math.asin(min(1.0, c * math.sin(half)))
        return min(bound_lat, bound_lon)

    def _ring_cells(self, row0: int, col0: int, ring: int) -> Iterable[tuple[int, int]]:
        if ring == 0:
            yield row0, col0 % self.ncols
            return
        for dr in range(-ring, ring + 1):
            row = row0 + dr
            if not 0 <= row < self.nrows:
                continue
            if abs(dr) == ring:
                cols = range(-ring, ring + 1)
            else:
                cols = (-ring, ring)
            for dc in cols:
                yield row, (col0 + dc) % self.ncols

    def k_nearest(self, query: GeoPoint, k: int) -> tuple[np.ndarray, np.ndarray]:
        """Indices and distances of the k nearest points (content-tie order)."""
        n = len(self)
        k = min(k, n)
        row0 = min(max(int((query.latitude + 90.0) / self.bin_deg), 0), self.nrows - 1)
        col0 = int((query.longitude + 180.0) / self.bin_deg)
        cos_q = math.cos(math.radians(query.latitude))
        max_ring = max(self.nrows, self.ncols // 2 + 1) + 1

        cand_idx: list[np.ndarray] = []
        cand_dist: list[np.ndarray] = []
        count = 0
        kth_best = math.inf
        seen: set[tuple[int, int]] = set()
        for ring in range(max_ring + 1):
            batch = []
            for cell in self._ring_cells(row0, col0, ring):
                if cell in seen:
                    continue
                seen.add(cell)
                bucket = self._buckets.get(cell)
                if bucket is not None:
                    batch.append(bucket)
            if batch:
                idx = np.concatenate(batch)
                dist = geodesic_km_many(query, self.lats[idx], self.lons[idx])
                cand_idx.append(idx)
                cand_dist.append(dist)
                count += idx.size
                if count >= k:
                    all_dist = np.concatenate(cand_dist)
                    kth_best = float(np.partition(all_dist, k - 1)[k - 1])
            if count >= k and self._ring_bound_km(ring + 1, cos_q) > kth_best:
                break

        idx = np.concatenate(cand_idx)
        dist = np.concatenate(cand_dist)
        order = np.lexsort((self.values[idx], self.lons[idx], self.lats[idx], dist))
        pick = order[:k]
        return idx[pick], dist[pick]

    def k_nearest_fullscan(self, query: GeoPoint, k: int) -> tuple[np.ndarray, np.ndarray]:
        k = min(k, len(self))
        dist = geodesic_km_many(query, self.lats, self.lons)
        order = np.lexsort((self.values, self.lons, self.lats, dist))
        pick = order[:k]
        return pick, dist[pick]


def _weighted_value(dist: np.ndarray, values: np.ndarray, params: KnnParams) -> float:
    if params.p > 0.0:
        coincident = dist <= params.epsilon_km
        if coincident.any():
            return float(values[coincident].mean())
    w = 1.0 / np.maximum(dist, params.epsilon_km) ** params.p
    w = w / w.sum()
    return float(w @ values)


def knn_interpolate(
    points: Sequence[ValuedPoint] | PointSet,
    query: GeoPoint,
    params: KnnParams,
    use_index: bool = True,
) -> float:
    """Interpolated ppm value at `query` from the measured points."""
    ps = points if isinstance(points, PointSet) else PointSet(points)
    k = len(ps) if params.k is None else min(params.k, len(ps))
    if params.p == 0.0 and k == len(ps):
        # uniform weights over every point: the query-independent global
        # mean, summed in a canonical order so every cell gets the same bits
        return float(np.sort(ps.values).mean())
    if use_index and k < len(ps):
        idx, dist = ps.k_nearest(query, k)
    else:
        idx, dist = ps.k_nearest_fullscan(query, k)
    return _weighted_value(dist, ps.values[idx], params)


@dataclass(frozen=True)
class Grid:
    """A rasterized prediction surface; values row-major north-to-south."""

    spec: GridSpec
    values: np.ndarray

    def __post_init__(self):
        expected = self.spec.nrows * self.spec.ncols
        if self.values.shape != (expected,):
            raise ValueError(f"grid values must have length {expected}")

    @property
    def mean(self) -> float:
        return float(self.values.mean())

    @property
    def std(self) -> float:
        # population convention; constant grids are exactly zero (np.std alone
        # leaves ~1e-14 residue from rounding in the mean)
        if self.values.size == 0 or np.all(self.values == self.values[0]):
            return 0.0
        return float(self.values.std())


def rasterize(
    points: Sequence[ValuedPoint] | PointSet, spec: GridSpec, params: KnnParams
) -> Grid:
    """knn_interpolate at every cell center of the grid."""
    ps = points if isinstance(points, PointSet) else PointSet(points)
    centers = cell_centers(spec)
    values = np.array(
        [knn_interpolate(ps, c, params) for c in centers], dtype=np.float64
    )
    return Grid(spec=spec, values=values)


@dataclass(frozen=True)
class SweepRow:
    k: Optional[int]
    p: float
    mean_ppm: float
    std_ppm: float


SWEEP_CSV_HEADER = "k,p,mean_ppm,std_ppm"


def format_k(k: Optional[int]) -> str:
    return "all" if k is None else str(k)


def sweep(
    points: Sequence[ValuedPoint] | PointSet,
    spec: GridSpec,
    k_list: Sequence[Optional[int]] = DEFAULT_K_LIST,
    p_list: Sequence[float] = DEFAULT_P_LIST,
    epsilon_km: float = 1e-6,
) -> list[SweepRow]:
    """One rasterization per (k, p) pair; rows are k-major."""
    if not k_list or not p_list:
        raise ValueError("sweep needs non-empty k and p lists")
    ps = points if isinstance(points, PointSet) else PointSet(points)
    rows = []
    for k in k_list:
        for p in p_list:
            grid = rasterize(ps, spec, KnnParams(k=k, p=p, epsilon_km=epsilon_km))
            rows.append(SweepRow(k=k, p=p, mean_ppm=grid.mean, std_ppm=grid.std))
    return rows


def write_grid_csv(grid: Grid, path) -> None:
    """Long-form CSV: one row per cell, same order as the values array."""
    centers = cell_centers(grid.spec)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("latitude_deg,longitude_deg,co2_ppm\n")
        for c, v in zip(centers, grid.values):
            fh.write(f"{c.latitude!r},{c.longitude!r},{float(v)!r}\n")


def write_ascii_grid(grid: Grid, path) -> None:
    """ESRI ASCII raster; data rows run north to south."""
    spec = grid.spec
    rows = grid.values.reshape(spec.nrows, spec.ncols)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"ncols {spec.ncols}\n")
        fh.write(f"nrows {spec.nrows}\n")
        fh.write(f"xllcorner {spec.bbox.west!r}\n")
        fh.write(f"yllcorner {spec.bbox.south!r}\n")
        fh.write(f"cellsize {spec.resolution!r}\n")
        fh.write("NODATA_value -9999\n")
        for row in rows:
            fh.write(" ".join(repr(float(v)) for v in row) + "\n")


def write_pgm(grid: Grid, path, extra_meta: Optional[dict] = None) -> None:
    """8-bit binary PGM, min/max scaled; scaling recorded in a .txt sidecar."""
    spec = grid.spec
    lo = float(grid.values.min())
    hi = float(grid.values.max())
    if hi > lo:
        scaled = np.rint((grid.values - lo) / (hi - lo) * 255.0).astype(np.uint8)
    else:
        scaled = np.zeros(grid.values.shape, dtype=np.uint8)
    with open(path, "wb") as fh:
        fh.write(f"P5\n{spec.ncols} {spec.nrows}\n255\n".encode("ascii"))
        fh.write(scaled.tobytes())
    meta = {
        "min_ppm": repr(lo),
        "max_ppm": repr(hi),
        "ncols": str(spec.ncols),
        "nrows": str(spec.nrows),
    }
    if extra_meta:
        meta.update({k: str(v) for k, v in extra_meta.items()})
    with open(str(path) + ".txt", "w", encoding="utf-8") as fh:
        for key in sorted(meta):
            fh.write(f"{key} = {meta[key]}\n")
