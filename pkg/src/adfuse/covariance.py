"""Region-covariance texture descriptor for the appearance sub-detector.

Each pixel of an image region contributes a 9-dimensional feature

    z = [x1, x2, Y, U, V, |dY/dx1|, |dY/dx2|, |d2Y/dx1^2|, |d2Y/dx2^2|]

with region-local 0-based coordinates (x1 = column, x2 = row), first
derivatives from the filter [-1 0 1] and second derivatives from
[-1 2 -1], both unnormalized. The 9x9 covariance over the region is
accumulated in one pass,

    C(i,j) = (1/(n-1)) * [ sum_k z_k(i) z_k(j) - (1/n) sum_k z_k(i) sum_k z_k(j) ]

and vectorized as the lower triangle in row-major order with the entries
(1,1), (2,1), (2,2) dropped, leaving 42 values. Note those three entries
are constant only across same-shaped regions; they are dropped
unconditionally to keep the descriptor length fixed.

The posterior of a trained classifier maps to a decision confidence via
D = 2p - 1, so p = 0.5 is the decision boundary.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np


class RegionError(ValueError):
    pass


class BorderPolicy(str, Enum):
    INTERIOR_ONLY = "InteriorOnly"
    REPLICATE_EDGE = "ReplicateEdge"


FEATURE_DIM = 9
FEATURE_VECTOR_LEN = 42

# Lower-triangle (row, col) pairs in row-major order, minus the three
# coordinate-only entries (0,0), (1,0), (1,1).
_KEPT_INDICES = tuple(
    (i, j)
    for i in range(FEATURE_DIM)
    for j in range(i + 1)
    if (i, j) not in {(0, 0), (1, 0), (1, 1)}
)
assert len(_KEPT_INDICES) == FEATURE_VECTOR_LEN


@dataclass(frozen=True)
class ImageRegion:
    """Planar YUV pixel data for one region; planes share one shape."""

    y: np.ndarray
    u: np.ndarray
    v: np.ndarray
    origin: tuple[int, int] = (0, 0)

    def __post_init__(self):
        y = np.asarray(self.y, dtype=np.float64)
        u = np.asarray(self.u, dtype=np.float64)
        v = np.asarray(self.v, dtype=np.float64)
        if y.ndim != 2 or y.shape[0] < 3 or y.shape[1] < 3:
            raise RegionError(
                f"region must be at least 3x3 for derivative filters, got {y.shape}"
            )
        if u.shape != y.shape or v.shape != y.shape:
            raise RegionError("Y, U, V planes must share one shape")
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "v", v)

    @property
    def height(self) -> int:
        return self.y.shape[0]

    @property
    def width(self) -> int:
        return self.y.shape[1]


@dataclass(frozen=True)
class RegionCovariance:
    c: np.ndarray
    n_px: int

    def __post_init__(self):
        c = np.asarray(self.c, dtype=np.float64)
        if c.shape != (FEATURE_DIM, FEATURE_DIM):
            raise RegionError(f"covariance must be {FEATURE_DIM}x{FEATURE_DIM}")
        if self.n_px < 2:
            raise RegionError("covariance needs at least 2 contributing pixels")
        object.__setattr__(self, "c", c)


def pixel_features(region: ImageRegion) -> np.ndarray:
    """Per-pixel feature grid, shape (H, W, 9).

    Derivatives at the 1-pixel border are computed against replicated edge
    values; interior pixels are unaffected, and the border policy passed to
    region_covariance decides whether border pixels contribute at all.
    """
    h, w = region.y.shape
    padded = np.pad(region.y, 1, mode="edge")
    center = padded[1:-1, 1:-1]
    left = padded[1:-1, :-2]
    right = padded[1:-1, 2:]
    up = padded[:-2, 1:-1]
    down = padded[2:, 1:-1]

    features = np.empty((h, w, FEATURE_DIM), dtype=np.float64)
    cols, rows = np.meshgrid(np.arange(w), np.arange(h))
    features[..., 0] = cols  # x1
    features[..., 1] = rows  # x2
    features[..., 2] = region.y
    features[..., 3] = region.u
    features[..., 4] = region.v
    features[..., 5] = np.abs(right - left)  # [-1 0 1] along x1
    features[..., 6] = np.abs(down - up)  # [-1 0 1] along x2
    features[..., 7] = np.abs(2.0 * center - left - right)  # [-1 2 -1] along x1
    features[..., 8] = np.abs(2.0 * center - up - down)  # [-1 2 -1] along x2
    return features


def region_covariance(
    features: np.ndarray, border_policy: BorderPolicy = BorderPolicy.INTERIOR_ONLY
) -> RegionCovariance:
    """One-pass covariance of the contributing pixels' feature vectors."""
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 3 or features.shape[2] != FEATURE_DIM:
        raise RegionError(f"expected an (H, W, {FEATURE_DIM}) feature grid")
    if border_policy == BorderPolicy.INTERIOR_ONLY:
        selected = features[1:-1, 1:-1, :]
    else:
        selected = features
    z = selected.reshape(-1, FEATURE_DIM)
    n = z.shape[0]
    if n < 2:
        raise RegionError(
            f"only {n} contributing pixel(s); need at least 2 (try ReplicateEdge)"
        )
    sums = z.sum(axis=0)
    prods = z.T @ z
    c = (prods - np.outer(sums, sums) / n) / (n - 1)
    c = 0.5 * (c + c.T)
    return RegionCovariance(c=c, n_px=n)


def region_feature(cov: RegionCovariance) -> np.ndarray:
    """42-element descriptor: kept lower-triangle entries of the covariance."""
    return np.array([cov.c[i, j] for i, j in _KEPT_INDICES], dtype=np.float64)


def extract_region_feature(
    region: ImageRegion, border_policy: BorderPolicy = BorderPolicy.INTERIOR_ONLY
) -> np.ndarray:
    """Convenience pipeline: pixel features -> covariance -> descriptor."""
    return region_feature(region_covariance(pixel_features(region), border_policy))


def decision_d5(p: float) -> float:
    """Map a posterior in [0, 1] onto a confidence in [-1, 1]."""
    p = float(p)
    if not 0.0 <= p <= 1.0:
        raise RegionError(f"posterior must lie in [0, 1], got {p}")
    return 2.0 * p - 1.0
