"""Pixel-mask cleanup and region alarms.

Fused per-pixel decisions arrive as a binary mask (decision >= 0). A
morphological opening removes speckle, then 8-connected components whose
pixel count strictly exceeds a threshold become alarm regions.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class AlarmRegion:
    component_id: int
    pixel_count: int
    # (x_min, y_min, x_max, y_max), inclusive, x = column / y = row
    bounding_box: tuple[int, int, int, int]


def _erode(mask: np.ndarray, radius: int) -> np.ndarray:
    padded = np.pad(mask, radius, mode="constant", constant_values=False)
    out = np.ones_like(mask, dtype=bool)
    h, w = mask.shape
    for di in range(2 * radius + 1):
        for dj in range(2 * radius + 1):
            out &= padded[di : di + h, dj : dj + w]
    return out


def _dilate(mask: np.ndarray, radius: int) -> np.ndarray:
    padded = np.pad(mask, radius, mode="constant", constant_values=False)
    out = np.zeros_like(mask, dtype=bool)
    h, w = mask.shape
    for di in range(2 * radius + 1):
        for dj in range(2 * radius + 1):
            out |= padded[di : di + h, dj : dj + w]
    return out


def morph_open(mask: np.ndarray, kernel_radius: int = 1) -> np.ndarray:
    """Opening (erosion then dilation) with a square element of side 2r+1."""
    mask = np.asarray(mask, dtype=bool)
    if kernel_radius < 0:
        raise ValueError("kernel_radius must be >= 0")
    if kernel_radius == 0:
        return mask.copy()
    return _dilate(_erode(mask, kernel_radius), kernel_radius)


_NEIGHBOURS = [(-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1)]


def label_components(mask: np.ndarray) -> tuple[np.ndarray, int]:
    """8-connected component labels (0 = background), scan-order ids."""
    mask = np.asarray(mask, dtype=bool)
    labels = np.zeros(mask.shape, dtype=np.int32)
    h, w = mask.shape
    current = 0
    for i in range(h):
        for j in range(w):
            if not mask[i, j] or labels[i, j]:
                continue
            current += 1
            queue = deque([(i, j)])
            labels[i, j] = current
            while queue:
                ci, cj = queue.popleft()
                for di, dj in _NEIGHBOURS:
                    ni, nj = ci + di, cj + dj
                    if 0 <= ni < h and 0 <= nj < w and mask[ni, nj] and not labels[ni, nj]:
                        labels[ni, nj] = current
                        queue.append((ni, nj))
    return labels, current


def extract_alarms(mask: np.ndarray, min_pixels: int = 16) -> list[AlarmRegion]:
    """Components with pixel_count strictly greater than min_pixels,
    sorted by descending size (stable on ties)."""
    if min_pixels < 1:
        raise ValueError("min_pixels must be >= 1")
    labels, count = label_components(mask)
    regions = []
    for component_id in range(1, count + 1):
        ys, xs = np.nonzero(labels == component_id)
        pixel_count = int(ys.size)
        if pixel_count <= min_pixels:
            continue
        regions.append(
            AlarmRegion(
                component_id=component_id,
                pixel_count=pixel_count,
                bounding_box=(int(xs.min()), int(ys.min()), int(xs.max()), int(ys.max())),
            )
        )
    regions.sort(key=lambda r: (-r.pixel_count, r.component_id))
    return regions


def alarms_to_json(regions: list[AlarmRegion]) -> str:
    return json.dumps(
        [
            {
                "component_id": r.component_id,
                "pixel_count": r.pixel_count,
                "bbox": list(r.bounding_box),
            }
            for r in regions
        ],
        separators=(",", ":"),
    )
