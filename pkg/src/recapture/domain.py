"""Core value types shared across the pipeline: images, keypoints, heatmaps,
semantic layouts, and the layout-editing primitives.

All types wrap plain numpy arrays and are treated as immutable values; every
operation returns a new object. Conventions used everywhere:

* images are float32 ``(3, H, W)`` in ``[-1, 1]``
* keypoints are 18 rows of ``(x, y, visible)`` in the documented joint order
* semantic layouts are one-hot ``(N, H, W)`` with class 0 reserved for the
  background
* pixel coordinates are ``(y, x)`` / row-major
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

BACKGROUND_CLASS = 0
NUM_KEYPOINTS = 18

# Fixed joint ordering for the 18-point skeleton (dataset format contract).
KEYPOINT_NAMES = (
    "nose", "neck",
    "r_shoulder", "r_elbow", "r_wrist",
    "l_shoulder", "l_elbow", "l_wrist",
    "r_hip", "r_knee", "r_ankle",
    "l_hip", "l_knee", "l_ankle",
    "r_eye", "l_eye", "r_ear", "l_ear",
)


class DomainError(ValueError):
    """Raised when a value violates one of the documented invariants."""


@dataclass(frozen=True)
class PortraitImage:
    """3-channel image with values in ``[-1, 1]``."""

    pixels: np.ndarray  # (3, H, W) float32

    def __post_init__(self):
        px = np.asarray(self.pixels, dtype=np.float32)
        if px.ndim != 3 or px.shape[0] != 3:
            raise DomainError(f"image must be (3, H, W), got {px.shape}")
        if px.min() < -1.0 - 1e-6 or px.max() > 1.0 + 1e-6:
            raise DomainError("image values must lie in [-1, 1]")
        object.__setattr__(self, "pixels", np.clip(px, -1.0, 1.0))

    @property
    def height(self) -> int:
        return self.pixels.shape[1]

    @property
    def width(self) -> int:
        return self.pixels.shape[2]

    @classmethod
    def from_uint8(cls, rgb: np.ndarray) -> "PortraitImage":
        """Build from an ``(H, W, 3)`` uint8 array via ``v / 127.5 - 1``."""
        if rgb.ndim != 3 or rgb.shape[2] != 3:
            raise DomainError(f"expected (H, W, 3) uint8 array, got {rgb.shape}")
        px = rgb.astype(np.float32).transpose(2, 0, 1) / 127.5 - 1.0
        return cls(px)

    def to_uint8(self) -> np.ndarray:
        """Inverse of :meth:`from_uint8`, rounded and clipped to ``[0, 255]``."""
        v = (self.pixels + 1.0) * 127.5
        return np.clip(np.rint(v), 0, 255).astype(np.uint8).transpose(1, 2, 0)


@dataclass(frozen=True)
class PoseKeypoints:
    """18 skeleton joints as ``(x, y, visible)`` rows in ``KEYPOINT_NAMES`` order."""

    points: np.ndarray  # (18, 3) float32, columns x, y, visible

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float32)
        if pts.shape != (NUM_KEYPOINTS, 3):
            raise DomainError(
                f"pose must have exactly {NUM_KEYPOINTS} (x, y, visible) rows, got shape {pts.shape}"
            )
        if not np.all(np.isin(pts[:, 2], (0.0, 1.0))):
            raise DomainError("visibility flags must be 0 or 1")
        object.__setattr__(self, "points", pts)

    @property
    def visible(self) -> np.ndarray:
        return self.points[:, 2] > 0.5

    def require_in_bounds(self, height: int, width: int) -> None:
        """Check that every visible joint lies inside the frame."""
        xy = self.points[self.visible, :2]
        if xy.size == 0:
            return
        ok = (xy[:, 0] >= 0) & (xy[:, 0] < width) & (xy[:, 1] >= 0) & (xy[:, 1] < height)
        if not ok.all():
            bad = int(np.flatnonzero(~ok)[0])
            name = KEYPOINT_NAMES[int(np.flatnonzero(self.visible)[bad])]
            raise DomainError(f"visible keypoint {name!r} lies outside the {width}x{height} frame")


@dataclass(frozen=True)
class PoseHeatmap:
    """18-channel binary keypoint heatmap."""

    channels: np.ndarray  # (18, H, W) uint8 in {0, 1}

    def __post_init__(self):
        ch = np.asarray(self.channels)
        if ch.ndim != 3 or ch.shape[0] != NUM_KEYPOINTS:
            raise DomainError(f"heatmap must be ({NUM_KEYPOINTS}, H, W), got {ch.shape}")
        if not np.all(np.isin(ch, (0, 1))):
            raise DomainError("heatmap channels must be binary")
        object.__setattr__(self, "channels", ch.astype(np.uint8))


@dataclass(frozen=True)
class PoseMask:
    """Binary foreground mask."""

    mask: np.ndarray  # (H, W) uint8 in {0, 1}

    def __post_init__(self):
        m = np.asarray(self.mask)
        if m.ndim != 2:
            raise DomainError(f"mask must be (H, W), got {m.shape}")
        if not np.all(np.isin(m, (0, 1))):
            raise DomainError("mask values must be 0 or 1")
        object.__setattr__(self, "mask", m.astype(np.uint8))


@dataclass(frozen=True)
class SemanticLayout:
    """Per-pixel class assignment over ``num_classes`` channels.

    Hard layouts are strictly one-hot; predicted (soft) layouts carry a
    non-negative per-pixel distribution summing to 1. Class 0 is always the
    background.
    """

    onehot: np.ndarray  # (N, H, W) float32
    class_names: tuple = ()

    def __post_init__(self):
        oh = np.asarray(self.onehot, dtype=np.float32)
        if oh.ndim != 3 or oh.shape[0] < 2:
            raise DomainError(f"layout must be (N>=2, H, W), got {oh.shape}")
        if oh.min() < 0:
            raise DomainError("layout channels must be non-negative")
        sums = oh.sum(axis=0)
        if not np.allclose(sums, 1.0, atol=1e-4):
            raise DomainError("layout channels must sum to 1 per pixel")
        names = tuple(self.class_names) if self.class_names else tuple(
            f"class_{i}" for i in range(oh.shape[0])
        )
        if len(names) != oh.shape[0]:
            raise DomainError(
                f"{len(names)} class names for {oh.shape[0]} channels"
            )
        object.__setattr__(self, "onehot", oh)
        object.__setattr__(self, "class_names", names)

    @property
    def num_classes(self) -> int:
        return self.onehot.shape[0]

    @property
    def height(self) -> int:
        return self.onehot.shape[1]

    @property
    def width(self) -> int:
        return self.onehot.shape[2]

    @property
    def is_hard(self) -> bool:
        return bool(np.all(np.isin(self.onehot, (0.0, 1.0))))

    def labels(self) -> np.ndarray:
        """Per-pixel argmax class map; ties break toward the lower index."""
        return self.onehot.argmax(axis=0).astype(np.int64)

    def require_hard(self, what: str = "layout") -> None:
        if not self.is_hard:
            raise DomainError(f"{what} must be a hard (one-hot) layout")


@dataclass(frozen=True)
class LayoutEdit:
    """One user edit on a hard layout.

    ``relabel`` rewrites every pixel of ``part`` to ``target_part``;
    ``dilate`` grows the part by a disk of radius ``amount``, claiming only
    background pixels plus any classes listed in ``yield_classes``;
    ``erode`` shrinks it, vacated pixels become background.
    """

    kind: str  # "relabel" | "dilate" | "erode"
    part: int
    target_part: int | None = None
    amount: int | None = None
    yield_classes: tuple = ()

    def __post_init__(self):
        if self.kind not in ("relabel", "dilate", "erode"):
            raise DomainError(f"unknown edit kind {self.kind!r}")
        if self.kind == "relabel" and self.target_part is None:
            raise DomainError("relabel requires target_part")
        if self.kind in ("dilate", "erode"):
            if self.amount is None or self.amount < 1:
                raise DomainError(f"{self.kind} requires amount >= 1")


def disk_offsets(radius: int) -> np.ndarray:
    """Integer lattice offsets ``(dy, dx)`` with Euclidean norm <= radius."""
    r = int(radius)
    dy, dx = np.mgrid[-r : r + 1, -r : r + 1]
    keep = dy * dy + dx * dx <= r * r
    return np.stack([dy[keep], dx[keep]], axis=1)


def keypoints_to_heatmap(kp: PoseKeypoints, height: int, width: int, radius: int = 4) -> PoseHeatmap:
    """Rasterize keypoints into an 18-channel binary heatmap.

    Channel ``c`` is 1 exactly on the lattice disk of the given radius around
    a visible keypoint (Euclidean distance, truncated at the borders);
    invisible keypoints contribute all-zero channels.
    """
    if radius < 1:
        raise DomainError("radius must be >= 1")
    if height < 2 * radius or width < 2 * radius:
        raise DomainError(f"frame {width}x{height} too small for radius {radius}")
    kp.require_in_bounds(height, width)
    offsets = disk_offsets(radius)
    channels = np.zeros((NUM_KEYPOINTS, height, width), dtype=np.uint8)
    for c in range(NUM_KEYPOINTS):
        x, y, vis = kp.points[c]
        if vis <= 0.5:
            continue
        cy, cx = int(round(float(y))), int(round(float(x)))
        ys = offsets[:, 0] + cy
        xs = offsets[:, 1] + cx
        keep = (ys >= 0) & (ys < height) & (xs >= 0) & (xs < width)
        channels[c, ys[keep], xs[keep]] = 1
    return PoseHeatmap(channels)


def labels_to_onehot(label_map: np.ndarray, num_classes: int, class_names: Sequence[str] = ()) -> SemanticLayout:
    """Encode an integer label map as a hard one-hot layout."""
    labels = np.asarray(label_map)
    if labels.ndim != 2:
        raise DomainError(f"label map must be 2-D, got shape {labels.shape}")
    bad = (labels < 0) | (labels >= num_classes)
    if bad.any():
        y, x = np.argwhere(bad)[0]
        raise DomainError(
            f"label {int(labels[y, x])} at pixel (y={y}, x={x}) outside [0, {num_classes})"
        )
    onehot = np.zeros((num_classes, *labels.shape), dtype=np.float32)
    np.put_along_axis(onehot, labels[None].astype(np.int64), 1.0, axis=0)
    return SemanticLayout(onehot, tuple(class_names))


def part_indices(layout: SemanticLayout, part: int) -> np.ndarray:
    """Row-major ``(y, x)`` coordinates whose argmax class is ``part``.

    Returns an ``(K, 2)`` int array; K may be 0 for absent parts.
    """
    if not 0 <= part < layout.num_classes:
        raise DomainError(f"class {part} outside [0, {layout.num_classes})")
    coords = np.argwhere(layout.labels() == part)
    return coords.astype(np.int64)


def _dilate_mask(mask: np.ndarray, radius: int) -> np.ndarray:
    """Morphological dilation of a boolean mask by a Euclidean disk."""
    out = np.zeros_like(mask)
    h, w = mask.shape
    for dy, dx in disk_offsets(radius):
        src = mask[
            max(0, -dy) : h - max(0, dy),
            max(0, -dx) : w - max(0, dx),
        ]
        out[
            max(0, dy) : h - max(0, -dy),
            max(0, dx) : w - max(0, -dx),
        ] |= src
    return out


def apply_edit(layout: SemanticLayout, edit: LayoutEdit) -> SemanticLayout:
    """Apply one :class:`LayoutEdit` to a hard layout, returning a new hard layout."""
    layout.require_hard()
    n = layout.num_classes
    if not 0 <= edit.part < n:
        raise DomainError(f"part {edit.part} outside [0, {n})")
    if edit.part == BACKGROUND_CLASS:
        raise DomainError("the background class cannot be edited")
    labels = layout.labels()

    if edit.kind == "relabel":
        if not 0 <= edit.target_part < n:
            raise DomainError(f"target_part {edit.target_part} outside [0, {n})")
        labels = labels.copy()
        labels[labels == edit.part] = edit.target_part
    elif edit.kind == "dilate":
        part_mask = labels == edit.part
        grown = _dilate_mask(part_mask, edit.amount) & ~part_mask
        yieldable = labels == BACKGROUND_CLASS
        for cls in edit.yield_classes:
            if not 0 <= cls < n:
                raise DomainError(f"yield class {cls} outside [0, {n})")
            yieldable |= labels == cls
        labels = labels.copy()
        labels[grown & yieldable] = edit.part
    else:  # erode
        part_mask = labels == edit.part
        kept = ~_dilate_mask(~part_mask, edit.amount) & part_mask
        labels = labels.copy()
        labels[part_mask & ~kept] = BACKGROUND_CLASS
    return labels_to_onehot(labels, n, layout.class_names)


def foreground_mask_from_layout(layout: SemanticLayout) -> PoseMask:
    """Binary mask of all non-background pixels."""
    layout.require_hard()
    return PoseMask((layout.labels() != BACKGROUND_CLASS).astype(np.uint8))
