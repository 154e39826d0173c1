"""Procedural paired-pose dataset of 2-D articulated figures.

Each sample pair shares one figure (colors, limb proportions) rendered in two
independently sampled poses, with exact ground-truth layout, keypoints and
foreground mask. Figures use the 7-class scheme
``[background, head, shirt, coat, arms, legs, shoes]``:

* head, arms and legs share one skin color, so inferring a cropped leg means
  matching the visible skin;
* the torso wears either a striped shirt or a solid coat, so intra-part
  texture transfer is exercised and relabel edits between the two are
  meaningful;
* both shoes share one color derived from the torso color, so cross-part
  reasoning has a learnable target even when the source view crops the legs.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .domain import (
    DomainError,
    PortraitImage,
    PoseHeatmap,
    PoseKeypoints,
    PoseMask,
    SemanticLayout,
    foreground_mask_from_layout,
    keypoints_to_heatmap,
    labels_to_onehot,
)
from . import fileio

CLASS_NAMES_7 = ("background", "head", "shirt", "coat", "arms", "legs", "shoes")

BACKGROUND_COLOR = np.array([0.93, 0.93, 0.95])
HEATMAP_RADIUS = 4
# Painting order, back to front; the torso entry resolves to shirt or coat.
COMPOSITE_ORDER = ("torso", "legs", "shoes", "arms", "head")

# Sampling ranges for figure proportions, in pixels at scale 1 (64x64 frame).
LENGTH_RANGES = {
    "torso": (16.0, 20.0),
    "head_offset": (3.0, 5.0),
    "upper_arm": (7.0, 9.0),
    "forearm": (6.5, 8.5),
    "thigh": (8.0, 10.0),
    "shin": (7.5, 9.5),
    "shoulder_width": (7.0, 9.0),
    "hip_width": (5.0, 7.0),
}
GIRTH_RANGES = {
    "torso": (4.5, 6.0),
    "arm": (1.7, 2.4),
    "leg": (2.0, 3.0),
    "head": (4.5, 6.0),
    "shoe": (3.4, 4.2),
}
# Articulation limits (radians). Elbow/knee angles are relative to the parent
# bone; shoulder/hip are absolute bone directions (0 = +x, pi/2 = straight down).
ANGLE_LIMITS = {
    "torso_tilt": (-0.22, 0.22),
    "shoulder": (np.pi / 2 - 1.15, np.pi / 2 + 1.15),
    "elbow": (-1.2, 1.2),
    "hip": (np.pi / 2 - 0.5, np.pi / 2 + 0.5),
    "knee": (-0.55, 0.55),
}
STRIPE_PERIOD = 3.0  # garment-local pixels along the torso axis


class PoseOutOfFrameError(DomainError):
    """The posed figure does not fit in the requested frame."""


@dataclass(frozen=True)
class PartStyle:
    """Solid base color with an optional second stripe color."""

    base: tuple
    stripe: tuple | None = None

    def palette(self) -> list:
        return [self.base] if self.stripe is None else [self.base, self.stripe]


@dataclass(frozen=True)
class PuppetSpec:
    """Sampled identity of one figure: proportions and per-class styles."""

    part_colors: dict   # class name -> PartStyle
    limb_lengths: dict  # bone name -> length in px at scale 1
    girths: dict        # part name -> half-width in px at scale 1
    torso_class: str    # "shirt" or "coat"
    seed: int

    def __post_init__(self):
        for name, rng in LENGTH_RANGES.items():
            if not rng[0] <= self.limb_lengths[name] <= rng[1]:
                raise DomainError(f"limb length {name} outside configured range")
        for name, rng in GIRTH_RANGES.items():
            if not rng[0] <= self.girths[name] <= rng[1]:
                raise DomainError(f"girth {name} outside configured range")
        if self.torso_class not in ("shirt", "coat"):
            raise DomainError(f"unknown torso class {self.torso_class!r}")
        for style in self.part_colors.values():
            if np.linalg.norm(np.asarray(style.base) - BACKGROUND_COLOR) < 0.12:
                raise DomainError("part color too close to the background color")


@dataclass(frozen=True)
class PoseParams:
    """One articulated pose: joint angles plus root placement and scale."""

    joint_angles: dict  # keys per ANGLE_LIMITS, sides prefixed r_/l_
    root_position: tuple  # (x, y) of the hip center, pixels
    scale: float

    def __post_init__(self):
        if self.scale <= 0:
            raise DomainError("scale must be positive")
        for key, value in self.joint_angles.items():
            base = key.split("_", 1)[1] if key[:2] in ("r_", "l_") else key
            lo, hi = ANGLE_LIMITS[base]
            if not lo - 1e-9 <= value <= hi + 1e-9:
                raise DomainError(f"joint angle {key}={value:.3f} outside articulation limits")


@dataclass(frozen=True)
class Sample:
    image: PortraitImage
    layout: SemanticLayout
    heatmap: PoseHeatmap
    mask: PoseMask
    pose: PoseKeypoints


@dataclass(frozen=True)
class TrainSamplePair:
    source: Sample
    target: Sample
    puppet_id: str
    cropped_source: bool


def _sample_skin(rng: np.random.Generator) -> np.ndarray:
    light = np.array([0.96, 0.80, 0.66])
    dark = np.array([0.42, 0.28, 0.20])
    u = rng.uniform(0.0, 1.0)
    tone = light * (1 - u) + dark * u
    return np.clip(tone + rng.uniform(-0.03, 0.03, 3), 0.05, 1.0)


def _sample_clothing(rng: np.random.Generator) -> np.ndarray:
    h, s, v = rng.uniform(0.0, 1.0), rng.uniform(0.55, 1.0), rng.uniform(0.45, 0.9)
    i = int(h * 6) % 6
    f = h * 6 - int(h * 6)
    p, q, t = v * (1 - s), v * (1 - f * s), v * (1 - (1 - f) * s)
    rgb = [(v, t, p), (q, v, p), (p, v, t), (p, q, v), (t, p, v), (v, p, q)][i]
    return np.asarray(rgb)


def sample_puppet(seed: int) -> PuppetSpec:
    """Deterministically sample one figure identity from a seed."""
    rng = np.random.Generator(np.random.PCG64(int(seed)))
    lengths = {k: float(rng.uniform(*v)) for k, v in LENGTH_RANGES.items()}
    girths = {k: float(rng.uniform(*v)) for k, v in GIRTH_RANGES.items()}
    skin = _sample_skin(rng)
    clothing = _sample_clothing(rng)
    stripe = np.clip(clothing * 0.45 + rng.uniform(0.0, 0.12, 3), 0.0, 1.0)
    shoe = np.clip(clothing * 0.45, 0.02, 1.0)
    torso_class = "shirt" if rng.uniform() < 0.5 else "coat"
    part_colors = {
        "head": PartStyle(tuple(skin)),
        "shirt": PartStyle(tuple(clothing), tuple(stripe)),
        "coat": PartStyle(tuple(clothing)),
        "arms": PartStyle(tuple(skin)),
        "legs": PartStyle(tuple(skin)),
        "shoes": PartStyle(tuple(shoe)),
    }
    return PuppetSpec(part_colors, lengths, girths, torso_class, int(seed))


def _unit(angle: float) -> np.ndarray:
    return np.array([np.cos(angle), np.sin(angle)])


def _joint_positions(spec: PuppetSpec, pose: PoseParams) -> dict:
    """World (x, y) position of every skeleton joint."""
    s = pose.scale
    L = {k: v * s for k, v in spec.limb_lengths.items()}
    a = pose.joint_angles
    root = np.asarray(pose.root_position, dtype=np.float64)

    up = _unit(-np.pi / 2 + a["torso_tilt"])  # hip-center -> neck direction
    perp = np.array([-up[1], up[0]])  # image-right when upright
    neck = root + up * L["torso"]
    head_r = spec.girths["head"] * s
    head_center = neck + up * (L["head_offset"] + 0.6 * head_r)

    joints = {
        "neck": neck,
        "head_center": head_center,
        "nose": head_center,
        "r_eye": head_center + up * (0.15 * head_r) + perp * (0.35 * head_r),
        "l_eye": head_center + up * (0.15 * head_r) - perp * (0.35 * head_r),
        "r_ear": head_center + perp * (0.78 * head_r),
        "l_ear": head_center - perp * (0.78 * head_r),
        "hip_center": root,
        "r_hip": root + perp * (L["hip_width"] / 2),
        "l_hip": root - perp * (L["hip_width"] / 2),
        "r_shoulder": neck + perp * (L["shoulder_width"] / 2),
        "l_shoulder": neck - perp * (L["shoulder_width"] / 2),
    }
    for side in ("r", "l"):
        sh = a[f"{side}_shoulder"]
        joints[f"{side}_elbow"] = joints[f"{side}_shoulder"] + _unit(sh) * L["upper_arm"]
        joints[f"{side}_wrist"] = joints[f"{side}_elbow"] + _unit(sh + a[f"{side}_elbow"]) * L["forearm"]
        hp = a[f"{side}_hip"]
        joints[f"{side}_knee"] = joints[f"{side}_hip"] + _unit(hp) * L["thigh"]
        joints[f"{side}_ankle"] = joints[f"{side}_knee"] + _unit(hp + a[f"{side}_knee"]) * L["shin"]
        joints[f"{side}_shoe"] = joints[f"{side}_ankle"] + np.array([0.0, 0.55]) * spec.girths["shoe"] * s
    return joints


def _primitives(spec: PuppetSpec, pose: PoseParams) -> list:
    """Drawing primitives as ``(class_name, kind, points, radius)`` in
    back-to-front composite order. ``kind`` is ``capsule`` (two points) or
    ``disk`` (one point); radius is in world pixels."""
    j = _joint_positions(spec, pose)
    s = pose.scale
    g = {k: v * s for k, v in spec.girths.items()}
    torso_cls = spec.torso_class
    prims = [(torso_cls, "capsule", (j["neck"], j["hip_center"]), g["torso"])]
    for side in ("r", "l"):
        prims.append(("legs", "capsule", (j[f"{side}_hip"], j[f"{side}_knee"]), g["leg"]))
        prims.append(("legs", "capsule", (j[f"{side}_knee"], j[f"{side}_ankle"]), g["leg"]))
    for side in ("r", "l"):
        prims.append(("shoes", "disk", (j[f"{side}_shoe"],), g["shoe"]))
    for side in ("r", "l"):
        prims.append(("arms", "capsule", (j[f"{side}_shoulder"], j[f"{side}_elbow"]), g["arm"]))
        prims.append(("arms", "capsule", (j[f"{side}_elbow"], j[f"{side}_wrist"]), g["arm"]))
    prims.append(("head", "disk", (j["head_center"],), g["head"]))
    return prims


def _figure_bounds(spec: PuppetSpec, pose: PoseParams) -> tuple:
    """Axis-aligned bounds ``(xmin, ymin, xmax, ymax)`` of the silhouette."""
    pts, radii = [], []
    for _, _, points, radius in _primitives(spec, pose):
        for p in points:
            pts.append(p)
            radii.append(radius)
    pts = np.asarray(pts)
    radii = np.asarray(radii)
    return (
        float((pts[:, 0] - radii).min()),
        float((pts[:, 1] - radii).min()),
        float((pts[:, 0] + radii).max()),
        float((pts[:, 1] + radii).max()),
    )


def _capsule_mask(grid_x, grid_y, p0, p1, radius) -> np.ndarray:
    d = p1 - p0
    len2 = float(d @ d)
    px = grid_x - p0[0]
    py = grid_y - p0[1]
    if len2 < 1e-12:
        dist2 = px * px + py * py
    else:
        t = np.clip((px * d[0] + py * d[1]) / len2, 0.0, 1.0)
        dist2 = (px - t * d[0]) ** 2 + (py - t * d[1]) ** 2
    return dist2 <= radius * radius


def part_masks(spec: PuppetSpec, pose: PoseParams, height: int, width: int) -> list:
    """Per-primitive-class silhouette masks, back to front, before occlusion.

    Returns ``[(class_name, bool mask (H, W)), ...]`` merged per contiguous
    composite-order class.
    """
    grid_y, grid_x = np.mgrid[0:height, 0:width].astype(np.float64)
    merged: list = []
    for cls, kind, points, radius in _primitives(spec, pose):
        if kind == "capsule":
            m = _capsule_mask(grid_x, grid_y, points[0], points[1], radius)
        else:
            m = _capsule_mask(grid_x, grid_y, points[0], points[0], radius)
        if merged and merged[-1][0] == cls:
            merged[-1] = (cls, merged[-1][1] | m)
        else:
            merged.append((cls, m))
    return merged


def render(
    spec: PuppetSpec,
    pose: PoseParams,
    height: int,
    width: int,
    *,
    allow_crop: bool = False,
) -> tuple:
    """Rasterize one posed figure.

    Returns ``(PortraitImage, SemanticLayout, PoseKeypoints)``. The layout's
    part regions are exactly the composited silhouettes; keypoints out of
    frame are marked invisible. Without ``allow_crop``, a figure that does
    not fully fit the frame is rejected.
    """
    xmin, ymin, xmax, ymax = _figure_bounds(spec, pose)
    joints = _joint_positions(spec, pose)
    if not allow_crop:
        if xmin < 0 or ymin < 0 or xmax > width - 1 or ymax > height - 1:
            raise PoseOutOfFrameError(
                f"figure bounds ({xmin:.1f}, {ymin:.1f})..({xmax:.1f}, {ymax:.1f}) "
                f"exceed the {width}x{height} frame"
            )
    else:
        head = joints["head_center"]
        if not (0 <= head[0] < width and 0 <= head[1] < height):
            raise PoseOutOfFrameError("cropped render still requires the head in frame")

    labels = np.zeros((height, width), dtype=np.int64)
    image = np.empty((height, width, 3), dtype=np.float64)
    image[:] = BACKGROUND_COLOR

    grid_y, grid_x = np.mgrid[0:height, 0:width].astype(np.float64)
    up = _unit(-np.pi / 2 + pose.joint_angles["torso_tilt"])
    neck = joints["neck"]

    for cls, mask in part_masks(spec, pose, height, width):
        style = spec.part_colors[cls]
        class_index = CLASS_NAMES_7.index(cls)
        labels[mask] = class_index
        if style.stripe is None:
            image[mask] = style.base
        else:
            # Stripe bands run perpendicular to the torso axis, in
            # garment-local units so the pattern follows the figure.
            t = ((grid_x - neck[0]) * (-up[0]) + (grid_y - neck[1]) * (-up[1])) / pose.scale
            band = np.floor(t / STRIPE_PERIOD).astype(np.int64) % 2
            image[mask & (band == 0)] = style.base
            image[mask & (band == 1)] = style.stripe

    points = np.zeros((18, 3), dtype=np.float32)
    from .domain import KEYPOINT_NAMES

    for idx, name in enumerate(KEYPOINT_NAMES):
        p = joints[name]
        x, y = float(p[0]), float(p[1])
        visible = 0 <= round(x) < width and 0 <= round(y) < height
        points[idx] = (x, y, 1.0 if visible else 0.0)
        if not visible:
            points[idx, :2] = (0.0, 0.0)

    portrait = PortraitImage(np.clip(image, 0.0, 1.0).transpose(2, 0, 1) * 2.0 - 1.0)
    layout = labels_to_onehot(labels, len(CLASS_NAMES_7), CLASS_NAMES_7)
    return portrait, layout, PoseKeypoints(points)


def sample_pose(
    spec: PuppetSpec,
    rng: np.random.Generator,
    height: int,
    width: int,
    *,
    crop_legs: bool = False,
) -> PoseParams:
    """Sample a pose placed to fit the frame; with ``crop_legs`` the hip
    center sits below the bottom edge so legs and shoes are fully cropped."""
    angles = {"torso_tilt": float(rng.uniform(*ANGLE_LIMITS["torso_tilt"]))}
    for side in ("r", "l"):
        angles[f"{side}_shoulder"] = float(rng.uniform(*ANGLE_LIMITS["shoulder"]))
        angles[f"{side}_elbow"] = float(rng.uniform(*ANGLE_LIMITS["elbow"]))
        angles[f"{side}_hip"] = float(rng.uniform(*ANGLE_LIMITS["hip"]))
        angles[f"{side}_knee"] = float(rng.uniform(*ANGLE_LIMITS["knee"]))

    if crop_legs:
        scale = float(rng.uniform(1.25, 1.45)) * height / 64.0
        root_x = width / 2 + float(rng.uniform(-0.06, 0.06)) * width
        root_y = height + spec.girths["leg"] * scale + 2.0
        return PoseParams(angles, (float(root_x), float(root_y)), scale)

    margin = 1.0
    scale = float(rng.uniform(0.8, 1.0)) * height / 64.0
    probe = PoseParams(angles, (0.0, 0.0), scale)
    xmin, ymin, xmax, ymax = _figure_bounds(spec, probe)
    span_x, span_y = xmax - xmin, ymax - ymin
    max_span = max(span_x / (width - 2 * margin), span_y / (height - 2 * margin))
    if max_span > 1.0:
        scale = scale / max_span * 0.98
        probe = PoseParams(angles, (0.0, 0.0), scale)
        xmin, ymin, xmax, ymax = _figure_bounds(spec, probe)
        span_x, span_y = xmax - xmin, ymax - ymin
    free_x = width - 2 * margin - span_x
    free_y = height - 2 * margin - span_y
    root_x = margin - xmin + float(rng.uniform(0.0, 1.0)) * free_x
    root_y = margin - ymin + float(rng.uniform(0.0, 1.0)) * free_y
    return PoseParams(angles, (float(root_x), float(root_y)), scale)


def make_pair(
    seed: int,
    resolution: int = 64,
    crop_probability: float = 0.0,
) -> TrainSamplePair:
    """Generate one paired-pose sample: same figure, two independent poses.

    With probability ``crop_probability`` the source view crops the legs and
    shoes out of frame while the target shows the full figure, exercising
    invisible-part synthesis.
    """
    rng = np.random.Generator(np.random.PCG64(int(seed)))
    spec_seed = int(rng.integers(0, 2**63 - 1))
    spec = sample_puppet(spec_seed)
    cropped = bool(rng.uniform() < crop_probability)
    h = w = resolution
    pose_a = sample_pose(spec, rng, h, w, crop_legs=cropped)
    pose_b = sample_pose(spec, rng, h, w)

    def build(pose: PoseParams, allow_crop: bool) -> Sample:
        image, layout, kp = render(spec, pose, h, w, allow_crop=allow_crop)
        heat = keypoints_to_heatmap(kp, h, w, HEATMAP_RADIUS)
        mask = foreground_mask_from_layout(layout)
        return Sample(image, layout, heat, mask, kp)

    return TrainSamplePair(
        source=build(pose_a, cropped),
        target=build(pose_b, False),
        puppet_id=f"figure-{spec_seed:016x}",
        cropped_source=cropped,
    )


def pair_seed(dataset_seed: int, index: int) -> int:
    """Stable per-pair seed derived from the dataset seed and pair index."""
    return int(np.random.SeedSequence((int(dataset_seed), int(index))).generate_state(1)[0])


def write_dataset(
    count: int,
    seed: int,
    directory: str | Path,
    resolution: int = 64,
    crop_probability: float = 0.3,
    train_fraction: float = 0.9,
) -> dict:
    """Write ``count`` pairs plus a manifest; same seed, same bytes.

    Layout on disk: ``pairs/<id>/{source,target}_{image.png,layout.png,pose.json}``
    with layout sidecars, plus ``manifest.json`` at the root.
    """
    directory = Path(directory)
    try:
        directory.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise DomainError(f"cannot create dataset directory {directory}: {exc}") from exc

    train_count = int(round(count * train_fraction))
    entries = []
    for i in range(count):
        pair = make_pair(pair_seed(seed, i), resolution, crop_probability)
        pair_id = f"{i:06d}"
        pair_dir = directory / "pairs" / pair_id
        try:
            pair_dir.mkdir(parents=True, exist_ok=True)
            files = {}
            for role, sample in (("source", pair.source), ("target", pair.target)):
                files[f"{role}_image"] = f"pairs/{pair_id}/{role}_image.png"
                files[f"{role}_layout"] = f"pairs/{pair_id}/{role}_layout.png"
                files[f"{role}_pose"] = f"pairs/{pair_id}/{role}_pose.json"
                fileio.save_image(sample.image, directory / files[f"{role}_image"])
                fileio.save_layout(sample.layout, directory / files[f"{role}_layout"])
                fileio.save_pose(sample.pose, directory / files[f"{role}_pose"])
        except OSError as exc:
            raise DomainError(f"failed writing pair {pair_id} under {pair_dir}: {exc}") from exc
        entries.append(
            {
                "id": pair_id,
                "puppet_id": pair.puppet_id,
                "split": "train" if i < train_count else "test",
                "cropped_source": pair.cropped_source,
                "files": files,
            }
        )

    manifest = {
        "format_version": 1,
        "count": count,
        "seed": int(seed),
        "resolution": resolution,
        "crop_probability": crop_probability,
        "num_classes": len(CLASS_NAMES_7),
        "class_names": list(CLASS_NAMES_7),
        "pairs": entries,
    }
    try:
        (directory / "manifest.json").write_text(json.dumps(manifest, sort_keys=True, indent=2))
    except OSError as exc:
        raise DomainError(f"failed writing manifest under {directory}: {exc}") from exc
    return manifest


def read_manifest(directory: str | Path) -> dict:
    path = Path(directory) / "manifest.json"
    if not path.exists():
        raise DomainError(f"dataset manifest missing: {path}")
    return json.loads(path.read_text())


def load_pair_entry(directory: str | Path, entry: dict) -> TrainSamplePair:
    """Load one manifest entry back into a :class:`TrainSamplePair`."""
    directory = Path(directory)

    def build(role: str) -> Sample:
        image = fileio.load_image(directory / entry["files"][f"{role}_image"])
        layout = fileio.load_layout(directory / entry["files"][f"{role}_layout"])
        pose = fileio.load_pose(directory / entry["files"][f"{role}_pose"])
        heat = keypoints_to_heatmap(pose, image.height, image.width, HEATMAP_RADIUS)
        mask = foreground_mask_from_layout(layout)
        return Sample(image, layout, heat, mask, pose)

    return TrainSamplePair(
        source=build("source"),
        target=build("target"),
        puppet_id=entry["puppet_id"],
        cropped_source=bool(entry.get("cropped_source", False)),
    )


POSE_PRESET_SEEDS = {
    "standing": 11,
    "arms-down": 23,
    "arms-out": 37,
    "lean-left": 41,
    "lean-right": 59,
    "stride": 67,
}


def pose_library(resolution: int = 64) -> dict:
    """Named keypoint presets harvested from the generator; all render
    in-frame at the default scale."""
    spec = sample_puppet(0)
    presets = {}
    for name, seed in POSE_PRESET_SEEDS.items():
        rng = np.random.Generator(np.random.PCG64(seed))
        pose = sample_pose(spec, rng, resolution, resolution)
        _, _, kp = render(spec, pose, resolution, resolution)
        presets[name] = kp
    return presets
