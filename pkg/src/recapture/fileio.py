"""On-disk formats for the documented sample interchange.

* portrait image: RGB PNG, mapped to/from ``[-1, 1]`` by ``v / 127.5 - 1``
* semantic layout: 8-bit single-channel PNG (one byte per pixel = class
  index) plus a JSON sidecar ``{"num_classes": N, "class_names": [...]}``
  stored next to it with a ``.json`` suffix
* pose: JSON array of 18 ``[x, y, visible]`` triples
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np
from PIL import Image

from .domain import (
    NUM_KEYPOINTS,
    DomainError,
    PortraitImage,
    PoseKeypoints,
    SemanticLayout,
    labels_to_onehot,
)


def save_image(image: PortraitImage, path: str | Path) -> None:
    Image.fromarray(image.to_uint8(), mode="RGB").save(path, format="PNG")


def load_image(path: str | Path) -> PortraitImage:
    with Image.open(path) as im:
        rgb = np.asarray(im.convert("RGB"))
    return PortraitImage.from_uint8(rgb)


def layout_sidecar_path(path: str | Path) -> Path:
    return Path(path).with_suffix(".json")


def save_layout(layout: SemanticLayout, path: str | Path) -> None:
    layout.require_hard()
    labels = layout.labels()
    if labels.max() > 255:
        raise DomainError("label image format supports at most 256 classes")
    Image.fromarray(labels.astype(np.uint8), mode="L").save(path, format="PNG")
    sidecar = {
        "num_classes": layout.num_classes,
        "class_names": list(layout.class_names),
    }
    layout_sidecar_path(path).write_text(json.dumps(sidecar, sort_keys=True))


def load_layout(path: str | Path) -> SemanticLayout:
    sidecar_path = layout_sidecar_path(path)
    if not sidecar_path.exists():
        raise DomainError(f"layout sidecar missing: {sidecar_path}")
    sidecar = json.loads(sidecar_path.read_text())
    with Image.open(path) as im:
        if im.mode != "L":
            raise DomainError(f"layout image must be single-channel 8-bit, got mode {im.mode!r}")
        labels = np.asarray(im, dtype=np.int64)
    return labels_to_onehot(labels, int(sidecar["num_classes"]), tuple(sidecar["class_names"]))


def save_pose(pose: PoseKeypoints, path: str | Path) -> None:
    triples = [[float(x), float(y), int(v)] for x, y, v in pose.points]
    Path(path).write_text(json.dumps(triples))


def load_pose(path: str | Path) -> PoseKeypoints:
    return pose_from_json(json.loads(Path(path).read_text()))


def pose_from_json(data) -> PoseKeypoints:
    if not isinstance(data, list) or len(data) != NUM_KEYPOINTS:
        raise DomainError(f"pose file must hold exactly {NUM_KEYPOINTS} [x, y, visible] triples")
    arr = np.asarray(data, dtype=np.float32)
    if arr.shape != (NUM_KEYPOINTS, 3):
        raise DomainError("each pose entry must be an [x, y, visible] triple")
    return PoseKeypoints(arr)


def pose_to_json(pose: PoseKeypoints) -> list:
    return [[float(x), float(y), int(v)] for x, y, v in pose.points]
