"""JSONL corpus manifests.

One JSON object per line; required keys are id, image_path and
gt_mask_path. pred_mask_paths (list), dataset, object_class and
attention_map_path are optional. Relative paths are resolved against
the manifest's own directory so corpora stay relocatable.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

from .errors import FormatError, IoError


@dataclass
class ManifestRecord:
    id: str
    image_path: str
    gt_mask_path: str
    pred_mask_paths: list[str] = field(default_factory=list)
    dataset: str = ""
    object_class: str = ""
    attention_map_path: str | None = None


_REQUIRED = ("id", "image_path", "gt_mask_path")


def read_manifest(path: str) -> list[ManifestRecord]:
    """Parse a JSONL manifest, enforcing required keys and unique ids."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise IoError(f"cannot read manifest {path}: {exc}") from exc
    records = []
    seen = set()
    for lineno, line in enumerate(lines, start=1):
        line = line.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise FormatError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
        if not isinstance(obj, dict):
            raise FormatError(f"{path}:{lineno}: each line must be a JSON object")
        for key in _REQUIRED:
            if key not in obj or not isinstance(obj[key], str) or not obj[key]:
                raise FormatError(f"{path}:{lineno}: missing or empty key {key!r}")
        if obj["id"] in seen:
            raise FormatError(f"{path}:{lineno}: duplicate id {obj['id']!r}")
        seen.add(obj["id"])
        preds = obj.get("pred_mask_paths", [])
        if not isinstance(preds, list) or not all(isinstance(p, str) for p in preds):
            raise FormatError(f"{path}:{lineno}: pred_mask_paths must be a string list")
        records.append(
            ManifestRecord(
                id=obj["id"],
                image_path=obj["image_path"],
                gt_mask_path=obj["gt_mask_path"],
                pred_mask_paths=list(preds),
                dataset=str(obj.get("dataset", "")),
                object_class=str(obj.get("object_class", "")),
                attention_map_path=obj.get("attention_map_path"),
            )
        )
    return records


def write_manifest(path: str, records: list[ManifestRecord]) -> None:
    try:
        with open(path, "w", encoding="utf-8") as fh:
            for rec in records:
                obj = {
                    "id": rec.id,
                    "image_path": rec.image_path,
                    "gt_mask_path": rec.gt_mask_path,
                    "pred_mask_paths": rec.pred_mask_paths,
                }
                if rec.dataset:
                    obj["dataset"] = rec.dataset
                if rec.object_class:
                    obj["object_class"] = rec.object_class
                if rec.attention_map_path:
                    obj["attention_map_path"] = rec.attention_map_path
                fh.write(json.dumps(obj) + "\n")
    except OSError as exc:
        raise IoError(f"cannot write manifest {path}: {exc}") from exc


def resolve_path(manifest_path: str, entry: str) -> str:
    """Resolve a manifest entry relative to the manifest's directory."""
    if os.path.isabs(entry):
        return entry
    return os.path.join(os.path.dirname(os.path.abspath(manifest_path)), entry)
