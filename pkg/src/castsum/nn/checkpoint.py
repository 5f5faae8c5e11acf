"""Checkpoint files: one JSON manifest line, then a little-endian f32 payload.

Offsets in the manifest count elements (not bytes) from the payload start.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Mapping

import numpy as np
import torch

FORMAT_VERSION = 1


class CheckpointError(ValueError):
    pass


def save_checkpoint(path: str | Path, tensors: Mapping[str, torch.Tensor], **meta) -> None:
    entries, chunks, offset = [], [], 0
    for name, t in tensors.items():
        arr = t.detach().cpu().to(torch.float32).numpy().astype("<f4", copy=False).ravel()
        entries.append({"name": name, "shape": list(t.shape), "offset": offset})
        chunks.append(arr)
        offset += arr.size
    manifest = {"version": FORMAT_VERSION, "tensors": entries, **meta}
    with open(path, "wb") as fh:
        fh.write(json.dumps(manifest, ensure_ascii=False).encode("utf-8") + b"\n")
        for arr in chunks:
            fh.write(arr.tobytes())


def load_checkpoint(path: str | Path) -> tuple[dict[str, torch.Tensor], dict]:
    with open(path, "rb") as fh:
        header = fh.readline()
        payload = fh.read()
    try:
        manifest = json.loads(header)
    except json.JSONDecodeError as exc:
        raise CheckpointError(f"{path}: unreadable manifest") from exc
    version = manifest.get("version")
    if version != FORMAT_VERSION:
        raise CheckpointError(f"{path}: checkpoint format v{version}, this build reads v{FORMAT_VERSION}")
    data = np.frombuffer(payload, dtype="<f4")
    tensors = {}
    for e in manifest["tensors"]:
        n = int(np.prod(e["shape"])) if e["shape"] else 1
        start = e["offset"]
        if start + n > data.size:
            raise CheckpointError(f"{path}: tensor {e['name']} runs past the payload")
        tensors[e["name"]] = torch.from_numpy(data[start : start + n].copy()).reshape(e["shape"])
    meta = {k: v for k, v in manifest.items() if k not in ("tensors",)}
    return tensors, meta
