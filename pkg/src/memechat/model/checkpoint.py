"""Checkpoint files: one compact JSON config line, then the MODG tensor blob."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from ..numerics import Tensor, read_tensor_blob, write_tensor_blob
from .config import ModelConfig
from .network import Params

HEADER_FORMAT = "memechat-checkpoint"
HEADER_VERSION = 1


class CheckpointError(ValueError):
    pass


def save_checkpoint(path: str | Path, cfg: ModelConfig, params: Params,
                    extra: dict | None = None) -> None:
    header = {
        "format": HEADER_FORMAT,
        "version": HEADER_VERSION,
        "config": cfg.to_json(),
    }
    if extra:
        header["extra"] = extra
    blob = write_tensor_blob({name: p.data for name, p in params.items()})
    with Path(path).open("wb") as fh:
        fh.write(json.dumps(header, sort_keys=True).encode("utf-8"))
        fh.write(b"\n")
        fh.write(blob)


def load_checkpoint(path: str | Path) -> tuple[ModelConfig, Params, dict]:
    raw = Path(path).read_bytes()
    nl = raw.find(b"\n")
    if nl < 0:
        raise CheckpointError(f"{path}: missing header line")
    try:
        header = json.loads(raw[:nl].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"{path}: bad header ({exc})") from None
    if header.get("format") != HEADER_FORMAT:
        raise CheckpointError(f"{path}: not a {HEADER_FORMAT} file")
    cfg = ModelConfig.from_json(header["config"])
    arrays = read_tensor_blob(raw[nl + 1 :])
    params = {
        name: Tensor(arr.astype(np.float32), requires_grad=True)
        for name, arr in arrays.items()
    }
    return cfg, params, header.get("extra", {})
