"""Versioned binary checkpoints.

Byte layout (all integers and floats little-endian):

* bytes 0..7    magic ``b"FRQLENS\\x01"`` (the trailing byte is the format
  version);
* bytes 8..11   ``uint32`` length of the JSON header;
* header        UTF-8 JSON with the network spec, the gate plan, the
  optimizer step counter, and an ``arrays`` manifest of
  ``{"name", "shape", "kind"}`` entries, where ``kind`` is one of
  ``param``, ``state``, ``adam_m``, ``adam_v``;
* payload       the manifest's arrays, concatenated in order as C-ordered
  ``float64`` little-endian (``<f8``) buffers.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path
from typing import Optional

import numpy as np

from .network import GatePlan, Network, NetworkSpec
from .training import Adam

MAGIC = b"FRQLENS\x01"
_DTYPE = np.dtype("<f8")


def save_checkpoint(path, net: Network, optimizer: Optional[Adam] = None) -> None:
    manifest = []
    buffers = []

    def add(name: str, array: np.ndarray, kind: str):
        manifest.append({"name": name, "shape": list(array.shape), "kind": kind})
        buffers.append(np.ascontiguousarray(array, dtype=_DTYPE).tobytes())

    for name, value, _ in net.param_items():
        add(name, value, "param")
    for name, value in net.state_items():
        add(name, value, "state")
    if optimizer is not None:
        for name, value in sorted(optimizer.m.items()):
            add(name, value, "adam_m")
        for name, value in sorted(optimizer.v.items()):
            add(name, value, "adam_v")

    header = {
        "format_version": 1,
        "dtype": "<f8",
        "spec": net.spec.to_dict(),
        "plan": net.plan.to_dict(),
        "adam_t": optimizer.t if optimizer is not None else None,
        "arrays": manifest,
    }
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", len(header_bytes)))
        fh.write(header_bytes)
        for buf in buffers:
            fh.write(buf)


def load_checkpoint(path) -> tuple[Network, Optional[Adam]]:
    raw = Path(path).read_bytes()
    if raw[:8] != MAGIC:
        raise ValueError(f"{path}: not a freqlens checkpoint (bad magic)")
    (header_len,) = struct.unpack("<I", raw[8:12])
    header = json.loads(raw[12:12 + header_len].decode("utf-8"))
    if header.get("dtype") != "<f8":
        raise ValueError(f"{path}: unsupported dtype {header.get('dtype')!r}")

    spec = NetworkSpec.from_dict(header["spec"])
    plan = GatePlan.from_dict(header["plan"])
    net = Network(spec, plan)

    offset = 12 + header_len
    arrays: dict[str, dict[str, np.ndarray]] = {"param": {}, "state": {}, "adam_m": {}, "adam_v": {}}
    for entry in header["arrays"]:
        shape = tuple(entry["shape"])
        count = int(np.prod(shape)) if shape else 1
        nbytes = count * _DTYPE.itemsize
        data = np.frombuffer(raw, dtype=_DTYPE, count=count, offset=offset).reshape(shape)
        arrays[entry["kind"]][entry["name"]] = data.astype(np.float64)
        offset += nbytes
    if offset != len(raw):
        raise ValueError(f"{path}: payload size does not match manifest")

    net.set_values({**arrays["param"], **arrays["state"]}, strict=True)

    optimizer = None
    if header["adam_t"] is not None:
        optimizer = Adam()
        optimizer.load_state_dict(
            {"t": header["adam_t"], "m": arrays["adam_m"], "v": arrays["adam_v"]}
        )
    return net, optimizer
