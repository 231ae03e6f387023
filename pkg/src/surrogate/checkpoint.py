"""Binary snapshots of spinor states.

Layout: an 8-byte magic, a little-endian ``uint32`` format version and
``uint64`` metadata length, UTF-8 JSON metadata, the ``uint64`` masks in
row order, then the complex128 amplitudes in C order. Rows follow the
configuration ordering (popcount-major, then mask value), and the masks
are stored so a reader can verify that contract.
"""
from __future__ import annotations

import json
import struct

import numpy as np

from .bath import build_configuration_space
from .errors import ConfigurationError
from .grid import build_grid
from .hamiltonian import SpinorState

MAGIC = b"SURRCKPT"
VERSION = 1
_HEADER = struct.Struct("<8sIQ")


def save_checkpoint(path, psi: SpinorState, time_au: float = 0.0, extra=None):
    g, s = psi.grid, psi.space
    meta = {
        "time_au": float(time_au),
        "grid": {"r_min": g.r_min, "r_max": g.r_max, "n_points": g.n_points},
        "space": {"n_modes": s.n_modes, "n_exc": s.n_exc, "dim": s.dim},
        "ordering": "popcount-major, mask-ascending",
        "extra": extra or {},
    }
    blob = json.dumps(meta, sort_keys=True).encode()
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, len(blob)))
        fh.write(blob)
        fh.write(np.ascontiguousarray(s.masks, dtype="<u8").tobytes())
        fh.write(np.ascontiguousarray(psi.amplitudes, dtype="<c16").tobytes())


def load_checkpoint(path):
    """Returns ``(state, time_au, extra)``."""
    with open(path, "rb") as fh:
        head = fh.read(_HEADER.size)
        if len(head) != _HEADER.size:
            raise ConfigurationError(f"{path} is not a checkpoint file")
        magic, version, n_meta = _HEADER.unpack(head)
        if magic != MAGIC:
            raise ConfigurationError(f"{path} is not a checkpoint file")
        if version != VERSION:
            raise ConfigurationError(f"unsupported checkpoint version {version}")
        meta = json.loads(fh.read(n_meta).decode())
        gm, sm = meta["grid"], meta["space"]
        grid = build_grid(gm["r_min"], gm["r_max"], gm["n_points"])
        space = build_configuration_space(sm["n_modes"], sm["n_exc"])
        masks = np.frombuffer(fh.read(8 * sm["dim"]), dtype="<u8")
        if len(masks) != space.dim or not np.array_equal(masks, space.masks):
            raise ConfigurationError("checkpoint configuration ordering does not match this build")
        n = sm["dim"] * gm["n_points"]
        raw = fh.read(16 * n)
        if len(raw) != 16 * n:
            raise ConfigurationError("checkpoint is truncated")
        amps = np.frombuffer(raw, dtype="<c16")
    state = SpinorState(amps.reshape(sm["dim"], gm["n_points"]).copy(), grid, space)
    return state, meta["time_au"], meta["extra"]
