"""Versioned binary model container.

Byte layout (all integers little-endian, all reals IEEE 754 binary64
little-endian; documented so other implementations can interoperate):

    offset  size                 field
    0       8                    magic ``b"BCOSNET\\0"``
    8       4                    format_version, uint32 (currently 1)
    12      4                    n_layers, uint32
    16      4 * (n_layers + 1)   layer_dims d0..dL, uint32 each
    ...     8 * n_layers         per-layer exponent B, float64 each
    ...     8 * sum(d_l * d_{l-1})  weight matrices, layer by layer,
                                    row-major float64

There is nothing else in the file: layers are bias-free by construction and
the loader rejects any trailing bytes.
"""

from __future__ import annotations

import os
import struct

import numpy as np

from .errors import ParseError
from .network import BcosLayer, BcosNetwork

__all__ = ["MAGIC", "FORMAT_VERSION", "save_model", "load_model"]

MAGIC = b"BCOSNET\0"
FORMAT_VERSION = 1


def save_model(net: BcosNetwork, path: str | os.PathLike) -> None:
    dims = net.layer_dims
    parts = [MAGIC, struct.pack("<II", FORMAT_VERSION, net.num_layers)]
    parts.append(struct.pack(f"<{len(dims)}I", *dims))
    parts.append(struct.pack(f"<{net.num_layers}d", *(l.b_exponent for l in net.layers)))
    for layer in net.layers:
        parts.append(np.ascontiguousarray(layer.weights, dtype="<f8").tobytes())
    with open(path, "wb") as fh:
        fh.write(b"".join(parts))


def load_model(path: str | os.PathLike) -> BcosNetwork:
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except OSError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    if len(data) < 16 or data[:8] != MAGIC:
        raise ParseError(f"{path}: not a model file (bad magic)")
    version, n_layers = struct.unpack_from("<II", data, 8)
    if version != FORMAT_VERSION:
        raise ParseError(f"{path}: unsupported format version {version}")
    offset = 16
    need = 4 * (n_layers + 1)
    if len(data) < offset + need:
        raise ParseError(f"{path}: truncated layer dimensions")
    dims = struct.unpack_from(f"<{n_layers + 1}I", data, offset)
    offset += need
    need = 8 * n_layers
    if len(data) < offset + need:
        raise ParseError(f"{path}: truncated exponents")
    exponents = struct.unpack_from(f"<{n_layers}d", data, offset)
    offset += need
    layers = []
    for in_dim, out_dim, b in zip(dims, dims[1:], exponents):
        need = 8 * in_dim * out_dim
        if len(data) < offset + need:
            raise ParseError(f"{path}: truncated weights")
        w = np.frombuffer(data[offset : offset + need], dtype="<f8").reshape(out_dim, in_dim)
        offset += need
        if not np.all(np.isfinite(w)):
            raise ParseError(f"{path}: non-finite weight values")
        layers.append(BcosLayer(w.astype(np.float64), float(b)))
    if offset != len(data):
        raise ParseError(f"{path}: {len(data) - offset} unexpected trailing bytes")
    return BcosNetwork(layers)
