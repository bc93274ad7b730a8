"""Binary spectrum cache.

Layout (all integers little-endian)::

    b"SCARSPEC"                    8-byte magic
    uint32 header_len
    header_len bytes               JSON header, sorted keys:
                                   {format_version, N, sector_id, dim, observable_id}
    dim * float64                  energies, ascending
    dim * dim * float64            eigenvectors, row-major (column m = state m)
    uint64                         BLAKE2b-64 of header bytes + payload
"""

from __future__ import annotations

import hashlib
import json
import os
import struct
from pathlib import Path

import numpy as np

from .errors import CacheError
from .spectral import Spectrum

MAGIC = b"SCARSPEC"
FORMAT_VERSION = 1
CACHE_ENV = "SCARLAB_CACHE"


def checksum(data: bytes) -> int:
    return int.from_bytes(hashlib.blake2b(data, digest_size=8).digest(), "little")


def cache_path(cache_dir, n_sites: int, sector_id: str, observable_id: str) -> Path:
    return Path(cache_dir) / f"pxp_N{n_sites}_{sector_id}_{observable_id}.scspec"


def default_cache_dir() -> Path:
    return Path(os.environ.get(CACHE_ENV, ".scarlab-cache"))


def encode_spectrum(spec: Spectrum, observable_id: str) -> bytes:
    header = {
        "format_version": FORMAT_VERSION,
        "N": spec.n_sites,
        "sector_id": spec.sector_id,
        "dim": spec.dim,
        "observable_id": observable_id,
    }
    hbytes = json.dumps(header, sort_keys=True, separators=(",", ":")).encode()
    payload = (np.asarray(spec.energies, dtype="<f8").tobytes()
               + np.ascontiguousarray(spec.vectors, dtype="<f8").tobytes())
    body = hbytes + payload
    return MAGIC + struct.pack("<I", len(hbytes)) + body + struct.pack("<Q", checksum(body))


def decode_spectrum(blob: bytes) -> tuple[Spectrum, dict]:
    if len(blob) < len(MAGIC) + 4 + 8 or blob[: len(MAGIC)] != MAGIC:
        raise CacheError("not a scarlab spectrum cache")
    (hlen,) = struct.unpack_from("<I", blob, len(MAGIC))
    start = len(MAGIC) + 4
    body = blob[start:-8]
    (stored,) = struct.unpack("<Q", blob[-8:])
    if checksum(body) != stored:
        raise CacheError("checksum mismatch")
    try:
        header = json.loads(body[:hlen].decode())
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CacheError(f"unreadable header: {exc}") from None
    if header.get("format_version") != FORMAT_VERSION:
        raise CacheError(f"unsupported format_version {header.get('format_version')!r}")
    dim = int(header["dim"])
    payload = body[hlen:]
    if len(payload) != 8 * (dim + dim * dim):
        raise CacheError("payload length does not match header dim")
    energies = np.frombuffer(payload, dtype="<f8", count=dim).astype(float)
    vectors = np.frombuffer(payload, dtype="<f8", offset=8 * dim).astype(float).reshape(dim, dim)
    energies.setflags(write=False)
    vectors.setflags(write=False)
    spec = Spectrum(energies=energies, vectors=vectors,
                    n_sites=int(header["N"]), sector_id=header["sector_id"])
    return spec, header


def write_spectrum(path, spec: Spectrum, observable_id: str) -> int:
    """Write atomically; returns the stored checksum."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    blob = encode_spectrum(spec, observable_id)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_bytes(blob)
    os.replace(tmp, path)
    return struct.unpack("<Q", blob[-8:])[0]


def read_spectrum(path, expect: dict | None = None) -> tuple[Spectrum, dict]:
    """Load a cache file, optionally requiring header fields to match ``expect``."""
    try:
        blob = Path(path).read_bytes()
    except OSError as exc:
        raise CacheError(str(exc)) from None
    spec, header = decode_spectrum(blob)
    for key, value in (expect or {}).items():
        if header.get(key) != value:
            raise CacheError(f"header field {key}={header.get(key)!r}, expected {value!r}")
    return spec, header
