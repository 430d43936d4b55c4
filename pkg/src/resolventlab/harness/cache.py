"""Content-addressed on-disk cache.

Entries are ``MAGIC + sha256(payload) + payload`` and are written through a
temporary file plus ``os.replace`` so concurrent writers never expose a
partial file. A checksum mismatch is treated as a miss and the entry removed.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import struct
import tempfile
from pathlib import Path
from typing import Callable, Optional

import numpy as np

log = logging.getLogger(__name__)

MAGIC = b"RLC1"
ENV_VAR = "RESOLVENTLAB_CACHE_DIR"
_REP_RECORD = struct.Struct("<BQQ")  # n, m = |k|^2, r_n(m)


def default_cache_dir() -> Path:
    env = os.environ.get(ENV_VAR)
    if env:
        return Path(env)
    return Path(os.environ.get("XDG_CACHE_HOME", Path.home() / ".cache")) / "resolventlab"


def make_key(**fields) -> str:
    blob = json.dumps(fields, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()


class Cache:
    def __init__(self, root=None):
        self.root = Path(root) if root is not None else default_cache_dir()

    def _path(self, key: str) -> Path:
        return self.root / key[:2] / f"{key}.bin"

    def get(self, key: str) -> Optional[bytes]:
        """Payload bytes, or None on a miss (including a corrupt entry)."""
        path = self._path(key)
        try:
            blob = path.read_bytes()
        except FileNotFoundError:
            return None
        head = len(MAGIC) + 32
        payload = blob[head:]
        if blob[:len(MAGIC)] != MAGIC or hashlib.sha256(payload).digest() != blob[len(MAGIC):head]:
            log.warning("corrupt cache entry %s; recomputing", path)
            try:
                path.unlink()
            except FileNotFoundError:
                pass
            return None
        return payload

    def put(self, key: str, payload: bytes) -> bytes:
        path = self._path(key)
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-")
        try:
            with os.fdopen(fd, "wb") as fh:
                fh.write(MAGIC + hashlib.sha256(payload).digest() + payload)
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
        return payload

    def get_or_compute(self, key: str, compute: Callable[[], bytes]) -> bytes:
        hit = self.get(key)
        if hit is not None:
            return hit
        return self.put(key, compute())


def encode_rep_counts(n: int, counts) -> bytes:
    return b"".join(_REP_RECORD.pack(n, m, int(r)) for m, r in enumerate(counts))


def decode_rep_counts(blob: bytes) -> tuple[int, np.ndarray]:
    if len(blob) % _REP_RECORD.size:
        raise ValueError("truncated representation-count records")
    recs = list(_REP_RECORD.iter_unpack(blob))
    if not recs:
        return 0, np.zeros(0, dtype=np.int64)
    n = recs[0][0]
    counts = np.zeros(len(recs), dtype=np.int64)
    for dim, m, r in recs:
        if dim != n:
            raise ValueError("mixed dimensions in one record block")
        counts[m] = r
    return n, counts


def cached_representation_counts(n: int, m_max: int, cache: Optional[Cache] = None) -> np.ndarray:
    from ..spectra import representation_counts

    cache = cache or Cache()
    key = make_key(kind="rep_counts", n=n, m_max=m_max)
    blob = cache.get_or_compute(key, lambda: encode_rep_counts(n, representation_counts(n, m_max)))
    return decode_rep_counts(blob)[1]
