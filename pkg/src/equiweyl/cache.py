"""Content-addressed spectrum cache.

Entries are keyed by the tuple (model digest, backend, h, k, n, e_max,
with_vectors); any parameter change produces a different key, so stale
entries can never be read back, only orphaned.  Storage is one .npz file
per key under a two-level fan-out directory.  Writes go through a lock and
a temp-file rename so concurrent sweep workers stay consistent.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
import threading
from pathlib import Path

import numpy as np

from .geometry import RevolutionSurface, model_document
from .modespec import EigenRecord, ModeGrid


def model_digest(model: RevolutionSurface, samples: int = 257) -> str:
    doc = model_document(model, samples)
    blob = json.dumps(doc, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


class SpectrumCache:
    def __init__(self, root):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()

    @staticmethod
    def key(digest: str, backend: str, h: float, k: int, n: int, e_max: float,
            with_vectors: bool) -> str:
        blob = json.dumps(
            {
                "model": digest,
                "backend": backend,
                "h": float(h).hex(),
                "k": int(k),
                "n": int(n),
                "e_max": float(e_max).hex(),
                "vectors": bool(with_vectors),
            },
            sort_keys=True,
        )
        return hashlib.sha256(blob.encode()).hexdigest()

    def _path(self, key: str) -> Path:
        return self.root / key[:2] / f"{key}.npz"

    def get(self, key: str, grid: ModeGrid | None):
        path = self._path(key)
        if not path.exists():
            return None
        with np.load(path, allow_pickle=False) as data:
            energies = data["energies"]
            meta = json.loads(str(data["meta"]))
            vectors = data["vectors"] if "vectors" in data.files else None
        records = []
        for j, e in enumerate(energies):
            vec = vectors[:, j] if vectors is not None else None
            records.append(
                EigenRecord(float(e), meta["k"], meta["h"], j, meta["provenance"], vec, grid)
            )
        return records

    def put(self, key: str, records) -> None:
        records = list(records)
        path = self._path(key)
        energies = np.array([r.energy for r in records])
        meta = {
            "k": records[0].k if records else 0,
            "h": records[0].h if records else 0.0,
            "provenance": records[0].provenance if records else "fd",
        }
        arrays = {"energies": energies, "meta": np.str_(json.dumps(meta))}
        if records and records[0].vector is not None:
            arrays["vectors"] = np.column_stack([r.vector for r in records])
        with self._lock:
            path.parent.mkdir(parents=True, exist_ok=True)
            fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
            try:
                with os.fdopen(fd, "wb") as fh:
                    np.savez(fh, **arrays)
                os.replace(tmp, path)
            except BaseException:
                if os.path.exists(tmp):
                    os.unlink(tmp)
                raise
