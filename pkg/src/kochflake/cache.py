"""Disk cache for expensive profile computations, keyed by content hash."""

from __future__ import annotations

import hashlib
import json
import os
from pathlib import Path

ENV_VAR = "KOCHFLAKE_CACHE_DIR"


def default_cache_dir() -> Path:
    env = os.environ.get(ENV_VAR)
    if env:
        return Path(env)
    base = os.environ.get("XDG_CACHE_HOME", os.path.join(os.path.expanduser("~"), ".cache"))
    return Path(base) / "kochflake"


def cache_key(module: str, op: str, params: dict) -> str:
    """Stable hash of (module, operation, canonicalized parameters)."""
    blob = json.dumps({"module": module, "op": op, "params": params},
                      sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:32]


class Cache:
    """JSON blobs on disk, one file per key; counts hits for idempotence checks."""

    def __init__(self, root: Path | str | None = None):
        self.root = Path(root) if root is not None else default_cache_dir()
        self.hits = 0
        self.misses = 0

    def _path(self, key: str) -> Path:
        return self.root / f"{key}.json"

    def get(self, key: str):
        p = self._path(key)
        if p.is_file():
            try:
                value = json.loads(p.read_text())
            except (OSError, json.JSONDecodeError):
                self.misses += 1
                return None
            self.hits += 1
            return value
        self.misses += 1
        return None

    def put(self, key: str, value: dict) -> None:
        self.root.mkdir(parents=True, exist_ok=True)
        tmp = self._path(key).with_suffix(".tmp")
        tmp.write_text(json.dumps(value))
        os.replace(tmp, self._path(key))

    def fetch(self, module: str, op: str, params: dict, compute):
        """Cached call: compute() must return a JSON-serializable dict."""
        key = cache_key(module, op, params)
        got = self.get(key)
        if got is not None:
            return got, True
        value = compute()
        self.put(key, value)
        return value, False
