"""Content-addressed result cache.

Entries are JSON documents keyed by the SHA-256 of the canonical JSON of
(command, parameters, basis hash, format version).  Writes go through a
temporary file in the cache directory followed by an atomic rename, and
every read re-checks the stored payload checksum.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import tempfile
from pathlib import Path

__all__ = ["CACHE_ENV", "FORMAT_VERSION", "ResultCache", "cache_key", "canonical_json"]

CACHE_ENV = "WEILPOS_CACHE"
FORMAT_VERSION = 1

log = logging.getLogger(__name__)


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


def cache_key(command: str, parameters: dict, basis_hash: str = "") -> str:
    doc = {"command": command, "parameters": parameters, "basis_hash": basis_hash,
           "format_version": FORMAT_VERSION}
    return hashlib.sha256(canonical_json(doc).encode()).hexdigest()


def default_dir() -> Path:
    env = os.environ.get(CACHE_ENV)
    if env:
        return Path(env)
    return Path(os.environ.get("XDG_CACHE_HOME", Path.home() / ".cache")) / "weilpos"


class ResultCache:
    def __init__(self, directory: str | os.PathLike | None = None, enabled: bool = True):
        self.directory = Path(directory) if directory is not None else default_dir()
        self.enabled = enabled
        self.hits = 0
        self.misses = 0

    def _path(self, key: str) -> Path:
        return self.directory / key[:2] / f"{key}.json"

    def get(self, key: str):
        if not self.enabled:
            return None
        path = self._path(key)
        try:
            doc = json.loads(path.read_text())
            payload = doc["payload"]
            text = canonical_json(payload)
            if hashlib.sha256(text.encode()).hexdigest() != doc["checksum"]:
                raise ValueError("checksum mismatch")
        except FileNotFoundError:
            self.misses += 1
            return None
        except (ValueError, KeyError, TypeError) as exc:
            log.warning("discarding corrupt cache entry %s (%s)", path.name, exc)
            self.misses += 1
            return None
        self.hits += 1
        return payload

    def put(self, key: str, payload) -> None:
        if not self.enabled:
            return
        text = canonical_json(payload)
        doc = {"checksum": hashlib.sha256(text.encode()).hexdigest(), "payload": payload}
        path = self._path(key)
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-", suffix=".json")
        try:
            with os.fdopen(fd, "w") as fh:
                fh.write(canonical_json(doc))
                fh.flush()
                os.fsync(fh.fileno())
            os.replace(tmp, path)
        except BaseException:
            Path(tmp).unlink(missing_ok=True)
            raise

    def memo(self, command: str, parameters: dict, compute, basis_hash: str = ""):
        key = cache_key(command, parameters, basis_hash)
        hit = self.get(key)
        if hit is not None:
            return hit
        payload = compute()
        self.put(key, payload)
        return payload
