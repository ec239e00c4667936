"""Local pretrained assets (checkpoints, word-vector files) pinned by content hash.

The locator file is JSON::

    {"GroNLP/hateBERT": {"path": "checkpoints/hateBERT", "sha256": "..."}}

Relative paths resolve against the locator file's directory.  A ``sha256`` of
``null`` skips verification (handy while assembling a new asset set).
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field
from pathlib import Path

ASSETS_ENV = "INSULTSENSE_ASSETS"


class AssetError(Exception):
    def __init__(self, asset_id, message):
        super().__init__(f"asset {asset_id!r}: {message}")
        self.asset_id = asset_id


def content_sha256(path) -> str:
    """Hash of a file, or of a directory tree (relative paths + bytes, sorted)."""
    path = Path(path)
    h = hashlib.sha256()
    files = [path] if path.is_file() else sorted(p for p in path.rglob("*") if p.is_file())
    for f in files:
        if path.is_dir():
            h.update(f.relative_to(path).as_posix().encode())
            h.update(b"\0")
        with f.open("rb") as fh:
            for chunk in iter(lambda: fh.read(1 << 20), b""):
                h.update(chunk)
    return h.hexdigest()


@dataclass
class AssetLocator:
    entries: dict[str, dict] = field(default_factory=dict)
    root: Path = field(default_factory=Path.cwd)
    verify: bool = True
    _verified: set = field(default_factory=set, repr=False)

    @classmethod
    def from_file(cls, path, verify: bool = True) -> AssetLocator:
        path = Path(path)
        return cls(json.loads(path.read_text()), root=path.parent.resolve(), verify=verify)

    @classmethod
    def from_env(cls) -> AssetLocator:
        env = os.environ.get(ASSETS_ENV)
        return cls.from_file(env) if env else cls()

    def register(self, asset_id: str, path, sha256: str | None = "auto"):
        if sha256 == "auto":
            sha256 = content_sha256(path)
        self.entries[asset_id] = {"path": str(path), "sha256": sha256}

    def resolve(self, asset_id: str) -> Path:
        if asset_id not in self.entries:
            raise AssetError(asset_id, "not listed in the asset locator")
        entry = self.entries[asset_id]
        path = Path(entry["path"])
        if not path.is_absolute():
            path = self.root / path
        if not path.exists():
            raise AssetError(asset_id, f"path {path} does not exist")
        expected = entry.get("sha256")
        if self.verify and expected and asset_id not in self._verified:
            actual = content_sha256(path)
            if actual != expected:
                raise AssetError(asset_id, f"content hash {actual[:12]} != pinned {expected[:12]}")
            self._verified.add(asset_id)
        return path

    def sha256(self, asset_id: str) -> str | None:
        return self.entries.get(asset_id, {}).get("sha256")

    def save(self, path) -> Path:
        path = Path(path)
        path.write_text(json.dumps(self.entries, indent=2) + "\n")
        return path
