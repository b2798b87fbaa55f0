"""Bundled STO-3G FCIDUMP files with JSON sidecars (geometry, basis, HF energy).

Regenerate with ``tools/make_fixtures.py`` (requires pyscf).
"""

from __future__ import annotations

import json
from importlib import resources
from pathlib import Path

from ..fermion import FcidumpError, FermionHamiltonian, parse_fcidump


def fixture_dir() -> Path:
    return Path(str(resources.files(__name__)))


def available() -> list[str]:
    return sorted(p.stem for p in fixture_dir().glob("*.fcidump"))


def resolve(name_or_path: str | Path) -> Path:
    path = Path(name_or_path)
    if path.is_file():
        return path
    bundled = fixture_dir() / f"{name_or_path}.fcidump"
    if bundled.is_file():
        return bundled
    raise FileNotFoundError(f"no fixture file or bundled molecule named {str(name_or_path)!r}")


def load(name_or_path: str | Path) -> tuple[FermionHamiltonian, dict]:
    """Parse a fixture; errors carry the file name.  Metadata is ``{}`` without a sidecar."""
    path = resolve(name_or_path)
    try:
        hamiltonian = parse_fcidump(path.read_text())
    except FcidumpError as exc:
        raise FcidumpError(f"{path}: {exc}") from None
    sidecar = path.with_suffix(".json")
    meta = json.loads(sidecar.read_text()) if sidecar.is_file() else {}
    return hamiltonian, meta
