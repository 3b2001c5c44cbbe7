"""File formats: metadata-tagged CSV, JSON reports, the run manifest, and
the binary eigendecomposition cache.

All writes are atomic (write to a temp file, then rename); the cache takes
an advisory lock so concurrent invocations never interleave partial files.
Numeric CSV bodies use 17 significant digits, round-trip exact for 64-bit
floats.
"""

from __future__ import annotations

import hashlib
import json
import os
import struct
import tempfile
from pathlib import Path

import numpy as np
from filelock import FileLock

from chaoscorr.correlators import CorrelatorSeries
from chaoscorr.errors import CacheError, ValidationError
from chaoscorr.operators import SpectralDecomposition
from chaoscorr.profiles import ChaoticProfile

CACHE_MAGIC = b"CHWF"
CACHE_VERSION = 1


def _atomic_write_bytes(path: Path, data: bytes) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".tmp")
    try:
        with os.fdopen(fd, "wb") as handle:
            handle.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_text(path: Path, text: str) -> None:
    _atomic_write_bytes(Path(path), text.encode())


def fmt(x: float) -> str:
    return f"{x:.17g}"


def series_csv_text(series: CorrelatorSeries, metadata: dict | None = None) -> str:
    lines = [
        f"# kind={series.kind}",
        f"# hamiltonian_tag={series.hamiltonian_tag}",
        f"# observables={','.join(series.observable_tags)}",
    ]
    for key, value in (metadata or {}).items():
        lines.append(f"# {key}={value}")
    lines.append("time,re,im")
    for t, v in zip(series.times, series.values):
        v = complex(v)
        lines.append(f"{fmt(t)},{fmt(v.real)},{fmt(v.imag)}")
    return "\n".join(lines) + "\n"


def write_series_csv(path, series: CorrelatorSeries, metadata: dict | None = None) -> None:
    atomic_write_text(Path(path), series_csv_text(series, metadata))


def read_series_csv(path) -> CorrelatorSeries:
    meta: dict[str, str] = {}
    times, re, im = [], [], []
    with open(path) as handle:
        for line in handle:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, _, value = line[1:].strip().partition("=")
                meta[key] = value
                continue
            if line.startswith("time,"):
                continue
            t, r, i = line.split(",")
            times.append(float(t))
            re.append(float(r))
            im.append(float(i))
    values = np.array(re) + 1j * np.array(im)
    return CorrelatorSeries(
        np.array(times),
        values,
        meta.get("kind", "one_point"),
        meta.get("hamiltonian_tag", "full"),
        tuple(filter(None, meta.get("observables", "").split(","))),
    )


def write_profile_csv(path, profile: ChaoticProfile, metadata: dict | None = None) -> None:
    lines = [
        f"# bin_width={fmt(profile.bin_width)}",
        f"# omega_mean={fmt(profile.omega_mean)}",
        f"# mu_window={profile.mu_window[0]}:{profile.mu_window[1]}",
    ]
    for key, value in (metadata or {}).items():
        lines.append(f"# {key}={value}")
    lines.append("bin_center,density")
    for e, v in zip(profile.bin_centers, profile.bin_values):
        lines.append(f"{fmt(e)},{fmt(v)}")
    atomic_write_text(Path(path), "\n".join(lines) + "\n")


def write_json(path, obj) -> None:
    atomic_write_text(Path(path), json.dumps(obj, indent=2, sort_keys=True) + "\n")


def sha256_file(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for chunk in iter(lambda: handle.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def config_hash(config_dict: dict) -> str:
    canonical = json.dumps(config_dict, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


# --- eigendecomposition cache ------------------------------------------------

def _checksum(data: bytes) -> bytes:
    return hashlib.blake2b(data, digest_size=8).digest()


def save_decomposition(path, decomp: SpectralDecomposition) -> None:
    """Binary cache entry: magic, version u32, dim u64, energies and
    eigenvectors as little-endian float64 (column-major), 64-bit checksum.

    Only real eigenvector matrices are cacheable; both supported models
    are real symmetric.
    """
    vectors = decomp.vectors
    if np.iscomplexobj(vectors):
        if np.max(np.abs(vectors.imag)) > 1e-12:
            raise ValidationError("cache format stores real eigenvectors only")
        vectors = vectors.real
    path = Path(path)
    payload = b"".join(
        [
            CACHE_MAGIC,
            struct.pack("<I", CACHE_VERSION),
            struct.pack("<Q", decomp.dim),
            np.asarray(decomp.energies, dtype="<f8").tobytes(),
            np.asarray(vectors, dtype="<f8", order="F").tobytes(order="F"),
        ]
    )
    with FileLock(str(path) + ".lock"):
        _atomic_write_bytes(path, payload + _checksum(payload))


def load_decomposition(path) -> SpectralDecomposition:
    path = Path(path)
    with FileLock(str(path) + ".lock"):
        data = path.read_bytes()
    if len(data) < 24 or data[:4] != CACHE_MAGIC:
        raise CacheError(f"{path}: not a decomposition cache file")
    if _checksum(data[:-8]) != data[-8:]:
        raise CacheError(f"{path}: checksum mismatch (corrupt cache)")
    (version,) = struct.unpack("<I", data[4:8])
    if version != CACHE_VERSION:
        raise CacheError(f"{path}: unsupported cache version {version}")
    (dim,) = struct.unpack("<Q", data[8:16])
    expected = 16 + 8 * dim + 8 * dim * dim + 8
    if len(data) != expected:
        raise CacheError(f"{path}: truncated cache file")
    energies = np.frombuffer(data, dtype="<f8", count=dim, offset=16).copy()
    vectors = (
        np.frombuffer(data, dtype="<f8", count=dim * dim, offset=16 + 8 * dim)
        .reshape((dim, dim), order="F")
        .copy()
    )
    return SpectralDecomposition(energies=energies, vectors=vectors)


def cached_decomposition(cache_dir, key: str, matrix: np.ndarray) -> SpectralDecomposition:
    """Load the decomposition for `key` or compute and store it."""
    from chaoscorr.operators import hermitian_eigendecomposition

    path = Path(cache_dir) / f"{key}.chwf"
    if path.exists():
        return load_decomposition(path)
    decomp = hermitian_eigendecomposition(matrix)
    save_decomposition(path, decomp)
    return decomp
