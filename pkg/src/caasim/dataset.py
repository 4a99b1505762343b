"""Corpus generation and the .caad binary format.

A corpus is num_devices x sessions_per_device session records with a
deterministic per-device split by session index (first 80% train, next 10%
validation, last 10% test by default, so every device appears in every
split). The binary layout is little-endian:

    magic "CAAD" | format_version u16 | num_devices u32 |
    sessions_per_device u32 | n_samples u32 | num_columns u32 (= 8)
    then, sorted by (device_id, session_index):
    device_id u32 | session_index u32 | theta f32 | phi f32 |
    n_samples * 8 float32, row-major

A JSON manifest (<name>.manifest.json) rides along with the config echo,
split counts, and a 64-bit checksum (first 8 bytes of SHA-256 of the
payload, hex). The manifest is the interchange contract for external
consumers of the corpus.
"""

from __future__ import annotations

import hashlib
import json
import math
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .channel import ChannelParams
from .fingerprint import (ELEVATION_MAX, Direction, PhaseMode,
                          RandomizationParams, build_device)
from .rng import derive_seed
from .session import NUM_COLUMNS, SessionRecord, generate_session, sample_direction

MAGIC = b"CAAD"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sHIIII")
_RECORD_HEAD = struct.Struct("<IIff")

SPLITS = ("train", "val", "test")


class CorpusFormatError(ValueError):
    """Bad magic, version, or structural metadata."""


class CorpusTruncatedError(ValueError):
    """File ends before the declared record payload."""


class CorpusCorruptionError(ValueError):
    """Payload bytes disagree with the manifest checksum."""


@dataclass(frozen=True)
class CorpusConfig:
    """Everything needed to regenerate a corpus bit-for-bit."""

    num_devices: int = 300
    sessions_per_device: int = 100
    n_samples: int = 1000
    mode: PhaseMode = PhaseMode.GEOMETRY
    channel: ChannelParams = field(default_factory=ChannelParams)
    master_seed: int = 0
    split_fractions: tuple[float, float, float] = (0.8, 0.1, 0.1)

    def __post_init__(self):
        if self.num_devices < 1 or self.sessions_per_device < 1 or self.n_samples < 1:
            raise ValueError("corpus dimensions must be positive")
        if min(self.split_fractions) <= 0:
            raise ValueError("split fractions must be positive")
        if abs(sum(self.split_fractions) - 1.0) > 1e-9:
            raise ValueError("split fractions must sum to 1")
        if self.split_sizes()["train"] < 1:
            raise ValueError("each split needs at least one session per device")

    def split_sizes(self) -> dict[str, int]:
        """Sessions per device in each split (val/test floored, >= 1 each)."""
        s = self.sessions_per_device
        n_val = max(1, int(s * self.split_fractions[1]))
        n_test = max(1, int(s * self.split_fractions[2]))
        return {"train": s - n_val - n_test, "val": n_val, "test": n_test}

    def split_of(self, session_index: int) -> str:
        sizes = self.split_sizes()
        if session_index < sizes["train"]:
            return "train"
        if session_index < sizes["train"] + sizes["val"]:
            return "val"
        return "test"


@dataclass(frozen=True)
class DatasetManifest:
    """Sidecar JSON describing a .caad payload."""

    format_version: int
    config: CorpusConfig
    split_counts: dict[str, int]
    sessions_per_split_per_device: dict[str, int]
    record_count: int
    payload_bytes: int
    checksum: str  # first 8 bytes of sha256(payload), hex

    def to_json(self) -> str:
        cfg = asdict(self.config)
        cfg["mode"] = self.config.mode.value
        cfg["master_seed"] = str(self.config.master_seed)  # JS-safe 64-bit
        cfg["split_fractions"] = list(self.config.split_fractions)
        snr = cfg["channel"]["snr_db"]
        cfg["channel"]["snr_db"] = None if math.isinf(snr) else snr
        return json.dumps({
            "format_version": self.format_version,
            "config": cfg,
            "split_counts": self.split_counts,
            "sessions_per_split_per_device": self.sessions_per_split_per_device,
            "record_count": self.record_count,
            "payload_bytes": self.payload_bytes,
            "checksum": self.checksum,
        }, indent=2)

    @staticmethod
    def from_json(text: str) -> "DatasetManifest":
        raw = json.loads(text)
        cfg = raw["config"]
        ch = dict(cfg["channel"])
        if ch["snr_db"] is None:
            ch["snr_db"] = math.inf
        config = CorpusConfig(
            num_devices=cfg["num_devices"],
            sessions_per_device=cfg["sessions_per_device"],
            n_samples=cfg["n_samples"],
            mode=PhaseMode(cfg["mode"]),
            channel=ChannelParams(**ch),
            master_seed=int(cfg["master_seed"]),
            split_fractions=tuple(cfg["split_fractions"]),
        )
        return DatasetManifest(
            format_version=raw["format_version"],
            config=config,
            split_counts=raw["split_counts"],
            sessions_per_split_per_device=raw["sessions_per_split_per_device"],
            record_count=raw["record_count"],
            payload_bytes=raw["payload_bytes"],
            checksum=raw["checksum"],
        )


def payload_checksum(payload: bytes) -> str:
    return hashlib.sha256(payload).hexdigest()[:16]


def session_seed(master_seed: int, device_id: int, session_index: int) -> int:
    return derive_seed(master_seed, "session", device_id, session_index)


def build_session(config: CorpusConfig, device, session_index: int) -> SessionRecord:
    seed = session_seed(config.master_seed, device.device_id, session_index)
    direction = sample_direction(derive_seed(seed, "dir"))
    return generate_session(device, direction, config.channel, config.n_samples,
                            seed, session_index=session_index)


def _encode_record(record: SessionRecord) -> bytes:
    head = _RECORD_HEAD.pack(record.device_id, record.session_index,
                             record.direction.theta, record.direction.phi)
    body = np.ascontiguousarray(record.samples, dtype="<f4").tobytes()
    return head + body


def generate_corpus(config: CorpusConfig, workers: int = 1) -> tuple[bytes, DatasetManifest]:
    """Generate all sessions and serialize them, sorted by (device, session).

    Session seeds are derived per (device_id, session_index), so the payload
    is identical no matter how many workers generate it.
    """
    params = RandomizationParams(master_seed=config.master_seed)
    devices = [build_device(params, d, config.mode) for d in range(config.num_devices)]

    jobs = [(dev, s) for dev in devices for s in range(config.sessions_per_device)]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(lambda j: build_session(config, j[0], j[1]), jobs))
    else:
        records = [build_session(config, dev, s) for dev, s in jobs]
    records.sort(key=lambda r: (r.device_id, r.session_index))

    chunks = [_HEADER.pack(MAGIC, FORMAT_VERSION, config.num_devices,
                           config.sessions_per_device, config.n_samples, NUM_COLUMNS)]
    chunks.extend(_encode_record(r) for r in records)
    payload = b"".join(chunks)

    sizes = config.split_sizes()
    manifest = DatasetManifest(
        format_version=FORMAT_VERSION,
        config=config,
        split_counts={k: sizes[k] * config.num_devices for k in SPLITS},
        sessions_per_split_per_device=sizes,
        record_count=len(records),
        payload_bytes=len(payload),
        checksum=payload_checksum(payload),
    )
    return payload, manifest


def corpus_paths(path: str | Path) -> tuple[Path, Path]:
    """(.caad path, manifest path) for a base name or either file name."""
    p = Path(path)
    if p.suffix == ".caad":
        base = p.with_suffix("")
    elif p.name.endswith(".manifest.json"):
        base = p.parent / p.name[: -len(".manifest.json")]
    else:
        base = p
    return base.with_suffix(".caad"), base.parent / (base.name + ".manifest.json")


def write_corpus(payload: bytes, manifest: DatasetManifest, path: str | Path) -> tuple[Path, Path]:
    """Write <base>.caad and <base>.manifest.json; returns both paths."""
    bin_path, man_path = corpus_paths(path)
    try:
        bin_path.write_bytes(payload)
        man_path.write_text(manifest.to_json())
    except OSError as exc:
        raise OSError(f"writing corpus to {bin_path.parent}: {exc}") from exc
    return bin_path, man_path


def read_corpus(path: str | Path) -> tuple[list[SessionRecord], DatasetManifest]:
    """Read and verify a corpus; lossless inverse of ``write_corpus``."""
    bin_path, man_path = corpus_paths(path)
    manifest = DatasetManifest.from_json(man_path.read_text())
    payload = bin_path.read_bytes()

    if len(payload) < _HEADER.size:
        raise CorpusTruncatedError(f"{bin_path}: shorter than the fixed header")
    magic, version, num_devices, sessions_per_device, n_samples, num_columns = \
        _HEADER.unpack_from(payload, 0)
    if magic != MAGIC:
        raise CorpusFormatError(f"{bin_path}: bad magic {magic!r}")
    if version != FORMAT_VERSION:
        raise CorpusFormatError(f"{bin_path}: unsupported format version {version}")
    if num_columns != NUM_COLUMNS:
        raise CorpusFormatError(f"{bin_path}: expected {NUM_COLUMNS} columns, got {num_columns}")

    record_count = num_devices * sessions_per_device
    record_bytes = _RECORD_HEAD.size + n_samples * num_columns * 4
    expected = _HEADER.size + record_count * record_bytes
    if len(payload) != expected:
        raise CorpusTruncatedError(
            f"{bin_path}: {len(payload)} bytes, expected {expected}")
    if payload_checksum(payload) != manifest.checksum:
        raise CorpusCorruptionError(f"{bin_path}: checksum mismatch with manifest")

    records = []
    offset = _HEADER.size
    for _ in range(record_count):
        device_id, session_index, theta, phi = _RECORD_HEAD.unpack_from(payload, offset)
        # float32 storage can nudge angles just past their bounds
        theta = min(max(theta, 0.0), ELEVATION_MAX)
        phi = min(max(phi, -math.pi), math.pi)
        offset += _RECORD_HEAD.size
        samples = np.frombuffer(payload, dtype="<f4", count=n_samples * num_columns,
                                offset=offset).reshape(n_samples, num_columns).copy()
        offset += n_samples * num_columns * 4
        records.append(SessionRecord(device_id=device_id, session_index=session_index,
                                     direction=Direction(theta=float(theta), phi=float(phi)),
                                     samples=samples))
    return records, manifest


def split_arrays(records: list[SessionRecord],
                 manifest: DatasetManifest) -> dict[str, tuple[np.ndarray, np.ndarray]]:
    """Stack records into per-split (x, labels) arrays for training.

    x has shape (sessions, n_samples, 8, 1) float32; labels are device ids.
    """
    sizes = manifest.sessions_per_split_per_device
    buckets: dict[str, list[SessionRecord]] = {k: [] for k in SPLITS}
    for r in records:
        buckets[manifest.config.split_of(r.session_index)].append(r)
    out = {}
    for name, recs in buckets.items():
        x = np.stack([r.samples for r in recs])[..., None]
        y = np.array([r.device_id for r in recs], dtype=np.int64)
        expected = sizes[name] * manifest.config.num_devices
        if len(recs) != expected:
            raise CorpusFormatError(f"split {name}: {len(recs)} records, expected {expected}")
        out[name] = (x, y)
    return out
