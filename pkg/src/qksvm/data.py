"""Grayscale PGM image I/O, preprocessing transforms, a seeded synthetic
fruit-surface generator, and stratified dataset splitting.

Datasets on disk are a directory with `normal/` and `anomaly/` subfolders of
.pgm files plus, for generated data, a manifest.json recording the generator
configuration and seed.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .seeding import rng_from_key

NORMAL_LABEL = -1
ANOMALY_LABEL = 1


class PgmError(ValueError):
    """Malformed or truncated PGM content; messages carry byte offsets."""


@dataclass(frozen=True, eq=False)
class GrayImage:
    """A height-by-width array of intensities in [0, 1], row-major."""

    pixels: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.pixels, dtype=float)
        if arr.ndim != 2 or arr.size == 0:
            raise ValueError(f"pixels must be a non-empty 2-D array, got shape {arr.shape}")
        if arr.min() < 0.0 or arr.max() > 1.0:
            raise ValueError("pixel intensities must lie in [0, 1]")
        object.__setattr__(self, "pixels", arr)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]


def _next_token(data: bytes, pos: int) -> tuple[bytes, int]:
    """Next whitespace-delimited header token, skipping '#' comments."""
    n = len(data)
    while pos < n:
        c = data[pos:pos + 1]
        if c.isspace():
            pos += 1
        elif c == b"#":
            while pos < n and data[pos:pos + 1] != b"\n":
                pos += 1
        else:
            break
    if pos >= n:
        raise PgmError(f"unexpected end of header at byte {pos}")
    start = pos
    while pos < n and not data[pos:pos + 1].isspace() and data[pos:pos + 1] != b"#":
        pos += 1
    return data[start:pos], pos


def _header_int(data: bytes, pos: int, what: str) -> tuple[int, int]:
    token, end = _next_token(data, pos)
    try:
        value = int(token)
    except ValueError:
        raise PgmError(f"bad {what} {token!r} at byte {end - len(token)}") from None
    return value, end


def load_pgm(path: str | Path) -> GrayImage:
    """Read a P2 (ASCII) or P5 (binary) PGM file, normalizing to [0, 1]."""
    data = Path(path).read_bytes()
    magic, pos = _next_token(data, 0)
    if magic not in (b"P2", b"P5"):
        raise PgmError(f"unsupported magic {magic!r} at byte 0; only P2 and P5 are handled")
    width, pos = _header_int(data, pos, "width")
    height, pos = _header_int(data, pos, "height")
    maxval, pos = _header_int(data, pos, "maxval")
    if width < 1 or height < 1:
        raise PgmError(f"invalid dimensions {width}x{height}")
    if not 1 <= maxval <= 65535:
        raise PgmError(f"maxval {maxval} outside 1..65535")

    if magic == b"P5":
        if pos >= len(data) or not data[pos:pos + 1].isspace():
            raise PgmError(f"expected single whitespace after maxval at byte {pos}")
        pos += 1
        bytes_per = 1 if maxval <= 255 else 2
        expected = width * height * bytes_per
        payload = data[pos:pos + expected]
        if len(payload) < expected:
            raise PgmError(
                f"truncated P5 payload at byte {pos + len(payload)}: "
                f"expected {expected} bytes, found {len(payload)}"
            )
        dtype = np.uint8 if bytes_per == 1 else np.dtype(">u2")
        raw = np.frombuffer(payload, dtype=dtype).astype(float)
    else:
        values = []
        while len(values) < width * height:
            value, pos = _header_int(data, pos, "pixel")
            values.append(value)
        raw = np.array(values, dtype=float)
    if raw.max(initial=0.0) > maxval:
        raise PgmError(f"pixel value exceeds maxval {maxval}")
    return GrayImage(raw.reshape(height, width) / maxval)


def save_pgm(image: GrayImage, path: str | Path) -> None:
    """Write binary P5 with maxval 255 and a canonical header, so that a
    load/save cycle of a maxval-255 file reproduces its bytes exactly."""
    header = f"P5\n{image.width} {image.height}\n255\n".encode()
    quantized = np.round(image.pixels * 255.0).astype(np.uint8)
    Path(path).write_bytes(header + quantized.tobytes())


def downscale_box(image: GrayImage, factor: int) -> GrayImage:
    """Box-average downscale by an integer factor.

    Output dimensions are ceil(input/factor); blocks on the right and bottom
    edges may be smaller than factor x factor and average only the pixels
    they actually cover.
    """
    if factor < 1:
        raise ValueError(f"factor must be a positive integer, got {factor}")
    pixels = image.pixels
    h, w = pixels.shape
    row_starts = np.arange(0, h, factor)
    col_starts = np.arange(0, w, factor)
    sums = np.add.reduceat(np.add.reduceat(pixels, row_starts, axis=0), col_starts, axis=1)
    row_counts = np.diff(np.append(row_starts, h))
    col_counts = np.diff(np.append(col_starts, w))
    return GrayImage(sums / np.outer(row_counts, col_counts))


def binarize(image: GrayImage, threshold: float) -> GrayImage:
    """Map intensities at or above the threshold to 1.0, the rest to 0.0."""
    return GrayImage((image.pixels >= threshold).astype(float))


def flatten(image: GrayImage) -> np.ndarray:
    """Row-major feature vector of the image."""
    return image.pixels.ravel().copy()


@dataclass(frozen=True)
class SynthConfig:
    """Parameters of the synthetic fruit-surface generator.

    Normal images are a bright disk with radial falloff over a dark
    background plus Gaussian noise. Anomalies add a short low-intensity line
    near the disk center (about 3% of the image area at the defaults). A
    diffuse dark blotch lands on a configurable fraction of BOTH classes as
    a confounder the detector should learn to ignore.
    """

    width: int = 64
    height: int = 64
    disk_radius_frac: float = 0.42
    disk_brightness: float = 0.85
    background: float = 0.08
    noise_sigma: float = 0.03
    crack_length: int = 20
    crack_width: int = 6
    crack_contrast: float = 0.35
    blotch_fraction: float = 0.3
    blotch_radius_frac: float = 0.12
    blotch_contrast: float = 0.15
    normal_count: int = 33
    anomaly_count: int = 33

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "SynthConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown generator option(s): {sorted(unknown)}")
        return cls(**d)


@dataclass
class LabeledDataset:
    """Images with +-1 labels (+1 = anomaly) and a provenance record."""

    samples: list[tuple[GrayImage, int]]
    provenance: dict | str

    def __len__(self) -> int:
        return len(self.samples)

    def images(self) -> list[GrayImage]:
        return [img for img, _ in self.samples]

    def labels(self) -> np.ndarray:
        return np.array([label for _, label in self.samples], dtype=int)


def _render(config: SynthConfig, rng: np.random.Generator, cracked: bool) -> GrayImage:
    w, h = config.width, config.height
    ys, xs = np.mgrid[0:h, 0:w].astype(float)
    cx = w / 2.0 + rng.uniform(-2.0, 2.0)
    cy = h / 2.0 + rng.uniform(-2.0, 2.0)
    radius = config.disk_radius_frac * min(w, h)
    r2 = ((xs - cx) ** 2 + (ys - cy) ** 2) / radius**2
    img = config.background + (config.disk_brightness - config.background) * np.clip(1.0 - r2, 0.0, 1.0)

    if rng.random() < config.blotch_fraction:
        angle = rng.uniform(0.0, 2.0 * math.pi)
        dist = rng.uniform(0.0, 0.5 * radius)
        bx, by = cx + dist * math.cos(angle), cy + dist * math.sin(angle)
        sigma = config.blotch_radius_frac * min(w, h)
        img -= config.blotch_contrast * np.exp(-((xs - bx) ** 2 + (ys - by) ** 2) / (2.0 * sigma**2))

    if cracked:
        angle = rng.uniform(0.0, math.pi)
        off_angle = rng.uniform(0.0, 2.0 * math.pi)
        off_dist = rng.uniform(0.0, 0.15 * radius)
        mx, my = cx + off_dist * math.cos(off_angle), cy + off_dist * math.sin(off_angle)
        half = config.crack_length / 2.0
        dx, dy = math.cos(angle), math.sin(angle)
        # distance from every pixel to the segment through (mx, my)
        px, py = xs - mx, ys - my
        t = np.clip(px * dx + py * dy, -half, half)
        seg_dist = np.hypot(px - t * dx, py - t * dy)
        img = np.where(seg_dist <= config.crack_width / 2.0, img - config.crack_contrast, img)

    img = img + rng.normal(0.0, config.noise_sigma, size=img.shape)
    return GrayImage(np.clip(img, 0.0, 1.0))


def synth_generate(config: SynthConfig, seed: int) -> LabeledDataset:
    """Generate the configured counts of normal and anomalous images.

    Each image draws from its own generator keyed by (seed, class, index),
    so the output is identical for a given config and seed regardless of
    generation order.
    """
    if config.normal_count < 1 or config.anomaly_count < 1:
        raise ValueError("normal_count and anomaly_count must be positive")
    if config.width < 8 or config.height < 8:
        raise ValueError("images smaller than 8x8 are not supported")
    samples: list[tuple[GrayImage, int]] = []
    for class_bit, count, label in (
        (0, config.normal_count, NORMAL_LABEL),
        (1, config.anomaly_count, ANOMALY_LABEL),
    ):
        for index in range(count):
            rng = rng_from_key(seed, class_bit, index)
            samples.append((_render(config, rng, cracked=label == ANOMALY_LABEL), label))
    return LabeledDataset(samples, {"generator": config.to_dict(), "seed": int(seed)})


def stratified_split(
    dataset: LabeledDataset, train_per_class: int, test_per_class: int, seed: int
) -> tuple[LabeledDataset, LabeledDataset]:
    """Split into disjoint train and test sets with exact per-class counts.

    Selection permutes each class independently with a generator keyed by
    (seed, class), then restores the original sample order within each side.
    """
    if train_per_class < 1 or test_per_class < 0:
        raise ValueError("train_per_class must be >= 1 and test_per_class >= 0")
    labels = dataset.labels()
    train_idx: list[int] = []
    test_idx: list[int] = []
    for class_bit, label in ((0, NORMAL_LABEL), (1, ANOMALY_LABEL)):
        members = np.flatnonzero(labels == label)
        needed = train_per_class + test_per_class
        if members.size < needed:
            raise ValueError(
                f"class {label:+d} has {members.size} samples but the split needs {needed}"
            )
        perm = rng_from_key(seed, class_bit).permutation(members.size)
        train_idx += sorted(int(members[i]) for i in perm[:train_per_class])
        test_idx += sorted(int(members[i]) for i in perm[train_per_class:needed])
    train = LabeledDataset([dataset.samples[i] for i in sorted(train_idx)], dataset.provenance)
    test = LabeledDataset([dataset.samples[i] for i in sorted(test_idx)], dataset.provenance)
    return train, test


def save_dataset(dataset: LabeledDataset, root: str | Path) -> None:
    """Write normal/ and anomaly/ PGM folders plus manifest.json."""
    root = Path(root)
    for sub in ("normal", "anomaly"):
        (root / sub).mkdir(parents=True, exist_ok=True)
    counters = {NORMAL_LABEL: 0, ANOMALY_LABEL: 0}
    for image, label in dataset.samples:
        sub = "normal" if label == NORMAL_LABEL else "anomaly"
        save_pgm(image, root / sub / f"img_{counters[label]:04d}.pgm")
        counters[label] += 1
    if isinstance(dataset.provenance, dict):
        manifest = json.dumps(dataset.provenance, indent=2, sort_keys=True)
        (root / "manifest.json").write_text(manifest + "\n")


def load_dataset(root: str | Path) -> LabeledDataset:
    """Read a normal/ + anomaly/ directory written by save_dataset."""
    root = Path(root)
    samples: list[tuple[GrayImage, int]] = []
    found = False
    for sub, label in (("normal", NORMAL_LABEL), ("anomaly", ANOMALY_LABEL)):
        folder = root / sub
        if not folder.is_dir():
            continue
        found = True
        for path in sorted(folder.glob("*.pgm")):
            samples.append((load_pgm(path), label))
    if not found:
        raise ValueError(f"{root} has neither a normal/ nor an anomaly/ subfolder")
    if not samples:
        raise ValueError(f"{root} contains no .pgm files")
    provenance: dict | str = str(root)
    manifest = root / "manifest.json"
    if manifest.is_file():
        try:
            provenance = json.loads(manifest.read_text())
        except json.JSONDecodeError as exc:
            raise ValueError(f"{manifest} is not valid JSON: {exc}") from exc
    return LabeledDataset(samples, provenance)
