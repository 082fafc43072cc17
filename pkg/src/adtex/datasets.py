"""Labelled image datasets: manifest files, tile ingestion and synthetic textures.

Manifest format (UTF-8, line oriented)::

    format v1
    # class_name <TAB> relative_path <TAB> ROWSxCOLS | none
    D001	brodatz/D1.pgm	3x3
    bark	leaves/bark_01.png	none

Blank lines and lines starting with ``#`` are ignored. A ``RxC`` grid cuts
the source into R rows and C columns of equal tiles (remainders dropped).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path, PurePosixPath

import numpy as np

from .imgcore import as_gray, load_image, split_tiles

MANIFEST_HEADER = "format v1"


class ManifestError(ValueError):
    pass


class EmptyDataset(ValueError):
    pass


class DimensionMismatch(ValueError):
    pass


class IngestError(OSError):
    """One or more manifest sources failed to load; ``failures`` maps path to reason."""

    def __init__(self, failures: dict[str, str]):
        self.failures = failures
        lines = "\n".join(f"  {p}: {msg}" for p, msg in failures.items())
        super().__init__(f"{len(failures)} source(s) failed to load:\n{lines}")


@dataclass(frozen=True)
class ManifestEntry:
    class_name: str
    path: str
    grid: tuple[int, int] | None = None  # (rows, cols)


@dataclass
class Manifest:
    entries: list[ManifestEntry]
    format_version: str = "v1"

    def __post_init__(self):
        seen = set()
        for e in self.entries:
            if not e.class_name.strip():
                raise ManifestError(f"empty class name for {e.path!r}")
            if e.path in seen:
                raise ManifestError(f"duplicate path {e.path!r}")
            seen.add(e.path)

    def to_text(self) -> str:
        lines = [MANIFEST_HEADER]
        for e in self.entries:
            grid = "none" if e.grid is None else f"{e.grid[0]}x{e.grid[1]}"
            lines.append(f"{e.class_name}\t{e.path}\t{grid}")
        return "\n".join(lines) + "\n"


def parse_grid(text: str) -> tuple[int, int] | None:
    text = text.strip().lower()
    if text == "none":
        return None
    try:
        rows, cols = (int(x) for x in text.split("x"))
    except ValueError:
        raise ManifestError(f"bad grid spec {text!r}, expected ROWSxCOLS or none") from None
    if rows < 1 or cols < 1:
        raise ManifestError(f"grid must be positive, got {text!r}")
    return rows, cols


def parse_manifest(text: str) -> Manifest:
    entries = []
    header_seen = False
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if not header_seen:
            parts = line.split()
            if len(parts) != 2 or parts[0] != "format":
                raise ManifestError(f"line {lineno}: expected '{MANIFEST_HEADER}' header")
            if parts[1] != "v1":
                raise ManifestError(f"line {lineno}: unsupported manifest version {parts[1]!r}")
            header_seen = True
            continue
        fields = raw.rstrip("\r\n").split("\t")
        if len(fields) != 3:
            raise ManifestError(f"line {lineno}: expected 3 tab-separated fields, got {len(fields)}")
        cls, path, grid = (f.strip() for f in fields)
        entries.append(ManifestEntry(cls, path, parse_grid(grid)))
    if not header_seen:
        raise ManifestError("manifest has no header line")
    return Manifest(entries)


def read_manifest(path) -> Manifest:
    return parse_manifest(Path(path).read_text(encoding="utf-8"))


def write_manifest(manifest: Manifest, path) -> None:
    Path(path).write_text(manifest.to_text(), encoding="utf-8")


@dataclass(frozen=True, eq=False)
class Sample:
    image: np.ndarray
    class_name: str
    sample_id: str


@dataclass(eq=False)
class Dataset:
    samples: list[Sample]
    provenance: Manifest | None = None
    description: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.samples)

    @property
    def labels(self) -> list[str]:
        return [s.class_name for s in self.samples]

    @property
    def sample_ids(self) -> list[str]:
        return [s.sample_id for s in self.samples]

    @property
    def shape(self) -> tuple[int, int]:
        return self.samples[0].image.shape

    def check(self) -> None:
        if not self.samples:
            raise EmptyDataset("dataset has no samples")
        shape = self.shape
        for s in self.samples:
            if s.image.shape != shape:
                raise DimensionMismatch(
                    f"{s.sample_id} has shape {s.image.shape}, expected {shape}"
                )


def _resolve(root: Path, rel: str) -> Path:
    if PurePosixPath(rel).is_absolute() or ".." in PurePosixPath(rel).parts:
        raise ManifestError(f"path {rel!r} must be relative and stay under the root")
    return root / rel


def ingest(manifest: Manifest, root) -> Dataset:
    """Load and tile every manifest source, in manifest order.

    Sample ids are ``<class>/<stem>#<row>_<col>``; untiled sources get
    ``#0_0``. Load failures are collected and raised together.
    """
    root = Path(root)
    samples: list[Sample] = []
    failures: dict[str, str] = {}
    for e in manifest.entries:
        try:
            img = load_image(_resolve(root, e.path))
        except (OSError, ValueError) as exc:
            failures[e.path] = str(exc)
            continue
        stem = PurePosixPath(e.path).stem
        if e.grid is None:
            samples.append(Sample(img, e.class_name, f"{e.class_name}/{stem}#0_0"))
            continue
        rows, cols = e.grid
        h, w = img.shape
        try:
            tiles = split_tiles(img, w // cols, h // rows)
        except ValueError as exc:
            failures[e.path] = str(exc)
            continue
        for i, tile in enumerate(tiles):
            r, c = divmod(i, cols)
            samples.append(Sample(tile, e.class_name, f"{e.class_name}/{stem}#{r}_{c}"))
    if failures:
        raise IngestError(failures)
    ds = Dataset(samples, manifest)
    ds.check()
    return ds


# -- synthetic textures ------------------------------------------------------


@dataclass(frozen=True)
class SynthSpec:
    """Procedural stand-in for a texture benchmark.

    Each class is a sinusoidal carrier with its own frequency (cycles/pixel)
    and orientation (radians). Every sample draws a random contrast,
    illumination ramp, pixel noise and (unless ``random_phase`` is off)
    carrier phase; the ramp direction is uniform and its end-to-end height
    is uniform on ``[0, ramp_amplitude]``. ``shadow_edges`` adds that many
    random straight illumination steps (cast shadows), each of height
    uniform on ``[-shadow_amplitude, shadow_amplitude]``.
    """

    classes: int = 5
    samples_per_class: int = 10
    size: int = 128
    frequencies: tuple[float, ...] | None = None
    orientations: tuple[float, ...] | None = None
    carrier_amplitude: float = 10.0
    contrast_jitter: float = 0.3
    ramp_amplitude: float = 120.0
    shadow_edges: int = 2
    shadow_amplitude: float = 60.0
    noise_sigma: float = 3.0
    random_phase: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.classes < 1 or self.samples_per_class < 1 or self.size < 1:
            raise ValueError("classes, samples_per_class and size must be positive")
        for name in ("frequencies", "orientations"):
            vals = getattr(self, name)
            if vals is not None:
                object.__setattr__(self, name, tuple(float(v) for v in vals))
                if len(getattr(self, name)) != self.classes:
                    raise ValueError(f"{name} needs one value per class")
        if self.shadow_edges < 0:
            raise ValueError("shadow_edges must be >= 0")
        if min(self.carrier_amplitude, self.ramp_amplitude, self.shadow_amplitude, self.noise_sigma) < 0:
            raise ValueError("amplitudes and noise must be non-negative")
        if not 0 <= self.contrast_jitter < 1:
            raise ValueError("contrast_jitter must lie in [0, 1)")

    def carriers(self) -> list[tuple[float, float]]:
        """(frequency, orientation) per class.

        The defaults walk a 3-frequency by ``ceil(classes/3)``-orientation
        lattice so neighbouring classes differ in both.
        """
        freqs = self.frequencies
        thetas = self.orientations
        n_orient = max(1, math.ceil(self.classes / 3))
        if freqs is None:
            freqs = tuple((0.06, 0.12, 0.24)[c % 3] for c in range(self.classes))
        if thetas is None:
            thetas = tuple(math.pi * (c % n_orient) / n_orient for c in range(self.classes))
        return list(zip(freqs, thetas))


def synth_image(freq: float, theta: float, spec: SynthSpec, rng: np.random.Generator) -> np.ndarray:
    n = spec.size
    y, x = np.mgrid[0:n, 0:n].astype(np.float64)
    phase = rng.uniform(0, 2 * math.pi) if spec.random_phase else 0.0
    contrast = spec.carrier_amplitude * (1 + rng.uniform(-spec.contrast_jitter, spec.contrast_jitter))
    carrier = contrast * np.cos(2 * math.pi * freq * (x * math.cos(theta) + y * math.sin(theta)) + phase)

    ramp_dir = rng.uniform(0, 2 * math.pi)
    ramp_height = rng.uniform(0, spec.ramp_amplitude)
    proj = (x - n / 2) * math.cos(ramp_dir) + (y - n / 2) * math.sin(ramp_dir)
    illum = ramp_height * proj / max(n - 1, 1)
    for _ in range(spec.shadow_edges):
        angle = rng.uniform(0, 2 * math.pi)
        cx, cy = rng.uniform(0, n, size=2)
        step = rng.uniform(-spec.shadow_amplitude, spec.shadow_amplitude)
        illum = illum + step * (((x - cx) * math.cos(angle) + (y - cy) * math.sin(angle)) > 0)

    noise = rng.normal(0, spec.noise_sigma, size=(n, n)) if spec.noise_sigma > 0 else 0.0
    return np.clip(127.5 + carrier + illum + noise, 0.0, 255.0)


def synth_dataset(spec: SynthSpec) -> Dataset:
    rng = np.random.default_rng(spec.seed)
    samples = []
    for c, (freq, theta) in enumerate(spec.carriers()):
        name = f"c{c:02d}"
        for j in range(spec.samples_per_class):
            img = as_gray(synth_image(freq, theta, spec, rng))
            samples.append(Sample(img, name, f"{name}/synth#{j}"))
    return Dataset(samples, None, {"synth": spec})
