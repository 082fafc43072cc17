"""Decompose-then-featurize over whole datasets.

A :class:`PipelineConfig` picks the component (original ``f``, cartoon
``u`` or texture ``v``), the decomposer that produces ``u``/``v`` and the
Gabor bank. :func:`featurize_sweep` evaluates many iteration counts in one
pass per image, which is what the benchmark grid uses.
"""

from __future__ import annotations

import csv
import enum
import json
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, is_dataclass
from functools import partial
from typing import Iterable

import numpy as np

from .classify import FeatureTable
from .datasets import Dataset
from .diffusion import DiffusionParams, diffuse_series
from .gabor import BankParams, FilterBank, build_filter_bank, extract_features
from .operators import OperatorKind, operator_series


class Component(str, enum.Enum):
    ORIGINAL = "f"
    CARTOON = "u"
    TEXTURE = "v"


@dataclass(frozen=True)
class PeronaMalik:
    params: DiffusionParams = DiffusionParams()

    @property
    def name(self) -> str:
        return "perona_malik"

    @property
    def iterations(self) -> int:
        return self.params.iterations

    t_invariant = False

    def with_iterations(self, t: int) -> "PeronaMalik":
        return PeronaMalik(self.params.with_iterations(t))

    def series(self, img, t_values):
        for t, u in diffuse_series(img, self.params, t_values):
            yield t, u, img - u


@dataclass(frozen=True)
class OperatorDecomposer:
    kind: OperatorKind = OperatorKind.gaussian()
    iterations: int = 0

    @property
    def name(self) -> str:
        return self.kind.name

    @property
    def t_invariant(self) -> bool:
        return self.kind.is_highpass

    def with_iterations(self, t: int) -> "OperatorDecomposer":
        return OperatorDecomposer(self.kind, t)

    def series(self, img, t_values):
        return operator_series(img, self.kind, t_values)


Decomposer = PeronaMalik | OperatorDecomposer


@dataclass(frozen=True)
class PipelineConfig:
    component: Component = Component.TEXTURE
    decomposer: Decomposer = field(default_factory=PeronaMalik)
    bank: BankParams = BankParams()

    def __post_init__(self):
        object.__setattr__(self, "component", Component(self.component))


def component_image(img: np.ndarray, cfg: PipelineConfig) -> np.ndarray:
    if cfg.component is Component.ORIGINAL:
        return img
    ((_, u, v),) = cfg.decomposer.series(img, [cfg.decomposer.iterations])
    return u if cfg.component is Component.CARTOON else v


def _featurize_one(img, cfg: PipelineConfig, bank: FilterBank) -> np.ndarray:
    return extract_features(component_image(img, cfg), bank, source_tag=cfg.component.value).energies


def _map(fn, items, workers: int):
    if workers <= 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        # map() yields in submission order regardless of completion order
        return list(pool.map(fn, items, chunksize=max(1, len(items) // (4 * workers))))


def featurize_dataset(ds: Dataset, cfg: PipelineConfig, bank: FilterBank | None = None, workers: int = 1) -> FeatureTable:
    """One Gabor energy row per sample, in dataset order."""
    ds.check()
    bank = bank or build_filter_bank(cfg.bank)
    rows = _map(partial(_featurize_one, cfg=cfg, bank=bank), [s.image for s in ds.samples], workers)
    return FeatureTable(ds.sample_ids, ds.labels, np.array(rows), cfg.component.value)


def _sweep_one(img, decomposer: Decomposer, t_values: list[int], components: list[Component], bank: FilterBank):
    out = {}
    if Component.ORIGINAL in components:
        out[Component.ORIGINAL, None] = extract_features(img, bank, source_tag="f").energies
    if Component.CARTOON in components or Component.TEXTURE in components:
        cached = {}
        for t, u, v in decomposer.series(img, t_values):
            if not (decomposer.t_invariant and cached):
                if Component.CARTOON in components:
                    cached[Component.CARTOON] = extract_features(u, bank, source_tag="u").energies
                if Component.TEXTURE in components:
                    cached[Component.TEXTURE] = extract_features(v, bank, source_tag="v").energies
            for comp, energies in cached.items():
                out[comp, t] = energies
    return out


def featurize_sweep(
    ds: Dataset,
    decomposer: Decomposer,
    t_values: Iterable[int],
    components: Iterable[Component | str] = tuple(Component),
    bank: FilterBank | None = None,
    workers: int = 1,
) -> dict[tuple[Component, int | None], FeatureTable]:
    """Feature tables for every (component, t) in one decomposition pass per image.

    The original component does not depend on t and is keyed ``(f, None)``.
    Each table equals what :func:`featurize_dataset` returns for the same
    configuration.
    """
    ds.check()
    bank = bank or build_filter_bank()
    t_values = sorted(set(int(t) for t in t_values))
    components = [Component(c) for c in components]
    fn = partial(_sweep_one, decomposer=decomposer, t_values=t_values, components=components, bank=bank)
    per_sample = _map(fn, [s.image for s in ds.samples], workers)
    keys = per_sample[0].keys()
    return {
        key: FeatureTable(ds.sample_ids, ds.labels, np.array([row[key] for row in per_sample]), key[0].value)
        for key in keys
    }


# -- persistence -------------------------------------------------------------


def feature_columns(bank_params: BankParams) -> list[str]:
    return [f"E{m}{n}" for m in range(1, bank_params.scales + 1) for n in range(1, bank_params.orientations + 1)]


def write_features_csv(table: FeatureTable, path, bank_params: BankParams = BankParams()) -> None:
    """Rows ``sample_id,label,source_tag,E11,...``; floats as shortest round-trip repr."""
    cols = feature_columns(bank_params)
    if table.features.shape[1] != len(cols):
        raise ValueError(f"table has {table.features.shape[1]} features, bank implies {len(cols)}")
    tmp = f"{path}.tmp{os.getpid()}"
    with open(tmp, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["sample_id", "label", "source_tag"] + cols)
        for sid, lab, row in zip(table.sample_ids, table.labels, table.features):
            w.writerow([sid, lab, table.source_tag] + [repr(float(x)) for x in row])
    os.replace(tmp, path)


def read_features_csv(path) -> FeatureTable:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        next(reader)
        ids, labels, tags, rows = [], [], set(), []
        for rec in reader:
            ids.append(rec[0])
            labels.append(rec[1])
            tags.add(rec[2])
            rows.append([float(x) for x in rec[3:]])
    tag = tags.pop() if len(tags) == 1 else "mixed"
    return FeatureTable(ids, labels, np.array(rows).reshape(len(rows), -1), tag)


def _jsonable(obj):
    if is_dataclass(obj) and not isinstance(obj, type):
        return {k: _jsonable(v) for k, v in asdict(obj).items()}
    if isinstance(obj, enum.Enum):
        return obj.value
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return obj


def write_run_manifest(path, config, seed: int | None = None, **extra) -> None:
    """JSON provenance record: config echo, seed and wall-clock timestamps."""
    record = {
        "config": _jsonable(config),
        "seed": seed,
        "created_unix": time.time(),
        "created": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
        **{k: _jsonable(v) for k, v in extra.items()},
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(record, fh, indent=2, sort_keys=True, default=str)
        fh.write("\n")
