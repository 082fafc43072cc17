"""Command-line front end: decompose, features, benchmark, synth, info.

Exit codes: 0 success, 1 validation error, 2 I/O error, 3 partial failure
(some benchmark cells failed; the rest were still written).
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import logging
import os
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import imgcore
from .classify import CvConfig, cross_validate
from .datasets import Dataset, SynthSpec, ingest, read_manifest, synth_dataset, write_manifest, Manifest, ManifestEntry
from .diffusion import ConductionKind, DiffusionParams, diffuse_series
from .gabor import BankParams, build_filter_bank
from .operators import OperatorKind
from .pipeline import (
    Component,
    OperatorDecomposer,
    PeronaMalik,
    PipelineConfig,
    featurize_dataset,
    featurize_sweep,
    write_features_csv,
    write_run_manifest,
)

log = logging.getLogger("adtex")

EXIT_OK, EXIT_VALIDATION, EXIT_IO, EXIT_PARTIAL = 0, 1, 2, 3
DECOMPOSER_NAMES = ("perona_malik", "gaussian", "laplacian", "log")


class PartialFailure(Exception):
    pass


# -- configuration ---------------------------------------------------------


def parse_int_list(text: str) -> list[int]:
    """``"3,5,7"`` or an inclusive range ``"10:200:10"`` (mixable with commas)."""
    out = []
    for part in str(text).split(","):
        part = part.strip()
        if not part:
            continue
        if ":" in part:
            bits = [int(b) for b in part.split(":")]
            start, stop, step = bits if len(bits) == 3 else (bits[0], bits[1], 1)
            if step < 1:
                raise ValueError(f"range step must be positive in {part!r}")
            out.extend(range(start, stop + 1, step))
        else:
            out.append(int(part))
    return out


def _parse_bool(text: str) -> bool:
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _str_list(text: str) -> list[str]:
    return [p.strip() for p in str(text).split(",") if p.strip()]


@dataclass
class BenchmarkConfig:
    """Every key accepted in a benchmark config file or via ``--set``."""

    manifest: str = ""  # empty = use the synthetic generator
    root: str = ""  # image root for the manifest; defaults to its directory
    out_dir: str = "benchmark_out"
    t_values: list[int] = field(default_factory=lambda: list(range(10, 201, 10)))
    components: list[str] = field(default_factory=lambda: ["f", "u", "v"])
    k_nn_values: list[int] = field(default_factory=lambda: [3, 5, 7])
    decomposers: list[str] = field(default_factory=lambda: list(DECOMPOSER_NAMES))
    select_k: int = 5  # k used to pick the best t for the table summaries
    lam: float = 0.25
    kappa: float = 15.0
    kind: str = "exponential"
    gaussian_sigma: float = 1.0
    log_sigma: float = 2.0
    scales: int = 5
    orientations: int = 8
    low_freq: float = 0.05
    high_freq: float = 0.4
    folds: int = 10
    seed: int = 0
    normalize: bool = True
    workers: int = 0  # 0 = all available cores
    synth_classes: int = 5
    synth_samples_per_class: int = 20
    synth_size: int = 128
    synth_seed: int = 0
    synth_carrier_amplitude: float = 10.0
    synth_ramp_amplitude: float = 120.0
    synth_shadow_edges: int = 2
    synth_shadow_amplitude: float = 60.0
    synth_noise_sigma: float = 3.0

    def validate(self) -> None:
        if not self.t_values or not self.components or not self.k_nn_values or not self.decomposers:
            raise ValueError("t_values, components, k_nn_values and decomposers must be non-empty")
        if min(self.t_values) < 0:
            raise ValueError("t values must be >= 0")
        for c in self.components:
            Component(c)
        for d in self.decomposers:
            if d not in DECOMPOSER_NAMES:
                raise ValueError(f"unknown decomposer {d!r}; choose from {', '.join(DECOMPOSER_NAMES)}")
        self.diffusion_params()
        self.bank_params()
        self.operator("gaussian")
        self.operator("log")
        for k in self.k_nn_values:
            CvConfig(self.folds, k, self.seed, self.normalize)

    def set(self, key: str, value: str) -> None:
        key = key.strip().replace("-", "_")
        fields = {f.name: f for f in dataclasses.fields(self)}
        if key not in fields:
            raise ValueError(f"unknown config key {key!r}")
        current = getattr(self, key)
        if isinstance(current, bool):
            parsed = _parse_bool(value)
        elif isinstance(current, int):
            parsed = int(value)
        elif isinstance(current, float):
            parsed = float(value)
        elif isinstance(current, list):
            parsed = parse_int_list(value) if key in ("t_values", "k_nn_values") else _str_list(value)
        else:
            parsed = str(value).strip()
        setattr(self, key, parsed)

    def load(self, path) -> None:
        """Read ``key = value`` lines; ``#`` starts a comment."""
        for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key = value")
            key, value = line.split("=", 1)
            self.set(key, value)

    def diffusion_params(self) -> DiffusionParams:
        return DiffusionParams(self.lam, self.kappa, ConductionKind(self.kind))

    def bank_params(self) -> BankParams:
        return BankParams(self.scales, self.orientations, self.low_freq, self.high_freq)

    def operator(self, name: str) -> OperatorKind:
        if name == "gaussian":
            return OperatorKind.gaussian(self.gaussian_sigma)
        if name == "log":
            return OperatorKind.log(self.log_sigma)
        return OperatorKind.laplacian()

    def decomposer(self, name: str):
        if name == "perona_malik":
            return PeronaMalik(self.diffusion_params())
        return OperatorDecomposer(self.operator(name))

    def synth_spec(self) -> SynthSpec:
        return SynthSpec(
            classes=self.synth_classes,
            samples_per_class=self.synth_samples_per_class,
            size=self.synth_size,
            carrier_amplitude=self.synth_carrier_amplitude,
            ramp_amplitude=self.synth_ramp_amplitude,
            shadow_edges=self.synth_shadow_edges,
            shadow_amplitude=self.synth_shadow_amplitude,
            noise_sigma=self.synth_noise_sigma,
            seed=self.synth_seed,
        )

    def load_dataset(self) -> Dataset:
        if not self.manifest:
            return synth_dataset(self.synth_spec())
        root = self.root or str(Path(self.manifest).parent)
        return ingest(read_manifest(self.manifest), root)

    def n_workers(self) -> int:
        return self.workers if self.workers > 0 else (os.cpu_count() or 1)


# -- benchmark ---------------------------------------------------------------


def _fmt(x) -> str:
    if x is None or (isinstance(x, float) and np.isnan(x)):
        return ""
    return repr(float(x))


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    tmp = path.with_name(f".{path.name}.tmp{os.getpid()}")
    tmp.write_bytes(buf.getvalue().encode("utf-8"))
    os.replace(tmp, path)


def _best_t(results: dict, decomposer: str, t_values: list[int], k: int, component: str = "v") -> int | None:
    """Smallest t with the highest mean accuracy for ``component`` at ``k``."""
    scored = [(results[decomposer, t, component, k][0], -t) for t in t_values if (decomposer, t, component, k) in results]
    if not scored:
        return None
    return -max(scored)[1]


def run_benchmark(cfg: BenchmarkConfig, ds: Dataset | None = None) -> tuple[dict, list[str]]:
    """Run every grid cell and write the three report CSVs into ``cfg.out_dir``.

    Returns ``(results, failures)`` with ``results[(decomposer, t, component,
    k)] = (mean, std)``. Cells that fail are listed and skipped; whatever
    completed is still written.
    """
    cfg.validate()
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    started = time.time()
    ds = ds if ds is not None else cfg.load_dataset()
    bank = build_filter_bank(cfg.bank_params())
    t_values = sorted(set(cfg.t_values))
    components = [Component(c).value for c in cfg.components]
    decomp_components = [c for c in components if c != "f"]

    results: dict[tuple, tuple[float, float]] = {}
    failures: list[str] = []

    def evaluate(table, key_prefix, t_list, comp):
        for k in cfg.k_nn_values:
            for t in t_list:
                try:
                    rep = cross_validate(table, CvConfig(cfg.folds, k, cfg.seed, cfg.normalize))
                except Exception as exc:
                    failures.append(f"{key_prefix} t={t} component={comp} k={k}: {exc}")
                    continue
                results[key_prefix, t, comp, k] = (rep.mean, rep.std)

    f_scores = {}
    if "f" in components:
        log.info("featurizing original component")
        try:
            f_table = featurize_dataset(ds, PipelineConfig(Component.ORIGINAL, bank=cfg.bank_params()), bank, cfg.n_workers())
            for k in cfg.k_nn_values:
                rep = cross_validate(f_table, CvConfig(cfg.folds, k, cfg.seed, cfg.normalize))
                f_scores[k] = (rep.mean, rep.std)
        except Exception as exc:
            failures.append(f"original component: {exc}")

    for name in cfg.decomposers:
        for k, score in f_scores.items():
            for t in t_values:
                results[name, t, "f", k] = score
        if not decomp_components:
            continue
        log.info("featurizing %s over %d t values", name, len(t_values))
        try:
            tables = featurize_sweep(ds, cfg.decomposer(name), t_values, decomp_components, bank, cfg.n_workers())
        except Exception as exc:
            failures.append(f"{name}: featurization failed: {exc}")
            continue
        for (comp, t), table in sorted(tables.items(), key=lambda kv: (kv[0][0].value, kv[0][1])):
            evaluate(table, name, [t], comp.value)

    _write_reports(out, cfg, results, t_values, components)
    write_run_manifest(
        out / "run_manifest.json",
        cfg,
        seed=cfg.seed,
        dataset={"samples": len(ds), "classes": len(set(ds.labels)), "shape": list(ds.shape)},
        elapsed_seconds=round(time.time() - started, 3),
        failures=failures,
    )
    failure_file = out / "failures.txt"
    if failures:
        failure_file.write_text("\n".join(failures) + "\n", encoding="utf-8")
    elif failure_file.exists():
        failure_file.unlink()
    return results, failures


def _k_columns(ks: list[int]) -> list[str]:
    return [c for k in ks for c in (f"mean_k{k}", f"std_k{k}")]


def _write_reports(out: Path, cfg: BenchmarkConfig, results: dict, t_values: list[int], components: list[str]) -> None:
    ks = cfg.k_nn_values
    rows = []
    for name in cfg.decomposers:
        for t in t_values:
            for comp in components:
                for k in ks:
                    if (name, t, comp, k) in results:
                        mean, std = results[name, t, comp, k]
                        rows.append([name, t, comp, k, _fmt(mean), _fmt(std)])
    _write_csv(out / "accuracy_vs_t.csv", ["decomposer", "t", "component", "k_nn", "mean", "std"], rows)

    select_k = cfg.select_k if cfg.select_k in ks else ks[0]

    # f/u/v for the diffusion decomposer at its best texture t
    comp_rows = []
    pm = "perona_malik" if "perona_malik" in cfg.decomposers else cfg.decomposers[0]
    best = _best_t(results, pm, t_values, select_k, "v" if "v" in components else components[-1])
    if best is None:
        best = t_values[0]
    for comp in components:
        cells = []
        for k in ks:
            mean, std = results.get((pm, best, comp, k), (None, None))
            cells += [_fmt(mean), _fmt(std)]
        comp_rows.append([comp, best, *cells])
    if "f" in components and "v" in components:
        cells = []
        for k in ks:
            fv = results.get((pm, best, "f", k))
            vv = results.get((pm, best, "v", k))
            cells += [_fmt(vv[0] - fv[0]) if fv and vv else "", ""]
        comp_rows.append(["v-f", best, *cells])
    _write_csv(out / "components.csv", ["component", "t", *_k_columns(ks)], comp_rows)

    # every decomposer's texture residual at its own best t
    op_rows = []
    if "f" in components:
        name0 = cfg.decomposers[0]
        cells = []
        for k in ks:
            mean, std = results.get((name0, t_values[0], "f", k), (None, None))
            cells += [_fmt(mean), _fmt(std)]
        op_rows.append(["original", "", *cells])
    if "v" in components:
        for name in cfg.decomposers:
            bt = _best_t(results, name, t_values, select_k)
            cells = []
            for k in ks:
                mean, std = results.get((name, bt, "v", k), (None, None))
                cells += [_fmt(mean), _fmt(std)]
            op_rows.append([name, "" if bt is None else bt, *cells])
    _write_csv(out / "operators.csv", ["operator", "t", *_k_columns(ks)], op_rows)


# -- subcommands -----------------------------------------------------------


def _diffusion_from_args(args) -> DiffusionParams:
    return DiffusionParams(args.lam, args.kappa, ConductionKind(args.kind))


def cmd_decompose(args) -> int:
    img = imgcore.load_image(args.input)
    params = _diffusion_from_args(args)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stem = Path(args.input).stem
    written = []
    for t, u in diffuse_series(img, params, args.t):
        v = img - u
        base = out / f"{stem}_t{t:04d}"
        imgcore.save_image(u, f"{base}_u.pgm")
        imgcore.save_float(v, f"{base}_v.atxf")
        imgcore.save_image(v + 128.0, f"{base}_v.pgm")
        written += [f"{base}_u.pgm", f"{base}_v.atxf", f"{base}_v.pgm"]
    for p in written:
        print(p)
    return EXIT_OK


def _config_from_args(args) -> BenchmarkConfig:
    cfg = BenchmarkConfig()
    if getattr(args, "config", None):
        cfg.load(args.config)
    for item in getattr(args, "set", None) or []:
        if "=" not in item:
            raise ValueError(f"--set expects KEY=VALUE, got {item!r}")
        cfg.set(*item.split("=", 1))
    if getattr(args, "manifest", None):
        cfg.manifest = args.manifest
    if getattr(args, "root", None):
        cfg.root = args.root
    if getattr(args, "workers", None) is not None:
        cfg.workers = args.workers
    return cfg


def cmd_features(args) -> int:
    cfg = _config_from_args(args)
    ds = cfg.load_dataset()
    decomposer = cfg.decomposer(args.decomposer).with_iterations(args.t)
    pcfg = PipelineConfig(Component(args.component), decomposer, cfg.bank_params())
    table = featurize_dataset(ds, pcfg, workers=cfg.n_workers())
    write_features_csv(table, args.out, cfg.bank_params())
    write_run_manifest(f"{args.out}.json", pcfg, seed=cfg.synth_seed if not cfg.manifest else None,
                       dataset_config=cfg)
    print(args.out)
    return EXIT_OK


def cmd_benchmark(args) -> int:
    cfg = _config_from_args(args)
    if args.out_dir:
        cfg.out_dir = args.out_dir
    results, failures = run_benchmark(cfg)
    print(f"wrote reports to {cfg.out_dir} ({len(results)} cells)")
    if failures:
        for f in failures:
            print(f"FAILED {f}", file=sys.stderr)
        return EXIT_PARTIAL
    return EXIT_OK


def cmd_synth(args) -> int:
    spec = SynthSpec(
        classes=args.classes,
        samples_per_class=args.samples_per_class,
        size=args.size,
        ramp_amplitude=args.ramp_amplitude,
        noise_sigma=args.noise_sigma,
        seed=args.seed,
    )
    ds = synth_dataset(spec)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    entries = []
    for s in ds.samples:
        rel = f"{s.class_name}/{s.sample_id.split('#')[-1]}.pgm"
        (out / s.class_name).mkdir(exist_ok=True)
        imgcore.save_image(s.image, out / rel)
        entries.append(ManifestEntry(s.class_name, rel, None))
    write_manifest(Manifest(entries), out / "manifest.txt")
    print(out / "manifest.txt")
    return EXIT_OK


def cmd_info(args) -> int:
    path = Path(args.path)
    if not path.is_file():
        raise FileNotFoundError(f"{path}: no such file")
    head = path.read_bytes()[:8]
    if head.startswith(imgcore.FLOAT_MAGIC[:5]):
        img = imgcore.load_float(path)
        kind = "ATXF1 float image"
    elif head[:2] == b"P5" or head == imgcore.PNG_SIGNATURE:
        img = imgcore.load_image(path)
        kind = "raster image"
    else:
        m = read_manifest(path)
        classes = sorted({e.class_name for e in m.entries})
        tiles = sum(1 if e.grid is None else e.grid[0] * e.grid[1] for e in m.entries)
        print(f"manifest {m.format_version}: {len(m.entries)} sources, {len(classes)} classes, {tiles} samples")
        return EXIT_OK
    h, w = img.shape
    print(f"{kind}: {w}x{h}, min {img.min():g}, max {img.max():g}, mean {img.mean():g}")
    return EXIT_OK


CONFIG_HELP = """\
benchmark config file: one 'key = value' per line, '#' comments. Keys:
  manifest, root, out_dir, t_values (e.g. 10:200:10), components (f,u,v),
  k_nn_values (3,5,7), decomposers (perona_malik,gaussian,laplacian,log),
  select_k, lam, kappa, kind, gaussian_sigma, log_sigma, scales, orientations,
  low_freq, high_freq, folds, seed, normalize, workers, synth_classes,
  synth_samples_per_class, synth_size, synth_seed, synth_carrier_amplitude,
  synth_ramp_amplitude, synth_shadow_edges, synth_shadow_amplitude,
  synth_noise_sigma. An empty manifest selects the synthetic dataset.

report files (columns in order):
  accuracy_vs_t.csv  decomposer,t,component,k_nn,mean,std
  components.csv     component,t,mean_k<k>,std_k<k>,...   rows f,u,v,v-f at
                     the best texture t of perona_malik (chosen at select_k)
  operators.csv      operator,t,mean_k<k>,std_k<k>,...    original row, then
                     each decomposer's texture residual at its best t
  run_manifest.json  config echo, seed, timestamps; failures.txt on errors
"""


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="adtex", description="Anisotropic-diffusion texture decomposition and Gabor benchmarks.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    d = sub.add_parser("decompose", help="write cartoon/texture images for one input")
    d.add_argument("input")
    d.add_argument("-t", type=int, nargs="+", default=[10], help="iteration counts")
    d.add_argument("--lam", type=float, default=0.25)
    d.add_argument("--kappa", type=float, default=15.0)
    d.add_argument("--kind", choices=[k.value for k in ConductionKind], default="exponential")
    d.add_argument("--out-dir", default=".")
    d.set_defaults(func=cmd_decompose)

    def dataset_args(sp):
        sp.add_argument("--config", help="key = value config file")
        sp.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config key")
        sp.add_argument("--manifest", help="dataset manifest; omit for the synthetic set")
        sp.add_argument("--root", help="image root (default: manifest directory)")
        sp.add_argument("--workers", type=int, help="worker processes (default: all cores)")

    f = sub.add_parser("features", help="Gabor energy CSV for one component")
    dataset_args(f)
    f.add_argument("--component", choices=[c.value for c in Component], default="v")
    f.add_argument("--decomposer", choices=DECOMPOSER_NAMES, default="perona_malik")
    f.add_argument("-t", type=int, default=40)
    f.add_argument("--out", default="features.csv")
    f.set_defaults(func=cmd_features)

    b = sub.add_parser("benchmark", help="run the experiment grid", epilog=CONFIG_HELP,
                       formatter_class=argparse.RawDescriptionHelpFormatter)
    dataset_args(b)
    b.add_argument("--out-dir")
    b.set_defaults(func=cmd_benchmark)

    s = sub.add_parser("synth", help="write a synthetic texture dataset and manifest")
    s.add_argument("--out-dir", required=True)
    s.add_argument("--classes", type=int, default=5)
    s.add_argument("--samples-per-class", type=int, default=10)
    s.add_argument("--size", type=int, default=128)
    s.add_argument("--ramp-amplitude", type=float, default=120.0)
    s.add_argument("--noise-sigma", type=float, default=3.0)
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_synth)

    i = sub.add_parser("info", help="describe an image, float sidecar or manifest")
    i.add_argument("path")
    i.set_defaults(func=cmd_info)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
