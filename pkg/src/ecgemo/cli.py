"""Batch command line: extract -> evaluate / ablation, plus a synthetic data emitter.

Exit codes: 0 success, 2 input error, 3 protocol (split) error, 4 internal error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import platform
import sys
from contextlib import contextmanager
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from . import __version__
from .dsp import EPOCH_SECONDS, recording_epochs
from .ensemble import ENSEMBLE_FACTORIES
from .errors import SplitError
from .evaluation import (
    DEFAULT_MODELS,
    FS_MODE_ALIASES,
    PROTOCOLS,
    make_split,
    run_ablation,
    run_experiment,
)
from .features import extract, feature_table, read_feature_csv, write_feature_csv
from .ingest import IngestSchema, load_directory, load_schema
from .models import REGISTRY
from .selection import STAGE2_K

EXIT_OK, EXIT_INPUT, EXIT_PROTOCOL, EXIT_INTERNAL = 0, 2, 3, 4

logger = logging.getLogger("ecgemo")


class InputError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    out: str
    data_dir: str | None = None
    schema: str | None = None
    features: str | None = None
    protocol: str = "personalized"
    fs: str = "hybrid"
    models: list[str] = field(default_factory=lambda: list(DEFAULT_MODELS))
    seed: int = 0
    epoch_seconds: float = EPOCH_SECONDS
    shuffle_within_group: bool = False
    kbest_k: int = STAGE2_K


def known_models() -> list[str]:
    return [*REGISTRY, *ENSEMBLE_FACTORIES]


def parse_models(text: str | None) -> list[str]:
    if not text:
        return list(DEFAULT_MODELS)
    names = [n.strip() for n in text.split(",") if n.strip()]
    unknown = [n for n in names if n not in known_models()]
    if unknown:
        raise InputError(f"unknown model names: {', '.join(unknown)}")
    return names


def sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(config: RunConfig, out: Path, inputs: list[Path], extra: dict | None = None) -> None:
    import scipy
    import sklearn

    manifest = {
        "config": asdict(config),
        "seed": config.seed,
        "library_version": __version__,
        "python": platform.python_version(),
        "dependencies": {"numpy": np.__version__, "scipy": scipy.__version__,
                         "scikit-learn": sklearn.__version__, "pandas": pd.__version__},
        "inputs": {str(p): sha256(p) for p in sorted(inputs)},
    }
    if extra:
        manifest.update(extra)
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")


@contextmanager
def output_lock(out: Path):
    out.mkdir(parents=True, exist_ok=True)
    lock = out / ".lock"
    try:
        fd = os.open(lock, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError:
        raise InputError(f"{out} is locked by another run (remove {lock} if stale)") from None
    try:
        os.write(fd, str(os.getpid()).encode())
        os.close(fd)
        yield out
    finally:
        lock.unlink(missing_ok=True)


def _schema(config: RunConfig) -> IngestSchema:
    return load_schema(config.schema) if config.schema else IngestSchema()


def cmd_extract(config: RunConfig) -> int:
    if not config.data_dir or not Path(config.data_dir).is_dir():
        raise InputError(f"data directory not found: {config.data_dir}")
    schema = _schema(config)
    recordings, skipped = load_directory(config.data_dir, schema)
    for name, reason in skipped:
        print(f"skipped {name}: {reason}", file=sys.stderr)
    if not recordings:
        raise InputError(f"no usable CSV files in {config.data_dir}")
    vectors = []
    for rec in recordings:
        vectors.extend(extract(ep) for ep in recording_epochs(rec, config.epoch_seconds))
    table = feature_table(vectors)
    out = Path(config.out)
    path = out / "features.csv"
    write_feature_csv(table, path)
    inputs = [Path(r.source) for r in recordings if r.source]
    if config.schema:
        inputs.append(Path(config.schema))
    write_manifest(config, out, inputs, {"stage": "extract"})
    print(f"files read: {len(recordings)}, skipped: {len(skipped)}, epochs: {len(table)} -> {path}")
    return EXIT_OK


def _load_features(config: RunConfig) -> tuple[pd.DataFrame, Path]:
    path = Path(config.features) if config.features else Path(config.out) / "features.csv"
    if not path.exists():
        if config.data_dir:
            cmd_extract(config)
        else:
            raise InputError(f"feature table not found: {path} (pass --features or --data-dir)")
    try:
        return read_feature_csv(path), path
    except ValueError as exc:
        raise InputError(str(exc)) from exc


def cmd_evaluate(config: RunConfig) -> int:
    table, feat_path = _load_features(config)
    out = Path(config.out)
    split = make_split(table, config.protocol, config.seed, config.shuffle_within_group)
    if config.protocol == "generalized":
        print("test subjects: " + ", ".join(split.test_subjects))
    report = run_experiment(table, config.protocol, config.fs, config.models, config.seed, split,
                            config.kbest_k)
    report.to_csv(out / "report.csv")
    report.to_json(out / "report.json")
    with open(out / "selection.json", "w", encoding="utf-8") as fh:
        json.dump(report.selection, fh, indent=2)
        fh.write("\n")
    write_manifest(config, out, [feat_path], {"stage": "evaluate", "n_train": report.n_train,
                                              "n_test": report.n_test})
    print(f"protocol={config.protocol} fs={report.fs_mode} train={report.n_train} test={report.n_test}")
    print(report.format())
    return EXIT_OK if any(r.ok for r in report.results) else EXIT_INTERNAL


def cmd_ablation(config: RunConfig) -> int:
    table, feat_path = _load_features(config)
    out = Path(config.out)
    grid, reports = run_ablation(table, config.protocol, config.models, config.seed, config.kbest_k,
                                 config.shuffle_within_group)
    for label, rep in reports.items():
        print(f"[{label}] train={rep.n_train} test={rep.n_test}")
        stem = label.lower().replace(" ", "_")
        rep.to_csv(out / f"report_{stem}.csv")
    grid.to_csv(out / "ablation.csv", index=False, float_format="%.2f", lineterminator="\n")
    first = next(iter(reports.values()))
    with open(out / "selection.json", "w", encoding="utf-8") as fh:
        json.dump({label: rep.selection for label, rep in reports.items()}, fh, indent=2)
        fh.write("\n")
    write_manifest(config, out, [feat_path], {"stage": "ablation", "n_train": first.n_train,
                                              "n_test": first.n_test})
    print(grid.to_string(index=False))
    return EXIT_OK


def cmd_synth(args) -> int:
    from .synth import SynthDatasetSpec, write_dataset_csvs

    spec = SynthDatasetSpec(n_subjects=args.subjects, epochs_per_group=args.epochs,
                            subject_bpm_std=args.subject_bpm_std,
                            subject_amplitude_std=args.subject_amplitude_std,
                            noise_std=args.noise, seed=args.seed)
    paths = write_dataset_csvs(spec, args.out)
    print(f"wrote {len(paths)} recordings to {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ecgemo", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--data-dir", help="directory of recording CSV files")
        p.add_argument("--schema", help="ingest schema (YAML/JSON)")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--epoch-seconds", type=float, default=EPOCH_SECONDS)

    p = sub.add_parser("extract", help="recordings -> features.csv")
    common(p)

    for name, help_ in (("evaluate", "train and score models"), ("ablation", "No FS / Hybrid / KBest grid")):
        p = sub.add_parser(name, help=help_)
        common(p)
        p.add_argument("--features", help="feature CSV (default: <out>/features.csv)")
        p.add_argument("--protocol", choices=PROTOCOLS, default="personalized")
        if name == "evaluate":
            p.add_argument("--fs", choices=("none", "kbest", "hybrid"), default="hybrid")
        p.add_argument("--models", help="comma-separated model names (default: all)")
        p.add_argument("--shuffle-within-group", action="store_true")
        p.add_argument("--kbest-k", type=int, default=STAGE2_K)

    p = sub.add_parser("synth", help="write synthetic recordings in the default schema")
    p.add_argument("--out", required=True)
    p.add_argument("--subjects", type=int, default=10)
    p.add_argument("--epochs", type=int, default=12, help="epochs per (subject, emotion)")
    p.add_argument("--subject-bpm-std", type=float, default=0.0)
    p.add_argument("--subject-amplitude-std", type=float, default=0.0)
    p.add_argument("--noise", type=float, default=0.05)
    p.add_argument("--seed", type=int, default=0)
    return parser


def config_from_args(args) -> RunConfig:
    return RunConfig(
        command=args.command,
        out=args.out,
        data_dir=args.data_dir,
        schema=args.schema,
        features=getattr(args, "features", None),
        protocol=getattr(args, "protocol", "personalized"),
        fs=FS_MODE_ALIASES[getattr(args, "fs", "hybrid")],
        models=parse_models(getattr(args, "models", None)),
        seed=args.seed,
        epoch_seconds=args.epoch_seconds,
        shuffle_within_group=getattr(args, "shuffle_within_group", False),
        kbest_k=getattr(args, "kbest_k", STAGE2_K),
    )


COMMANDS = {"extract": cmd_extract, "evaluate": cmd_evaluate, "ablation": cmd_ablation}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "synth":
            return cmd_synth(args)
        config = config_from_args(args)
        with output_lock(Path(config.out)):
            return COMMANDS[args.command](config)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except SplitError as exc:
        print(f"protocol error: {exc}", file=sys.stderr)
        return EXIT_PROTOCOL
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except Exception as exc:
        logger.exception("internal error")
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
