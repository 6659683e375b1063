"""Experiment orchestration: dataset generation, the training grid, policy
evaluation, ideal baselines, and result CSV emission.

Seeds for every stage derive from the top-level generation seed plus stable
integer keys (stage, model, n, m, ...), mirroring how one generation shares
election profiles across methods and information types while later
generations replace everything. The derivations are recorded in each run's
manifest, from which any result row can be reproduced bit-exactly.
"""

from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

from . import datasets, evaluation, neural, oracle
from .config import (
    ExperimentConfig,
    hidden_label,
    manifest_dict,
    write_manifest,
)
from .information import InfoType, feature_length
from .neural import NetConfig, TrainConfig, TrainedNet
from .oracle import Labeling
from .samplers import ModelKind, ProbModel, RandomStream, sample_batch, substream
from .voting_methods import MethodId

# stage keys for seed derivation
_STAGE_TRAIN_DATA = 1
_STAGE_VALIDATION = 2
_STAGE_EVALUATION = 3
_STAGE_INIT = 4
_STAGE_SHUFFLE = 5

GEN_CHUNK = 4096

RESULT_COLUMNS = [
    "policy",
    "method",
    "model",
    "n",
    "m",
    "info",
    "labeling",
    "hidden_config",
    "seed",
    "mean_profitability",
    "sem",
    "samples",
    "flag",
]


def _model_keys(model: ProbModel) -> tuple[int, int]:
    rel = int(round(model.rel_phi * 1_000_000)) if model.kind == ModelKind.MALLOWS else 0
    return int(model.kind), rel


def data_rng_seedkeys(seed: int, model: ProbModel, n: int, m: int, chunk: int) -> tuple[int, ...]:
    mk, rel = _model_keys(model)
    return (seed, _STAGE_TRAIN_DATA, mk, rel, n, m, chunk)


def validation_rng(seed: int, model: ProbModel, n: int, m: int) -> np.random.Generator:
    mk, rel = _model_keys(model)
    return substream(seed, _STAGE_VALIDATION, mk, rel, n, m)


def eval_seed(seed: int, model: ProbModel, n: int, m: int) -> int:
    """Evaluation elections are shared across methods and infos within a
    generation; the derived seed folds the stage and cell keys into 63 bits."""
    mk, rel = _model_keys(model)
    ss = np.random.SeedSequence([seed, _STAGE_EVALUATION, mk, rel, n, m])
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))


def init_seed_for(seed: int, n: int, m: int, size_index: int) -> int:
    ss = np.random.SeedSequence([seed, _STAGE_INIT, n, m, size_index])
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))


def dataset_filename(
    method: MethodId, model: ProbModel, n: int, m: int, info: InfoType, labeling: Labeling, seed: int
) -> str:
    model_tag = model.label.replace(":", "")
    return f"{method.label}_{model_tag}_n{n}_m{m}_{info.label}_{labeling.label}_s{seed}.ltmd"


def checkpoint_filename(
    method: MethodId,
    model: ProbModel,
    n: int,
    m: int,
    info: InfoType,
    labeling: Labeling,
    seed: int,
    hidden: tuple[int, ...],
) -> str:
    base = dataset_filename(method, model, n, m, info, labeling, seed)
    return base[: -len(".ltmd")] + f"_h{hidden_label(hidden)}.ltmw"


@dataclass(frozen=True)
class Cell:
    method: MethodId
    model: ProbModel
    n: int
    m: int
    info: InfoType
    labeling: Labeling
    seed: int


def iter_cells(config: ExperimentConfig) -> Iterator[Cell]:
    for seed in config.seeds:
        for model in config.models:
            for n in config.voters:
                for m in config.candidates:
                    for method in config.methods:
                        for info in config.infos:
                            yield Cell(method, model, n, m, info, config.labeling, seed)


# --- dataset generation ---------------------------------------------------

def gen_data(config: ExperimentConfig) -> list[Path]:
    """Write one dataset file per (method, model, n, m, info) cell.

    Elections are sampled once per (model, n, m, seed) group and shared by
    every method and info type in the group, so labels across methods refer to
    the same profiles. Files are skipped when already present.
    """
    out = config.out / "data"
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    groups: dict[tuple, list[Cell]] = {}
    for cell in iter_cells(config):
        groups.setdefault((cell.seed, cell.model, cell.n, cell.m), []).append(cell)
    for (seed, model, n, m), cells in groups.items():
        pending = [
            c
            for c in cells
            if not (out / dataset_filename(c.method, c.model, c.n, c.m, c.info, c.labeling, c.seed)).exists()
        ]
        if not pending:
            continue
        methods = sorted({c.method for c in pending})
        per_cell_feats: dict[Cell, list[np.ndarray]] = {c: [] for c in pending}
        per_cell_labels: dict[Cell, list[np.ndarray]] = {c: [] for c in pending}
        total = 0
        chunk_idx = 0
        while total < config.train_size:
            take = min(GEN_CHUNK, config.train_size - total)
            rng = substream(*data_rng_seedkeys(seed, model, n, m, chunk_idx))
            utilities = sample_batch(model, take, n, m, rng)
            by_method = {}
            for method in methods:
                infos = sorted({c.info for c in pending if c.method == method})
                for info in infos:
                    batch = by_method.get((method, info))
                    if batch is None:
                        batch = oracle.make_instance_batch(
                            method,
                            utilities,
                            info,
                            config.labeling,
                            config.normalize_features,
                        )
                        by_method[(method, info)] = batch
            for c in pending:
                batch = by_method[(c.method, c.info)]
                per_cell_feats[c].append(batch.features.astype(np.float32))
                per_cell_labels[c].append(batch.labels)
            total += take
            chunk_idx += 1
        for c in pending:
            path = out / dataset_filename(c.method, c.model, c.n, c.m, c.info, c.labeling, c.seed)
            feats = np.concatenate(per_cell_feats[c], axis=0)
            labels = np.concatenate(per_cell_labels[c], axis=0)
            datasets.write_dataset(
                path,
                oracle.InstanceMeta(method=c.method, info=c.info, n=c.n, m=c.m),
                c.model,
                c.labeling,
                feats,
                labels,
            )
            written.append(path)
    manifest = manifest_dict(config, "gen", {})
    write_manifest(config.out / "manifest_gen.json", manifest)
    return written


# --- training grid --------------------------------------------------------

@dataclass
class TrainRun:
    cell: Cell
    hidden: tuple[int, ...]
    size_index: int
    dataset_path: Path
    checkpoint_path: Path
    log_path: Path


def plan_training(config: ExperimentConfig) -> list[TrainRun]:
    data_dir = config.out / "data"
    ckpt_dir = config.out / "checkpoints"
    runs = []
    for cell in iter_cells(config):
        ds = data_dir / dataset_filename(
            cell.method, cell.model, cell.n, cell.m, cell.info, cell.labeling, cell.seed
        )
        for size_index, hidden in enumerate(config.net_grid):
            ck = ckpt_dir / checkpoint_filename(
                cell.method, cell.model, cell.n, cell.m, cell.info, cell.labeling, cell.seed, hidden
            )
            runs.append(
                TrainRun(
                    cell=cell,
                    hidden=hidden,
                    size_index=size_index,
                    dataset_path=ds,
                    checkpoint_path=ck,
                    log_path=ck.with_suffix(".log.csv"),
                )
            )
    return runs


def build_validation(
    cell: Cell, config: ExperimentConfig
) -> oracle.InstanceBatch:
    rng = validation_rng(cell.seed, cell.model, cell.n, cell.m)
    utilities = sample_batch(cell.model, config.train.validation_size, cell.n, cell.m, rng)
    return oracle.make_instance_batch(
        cell.method, utilities, cell.info, cell.labeling, config.normalize_features
    )


def _write_train_log(path: Path, result: neural.TrainResult) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["iteration", "train_loss", "val_profitability"])
        for row in result.log:
            writer.writerow(
                [row.iteration, f"{row.train_loss:.8f}",
                 "" if row.val_profitability is None else f"{row.val_profitability:.8f}"]
            )


def execute_training_run(
    run: TrainRun,
    config: ExperimentConfig,
    validation: oracle.InstanceBatch | None = None,
) -> TrainedNet:
    if not run.dataset_path.exists():
        c = run.cell
        raise FileNotFoundError(
            f"missing dataset for cell method={c.method.label} model={c.model.label} "
            f"n={c.n} m={c.m} info={c.info.label} seed={c.seed}: {run.dataset_path}"
        )
    header, features, labels = datasets.read_dataset(run.dataset_path)
    if validation is None:
        validation = build_validation(run.cell, config)
    c = run.cell
    net_cfg = NetConfig(
        input_dim=header.feature_dim,
        hidden=run.hidden,
        output_dim=header.num_classes,
        init_seed=init_seed_for(c.seed, c.n, c.m, run.size_index),
    )
    net = neural.init_net(net_cfg)
    shuffle_rng = substream(
        c.seed, _STAGE_SHUFFLE, int(c.method), *_model_keys(c.model),
        c.n, c.m, int(c.info), int(c.labeling), run.size_index,
    )
    data = neural.TrainingData(features.astype(np.float64), labels)
    result = neural.train(net, data, validation, config.train, shuffle_rng)
    run.checkpoint_path.parent.mkdir(parents=True, exist_ok=True)
    datasets.write_checkpoint(run.checkpoint_path, result.net)
    _write_train_log(run.log_path, result)
    return result.net


def _train_worker(args) -> str:
    run, config = args
    execute_training_run(run, config)
    return str(run.checkpoint_path)


def train_grid(config: ExperimentConfig) -> list[Path]:
    """Train one net per cell and grid size; completed runs are skipped."""
    runs = plan_training(config)
    todo = [r for r in runs if not r.checkpoint_path.exists()]
    if config.workers > 1 and len(todo) > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            list(pool.map(_train_worker, [(r, config) for r in todo]))
    else:
        val_cache: dict[Cell, oracle.InstanceBatch] = {}
        for run in todo:
            if run.cell not in val_cache:
                val_cache.clear()
                val_cache[run.cell] = build_validation(run.cell, config)
            execute_training_run(run, config, val_cache[run.cell])
    manifest = manifest_dict(
        config,
        "train",
        {str(r.checkpoint_path): init_seed_for(r.cell.seed, r.cell.n, r.cell.m, r.size_index) for r in runs},
    )
    write_manifest(config.out / "manifest_train.json", manifest)
    return [r.checkpoint_path for r in runs]


# --- evaluation and baselines ----------------------------------------------

def result_to_row(res: evaluation.EvalResult, labeling: str = "", hidden: str = "") -> dict:
    return {
        "policy": res.policy,
        "method": res.method.label,
        "model": res.model.label,
        "n": res.n,
        "m": res.m,
        "info": res.info.label if res.info is not None else "",
        "labeling": labeling,
        "hidden_config": hidden,
        "seed": res.seed,
        "mean_profitability": repr(res.mean_profitability),
        "sem": repr(res.sem),
        "samples": res.samples,
        "flag": res.flag,
    }


def write_results_csv(path: Path, rows: Iterable[dict]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(".tmp")
    with open(tmp, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=RESULT_COLUMNS)
        writer.writeheader()
        for row in rows:
            writer.writerow(row)
    os.replace(tmp, path)


def run_eval_row(row: dict) -> evaluation.EvalResult:
    """Re-run one evaluation exactly as recorded in a manifest row."""
    method = MethodId.parse(str(row["method"]))
    model = ProbModel.parse(str(row["model"]))
    n, m = int(row["n"]), int(row["m"])
    policy_name = row["policy"]
    if policy_name == "ideal":
        policy = evaluation.IdealPolicy()
    elif policy_name == "sincere":
        policy = evaluation.SincerePolicy()
    else:
        net = datasets.read_checkpoint(row["checkpoint"])
        policy = evaluation.NetPolicy(
            net, InfoType.parse(str(row["info"])), bool(row.get("normalize", False))
        )
    return evaluation.evaluate(
        policy,
        method,
        model,
        n,
        m,
        RandomStream(int(row["eval_seed"])),
        sem_target=float(row.get("sem_target", evaluation.SEM_TARGET)),
        min_samples=int(row.get("min_samples", evaluation.MIN_SAMPLES)),
        sample_cap=int(row.get("sample_cap", evaluation.SAMPLE_CAP)),
        batch_size=int(row.get("batch_size", evaluation.EVAL_BATCH)),
    )


def baseline(config: ExperimentConfig) -> Path:
    """Ideal-manipulator baselines for every (method, model, n, m, seed)."""
    rows = []
    manifest_rows = []
    for seed in config.seeds:
        for model in config.models:
            for n in config.voters:
                for m in config.candidates:
                    es = eval_seed(seed, model, n, m)
                    for method in config.methods:
                        res = evaluation.ideal_baseline(
                            method, model, n, m, RandomStream(es),
                            sample_cap=config.sample_cap,
                            batch_size=config.eval_batch,
                        )
                        rows.append(result_to_row(res))
                        manifest_rows.append(
                            {
                                "policy": "ideal",
                                "method": method.label,
                                "model": model.label,
                                "n": n,
                                "m": m,
                                "eval_seed": es,
                                "sample_cap": config.sample_cap,
                                "batch_size": config.eval_batch,
                            }
                        )
    path = config.out / "results" / f"results_baseline_s{config.seeds[0]}.csv"
    write_results_csv(path, rows)
    manifest = manifest_dict(config, "baseline", {})
    manifest["rows"] = manifest_rows
    write_manifest(config.out / "manifest_baseline.json", manifest)
    return path


def evaluate_policies(config: ExperimentConfig, policy_kind: str = "net") -> Path:
    """Evaluate trained checkpoints (or the sincere stub) over the grid."""
    rows = []
    manifest_rows = []
    if policy_kind == "sincere":
        for seed in config.seeds:
            for model in config.models:
                for n in config.voters:
                    for m in config.candidates:
                        es = eval_seed(seed, model, n, m)
                        for method in config.methods:
                            res = evaluation.evaluate(
                                evaluation.SincerePolicy(), method, model, n, m,
                                RandomStream(es),
                                sample_cap=config.sample_cap,
                                batch_size=config.eval_batch,
                            )
                            rows.append(result_to_row(res))
                            manifest_rows.append(
                                {
                                    "policy": "sincere",
                                    "method": method.label,
                                    "model": model.label,
                                    "n": n,
                                    "m": m,
                                    "eval_seed": es,
                                    "sample_cap": config.sample_cap,
                                    "batch_size": config.eval_batch,
                                }
                            )
    else:
        for run in plan_training(config):
            if not run.checkpoint_path.exists():
                c = run.cell
                raise FileNotFoundError(
                    f"missing checkpoint for cell method={c.method.label} "
                    f"model={c.model.label} n={c.n} m={c.m} info={c.info.label} "
                    f"hidden={hidden_label(run.hidden)}: {run.checkpoint_path}"
                )
            net = datasets.read_checkpoint(run.checkpoint_path)
            policy = evaluation.NetPolicy(net, run.cell.info, config.normalize_features)
            c = run.cell
            es = eval_seed(c.seed, c.model, c.n, c.m)
            res = evaluation.evaluate(
                policy, c.method, c.model, c.n, c.m, RandomStream(es),
                sample_cap=config.sample_cap,
                batch_size=config.eval_batch,
            )
            rows.append(
                result_to_row(res, labeling=c.labeling.label, hidden=hidden_label(run.hidden))
            )
            manifest_rows.append(
                {
                    "policy": "net",
                    "method": c.method.label,
                    "model": c.model.label,
                    "n": c.n,
                    "m": c.m,
                    "info": c.info.label,
                    "labeling": c.labeling.label,
                    "hidden": hidden_label(run.hidden),
                    "checkpoint": str(run.checkpoint_path),
                    "eval_seed": es,
                    "sample_cap": config.sample_cap,
                    "batch_size": config.eval_batch,
                }
            )
    tag = "sincere" if policy_kind == "sincere" else "eval"
    path = config.out / "results" / f"results_{tag}_s{config.seeds[0]}.csv"
    write_results_csv(path, rows)
    manifest = manifest_dict(config, f"eval:{policy_kind}", {})
    manifest["rows"] = manifest_rows
    write_manifest(config.out / f"manifest_eval_{tag}.json", manifest)
    return path
