"""Boosting loop, prediction, model files and single-task extraction.

Each iteration: compute per-task gradients at the current raw scores, run
the updating pass (correlation damping) and the ensemble pass (weighted
collapse to one gradient per sample), grow one shared tree from the
ensemble gradients, fit its per-task leaf values from the updating
gradients, and add those values to every task's score column.

Model files are versioned plain text. Floats are written as hexadecimal
literals, so save/load round trips are bit exact and files are diffable.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .data import BinMapper, Dataset, bin_column
from .errors import (
    EmptyDataset,
    FeatureCountMismatch,
    FormatVersionMismatch,
    MapperMismatch,
    TaskIndexOutOfRange,
)
from .gradients import MTConfig, ensemble_grad_hess, updating_grad_hess
from .objectives import (
    BINARY_LOGLOSS,
    PROB_EPS,
    grad_hess,
    loss,
    transform_score,
    validate_objectives,
)
from .tree import (
    GrowthParams,
    MultiOutputTree,
    TreeNode,
    fit_leaf_values,
    grow_tree,
    route_binned,
)

MODEL_FORMAT_MARKER = "mtboost-model-v1"


@dataclass(frozen=True)
class BoosterParams:
    """Everything train() needs besides the data.

    ``lambda_reg`` is the denominator regularizer of the split gain and leaf
    values. Historic configs sometimes call this knob "lambda_l1"; the CLI
    accepts that alias but the engine applies it in the denominator only.
    ``seed`` offsets the task-selection stream of the multi-task config, so
    harnesses can vary whole runs with one knob.
    """

    objectives: tuple[str, ...]
    num_iterations: int = 200
    learning_rate: float = 0.03
    lambda_reg: float = 0.1
    gamma_reg: float = 0.0
    max_depth: int = 6
    max_leaves: int = 31
    min_samples_leaf: int = 20
    min_hess_leaf: float = 1e-3
    min_gain_to_split: float = 0.0
    early_stopping_rounds: int = 0
    seed: int = 0
    main_task_index: int = 0
    max_delta_step: float = 1e10
    mt: MTConfig = field(default_factory=MTConfig)

    def __post_init__(self):
        object.__setattr__(self, "objectives", validate_objectives(self.objectives))
        if self.num_iterations < 1:
            raise ValueError("num_iterations must be >= 1")
        if not 0.0 < self.learning_rate <= 1.0:
            raise ValueError("learning_rate must be in (0, 1]")
        if self.lambda_reg < 0:
            raise ValueError("lambda_reg must be >= 0")
        if not 0 <= self.main_task_index < len(self.objectives):
            raise ValueError("main_task_index out of range")

    def growth_params(self) -> GrowthParams:
        return GrowthParams(
            max_leaves=self.max_leaves,
            max_depth=self.max_depth,
            min_samples_leaf=self.min_samples_leaf,
            min_hess_leaf=self.min_hess_leaf,
            min_gain_to_split=self.min_gain_to_split,
            lambda_reg=self.lambda_reg,
            gamma_reg=self.gamma_reg,
        )


@dataclass(frozen=True)
class IterationLog:
    """Losses of one boosting iteration."""

    iteration: int
    train: tuple[float, ...]
    valid: tuple[float, ...] | None


@dataclass(eq=False)
class BoosterModel:
    """A trained ensemble; immutable and safe for concurrent prediction."""

    trees: list[MultiOutputTree]
    params: BoosterParams
    mapper: BinMapper
    base_scores: np.ndarray  # (n,)
    feature_names: tuple[str, ...]
    task_names: tuple[str, ...]
    training_log: list[IterationLog]
    extra: dict = field(default_factory=dict)  # CLI-side metadata, round-trips

    @property
    def n_tasks(self) -> int:
        return len(self.task_names)

    @property
    def n_features(self) -> int:
        return len(self.feature_names)


def _base_scores(labels, objectives) -> np.ndarray:
    """Per-task starting score: label mean, or its log-odds for classifiers."""
    base = np.empty(labels.shape[1], dtype=np.float64)
    for t, kind in enumerate(objectives):
        mean = float(np.mean(labels[:, t]))
        if kind == BINARY_LOGLOSS:
            p = min(max(mean, PROB_EPS), 1.0 - PROB_EPS)
            base[t] = math.log(p / (1.0 - p))
        else:
            base[t] = mean
    return base


def train(dataset: Dataset, params: BoosterParams, valid: Dataset | None = None) -> BoosterModel:
    """Run the boosting loop and return the fitted model.

    Validation data must be binned with the training mapper. With
    early_stopping_rounds > 0 and validation data present, training stops
    once the main task's validation loss has not improved for that many
    iterations, and the returned model is truncated to the best iteration.
    """
    if dataset.m == 0:
        raise EmptyDataset("training dataset has no rows")
    n = dataset.n
    if len(params.objectives) != n:
        raise ValueError(f"{len(params.objectives)} objectives for {n} label columns")
    for t, kind in enumerate(params.objectives):
        if kind == BINARY_LOGLOSS:
            col = dataset.labels[:, t]
            if not np.isin(col, (0.0, 1.0)).all():
                raise ValueError(f"task {t} labels must all be 0 or 1 for {kind}")
    if params.mt.n_selected > n:
        raise ValueError(f"n_selected={params.mt.n_selected} exceeds task count {n}")
    if valid is not None:
        if valid.mapper != dataset.mapper:
            raise MapperMismatch("validation data was binned with a different mapper")
        if valid.n != n:
            raise ValueError("validation label count differs from training")

    mt = replace(params.mt, seed=params.mt.seed + params.seed)
    growth = params.growth_params()
    base = _base_scores(dataset.labels, params.objectives)
    scores = np.tile(base, (dataset.m, 1))
    valid_scores = np.tile(base, (valid.m, 1)) if valid is not None else None

    trees: list[MultiOutputTree] = []
    log: list[IterationLog] = []
    best_loss = math.inf
    best_iter = -1

    for it in range(params.num_iterations):
        gh = grad_hess(dataset.labels, scores, params.objectives)
        gu = updating_grad_hess(gh, mt)
        eg = ensemble_grad_hess(gh, mt, it)
        skeleton, leaf_samples = grow_tree(dataset, eg.g_e, eg.h_e, growth)
        tree = fit_leaf_values(
            skeleton, leaf_samples, gu.g, gu.h,
            params.lambda_reg, params.learning_rate, params.max_delta_step,
        )
        trees.append(tree)
        for leaf, s in enumerate(leaf_samples):
            scores[s] += tree.leaf_values[leaf]

        train_losses = tuple(
            loss(dataset.labels[:, t], scores[:, t], params.objectives[t]) for t in range(n)
        )
        valid_losses = None
        if valid is not None:
            leaf_ids = route_binned(tree.nodes, valid.binned)
            valid_scores += tree.leaf_values[leaf_ids]
            valid_losses = tuple(
                loss(valid.labels[:, t], valid_scores[:, t], params.objectives[t])
                for t in range(n)
            )
        log.append(IterationLog(iteration=it, train=train_losses, valid=valid_losses))

        if params.early_stopping_rounds > 0 and valid_losses is not None:
            monitored = valid_losses[params.main_task_index]
            if monitored < best_loss:
                best_loss = monitored
                best_iter = it
            elif it - best_iter >= params.early_stopping_rounds:
                break

    if params.early_stopping_rounds > 0 and valid is not None and best_iter >= 0:
        trees = trees[: best_iter + 1]

    return BoosterModel(
        trees=trees,
        params=params,
        mapper=dataset.mapper,
        base_scores=base,
        feature_names=dataset.feature_names,
        task_names=dataset.task_names,
        training_log=log,
    )


def _bin_features(model: BoosterModel, features: np.ndarray) -> np.ndarray:
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2 or features.shape[1] != model.n_features:
        raise FeatureCountMismatch(
            f"expected {model.n_features} feature columns, got {features.shape}"
        )
    binned = np.empty(features.shape, dtype=np.int64)
    for f in range(model.n_features):
        binned[:, f] = bin_column(features[:, f], model.mapper.boundaries[f])
    return binned


def predict(model: BoosterModel, features, task: int | None = None) -> np.ndarray:
    """Raw additive scores for each row: (k, n), or (k,) when a task is given.

    The single-task path accumulates only that task's leaf values, so its
    cost does not grow with the number of tasks.
    """
    binned = _bin_features(model, features)
    k = binned.shape[0]
    if task is None:
        out = np.tile(model.base_scores, (k, 1))
        for tree in model.trees:
            out += tree.leaf_values[route_binned(tree.nodes, binned)]
        return out
    if not 0 <= task < model.n_tasks:
        raise TaskIndexOutOfRange(f"task {task} not in [0, {model.n_tasks})")
    out = np.full(k, model.base_scores[task])
    for tree in model.trees:
        out += tree.leaf_values[route_binned(tree.nodes, binned), task]
    return out


def predict_proba(model: BoosterModel, features, task: int | None = None) -> np.ndarray:
    """Scores mapped through each task's link (sigmoid for classifiers)."""
    raw = predict(model, features, task)
    if task is not None:
        return transform_score(raw, model.params.objectives[task])
    out = np.empty_like(raw)
    for t, kind in enumerate(model.params.objectives):
        out[:, t] = transform_score(raw[:, t], kind)
    return out


def extract_task(model: BoosterModel, task: int) -> BoosterModel:
    """Slice a multi-task model down to one task.

    The shared structure is kept; only the chosen task's leaf values,
    residual means and metadata survive. Predictions equal the chosen
    column of the full model exactly.
    """
    if not 0 <= task < model.n_tasks:
        raise TaskIndexOutOfRange(f"task {task} not in [0, {model.n_tasks})")
    trees = [
        MultiOutputTree(
            nodes=t.nodes,
            leaf_values=np.ascontiguousarray(t.leaf_values[:, task : task + 1]),
            leaf_residual_means=np.ascontiguousarray(
                t.leaf_residual_means[:, task : task + 1]
            ),
            leaf_counts=t.leaf_counts,
        )
        for t in model.trees
    ]
    params = replace(
        model.params, objectives=(model.params.objectives[task],), main_task_index=0
    )
    log = [
        IterationLog(
            iteration=row.iteration,
            train=(row.train[task],),
            valid=None if row.valid is None else (row.valid[task],),
        )
        for row in model.training_log
    ]
    return BoosterModel(
        trees=trees,
        params=params,
        mapper=model.mapper,
        base_scores=model.base_scores[task : task + 1].copy(),
        feature_names=model.feature_names,
        task_names=(model.task_names[task],),
        training_log=log,
        extra=dict(model.extra),
    )


# ---------------------------------------------------------------------------
# Model file format (documented in README: "Model file format")
# ---------------------------------------------------------------------------


def _hex(x: float) -> str:
    return float(x).hex()


def _hexline(values) -> str:
    return " ".join(_hex(v) for v in values)


def save_model(model: BoosterModel, path) -> None:
    """Write the model as versioned text with hex float literals."""
    lines = [MODEL_FORMAT_MARKER]
    lines.append(f"n_tasks {model.n_tasks}")
    lines.append(f"n_features {model.n_features}")
    lines.append(f"num_trees {len(model.trees)}")
    lines.append(f"num_log_rows {len(model.training_log)}")
    lines.append("feature_names " + json.dumps(list(model.feature_names)))
    lines.append("task_names " + json.dumps(list(model.task_names)))
    lines.append("params " + json.dumps(_params_to_dict(model.params)))
    lines.append("extra " + json.dumps(model.extra, sort_keys=True))
    lines.append("base_scores " + _hexline(model.base_scores))
    lines.append(f"mapper max_bins {model.mapper.max_bins}")
    for f, cuts in enumerate(model.mapper.boundaries):
        lines.append(f"feature {f} boundaries " + _hexline(cuts))
    for i, tree in enumerate(model.trees):
        lines.append(f"tree {i} nodes {len(tree.nodes)} leaves {tree.n_leaves}")
        for node in tree.nodes:
            lines.append(
                f"node {node.feature} {node.threshold_bin} {node.left} {node.right} "
                f"{int(node.default_right)} {_hex(node.gain)} {node.count}"
            )
        for leaf in range(tree.n_leaves):
            lines.append(
                f"leaf {int(tree.leaf_counts[leaf])} "
                f"values {_hexline(tree.leaf_values[leaf])} "
                f"means {_hexline(tree.leaf_residual_means[leaf])}"
            )
    for row in model.training_log:
        valid = "-" if row.valid is None else _hexline(row.valid)
        lines.append(f"log {row.iteration} train {_hexline(row.train)} valid {valid}")
    lines.append("end")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def _params_to_dict(params: BoosterParams) -> dict:
    mt = params.mt
    return {
        "objectives": list(params.objectives),
        "num_iterations": params.num_iterations,
        "learning_rate": params.learning_rate,
        "lambda_reg": params.lambda_reg,
        "gamma_reg": params.gamma_reg,
        "max_depth": params.max_depth,
        "max_leaves": params.max_leaves,
        "min_samples_leaf": params.min_samples_leaf,
        "min_hess_leaf": params.min_hess_leaf,
        "min_gain_to_split": params.min_gain_to_split,
        "early_stopping_rounds": params.early_stopping_rounds,
        "seed": params.seed,
        "main_task_index": params.main_task_index,
        "max_delta_step": params.max_delta_step,
        "mt": {
            "gamma_boost": mt.gamma_boost,
            "g_target_mean": mt.g_target_mean,
            "g_target_std": mt.g_target_std,
            "h_target_mean": mt.h_target_mean,
            "h_target_std": mt.h_target_std,
            "task_select": mt.task_select,
            "task_weights": list(mt.task_weights) if mt.task_weights else None,
            "n_selected": mt.n_selected,
            "corr_mode": mt.corr_mode,
            "seed": mt.seed,
        },
    }


def _params_from_dict(d: dict) -> BoosterParams:
    mt = d["mt"]
    weights = mt["task_weights"]
    return BoosterParams(
        objectives=tuple(d["objectives"]),
        num_iterations=d["num_iterations"],
        learning_rate=d["learning_rate"],
        lambda_reg=d["lambda_reg"],
        gamma_reg=d["gamma_reg"],
        max_depth=d["max_depth"],
        max_leaves=d["max_leaves"],
        min_samples_leaf=d["min_samples_leaf"],
        min_hess_leaf=d["min_hess_leaf"],
        min_gain_to_split=d["min_gain_to_split"],
        early_stopping_rounds=d["early_stopping_rounds"],
        seed=d["seed"],
        main_task_index=d["main_task_index"],
        max_delta_step=d["max_delta_step"],
        mt=MTConfig(
            gamma_boost=mt["gamma_boost"],
            g_target_mean=mt["g_target_mean"],
            g_target_std=mt["g_target_std"],
            h_target_mean=mt["h_target_mean"],
            h_target_std=mt["h_target_std"],
            task_select=mt["task_select"],
            task_weights=tuple(weights) if weights else None,
            n_selected=mt["n_selected"],
            corr_mode=mt["corr_mode"],
            seed=mt["seed"],
        ),
    )


class _Reader:
    def __init__(self, lines, path):
        self.lines = lines
        self.path = path
        self.pos = 0

    def next(self, expect_prefix: str | None = None) -> str:
        if self.pos >= len(self.lines):
            raise FormatVersionMismatch(f"{self.path}: truncated model file")
        line = self.lines[self.pos]
        self.pos += 1
        if expect_prefix is not None and not line.startswith(expect_prefix):
            raise FormatVersionMismatch(
                f"{self.path}: expected {expect_prefix!r}, got {line[:40]!r}"
            )
        return line


def _parse_hexline(rest: str) -> np.ndarray:
    if not rest:
        return np.empty(0, dtype=np.float64)
    return np.array([float.fromhex(tok) for tok in rest.split(" ")], dtype=np.float64)


def load_model(path) -> BoosterModel:
    """Parse a model file written by save_model; strict about the format."""
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    rd = _Reader(lines, path)
    if rd.next() != MODEL_FORMAT_MARKER:
        raise FormatVersionMismatch(f"{path}: not a {MODEL_FORMAT_MARKER} file")
    try:
        n_tasks = int(rd.next("n_tasks ").split(" ")[1])
        n_features = int(rd.next("n_features ").split(" ")[1])
        num_trees = int(rd.next("num_trees ").split(" ")[1])
        num_log_rows = int(rd.next("num_log_rows ").split(" ")[1])
        feature_names = tuple(json.loads(rd.next("feature_names ")[len("feature_names "):]))
        task_names = tuple(json.loads(rd.next("task_names ")[len("task_names "):]))
        params = _params_from_dict(json.loads(rd.next("params ")[len("params "):]))
        extra = json.loads(rd.next("extra ")[len("extra "):])
        base_scores = _parse_hexline(rd.next("base_scores ")[len("base_scores "):])
        max_bins = int(rd.next("mapper max_bins ").split(" ")[2])
        boundaries = []
        for f in range(n_features):
            head = f"feature {f} boundaries"
            line = rd.next(head)
            boundaries.append(_parse_hexline(line[len(head):].strip()))
        mapper = BinMapper(boundaries=tuple(boundaries), max_bins=max_bins)
        trees = []
        for i in range(num_trees):
            header = rd.next(f"tree {i} ").split(" ")
            n_nodes, n_leaves = int(header[3]), int(header[5])
            nodes = []
            for _ in range(n_nodes):
                tok = rd.next("node ").split(" ")
                nodes.append(
                    TreeNode(
                        feature=int(tok[1]),
                        threshold_bin=int(tok[2]),
                        left=int(tok[3]),
                        right=int(tok[4]),
                        default_right=bool(int(tok[5])),
                        gain=float.fromhex(tok[6]),
                        count=int(tok[7]),
                    )
                )
            values = np.empty((n_leaves, n_tasks))
            means = np.empty((n_leaves, n_tasks))
            counts = np.empty(n_leaves, dtype=np.int64)
            for leaf in range(n_leaves):
                line = rd.next("leaf ")
                head, _, tail = line.partition(" values ")
                counts[leaf] = int(head.split(" ")[1])
                values_part, _, means_part = tail.partition(" means ")
                values[leaf] = _parse_hexline(values_part)
                means[leaf] = _parse_hexline(means_part)
            trees.append(
                MultiOutputTree(
                    nodes=nodes,
                    leaf_values=values,
                    leaf_residual_means=means,
                    leaf_counts=counts,
                )
            )
        log = []
        for _ in range(num_log_rows):
            line = rd.next("log ")
            head, _, tail = line.partition(" train ")
            train_part, _, valid_part = tail.partition(" valid ")
            log.append(
                IterationLog(
                    iteration=int(head.split(" ")[1]),
                    train=tuple(_parse_hexline(train_part)),
                    valid=None if valid_part == "-" else tuple(_parse_hexline(valid_part)),
                )
            )
        rd.next("end")
    except FormatVersionMismatch:
        raise
    except (ValueError, IndexError, json.JSONDecodeError) as exc:
        raise FormatVersionMismatch(f"{path}: corrupt model file: {exc}") from None
    if len(base_scores) != n_tasks or len(feature_names) != n_features:
        raise FormatVersionMismatch(f"{path}: inconsistent header counts")
    return BoosterModel(
        trees=trees,
        params=params,
        mapper=mapper,
        base_scores=base_scores,
        feature_names=feature_names,
        task_names=task_names,
        training_log=log,
        extra=extra,
    )
