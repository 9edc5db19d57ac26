"""Mini-batch training with early stopping and best-weights checkpointing."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import Diverged, EmptyPartition
from .neuralcore import (
    ModelSpec,
    NetworkState,
    adam_init,
    adam_step,
    backward,
    forward,
    init_network,
    mse_loss,
    predict,
)
from .preprocess import ScalerParams, SplitDataset, WindowedDataset, inverse_target
from .rng import SplitMix64, derive_seed

HISTORY_COLUMNS = ("epoch", "train_loss", "val_loss", "train_rmse", "val_rmse")


@dataclass(frozen=True)
class TrainConfig:
    max_epochs: int = 200
    batch_size: int = 8
    patience: Optional[int] = 50  # None disables early stopping
    min_delta: float = 0.0
    seed: int = 0
    learning_rate: float = 1e-3
    checkpoint_path: Optional[str] = None

    def __post_init__(self):
        if self.max_epochs < 1:
            raise ValueError("max_epochs must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.patience is not None and self.patience < 0:
            raise ValueError("patience must be >= 0")

    def echo(self) -> dict:
        d = asdict(self)
        d.pop("checkpoint_path")
        return d


@dataclass
class EarlyStopState:
    best_loss: float = math.inf
    best_epoch: int = 0
    since_improvement: int = 0


def early_stop_update(st: EarlyStopState, val_loss: float, patience, min_delta: float = 0.0, epoch: int = 0):
    """Fold one epoch's validation loss into the stopping state.

    Returns ``(state, decision)`` with decision ``"new_best"``, ``"continue"``
    or ``"stop"``.  Improvement is strict: ``val_loss < best - min_delta``.
    With ``patience=None`` the rule never stops.
    """
    if not math.isfinite(val_loss):
        raise ValueError("val_loss must be finite")
    if val_loss < st.best_loss - min_delta:
        return EarlyStopState(val_loss, epoch, 0), "new_best"
    st = EarlyStopState(st.best_loss, st.best_epoch, st.since_improvement + 1)
    if patience is not None and st.since_improvement >= patience:
        return st, "stop"
    return st, "continue"


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    train_loss: float
    val_loss: float
    train_rmse: float
    val_rmse: float
    running_loss: float  # dropout-on mean batch loss seen during the epoch


@dataclass(frozen=True)
class Metrics:
    loss: float
    rmse: float

    def to_dict(self) -> dict:
        return {"loss": self.loss, "rmse": self.rmse}


@dataclass
class TrainReport:
    history: list[EpochRecord] = field(default_factory=list)
    best_epoch: int = 0
    stopped_epoch: int = 0
    stop_reason: str = ""
    test: Optional[Metrics] = None
    config: dict = field(default_factory=dict)

    @property
    def best_val_loss(self) -> float:
        return min(r.val_loss for r in self.history)

    def to_dict(self) -> dict:
        return {
            "best_epoch": self.best_epoch,
            "stopped_epoch": self.stopped_epoch,
            "stop_reason": self.stop_reason,
            "test": self.test.to_dict() if self.test else None,
            "config": self.config,
            "history": [asdict(r) for r in self.history],
        }


def evaluate(state: NetworkState, ds: WindowedDataset) -> Metrics:
    if len(ds) == 0:
        raise EmptyPartition("evaluation")
    loss = mse_loss(predict(state, ds.X), ds.y)
    return Metrics(loss, math.sqrt(loss))


def design_echo(spec: ModelSpec, cfg: TrainConfig, init_seed: int) -> dict:
    """Every setting a run depends on, for reports."""
    return {
        "model": spec.to_dict(),
        "train": cfg.echo(),
        "init_seed": init_seed,
        "optimizer": {"name": "adam", "lr": cfg.learning_rate, "beta1": 0.9, "beta2": 0.999, "eps": 1e-7},
        "init": "glorot_uniform kernels, zero biases, lstm forget bias 1.0",
        "loss": "mse",
        "dropout_placement": "recurrent layer outputs",
        "prng": "splitmix64",
    }


def train(
    spec: ModelSpec,
    split: SplitDataset,
    cfg: TrainConfig,
    init_seed: int,
    on_checkpoint: Optional[Callable[[NetworkState, int], None]] = None,
):
    """Train from a seeded initialisation; return ``(report, best_state)``.

    Epochs are numbered from 1.  After each epoch the train and validation
    partitions are re-evaluated with dropout off; the weights are snapshotted
    whenever validation loss strictly improves.  The returned state is that
    snapshot, not the final weights.  With an empty validation partition
    early stopping must be disabled and the train loss is monitored instead.

    Raises :class:`Diverged` (carrying the partial report) on non-finite
    activations or gradients.
    """
    if len(split.train) == 0:
        raise EmptyPartition("train")
    has_val = len(split.validation) > 0
    if not has_val and cfg.patience is not None:
        raise EmptyPartition("validation")

    state = init_network(spec, init_seed)
    opt = adam_init(state, lr=cfg.learning_rate)
    report = TrainReport(config=design_echo(spec, cfg, init_seed))
    es = EarlyStopState()
    best_state = state.copy()
    n = len(split.train)

    for epoch in range(1, cfg.max_epochs + 1):
        order = SplitMix64(derive_seed(cfg.seed, "shuffle", epoch)).permutation(n)
        running = 0.0
        try:
            for b, start in enumerate(range(0, n, cfg.batch_size)):
                idx = order[start : start + cfg.batch_size]
                X, y = split.train.X[idx], split.train.y[idx]
                pred, cache = forward(
                    state, X, mode="train", dropout_seed=derive_seed(cfg.seed, "dropout", epoch, b)
                )
                running += mse_loss(pred, y) * len(idx)
                grads = backward(state, cache, pred, y)
                adam_step(opt, state, grads)
            tr = evaluate(state, split.train)
            va = evaluate(state, split.validation) if has_val else tr
        except Diverged as exc:
            report.stopped_epoch = epoch - 1
            report.stop_reason = "diverged"
            raise Diverged(f"epoch {epoch}: {exc}", report) from exc
        if not (math.isfinite(tr.loss) and math.isfinite(va.loss)):
            report.stopped_epoch = epoch - 1
            report.stop_reason = "diverged"
            raise Diverged(f"epoch {epoch}: non-finite evaluation loss", report)

        report.history.append(EpochRecord(epoch, tr.loss, va.loss, tr.rmse, va.rmse, running / n))
        es, decision = early_stop_update(es, va.loss, cfg.patience, cfg.min_delta, epoch)
        if decision == "new_best":
            best_state = state.copy()
            if on_checkpoint is not None:
                on_checkpoint(best_state, epoch)
        report.stopped_epoch = epoch
        if decision == "stop":
            report.stop_reason = "early_stop"
            break
    else:
        report.stop_reason = "max_epochs"

    report.best_epoch = es.best_epoch
    report.test = evaluate(best_state, split.test) if len(split.test) else None
    return report, best_state


def simulate_stopping(val_losses, patience, max_epochs: int, min_delta: float = 0.0) -> tuple[int, int]:
    """Run the stopping rule over a scripted loss sequence.

    Returns ``(stopped_epoch, best_epoch)``; the sequence must hold at least
    ``max_epochs`` values or run out only after a stop.
    """
    es = EarlyStopState()
    for epoch in range(1, max_epochs + 1):
        es, decision = early_stop_update(es, val_losses[epoch - 1], patience, min_delta, epoch)
        if decision == "stop":
            return epoch, es.best_epoch
    return max_epochs, es.best_epoch


def history_csv(report: TrainReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(HISTORY_COLUMNS)
    for r in report.history:
        w.writerow([r.epoch] + [format(v, ".17g") for v in (r.train_loss, r.val_loss, r.train_rmse, r.val_rmse)])
    return buf.getvalue()


@dataclass(frozen=True)
class PredictionSeries:
    target_row_index: np.ndarray
    dates: tuple
    scaled_actual: np.ndarray
    scaled_predicted: np.ndarray
    actual: np.ndarray
    predicted: np.ndarray

    def __len__(self) -> int:
        return self.scaled_actual.shape[0]


def predict_series(state: NetworkState, ds: WindowedDataset, scaler: ScalerParams) -> PredictionSeries:
    """One prediction per window, in scaled and price units."""
    if len(ds) == 0:
        raise EmptyPartition("prediction")
    order = np.argsort(ds.target_row_index, kind="stable")
    ds = ds.subset(order)
    pred = predict(state, ds.X)
    return PredictionSeries(
        target_row_index=ds.target_row_index,
        dates=ds.dates,
        scaled_actual=ds.y.copy(),
        scaled_predicted=pred,
        actual=inverse_target(scaler, ds.y),
        predicted=inverse_target(scaler, pred),
    )


def prediction_csv(pairs: PredictionSeries) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("date", "actual_close", "predicted_close", "scaled_actual", "scaled_predicted"))
    for k in range(len(pairs)):
        date = pairs.dates[k].isoformat() if pairs.dates else str(int(pairs.target_row_index[k]))
        w.writerow(
            [date]
            + [
                format(float(v), ".17g")
                for v in (pairs.actual[k], pairs.predicted[k], pairs.scaled_actual[k], pairs.scaled_predicted[k])
            ]
        )
    return buf.getvalue()
