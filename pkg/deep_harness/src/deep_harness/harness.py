"""Train/evaluate driver writing rows in the exporter's results.csv schema.

A model is trained once per seed on the train tensors and evaluated on every
supplied test tensor (one per perturbation paradigm). DeepLOB accepts only
level-based tensors.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np
import torch
import torch.nn as nn

from .models import build_model
from .tensorio import IncompatibleScheme, load_xy

RESULT_FIELDS = ("model", "scheme", "paradigm", "seed", "accuracy", "precision", "recall", "fscore")


@dataclass
class HarnessConfig:
    model: str                    # lstm | tcn | deeplob
    train_x: str
    test_x: dict = field(default_factory=dict)  # paradigm -> tensor path
    train_y: str | None = None    # default: sidecar reference
    test_y: dict = field(default_factory=dict)
    seeds: tuple = (0, 1)
    epochs: int = 10
    batch_size: int = 128
    learning_rate: float = 1e-3
    val_frac: float = 0.15
    patience: int = 5


def scores(preds: np.ndarray, labels: np.ndarray) -> dict:
    """Accuracy plus macro precision/recall/F (percent), classes 1..3."""
    accuracy = 100.0 * float(np.mean(preds == labels))
    ps, rs, fs = [], [], []
    for c in (1, 2, 3):
        tp = float(np.sum((preds == c) & (labels == c)))
        fp = float(np.sum((preds == c) & (labels != c)))
        fn = float(np.sum((preds != c) & (labels == c)))
        p = tp / (tp + fp) if tp + fp else 0.0
        r = tp / (tp + fn) if tp + fn else 0.0
        ps.append(p)
        rs.append(r)
        fs.append(2 * p * r / (p + r) if p + r else 0.0)
    return {
        "accuracy": accuracy,
        "precision": 100.0 * float(np.mean(ps)),
        "recall": 100.0 * float(np.mean(rs)),
        "fscore": 100.0 * float(np.mean(fs)),
    }


def _check_scheme(kind: str, meta: dict, path) -> str:
    scheme = meta.get("scheme", "unknown")
    if kind == "deeplob" and scheme != "level_based":
        raise IncompatibleScheme(
            f"deeplob accepts only level_based tensors, got {scheme!r} from {path}"
        )
    return scheme


@torch.no_grad()
def _predict(model: nn.Module, x: torch.Tensor, batch_size: int) -> np.ndarray:
    model.eval()
    out = []
    for start in range(0, len(x), batch_size):
        logits = model(x[start : start + batch_size])
        out.append(logits.argmax(dim=1).cpu().numpy())
    return np.concatenate(out) + 1  # back to class codes 1..3


def _train_one(kind, x, y_idx, val_x, val_y_idx, cfg: HarnessConfig, seed: int) -> nn.Module:
    torch.manual_seed(seed)
    model = build_model(kind, x.shape[-1])
    optimizer = torch.optim.Adam(model.parameters(), lr=cfg.learning_rate)
    loss_fn = nn.CrossEntropyLoss()
    generator = torch.Generator().manual_seed(seed)
    best_state = {k: v.clone() for k, v in model.state_dict().items()}
    best_acc = -1.0
    since_best = 0
    for _ in range(cfg.epochs):
        model.train()
        order = torch.randperm(len(x), generator=generator)
        for start in range(0, len(x), cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            optimizer.zero_grad()
            loss = loss_fn(model(x[idx]), y_idx[idx])
            loss.backward()
            optimizer.step()
        val_acc = float(np.mean(_predict(model, val_x, cfg.batch_size) - 1
                                == val_y_idx.numpy()))
        if val_acc > best_acc:
            best_acc = val_acc
            best_state = {k: v.clone() for k, v in model.state_dict().items()}
            since_best = 0
        else:
            since_best += 1
            if since_best > cfg.patience:
                break
    model.load_state_dict(best_state)
    return model


def harness_train_eval(cfg: HarnessConfig) -> list[dict]:
    """One results row per (seed, paradigm)."""
    x_np, y_np, meta = load_xy(cfg.train_x, cfg.train_y)
    scheme = _check_scheme(cfg.model, meta, cfg.train_x)
    tests = {}
    for paradigm, path in cfg.test_x.items():
        tx, ty, tmeta = load_xy(path, cfg.test_y.get(paradigm))
        _check_scheme(cfg.model, tmeta, path)
        tests[paradigm] = (torch.from_numpy(tx), ty)
    x = torch.from_numpy(x_np)
    y_idx = torch.from_numpy(y_np - 1)
    n_val = max(1, int(cfg.val_frac * len(x)))
    rows = []
    for seed in cfg.seeds:
        model = _train_one(
            cfg.model, x[:-n_val], y_idx[:-n_val], x[-n_val:], y_idx[-n_val:], cfg, seed
        )
        for paradigm, (tx, ty) in tests.items():
            preds = _predict(model, tx, cfg.batch_size)
            rows.append({
                "model": cfg.model, "scheme": scheme, "paradigm": paradigm,
                "seed": seed, **scores(preds, ty),
            })
    return rows


def append_results(rows: list[dict], path) -> None:
    """Append to a results.csv, writing the schema header when absent."""
    fresh = not os.path.exists(path)
    with open(path, "a") as fh:
        if fresh:
            fh.write(",".join(RESULT_FIELDS) + "\n")
        for row in rows:
            fh.write(",".join(
                repr(row[f]) if isinstance(row[f], float) else str(row[f])
                for f in RESULT_FIELDS
            ) + "\n")
