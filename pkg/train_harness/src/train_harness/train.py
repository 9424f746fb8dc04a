"""Training loop: Adam, focal loss, early stopping on validation loss.

The checkpoint keeps the best-validation weights together with the model
spec, the architecture record, and the input normalization statistics that
were frozen from the training split, so inference needs nothing else.
"""

from __future__ import annotations

import json
import logging

import numpy as np
import torch

from .data import FrameTensors, channel_stats, load_frames
from .losses import focal_loss
from .models import ModelSpec, architecture_metadata, build_model, parameter_count

log = logging.getLogger(__name__)

ADAM_INITIAL_LR = 1e-4  # reference training configuration


class DivergenceError(RuntimeError):
    pass


def _batches(frames: list[FrameTensors], batch_size: int, generator=None):
    order = torch.randperm(len(frames), generator=generator).tolist()
    for start in range(0, len(order), batch_size):
        chunk = [frames[i] for i in order[start:start + batch_size]]
        x = torch.from_numpy(np.stack([f.features for f in chunk]))
        y = torch.from_numpy(np.stack([f.gt for f in chunk]))[:, None]
        v = torch.from_numpy(np.stack([f.valid for f in chunk]))[:, None]
        yield x, y, v


def _epoch_loss(model, frames, spec, optimizer=None, generator=None) -> float:
    training = optimizer is not None
    model.train(training)
    total, seen = 0.0, 0
    with torch.set_grad_enabled(training):
        for x, y, v in _batches(frames, spec.batch_size, generator):
            p = model(x)
            loss = focal_loss(p, y, spec.loss_gamma, v)
            if training:
                optimizer.zero_grad()
                loss.backward()
                optimizer.step()
            value = float(loss.detach())
            if not np.isfinite(value):
                raise DivergenceError(
                    f"non-finite loss {value} at sample {seen}; "
                    f"lr={spec.learning_rate}, gamma={spec.loss_gamma}"
                )
            total += value * x.shape[0]
            seen += x.shape[0]
    return total / max(seen, 1)


def train(spec: ModelSpec, tensor_dir, checkpoint_path, log_path=None) -> dict:
    """Fit a model on a featurized directory; returns the training log.

    Frames are split train/validation by ``spec.val_fraction`` (at least one
    validation frame). Training stops when validation loss has not improved
    for ``spec.patience`` epochs, and the checkpoint holds the best weights.
    """
    torch.manual_seed(spec.seed)
    frames = load_frames(tensor_dir)
    n_val = max(1, int(round(len(frames) * spec.val_fraction)))
    if len(frames) < 2:
        n_val = 0
    val_frames = frames[:n_val]
    train_frames = frames[n_val:]

    mean, std = channel_stats(train_frames)
    if spec.in_channels != train_frames[0].features.shape[0]:
        raise ValueError(
            f"spec expects {spec.in_channels} channels, tensors have "
            f"{train_frames[0].features.shape[0]}"
        )
    model = build_model(spec)
    model.normalize.set_stats(mean, std)
    optimizer = torch.optim.Adam(model.parameters(), lr=spec.learning_rate)
    sampler = torch.Generator().manual_seed(spec.seed)

    history = []
    best_val = float("inf")
    best_epoch = -1
    for epoch in range(spec.max_epochs):
        train_loss = _epoch_loss(model, train_frames, spec, optimizer, sampler)
        val_loss = (_epoch_loss(model, val_frames, spec)
                    if val_frames else train_loss)
        history.append({"epoch": epoch, "train_loss": train_loss,
                        "val_loss": val_loss})
        log.info("epoch %d train %.6f val %.6f", epoch, train_loss, val_loss)
        if val_loss < best_val:
            best_val = val_loss
            best_epoch = epoch
            torch.save(
                {
                    "state_dict": model.state_dict(),
                    "spec": spec.to_dict(),
                    "architecture": architecture_metadata(spec),
                    "normalization": {"mean": mean.tolist(), "std": std.tolist()},
                    "best_epoch": epoch,
                    "val_loss": val_loss,
                    "parameters": parameter_count(model),
                },
                checkpoint_path,
            )
        if epoch - best_epoch >= spec.patience:
            break

    result = {"history": history, "best_epoch": best_epoch, "best_val": best_val,
              "stopped_epoch": history[-1]["epoch"]}
    if log_path is not None:
        with open(log_path, "w") as f:
            json.dump(result, f, indent=2)
            f.write("\n")
    return result


def load_checkpoint(path) -> tuple[torch.nn.Module, ModelSpec, dict]:
    payload = torch.load(path, map_location="cpu", weights_only=False)
    spec = ModelSpec(**payload["spec"])
    model = build_model(spec)
    model.load_state_dict(payload["state_dict"])
    model.eval()
    return model, spec, payload
