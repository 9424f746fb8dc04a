import json

import numpy as np
import pytest

from train_harness.models import ModelSpec
from train_harness.train import DivergenceError, load_checkpoint, train

from datagen import make_featurized_dir


def small_spec(**overrides):
    base = dict(view="sv", resolution=32, in_channels=4, arch="unet",
                learning_rate=2e-3, patience=4, max_epochs=40, batch_size=4,
                seed=1)
    base.update(overrides)
    return ModelSpec(**base)


class TestOverfit:
    def test_twenty_frame_overfit_drops_90_percent(self, tmp_path, rng):
        data = make_featurized_dir(tmp_path / "data", rng, n_frames=20,
                                   rows=32, width=128)
        result = train(small_spec(), data, tmp_path / "ckpt.pt",
                       tmp_path / "log.json")
        history = result["history"]
        first = history[0]["train_loss"]
        best = min(h["train_loss"] for h in history)
        assert best <= 0.1 * first, f"loss only fell {first} -> {best}"
        log = json.loads((tmp_path / "log.json").read_text())
        assert [h["epoch"] for h in log["history"]] == list(range(len(history)))


class TestDeterminism:
    def test_frozen_seed_same_first_epoch(self, tmp_path, rng):
        data = make_featurized_dir(tmp_path / "data", rng, n_frames=6,
                                   rows=32, width=64)
        losses = []
        for run in ("a", "b"):
            result = train(small_spec(max_epochs=1), data,
                           tmp_path / f"{run}.pt")
            losses.append(result["history"][0]["train_loss"])
        assert losses[0] == losses[1]


class TestEarlyStopping:
    def test_halts_within_patience_of_best(self, tmp_path, rng):
        data = make_featurized_dir(tmp_path / "data", rng, n_frames=8,
                                   rows=32, width=64)
        patience = 3
        result = train(small_spec(patience=patience, max_epochs=100), data,
                       tmp_path / "ckpt.pt")
        assert result["stopped_epoch"] - result["best_epoch"] <= patience

    def test_checkpoint_holds_best_val_weights(self, tmp_path, rng):
        data = make_featurized_dir(tmp_path / "data", rng, n_frames=8,
                                   rows=32, width=64)
        result = train(small_spec(max_epochs=6, patience=10), data,
                       tmp_path / "ckpt.pt")
        model, spec, payload = load_checkpoint(tmp_path / "ckpt.pt")
        assert payload["best_epoch"] == result["best_epoch"]
        assert payload["val_loss"] == pytest.approx(result["best_val"])
        assert payload["architecture"]["encoder_widths"] == [32, 64, 128]
        assert len(payload["normalization"]["mean"]) == spec.in_channels


class TestDivergence:
    def test_nan_loss_aborts_with_diagnostics(self, tmp_path, rng):
        data = make_featurized_dir(tmp_path / "data", rng, n_frames=4,
                                   rows=32, width=64)
        spec = small_spec(learning_rate=1e18, max_epochs=10)
        with pytest.raises(DivergenceError, match="lr="):
            train(spec, data, tmp_path / "ckpt.pt")


class TestInputValidation:
    def test_channel_mismatch(self, tmp_path, rng):
        data = make_featurized_dir(tmp_path / "data", rng, n_frames=4,
                                   rows=32, width=64)
        with pytest.raises(ValueError, match="channels"):
            train(small_spec(in_channels=9), data, tmp_path / "ckpt.pt")

    def test_normals_add_channels(self, tmp_path, rng):
        data = make_featurized_dir(tmp_path / "data", rng, n_frames=4,
                                   rows=32, width=64, with_normals=True)
        result = train(small_spec(in_channels=8, max_epochs=1), data,
                       tmp_path / "ckpt.pt")
        assert result["history"]
