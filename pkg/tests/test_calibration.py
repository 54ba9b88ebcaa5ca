import numpy as np

from branchsig.extend import RoughVolParams
from branchsig.models.calibration import CalibrationConfig, calibrate, extended_features
from branchsig.models.training import TrainConfig


def test_calibration_small():
    cfg = CalibrationConfig(RoughVolParams(steps=200, seed=1), TrainConfig(epochs=60, seed=1, widths=(16, 8)))
    rep = calibrate(cfg)
    assert rep.mse_vol_with <= rep.mse_vol_without
    assert rep.mse_stock_with <= rep.mse_stock_without
    s = rep.summary()
    assert s["seed"] == 1 and s["config"]["train"]["epochs"] == 60
    assert rep.vol["with_ext"].shape == (201,)
    assert np.isfinite(rep.shuffle_mse)


def test_extended_features_superset():
    cfg = CalibrationConfig(RoughVolParams(steps=50, seed=0), TrainConfig(epochs=1, widths=(4,), m=2))
    rep = calibrate(cfg)
    ext = rep.training.extension(np.zeros((3, 3)))
    assert ext.shape == (3, 2)
