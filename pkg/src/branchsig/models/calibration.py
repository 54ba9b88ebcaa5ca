"""Regression calibration of V and S with and without the learned extension."""
from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from ..extend import RoughVolParams, simulate_roughvol
from ..sigcore import SampledPath
from .sigmodels import fit_linear, ito_features
from .training import TrainConfig, TrainResult, train_extension


@dataclass
class CalibrationConfig:
    roughvol: RoughVolParams = field(default_factory=RoughVolParams)
    train: TrainConfig = field(default_factory=TrainConfig)
    level: int = 2

    def to_dict(self) -> dict:
        return {"roughvol": asdict(self.roughvol), "train": self.train.to_dict(),
                "level": self.level}


@dataclass
class CalibrationReport:
    mse_vol_with: float
    mse_vol_without: float
    mse_stock_with: float
    mse_stock_without: float
    shuffle_mse: float
    training: TrainResult
    times: np.ndarray
    vol: dict
    stock: dict
    config: CalibrationConfig
    flags: dict = field(default_factory=dict)

    def summary(self) -> dict:
        return {
            "mse_vol_with_extension": self.mse_vol_with,
            "mse_vol_without_extension": self.mse_vol_without,
            "mse_stock_with_extension": self.mse_stock_with,
            "mse_stock_without_extension": self.mse_stock_without,
            "shuffle_mse": self.shuffle_mse,
            "final_physics_loss": float(self.training.meta["final_physics"]),
            "final_shuffle_loss": float(self.training.meta["final_shuffle"]),
            "seed": self.config.roughvol.seed,
            "config": self.config.to_dict(),
            "flags": self.flags,
        }


def extended_features(drivers: SampledPath, extension: np.ndarray, level: int = 2) -> np.ndarray:
    vals = np.column_stack([drivers.values, extension])
    return ito_features(SampledPath(drivers.times, vals), level)


def calibrate(cfg: CalibrationConfig) -> CalibrationReport:
    """Simulate, train the extension, then regress V and S on depth-2 features."""
    sim = simulate_roughvol(cfg.roughvol)
    result = train_extension(sim.drivers, sim.V, cfg.train)
    ext = result.extension(sim.drivers.values)
    with_ext = extended_features(sim.drivers, ext, cfg.level)
    without = ito_features(sim.drivers, cfg.level)
    out = {}
    flags = {"clamp_events": sim.clamp_events}
    for name, target in (("vol", sim.V.values[:, 0]), ("stock", sim.S.values[:, 0])):
        fw = fit_linear(with_ext, target)
        fo = fit_linear(without, target)
        flags[f"{name}_ridge_with"] = fw.ridge
        flags[f"{name}_ridge_without"] = fo.ridge
        out[name] = {"truth": target, "with_ext": fw.predict(with_ext),
                     "without_ext": fo.predict(without), "mse": (fw.mse, fo.mse)}
    return CalibrationReport(
        mse_vol_with=out["vol"]["mse"][0], mse_vol_without=out["vol"]["mse"][1],
        mse_stock_with=out["stock"]["mse"][0], mse_stock_without=out["stock"]["mse"][1],
        shuffle_mse=float(result.shuffle_matrix.mean()), training=result,
        times=sim.drivers.times, vol=out["vol"], stock=out["stock"], config=cfg, flags=flags)
