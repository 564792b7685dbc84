"""Experiment configuration: one object, one JSON file, CLI overrides."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

from .kernels import KernelConfig
from .mpc import MpcConfig
from .occupants import OccupantConfig, default_occupant
from .plant import PlantParams

VALID_METHODS = ("baseline", "static", "contextual")


@dataclass
class ExperimentConfig:
    """Everything a full run needs; defaults mirror the documented setup."""

    seeds: list[int] = field(default_factory=lambda: list(range(8)))
    days: int = 60
    methods: tuple[str, ...] = VALID_METHODS
    occupant: OccupantConfig = field(default_factory=lambda: default_occupant("energy"))
    kernel: KernelConfig = field(default_factory=KernelConfig)
    bound: float = 5.0
    beta: float = 1.0
    grid_n_theta1: int = 14
    grid_n_theta2: int = 25
    seed_theta1: float = 0.0954
    seed_theta2: float = 22.0
    mpc: MpcConfig = field(default_factory=MpcConfig)
    plant: PlantParams = field(default_factory=PlantParams)
    arx_ridge: float = 1e-3
    excitation_lower: float = 19.0
    excitation_upper: float = 24.0
    excitation_start_day: int = 35
    excitation_days: int = 7
    validation_days: int = 14
    init_zone_temp: float = 20.0
    init_wall_temp: float = 15.0
    out_dir: str = "runs"

    def __post_init__(self):
        if self.days < 1:
            raise ValueError("days must be at least 1")
        if not self.seeds:
            raise ValueError("need at least one seed")
        if not self.methods:
            raise ValueError("need at least one method")
        for m in self.methods:
            if m not in VALID_METHODS:
                raise ValueError(f"unknown method: {m}")

    @property
    def tuning_start_day(self) -> int:
        """Seed day index: the first MPC day, one day before tuning."""
        return self.excitation_start_day + self.excitation_days


def default_config() -> ExperimentConfig:
    return ExperimentConfig()


def config_to_dict(cfg: ExperimentConfig) -> dict:
    d = asdict(cfg)
    d["methods"] = list(cfg.methods)
    d["kernel"]["lengthscales"] = list(cfg.kernel.lengthscales)
    return d


def config_from_dict(d: dict) -> ExperimentConfig:
    d = dict(d)
    occ = d.pop("occupant", {})
    ker = d.pop("kernel", {})
    mpc = d.pop("mpc", {})
    plant = d.pop("plant", {})
    if "lengthscales" in ker:
        ker["lengthscales"] = tuple(ker["lengthscales"])
    cfg = ExperimentConfig(
        occupant=OccupantConfig(**occ),
        kernel=KernelConfig(**ker),
        mpc=MpcConfig(**mpc),
        plant=PlantParams(**plant),
        **{k: tuple(v) if k == "methods" else v for k, v in d.items()},
    )
    return cfg


def save_config(cfg: ExperimentConfig, path) -> None:
    with open(path, "w") as fh:
        json.dump(config_to_dict(cfg), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_config(path) -> ExperimentConfig:
    with open(path) as fh:
        return config_from_dict(json.load(fh))
