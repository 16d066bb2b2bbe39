"""Flat key-value configuration files.

One file configures the whole stack; keys mirror the scenario table names
plus modem framing, class templates, training and experiment settings.
Unknown keys are rejected (typo protection). Values are scalars or
comma-separated lists; `#` starts a comment. All keys are optional and
default to the desk setup.
"""

from dataclasses import dataclass, field

import numpy as np

from .channel import (
    DEFAULT_HDS_TEMPLATE,
    DEFAULT_LDS_TEMPLATE,
    PdpTemplate,
    ScenarioConfig,
)
from .modem import ModemConfig
from .nn.train import TrainConfig

_SCENARIO_KEYS = {
    "room_x",
    "room_y",
    "room_z",
    "tx_x",
    "tx_y",
    "tx_z",
    "rx_height_min",
    "rx_height_max",
    "alpha",
    "tx_semiangle_deg",
    "rx_fov_deg",
    "rx_elevation_min_deg",
    "rx_elevation_max_deg",
    "rx_rotation_min_deg",
    "rx_rotation_max_deg",
    "detector_area_m2",
    "sample_rate_hz",
    "n_paths",
}
_MODEM_KEYS = {"n_f", "n_s", "l_cp", "l_s", "pilot_symbols", "bias_sigma", "qam_order"}
_TEMPLATE_KEYS = {"lds_tail", "hds_tail", "lds_los_ref", "hds_los_ref"}
_TRAIN_KEYS = {
    "lr0",
    "lr_decay",
    "decay_every",
    "epochs",
    "batch_size",
    "l2",
    "val_fraction",
    "norm_scale",
}
_EXPERIMENT_KEYS = {
    "snr_min",
    "snr_max",
    "snr_step",
    "trials",
    "time_duration_s",
    "class_dwell_s",
    "slots_per_second",
    "estimators",
}
_ALL_KEYS = _SCENARIO_KEYS | _MODEM_KEYS | _TEMPLATE_KEYS | _TRAIN_KEYS | _EXPERIMENT_KEYS


@dataclass(frozen=True)
class ExperimentConfig:
    """Settings for the evaluation runs."""

    snr_grid: tuple = tuple(float(s) for s in range(15, 31))
    trials: int = 2000
    estimators: tuple = ("ls", "mmse", "hds", "adaptive")
    time_duration_s: int = 90
    class_dwell_s: int = 10
    slots_per_second: int = 100

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if not self.snr_grid:
            raise ValueError("snr grid must be nonempty")
        if self.class_dwell_s < 1 or self.time_duration_s < 1:
            raise ValueError("time experiment durations must be positive")
        if self.slots_per_second < 1:
            raise ValueError("slots_per_second must be at least 1")


@dataclass(frozen=True)
class Config:
    """Everything a run needs, bundled."""

    scenario: ScenarioConfig = field(default_factory=ScenarioConfig)
    modem: ModemConfig = field(default_factory=ModemConfig)
    lds_template: PdpTemplate = DEFAULT_LDS_TEMPLATE
    hds_template: PdpTemplate = DEFAULT_HDS_TEMPLATE
    train: TrainConfig = field(default_factory=TrainConfig)
    experiment: ExperimentConfig = field(default_factory=ExperimentConfig)


def parse_config_text(text):
    """Parse `key = value` lines into a dict; rejects unknown/duplicate keys."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in _ALL_KEYS:
            raise ValueError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ValueError(f"line {lineno}: duplicate key {key!r}")
        if not value:
            raise ValueError(f"line {lineno}: empty value for {key!r}")
        values[key] = value
    return values


def _floats(value):
    return tuple(float(v) for v in value.split(","))


def build_config(values):
    """Turn a parsed key dict into a Config with validation."""
    v = dict(values)

    def pop(key, cast, default):
        return cast(v.pop(key)) if key in v else default

    base_s = ScenarioConfig()
    scenario = ScenarioConfig(
        room_dims=(
            pop("room_x", float, base_s.room_dims[0]),
            pop("room_y", float, base_s.room_dims[1]),
            pop("room_z", float, base_s.room_dims[2]),
        ),
        tx_position=(
            pop("tx_x", float, base_s.tx_position[0]),
            pop("tx_y", float, base_s.tx_position[1]),
            pop("tx_z", float, base_s.tx_position[2]),
        ),
        rx_height_range=(
            pop("rx_height_min", float, base_s.rx_height_range[0]),
            pop("rx_height_max", float, base_s.rx_height_range[1]),
        ),
        reflection_coeff=pop("alpha", float, base_s.reflection_coeff),
        tx_semiangle_deg=pop("tx_semiangle_deg", float, base_s.tx_semiangle_deg),
        rx_fov_deg=pop("rx_fov_deg", float, base_s.rx_fov_deg),
        rx_elevation_range_deg=(
            pop("rx_elevation_min_deg", float, base_s.rx_elevation_range_deg[0]),
            pop("rx_elevation_max_deg", float, base_s.rx_elevation_range_deg[1]),
        ),
        rx_rotation_range_deg=(
            pop("rx_rotation_min_deg", float, base_s.rx_rotation_range_deg[0]),
            pop("rx_rotation_max_deg", float, base_s.rx_rotation_range_deg[1]),
        ),
        detector_area_m2=pop("detector_area_m2", float, base_s.detector_area_m2),
        sample_rate_hz=pop("sample_rate_hz", float, base_s.sample_rate_hz),
        n_paths=pop("n_paths", int, base_s.n_paths),
    )

    base_m = ModemConfig()
    modem = ModemConfig(
        n_f=pop("n_f", int, base_m.n_f),
        n_s=pop("n_s", int, base_m.n_s),
        l_cp=pop("l_cp", int, base_m.l_cp),
        l_s=pop("l_s", int, base_m.l_s),
        pilot_symbol_indices=pop(
            "pilot_symbols",
            lambda s: tuple(int(x) for x in s.split(",")),
            base_m.pilot_symbol_indices,
        ),
        bias_sigma=pop("bias_sigma", float, base_m.bias_sigma),
        qam_order=pop("qam_order", int, base_m.qam_order),
    )

    lds = PdpTemplate(
        tail=np.array(pop("lds_tail", _floats, tuple(DEFAULT_LDS_TEMPLATE.tail))),
        los_reference=pop("lds_los_ref", float, DEFAULT_LDS_TEMPLATE.los_reference),
    )
    hds = PdpTemplate(
        tail=np.array(pop("hds_tail", _floats, tuple(DEFAULT_HDS_TEMPLATE.tail))),
        los_reference=pop("hds_los_ref", float, DEFAULT_HDS_TEMPLATE.los_reference),
    )

    base_t = TrainConfig()
    train_cfg = TrainConfig(
        lr0=pop("lr0", float, base_t.lr0),
        lr_decay=pop("lr_decay", float, base_t.lr_decay),
        decay_every=pop("decay_every", int, base_t.decay_every),
        epochs=pop("epochs", int, base_t.epochs),
        batch_size=pop("batch_size", int, base_t.batch_size),
        l2=pop("l2", float, base_t.l2),
        val_fraction=pop("val_fraction", float, base_t.val_fraction),
        norm_scale=pop("norm_scale", float, None),
    )

    snr_min = pop("snr_min", float, 15.0)
    snr_max = pop("snr_max", float, 30.0)
    snr_step = pop("snr_step", float, 1.0)
    if snr_step <= 0 or snr_max < snr_min:
        raise ValueError("snr grid must have snr_min <= snr_max and snr_step > 0")
    grid = tuple(
        float(s) for s in np.arange(snr_min, snr_max + snr_step / 2.0, snr_step)
    )
    base_e = ExperimentConfig()
    experiment = ExperimentConfig(
        snr_grid=grid,
        trials=pop("trials", int, base_e.trials),
        estimators=pop(
            "estimators",
            lambda s: tuple(x.strip() for x in s.split(",")),
            base_e.estimators,
        ),
        time_duration_s=pop("time_duration_s", int, base_e.time_duration_s),
        class_dwell_s=pop("class_dwell_s", int, base_e.class_dwell_s),
        slots_per_second=pop("slots_per_second", int, base_e.slots_per_second),
    )
    if v:
        raise ValueError(f"unhandled keys: {sorted(v)}")
    return Config(
        scenario=scenario,
        modem=modem,
        lds_template=lds,
        hds_template=hds,
        train=train_cfg,
        experiment=experiment,
    )


def load_config(path=None):
    """Config from a file path, or the defaults when path is None."""
    if path is None:
        return Config()
    with open(path, "r", encoding="utf-8") as f:
        return build_config(parse_config_text(f.read()))
