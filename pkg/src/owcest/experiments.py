"""Reproducible evaluation runs producing CSV rows.

Every experiment is a pure function of its configuration and seed: channels,
payload bits and noise are drawn from counter-derived streams keyed by
(seed, grid point, trial), so reruns emit identical bytes regardless of
batching. Reported NMSE is the mean of per-slot error ratios.

Estimator names:
    ls          pilot-averaged LS, linearly interpolated to the full band
    mmse        Wiener filter with ensemble correlations and genie noise power
    hds         the high-delay-spread network alone
    adaptive    pre-estimate, classify, branch-network dispatch
    direct      direct signal detection (no channel correction); in NMSE
                runs the flat pilot-gain estimate represents this receiver
"""

import csv

import numpy as np

from .channel import DelayClass, frequency_response, sample_realization
from .classical import (
    direct_detection_gain,
    effective_pilot_noise_var,
    ls_interpolate,
    mmse_estimate,
)
from .dataset import MIXED_TAG, rejection_sample_class
from .metrics import ber, nmse
from .modem import (
    apply_channel,
    assemble_slot,
    default_pattern,
    demodulate,
    equalize_and_decode,
    modulate,
    noise_std_for_snr,
    pilot_observations,
)
from .nn.model import forward
from .rng import child_rng
from .selector import adaptive_estimate_batch

ESTIMATORS = ("ls", "mmse", "hds", "adaptive", "direct")

NMSE_SNR_COLUMNS = ("snr_db", "estimator", "nmse_mean", "nmse_stderr", "trials", "seed")
NMSE_TIME_COLUMNS = ("t_s", "active_class", "estimator", "nmse_mean")
BER_COLUMNS = ("snr_db", "estimator", "ber", "bits_counted")


def _check_estimators(names, bank, corr):
    for name in names:
        if name not in ESTIMATORS:
            raise ValueError(f"unknown estimator {name!r}; expected one of {ESTIMATORS}")
    if ("hds" in names or "adaptive" in names) and bank is None:
        raise ValueError("neural estimators requested but no weight bank given")
    if "mmse" in names and corr is None:
        raise ValueError("mmse requested but no correlation set given")


def _simulate_slot(cfg, ch, snr_db, rng):
    """One slot through the link; returns observables for every estimator."""
    modem = cfg.modem
    pattern = default_pattern(modem)
    bits = rng.integers(0, 2, modem.bits_per_slot)
    grid = assemble_slot(bits, pattern, modem)
    std = noise_std_for_snr(grid, ch, snr_db, modem)
    rx = apply_channel(modulate(grid, modem), ch, std, rng, modem)
    out = demodulate(rx, modem)
    return {
        "bits": bits,
        "grid_out": out,
        "obs": pilot_observations(out, pattern),
        "h_true": frequency_response(ch, modem.n_f),
        "noise_std": std,
        "pattern": pattern,
    }


def _draw_channel(cfg, delay_class, seed_key):
    if delay_class == MIXED_TAG:
        return sample_realization(cfg.scenario, child_rng(*seed_key))
    return rejection_sample_class(
        cfg.scenario,
        delay_class,
        seed_key,
        lds=cfg.lds_template,
        hds=cfg.hds_template,
        n_f=cfg.modem.n_f,
    )


def _classical_estimates(cfg, slots, names, corr):
    """Per-slot estimates for the non-neural estimators."""
    modem = cfg.modem
    out = {name: [] for name in names if name in ("ls", "mmse", "direct")}
    for slot in slots:
        h_ls = slot["obs"].mean(axis=1)
        pattern = slot["pattern"]
        if "ls" in out:
            out["ls"].append(ls_interpolate(h_ls, pattern, modem.n_f))
        if "mmse" in out:
            nv = effective_pilot_noise_var(slot["noise_std"], modem, pattern)
            out["mmse"].append(mmse_estimate(h_ls, corr, nv))
        if "direct" in out:
            gain = direct_detection_gain(slot["grid_out"], pattern)
            out["direct"].append(np.full(modem.n_f, gain, dtype=complex))
    return {k: np.asarray(v) for k, v in out.items()}


def _neural_estimates(cfg, slots, names, bank):
    out = {}
    if not slots or not ({"hds", "adaptive"} & set(names)):
        return out
    obs = np.stack([slot["obs"] for slot in slots])
    if "hds" in names:
        out["hds"] = forward(bank.hds, obs)
    if "adaptive" in names:
        h, _, _ = adaptive_estimate_batch(obs, bank)
        out["adaptive"] = h
    return out


def _estimates_for(cfg, slots, names, bank, corr):
    ests = _classical_estimates(cfg, slots, names, corr)
    ests.update(_neural_estimates(cfg, slots, names, bank))
    return ests


def run_nmse_vs_snr(cfg, seed, bank=None, corr=None, delay_class=MIXED_TAG):
    """Mean NMSE per (SNR point, estimator) over fresh random channels."""
    exp = cfg.experiment
    _check_estimators(exp.estimators, bank, corr)
    rows = []
    for si, snr in enumerate(exp.snr_grid):
        slots = []
        for t in range(exp.trials):
            ch = _draw_channel(cfg, delay_class, (seed, si, t, 0))
            slots.append(_simulate_slot(cfg, ch, snr, child_rng(seed, si, t, 1)))
        ests = _estimates_for(cfg, slots, exp.estimators, bank, corr)
        truth = np.stack([slot["h_true"] for slot in slots])
        for name in exp.estimators:
            vals = np.array([nmse(e, h) for e, h in zip(ests[name], truth)])
            rows.append(
                {
                    "snr_db": snr,
                    "estimator": name,
                    "nmse_mean": float(vals.mean()),
                    "nmse_stderr": float(
                        vals.std(ddof=1) / np.sqrt(len(vals)) if len(vals) > 1 else 0.0
                    ),
                    "trials": exp.trials,
                    "seed": seed,
                }
            )
    return rows


_CLASS_CYCLE = (DelayClass.LDS, DelayClass.MDS, DelayClass.HDS)


def run_nmse_vs_time(cfg, seed, bank=None, corr=None, snr_db=20.0):
    """Time trace with the channel class cycling every dwell period."""
    exp = cfg.experiment
    _check_estimators(exp.estimators, bank, corr)
    rows = []
    for t_s in range(exp.time_duration_s):
        active = _CLASS_CYCLE[(t_s // exp.class_dwell_s) % len(_CLASS_CYCLE)]
        slots = []
        for i in range(exp.slots_per_second):
            ch = _draw_channel(cfg, active, (seed, t_s, i, 0))
            slots.append(_simulate_slot(cfg, ch, snr_db, child_rng(seed, t_s, i, 1)))
        ests = _estimates_for(cfg, slots, exp.estimators, bank, corr)
        truth = np.stack([slot["h_true"] for slot in slots])
        for name in exp.estimators:
            vals = [nmse(e, h) for e, h in zip(ests[name], truth)]
            rows.append(
                {
                    "t_s": t_s,
                    "active_class": active.name,
                    "estimator": name,
                    "nmse_mean": float(np.mean(vals)),
                }
            )
    return rows


def run_ber_vs_snr(cfg, seed, bank=None, corr=None, delay_class=MIXED_TAG):
    """Full transmit-channel-estimate-equalize-demap chain per trial.

    The 'direct' receiver decodes the demodulated grid without channel
    correction (unit estimate), which is what drives its error floor.
    """
    exp = cfg.experiment
    _check_estimators(exp.estimators, bank, corr)
    modem = cfg.modem
    rows = []
    for si, snr in enumerate(exp.snr_grid):
        slots = []
        for t in range(exp.trials):
            ch = _draw_channel(cfg, delay_class, (seed, si, t, 0))
            slots.append(_simulate_slot(cfg, ch, snr, child_rng(seed, si, t, 1)))
        names = [n for n in exp.estimators if n != "direct"]
        ests = _estimates_for(cfg, slots, names, bank, corr)
        if "direct" in exp.estimators:
            ests["direct"] = np.ones((len(slots), modem.n_f), dtype=complex)
        errors = {name: 0 for name in exp.estimators}
        counted = {name: 0 for name in exp.estimators}
        for i, slot in enumerate(slots):
            for name in exp.estimators:
                decoded = equalize_and_decode(
                    slot["grid_out"], ests[name][i], slot["pattern"], modem
                )
                errors[name] += int(np.sum(decoded != slot["bits"]))
                counted[name] += slot["bits"].size
        for name in exp.estimators:
            rows.append(
                {
                    "snr_db": snr,
                    "estimator": name,
                    "ber": errors[name] / counted[name],
                    "bits_counted": counted[name],
                }
            )
    return rows


def write_csv(path, columns, rows):
    """RFC 4180 style CSV with a header row; identical bytes on rerun."""
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.DictWriter(f, fieldnames=list(columns))
        writer.writeheader()
        for row in rows:
            writer.writerow(row)
