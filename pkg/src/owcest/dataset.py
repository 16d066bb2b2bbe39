"""Training-corpus generation, labeling, persistence and splitting.

A sample stores the noisy per-pilot-symbol LS observation (33 x 4 complex),
the true full-band response (324 complex), the delay-spread label derived
from the true response, and the SNR the slot was simulated at.

File layout (magic b"OWCD", all little-endian):

    magic           4 bytes
    version         u16
    class_tag       u8   (0 LDS, 1 MDS, 2 HDS, 3 MIXED)
    sample_count    u64
    n_f             u32
    pilot_tones     u32
    pilot_symbols   u32
    snr_min, snr_max    f32 each
    generator_seed  u64
    samples         contiguous records:
        pilot_ls    f32 x (tones * symbols * 2), real/imag interleaved
        true_h      f32 x (n_f * 2)
        label       u8
        snr_db      f32
"""

import os
import struct
import tempfile
from dataclasses import dataclass

import numpy as np

from .channel import (
    DEFAULT_HDS_TEMPLATE,
    DEFAULT_LDS_TEMPLATE,
    DelayClass,
    frequency_response,
    impulse_taps,
    label_class,
    sample_realization,
)
from .modem import (
    ModemConfig,
    apply_channel,
    assemble_slot,
    default_pattern,
    demodulate,
    modulate,
    noise_std_for_snr,
    pilot_observations,
)
from .rng import child_rng
from .serialization import FormatError

DATASET_MAGIC = b"OWCD"
DATASET_VERSION = 1
MIXED_TAG = 3

_CLASS_NAMES = {0: "LDS", 1: "MDS", 2: "HDS", MIXED_TAG: "MIXED"}


@dataclass
class Dataset:
    """In-memory corpus with its header fields."""

    class_tag: int
    n_f: int
    snr_range: tuple
    seed: int
    pilot_ls: np.ndarray  # (N, tones, symbols) complex64
    true_h: np.ndarray  # (N, n_f) complex64
    labels: np.ndarray  # (N,) uint8
    snr_db: np.ndarray  # (N,) float32

    def __len__(self):
        return self.pilot_ls.shape[0]

    @property
    def class_name(self):
        return _CLASS_NAMES.get(self.class_tag, str(self.class_tag))

    def subset(self, rows):
        return Dataset(
            class_tag=self.class_tag,
            n_f=self.n_f,
            snr_range=self.snr_range,
            seed=self.seed,
            pilot_ls=self.pilot_ls[rows],
            true_h=self.true_h[rows],
            labels=self.labels[rows],
            snr_db=self.snr_db[rows],
        )


def _class_seed_key(seed):
    return seed if isinstance(seed, tuple) else (seed,)


def rejection_sample_class(
    cfg,
    delay_class,
    seed,
    lds=DEFAULT_LDS_TEMPLATE,
    hds=DEFAULT_HDS_TEMPLATE,
    n_f=324,
    cap=10_000,
):
    """Draw realizations until the delay-spread label matches.

    Deterministic per seed (which may be an int or a tuple of ints). Raises
    after ``cap`` attempts, reporting the observed acceptance rate.
    """
    key = _class_seed_key(seed)
    want = DelayClass(delay_class)
    for attempt in range(cap):
        r = sample_realization(cfg, child_rng(*key, attempt))
        taps = impulse_taps(r, n_f, max(lds.tail.size, hds.tail.size) + 1)
        if label_class(taps, lds, hds) == want:
            return r
    raise RuntimeError(
        f"no {want.name} channel in {cap} draws "
        f"(acceptance rate below {1.0 / cap:.2%} for these templates)"
    )


def synthesize_sample(scen_cfg, modem_cfg, pattern, realization, snr_db, rng):
    """Simulate one pilot slot through the channel; returns (pilot_ls, h)."""
    bits = rng.integers(0, 2, modem_cfg.bits_per_slot)
    grid = assemble_slot(bits, pattern, modem_cfg)
    h_true = frequency_response(realization, modem_cfg.n_f)
    if np.isfinite(snr_db):
        std = noise_std_for_snr(grid, realization, snr_db, modem_cfg)
    else:
        std = 0.0
    rx = apply_channel(modulate(grid, modem_cfg), realization, std, rng, modem_cfg)
    obs = pilot_observations(demodulate(rx, modem_cfg), pattern)
    return obs, h_true


def generate_dataset(
    scen_cfg,
    modem_cfg,
    delay_class,
    count,
    snr_range,
    seed,
    path=None,
    lds=DEFAULT_LDS_TEMPLATE,
    hds=DEFAULT_HDS_TEMPLATE,
):
    """Generate a labeled corpus; optionally persist it (atomically).

    ``delay_class`` is a DelayClass for a class-conditioned corpus or
    MIXED_TAG for unconditioned draws. SNR is drawn uniformly per sample
    from ``snr_range``; identical bytes for identical arguments.
    """
    if count < 1:
        raise ValueError("count must be at least 1")
    lo, hi = float(snr_range[0]), float(snr_range[1])
    if hi < lo:
        raise ValueError("snr_range must be (low, high)")
    pattern = default_pattern(modem_cfg)
    n_tail = max(lds.tail.size, hds.tail.size)
    pilot = np.empty((count, pattern.n_pilots, len(pattern.symbol_indices)), np.complex64)
    true_h = np.empty((count, modem_cfg.n_f), np.complex64)
    labels = np.empty(count, np.uint8)
    snrs = np.empty(count, np.float32)
    tag = int(delay_class)
    for i in range(count):
        rng = child_rng(seed, i, 1)
        if tag == MIXED_TAG:
            realization = sample_realization(cfg=scen_cfg, seed=child_rng(seed, i, 0))
        else:
            realization = rejection_sample_class(
                scen_cfg, delay_class, (seed, i, 0), lds=lds, hds=hds, n_f=modem_cfg.n_f
            )
        snr = lo if lo == hi else rng.uniform(lo, hi)
        obs, h = synthesize_sample(scen_cfg, modem_cfg, pattern, realization, snr, rng)
        taps = impulse_taps(realization, modem_cfg.n_f, n_tail + 1)
        pilot[i] = obs
        true_h[i] = h
        labels[i] = int(label_class(taps, lds, hds))
        snrs[i] = snr
    ds = Dataset(
        class_tag=tag,
        n_f=modem_cfg.n_f,
        snr_range=(lo, hi),
        seed=int(seed),
        pilot_ls=pilot,
        true_h=true_h,
        labels=labels,
        snr_db=snrs,
    )
    if path is not None:
        write_dataset(path, ds)
    return ds


def _record_dtype(n_f, tones, symbols):
    return np.dtype(
        [
            ("pilot", "<f4", (tones, symbols, 2)),
            ("h", "<f4", (n_f, 2)),
            ("label", "u1"),
            ("snr", "<f4"),
        ]
    )


def write_dataset(path, ds):
    """Persist a corpus; the write is atomic (temp file + rename)."""
    n, tones, symbols = ds.pilot_ls.shape
    header = b"".join(
        [
            DATASET_MAGIC,
            struct.pack("<H", DATASET_VERSION),
            struct.pack("<B", ds.class_tag),
            struct.pack("<Q", n),
            struct.pack("<I", ds.n_f),
            struct.pack("<II", tones, symbols),
            struct.pack("<ff", *ds.snr_range),
            struct.pack("<Q", ds.seed),
        ]
    )
    records = np.empty(n, dtype=_record_dtype(ds.n_f, tones, symbols))
    records["pilot"][..., 0] = ds.pilot_ls.real
    records["pilot"][..., 1] = ds.pilot_ls.imag
    records["h"][..., 0] = ds.true_h.real
    records["h"][..., 1] = ds.true_h.imag
    records["label"] = ds.labels
    records["snr"] = ds.snr_db
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(header)
            f.write(records.tobytes())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_dataset(path):
    """Load a corpus written by write_dataset."""
    with open(path, "rb") as f:
        blob = f.read()
    head = struct.calcsize("<4sHBQIIIffQ")
    if len(blob) < head:
        raise FormatError(f"{path}: truncated header")
    magic, version, tag, n, n_f, tones, symbols, lo, hi, seed = struct.unpack(
        "<4sHBQIIIffQ", blob[:head]
    )
    if magic != DATASET_MAGIC:
        raise FormatError(f"{path}: bad magic bytes")
    if version != DATASET_VERSION:
        raise FormatError(f"{path}: unsupported version {version}")
    dtype = _record_dtype(n_f, tones, symbols)
    expected = head + n * dtype.itemsize
    if len(blob) != expected:
        raise FormatError(
            f"{path}: payload length {len(blob)} != expected {expected}"
        )
    records = np.frombuffer(blob[head:], dtype=dtype)
    pilot = (records["pilot"][..., 0] + 1j * records["pilot"][..., 1]).astype(
        np.complex64
    )
    true_h = (records["h"][..., 0] + 1j * records["h"][..., 1]).astype(np.complex64)
    return Dataset(
        class_tag=tag,
        n_f=n_f,
        snr_range=(lo, hi),
        seed=seed,
        pilot_ls=pilot,
        true_h=true_h,
        labels=records["label"].copy(),
        snr_db=records["snr"].copy(),
    )


def split_dataset(ds_or_path, ratio):
    """Deterministic shuffled split into (train, validation) views.

    The shuffle is seeded from the dataset's generator seed; the training
    view receives floor(ratio * N) samples.
    """
    if not 0.0 < ratio < 1.0:
        raise ValueError("ratio must lie in (0, 1)")
    ds = read_dataset(ds_or_path) if isinstance(ds_or_path, (str, os.PathLike)) else ds_or_path
    n = len(ds)
    perm = child_rng(ds.seed, 9090).permutation(n)
    n_train = int(np.floor(ratio * n))
    return ds.subset(perm[:n_train]), ds.subset(perm[n_train:])
