"""Trial container, preprocessing chain, and the synthetic band-power
dataset generator used for desk-scale validation.

Preprocessing is order-fixed: low-pass at 64 Hz, resample to 128 Hz,
then per-channel z-score within each trial. Containers store f32 (raw
EEG precision); everything upstream computes in f64.
"""

from __future__ import annotations

import math
import struct
import warnings
from dataclasses import dataclass, field

import numpy as np

from .sincfilters import materialize_kernel

CONTAINER_MAGIC = b"EEGT"
CONTAINER_VERSION = 1
HEADER = struct.Struct("<4sIIIIf")  # magic, version, n_trials, C, T, fs
TARGET_FS = 128.0
LOWPASS_CUTOFF_HZ = 64.0
LOWPASS_TAPS = 129
RESAMPLE_HALFWIDTH = 64


class ContainerError(ValueError):
    """Container file is malformed; carries the offending byte offset."""

    def __init__(self, offset, message):
        self.offset = offset
        super().__init__(f"byte {offset}: {message}")


@dataclass
class TrialSet:
    """EEG trials sharing channel count, length, and sampling rate.

    data: (n, C, T) float64; labels/subjects/sessions: (n,) ints.
    """

    fs: float
    data: np.ndarray
    labels: np.ndarray
    subjects: np.ndarray
    sessions: np.ndarray

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        self.subjects = np.asarray(self.subjects, dtype=np.int64)
        self.sessions = np.asarray(self.sessions, dtype=np.int64)
        n = len(self.data)
        for name, arr in (("labels", self.labels), ("subjects", self.subjects),
                          ("sessions", self.sessions)):
            if len(arr) != n:
                raise ValueError(f"{name} length {len(arr)} != trial count {n}")

    def __len__(self):
        return len(self.data)

    @property
    def n_channels(self):
        return self.data.shape[1]

    @property
    def n_samples(self):
        return self.data.shape[2]

    @property
    def n_classes(self):
        return int(self.labels.max()) + 1 if len(self.labels) else 0

    def subset(self, mask):
        mask = np.asarray(mask)
        return TrialSet(fs=self.fs, data=self.data[mask], labels=self.labels[mask],
                        subjects=self.subjects[mask], sessions=self.sessions[mask])


def design_lowpass(fs_in, cutoff_hz=LOWPASS_CUTOFF_HZ, n_taps=LOWPASS_TAPS):
    """Linear-phase windowed-sinc low-pass taps (Hamming, unit DC gain)."""
    fc = cutoff_hz / fs_in
    taps = materialize_kernel(0.0, fc, n_taps)
    return taps / taps.sum()


def lowpass_64hz(signal, fs_in):
    """Zero-phase 64 Hz FIR low-pass: symmetric 129-tap windowed sinc
    applied centered, which cancels the group delay."""
    if fs_in <= 128:
        raise ValueError(f"low-pass expects fs_in > 128 Hz, got {fs_in}")
    signal = np.asarray(signal, dtype=np.float64)
    taps = design_lowpass(fs_in)
    if len(signal) < len(taps):
        raise ValueError(f"signal length {len(signal)} shorter than filter ({len(taps)} taps)")
    return np.convolve(signal, taps, mode="same")


def resample_to_128(signal, fs_in=250.0):
    """Rational-ratio resampling to 128 Hz by windowed-sinc interpolation.

    Output length is floor(len * 128 / fs_in). Each output sample is a
    normalized windowed-sinc average around its continuous-time position,
    with the kernel cut off at the output Nyquist; normalization keeps DC
    gain exactly 1 (constant in -> constant out).
    """
    signal = np.asarray(signal, dtype=np.float64)
    n = len(signal)
    out_len = int(math.floor(n * TARGET_FS / fs_in))
    if out_len == 0:
        return np.zeros(0)
    W = RESAMPLE_HALFWIDTH
    fc = min(0.5, 0.5 * TARGET_FS / fs_in)  # cycles per input sample
    pos = np.arange(out_len) * (fs_in / TARGET_FS)
    base = np.floor(pos).astype(np.int64)
    offsets = np.arange(-W + 1, W + 1)
    idx = base[:, None] + offsets[None, :]
    t = pos[:, None] - idx
    kern = 2.0 * fc * np.sinc(2.0 * fc * t)
    kern *= 0.54 + 0.46 * np.cos(np.pi * t / W)  # Hamming taper on |t| <= W
    valid = (idx >= 0) & (idx < n)
    kern = np.where(valid, kern, 0.0)
    idx = np.clip(idx, 0, n - 1)
    return (kern * signal[idx]).sum(axis=1) / kern.sum(axis=1)


def zscore_trial(trial):
    """Standardize each channel to mean 0, std 1 within the trial
    (population std). A constant channel is zeroed with a warning."""
    trial = np.asarray(trial, dtype=np.float64)
    mean = trial.mean(axis=-1, keepdims=True)
    std = trial.std(axis=-1, keepdims=True)
    degenerate = std[..., 0] == 0
    if np.any(degenerate):
        warnings.warn(f"constant channel(s) {np.flatnonzero(degenerate).tolist()} "
                      "zeroed during z-score", stacklevel=2)
    safe = np.where(std == 0, 1.0, std)
    out = (trial - mean) / safe
    out[degenerate] = 0.0
    return out


def preprocess(trials):
    """Low-pass -> resample to 128 Hz -> per-channel z-score, in that order.

    Trials already at 128 Hz skip the first two stages.
    """
    if trials.fs > TARGET_FS:
        out_len = int(math.floor(trials.n_samples * TARGET_FS / trials.fs))
        data = np.empty((len(trials), trials.n_channels, out_len))
        for i in range(len(trials)):
            for c in range(trials.n_channels):
                x = lowpass_64hz(trials.data[i, c], trials.fs)
                data[i, c] = resample_to_128(x, trials.fs)
    elif trials.fs == TARGET_FS:
        data = trials.data.copy()
    else:
        raise ValueError(f"cannot upsample from {trials.fs} Hz to {TARGET_FS} Hz")
    for i in range(len(data)):
        data[i] = zscore_trial(data[i])
    return TrialSet(fs=TARGET_FS, data=data, labels=trials.labels,
                    subjects=trials.subjects, sessions=trials.sessions)


def write_container(trials, path):
    """EEGT v1: 24-byte header, then per trial a 3-byte tag (label,
    subject, session as u8) and C*T little-endian f32, channel-major."""
    n, C, T = len(trials), trials.n_channels, trials.n_samples
    blob = bytearray(HEADER.pack(CONTAINER_MAGIC, CONTAINER_VERSION, n, C, T,
                                 float(trials.fs)))
    for i in range(n):
        blob += struct.pack("<3B", int(trials.labels[i]), int(trials.subjects[i]),
                            int(trials.sessions[i]))
        blob += np.ascontiguousarray(trials.data[i], dtype="<f4").tobytes()
    with open(path, "wb") as fh:
        fh.write(bytes(blob))


def read_container(path):
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < HEADER.size:
        raise ContainerError(len(raw), f"file too short for header ({HEADER.size} bytes)")
    magic, version, n, C, T, fs = HEADER.unpack_from(raw, 0)
    if magic != CONTAINER_MAGIC:
        raise ContainerError(0, f"bad magic {magic!r}, expected {CONTAINER_MAGIC!r}")
    if version != CONTAINER_VERSION:
        raise ContainerError(4, f"unsupported version {version}")
    stride = 3 + C * T * 4
    expected = HEADER.size + n * stride
    if len(raw) != expected:
        raise ContainerError(min(len(raw), expected),
                             f"payload size {len(raw) - HEADER.size} bytes, "
                             f"expected {n} trials x {stride} bytes")
    data = np.empty((n, C, T))
    labels = np.empty(n, dtype=np.int64)
    subjects = np.empty(n, dtype=np.int64)
    sessions = np.empty(n, dtype=np.int64)
    off = HEADER.size
    for i in range(n):
        labels[i], subjects[i], sessions[i] = struct.unpack_from("<3B", raw, off)
        off += 3
        data[i] = np.frombuffer(raw, dtype="<f4", count=C * T, offset=off).reshape(C, T)
        off += C * T * 4
    return TrialSet(fs=fs, data=data, labels=labels, subjects=subjects, sessions=sessions)


def _narrowband(rng, T, lo_norm, hi_norm):
    """Unit-RMS noise confined to a normalized frequency band."""
    pad = 256
    taps = materialize_kernel(lo_norm, hi_norm, 129)
    x = np.convolve(rng.standard_normal(T + 2 * pad), taps, mode="same")[pad:-pad]
    rms = np.sqrt(np.mean(x * x))
    return x / rms if rms > 0 else x


def generate_synthetic(n_per_class, C, T, fs, bands, snr, seed, subjects=(1,)):
    """Balanced band-power dataset: white noise everywhere plus, per class,
    narrowband noise in that class's band on a class-specific channel
    subset, at RMS ratio snr. snr = inf drops the white noise entirely.

    Sessions alternate 1/2 within each class so every split paradigm has
    both sessions; subject ids cycle through `subjects`.
    """
    n_classes = len(bands)
    ordered = sorted((float(lo), float(hi)) for lo, hi in bands)
    for lo, hi in ordered:
        if lo >= hi:
            raise ValueError(f"band ({lo}, {hi}) has lo >= hi")
        if hi >= fs / 2:
            raise ValueError(f"band edge {hi} Hz at or above Nyquist ({fs / 2} Hz)")
    for (_, hi_a), (lo_b, _) in zip(ordered, ordered[1:]):
        if lo_b < hi_a:
            raise ValueError(f"class bands overlap near {lo_b} Hz")
    rng = np.random.default_rng(seed)
    groups = np.array_split(np.arange(C), n_classes)
    noise_amp = 0.0 if math.isinf(snr) else 1.0
    band_amp = 1.0 if math.isinf(snr) else float(snr)
    n = n_per_class * n_classes
    data = np.zeros((n, C, T))
    labels = np.empty(n, dtype=np.int64)
    subj = np.empty(n, dtype=np.int64)
    sess = np.empty(n, dtype=np.int64)
    i = 0
    for k, (lo, hi) in enumerate(bands):
        for j in range(n_per_class):
            trial = noise_amp * rng.standard_normal((C, T))
            for c in groups[k]:
                trial[c] += band_amp * _narrowband(rng, T, lo / fs, hi / fs)
            data[i] = trial
            labels[i] = k
            subj[i] = subjects[j % len(subjects)]
            sess[i] = 1 if j < (n_per_class + 1) // 2 else 2
            i += 1
    return TrialSet(fs=float(fs), data=data, labels=labels, subjects=subj, sessions=sess)
