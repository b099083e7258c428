"""Learnable sinc bandpass filter bank.

A filter is the difference of two low-pass sincs with learnable cutoffs,
tapered by a Hamming window. Cutoffs are stored as raw, unconstrained
parameters in normalized frequency (cycles/sample, Nyquist = 0.5); the
reparameterization below keeps the effective band ordered and inside
[0, 0.5]. The sampling rate in Hz matters only for initialization and
reporting.

Kernels are built by computing the left half on the symmetric time axis
tau(n) = n - (L-1)/2 and mirroring, so kernel[n] == kernel[L-1-n] holds
exactly; the window is applied center-aligned with the same mirroring.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import tensor as tn
from .ops import concat_mirror
from .tensor import Tensor

CUTOFF_MIN = 0.01
CUTOFF_MAX = 0.49


@dataclass
class SincFilterBank:
    """Raw cutoff parameters of a bank of F1 bandpass filters.

    f1, f2 are in normalized frequency (cycles/sample); fs is carried for
    Hz reporting only.
    """

    f1: np.ndarray
    f2: np.ndarray
    L: int
    fs: float

    @property
    def n_filters(self):
        return len(self.f1)

    def effective_cutoffs(self):
        return reparameterize_cutoffs(self.f1, self.f2)


@dataclass
class FrequencyResponse:
    """Magnitude response sampled on [0, 0.5] normalized frequency."""

    frequencies: np.ndarray
    magnitude: np.ndarray


def reparameterize_cutoffs(f1_raw, f2_raw):
    """Map raw cutoffs to ordered effective cutoffs in [0, 0.5].

    f1_abs = |f1_raw|, f2_abs = f1_raw + |f2_raw - f1_raw|, both clamped;
    f2_abs >= f1_abs whenever f1_raw >= 0.
    """
    f1_raw = np.asarray(f1_raw, dtype=np.float64)
    f2_raw = np.asarray(f2_raw, dtype=np.float64)
    f1_abs = np.clip(np.abs(f1_raw), 0.0, 0.5)
    f2_abs = np.clip(f1_raw + np.abs(f2_raw - f1_raw), 0.0, 0.5)
    return f1_abs, f2_abs


def hamming_window(L):
    """w[t] = 0.54 - 0.46 cos(2 pi t / L), t = 0..L-1."""
    if L < 2:
        raise ValueError(f"window length must be >= 2, got {L}")
    t = np.arange(L)
    return 0.54 - 0.46 * np.cos(2.0 * np.pi * t / L)


def _half_len(L):
    return (L + 1) // 2


def _tau(L):
    return np.arange(L) - (L - 1) / 2.0


def _sinc(x):
    return np.sinc(x / np.pi)


def _sinc_deriv(x):
    small = np.abs(x) < 1e-6
    xs = np.where(small, 1.0, x)
    return np.where(small, -x / 3.0, (xs * np.cos(xs) - np.sin(xs)) / (xs * xs))


def mirrored_window(L):
    """The Hamming taper as actually applied: left half of hamming_window(L)
    mirrored about the kernel center, hence exactly symmetric."""
    h = _half_len(L)
    w = hamming_window(L)[:h]
    return np.concatenate([w, w[:L - h][::-1]])


def materialize_kernel(f1_abs, f2_abs, L):
    """Time-domain bandpass kernel of length L for effective cutoffs.

    g[n] = 2 f2 sinc(2 pi f2 tau) - 2 f1 sinc(2 pi f1 tau), windowed.
    Built half-and-mirror, so the result is exactly symmetric.
    """
    if not (0.0 <= f1_abs <= f2_abs <= 0.5):
        raise ValueError(
            f"cutoff order violated: need 0 <= f1 <= f2 <= 0.5, got ({f1_abs}, {f2_abs})")
    h = _half_len(L)
    tau = _tau(L)[:h]
    w = hamming_window(L)[:h]
    g = 2.0 * f2_abs * _sinc(2.0 * np.pi * f2_abs * tau) \
        - 2.0 * f1_abs * _sinc(2.0 * np.pi * f1_abs * tau)
    half = g * w
    return np.concatenate([half, half[:L - h][::-1]])


def kernel_gradients(upstream, f1_raw, f2_raw, L):
    """Analytic gradient of sum(upstream * kernel) w.r.t. the raw cutoffs.

    Chains d/df [2 f sinc(2 pi f tau)] = 2 sinc(2 pi f tau)
    + 2 f sinc'(2 pi f tau) * 2 pi tau (limit 2 at tau = 0) through the
    reparameterization subgradients, with sign(0) = 0 and clamped cutoffs
    receiving zero gradient.
    """
    upstream = np.asarray(upstream, dtype=np.float64)
    f1_abs, f2_abs = reparameterize_cutoffs(f1_raw, f2_raw)
    f1_abs, f2_abs = float(f1_abs), float(f2_abs)
    tau = _tau(L)
    w = mirrored_window(L)

    def dband(f):
        arg = 2.0 * np.pi * f * tau
        return 2.0 * _sinc(arg) + 2.0 * f * _sinc_deriv(arg) * 2.0 * np.pi * tau

    d_f2abs = float(np.sum(upstream * dband(f2_abs) * w))
    d_f1abs = -float(np.sum(upstream * dband(f1_abs) * w))

    pre1 = abs(f1_raw)
    pre2 = f1_raw + abs(f2_raw - f1_raw)
    gate1 = 1.0 if pre1 <= 0.5 else 0.0
    gate2 = 1.0 if 0.0 <= pre2 <= 0.5 else 0.0
    s = np.sign(f2_raw - f1_raw)
    df1 = d_f1abs * gate1 * np.sign(f1_raw) + d_f2abs * gate2 * (1.0 - s)
    df2 = d_f2abs * gate2 * s
    return float(df1), float(df2)


def bank_kernels(f1_raw, f2_raw, L):
    """Differentiable kernels (F1, L) from raw cutoff parameter tensors.

    Same half-and-mirror construction as materialize_kernel, expressed in
    autodiff primitives so gradients flow to the raw cutoffs. L must be
    even (the network constraint).
    """
    if L % 2 != 0:
        raise ValueError(f"bank_kernels needs an even kernel length, got {L}")
    F1 = f1_raw.shape[0]
    h = L // 2
    tau = Tensor(_tau(L)[:h].reshape(1, h))
    w = Tensor(hamming_window(L)[:h].reshape(1, h))

    f1a = tn.clamp(tn.absolute(f1_raw), 0.0, 0.5)
    f2a = tn.clamp(f1_raw + tn.absolute(f2_raw - f1_raw), 0.0, 0.5)

    def lowpass(fcol):
        arg = tn.mul(tn.mul(fcol, tau), 2.0 * np.pi)
        return tn.mul(tn.mul(fcol, 2.0), tn.sinc(arg))

    half = tn.mul(lowpass(f2a.reshape((F1, 1))) - lowpass(f1a.reshape((F1, 1))), w)
    return concat_mirror(half)


def init_filter_bank(F1, fs, seed, L=64, std_hz=None):
    """Draw F1 cutoff pairs from a Gaussian centered at fs/4 Hz.

    std defaults to sqrt(fs/4) Hz (Gaussian variance fs/4). Draws are
    normalized by fs, clamped to [0.01, 0.49], ordered per pair, and
    widened so the initial band is at least 1/L (a zero-width band would
    be a dead filter).
    """
    if F1 < 1:
        raise ValueError(f"need at least one filter, got {F1}")
    rng = np.random.default_rng(seed)
    if std_hz is None:
        std_hz = np.sqrt(fs / 4.0)
    draws = rng.normal(fs / 4.0, std_hz, size=(2, F1)) / fs
    draws = np.clip(draws, CUTOFF_MIN, CUTOFF_MAX)
    lo = draws.min(axis=0)
    hi = draws.max(axis=0)
    min_bw = 1.0 / L
    hi = np.maximum(hi, lo + min_bw)
    over = hi > CUTOFF_MAX
    hi[over] = CUTOFF_MAX
    lo[over] = np.minimum(lo[over], CUTOFF_MAX - min_bw)
    return SincFilterBank(f1=lo, f2=hi, L=L, fs=float(fs))


def frequency_response(kernel, n_points):
    """Zero-padded DFT magnitude at n_points uniform frequencies in [0, 0.5]."""
    kernel = np.asarray(kernel, dtype=np.float64)
    if n_points < len(kernel):
        raise ValueError(f"n_points {n_points} < kernel length {len(kernel)}")
    M = 2 * (n_points - 1)
    mag = np.abs(np.fft.rfft(kernel, M))
    freqs = np.arange(n_points) / M
    return FrequencyResponse(frequencies=freqs, magnitude=mag)


def convolve_same_naive(signal, kernel):
    """Reference same-padded cross-correlation, fixed accumulation order."""
    signal = np.asarray(signal, dtype=np.float64)
    kernel = np.asarray(kernel, dtype=np.float64)
    L = len(kernel)
    T = len(signal)
    left = (L - 1) // 2
    xp = np.pad(signal, (left, L - 1 - left))
    y = np.zeros(T)
    for n in range(L):
        y += kernel[n] * xp[n:n + T]
    return y


def convolve_same_mirror(signal, kernel_half, L):
    """Symmetric fast path: stores only the kernel's left half and mirrors
    indices on the fly. Accumulation order matches convolve_same_naive, so
    for a symmetric kernel the two are bitwise identical."""
    signal = np.asarray(signal, dtype=np.float64)
    kernel_half = np.asarray(kernel_half, dtype=np.float64)
    h = _half_len(L)
    T = len(signal)
    left = (L - 1) // 2
    xp = np.pad(signal, (left, L - 1 - left))
    y = np.zeros(T)
    for n in range(L):
        k = kernel_half[n] if n < h else kernel_half[L - 1 - n]
        y += k * xp[n:n + T]
    return y
