"""The four-block classifier: sinc filter bank, spatial depthwise filter,
separable temporal convolution, and a fully connected readout.

Block layout (shapes for input (B, C, T)):

  1. reshape -> sinc conv (same) -> pool/4 -> layer norm + CELU -> dropout
  2. spatial depthwise (C, 1)    -> pool/4 -> layer norm + CELU -> dropout
  3. temporal depthwise (1, 16, same) -> layer norm + CELU -> dropout
     pointwise (1, 1)            -> pool/4 -> layer norm + CELU -> dropout
  4. flatten -> fully connected -> logits (softmax lives in the loss)

No layer carries a bias, so the trainable parameter count is exactly the
sum of the per-layer formulas reported by count_parameters.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from . import ops
from .sincfilters import bank_kernels, init_filter_bank
from .tensor import Tensor

CHECKPOINT_MAGIC = b"SEEG"
CHECKPOINT_VERSION = 1
TEMPORAL_KERNEL = 16
POOL = 4


class ConfigError(ValueError):
    """A model configuration violates a construction invariant."""

    def __init__(self, field_name, message):
        self.field_name = field_name
        super().__init__(f"{field_name}: {message}")


class CheckpointError(ValueError):
    """A checkpoint file is corrupt or inconsistent."""


@dataclass
class ModelConfig:
    """Architecture hyperparameters.

    channels=C, samples=T, kernel_len=L, n_filters=F1, depth_mult=D,
    n_pointwise=F2 (defaults to D*F1), n_classes=N.
    """

    channels: int = 22
    samples: int = 512
    kernel_len: int = 64
    n_filters: int = 32
    depth_mult: int = 2
    n_pointwise: int = 0  # 0 means D * F1
    n_classes: int = 4
    dropout_p: float = 0.5
    celu_alpha: float = 1.0

    def __post_init__(self):
        if self.n_pointwise == 0:
            self.n_pointwise = self.depth_mult * self.n_filters

    def validate(self):
        if self.channels < 1:
            raise ConfigError("channels", f"must be >= 1, got {self.channels}")
        if self.n_classes < 2:
            raise ConfigError("n_classes", f"must be >= 2, got {self.n_classes}")
        if self.samples % 64 != 0:
            raise ConfigError(
                "samples", f"must be divisible by 64 (three /4 poolings), got {self.samples}")
        if self.kernel_len > self.samples:
            raise ConfigError(
                "kernel_len", f"{self.kernel_len} exceeds samples {self.samples}")
        if self.kernel_len < 2 or self.kernel_len % 2 != 0:
            raise ConfigError("kernel_len", f"must be even and >= 2, got {self.kernel_len}")
        if self.n_filters < 1:
            raise ConfigError("n_filters", f"must be >= 1, got {self.n_filters}")
        if self.depth_mult < 1:
            raise ConfigError("depth_mult", f"must be >= 1, got {self.depth_mult}")
        if self.n_pointwise < 1:
            raise ConfigError("n_pointwise", f"must be >= 1, got {self.n_pointwise}")
        if not 0.0 <= self.dropout_p < 1.0:
            raise ConfigError("dropout_p", f"must be in [0, 1), got {self.dropout_p}")
        if self.celu_alpha <= 0:
            raise ConfigError("celu_alpha", f"must be positive, got {self.celu_alpha}")
        return self


def count_parameters(config):
    """Per-layer parameter counts and their total, by pure formula."""
    C, F1, D = config.channels, config.n_filters, config.depth_mult
    F2, N, T = config.n_pointwise, config.n_classes, config.samples
    rows = [
        ("sinc_conv", 2 * F1),
        ("layer_norm_1", 2 * F1),
        ("spatial_depthwise", C * D * F1),
        ("layer_norm_2", 2 * D * F1),
        ("temporal_depthwise", TEMPORAL_KERNEL * D * F1),
        ("layer_norm_3", 2 * D * F1),
        ("pointwise", F2 * D * F1),
        ("layer_norm_4", 2 * F2),
        ("fully_connected", N * F2 * (T // 64)),
    ]
    return rows, sum(c for _, c in rows)


def _glorot(rng, shape, fan_in, fan_out):
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


@dataclass
class Model:
    config: ModelConfig
    params: dict = field(default_factory=dict)
    # (name, decay) in build order; decay marks weights that receive
    # decoupled weight decay (convolutional + fully connected only).
    _order = (
        ("sinc_f1", False),
        ("sinc_f2", False),
        ("ln1_gain", False),
        ("ln1_bias", False),
        ("spatial_w", True),
        ("ln2_gain", False),
        ("ln2_bias", False),
        ("temporal_w", True),
        ("ln3_gain", False),
        ("ln3_bias", False),
        ("pointwise_w", True),
        ("ln4_gain", False),
        ("ln4_bias", False),
        ("fc_w", True),
    )

    def parameters(self):
        """(name, tensor, decay) triples in build order."""
        return [(name, self.params[name], decay) for name, decay in self._order]

    def zero_grad(self):
        for _, t, _ in self.parameters():
            t.zero_grad()

    def n_parameters(self):
        return sum(t.size for _, t, _ in self.parameters())

    def forward(self, batch, training=False, rng=None):
        """Logits (B, N) for a batch (B, C, T); dropout only when training."""
        cfg = self.config
        x = batch if isinstance(batch, Tensor) else Tensor(batch)
        if x.ndim != 3 or x.shape[1:] != (cfg.channels, cfg.samples):
            raise ops.ShapeError(
                f"batch shape {x.shape} incompatible with (B, {cfg.channels}, {cfg.samples})")
        B = x.shape[0]
        p = self.params
        a = cfg.celu_alpha

        def block_tail(h, gain, bias, pool):
            if pool:
                h = ops.avg_pool_time(h, POOL)
            h = ops.layer_norm(h, gain, bias)
            h = ops.celu(h, a)
            return ops.dropout(h, cfg.dropout_p, training, rng)

        kernels = bank_kernels(p["sinc_f1"], p["sinc_f2"], cfg.kernel_len)
        h = x.reshape((B, 1, cfg.channels, cfg.samples))
        h = ops.conv_temporal(h, kernels, mode="same")
        h = block_tail(h, p["ln1_gain"], p["ln1_bias"], pool=True)
        h = ops.depthwise_conv(h, p["spatial_w"], spatial=True)
        h = block_tail(h, p["ln2_gain"], p["ln2_bias"], pool=True)
        h = ops.depthwise_conv(h, p["temporal_w"], spatial=False)
        h = block_tail(h, p["ln3_gain"], p["ln3_bias"], pool=False)
        h = ops.pointwise_conv(h, p["pointwise_w"])
        h = block_tail(h, p["ln4_gain"], p["ln4_bias"], pool=True)
        h = h.reshape((B, cfg.n_pointwise * (cfg.samples // 64)))
        return ops.linear(h, p["fc_w"])

    def save(self, path):
        """Binary checkpoint: magic, version, config, then each parameter
        tensor in build order as a length-prefixed f64 array."""
        cfg = self.config
        blob = bytearray()
        blob += CHECKPOINT_MAGIC
        blob += struct.pack("<I", CHECKPOINT_VERSION)
        blob += struct.pack("<7I", cfg.channels, cfg.samples, cfg.kernel_len,
                            cfg.n_filters, cfg.depth_mult, cfg.n_pointwise,
                            cfg.n_classes)
        blob += struct.pack("<2d", cfg.dropout_p, cfg.celu_alpha)
        for _, t, _ in self.parameters():
            flat = np.ascontiguousarray(t.data, dtype="<f8").ravel()
            blob += struct.pack("<I", flat.size)
            blob += flat.tobytes()
        with open(path, "wb") as fh:
            fh.write(bytes(blob))

    @classmethod
    def load(cls, path):
        with open(path, "rb") as fh:
            raw = fh.read()
        if raw[:4] != CHECKPOINT_MAGIC:
            raise CheckpointError(f"bad magic {raw[:4]!r}, expected {CHECKPOINT_MAGIC!r}")
        off = 4
        (version,) = struct.unpack_from("<I", raw, off)
        off += 4
        if version != CHECKPOINT_VERSION:
            raise CheckpointError(f"unsupported checkpoint version {version}")
        ints = struct.unpack_from("<7I", raw, off)
        off += 28
        dropout_p, celu_alpha = struct.unpack_from("<2d", raw, off)
        off += 16
        cfg = ModelConfig(channels=ints[0], samples=ints[1], kernel_len=ints[2],
                          n_filters=ints[3], depth_mult=ints[4], n_pointwise=ints[5],
                          n_classes=ints[6], dropout_p=dropout_p,
                          celu_alpha=celu_alpha).validate()
        model = build_model(cfg, seed=0)
        total = 0
        for name, t, _ in model.parameters():
            if off + 4 > len(raw):
                raise CheckpointError(f"truncated before {name} length at byte {off}")
            (n,) = struct.unpack_from("<I", raw, off)
            off += 4
            if n != t.size:
                raise CheckpointError(f"{name}: stored {n} values, expected {t.size}")
            end = off + 8 * n
            if end > len(raw):
                raise CheckpointError(f"truncated inside {name} at byte {len(raw)}")
            t.data = np.frombuffer(raw[off:end], dtype="<f8").reshape(t.shape).copy()
            off += 8 * n
            total += n
        if off != len(raw):
            raise CheckpointError(f"{len(raw) - off} trailing bytes at offset {off}")
        _, expected = count_parameters(cfg)
        if total != expected:
            raise CheckpointError(f"parameter total {total} != formula total {expected}")
        return model


def build_model(config, seed):
    """Instantiate parameters for a validated config.

    Sinc cutoffs come from the Gaussian bank initializer; other weights
    are Glorot-uniform; layer norm gains start at 1, biases at 0.
    """
    config.validate()
    C, T, L = config.channels, config.samples, config.kernel_len
    F1, D, F2, N = (config.n_filters, config.depth_mult,
                    config.n_pointwise, config.n_classes)
    ss = np.random.SeedSequence(seed)
    bank_seed, wseed = ss.spawn(2)
    rng = np.random.default_rng(wseed)
    bank = init_filter_bank(F1, fs=128.0, seed=bank_seed, L=L)

    def param(data):
        return Tensor(data, requires_grad=True)

    K = F2 * (T // 64)
    params = {
        "sinc_f1": param(bank.f1),
        "sinc_f2": param(bank.f2),
        "ln1_gain": param(np.ones(F1)),
        "ln1_bias": param(np.zeros(F1)),
        "spatial_w": param(_glorot(rng, (F1, D, C), C, D)),
        "ln2_gain": param(np.ones(D * F1)),
        "ln2_bias": param(np.zeros(D * F1)),
        "temporal_w": param(_glorot(rng, (D * F1, TEMPORAL_KERNEL), TEMPORAL_KERNEL, 1)),
        "ln3_gain": param(np.ones(D * F1)),
        "ln3_bias": param(np.zeros(D * F1)),
        "pointwise_w": param(_glorot(rng, (F2, D * F1), D * F1, F2)),
        "ln4_gain": param(np.ones(F2)),
        "ln4_bias": param(np.zeros(F2)),
        "fc_w": param(_glorot(rng, (N, K), K, N)),
    }
    return Model(config=config, params=params)
