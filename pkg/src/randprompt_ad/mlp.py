"""Four-layer feed-forward anomaly detector, trained from scratch.

Hidden layers apply linear -> batch-norm -> ReLU -> dropout; the final
layer is plain linear producing one logit (the sigmoid lives in
scoring). The module implements the exact reverse-mode gradients
(including full batch-norm mean/variance coupling and stored dropout
masks), a numerically stable binary cross entropy, AdamW with decoupled
weight decay on weight matrices only, and deterministic paired-batch
training driven by one seeded stream.

All training arithmetic runs at 64-bit precision; checkpoints store
float64 tensors after a JSON header (see :func:`save_checkpoint`).
"""

from __future__ import annotations

import json
import struct
from dataclasses import asdict, dataclass, field

import numpy as np

from .embeddings import EmbeddingMatrix, PairedEmbeddingSet, unit_rows
from .errors import (
    ConfigError,
    CorruptionError,
    DataError,
    FormatError,
    StateError,
    TrainingError,
)
from .rng import SplitMix64
from .scoring import ScoreVector, default_sample_ids

_N_HIDDEN = 3


@dataclass(frozen=True)
class MlpArchitecture:
    """Shape and regularization constants of the detector."""

    input_dim: int
    hidden_dims: tuple[int, int, int] = (512, 256, 128)
    dropout_rate: float = 0.2
    bn_epsilon: float = 1e-5
    bn_momentum: float = 0.1

    def __post_init__(self) -> None:
        object.__setattr__(self, "hidden_dims", tuple(self.hidden_dims))
        if self.input_dim < 1:
            raise ConfigError(f"input_dim must be >= 1, got {self.input_dim}")
        if len(self.hidden_dims) != _N_HIDDEN:
            raise ConfigError(
                f"expected {_N_HIDDEN} hidden widths, got {self.hidden_dims}"
            )
        if any(d < 1 for d in self.hidden_dims):
            raise ConfigError(f"hidden widths must be >= 1, got {self.hidden_dims}")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ConfigError(f"dropout_rate must be in [0, 1), got {self.dropout_rate}")
        if self.bn_epsilon < 0.0:
            raise ConfigError(f"bn_epsilon must be >= 0, got {self.bn_epsilon}")
        if not 0.0 < self.bn_momentum <= 1.0:
            raise ConfigError(f"bn_momentum must be in (0, 1], got {self.bn_momentum}")

    @property
    def layer_dims(self) -> tuple[int, ...]:
        """Widths including input and the scalar logit output."""
        return (self.input_dim, *self.hidden_dims, 1)


@dataclass(frozen=True)
class TrainConfig:
    """Optimizer and schedule settings."""

    epochs: int = 2
    batch_size: int = 128
    lr: float = 1e-3
    weight_decay: float = 1e-4
    lr_decay_factor: float = 0.1
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    seed: int = 0
    normalize_inputs: bool = True

    def __post_init__(self) -> None:
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 2 or self.batch_size % 2 != 0:
            raise ConfigError(
                f"batch_size must be even and >= 2 (pairs stay together), "
                f"got {self.batch_size}"
            )
        if self.lr <= 0:
            raise ConfigError(f"lr must be positive, got {self.lr}")
        if self.weight_decay < 0:
            raise ConfigError(f"weight_decay must be >= 0, got {self.weight_decay}")
        if self.lr_decay_factor <= 0:
            raise ConfigError(
                f"lr_decay_factor must be positive, got {self.lr_decay_factor}"
            )
        for name in ("adam_beta1", "adam_beta2"):
            beta = getattr(self, name)
            if not 0.0 <= beta < 1.0:
                raise ConfigError(f"{name} must be in [0, 1), got {beta}")
        if self.adam_eps <= 0:
            raise ConfigError(f"adam_eps must be positive, got {self.adam_eps}")
        if not 0 <= self.seed < 2**64:
            raise ConfigError(f"seed must fit in 64 bits, got {self.seed}")


class MlpParams:
    """All weights, biases and batch-norm state, plus a step counter."""

    __slots__ = (
        "arch",
        "weights",
        "biases",
        "gammas",
        "betas",
        "run_means",
        "run_vars",
        "step",
    )

    def __init__(
        self,
        arch: MlpArchitecture,
        weights: list[np.ndarray],
        biases: list[np.ndarray],
        gammas: list[np.ndarray],
        betas: list[np.ndarray],
        run_means: list[np.ndarray],
        run_vars: list[np.ndarray],
        step: int = 0,
    ) -> None:
        dims = arch.layer_dims
        if len(weights) != len(dims) - 1 or len(biases) != len(dims) - 1:
            raise ValueError("expected one weight/bias per layer")
        for i, (w, b) in enumerate(zip(weights, biases)):
            if w.shape != (dims[i], dims[i + 1]) or b.shape != (dims[i + 1],):
                raise ValueError(
                    f"layer {i}: weight {w.shape}/bias {b.shape} inconsistent "
                    f"with dims {dims[i]}->{dims[i + 1]}"
                )
        for j in range(_N_HIDDEN):
            width = (dims[j + 1],)
            for name, arr in (
                ("gamma", gammas[j]),
                ("beta", betas[j]),
                ("running mean", run_means[j]),
                ("running variance", run_vars[j]),
            ):
                if arr.shape != width:
                    raise ValueError(f"bn {j} {name}: shape {arr.shape} != {width}")
            if np.any(run_vars[j] < 0):
                raise ValueError(f"bn {j}: running variance must be >= 0")
        if step < 0:
            raise ValueError(f"step must be >= 0, got {step}")
        self.arch = arch
        self.weights = weights
        self.biases = biases
        self.gammas = gammas
        self.betas = betas
        self.run_means = run_means
        self.run_vars = run_vars
        self.step = step

    def named_tensors(self):
        """All tensors in declared checkpoint order."""
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            yield f"layer{i}.weight", w
            yield f"layer{i}.bias", b
            if i < _N_HIDDEN:
                yield f"bn{i}.gamma", self.gammas[i]
                yield f"bn{i}.beta", self.betas[i]
                yield f"bn{i}.running_mean", self.run_means[i]
                yield f"bn{i}.running_var", self.run_vars[i]

    def optimizable(self):
        """``(name, tensor, decayed)`` triples; decay hits weight matrices only."""
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            yield f"layer{i}.weight", w, True
            yield f"layer{i}.bias", b, False
        for j in range(_N_HIDDEN):
            yield f"bn{j}.gamma", self.gammas[j], False
            yield f"bn{j}.beta", self.betas[j], False


def init_params(arch: MlpArchitecture, rng: SplitMix64) -> MlpParams:
    """Scaled uniform fan-in init: W, b ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in));
    batch-norm starts at gamma=1, beta=0, running mean 0, running var 1."""
    dims = arch.layer_dims
    weights, biases = [], []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        bound = 1.0 / np.sqrt(fan_in)
        w = (2.0 * rng.double_array(fan_in * fan_out) - 1.0) * bound
        weights.append(w.reshape(fan_in, fan_out))
        biases.append((2.0 * rng.double_array(fan_out) - 1.0) * bound)
    gammas = [np.ones(d) for d in arch.hidden_dims]
    betas = [np.zeros(d) for d in arch.hidden_dims]
    run_means = [np.zeros(d) for d in arch.hidden_dims]
    run_vars = [np.ones(d) for d in arch.hidden_dims]
    return MlpParams(arch, weights, biases, gammas, betas, run_means, run_vars, step=0)


@dataclass
class ForwardCache:
    """Activations recorded by a train-mode forward for exact backward."""

    params: MlpParams
    step: int
    batch_size: int
    lin_inputs: list[np.ndarray]
    xhats: list[np.ndarray]
    inv_stds: list[np.ndarray]
    relu_masks: list[np.ndarray]
    drop_scales: list[np.ndarray | None]


def _as_batch(batch, input_dim: int) -> np.ndarray:
    if isinstance(batch, EmbeddingMatrix):
        x = batch.data.astype(np.float64)
    else:
        x = np.asarray(batch, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError(f"batch must be 2-D, got shape {x.shape}")
    if x.shape[1] != input_dim:
        raise ValueError(f"batch dim {x.shape[1]} != model input dim {input_dim}")
    return x


def forward(
    params: MlpParams,
    batch,
    mode: str = "eval",
    rng: SplitMix64 | None = None,
) -> tuple[np.ndarray, ForwardCache | None]:
    """Run the network; returns ``(logits, cache)``.

    Train mode normalizes with batch statistics, updates running
    statistics in place, and samples dropout masks from ``rng``. Eval
    mode uses running statistics with identity dropout and requires at
    least one completed training step.
    """
    arch = params.arch
    x = _as_batch(batch, arch.input_dim)
    if mode == "train":
        if rng is None:
            raise ValueError("train-mode forward requires an rng for dropout")
        return _forward_train(params, x, rng)
    if mode == "eval":
        if params.step < 1:
            raise StateError("eval-mode forward before any training step")
        return _forward_eval(params, x), None
    raise ValueError(f"mode must be 'train' or 'eval', got {mode!r}")


def _forward_train(
    params: MlpParams, x: np.ndarray, rng: SplitMix64
) -> tuple[np.ndarray, ForwardCache]:
    arch = params.arch
    n = x.shape[0]
    cache = ForwardCache(
        params=params,
        step=params.step,
        batch_size=n,
        lin_inputs=[],
        xhats=[],
        inv_stds=[],
        relu_masks=[],
        drop_scales=[],
    )
    for i in range(_N_HIDDEN):
        cache.lin_inputs.append(x)
        z = x @ params.weights[i] + params.biases[i]
        mean = z.mean(axis=0)
        var = z.var(axis=0)  # biased, used for normalization
        inv_std = 1.0 / np.sqrt(var + arch.bn_epsilon)
        xhat = (z - mean) * inv_std
        # Running stats track the unbiased variance, updated as
        # (1 - momentum) * running + momentum * batch.
        unbiased = var * (n / (n - 1)) if n > 1 else var
        m = arch.bn_momentum
        params.run_means[i] *= 1.0 - m
        params.run_means[i] += m * mean
        params.run_vars[i] *= 1.0 - m
        params.run_vars[i] += m * unbiased
        y = params.gammas[i] * xhat + params.betas[i]
        mask = y > 0.0
        a = np.where(mask, y, 0.0)
        if arch.dropout_rate > 0.0:
            u = rng.double_array(a.size).reshape(a.shape)
            scale = np.where(u >= arch.dropout_rate, 1.0 / (1.0 - arch.dropout_rate), 0.0)
            a = a * scale
        else:
            scale = None
        cache.xhats.append(xhat)
        cache.inv_stds.append(inv_std)
        cache.relu_masks.append(mask)
        cache.drop_scales.append(scale)
        x = a
    cache.lin_inputs.append(x)
    logits = (x @ params.weights[_N_HIDDEN] + params.biases[_N_HIDDEN]).ravel()
    return logits, cache


def _forward_eval(params: MlpParams, x: np.ndarray) -> np.ndarray:
    arch = params.arch
    for i in range(_N_HIDDEN):
        z = x @ params.weights[i] + params.biases[i]
        xhat = (z - params.run_means[i]) / np.sqrt(params.run_vars[i] + arch.bn_epsilon)
        y = params.gammas[i] * xhat + params.betas[i]
        x = np.maximum(y, 0.0)
    return (x @ params.weights[_N_HIDDEN] + params.biases[_N_HIDDEN]).ravel()


def stable_sigmoid(z: np.ndarray) -> np.ndarray:
    """Elementwise logistic function without overflow on either tail."""
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    expz = np.exp(z[~pos])
    out[~pos] = expz / (1.0 + expz)
    return out


def bce_with_logits(logits, labels) -> tuple[float, np.ndarray]:
    """Mean binary cross entropy in log-sum-exp form plus its gradient.

    Returns ``(loss, d_loss/d_logits)`` with the gradient already
    averaged by batch size: ``(sigmoid(z) - y) / n``.
    """
    z = np.asarray(logits, dtype=np.float64).ravel()
    y = np.asarray(labels, dtype=np.float64).ravel()
    if z.size != y.size:
        raise ValueError(f"{z.size} logits vs {y.size} labels")
    if z.size == 0:
        raise ValueError("empty batch")
    if not np.all((y == 0.0) | (y == 1.0)):
        raise ValueError("labels must be 0 or 1")
    per_sample = np.maximum(z, 0.0) - z * y + np.log1p(np.exp(-np.abs(z)))
    grad = (stable_sigmoid(z) - y) / z.size
    return float(per_sample.mean()), grad


@dataclass
class MlpGrads:
    """Gradients aligned with :class:`MlpParams`."""

    d_weights: list[np.ndarray]
    d_biases: list[np.ndarray]
    d_gammas: list[np.ndarray]
    d_betas: list[np.ndarray]

    def optimizable(self):
        for i, (dw, db) in enumerate(zip(self.d_weights, self.d_biases)):
            yield f"layer{i}.weight", dw
            yield f"layer{i}.bias", db
        for j in range(_N_HIDDEN):
            yield f"bn{j}.gamma", self.d_gammas[j]
            yield f"bn{j}.beta", self.d_betas[j]


def backward(params: MlpParams, cache: ForwardCache, d_logits) -> MlpGrads:
    """Exact gradients for every parameter given ``d_loss/d_logits``."""
    if cache.params is not params:
        raise StateError("cache was produced by a different parameter set")
    if cache.step != params.step:
        raise StateError(
            f"stale cache: produced at step {cache.step}, params now at {params.step}"
        )
    g = np.asarray(d_logits, dtype=np.float64).ravel()
    if g.size != cache.batch_size:
        raise ValueError(f"{g.size} logit gradients for batch of {cache.batch_size}")
    n = cache.batch_size
    g = g[:, None]

    d_weights: list[np.ndarray | None] = [None] * (_N_HIDDEN + 1)
    d_biases: list[np.ndarray | None] = [None] * (_N_HIDDEN + 1)
    d_gammas: list[np.ndarray | None] = [None] * _N_HIDDEN
    d_betas: list[np.ndarray | None] = [None] * _N_HIDDEN

    d_weights[_N_HIDDEN] = cache.lin_inputs[_N_HIDDEN].T @ g
    d_biases[_N_HIDDEN] = g.sum(axis=0)
    g = g @ params.weights[_N_HIDDEN].T

    for i in range(_N_HIDDEN - 1, -1, -1):
        if cache.drop_scales[i] is not None:
            g = g * cache.drop_scales[i]
        g = g * cache.relu_masks[i]
        xhat = cache.xhats[i]
        d_gammas[i] = (g * xhat).sum(axis=0)
        d_betas[i] = g.sum(axis=0)
        # Full batch-norm backward with mean/variance coupling:
        # dz = inv_std/n * (n*dxhat - sum(dxhat) - xhat * sum(dxhat*xhat))
        dxhat = g * params.gammas[i]
        g = (cache.inv_stds[i] / n) * (
            n * dxhat - dxhat.sum(axis=0) - xhat * (dxhat * xhat).sum(axis=0)
        )
        d_weights[i] = cache.lin_inputs[i].T @ g
        d_biases[i] = g.sum(axis=0)
        g = g @ params.weights[i].T

    return MlpGrads(d_weights, d_biases, d_gammas, d_betas)


class AdamW:
    """AdamW with decoupled decay: parameters marked as weights are
    first scaled by ``1 - lr * weight_decay``, then updated with
    bias-corrected moment estimates."""

    def __init__(self, params: MlpParams, cfg: TrainConfig) -> None:
        self.cfg = cfg
        self._m = {name: np.zeros_like(p) for name, p, _ in params.optimizable()}
        self._v = {name: np.zeros_like(p) for name, p, _ in params.optimizable()}

    def step(self, params: MlpParams, grads: MlpGrads, lr_now: float) -> None:
        if lr_now <= 0:
            raise ValueError(f"lr_now must be positive, got {lr_now}")
        cfg = self.cfg
        t = params.step + 1
        bias1 = 1.0 - cfg.adam_beta1**t
        bias2 = 1.0 - cfg.adam_beta2**t
        grad_by_name = dict(grads.optimizable())
        for name, param, decayed in params.optimizable():
            grad = grad_by_name[name]
            if not np.isfinite(grad).all():
                raise TrainingError(f"non-finite gradient for {name}")
            if decayed and cfg.weight_decay > 0.0:
                param *= 1.0 - lr_now * cfg.weight_decay
            m = self._m[name]
            v = self._v[name]
            m *= cfg.adam_beta1
            m += (1.0 - cfg.adam_beta1) * grad
            v *= cfg.adam_beta2
            v += (1.0 - cfg.adam_beta2) * np.square(grad)
            m_hat = m / bias1
            v_hat = v / bias2
            param -= lr_now * m_hat / (np.sqrt(v_hat) + cfg.adam_eps)
        params.step = t


@dataclass(frozen=True)
class BatchInfo:
    """Passed to the training batch hook after every optimizer step."""

    epoch: int
    global_step: int
    normal_pair_indices: np.ndarray
    anomaly_pair_indices: np.ndarray
    loss: float


@dataclass
class TrainResult:
    params: MlpParams
    loss_trace: list[list[float]]

    @property
    def epoch_mean_losses(self) -> list[float]:
        return [float(np.mean(losses)) for losses in self.loss_trace]

    @property
    def total_steps(self) -> int:
        return sum(len(losses) for losses in self.loss_trace)


def train(
    pairs: PairedEmbeddingSet,
    arch: MlpArchitecture,
    cfg: TrainConfig,
    batch_hook=None,
) -> TrainResult:
    """Deterministic paired-batch training.

    Pairs are reshuffled every epoch with the seeded stream; each batch
    holds ``batch_size / 2`` pairs with both members present, rows
    interleaved normal/anomaly and labeled 0/1. The final partial batch
    is kept. The learning rate is multiplied by ``lr_decay_factor``
    after every epoch, and inputs are row-normalized first when
    ``cfg.normalize_inputs`` is set.
    """
    if pairs.count < 1:
        raise ValueError("training requires at least one pair")
    if pairs.dim != arch.input_dim:
        raise ValueError(
            f"pair dim {pairs.dim} != architecture input dim {arch.input_dim}"
        )
    x_normal = pairs.normals.data.astype(np.float64)
    x_anomaly = pairs.anomalies.data.astype(np.float64)
    if cfg.normalize_inputs:
        x_normal = unit_rows(x_normal)
        x_anomaly = unit_rows(x_anomaly)

    rng = SplitMix64(cfg.seed)
    params = init_params(arch, rng)
    optimizer = AdamW(params, cfg)
    pairs_per_batch = cfg.batch_size // 2
    order = list(range(pairs.count))
    trace: list[list[float]] = []
    lr_now = cfg.lr
    global_step = 0

    for epoch in range(cfg.epochs):
        if epoch > 0:
            lr_now *= cfg.lr_decay_factor
        rng.shuffle(order)
        epoch_losses: list[float] = []
        for start in range(0, pairs.count, pairs_per_batch):
            idx = np.asarray(order[start : start + pairs_per_batch], dtype=np.int64)
            k = idx.size
            batch = np.empty((2 * k, pairs.dim), dtype=np.float64)
            batch[0::2] = x_normal[idx]
            batch[1::2] = x_anomaly[idx]
            labels = np.empty(2 * k, dtype=np.float64)
            labels[0::2] = 0.0
            labels[1::2] = 1.0
            row_pairs = np.empty(2 * k, dtype=np.int64)
            row_pairs[0::2] = idx
            row_pairs[1::2] = idx

            logits, cache = forward(params, batch, "train", rng)
            loss, d_logits = bce_with_logits(logits, labels)
            if not np.isfinite(loss):
                raise TrainingError(f"non-finite loss at step {global_step}")
            grads = backward(params, cache, d_logits)
            optimizer.step(params, grads, lr_now)
            if batch_hook is not None:
                batch_hook(
                    BatchInfo(
                        epoch=epoch,
                        global_step=global_step,
                        normal_pair_indices=row_pairs[labels == 0.0].copy(),
                        anomaly_pair_indices=row_pairs[labels == 1.0].copy(),
                        loss=loss,
                    )
                )
            epoch_losses.append(loss)
            global_step += 1
        trace.append(epoch_losses)
    return TrainResult(params=params, loss_trace=trace)


def score_fnn(
    params: MlpParams,
    images: EmbeddingMatrix,
    normalize: bool = True,
    sample_ids: tuple[str, ...] | None = None,
) -> ScoreVector:
    """Sigmoid of the eval-mode logit for every image row."""
    if params.step < 1:
        raise StateError("cannot score with untrained parameters")
    x = _as_batch(images, params.arch.input_dim)
    if normalize:
        x = unit_rows(x)
    logits, _ = forward(params, x, "eval")
    ids = default_sample_ids(x.shape[0]) if sample_ids is None else sample_ids
    return ScoreVector(stable_sigmoid(logits), "s_fnn", ids)


_CKPT_MAGIC = b"FNN1"
_CKPT_VERSION = 1
_LEN_STRUCT = struct.Struct("<I")


def save_checkpoint(params: MlpParams, cfg: TrainConfig, path) -> None:
    """Write ``FNN1`` checkpoint: magic, u32 JSON-header length, JSON
    header, then float64 little-endian tensors in declared order."""
    tensors = list(params.named_tensors())
    header = {
        "format": "FNN1",
        "version": _CKPT_VERSION,
        "arch": {
            "input_dim": params.arch.input_dim,
            "hidden_dims": list(params.arch.hidden_dims),
            "dropout_rate": params.arch.dropout_rate,
            "bn_epsilon": params.arch.bn_epsilon,
            "bn_momentum": params.arch.bn_momentum,
        },
        "train_config": asdict(cfg),
        "step": params.step,
        "tensors": [{"name": name, "shape": list(t.shape)} for name, t in tensors],
    }
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(_CKPT_MAGIC)
        fh.write(_LEN_STRUCT.pack(len(blob)))
        fh.write(blob)
        for _, tensor in tensors:
            fh.write(np.ascontiguousarray(tensor, dtype="<f8").tobytes())


def load_checkpoint(path) -> tuple[MlpParams, TrainConfig]:
    """Read an ``FNN1`` checkpoint back into params and train config."""
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if len(magic) < 4 or magic != _CKPT_MAGIC:
            raise FormatError(f"{path}: bad checkpoint magic {magic!r}")
        raw_len = fh.read(_LEN_STRUCT.size)
        if len(raw_len) < _LEN_STRUCT.size:
            raise CorruptionError(f"{path}: truncated header length")
        (header_len,) = _LEN_STRUCT.unpack(raw_len)
        blob = fh.read(header_len)
        if len(blob) < header_len:
            raise CorruptionError(f"{path}: truncated JSON header")
        try:
            header = json.loads(blob.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise FormatError(f"{path}: unreadable header ({exc})") from exc
        if header.get("format") != "FNN1" or header.get("version") != _CKPT_VERSION:
            raise FormatError(f"{path}: unsupported checkpoint header")
        try:
            arch = MlpArchitecture(
                input_dim=int(header["arch"]["input_dim"]),
                hidden_dims=tuple(header["arch"]["hidden_dims"]),
                dropout_rate=float(header["arch"]["dropout_rate"]),
                bn_epsilon=float(header["arch"]["bn_epsilon"]),
                bn_momentum=float(header["arch"]["bn_momentum"]),
            )
            tc_doc = dict(header["train_config"])
            cfg = TrainConfig(**tc_doc)
            step = int(header["step"])
            manifest = header["tensors"]
        except (KeyError, TypeError, ConfigError) as exc:
            raise FormatError(f"{path}: malformed header: {exc}") from exc
        tensors: dict[str, np.ndarray] = {}
        for item in manifest:
            name = item["name"]
            shape = tuple(int(s) for s in item["shape"])
            nbytes = int(np.prod(shape, dtype=np.int64)) * 8
            raw = fh.read(nbytes)
            if len(raw) < nbytes:
                raise CorruptionError(f"{path}: tensor {name} truncated")
            tensors[name] = np.frombuffer(raw, dtype="<f8").reshape(shape).copy()
        if fh.read(1):
            raise CorruptionError(f"{path}: trailing bytes after declared tensors")

    def take(name: str) -> np.ndarray:
        if name not in tensors:
            raise FormatError(f"{path}: missing tensor {name}")
        return tensors.pop(name)

    weights = [take(f"layer{i}.weight") for i in range(_N_HIDDEN + 1)]
    biases = [take(f"layer{i}.bias") for i in range(_N_HIDDEN + 1)]
    gammas = [take(f"bn{j}.gamma") for j in range(_N_HIDDEN)]
    betas = [take(f"bn{j}.beta") for j in range(_N_HIDDEN)]
    run_means = [take(f"bn{j}.running_mean") for j in range(_N_HIDDEN)]
    run_vars = [take(f"bn{j}.running_var") for j in range(_N_HIDDEN)]
    if tensors:
        raise FormatError(f"{path}: unexpected tensors {sorted(tensors)}")
    for name, group in (("weights", weights), ("biases", biases)):
        for arr in group:
            if not np.isfinite(arr).all():
                raise DataError(f"{path}: non-finite values in {name}")
    for group in (gammas, betas, run_means, run_vars):
        for arr in group:
            if not np.isfinite(arr).all():
                raise DataError(f"{path}: non-finite batch-norm state")
    try:
        params = MlpParams(
            arch, weights, biases, gammas, betas, run_means, run_vars, step=step
        )
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from exc
    return params, cfg
