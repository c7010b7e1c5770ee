"""MLP complexity regressor trained with L-BFGS, baselines, and grid rounding."""

from __future__ import annotations

import json
import logging
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import DataError, DimensionMismatch, EmptyInput
from .features import (
    ALL_GROUPS,
    EncoderState,
    FeatureGroup,
    FeatureResources,
    FeatureVector,
    encode_many,
    fit_encoder,
)
from .optim import LbfgsConfig, OptResult, Status, minimize
from .seeding import rng_for

log = logging.getLogger(__name__)

MODEL_FORMAT = "mwe-complexity-model"
MODEL_VERSION = 1

ACTIVATIONS = ("relu", "tanh")


@dataclass(frozen=True)
class MlpConfig:
    hidden_layers: tuple[int, ...] = (100,) * 6
    activation: str = "relu"
    l2_alpha: float = 1e-4
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "hidden_layers", tuple(int(w) for w in self.hidden_layers))
        if not self.hidden_layers or min(self.hidden_layers) < 1:
            raise ValueError("need at least one hidden layer of width >= 1")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"activation must be one of {ACTIVATIONS}")
        if self.l2_alpha < 0:
            raise ValueError("l2_alpha must be >= 0")

    @staticmethod
    def parse_hidden(text: str) -> tuple[int, ...]:
        """``"100x6"`` -> six layers of 100; ``"64,32"`` -> two layers."""
        text = text.strip()
        if "x" in text:
            width, depth = text.split("x")
            return (int(width),) * int(depth)
        return tuple(int(w) for w in text.split(","))

    def to_dict(self):
        return {"hidden_layers": list(self.hidden_layers), "activation": self.activation,
                "l2_alpha": self.l2_alpha, "seed": self.seed}


@dataclass
class MlpParams:
    """Weights ``W[k]`` of shape (fan_in, fan_out) and biases ``b[k]``."""

    weights: list[np.ndarray]
    biases: list[np.ndarray]

    @property
    def shapes(self):
        return [w.shape for w in self.weights]

    @property
    def input_dim(self) -> int:
        return self.weights[0].shape[0]

    def flatten(self) -> np.ndarray:
        parts = []
        for w, b in zip(self.weights, self.biases):
            parts.append(w.ravel())
            parts.append(b.ravel())
        return np.concatenate(parts)

    def unflatten(self, flat: np.ndarray) -> "MlpParams":
        ws, bs = [], []
        pos = 0
        for w in self.weights:
            n = w.size
            ws.append(flat[pos:pos + n].reshape(w.shape))
            pos += n
            m = w.shape[1]
            bs.append(flat[pos:pos + m].copy())
            pos += m
        return MlpParams(ws, bs)

    def weight_mask(self) -> np.ndarray:
        """1 where the flat vector holds a weight, 0 where it holds a bias."""
        parts = []
        for w, b in zip(self.weights, self.biases):
            parts.append(np.ones(w.size))
            parts.append(np.zeros(b.size))
        return np.concatenate(parts)


def init_params(cfg: MlpConfig, input_dim: int) -> MlpParams:
    """Glorot-uniform weights, zero biases, from the seed's ``init`` stream."""
    if input_dim < 1:
        raise ValueError("input_dim must be >= 1")
    rng = rng_for(cfg.seed, "init")
    dims = (input_dim, *cfg.hidden_layers, 1)
    ws, bs = [], []
    for fan_in, fan_out in zip(dims, dims[1:]):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        ws.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
        bs.append(np.zeros(fan_out))
    return MlpParams(ws, bs)


def _act(z, activation):
    if activation == "relu":
        return np.maximum(z, 0.0)
    return np.tanh(z)


def _act_grad(z, a, activation):
    if activation == "relu":
        return (z > 0).astype(np.float64)
    return 1.0 - a * a


def forward(p: MlpParams, x, activation: str = "relu"):
    """Network output for one vector (returns float) or a batch (returns 1-D array)."""
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    a = x[None, :] if single else x
    if a.shape[1] != p.input_dim:
        raise DimensionMismatch(f"input has {a.shape[1]} features, network expects {p.input_dim}")
    last = len(p.weights) - 1
    for k, (w, b) in enumerate(zip(p.weights, p.biases)):
        a = a @ w + b
        if k < last:
            a = _act(a, activation)
    out = a[:, 0]
    return float(out[0]) if single else out


def loss_and_grad(p: MlpParams, X: np.ndarray, y: np.ndarray, activation: str = "relu",
                  l2_alpha: float = 0.0) -> tuple[float, MlpParams]:
    """Half mean squared error plus ``l2_alpha / 2 * sum(W**2)``; biases unpenalized."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n = X.shape[0]
    if n == 0:
        raise EmptyInput("empty batch")
    if X.shape[1] != p.input_dim:
        raise DimensionMismatch(f"input has {X.shape[1]} features, network expects {p.input_dim}")

    acts = [X]
    pre = []
    last = len(p.weights) - 1
    a = X
    for k, (w, b) in enumerate(zip(p.weights, p.biases)):
        z = a @ w + b
        pre.append(z)
        a = _act(z, activation) if k < last else z
        acts.append(a)

    resid = acts[-1][:, 0] - y
    value = 0.5 * float(resid @ resid) / n
    value += 0.5 * l2_alpha * sum(float(np.sum(w * w)) for w in p.weights)

    gw = [None] * len(p.weights)
    gb = [None] * len(p.weights)
    delta = (resid / n)[:, None]
    for k in range(last, -1, -1):
        gw[k] = acts[k].T @ delta + l2_alpha * p.weights[k]
        gb[k] = delta.sum(axis=0)
        if k > 0:
            delta = (delta @ p.weights[k].T) * _act_grad(pre[k - 1], acts[k], activation)
    return value, MlpParams(gw, gb)


def round_to_grid(raw: float, step: float = 0.05) -> float:
    """Clamp to [0, 1] and snap to the nearest multiple of ``step``.

    Inputs are taken at their shortest decimal representation, so a
    printed midpoint such as 0.075 counts as an exact tie, and ties round
    up.
    """
    if step <= 0:
        raise ValueError("step must be positive")
    v = min(1.0, max(0.0, float(raw)))
    unit = Fraction(repr(float(step)))
    k = int(Fraction(repr(v)) / unit + Fraction(1, 2))  # floor, argument is >= 0
    out = k * unit
    if out > 1:
        out -= unit
    return float(out)


def round_many(raw: Sequence[float], step: float = 0.05) -> np.ndarray:
    return np.array([round_to_grid(r, step) for r in raw], dtype=np.float64)


# -- regressors --------------------------------------------------------------

@dataclass
class MlpModel:
    config: MlpConfig
    params: MlpParams
    encoder: EncoderState | None = None
    groups: frozenset[FeatureGroup] = ALL_GROUPS
    status: Status = Status.CONVERGED
    opt: OptResult | None = field(default=None, repr=False)
    resources: FeatureResources | None = field(default=None, repr=False)
    resource_refs: dict = field(default_factory=dict)

    @property
    def warning(self) -> bool:
        """True when training stopped without meeting the gradient tolerance."""
        return self.status is not Status.CONVERGED

    def predict(self, X) -> np.ndarray:
        return np.atleast_1d(forward(self.params, X, self.config.activation))

    def predict_features(self, vectors: Sequence[FeatureVector]) -> np.ndarray:
        if self.encoder is None:
            raise DataError("model has no fitted encoder")
        return self.predict(encode_many(vectors, self.encoder, self.groups))

    # serialization
    def to_dict(self) -> dict:
        d = {
            "format": MODEL_FORMAT,
            "version": MODEL_VERSION,
            "config": self.config.to_dict(),
            "groups": sorted(g.value for g in self.groups),
            "status": self.status.value,
            "encoder": self.encoder.to_dict() if self.encoder else None,
            "layers": [{"W": w.tolist(), "b": b.tolist()}
                       for w, b in zip(self.params.weights, self.params.biases)],
            "resource_refs": self.resource_refs,
        }
        if self.resources is not None:
            d["resources"] = self.resources.to_dict()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "MlpModel":
        if d.get("format") != MODEL_FORMAT:
            raise DataError("not a model file")
        if d.get("version") != MODEL_VERSION:
            raise DataError(f"unsupported model version {d.get('version')}")
        cfg = d["config"]
        params = MlpParams(
            [np.array(layer["W"], dtype=np.float64) for layer in d["layers"]],
            [np.array(layer["b"], dtype=np.float64) for layer in d["layers"]],
        )
        return cls(
            config=MlpConfig(tuple(cfg["hidden_layers"]), cfg["activation"],
                             cfg["l2_alpha"], cfg["seed"]),
            params=params,
            encoder=EncoderState.from_dict(d["encoder"]) if d["encoder"] else None,
            groups=frozenset(FeatureGroup(g) for g in d["groups"]),
            status=Status(d["status"]),
            resources=FeatureResources.from_dict(d["resources"]) if "resources" in d else None,
            resource_refs=d.get("resource_refs", {}),
        )

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()), encoding="utf-8")

    @classmethod
    def load(cls, path) -> "MlpModel":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


@dataclass(frozen=True)
class ConstantBaseline:
    c: float

    def __post_init__(self):
        if not 0.0 <= self.c <= 1.0:
            raise ValueError("constant must lie in [0, 1]")

    def predict(self, X) -> np.ndarray:
        return np.full(len(X), self.c, dtype=np.float64)


@dataclass(frozen=True)
class ModeBaseline:
    mode: float

    @classmethod
    def from_labels(cls, labels: Sequence[float]) -> "ModeBaseline":
        """Most frequent label; ties go to the smaller value."""
        if len(labels) == 0:
            raise EmptyInput("no labels")
        # labels live on a decimal grid; key on 1e-6 buckets to dodge float noise
        counts = Counter(round(float(v), 6) for v in labels)
        best = max(counts.items(), key=lambda kv: (kv[1], -kv[0]))
        return cls(best[0])

    def predict(self, X) -> np.ndarray:
        return np.full(len(X), self.mode, dtype=np.float64)


def baseline_constant(c: float = 0.05) -> ConstantBaseline:
    return ConstantBaseline(c)


def baseline_mode(train_labels: Sequence[float]) -> ModeBaseline:
    return ModeBaseline.from_labels(train_labels)


# -- training ----------------------------------------------------------------

def train(X: np.ndarray, y: np.ndarray, cfg: MlpConfig = MlpConfig(),
          lbfgs_cfg: LbfgsConfig = LbfgsConfig()) -> MlpModel:
    """Fit an MLP on encoded inputs by full-batch L-BFGS from :func:`init_params`."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise EmptyInput("training set is empty")
    if X.shape[0] != y.shape[0]:
        raise DimensionMismatch("X and y disagree on the number of samples")
    p0 = init_params(cfg, X.shape[1])

    def fg(flat):
        value, grad = loss_and_grad(p0.unflatten(flat), X, y, cfg.activation, cfg.l2_alpha)
        return value, grad.flatten()

    res = minimize(fg, p0.flatten(), lbfgs_cfg)
    if res.status is not Status.CONVERGED:
        log.warning("training stopped with status %s after %d iterations (grad %.3g)",
                    res.status.value, res.iterations, res.grad_norm)
    return MlpModel(cfg, p0.unflatten(res.x), status=res.status, opt=res)


def fit_model(vectors: Sequence[FeatureVector], targets: Sequence[float],
              cfg: MlpConfig = MlpConfig(), lbfgs_cfg: LbfgsConfig = LbfgsConfig(),
              groups: frozenset[FeatureGroup] = ALL_GROUPS) -> MlpModel:
    """Fit the encoder on ``vectors`` only, then train on their encodings."""
    enc = fit_encoder(vectors)
    model = train(encode_many(vectors, enc, groups), np.asarray(targets, dtype=np.float64),
                  cfg, lbfgs_cfg)
    model.encoder = enc
    model.groups = frozenset(groups)
    return model
