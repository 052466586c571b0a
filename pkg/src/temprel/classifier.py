"""One-vs-one linear max-margin classifier with vote counting and a
distance-sum confidence score.

Each unordered class pair (i, j) gets a linear separator trained by seeded
stochastic subgradient descent on the regularized hinge loss.  A positive
score ``w.x + b`` votes for ``i``, a negative one for ``j``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path
from typing import Mapping, Sequence, Union

import numpy as np

from .corpus import Scheme, SCHEME_LABELS
from .features import SparseVector

MODEL_FORMAT = "temprel-ovo/1"

Vector = Union[SparseVector, np.ndarray]


class TrainingError(ValueError):
    pass


@dataclass
class TrainConfig:
    epochs: int = 50
    regularization: float = 1e-4
    seed: int = 0
    batch_size: int = 16


@dataclass
class DecisionHyperplane:
    weights: np.ndarray
    bias: float
    class_pair: tuple[str, str]

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        if self.class_pair[0] == self.class_pair[1]:
            raise ValueError("hyperplane needs two distinct classes")
        if not (np.all(np.isfinite(self.weights)) and np.isfinite(self.bias)):
            raise ValueError("non-finite hyperplane weights")


@dataclass
class HyperplaneBank:
    labels: tuple[str, ...]
    hyperplanes: list[DecisionHyperplane]

    def __post_init__(self):
        m = len(self.labels)
        if len(self.hyperplanes) != m * (m - 1) // 2:
            raise ValueError(f"{m} labels need {m * (m - 1) // 2} hyperplanes, got {len(self.hyperplanes)}")


@dataclass
class OvoLinearModel:
    """Label set, routing mode and one or two hyperplane banks.

    ``routing`` is ``"single"`` (bank ``"single"``) or ``"intra_inter_split"``
    (banks ``"intra"`` and ``"inter"``, chosen by whether the two events share
    a sentence).
    """
    scheme: Scheme
    routing: str
    banks: dict[str, HyperplaneBank] = field(default_factory=dict)

    def __post_init__(self):
        self.scheme = Scheme.parse(self.scheme)
        need = {"single"} if self.routing == "single" else {"intra", "inter"}
        if self.routing not in ("single", "intra_inter_split") or set(self.banks) != need:
            raise ValueError(f"routing {self.routing!r} needs banks {sorted(need)}")

    @property
    def labels(self) -> tuple[str, ...]:
        return SCHEME_LABELS[self.scheme]

    def bank(self, intra: bool | None = None) -> HyperplaneBank:
        if self.routing == "single":
            return self.banks["single"]
        if intra is None:
            raise ValueError("split model needs the intra/inter route")
        return self.banks["intra" if intra else "inter"]


# ---------------------------------------------------------------------------
# training

def _dimension(data: Sequence[tuple[Vector, str]]) -> int:
    dim = 0
    for x, _ in data:
        if isinstance(x, np.ndarray):
            dim = max(dim, x.shape[0])
        elif x:
            dim = max(dim, max(x) + 1)
    return dim


def _dense(x: Vector, dim: int) -> np.ndarray:
    if isinstance(x, np.ndarray):
        out = np.zeros(dim)
        n = min(dim, x.shape[0])
        out[:n] = x[:n]
        return out
    out = np.zeros(dim)
    for k, v in x.items():
        if k < dim:
            out[k] = v
    return out


def _train_pair(X: np.ndarray, y: np.ndarray, cfg: TrainConfig, rng: np.random.Generator):
    """Mini-batch Pegasos on the bias-augmented design matrix.

    Returns the average of the iterates over the second half of the epochs,
    which is far less sensitive to the sampling order than the last iterate.
    """
    n, d = X.shape
    Xa = np.hstack([X, np.ones((n, 1))])
    w = np.zeros(d + 1)
    avg = np.zeros(d + 1)
    averaged = 0
    lam = cfg.regularization
    bs = max(1, cfg.batch_size)
    t = 0
    for epoch in range(cfg.epochs):
        order = rng.permutation(n)
        for start in range(0, n, bs):
            t += 1
            idx = order[start:start + bs]
            xb, yb = Xa[idx], y[idx]
            viol = yb * (xb @ w) < 1.0
            eta = 1.0 / (lam * t)
            w *= 1.0 - eta * lam
            if viol.any():
                w += (eta / len(idx)) * (yb[viol] @ xb[viol])
            if 2 * epoch >= cfg.epochs:
                avg += w
                averaged += 1
    if averaged:
        w = avg / averaged
    return w[:d], float(w[d])


def _train_bank(data: Sequence[tuple[Vector, str]], scheme: Scheme, cfg: TrainConfig,
                dim: int) -> HyperplaneBank:
    labels = SCHEME_LABELS[scheme]
    ys = [label for _, label in data]
    for label in ys:
        if label not in labels:
            raise TrainingError(f"label {label!r} is not in {scheme.value}")
    missing = [label for label in labels if label not in set(ys)]
    if missing:
        raise TrainingError(f"no training examples for class {missing[0]}")
    X = np.vstack([_dense(x, dim) for x, _ in data]) if data else np.zeros((0, dim))
    y_arr = np.array(ys)
    planes = []
    for p, (ci, cj) in enumerate(combinations(labels, 2)):
        mask = (y_arr == ci) | (y_arr == cj)
        sign = np.where(y_arr[mask] == ci, 1.0, -1.0)
        rng = np.random.default_rng([cfg.seed, p])
        w, b = _train_pair(X[mask], sign, cfg, rng)
        planes.append(DecisionHyperplane(w, b, (ci, cj)))
    return HyperplaneBank(labels, planes)


def train(data: Sequence[tuple[Vector, str]], scheme: Union[Scheme, str] = Scheme.COARSE3,
          config: TrainConfig | None = None, dim: int | None = None) -> OvoLinearModel:
    """Single-bank model over (vector, label) examples."""
    scheme = Scheme.parse(scheme)
    cfg = config or TrainConfig()
    dim = _dimension(data) if dim is None else dim
    return OvoLinearModel(scheme, "single", {"single": _train_bank(data, scheme, cfg, dim)})


def train_split(data: Sequence[tuple[Vector, str, bool]], scheme: Union[Scheme, str] = Scheme.COARSE3,
                config: TrainConfig | None = None, dim: int | None = None) -> OvoLinearModel:
    """Two-bank model; examples carry an ``intra`` flag.

    A route whose subset lacks a class falls back to a bank trained on all
    examples.
    """
    scheme = Scheme.parse(scheme)
    cfg = config or TrainConfig()
    pairs = [(x, label) for x, label, _ in data]
    dim = _dimension(pairs) if dim is None else dim
    banks = {}
    combined = None
    for name, flag in (("intra", True), ("inter", False)):
        subset = [(x, label) for x, label, intra in data if intra == flag]
        if set(label for _, label in subset) >= set(SCHEME_LABELS[scheme]):
            banks[name] = _train_bank(subset, scheme, cfg, dim)
        else:
            if combined is None:
                combined = _train_bank(pairs, scheme, cfg, dim)
            banks[name] = combined
    return OvoLinearModel(scheme, "intra_inter_split", banks)


# ---------------------------------------------------------------------------
# scoring

def distance(h: DecisionHyperplane, x: Vector) -> float:
    """Signed score ``w.x + b``; positive favors ``class_pair[0]``."""
    w = h.weights
    if isinstance(x, np.ndarray):
        n = min(w.shape[0], x.shape[0])
        return float(w[:n] @ x[:n]) + h.bias
    total = h.bias
    d = w.shape[0]
    for k in sorted(x):
        if k < d:
            total += w[k] * x[k]
    return float(total)


def _resolve(model: Union[OvoLinearModel, HyperplaneBank], intra: bool | None) -> HyperplaneBank:
    return model if isinstance(model, HyperplaneBank) else model.bank(intra)


def classify(model: Union[OvoLinearModel, HyperplaneBank], x: Vector,
             intra: bool | None = None) -> tuple[str, dict[str, int]]:
    bank = _resolve(model, intra)
    votes = {label: 0 for label in bank.labels}
    for h in bank.hyperplanes:
        votes[h.class_pair[0] if distance(h, x) > 0 else h.class_pair[1]] += 1
    winner = max(bank.labels, key=lambda label: votes[label])
    return winner, votes


def confidence(model: Union[OvoLinearModel, HyperplaneBank], x: Vector,
               intra: bool | None = None, label: str | None = None) -> float:
    """Absolute sum of the distances to the m-1 hyperplanes of the winning
    class, each signed toward that class."""
    bank = _resolve(model, intra)
    if label is None:
        label, _ = classify(bank, x)
    total = 0.0
    for h in bank.hyperplanes:
        if label == h.class_pair[0]:
            total += distance(h, x)
        elif label == h.class_pair[1]:
            total -= distance(h, x)
    return abs(total)


def mean_confidence(model, x: Vector, intra: bool | None = None) -> float:
    """Confidence divided by m-1, for reporting."""
    bank = _resolve(model, intra)
    return confidence(bank, x) / (len(bank.labels) - 1)


def predict(model: OvoLinearModel, x: Vector, intra: bool | None = None) -> tuple[str, float]:
    bank = _resolve(model, intra)
    label, _ = classify(bank, x)
    return label, confidence(bank, x, label=label)


# ---------------------------------------------------------------------------
# persistence

def _bank_record(bank: HyperplaneBank) -> dict:
    return {
        "labels": list(bank.labels),
        "hyperplanes": [
            {
                "class_pair": list(h.class_pair),
                "bias": h.bias,
                "dim": int(h.weights.shape[0]),
                "weights": {str(k): float(h.weights[k]) for k in np.flatnonzero(h.weights)},
            }
            for h in bank.hyperplanes
        ],
    }


def _bank_from_record(rec: Mapping) -> HyperplaneBank:
    planes = []
    for hp in rec["hyperplanes"]:
        w = np.zeros(int(hp["dim"]))
        for k, v in hp["weights"].items():
            w[int(k)] = float(v)
        planes.append(DecisionHyperplane(w, float(hp["bias"]), tuple(hp["class_pair"])))
    return HyperplaneBank(tuple(rec["labels"]), planes)


def model_to_json(model: OvoLinearModel) -> str:
    # identical banks (split fallback) are written twice; loading keeps them equal
    rec = {
        "format": MODEL_FORMAT,
        "scheme": model.scheme.value,
        "routing": model.routing,
        "banks": {name: _bank_record(bank) for name, bank in sorted(model.banks.items())},
    }
    return json.dumps(rec, sort_keys=True, indent=1) + "\n"


def model_from_json(text: str) -> OvoLinearModel:
    rec = json.loads(text)
    if rec.get("format") != MODEL_FORMAT:
        raise ValueError(f"unsupported model format {rec.get('format')!r}")
    banks = {name: _bank_from_record(b) for name, b in rec["banks"].items()}
    return OvoLinearModel(Scheme.parse(rec["scheme"]), rec["routing"], banks)


def save_model(model: OvoLinearModel, path: Union[str, Path]):
    Path(path).write_text(model_to_json(model), encoding="utf-8")


def load_model(path: Union[str, Path]) -> OvoLinearModel:
    return model_from_json(Path(path).read_text(encoding="utf-8"))


__all__ = [
    "DecisionHyperplane", "HyperplaneBank", "OvoLinearModel", "TrainConfig", "TrainingError",
    "classify", "confidence", "distance", "load_model", "mean_confidence", "model_from_json",
    "model_to_json", "predict", "save_model", "train", "train_split",
]
