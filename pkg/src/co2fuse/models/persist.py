"""Text persistence for trained models.

Layout (one logical section per line group):

    CO2FUSE-MODEL v1 <kind>
    features <14 space-separated names>
    normstats none | normstats-mean ... / normstats-std ...
    <kind-specific payload>

All floats are written with 17 significant digits so save/load round-trips
reproduce predictions bit for bit. Trees are stored as s-expression lists,
MLP weight matrices row-major.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import FeatureOrderError, ModelFormatError
from ..fusion import FEATURE_NAMES, NormStats
from .baseline import LinearModel
from .category import DECODE_MODES, CatModel
from .gbt import GbtModel
from .mlp import MlpModel
from .trees import tree_from_sexpr, tree_to_sexpr

MAGIC = "CO2FUSE-MODEL"
FORMAT_VERSION = "v1"
MODEL_KINDS = ("baseline", "gbt", "catboost", "mlp")

ModelObject = LinearModel | GbtModel | CatModel | MlpModel


@dataclass(frozen=True)
class TrainedModel:
    """A trained predictor plus the feature order it was fit on."""

    kind: str
    model: ModelObject
    feature_names: tuple[str, ...] = FEATURE_NAMES
    format_version: str = FORMAT_VERSION

    def __post_init__(self):
        if self.kind not in MODEL_KINDS:
            raise ValueError(f"unknown model kind {self.kind!r}")


def _check_fingerprint(tm: TrainedModel) -> None:
    if tuple(tm.feature_names) != FEATURE_NAMES:
        raise FeatureOrderError(
            f"model was saved with feature order {tm.feature_names}, "
            f"expected the canonical order {FEATURE_NAMES}"
        )


def predict_batch(tm: TrainedModel, X: np.ndarray) -> np.ndarray:
    """Predict ppm for a batch of canonical feature vectors."""
    _check_fingerprint(tm)
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[1] != len(FEATURE_NAMES):
        raise FeatureOrderError(
            f"feature matrix has {X.shape[1]} columns, expected {len(FEATURE_NAMES)}"
        )
    return tm.model.predict_batch(X)


def predict(tm: TrainedModel, v: np.ndarray) -> float:
    return float(predict_batch(tm, np.asarray(v, dtype=np.float64)[None, :])[0])


def _f(x: float) -> str:
    return f"{float(x):.17g}"


def _floats_line(tag: str, values) -> str:
    return tag + " " + " ".join(_f(v) for v in values)


def save(tm: TrainedModel, path) -> None:
    lines = [
        f"{MAGIC} {FORMAT_VERSION} {tm.kind}",
        "features " + " ".join(tm.feature_names),
    ]
    norm = getattr(tm.model, "norm", None)
    if norm is None:
        lines.append("normstats none")
    else:
        lines.append(_floats_line("normstats-mean", norm.mean))
        lines.append(_floats_line("normstats-std", norm.std))

    m = tm.model
    if tm.kind == "baseline":
        lines.append(f"slope {_f(m.slope)}")
        lines.append(f"intercept {_f(m.intercept)}")
    elif tm.kind == "gbt":
        lines.append(f"base_score {_f(m.base_score)}")
        lines.append(f"learning_rate {_f(m.learning_rate)}")
        lines.append(f"n_trees {len(m.trees)}")
        lines.extend(tree_to_sexpr(t) for t in m.trees)
    elif tm.kind == "catboost":
        lines.append(f"classes {m.n_classes}")
        lines.append(f"learning_rate {_f(m.learning_rate)}")
        lines.append(f"decode {m.decode}")
        lines.append(_floats_line("edges", m.bin_edges))
        lines.append(_floats_line("centers", m.bin_centers))
        lines.append(f"iterations {len(m.trees)}")
        for round_trees in m.trees:
            lines.extend(tree_to_sexpr(t) for t in round_trees)
    elif tm.kind == "mlp":
        lines.append(f"l2_lambda {_f(m.l2_lambda)}")
        sizes = [m.weights[0].shape[0]] + [w.shape[1] for w in m.weights]
        lines.append("layers " + " ".join(str(s) for s in sizes))
        for w, b in zip(m.weights, m.biases):
            lines.append(f"W {w.shape[0]} {w.shape[1]}")
            lines.extend(" ".join(_f(v) for v in row) for row in w)
            lines.append(f"b {b.shape[0]} " + " ".join(_f(v) for v in b))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


class _LineReader:
    def __init__(self, path):
        with open(path, "r", encoding="utf-8") as fh:
            self.lines = fh.read().splitlines()
        self.pos = 0
        self.path = path

    def next(self) -> str:
        if self.pos >= len(self.lines):
            raise ModelFormatError(f"{self.path}: truncated model file")
        line = self.lines[self.pos]
        self.pos += 1
        return line

    def tagged(self, tag: str) -> list[str]:
        line = self.next()
        parts = line.split()
        if not parts or parts[0] != tag:
            raise ModelFormatError(f"{self.path}: expected {tag!r} line, got {line!r}")
        return parts[1:]

    def floats(self, tag: str) -> np.ndarray:
        try:
            return np.array([float(v) for v in self.tagged(tag)], dtype=np.float64)
        except ValueError as exc:
            raise ModelFormatError(f"{self.path}: bad float in {tag!r} line") from exc


def load(path) -> TrainedModel:
    """Load a model file; bad magic, version or payload raises ModelFormatError."""
    r = _LineReader(path)
    head = r.next().split()
    if len(head) != 3 or head[0] != MAGIC:
        raise ModelFormatError(f"{path}: not a model file (bad magic line)")
    if head[1] != FORMAT_VERSION:
        raise ModelFormatError(
            f"{path}: unsupported format version {head[1]!r} (expected {FORMAT_VERSION})"
        )
    kind = head[2]
    if kind not in MODEL_KINDS:
        raise ModelFormatError(f"{path}: unknown model kind {kind!r}")
    features = tuple(r.tagged("features"))

    norm = None
    marker = r.next()
    if marker.strip() != "normstats none":
        r.pos -= 1
        mean = r.floats("normstats-mean")
        std = r.floats("normstats-std")
        if mean.shape != std.shape:
            raise ModelFormatError(f"{path}: normstats mean/std length mismatch")
        norm = NormStats(mean=mean, std=std)

    try:
        if kind == "baseline":
            slope = float(r.tagged("slope")[0])
            intercept = float(r.tagged("intercept")[0])
            model: ModelObject = LinearModel(slope=slope, intercept=intercept)
        elif kind == "gbt":
            base = float(r.tagged("base_score")[0])
            lr = float(r.tagged("learning_rate")[0])
            n_trees = int(r.tagged("n_trees")[0])
            trees = [tree_from_sexpr(r.next()) for _ in range(n_trees)]
            model = GbtModel(base_score=base, learning_rate=lr, trees=trees)
        elif kind == "catboost":
            k = int(r.tagged("classes")[0])
            lr = float(r.tagged("learning_rate")[0])
            decode = r.tagged("decode")[0]
            if decode not in DECODE_MODES:
                raise ModelFormatError(f"{path}: unknown decode mode {decode!r}")
            edges = r.floats("edges")
            centers = r.floats("centers")
            if len(edges) != k + 1 or len(centers) != k:
                raise ModelFormatError(f"{path}: bin edge/center counts do not match classes")
            iterations = int(r.tagged("iterations")[0])
            trees = [
                [tree_from_sexpr(r.next()) for _ in range(k)] for _ in range(iterations)
            ]
            model = CatModel(
                bin_edges=edges, bin_centers=centers, learning_rate=lr,
                decode=decode, trees=trees,
            )
        elif kind == "mlp":
            l2 = float(r.tagged("l2_lambda")[0])
            sizes = [int(s) for s in r.tagged("layers")]
            if len(sizes) < 2:
                raise ModelFormatError(f"{path}: mlp needs at least two layer sizes")
            weights = []
            biases = []
            for n_in, n_out in zip(sizes[:-1], sizes[1:]):
                dims = r.tagged("W")
                if [int(dims[0]), int(dims[1])] != [n_in, n_out]:
                    raise ModelFormatError(f"{path}: weight matrix shape mismatch")
                rows = [
                    [float(v) for v in r.next().split()] for _ in range(n_in)
                ]
                w = np.array(rows, dtype=np.float64)
                if w.shape != (n_in, n_out):
                    raise ModelFormatError(f"{path}: weight matrix row length mismatch")
                bias_parts = r.tagged("b")
                bias_vals = np.array([float(v) for v in bias_parts[1:]], dtype=np.float64)
                if int(bias_parts[0]) != n_out or bias_vals.shape != (n_out,):
                    raise ModelFormatError(f"{path}: bias length mismatch")
                weights.append(w)
                biases.append(bias_vals)
            model = MlpModel(weights=weights, biases=biases, l2_lambda=l2, norm=norm)
    except (ValueError, IndexError) as exc:
        raise ModelFormatError(f"{path}: malformed payload ({exc})") from exc

    return TrainedModel(kind=kind, model=model, feature_names=features)
