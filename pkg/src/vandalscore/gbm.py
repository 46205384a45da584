"""Gradient-boosted decision trees with second-order (Newton) leaf weights.

Binary classifier under logistic loss. Per round, with current probability
p, the gradient is g = p - y and the hessian h = p(1-p); splits maximize

    gain = 1/2 * [ G_L^2/(H_L+lam) + G_R^2/(H_R+lam) - G^2/(H+lam) ] - gamma

over midpoints of consecutive distinct sorted feature values, and leaves
carry w = -eta * G/(H+lam). The missing-value placeholder -1 participates
as an ordinary number; there is no learned default direction.
"""

import math
import os
import tempfile
from dataclasses import dataclass

import numpy as np

from . import _accel
from .errors import CorruptModel, DegenerateLabels, SchemaMismatch

MODEL_MAGIC = "GBM"
MODEL_VERSION = "v1"
_MARGIN_CLIP = 35.0  # keeps sigmoid strictly inside (0, 1) in float64


@dataclass(frozen=True)
class GBMParams:
    max_depth: int = 7
    rounds: int = 200
    learning_rate: float = 0.3
    l2_penalty: float = 1.0
    min_split_gain: float = 0.0
    min_child_hessian: float = 1.0
    base_score: float = 0.5

    def validate(self):
        if self.max_depth < 0:
            raise ValueError("max_depth must be >= 0")
        if self.rounds < 1:
            raise ValueError("rounds must be >= 1")
        if not 0.0 < self.learning_rate <= 1.0:
            raise ValueError("learning_rate must be in (0, 1]")
        if self.l2_penalty < 0.0:
            raise ValueError("l2_penalty must be >= 0")
        if not 0.0 < self.base_score < 1.0:
            raise ValueError("base_score must be a probability in (0, 1)")


class TreeEnsemble:
    """Trained ensemble: node arrays per tree plus the training schema hash.

    Leaves have featureSlot -1 and carry the eta-scaled leaf value in the
    threshold slot.
    """

    def __init__(self, params, trees, schema_hash=""):
        self.params = params
        self.trees = trees  # list of (feat int32[], thr float64[], left int32[], right int32[])
        self.schema_hash = schema_hash
        self._flat = None

    def __len__(self):
        return len(self.trees)

    @property
    def base_margin(self):
        p = self.params.base_score
        return math.log(p / (1.0 - p))

    def flat(self):
        """Concatenated node arrays with per-tree root offsets, cached."""
        if self._flat is None:
            if self.trees:
                feat = np.concatenate([t[0] for t in self.trees])
                thr = np.concatenate([t[1] for t in self.trees])
                offsets = np.zeros(len(self.trees), dtype=np.int64)
                pos = 0
                lefts, rights = [], []
                for i, (f, _, l, r) in enumerate(self.trees):
                    offsets[i] = pos
                    shift = np.where(l >= 0, l + pos, -1).astype(np.int32)
                    lefts.append(shift)
                    rights.append(np.where(r >= 0, r + pos, -1).astype(np.int32))
                    pos += len(f)
                left = np.concatenate(lefts)
                right = np.concatenate(rights)
            else:
                feat = np.zeros(0, dtype=np.int32)
                thr = np.zeros(0, dtype=np.float64)
                left = np.zeros(0, dtype=np.int32)
                right = np.zeros(0, dtype=np.int32)
                offsets = np.zeros(0, dtype=np.int64)
            self._flat = (feat, thr, left, right, offsets)
        return self._flat

    def max_feature_slot(self):
        feat = self.flat()[0]
        return int(feat.max()) if len(feat) and (feat >= 0).any() else -1


def _as_matrix(matrix):
    X = np.ascontiguousarray(matrix, dtype=np.float64)
    if X.ndim != 2:
        raise SchemaMismatch("feature matrix must be 2-dimensional")
    return X


def train(matrix, labels, params=None, schema_hash=""):
    """Fit a boosted ensemble; deterministic for fixed inputs."""
    params = params or GBMParams()
    params.validate()
    X = _as_matrix(matrix)
    y = np.asarray(labels, dtype=np.float64)
    if X.shape[0] != y.shape[0]:
        raise SchemaMismatch(f"{X.shape[0]} rows vs {y.shape[0]} labels")
    if X.shape[0] < 2:
        raise DegenerateLabels("need at least 2 rows")
    if not ((y == 0).any() and (y == 1).any()):
        raise DegenerateLabels("training labels contain a single class")

    order = _accel.presort_columns(X)
    margins = np.full(X.shape[0], math.log(params.base_score / (1.0 - params.base_score)))
    trees = []
    starts0 = np.zeros(1, dtype=np.int64)
    for _ in range(params.rounds):
        p = 1.0 / (1.0 + np.exp(-margins))
        g = p - y
        h = p * (1.0 - p)
        feat, thr, left, right = _accel.build_tree(
            X, g, h, order, params.max_depth, params.l2_penalty,
            params.min_split_gain, params.min_child_hessian)
        leaf = feat < 0
        thr[leaf] = thr[leaf] * params.learning_rate
        margins = margins + _accel.predict_margins(X, feat, thr, left, right, starts0)
        trees.append((feat, thr, left, right))
    return TreeEnsemble(params, trees, schema_hash)


def predict_margin_many(model, matrix):
    X = _as_matrix(matrix)
    if model.max_feature_slot() >= X.shape[1]:
        raise SchemaMismatch(
            f"model uses feature slot {model.max_feature_slot()} "
            f"but vectors have {X.shape[1]} slots")
    feat, thr, left, right, offsets = model.flat()
    if len(offsets) == 0:
        return np.full(X.shape[0], model.base_margin)
    return model.base_margin + _accel.predict_margins(X, feat, thr, left, right, offsets)


def predict_many(model, matrix):
    """Vandalism probabilities, strictly inside (0, 1)."""
    m = np.clip(predict_margin_many(model, matrix), -_MARGIN_CLIP, _MARGIN_CLIP)
    return 1.0 / (1.0 + np.exp(-m))


def predict(model, vector):
    v = np.ascontiguousarray(vector, dtype=np.float64)
    if v.ndim != 1:
        raise SchemaMismatch("expected a single feature vector")
    return float(predict_many(model, v.reshape(1, -1))[0])


def _fmt(x):
    return format(float(x), ".17g")


def save_model(model, path):
    """Line-oriented text model file; round-trips predictions bit-exactly."""
    p = model.params
    lines = [
        f"{MODEL_MAGIC} {MODEL_VERSION} {len(model.trees)} {p.max_depth} "
        f"{_fmt(p.learning_rate)} {_fmt(p.l2_penalty)} {_fmt(p.min_split_gain)} "
        f"{_fmt(p.base_score)} {model.schema_hash or '-'}"
    ]
    for i, (feat, thr, left, right) in enumerate(model.trees):
        lines.append(f"tree {i} {len(feat)}")
        for nid in range(len(feat)):
            lines.append(
                f"{nid} {int(feat[nid])} {_fmt(thr[nid])} {int(left[nid])} {int(right[nid])}")
    data = "\n".join(lines) + "\n"
    # atomic replace so a crash cannot leave a half-written model
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".gbm-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_model(path):
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise CorruptModel(str(exc)) from exc
    if not lines:
        raise CorruptModel("empty model file")
    head = lines[0].split()
    if len(head) != 9 or head[0] != MODEL_MAGIC or head[1] != MODEL_VERSION:
        raise CorruptModel(f"bad model header: {lines[0]!r}")
    try:
        rounds = int(head[2])
        params = GBMParams(
            max_depth=int(head[3]),
            rounds=max(1, rounds),
            learning_rate=float(head[4]),
            l2_penalty=float(head[5]),
            min_split_gain=float(head[6]),
            base_score=float(head[7]),
        )
    except ValueError as exc:
        raise CorruptModel(f"bad model header: {lines[0]!r}") from exc
    schema_hash = "" if head[8] == "-" else head[8]

    trees = []
    pos = 1
    for i in range(rounds):
        if pos >= len(lines):
            raise CorruptModel(f"truncated model: missing tree {i}")
        tok = lines[pos].split()
        if len(tok) != 3 or tok[0] != "tree" or int(tok[1]) != i:
            raise CorruptModel(f"bad tree header at line {pos + 1}: {lines[pos]!r}")
        n_nodes = int(tok[2])
        pos += 1
        if pos + n_nodes > len(lines):
            raise CorruptModel(f"truncated model: tree {i} is short")
        feat = np.empty(n_nodes, dtype=np.int32)
        thr = np.empty(n_nodes, dtype=np.float64)
        left = np.empty(n_nodes, dtype=np.int32)
        right = np.empty(n_nodes, dtype=np.int32)
        for nid in range(n_nodes):
            tok = lines[pos + nid].split()
            if len(tok) != 5 or int(tok[0]) != nid:
                raise CorruptModel(f"bad node line {pos + nid + 1}: {lines[pos + nid]!r}")
            feat[nid] = int(tok[1])
            thr[nid] = float(tok[2])
            left[nid] = int(tok[3])
            right[nid] = int(tok[4])
            if feat[nid] >= 0 and (left[nid] < 0 or right[nid] < 0):
                raise CorruptModel(f"internal node {nid} of tree {i} lacks children")
        trees.append((feat, thr, left, right))
        pos += n_nodes
    if pos != len(lines):
        raise CorruptModel("trailing data after last tree")
    return TreeEnsemble(params, trees, schema_hash)
