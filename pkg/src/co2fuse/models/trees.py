"""Axis-aligned regression trees fit to gradient/hessian pairs.

The builder does exact greedy splitting: every boundary between distinct
sorted feature values is scored, and the best positive-gain split wins.
Leaf values are the Newton step -G / (H + lambda); with unit hessians and
lambda = 0 this is the plain residual mean, so the same builder serves both
the squared-error booster and the softmax classifier.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

# gains below this are treated as numerically zero
_GAIN_EPS = 1e-12


@dataclass
class TreeNode:
    feature: int = -1
    threshold: float = 0.0
    left: Optional["TreeNode"] = None
    right: Optional["TreeNode"] = None
    value: float = 0.0

    @property
    def is_leaf(self) -> bool:
        return self.left is None

    @staticmethod
    def leaf(value: float) -> "TreeNode":
        return TreeNode(value=float(value))


def _best_split(X, g, h, reg_lambda):
    """Best (gain, feature, threshold) over all features; feature -1 if none."""
    G = g.sum()
    H = h.sum()
    parent_score = G * G / (H + reg_lambda)
    best_gain, best_feature, best_threshold = 0.0, -1, 0.0
    for f in range(X.shape[1]):
        xs = X[:, f]
        order = np.argsort(xs, kind="stable")
        xo = xs[order]
        boundaries = xo[1:] != xo[:-1]
        if not boundaries.any():
            continue
        gl = np.cumsum(g[order])[:-1]
        hl = np.cumsum(h[order])[:-1]
        gr = G - gl
        hr = H - hl
        gains = gl * gl / (hl + reg_lambda) + gr * gr / (hr + reg_lambda) - parent_score
        gains[~boundaries] = -np.inf
        i = int(np.argmax(gains))
        if gains[i] > best_gain:
            lo, hi = xo[i], xo[i + 1]
            thr = 0.5 * (lo + hi)
            if thr <= lo:  # midpoint rounded onto the lower value
                thr = hi
            best_gain, best_feature, best_threshold = float(gains[i]), f, float(thr)
    return best_gain, best_feature, best_threshold


def fit_tree(
    X: np.ndarray,
    grad: np.ndarray,
    hess: np.ndarray,
    max_depth: int,
    reg_lambda: float = 0.0,
    min_gain: float = 0.0,
) -> TreeNode:
    """Grow a depth-limited tree on (gradient, hessian) targets."""
    min_gain = max(min_gain, _GAIN_EPS)

    def build(idx: np.ndarray, depth: int) -> TreeNode:
        g = grad[idx]
        h = hess[idx]
        leaf_value = -g.sum() / (h.sum() + reg_lambda)
        if depth >= max_depth or idx.size < 2:
            return TreeNode.leaf(leaf_value)
        gain, f, thr = _best_split(X[idx], g, h, reg_lambda)
        if f < 0 or gain <= min_gain:
            return TreeNode.leaf(leaf_value)
        mask = X[idx, f] < thr
        return TreeNode(
            feature=f,
            threshold=thr,
            left=build(idx[mask], depth + 1),
            right=build(idx[~mask], depth + 1),
        )

    return build(np.arange(X.shape[0]), 0)


def predict_tree(root: TreeNode, X: np.ndarray) -> np.ndarray:
    out = np.empty(X.shape[0], dtype=np.float64)
    stack = [(root, np.arange(X.shape[0]))]
    while stack:
        node, idx = stack.pop()
        if idx.size == 0:
            continue
        if node.is_leaf:
            out[idx] = node.value
        else:
            mask = X[idx, node.feature] < node.threshold
            stack.append((node.left, idx[mask]))
            stack.append((node.right, idx[~mask]))
    return out


def tree_depth(root: TreeNode) -> int:
    if root.is_leaf:
        return 0
    return 1 + max(tree_depth(root.left), tree_depth(root.right))


def tree_to_sexpr(root: TreeNode) -> str:
    """Serialize as nested lists: (split f thr left right) / (leaf value)."""
    if root.is_leaf:
        return f"(leaf {root.value:.17g})"
    return (
        f"(split {root.feature} {root.threshold:.17g} "
        f"{tree_to_sexpr(root.left)} {tree_to_sexpr(root.right)})"
    )


def tree_from_sexpr(text: str) -> TreeNode:
    tokens = text.replace("(", " ( ").replace(")", " ) ").split()
    pos = 0

    def fail(msg):
        from ..errors import ModelFormatError

        raise ModelFormatError(f"bad tree expression: {msg}")

    def expect(tok):
        nonlocal pos
        if pos >= len(tokens) or tokens[pos] != tok:
            fail(f"expected {tok!r} at token {pos}")
        pos += 1

    def take():
        nonlocal pos
        if pos >= len(tokens):
            fail("unexpected end of input")
        tok = tokens[pos]
        pos += 1
        return tok

    def parse() -> TreeNode:
        expect("(")
        head = take()
        if head == "leaf":
            node = TreeNode.leaf(float(take()))
        elif head == "split":
            feature = int(take())
            threshold = float(take())
            left = parse()
            right = parse()
            node = TreeNode(feature=feature, threshold=threshold, left=left, right=right)
        else:
            fail(f"unknown node kind {head!r}")
        expect(")")
        return node

    try:
        node = parse()
    except ValueError as exc:
        fail(str(exc))
    if pos != len(tokens):
        fail("trailing tokens")
    return node
