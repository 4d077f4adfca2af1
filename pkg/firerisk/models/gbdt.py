"""Histogram gradient-boosted trees on the logistic loss

Each round fits a regression tree to the per-row gradient g = w (p - y) and
hessian h = w p (1 - p) of the current raw score. A leaf holding gradient
sum G and hessian sum H gets the value -G / (H + l2_lambda), shrunk by the
learning rate. A split is scored by

    0.5 * (GL^2 / (HL + l2) + GR^2 / (HR + l2) - G^2 / (H + l2))

and kept only if the score exceeds `min_split_gain` (and zero).

Features are mapped to at most `n_bins` bins fit on the training rows.
With no more distinct values than bins the mapping is lossless, so the
trees equal those found by exact split search (`n_bins=None`).

Multiclass labels are handled one-vs-rest: one booster per class, the
per-class sigmoids normalized to sum to one.
"""
from collections import namedtuple
import logging

import numpy as np
from scipy.special import expit
from tensorboardX import SummaryWriter

from ..exceptions import PreconditionError
from ..features import SplitSpec, split
from ..parallel import derive_seed
from ..processors import QuantileBinner
from .core import BaseModel
from .tree import GAIN_TOLERANCE, Tree, TreeBuilder

logger = logging.getLogger(__name__)

HistSplit = namedtuple('HistSplit', 'gain, feature, bin')

_EPS = 1e-15


def logistic_loss(raw, target, weight=None):
    """Weighted mean logistic loss of raw scores"""
    loss = np.logaddexp(0.0, raw) - target * raw
    if weight is None:
        return float(loss.mean())
    return float((weight * loss).sum() / weight.sum())


def prior_log_odds(target, weight):
    p = float((weight * target).sum() / weight.sum())
    p = min(max(p, _EPS), 1.0 - _EPS)
    return float(np.log(p / (1.0 - p)))


class _Node(object):
    def __init__(self, node_id, rows, depth, g_sum, h_sum):
        self.node_id = node_id
        self.rows = rows
        self.depth = depth
        self.g_sum = g_sum
        self.h_sum = h_sum
        self.split = None


class HistogramGrower(object):
    """Grows one regression tree from binned features

    Parameters
    ----------
    bins: np.ndarray, shape (n, F)
        Bin index of each row and feature
    binner: QuantileBinner
        Fitted binner, used to turn bin cut points into raw thresholds
    growth: str
        'depth_wise' expands every leaf of a level, 'leaf_wise' repeatedly
        expands the leaf with the best split
    """
    def __init__(self, bins, binner, growth='depth_wise', max_depth=6,
                 max_leaves=31, l2_lambda=1.0, min_samples_leaf=20,
                 min_child_weight=1e-3, min_split_gain=0.0,
                 learning_rate=0.1):
        self.bins = bins
        self.binner = binner
        self.growth = growth
        self.max_depth = max_depth
        self.max_leaves = max_leaves
        self.l2_lambda = l2_lambda
        self.min_samples_leaf = min_samples_leaf
        self.min_child_weight = min_child_weight
        self.min_split_gain = min_split_gain
        self.learning_rate = learning_rate
        self.n_bins_feature = binner.n_bins_per_feature
        self.offsets = np.concatenate(
            [[0], np.cumsum(self.n_bins_feature)[:-1]]).astype(np.int64)
        self.total_bins = int(self.n_bins_feature.sum())

    def histograms(self, rows, g, h):
        n_features = self.bins.shape[1]
        flat = (self.bins[rows].astype(np.int64) + self.offsets).ravel()
        hist_g = np.bincount(flat, weights=np.repeat(g[rows], n_features),
                             minlength=self.total_bins)
        hist_h = np.bincount(flat, weights=np.repeat(h[rows], n_features),
                             minlength=self.total_bins)
        hist_n = np.bincount(flat, minlength=self.total_bins)
        return hist_g, hist_h, hist_n

    def find_split(self, node, g, h):
        """Best histogram split of a node, or None"""
        if self.max_depth is not None and node.depth >= self.max_depth:
            return None
        if len(node.rows) < 2 * self.min_samples_leaf:
            return None
        hist_g, hist_h, hist_n = self.histograms(node.rows, g, h)
        lam = self.l2_lambda
        G, H, N = node.g_sum, node.h_sum, len(node.rows)
        parent = G * G / (H + lam) if H + lam > 0 else 0.0
        best = None
        for f, start in enumerate(self.offsets):
            stop = start + self.n_bins_feature[f]
            gl = np.cumsum(hist_g[start:stop])[:-1]
            hl = np.cumsum(hist_h[start:stop])[:-1]
            nl = np.cumsum(hist_n[start:stop])[:-1]
            if len(gl) == 0:
                continue
            gr, hr, nr = G - gl, H - hl, N - nl
            valid = (nl >= self.min_samples_leaf) \
                & (nr >= self.min_samples_leaf) \
                & (hl >= self.min_child_weight) \
                & (hr >= self.min_child_weight)
            if not valid.any():
                continue
            with np.errstate(invalid='ignore', divide='ignore'):
                gain = 0.5 * (gl * gl / (hl + lam) + gr * gr / (hr + lam)
                              - parent)
            gain = np.where(valid & np.isfinite(gain), gain, -np.inf)
            top = gain.max()
            if not np.isfinite(top):
                continue
            b = int(np.flatnonzero(gain >= top - GAIN_TOLERANCE)[0])
            if best is None or gain[b] > best.gain + GAIN_TOLERANCE:
                best = HistSplit(float(gain[b]), f, b)
        if best is None or best.gain <= max(self.min_split_gain,
                                            GAIN_TOLERANCE):
            return None
        return best

    def leaf_value(self, g_sum, h_sum):
        denominator = h_sum + self.l2_lambda
        if denominator <= 0:
            return 0.0
        return -self.learning_rate * g_sum / denominator

    def grow(self, rows, g, h):
        builder = TreeBuilder()
        g_sum, h_sum = float(g[rows].sum()), float(h[rows].sum())
        root = _Node(builder.leaf([self.leaf_value(g_sum, h_sum)]), rows, 0,
                     g_sum, h_sum)
        root.split = self.find_split(root, g, h)
        if self.growth == 'depth_wise':
            self._grow_depth_wise(builder, root, g, h)
        else:
            self._grow_leaf_wise(builder, root, g, h)
        return builder.build()

    def _expand(self, builder, node, g, h):
        split = node.split
        go_left = self.bins[node.rows, split.feature] <= split.bin
        children = []
        for rows in (node.rows[go_left], node.rows[~go_left]):
            g_sum, h_sum = float(g[rows].sum()), float(h[rows].sum())
            child_id = builder.leaf([self.leaf_value(g_sum, h_sum)])
            children.append(_Node(child_id, rows, node.depth + 1, g_sum,
                                  h_sum))
        threshold = self.binner.threshold(split.feature, split.bin)
        builder.split(node.node_id, split.feature, threshold,
                      children[0].node_id, children[1].node_id, split.gain)
        for child in children:
            child.split = self.find_split(child, g, h)
        return children

    def _grow_depth_wise(self, builder, root, g, h):
        level = [root]
        while level:
            next_level = []
            for node in level:
                if node.split is not None:
                    next_level.extend(self._expand(builder, node, g, h))
            level = next_level

    def _grow_leaf_wise(self, builder, root, g, h):
        leaves = [root]
        while len(leaves) < self.max_leaves:
            candidates = sorted((leaf for leaf in leaves
                                 if leaf.split is not None),
                                key=lambda leaf: leaf.node_id)
            if not candidates:
                break
            best = candidates[0]
            for leaf in candidates[1:]:
                if leaf.split.gain > best.split.gain + GAIN_TOLERANCE:
                    best = leaf
            leaves.remove(best)
            leaves.extend(self._expand(builder, best, g, h))


class GradientBoostedTrees(BaseModel):
    """Gradient-boosted trees for binary and one-vs-rest multiclass labels

    Parameters
    ----------
    growth: str
        'depth_wise' or 'leaf_wise'
    n_estimators: int
        Boosting rounds
    learning_rate: float
        Shrinkage applied to every leaf value
    max_depth: int, optional
        Depth limit; also caps leaf-wise growth when set
    max_leaves: int
        Leaf limit of leaf-wise trees
    l2_lambda: float
        L2 penalty on leaf values
    n_bins: int, optional
        Histogram bins per feature; None bins losslessly (exact splits)
    early_stopping_rounds: int, optional
        Stop once the validation loss has not improved for this many rounds
    subsample: float
        Fraction of rows drawn without replacement for each tree
    min_samples_leaf: int
    min_child_weight: float
        Minimum hessian sum in a child
    min_split_gain: float
    scale_pos_weight: float
        Weight of positive rows
    """
    family = 'gbdt'

    def __init__(self, growth='depth_wise', n_estimators=100,
                 learning_rate=0.1, max_depth=6, max_leaves=31,
                 l2_lambda=1.0, n_bins=255, early_stopping_rounds=None,
                 subsample=1.0, min_samples_leaf=20, min_child_weight=1e-3,
                 min_split_gain=0.0, scale_pos_weight=1.0, seed=0,
                 log_dir=None):
        super(GradientBoostedTrees, self).__init__(seed, log_dir)
        if growth not in ('depth_wise', 'leaf_wise'):
            raise PreconditionError(f'unknown growth {growth!r}')
        if n_bins is not None and n_bins < 2:
            raise PreconditionError('n_bins must be at least 2')
        self.growth = growth
        self.n_estimators = n_estimators
        self.learning_rate = learning_rate
        self.max_depth = max_depth
        self.max_leaves = max_leaves
        self.l2_lambda = l2_lambda
        self.n_bins = n_bins
        self.early_stopping_rounds = early_stopping_rounds
        self.subsample = subsample
        self.min_samples_leaf = min_samples_leaf
        self.min_child_weight = min_child_weight
        self.min_split_gain = min_split_gain
        self.scale_pos_weight = scale_pos_weight
        self.init_scores_ = None
        self.trees_ = None
        self.train_losses_ = None
        self.validation_losses_ = None

    def _grower(self, bins, binner):
        return HistogramGrower(
            bins, binner, self.growth, self.max_depth, self.max_leaves,
            self.l2_lambda, self.min_samples_leaf, self.min_child_weight,
            self.min_split_gain, self.learning_rate)

    def fit(self, X, y, eval_set=None, **kwargs):
        X, index = self._prepare(X, y)
        if len(self.classes_) < 2:
            raise PreconditionError('boosting needs at least two classes, '
                                    f'got only {self.classes_.tolist()}')
        X_val = y_val = None
        if eval_set is not None:
            X_val = np.asarray(eval_set[0], dtype=float)
            y_val = np.searchsorted(self.classes_, np.asarray(eval_set[1]))
        elif self.early_stopping_rounds is not None:
            train, val = split(index, SplitSpec(0.1, self.seed))
            X, X_val = X[train], X[val]
            index, y_val = index[train], index[val]
        binner = QuantileBinner(self.n_bins).fit(X)
        bins = binner.process(X)
        grower = self._grower(bins, binner)
        targets = [1] if len(self.classes_) == 2 \
            else list(range(len(self.classes_)))
        writer = SummaryWriter(self.log_dir) if self.log_dir else None
        self.init_scores_, self.trees_ = [], []
        self.train_losses_, self.validation_losses_ = [], []
        try:
            for k in targets:
                target = (index == k).astype(float)
                val_target = None if y_val is None \
                    else (y_val == k).astype(float)
                init, trees, losses, val_losses = self._boost(
                    grower, X, target, X_val, val_target,
                    np.random.default_rng(derive_seed(self.seed, k)),
                    writer, k)
                self.init_scores_.append(init)
                self.trees_.append(trees)
                self.train_losses_.append(losses)
                self.validation_losses_.append(val_losses)
        finally:
            if writer is not None:
                writer.close()
        logger.debug('%s boosting: %s trees per class', self.growth,
                     [len(t) for t in self.trees_])
        return self

    def _boost(self, grower, X, target, X_val, val_target, rng, writer, k):
        weight = np.where(target == 1, self.scale_pos_weight, 1.0)
        init = prior_log_odds(target, weight)
        raw = np.full(len(X), init)
        val_raw = None if X_val is None else np.full(len(X_val), init)
        losses = [logistic_loss(raw, target, weight)]
        val_losses = [] if X_val is None \
            else [logistic_loss(val_raw, val_target)]
        trees = []
        best_round, n = 0, len(X)
        n_rows = max(1, int(round(self.subsample * n)))
        for round_ in range(1, self.n_estimators + 1):
            p = expit(raw)
            g = weight * (p - target)
            h = weight * p * (1.0 - p)
            if n_rows < n:
                rows = np.sort(rng.choice(n, size=n_rows, replace=False))
            else:
                rows = np.arange(n)
            tree = grower.grow(rows, g, h)
            trees.append(tree)
            raw = raw + tree.predict_value(X)[:, 0]
            losses.append(logistic_loss(raw, target, weight))
            if writer is not None:
                writer.add_scalar(f'gbdt/class_{k}/train_loss', losses[-1],
                                  round_)
            if X_val is None:
                continue
            val_raw = val_raw + tree.predict_value(X_val)[:, 0]
            val_losses.append(logistic_loss(val_raw, val_target))
            if writer is not None:
                writer.add_scalar(f'gbdt/class_{k}/validation_loss',
                                  val_losses[-1], round_)
            if val_losses[-1] < val_losses[best_round]:
                best_round = round_
            elif self.early_stopping_rounds is not None \
                    and round_ - best_round >= self.early_stopping_rounds:
                break
        if X_val is not None and self.early_stopping_rounds is not None:
            trees = trees[:best_round]
        return init, trees, losses, val_losses

    @property
    def train_loss_(self):
        """Training loss after 0, 1, ... rounds (summed over classes)"""
        width = min(len(losses) for losses in self.train_losses_)
        return list(np.sum([losses[:width] for losses in self.train_losses_],
                           axis=0))

    def decision_function(self, X):
        """Raw scores, shape (n,) for binary and (n, K) otherwise"""
        self._check_fitted()
        X = np.asarray(X, dtype=float)
        scores = np.empty((len(X), len(self.trees_)))
        for k, (init, trees) in enumerate(zip(self.init_scores_,
                                              self.trees_)):
            raw = np.full(len(X), init)
            for tree in trees:
                raw += tree.predict_value(X)[:, 0]
            scores[:, k] = raw
        return scores[:, 0] if len(self.classes_) == 2 else scores

    def predict_proba(self, X):
        raw = self.decision_function(X)
        if len(self.classes_) == 2:
            p = expit(raw)
            return np.column_stack([1.0 - p, p])
        p = expit(raw)
        return p / p.sum(axis=1, keepdims=True)

    def get_state(self):
        state = self._base_state()
        state['init_scores'] = [float(s) for s in self.init_scores_]
        state['trees'] = [[tree.to_dict() for tree in trees]
                          for trees in self.trees_]
        state['train_losses'] = [[float(v) for v in losses]
                                 for losses in self.train_losses_]
        return state

    def set_state(self, state):
        self._set_base_state(state)
        self.init_scores_ = list(state['init_scores'])
        self.trees_ = [[Tree.from_dict(t) for t in trees]
                       for trees in state['trees']]
        self.train_losses_ = [list(l) for l in state.get('train_losses', [])]
        return self
