"""Average precision and mean average precision.

AP of one class: sort the samples by descending score, breaking ties by
ascending sample index, and average the precision measured at the rank of
every positive sample (no interpolation). mAP is the mean of the per-class
AP over classes with at least one positive; positive-free classes are
reported as NaN and counted in ``n_excluded``.
"""
from collections import namedtuple
import numpy as np
from gamepl.utils import constants as const
from gamepl.utils.exceptions import UndefinedMetricError, check_same_shape


ApResult = namedtuple('ApResult', ['per_class_ap', 'map', 'n_excluded'])


def average_precision(scores, gt):
    """AP of a single class.

    :param array scores:    one score per sample
    :param array gt:        binary ground truth per sample
    :raises: :exc:`~gamepl.utils.exceptions.UndefinedMetricError`
             if ``gt`` has no positive
    """
    scores = np.asarray(scores, dtype=float).ravel()
    gt = np.asarray(gt).ravel().astype(bool)
    check_same_shape('scores', scores, 'gt', gt)
    if not gt.any():
        raise UndefinedMetricError('average precision is undefined without positives')
    order = np.lexsort((np.arange(scores.size), -scores))
    hits = gt[order]
    ranks = np.arange(1, scores.size + 1)
    precision = np.cumsum(hits)[hits] / ranks[hits]
    return float(np.mean(precision))


def map_score(preds, gt, where=None):
    """Per-class AP over the sample axis and their macro mean.

    :param array preds:     scores, shape (N, L)
    :param array gt:        binary ground truth, shape (N, L)
    :param array where:     optional boolean selection, shape (N, L); class
                            ``j`` is scored on the samples with ``where[:, j]``
    :rtype: :class:`ApResult`
    :raises: :exc:`~gamepl.utils.exceptions.UndefinedMetricError`
             if no class has a positive sample
    """
    preds = np.asarray(preds, dtype=float)
    gt = np.asarray(gt)
    check_same_shape('preds', preds, 'gt', gt)
    if where is None:
        where = np.ones(preds.shape, dtype=bool)
    else:
        where = np.asarray(where, dtype=bool)
        check_same_shape('preds', preds, 'where', where)
    num_classes = preds.shape[1]
    per_class = np.full(num_classes, np.nan)
    for j in range(num_classes):
        sel = where[:, j]
        try:
            per_class[j] = average_precision(preds[sel, j], gt[sel, j])
        except UndefinedMetricError:
            pass
    n_excluded = int(np.sum(np.isnan(per_class)))
    if n_excluded == num_classes:
        raise UndefinedMetricError('no class has a positive sample')
    return ApResult(per_class, float(np.nanmean(per_class)), n_excluded)


def pseudo_label_quality(store, gt, mask):
    """mAP of the soft pseudo labels against ground truth, on unobserved
    entries only (observed entries are ground truth by construction).

    :raises: :exc:`~gamepl.utils.exceptions.UndefinedMetricError`
             if there is no unobserved entry, or none of them is positive
    """
    unobserved = np.asarray(mask) == const.UNOBSERVED
    if not unobserved.any():
        raise UndefinedMetricError('no unobserved entries to score')
    return map_score(store.mapped, gt, where=unobserved)
