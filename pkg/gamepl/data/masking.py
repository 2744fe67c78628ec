"""Partial-label settings: which training labels the learner gets to see.

- ``'full'``: every training label observed
- ``'fspl'``: one uniformly chosen positive per training image, every
  class observed at least once
- ``'sspl:<p>'``: the FSPL rule on a uniform subset of ceil(p N) training
  images, the rest entirely unobserved
- ``'spn'``: the FSPL rule plus one uniformly chosen observed negative
  per training image

Maskers touch only the training rows of the mask; features, ground truth
and test rows are returned unchanged.
"""
import math
import warnings
import numpy as np
from gamepl.utils import constants as const


def _check_positives(gt, rows):
    empty = [int(i) for i in rows if not gt[i].any()]
    if empty:
        raise ValueError('training image {} has no positive label'.format(empty[0]))
    missing = np.flatnonzero(gt[rows].sum(axis=0) == 0)
    if missing.size:
        raise ValueError('class {} has no positive training image'.format(int(missing[0])))


def _pick_positives(gt, rows, rng):
    """One uniformly chosen positive class for every row in ``rows``."""
    keys = np.where(gt[rows] == 1, rng.random((len(rows), gt.shape[1])), -1.)
    return np.argmax(keys, axis=1)


def _repair_coverage(gt, rows, chosen):
    """Reassign images so every class is observed at least once, if possible.

    Classes are visited by ascending index. An unobserved class takes over
    the lowest-index image that contains it and whose current observation
    is not the only one of its class. Returns the classes left unobserved.
    """
    L = gt.shape[1]
    counts = np.bincount(chosen, minlength=L)
    for j in range(L):
        if counts[j] > 0:
            continue
        for k in np.flatnonzero(gt[rows, j] == 1):
            if counts[chosen[k]] > 1:
                counts[chosen[k]] -= 1
                chosen[k] = j
                counts[j] += 1
                break
    return [int(j) for j in np.flatnonzero(counts == 0) if gt[rows, j].any()]


def _single_positive(dataset, rows, rng):
    gt = dataset.ground_truth
    chosen = _pick_positives(gt, rows, rng)
    uncovered = _repair_coverage(gt, rows, chosen)
    if uncovered:
        warnings.warn('classes {} cannot be observed without leaving another '
                      'class unobserved'.format(uncovered))
    mask = dataset.mask.copy()
    mask[:dataset.num_train] = const.UNOBSERVED
    mask[rows, chosen] = const.OBSERVED_POSITIVE
    return mask


def mask_fspl(dataset, seed=0):
    """Full-set single positive label: every training image keeps exactly one
    uniformly chosen positive, all other entries are unobserved.

    :raises: :exc:`ValueError` if a training image or a class has no positive
    """
    rows = np.arange(dataset.num_train)
    _check_positives(dataset.ground_truth, rows)
    rng = np.random.default_rng(seed)
    return dataset.with_mask(_single_positive(dataset, rows, rng))


def mask_sspl(dataset, fraction, seed=0):
    """Subset single positive label: ceil(fraction * N_train) uniformly
    sampled training images get one positive each, the rest none.
    ``fraction = 1`` is exactly :func:`mask_fspl`.

    :raises: :exc:`ValueError` unless ``0 < fraction <= 1``
    """
    fraction = float(fraction)
    if not 0. < fraction <= 1.:
        raise ValueError('fraction must lie in (0, 1], got {}'.format(fraction))
    if fraction == 1.:
        return mask_fspl(dataset, seed)
    n = int(math.ceil(fraction * dataset.num_train - 1e-9))
    rng = np.random.default_rng(seed)
    rows = np.sort(rng.choice(dataset.num_train, size=n, replace=False))
    empty = [int(i) for i in rows if not dataset.ground_truth[i].any()]
    if empty:
        raise ValueError('training image {} has no positive label'.format(empty[0]))
    return dataset.with_mask(_single_positive(dataset, rows, rng))


def mask_full(dataset):
    """Every training label observed."""
    mask = dataset.mask.copy()
    mask[:dataset.num_train] = dataset.ground_truth[:dataset.num_train]
    return dataset.with_mask(mask)


def mask_single_pos_neg(dataset, seed=0):
    """One observed positive (FSPL rule) and one uniformly chosen observed
    negative per training image. Images without negatives get none."""
    rows = np.arange(dataset.num_train)
    _check_positives(dataset.ground_truth, rows)
    rng = np.random.default_rng(seed)
    mask = _single_positive(dataset, rows, rng)
    gt = dataset.ground_truth
    keys = np.where(gt[rows] == 0, rng.random((len(rows), gt.shape[1])), -1.)
    neg = np.argmax(keys, axis=1)
    has_neg = keys[rows, neg] >= 0.
    mask[rows[has_neg], neg[has_neg]] = const.OBSERVED_NEGATIVE
    return dataset.with_mask(mask)


def parse_setting(setting):
    """(kind, fraction) of a setting string; fraction is ``None`` except
    for ``'sspl:<p>'``.

    :raises: :exc:`ValueError` for an unknown setting
    """
    if setting in ('full', 'fspl', 'spn'):
        return setting, None
    if setting.startswith('sspl:'):
        try:
            fraction = float(setting[len('sspl:'):])
        except ValueError:
            raise ValueError('bad fraction in setting {!r}'.format(setting))
        if not 0. < fraction <= 1.:
            raise ValueError('fraction must lie in (0, 1] in setting {!r}'.format(setting))
        return 'sspl', fraction
    raise ValueError("unknown setting {!r}; use full, fspl, spn or sspl:<p>".format(setting))


def apply_setting(dataset, setting, seed=0):
    """Mask ``dataset`` according to a setting string (see module docstring)."""
    kind, fraction = parse_setting(setting)
    if kind == 'full':
        return mask_full(dataset)
    if kind == 'fspl':
        return mask_fspl(dataset, seed)
    if kind == 'spn':
        return mask_single_pos_neg(dataset, seed)
    return mask_sspl(dataset, fraction, seed)
