"""The partially labeled dataset container and its CSV file format.

File format::

    #gamepl-v1,N,input_dim,L,N_train
    <id>,<input_dim features>,<L ground-truth 0/1>,<L mask symbols 1/0/?>
    ...

Rows are stored training split first; ``N_train`` may be omitted, in which
case every row belongs to the training split. Mask symbols: ``1`` observed
positive, ``0`` observed negative, ``?`` unobserved. Features are written
with 17 significant digits, so a save/load round trip is lossless.
"""
import csv
import hashlib
import numpy as np
from gamepl.utils import constants as const
from gamepl.utils.exceptions import DimensionError, DatasetFormatError


_symbol_of = {value: key for key, value in const.mask_symbols.items()}


class PartialDataset(object):
    """Features, ground-truth labels and an observation mask.

    :param array features:      shape (N, input_dim)
    :param array ground_truth:  binary labels, shape (N, L). Used only for
                                masking and evaluation, never for training
                                on partial settings.
    :param array mask:          observation mask with entries 1 (observed
                                positive), 0 (observed negative) and -1
                                (unobserved), shape (N, L). Defaults to
                                fully observed.
    :param int num_train:       the first ``num_train`` rows are the
                                training split, the rest the test split
                                [default: N]
    :param list image_ids:      one identifier per row [default: row numbers]
    :raises: :exc:`ValueError` if an observed entry contradicts the ground
             truth or the mask holds other codes
    """
    def __init__(self, features, ground_truth, mask=None, num_train=None, image_ids=None):
        self.features = np.asarray(features, dtype=float)
        self.ground_truth = np.asarray(ground_truth).astype(np.int8)
        if self.features.ndim != 2 or self.ground_truth.ndim != 2:
            raise DimensionError('features and ground truth must be 2D arrays')
        if self.features.shape[0] != self.ground_truth.shape[0]:
            raise DimensionError('{} feature rows but {} label rows'.format(
                self.features.shape[0], self.ground_truth.shape[0]))
        if not np.isin(self.ground_truth, (0, 1)).all():
            raise ValueError('ground truth must be binary')
        if mask is None:
            mask = self.ground_truth
        self.mask = np.asarray(mask).astype(np.int8)
        if self.mask.shape != self.ground_truth.shape:
            raise DimensionError('mask has shape {}, labels {}'.format(
                self.mask.shape, self.ground_truth.shape))
        codes = (const.OBSERVED_POSITIVE, const.OBSERVED_NEGATIVE, const.UNOBSERVED)
        if not np.isin(self.mask, codes).all():
            raise ValueError('mask entries must be 1, 0 or -1')
        observed = self.mask != const.UNOBSERVED
        if np.any(self.mask[observed] != self.ground_truth[observed]):
            raise ValueError('observed labels disagree with the ground truth')
        n = self.features.shape[0]
        self.num_train = n if num_train is None else int(num_train)
        if not 0 <= self.num_train <= n:
            raise ValueError('num_train = {} outside [0, {}]'.format(self.num_train, n))
        if image_ids is None:
            image_ids = [str(i) for i in range(n)]
        if len(image_ids) != n:
            raise DimensionError('{} image ids for {} rows'.format(len(image_ids), n))
        self.image_ids = [str(i) for i in image_ids]

    def __repr__(self):
        return 'PartialDataset(N={}, input_dim={}, L={}, num_train={})'.format(
            self.num_images, self.input_dim, self.num_classes, self.num_train)

    @property
    def num_images(self):
        return self.features.shape[0]

    @property
    def input_dim(self):
        return self.features.shape[1]

    @property
    def num_classes(self):
        return self.ground_truth.shape[1]

    @property
    def num_test(self):
        return self.num_images - self.num_train

    @property
    def split(self):
        """Split tag of every row, ``'train'`` or ``'test'``."""
        return np.array(['train'] * self.num_train + ['test'] * self.num_test)

    def _subset(self, rows):
        return PartialDataset(self.features[rows], self.ground_truth[rows],
                              self.mask[rows], image_ids=[self.image_ids[i] for i in
                                                          range(self.num_images)[rows]])

    @property
    def train(self):
        """The training split as a dataset of its own."""
        return self._subset(slice(0, self.num_train))

    @property
    def test(self):
        """The test split as a dataset of its own."""
        return self._subset(slice(self.num_train, self.num_images))

    def with_mask(self, mask):
        """Same features, labels and split with a different mask."""
        return PartialDataset(self.features, self.ground_truth, mask,
                              num_train=self.num_train, image_ids=self.image_ids)

    def fingerprint(self):
        """SHA-256 of the content (features, labels, mask, split, ids)."""
        h = hashlib.sha256()
        h.update(np.ascontiguousarray(self.features).tobytes())
        h.update(np.ascontiguousarray(self.ground_truth).tobytes())
        h.update(np.ascontiguousarray(self.mask).tobytes())
        h.update(str((self.features.shape, self.ground_truth.shape,
                      self.num_train)).encode())
        h.update('\n'.join(self.image_ids).encode())
        return h.hexdigest()


def save_dataset(dataset, path):
    """Write ``dataset`` in the gamepl CSV format."""
    with open(path, 'w', newline='') as f:
        writer = csv.writer(f)
        writer.writerow([const.dataset_magic, dataset.num_images, dataset.input_dim,
                         dataset.num_classes, dataset.num_train])
        for i in range(dataset.num_images):
            writer.writerow([dataset.image_ids[i]]
                            + ['%.17g' % x for x in dataset.features[i]]
                            + [str(int(g)) for g in dataset.ground_truth[i]]
                            + [_symbol_of[int(m)] for m in dataset.mask[i]])


def load_dataset(path):
    """Read a dataset written by :func:`save_dataset`.

    :raises: :exc:`~gamepl.utils.exceptions.DatasetFormatError` naming the
             line of a malformed header or row
    """
    with open(path, newline='') as f:
        rows = list(csv.reader(f))
    if not rows or not rows[0] or rows[0][0] != const.dataset_magic:
        raise DatasetFormatError('missing {} header'.format(const.dataset_magic), lineno=1)
    header = rows[0]
    if len(header) not in (4, 5):
        raise DatasetFormatError('header must be {},N,input_dim,L[,N_train]'.format(
            const.dataset_magic), lineno=1)
    try:
        n, dim, L = (int(v) for v in header[1:4])
        num_train = int(header[4]) if len(header) == 5 else n
    except ValueError:
        raise DatasetFormatError('non-integer size in header', lineno=1)
    if n < 0 or dim < 1 or L < 1 or not 0 <= num_train <= n:
        raise DatasetFormatError('invalid sizes in header', lineno=1)
    body = rows[1:]
    if len(body) != n:
        raise DatasetFormatError('header declares {} rows, found {}'.format(n, len(body)))
    width = 1 + dim + 2 * L
    features = np.empty((n, dim))
    gt = np.empty((n, L), dtype=np.int8)
    mask = np.empty((n, L), dtype=np.int8)
    ids = []
    for i, row in enumerate(body):
        lineno = i + 2
        if len(row) != width:
            raise DatasetFormatError('expected {} columns, found {}'.format(width, len(row)),
                                     lineno=lineno)
        ids.append(row[0])
        try:
            features[i] = [float(x) for x in row[1:1 + dim]]
        except ValueError:
            raise DatasetFormatError('non-numeric feature', lineno=lineno)
        labels = row[1 + dim:1 + dim + L]
        if any(g not in ('0', '1') for g in labels):
            raise DatasetFormatError('ground truth must be 0 or 1', lineno=lineno)
        gt[i] = [int(g) for g in labels]
        symbols = row[1 + dim + L:]
        bad = [s for s in symbols if s not in const.mask_symbols]
        if bad:
            raise DatasetFormatError('invalid mask symbol {!r}'.format(bad[0]), lineno=lineno)
        mask[i] = [const.mask_symbols[s] for s in symbols]
        observed = mask[i] != const.UNOBSERVED
        if np.any(mask[i][observed] != gt[i][observed]):
            raise DatasetFormatError('observed label disagrees with ground truth',
                                     lineno=lineno)
    return PartialDataset(features, gt, mask, num_train=num_train, image_ids=ids)
