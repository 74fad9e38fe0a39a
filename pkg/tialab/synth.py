# vim: set et sw=4 sts=4 fileencoding=utf-8:
#
# A desk-scale laboratory for task-specific inconsistency alignment
# Copyright (c) 2026 The tialab developers
#
# Redistribution and use in source and binary forms, with or without
# modification, are permitted provided that the following conditions are met:
#
#     * Redistributions of source code must retain the above copyright
#       notice, this list of conditions and the following disclaimer.
#     * Redistributions in binary form must reproduce the above copyright
#       notice, this list of conditions and the following disclaimer in the
#       documentation and/or other materials provided with the distribution.
#     * Neither the name of the copyright holder nor the
#       names of its contributors may be used to endorse or promote products
#       derived from this software without specific prior written permission.
#
# THIS SOFTWARE IS PROVIDED BY THE COPYRIGHT HOLDERS AND CONTRIBUTORS "AS IS"
# AND ANY EXPRESS OR IMPLIED WARRANTIES, INCLUDING, BUT NOT LIMITED TO, THE
# IMPLIED WARRANTIES OF MERCHANTABILITY AND FITNESS FOR A PARTICULAR PURPOSE
# ARE DISCLAIMED. IN NO EVENT SHALL THE COPYRIGHT HOLDER OR CONTRIBUTORS BE
# LIABLE FOR ANY DIRECT, INDIRECT, INCIDENTAL, SPECIAL, EXEMPLARY, OR
# CONSEQUENTIAL DAMAGES (INCLUDING, BUT NOT LIMITED TO, PROCUREMENT OF
# SUBSTITUTE GOODS OR SERVICES; LOSS OF USE, DATA, OR PROFITS; OR BUSINESS
# INTERRUPTION) HOWEVER CAUSED AND ON ANY THEORY OF LIABILITY, WHETHER IN
# CONTRACT, STRICT LIABILITY, OR TORT (INCLUDING NEGLIGENCE OR OTHERWISE)
# ARISING IN ANY WAY OUT OF THE USE OF THIS SOFTWARE, EVEN IF ADVISED OF THE
# POSSIBILITY OF SUCH DAMAGE.

"""
The synth module generates the detection-surrogate benchmark: labeled
feature vectors with one bounding box each, drawn for a *source* and a
*target* domain related by a controlled covariate shift. It also reads and
writes datasets in the CSV format described below.

.. note::

    All items in this module are available from the :mod:`tialab` namespace
    without having to import :mod:`tialab.synth` directly.

The following items are defined in the module:


ShiftSpec
=========

.. autoclass:: ShiftSpec
    :members:


Sample
======

.. autoclass:: Sample


Dataset
=======

.. autoclass:: Dataset
    :members:


Functions
=========

.. autofunction:: generate_dataset

.. autofunction:: write_dataset

.. autofunction:: read_dataset

.. autofunction:: write_benchmark

.. autofunction:: read_benchmark


File format
===========

Datasets are stored as UTF-8 CSV with the header::

    domain,y,b_cx,b_cy,b_w,b_h,x_0,...,x_{d-1}

where *domain* is ``source`` or ``target``, *y* the integer class label,
``b_*`` the box and ``x_*`` the features. Floats are written with 17
significant digits so that reading a written dataset reproduces it exactly.
"""

import io
import os
import csv
import json
import math
import logging
from collections import namedtuple
from importlib.resources import files

import numpy as np

from .exc import ConfigError, DatasetError, ParseError, HeaderMismatch
from .box import Box

logger = logging.getLogger('tialab')

SOURCE = 'source'
TARGET = 'target'
DOMAINS = (SOURCE, TARGET)

BOX_FIELDS = ('b_cx', 'b_cy', 'b_w', 'b_h')

SPLIT_FILES = {
    'source_train': 'source_train.csv',
    'source_test':  'source_test.csv',
    'target_train': 'target_train.csv',
    'target_test':  'target_test.csv',
    }


def _orthogonal(rng, dim, strength):
    # QR of a seeded Gaussian perturbation of the identity; the sign fix makes
    # the factorization unique so equal seeds give equal matrices
    g = np.eye(dim) + strength * rng.standard_normal((dim, dim)) / math.sqrt(dim)
    q, r = np.linalg.qr(g)
    return q * np.sign(np.diag(r))


class ShiftSpec(namedtuple('ShiftSpec', (
        'dim', 'classes', 'means', 'cov_scale', 'rotation', 'translation',
        'box_map', 'box_bias', 'noise', 'n_train', 'n_test'))):
    """
    Describes the synthetic source/target benchmark.

    Latent vectors ``z`` are drawn per class from an isotropic Gaussian around
    :attr:`means` (one row per class) with standard deviation
    :attr:`cov_scale`. Source features are ``z + noise``; target features are
    ``rotation @ z + translation + noise``. Boxes are derived from the latent
    (pre-shift) vector through :attr:`box_map` and :attr:`box_bias` followed
    by a squashing into the valid ranges, so the labeling functions are
    identical across domains.

    Use :meth:`build` to derive all matrices from a handful of scalar
    parameters and a structure seed, or :meth:`default` for the desk-scale
    benchmark.

    .. attribute:: dim

        The feature dimension *d*.

    .. attribute:: classes

        The number of classes *C*.

    .. attribute:: rotation

        The *d* x *d* orthogonal matrix applied to target latents.

    .. attribute:: noise

        Standard deviation of the isotropic feature noise.

    .. attribute:: n_train

        Samples per domain in the train split.

    .. attribute:: n_test

        Samples per domain in the test split.
    """

    __slots__ = ()

    def __new__(cls, dim, classes, means, cov_scale, rotation, translation,
                box_map, box_bias, noise, n_train, n_test):
        dim = int(dim)
        classes = int(classes)
        if classes < 2:
            raise ConfigError('at least 2 classes are required')
        if dim < 2:
            raise ConfigError('feature dimension must be at least 2')
        if int(n_train) <= 0 or int(n_test) <= 0:
            raise ConfigError('sample counts must be positive')
        if not cov_scale > 0:
            raise ConfigError('cov_scale must be positive')
        if noise < 0:
            raise ConfigError('noise must not be negative')
        means = np.array(means, dtype=np.float64)
        rotation = np.array(rotation, dtype=np.float64)
        translation = np.array(translation, dtype=np.float64)
        box_map = np.array(box_map, dtype=np.float64)
        box_bias = np.array(box_bias, dtype=np.float64)
        for name, value, shape in (
                ('means', means, (classes, dim)),
                ('rotation', rotation, (dim, dim)),
                ('translation', translation, (dim,)),
                ('box_map', box_map, (4, dim)),
                ('box_bias', box_bias, (4,))):
            if value.shape != shape:
                raise ConfigError('%s must have shape %r; got %r' % (
                    name, shape, value.shape))
        if np.abs(rotation @ rotation.T - np.eye(dim)).max() > 1e-8:
            raise ConfigError('rotation is not orthogonal')
        gaps = [
            np.linalg.norm(means[i] - means[j])
            for i in range(classes) for j in range(i + 1, classes)]
        if min(gaps) < 3 * cov_scale:
            raise ConfigError(
                'class means must be separated by at least 3 x cov_scale')
        for value in (means, rotation, translation, box_map, box_bias):
            value.setflags(write=False)
        return super(ShiftSpec, cls).__new__(
            cls, dim, classes, means, float(cov_scale), rotation,
            translation, box_map, box_bias, float(noise), int(n_train),
            int(n_test))

    def __eq__(self, other):
        return isinstance(other, ShiftSpec) and all(
            np.array_equal(a, b) for a, b in zip(self, other))

    def __ne__(self, other):
        return not self.__eq__(other)

    __hash__ = None

    @classmethod
    def build(cls, dim=10, classes=4, mean_radius=4.0, cov_scale=1.0,
              shift=0.6, translation_scale=1.0, box_scale=0.5, noise=0.1,
              n_train=2000, n_test=1000, structure_seed=0):
        """
        Derives a complete specification from scalar parameters. Class means
        lie on mutually orthogonal directions at distance *mean_radius* from
        the origin (so requires *classes* <= *dim*). The target rotation is
        drawn by QR of a Gaussian perturbation of the identity whose size is
        governed by *shift*; the translation has expected norm roughly
        *translation_scale*.
        """
        if int(classes) > int(dim):
            raise ConfigError('classes must not exceed dim')
        rng = np.random.default_rng(structure_seed)
        directions, _ = np.linalg.qr(rng.standard_normal((dim, dim)))
        means = mean_radius * directions[:, :classes].T
        rotation = _orthogonal(rng, dim, shift)
        translation = translation_scale * rng.standard_normal(dim) / math.sqrt(dim)
        box_map = box_scale * rng.standard_normal((4, dim)) / (mean_radius * math.sqrt(dim))
        box_bias = np.zeros(4)
        return cls(
            dim, classes, means, cov_scale, rotation, translation, box_map,
            box_bias, noise, n_train, n_test)

    @classmethod
    def default(cls):
        "Returns the desk-scale benchmark specification."
        return cls.from_json(json.loads(
            files('tialab').joinpath('defaults', 'shift.json').read_text()))

    @classmethod
    def from_json(cls, obj):
        """
        Constructs a specification from a JSON-compatible :class:`dict`. If
        the matrices are present they are used verbatim; otherwise they are
        derived by :meth:`build` from the scalar parameters present.
        """
        obj = dict(obj)
        if 'means' in obj:
            try:
                return cls(**{name: obj[name] for name in cls._fields})
            except KeyError as exc:
                raise ConfigError('shift spec is missing field %s' % exc)
        try:
            return cls.build(**obj)
        except TypeError as exc:
            raise ConfigError('invalid shift spec: %s' % exc)

    def as_json(self):
        "Returns the specification as a JSON-compatible :class:`dict`."
        return {
            name: value.tolist() if isinstance(value, np.ndarray) else value
            for name, value in zip(self._fields, self)
            }

    @classmethod
    def load(cls, path):
        "Reads a specification from the JSON file at *path*."
        with io.open(path, 'r', encoding='utf-8') as f:
            try:
                return cls.from_json(json.load(f))
            except ValueError as exc:
                if isinstance(exc, ConfigError):
                    raise
                raise ConfigError('%s: %s' % (path, exc))

    def save(self, path):
        "Writes the specification to *path* as JSON."
        with io.open(path, 'w', encoding='utf-8') as f:
            json.dump(self.as_json(), f, indent=4, sort_keys=True)
            f.write('\n')

    def squash(self, z):
        """
        Maps latent vectors *z* (one per row) to boxes: centers in (0.1, 0.9)
        and sizes in (0.05, 0.5).
        """
        a = np.atleast_2d(z) @ self.box_map.T + self.box_bias
        s = 0.5 * (1.0 + np.tanh(0.5 * a))
        return np.column_stack((
            0.1 + 0.8 * s[:, 0],
            0.1 + 0.8 * s[:, 1],
            0.05 + 0.45 * s[:, 2],
            0.05 + 0.45 * s[:, 3],
            ))


class Sample(namedtuple('Sample', ('x', 'y', 'box', 'domain'))):
    """
    A single labeled instance: feature vector :attr:`x` (a tuple of floats),
    class label :attr:`y`, :class:`~tialab.box.Box` :attr:`box` and
    :attr:`domain` (``'source'`` or ``'target'``).
    """

    __slots__ = ()

    def __new__(cls, x, y, box, domain):
        if domain not in DOMAINS:
            raise ValueError('invalid domain %r' % (domain,))
        box = Box(*box)
        if not box.valid:
            raise ValueError('box width and height must be positive')
        y = int(y)
        if y < 0:
            raise ValueError('label must not be negative')
        return super(Sample, cls).__new__(
            cls, tuple(float(v) for v in x), y, box, domain)


Batch = namedtuple('Batch', ('x', 'y', 'boxes'))
Batch.__doc__ = """
A mini-batch of arrays drawn from a :class:`Dataset`. For unlabeled batches
:attr:`y` and :attr:`boxes` are ``None``.
"""


class Dataset(object):
    """
    A collection of samples held as arrays: :attr:`x` (*n* x *d* features),
    :attr:`y` (*n* labels), :attr:`boxes` (*n* x 4, as ``cx, cy, w, h``) and
    :attr:`domains` (*n* domain names).

    The dataset acts as a sequence of :class:`Sample` instances::

        >>> ds = generate_dataset(ShiftSpec.default(), seed=0).source_test
        >>> len(ds)
        1000
        >>> ds[0].domain
        'source'

    If *classes* is given, labels are validated against it.
    """

    def __init__(self, x, y, boxes, domains, classes=None):
        x = np.array(x, dtype=np.float64)
        y = np.array(y, dtype=np.int64)
        boxes = np.array(boxes, dtype=np.float64)
        if isinstance(domains, str):
            domains = [domains] * len(y)
        domains = np.array(domains, dtype=object)
        n = len(y)
        if x.ndim != 2 or x.shape[0] != n:
            raise DatasetError('features must be an n x d array')
        if boxes.shape != (n, 4):
            raise DatasetError('boxes must be an n x 4 array')
        if domains.shape != (n,):
            raise DatasetError('one domain per sample is required')
        if n and not np.all(np.isin(domains, DOMAINS)):
            raise DatasetError('invalid domain names')
        if n and not (np.all(boxes[:, 2] > 0) and np.all(boxes[:, 3] > 0)):
            raise DatasetError('box widths and heights must be positive')
        if n and y.min() < 0:
            raise DatasetError('labels must not be negative')
        if classes is not None and n and y.max() >= classes:
            raise DatasetError('labels must be less than %d' % classes)
        for value in (x, y, boxes, domains):
            value.setflags(write=False)
        self._x = x
        self._y = y
        self._boxes = boxes
        self._domains = domains
        self._classes = classes

    def __repr__(self):
        return '<Dataset %d samples, dim=%d>' % (len(self), self.dim)

    def __len__(self):
        return len(self._y)

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]

    def __getitem__(self, index):
        return Sample(
            self._x[index], self._y[index], self._boxes[index],
            self._domains[index])

    def __eq__(self, other):
        return (
            isinstance(other, Dataset) and
            np.array_equal(self._x, other._x) and
            np.array_equal(self._y, other._y) and
            np.array_equal(self._boxes, other._boxes) and
            np.array_equal(self._domains, other._domains))

    def __ne__(self, other):
        return not self.__eq__(other)

    __hash__ = None

    @property
    def x(self):
        return self._x

    @property
    def y(self):
        return self._y

    @property
    def boxes(self):
        return self._boxes

    @property
    def domains(self):
        return self._domains

    @property
    def dim(self):
        "The feature dimension."
        return self._x.shape[1]

    @property
    def classes(self):
        """
        The number of classes, if known (it is recorded for generated
        datasets but not for datasets read from files).
        """
        return self._classes

    def batch(self, indices, labeled=True):
        """
        Returns a :class:`Batch` of the samples at *indices*. If *labeled* is
        ``False`` only the features are included.
        """
        indices = np.asarray(indices, dtype=np.int64)
        if labeled:
            return Batch(self._x[indices], self._y[indices], self._boxes[indices])
        return Batch(self._x[indices], None, None)


Benchmark = namedtuple('Benchmark', tuple(SPLIT_FILES))
Benchmark.__doc__ = """
The four splits produced by :func:`generate_dataset`: *source_train*,
*source_test*, *target_train* and *target_test*.
"""


def generate_dataset(spec, seed):
    """
    Draws the four splits of the benchmark described by the
    :class:`ShiftSpec` *spec*, deterministically in *seed*.

    Each split draws its latent vectors once and emits them for both domains,
    with independent feature noise per domain; the target rows are then
    shuffled so that no positional pairing with the source rows remains.
    Class labels are balanced. Target train labels are stored like any other
    but adaptation runs never read them.
    """
    if not isinstance(spec, ShiftSpec):
        raise ConfigError('spec must be a ShiftSpec')
    root = np.random.SeedSequence(seed)
    splits = {}
    for (split, n), child in zip(
            (('train', spec.n_train), ('test', spec.n_test)), root.spawn(2)):
        latent_rng, source_rng, target_rng, order_rng = (
            np.random.default_rng(s) for s in child.spawn(4))
        y = latent_rng.permutation(np.arange(n) % spec.classes)
        z = spec.means[y] + spec.cov_scale * latent_rng.standard_normal(
            (n, spec.dim))
        boxes = spec.squash(z)
        source_x = z + spec.noise * source_rng.standard_normal((n, spec.dim))
        target_x = (
            z @ spec.rotation.T + spec.translation +
            spec.noise * target_rng.standard_normal((n, spec.dim)))
        order = order_rng.permutation(n)
        splits['source_' + split] = Dataset(
            source_x, y, boxes, SOURCE, spec.classes)
        splits['target_' + split] = Dataset(
            target_x[order], y[order], boxes[order], TARGET, spec.classes)
    logger.debug('generated benchmark with seed %r', seed)
    return Benchmark(**splits)


def _header(dim):
    return ['domain', 'y'] + list(BOX_FIELDS) + ['x_%d' % i for i in range(dim)]


def write_dataset(dataset, path):
    """
    Writes *dataset* to *path* (a filename or a text-mode file-like object)
    in the CSV format described above.
    """
    opened = isinstance(path, (str, os.PathLike))
    f = io.open(path, 'w', encoding='utf-8', newline='') if opened else path
    try:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(_header(dataset.dim))
        for x, y, box, domain in zip(
                dataset.x, dataset.y, dataset.boxes, dataset.domains):
            writer.writerow(
                [domain, '%d' % y] +
                ['%.17g' % v for v in box] +
                ['%.17g' % v for v in x])
    finally:
        if opened:
            f.close()


def _parse_float(value, line, column):
    try:
        result = float(value)
    except ValueError:
        raise ParseError('invalid number %r' % value, line, column)
    if not math.isfinite(result):
        raise ParseError('non-finite number %r' % value, line, column)
    return result


def _lines(f):
    line = 0
    try:
        for line, text in enumerate(f, start=1):
            yield text
    except UnicodeDecodeError as exc:
        raise ParseError('not valid UTF-8 text (%s)' % exc.reason, line + 1)


def read_dataset(path, dim=None):
    """
    Reads a dataset from *path* (a filename or a text-mode file-like object).
    If *dim* is given, a header declaring any other feature count raises
    :exc:`~tialab.exc.HeaderMismatch`. Malformed rows raise
    :exc:`~tialab.exc.ParseError` naming the line and column.
    """
    opened = isinstance(path, (str, os.PathLike))
    f = io.open(path, 'r', encoding='utf-8', newline='') if opened else path
    try:
        reader = csv.reader(_lines(f))
        try:
            header = next(reader)
        except StopIteration:
            raise HeaderMismatch('empty file', 1)
        features = len(header) - len(_header(0))
        if features < 1 or header != _header(features):
            raise HeaderMismatch('unexpected header %s' % ','.join(header), 1)
        if dim is not None and features != dim:
            raise HeaderMismatch(
                'header declares %d features; expected %d' % (features, dim), 1)
        xs, ys, boxes, domains = [], [], [], []
        for row in reader:
            line = reader.line_num
            if not row:
                continue
            if len(row) != len(header):
                raise HeaderMismatch(
                    'row has %d columns; header declares %d' % (
                        len(row), len(header)), line)
            domain = row[0]
            if domain not in DOMAINS:
                raise ParseError('invalid domain %r' % domain, line, 'domain')
            try:
                y = int(row[1])
            except ValueError:
                raise ParseError('invalid label %r' % row[1], line, 'y')
            if y < 0:
                raise ParseError('negative label %d' % y, line, 'y')
            box = [
                _parse_float(v, line, name)
                for v, name in zip(row[2:6], BOX_FIELDS)]
            if box[2] <= 0 or box[3] <= 0:
                raise ParseError(
                    'box width and height must be positive', line,
                    'b_w' if box[2] <= 0 else 'b_h')
            xs.append([
                _parse_float(v, line, name)
                for v, name in zip(row[6:], header[6:])])
            ys.append(y)
            boxes.append(box)
            domains.append(domain)
    finally:
        if opened:
            f.close()
    return Dataset(
        np.array(xs, dtype=np.float64).reshape(len(ys), features), ys,
        np.array(boxes, dtype=np.float64).reshape(len(ys), 4), domains)


def write_benchmark(benchmark, directory, spec=None):
    """
    Writes the four splits of *benchmark* to *directory* (created if
    necessary) under their conventional file names. If *spec* is given it is
    written alongside as ``shift.json``.
    """
    os.makedirs(directory, exist_ok=True)
    for name, filename in SPLIT_FILES.items():
        write_dataset(getattr(benchmark, name), os.path.join(directory, filename))
    if spec is not None:
        spec.save(os.path.join(directory, 'shift.json'))
    logger.info('wrote benchmark to %s', directory)


def read_benchmark(directory, dim=None):
    "Reads the four splits written by :func:`write_benchmark`."
    return Benchmark(**{
        name: read_dataset(os.path.join(directory, filename), dim)
        for name, filename in SPLIT_FILES.items()
        })
