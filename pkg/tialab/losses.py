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
The losses module defines every objective used in training: the supervised
detection losses, the domain discriminator loss, the two task-specific
inconsistency losses, the alternative dispersion measures used by ablation
studies, the adaptation combiner and the overall weighted objective.

All functions accept :class:`~tialab.autodiff.Tensor` instances and return
tensors on the same tape, so they may be differentiated. For convenience
they also accept plain arrays, which are placed on a fresh tape::

    >>> float(cls_inconsistency([[1, 0], [0, 1]]))
    -0.5822...

.. note::

    All items in this module are available from the :mod:`tialab` namespace
    without having to import :mod:`tialab.losses` directly.

The following items are defined in the module:


MeasureKind
===========

.. autoclass:: MeasureKind
    :members:


Inconsistency
=============

.. autofunction:: cls_inconsistency

.. autofunction:: loc_inconsistency

.. autofunction:: inconsistency

.. autofunction:: alt_measure

.. autofunction:: task_da_loss


Supervision and adaptation
==========================

.. autofunction:: detection_losses

.. autofunction:: dann_loss

.. autofunction:: total_loss

.. autoclass:: DetectionLosses

.. autoclass:: LossComponents
"""

import math
from enum import Enum
from collections import namedtuple

import numpy as np

from .exc import ShapeError
from .autodiff import Tape, Tensor

LOG_FLOOR = 1e-12
SWD_PROJECTIONS = 128
SWD_SEED = 0


class MeasureKind(Enum):
    """
    Enumerates the measures of disagreement between auxiliary predictors.

    .. attribute:: SE_WEIGHTED

        Confidence-weighted entropy of the softmaxed classifier columns; see
        :func:`cls_inconsistency`. Classification only.

    .. attribute:: SD

        Standard-deviation style dispersion of localizer outputs; see
        :func:`loc_inconsistency`. Localization only.

    .. attribute:: L1

        Mean absolute difference between exactly two predictors.

    .. attribute:: KL

        Symmetrized Kullback-Leibler divergence between exactly two
        classifiers. Classification only.

    .. attribute:: SWD

        Sliced Wasserstein discrepancy between the batch outputs of exactly
        two predictors.

    .. attribute:: MAD

        Mean absolute deviation from the mean prediction. Localization only.

    .. attribute:: VARIANCE

        Mean squared deviation from the mean prediction. Localization only.
    """

    SE_WEIGHTED = 'se_weighted'
    SD = 'sd'
    L1 = 'l1'
    KL = 'kl'
    SWD = 'swd'
    MAD = 'mad'
    VARIANCE = 'variance'

    @classmethod
    def parse(cls, value):
        "Converts *value* (a member, its name or its value) to a member."
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            try:
                return cls[str(value).upper()]
            except KeyError:
                raise ValueError('unknown measure %r' % (value,))

    @property
    def pairwise(self):
        "``True`` if the measure compares exactly two predictors."
        return self in (MeasureKind.L1, MeasureKind.KL, MeasureKind.SWD)


CLS_MEASURES = frozenset((
    MeasureKind.SE_WEIGHTED, MeasureKind.L1, MeasureKind.KL, MeasureKind.SWD))
LOC_MEASURES = frozenset((
    MeasureKind.SD, MeasureKind.MAD, MeasureKind.VARIANCE, MeasureKind.L1,
    MeasureKind.SWD))
ALT_MEASURES = frozenset((
    MeasureKind.L1, MeasureKind.KL, MeasureKind.SWD, MeasureKind.MAD,
    MeasureKind.VARIANCE))


def _tensor(value):
    if isinstance(value, Tensor):
        return value
    return Tape().constant(np.asarray(value, dtype=np.float64))


def _check_distribution(probs, name):
    values = probs.values
    if np.any(values < 0) or np.any(values > 1):
        raise ValueError('%s: probabilities must lie in [0, 1]' % name)
    if np.abs(values.sum(axis=-1) - 1.0).max() > 1e-6:
        raise ValueError('%s: probability rows must sum to 1' % name)


def _check_predictors(outputs, name, exact=None):
    if len(outputs.shape) < 2:
        raise ShapeError('%s: expected predictors x outputs; got %r' % (
            name, outputs.shape))
    count = outputs.shape[0]
    if exact is not None and count != exact:
        raise ShapeError('%s requires exactly %d predictors; got %d' % (
            name, exact, count))
    if count < 2:
        raise ShapeError('%s requires at least 2 predictors; got %d' % (
            name, count))


def cls_inconsistency(probs):
    """
    Returns the classification inconsistency of the class probabilities
    *probs* output by *N* classifiers: an *N* x *C* matrix, or an *N* x *B* x
    *C* stack in which case one value per sample is returned.

    Each class column (the *N* classifiers' probabilities of that class) is
    softmaxed over the classifiers and its entropy taken; the entropies are
    weighted by the class's mean probability and the negated sum returned.
    The result lies in :math:`[-\\ln N, 0]` and equals :math:`-\\ln N` when
    the classifiers agree exactly.
    """
    probs = _tensor(probs)
    _check_predictors(probs, 'cls_inconsistency')
    _check_distribution(probs, 'cls_inconsistency')
    column = probs.softmax(axis=0)
    entropy = -(column * column.log(floor=LOG_FLOOR)).sum(axis=0)
    confidence = probs.mean(axis=0)
    return -(entropy * confidence).sum(axis=-1)


def loc_inconsistency(preds):
    """
    Returns the localization inconsistency of the boxes *preds* output by
    *M* localizers: an *M* x 4 matrix, or an *M* x *B* x 4 stack in which
    case one value per sample is returned.

    For each coordinate the L2-norm of the localizers' deviations from their
    mean is taken; the four norms are summed and scaled by
    :math:`1 / (4\\sqrt{M})`. The result is zero exactly when the localizers
    agree (where a zero subgradient is used).
    """
    preds = _tensor(preds)
    _check_predictors(preds, 'loc_inconsistency')
    count = preds.shape[0]
    deviation = preds - preds.mean(axis=0)
    return deviation.norm(axis=0).sum(axis=-1) * (1.0 / (4 * math.sqrt(count)))


def _pair(outputs):
    return outputs[0], outputs[1]


def _l1(outputs):
    a, b = _pair(outputs)
    return (a - b).abs().mean(axis=-1)


def _kl(outputs):
    _check_distribution(outputs, 'kl')
    a, b = _pair(outputs)
    return 0.5 * ((a - b) * (
        a.log(floor=LOG_FLOOR) - b.log(floor=LOG_FLOOR))).sum(axis=-1)


def swd_projections(width, seed=SWD_SEED, count=SWD_PROJECTIONS):
    rng = np.random.default_rng(seed)
    directions = rng.standard_normal((width, count))
    return directions / np.linalg.norm(directions, axis=0)


def _swd(outputs):
    a, b = _pair(outputs)
    width = a.shape[-1]
    if len(a.shape) == 1:
        a = a.reshape(1, width)
        b = b.reshape(1, width)
    directions = swd_projections(width)
    sa = (a @ directions).sort(axis=0)
    sb = (b @ directions).sort(axis=0)
    diff = sa - sb
    return (diff * diff).mean()


def _deviation(outputs):
    return outputs - outputs.mean(axis=0)


def _mad(outputs):
    return _deviation(outputs).abs().mean(axis=0).mean(axis=-1)


def _variance(outputs):
    deviation = _deviation(outputs)
    return (deviation * deviation).mean(axis=0).mean(axis=-1)


_MEASURES = {
    MeasureKind.SE_WEIGHTED: cls_inconsistency,
    MeasureKind.SD:          loc_inconsistency,
    MeasureKind.L1:          _l1,
    MeasureKind.KL:          _kl,
    MeasureKind.SWD:         _swd,
    MeasureKind.MAD:         _mad,
    MeasureKind.VARIANCE:    _variance,
    }


def inconsistency(kind, outputs):
    """
    Applies the measure *kind* (a :class:`MeasureKind`) to *outputs*, the
    stacked outputs of several predictors (predictors along the first axis).
    For a predictors x *B* x outputs stack, the per-sample values are
    returned except for :attr:`MeasureKind.SWD` which compares whole batches
    and returns a single value.
    """
    kind = MeasureKind.parse(kind)
    outputs = _tensor(outputs)
    _check_predictors(outputs, kind.value, 2 if kind.pairwise else None)
    return _MEASURES[kind](outputs)


def alt_measure(kind, outputs):
    """
    Returns the mean of the alternative measure *kind* (one of
    :attr:`~MeasureKind.L1`, :attr:`~MeasureKind.KL`, :attr:`~MeasureKind.SWD`,
    :attr:`~MeasureKind.MAD` or :attr:`~MeasureKind.VARIANCE`) over
    *outputs*. All alternative measures are nonnegative and vanish when the
    predictors agree.
    """
    kind = MeasureKind.parse(kind)
    if kind not in ALT_MEASURES:
        raise ValueError('%s is not an alternative measure' % kind.value)
    return inconsistency(kind, outputs).mean()


def task_da_loss(task, source, target):
    """
    Returns the adaptation loss for *task* (``'cls'`` or ``'loc'``) given
    the per-sample inconsistencies of a *source* batch and a *target* batch:
    the source mean minus the target mean.

    Minimizing it drives the auxiliary heads to disagree on target samples
    and agree on source samples; the reversed gradient drives the trunk the
    opposite way.
    """
    if task not in ('cls', 'loc'):
        raise ValueError('invalid task %r' % (task,))
    if not isinstance(source, Tensor) and not isinstance(target, Tensor):
        tape = Tape()
        source = tape.constant(np.asarray(source, dtype=np.float64))
        target = tape.constant(np.asarray(target, dtype=np.float64))
    elif not isinstance(source, Tensor):
        source = target.tape.constant(np.asarray(source, dtype=np.float64))
    elif not isinstance(target, Tensor):
        target = source.tape.constant(np.asarray(target, dtype=np.float64))
    if source.size == 0 or target.size == 0:
        raise ValueError('%s adaptation loss requires nonempty batches' % task)
    return source.mean() - target.mean()


class DetectionLosses(namedtuple('DetectionLosses', (
        'cls', 'loc', 'aux_cls', 'aux_loc'))):
    """
    The supervised losses returned by :func:`detection_losses`: primary
    cross-entropy (:attr:`cls`), primary smooth-L1 (:attr:`loc`), and the
    sums over auxiliary heads of the same (:attr:`aux_cls`,
    :attr:`aux_loc`; ``None`` when the bank is absent).
    """

    __slots__ = ()

    def total(self):
        "Returns the sum of the losses present."
        result = self.cls + self.loc
        for term in (self.aux_cls, self.aux_loc):
            if term is not None:
                result = result + term
        return result


def _cross_entropy(probs, onehot):
    return -(onehot * probs.log(floor=LOG_FLOOR)).sum(axis=-1)


def detection_losses(bundle, labels, boxes):
    """
    Returns the :class:`DetectionLosses` of the
    :class:`~tialab.model.ForwardBundle` *bundle* against the class *labels*
    and ground-truth *boxes* of a labeled batch.

    Cross-entropy is averaged over the batch. Smooth-L1 (with a transition
    at 1) is summed over the four coordinates and averaged over the batch.
    The auxiliary terms are computed on the detached path and summed over
    heads.
    """
    if labels is None or boxes is None:
        raise ValueError('detection losses require labels and boxes')
    probs = bundle.cls_probs
    batch, classes = probs.shape
    labels = np.asarray(labels)
    boxes = np.asarray(boxes, dtype=np.float64)
    if labels.shape != (batch,):
        raise ShapeError('expected %d labels; got shape %r' % (batch, labels.shape))
    if boxes.shape != (batch, 4):
        raise ShapeError('expected %d x 4 boxes; got shape %r' % (batch, boxes.shape))
    if labels.min() < 0 or labels.max() >= classes:
        raise ValueError('labels must lie in 0..%d' % (classes - 1))
    tape = probs.tape
    onehot = tape.constant(np.eye(classes)[labels])
    target = tape.constant(boxes)
    cls = _cross_entropy(probs, onehot).mean()
    loc = (bundle.boxes - target).smooth_l1().sum(axis=-1).mean()
    aux_cls = aux_loc = None
    if bundle.aux_cls_supervised is not None:
        aux_cls = _cross_entropy(
            bundle.aux_cls_supervised, onehot).mean(axis=1).sum()
    if bundle.aux_loc_supervised is not None:
        aux_loc = (bundle.aux_loc_supervised - target).smooth_l1().sum(
            axis=-1).mean(axis=1).sum()
    return DetectionLosses(cls, loc, aux_cls, aux_loc)


def dann_loss(probs, domains):
    """
    Returns the mean binary cross-entropy of the discriminator outputs
    *probs* (*B* x 1 probabilities of the target domain) against *domains*
    (0 for source, 1 for target). Probabilities are floored at 1e-12 on both
    sides before taking logarithms.
    """
    probs = _tensor(probs)
    domains = np.asarray(domains, dtype=np.float64).reshape(-1, 1)
    if probs.shape != domains.shape:
        raise ShapeError('dann_loss: %r outputs for %d domain labels' % (
            probs.shape, domains.shape[0]))
    if np.any((domains != 0) & (domains != 1)):
        raise ValueError('domain labels must be 0 or 1')
    if np.any(probs.values < 0) or np.any(probs.values > 1):
        raise ValueError('discriminator outputs must lie in [0, 1]')
    labels = probs.tape.constant(domains)
    return -(
        labels * probs.log(floor=LOG_FLOOR) +
        (1.0 - labels) * (1.0 - probs).log(floor=LOG_FLOOR)).mean()


class LossComponents(namedtuple('LossComponents', (
        'det', 'da', 'cls_da', 'loc_da'))):
    """
    The unweighted components of the overall objective: the supervised
    detection loss :attr:`det`, the discriminator loss :attr:`da`, and the
    classification and localization adaptation losses :attr:`cls_da` and
    :attr:`loc_da`. Absent components are ``None``.
    """

    __slots__ = ()

    def __new__(cls, det, da=None, cls_da=None, loc_da=None):
        return super(LossComponents, cls).__new__(cls, det, da, cls_da, loc_da)


def total_loss(components, lambda1=1.0, lambda2=1.0, lambda3=0.01):
    """
    Returns ``det + lambda1 * da + lambda2 * cls_da + lambda3 * loc_da`` for
    the :class:`LossComponents` *components*; absent components contribute
    nothing. Components may be tensors or plain numbers.
    """
    for name, value in (
            ('lambda1', lambda1), ('lambda2', lambda2), ('lambda3', lambda3)):
        if not math.isfinite(value) or value < 0:
            raise ValueError('%s must be finite and nonnegative' % name)
    result = components.det
    for weight, term in zip(
            (lambda1, lambda2, lambda3),
            (components.da, components.cls_da, components.loc_da)):
        if term is not None:
            result = result + weight * term
    return result
