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
The evaluate module measures a trained model on a labeled dataset:
classification accuracy, localization error, the overlap of predicted and
true boxes, and the breakdown of correctly classified detections into
*Correct*, *MisLocalization* and *Background* by their overlap with the
ground truth.

.. note::

    All items in this module are available from the :mod:`tialab` namespace
    without having to import :mod:`tialab.evaluate` directly.

The following items are defined in the module:


EvalSummary
===========

.. autoclass:: EvalSummary


DetectionType
=============

.. autoclass:: DetectionType


Functions
=========

.. autofunction:: evaluate

.. autofunction:: iou

.. autofunction:: classify_detection
"""

import math
import logging
from enum import Enum
from collections import namedtuple, OrderedDict

import numpy as np

from .exc import DatasetError, ShapeError
from .box import Box

logger = logging.getLogger('tialab')

MIN_BOX_SIZE = 1e-6


class DetectionType(Enum):
    """
    The kind of a correctly classified detection, judged by the overlap of
    its box with the ground truth:

    * :attr:`CORRECT` -- overlap of at least 0.5
    * :attr:`MISLOCALIZATION` -- overlap below 0.5 but at least 0.3
    * :attr:`BACKGROUND` -- overlap below 0.3
    """

    CORRECT = 'Correct'
    MISLOCALIZATION = 'MisLocalization'
    BACKGROUND = 'Background'


def iou(a, b):
    """
    Returns the intersection over union of the boxes *a* and *b*, each given
    as ``(cx, cy, w, h)``. Widths and heights must be positive::

        >>> iou((0.5, 0.5, 1.0, 1.0), (1.0, 0.5, 1.0, 1.0))
        0.3333333333333333
    """
    return Box(*a).iou(b)


def classify_detection(value):
    """
    Returns the :class:`DetectionType` for the overlap *value*, which must
    lie in [0, 1]. The boundaries 0.5 and 0.3 belong to the higher class.
    """
    value = float(value)
    if not (math.isfinite(value) and 0.0 <= value <= 1.0):
        raise ValueError('overlap must lie in [0, 1]; got %r' % value)
    if value >= 0.5:
        return DetectionType.CORRECT
    elif value >= 0.3:
        return DetectionType.MISLOCALIZATION
    else:
        return DetectionType.BACKGROUND


def _fractions(kinds):
    result = OrderedDict((kind.value, 0.0) for kind in DetectionType)
    if kinds:
        for kind in kinds:
            result[kind.value] += 1
        for key in result:
            result[key] /= len(kinds)
    return result


class EvalSummary(namedtuple('EvalSummary', (
        'accuracy', 'loc_mse', 'mean_iou', 'taxonomy', 'class_taxonomy',
        'count', 'counted'))):
    """
    The result of :func:`evaluate`.

    .. attribute:: accuracy

        Fraction of samples whose most probable primary class is correct.

    .. attribute:: loc_mse

        Mean squared error of the primary boxes over all samples and all
        four coordinates.

    .. attribute:: mean_iou

        Mean intersection over union of the primary and true boxes.

    .. attribute:: taxonomy

        A mapping of :class:`DetectionType` values to the fraction of
        correctly classified samples of that type. The fractions sum to 1
        (or are all 0 if no sample was correctly classified).

    .. attribute:: class_taxonomy

        As :attr:`taxonomy` but computed per class and averaged over the
        classes with at least one correct classification.

    .. attribute:: count

        The number of samples evaluated.

    .. attribute:: counted

        The number of correctly classified samples in :attr:`taxonomy`.
    """

    __slots__ = ()

    def as_json(self):
        "Returns the summary as a JSON-compatible :class:`dict`."
        result = OrderedDict(self._asdict())
        result['taxonomy'] = dict(self.taxonomy)
        result['class_taxonomy'] = dict(self.class_taxonomy)
        return result


def evaluate(model, dataset):
    """
    Evaluates the primary heads of *model* (anything with a ``predict``
    method returning probabilities and boxes, usually a
    :class:`~tialab.model.Model`) on the labeled *dataset* and returns an
    :class:`EvalSummary`.

    Predicted widths and heights are clamped to a small positive minimum
    before overlaps are computed.
    """
    if len(dataset) == 0:
        raise DatasetError('cannot evaluate on an empty dataset')
    config = getattr(model, 'config', None)
    if config is not None and config.dim != dataset.dim:
        raise ShapeError('model expects %d features; dataset has %d' % (
            config.dim, dataset.dim))
    probs, boxes = model.predict(dataset.x)
    predicted = probs.argmax(axis=1)
    hits = predicted == dataset.y
    loc_mse = float(((boxes - dataset.boxes) ** 2).mean())
    boxes = np.array(boxes)
    boxes[:, 2:] = np.maximum(boxes[:, 2:], MIN_BOX_SIZE)
    overlaps = [
        Box(*pred).iou(true) for pred, true in zip(boxes, dataset.boxes)]
    kinds = [
        classify_detection(overlap)
        for overlap, hit in zip(overlaps, hits) if hit]
    per_class = [
        _fractions([
            classify_detection(overlap)
            for overlap, hit, label in zip(overlaps, hits, dataset.y)
            if hit and label == c])
        for c in np.unique(dataset.y[hits])]
    class_taxonomy = OrderedDict((kind.value, 0.0) for kind in DetectionType)
    if per_class:
        for key in class_taxonomy:
            class_taxonomy[key] = float(np.mean([f[key] for f in per_class]))
    summary = EvalSummary(
        accuracy=float(hits.mean()),
        loc_mse=loc_mse,
        mean_iou=float(np.mean(overlaps)),
        taxonomy=_fractions(kinds),
        class_taxonomy=class_taxonomy,
        count=len(dataset),
        counted=len(kinds),
        )
    logger.debug(
        'evaluated %d samples: accuracy=%.4f mean_iou=%.4f',
        summary.count, summary.accuracy, summary.mean_iou)
    return summary
