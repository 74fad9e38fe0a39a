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
The toy module trains a small two-dimensional, two-class model with
classification inconsistency alignment and exports the decisions of its
classifiers over a grid of points covering both domains. The output is
intended for plotting: it shows how the auxiliary classifiers' decision
boundaries disagree on target samples and how training reduces that
disagreement.

.. autofunction:: toy2d
"""

import io
import os
import csv
import logging

import numpy as np

from .autodiff import Tape
from .model import ModelConfig, init_model, forward
from .synth import ShiftSpec, generate_dataset
from .trainer import ExperimentConfig, run_experiment

logger = logging.getLogger('tialab')

TOY_HEADER = ('stage', 'x_0', 'x_1', 'head', 'prob_0', 'prob_1')


def toy_config(seed=0, iterations=1000):
    "Returns the :class:`~tialab.trainer.ExperimentConfig` of the toy run."
    return ExperimentConfig.default().replace(
        mode='tia_cls',
        model=ModelConfig(
            dim=2, classes=2, trunk=(16, 16), aux_classifiers=3,
            aux_localizers=0, discriminator=(16,)),
        iterations=iterations,
        lr_decay_interval=max(1, iterations),
        eval_interval=max(1, iterations),
        seed=seed)


def toy_spec():
    "Returns the :class:`~tialab.synth.ShiftSpec` of the toy benchmark."
    return ShiftSpec.build(
        dim=2, classes=2, mean_radius=2.5, shift=1.0, translation_scale=1.0,
        n_train=500, n_test=200)


def _decisions(model, points):
    with Tape() as tape:
        bundle = forward(model.bind(tape), points, supervised=True)
        return (
            np.array(bundle.cls_probs.values),
            np.array(bundle.aux_cls_supervised.values))


def toy2d(path, seed=0, iterations=1000, grid=41):
    """
    Trains the toy model (see :func:`toy_config` and :func:`toy_spec`) and
    writes a CSV to *path* with the columns ``stage`` (``initial`` or
    ``final``), the grid coordinates ``x_0`` and ``x_1``, ``head``
    (``primary`` or the index of an auxiliary classifier) and the class
    probabilities ``prob_0`` and ``prob_1``. The grid spans *grid* x *grid*
    points covering both domains' training samples with a margin of 1.
    """
    config = toy_config(seed, iterations)
    datasets = generate_dataset(toy_spec(), seed)
    initial = init_model(config.model, config.seed)
    final = run_experiment(config, datasets=datasets).model
    x = np.concatenate((datasets.source_train.x, datasets.target_train.x))
    lo = x.min(axis=0) - 1.0
    hi = x.max(axis=0) + 1.0
    g0, g1 = np.meshgrid(
        np.linspace(lo[0], hi[0], grid), np.linspace(lo[1], hi[1], grid),
        indexing='ij')
    points = np.column_stack((g0.ravel(), g1.ravel()))
    opened = isinstance(path, (str, os.PathLike))
    f = io.open(path, 'w', encoding='utf-8', newline='') if opened else path
    try:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(TOY_HEADER)
        for stage, model in (('initial', initial), ('final', final)):
            primary, auxiliary = _decisions(model, points)
            heads = [('primary', primary)] + [
                (str(i), probs) for i, probs in enumerate(auxiliary)]
            for head, probs in heads:
                for point, prob in zip(points, probs):
                    writer.writerow((
                        stage, '%.6g' % point[0], '%.6g' % point[1], head,
                        '%.6g' % prob[0], '%.6g' % prob[1]))
    finally:
        if opened:
            f.close()
    logger.info('wrote toy decisions to %s', path)
