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
The trainer module implements the single-stage adversarial training loop.
Each step builds a fresh tape, evaluates the overall objective for the
configured mode on one source and one target batch, differentiates it once,
and applies one step of SGD with momentum to every parameter. The
adversarial directions are encoded entirely by the gradient reversal layers
placed in the model, so no alternating optimization is needed.

The following modes are supported:

=================== =========================================================
Mode                Objective
=================== =========================================================
``source_only``     supervised losses on the source domain only
``target_only``     supervised losses on the (labeled) target domain only
``baseline_dann``   adds the domain discriminator loss
``dann_task``       duplicates the last trunk layer per task and aligns
                    each with its own discriminator
``tia_cls``         baseline plus classification inconsistency alignment
``tia_loc``         baseline plus localization inconsistency alignment
``tia_full``        baseline plus both alignments
``measure_variant`` as ``tia_full`` with the measures given by
                    ``cls_measure`` and ``loc_measure``
=================== =========================================================

.. note::

    All items in this module are available from the :mod:`tialab` namespace
    without having to import :mod:`tialab.trainer` directly.

The following items are defined in the module:


ExperimentConfig
================

.. autoclass:: ExperimentConfig
    :members:


TrainState
==========

.. autoclass:: TrainState


EpochSampler
============

.. autoclass:: EpochSampler
    :members:


MetricsRecord
=============

.. autoclass:: MetricsRecord


MetricsRow
==========

.. autoclass:: MetricsRow


Functions
=========

.. autofunction:: init_state

.. autofunction:: objective

.. autofunction:: step_gradients

.. autofunction:: train_step

.. autofunction:: run_experiment
"""

import io
import os
import csv
import json
import math
import logging
import warnings
from collections import namedtuple, OrderedDict
from importlib.resources import files

import numpy as np

from .exc import (
    ConfigError,
    NonFiniteError,
    TrainingDiverged,
    UnlabeledTargetWarning,
    )
from .autodiff import Tape
from .model import ModelConfig, init_model, forward, serialize_model
from .losses import (
    MeasureKind,
    CLS_MEASURES,
    LOC_MEASURES,
    LossComponents,
    detection_losses,
    dann_loss,
    inconsistency,
    task_da_loss,
    total_loss,
    )
from .synth import ShiftSpec, generate_dataset, read_benchmark
from .evaluate import evaluate

logger = logging.getLogger('tialab')

MODES = (
    'source_only', 'target_only', 'baseline_dann', 'dann_task', 'tia_cls',
    'tia_loc', 'tia_full', 'measure_variant',
    )
CLS_MODES = frozenset(('tia_cls', 'tia_full', 'measure_variant'))
LOC_MODES = frozenset(('tia_loc', 'tia_full', 'measure_variant'))
SUPERVISED_MODES = frozenset(('source_only', 'target_only'))

METRICS_HEADER = (
    'iter', 'loss_det', 'loss_da', 'loss_cls_da', 'loss_loc_da', 'src_acc',
    'tgt_acc', 'src_loc_mse', 'tgt_loc_mse', 'tgt_mean_iou',
    )


def _default_json():
    return json.loads(
        files('tialab').joinpath('defaults', 'experiment.json').read_text())


class ExperimentConfig(namedtuple('ExperimentConfig', (
        'mode', 'model', 'lambda1', 'lambda2', 'lambda3', 'lr', 'momentum',
        'iterations', 'lr_decay', 'lr_decay_interval', 'batch_source',
        'batch_target', 'seed', 'data', 'data_seed', 'grl_scale',
        'eval_interval', 'cls_measure', 'loc_measure'))):
    """
    Specifies a complete training run. Construct it with :meth:`default`,
    :meth:`from_json` or :meth:`load`, all of which fill unspecified fields
    from the packaged defaults; derive variations with :meth:`replace`.

    .. attribute:: mode

        One of the modes listed above.

    .. attribute:: model

        The :class:`~tialab.model.ModelConfig`. The auxiliary head counts
        determine which inconsistency branches are active: a count of 0
        disables a branch, a count of 1 is invalid when the mode uses the
        branch.

    .. attribute:: lambda1

        Weight of the domain discriminator loss.

    .. attribute:: lambda2

        Weight of the classification adaptation loss.

    .. attribute:: lambda3

        Weight of the localization adaptation loss.

    .. attribute:: lr

        Initial learning rate, multiplied by :attr:`lr_decay` every
        :attr:`lr_decay_interval` iterations.

    .. attribute:: data

        Directory holding the four dataset splits, or ``None`` to generate
        the default benchmark with :attr:`data_seed`.

    .. attribute:: eval_interval

        Number of iterations between rows of the metrics file.
    """

    __slots__ = ()

    def __new__(cls, mode, model, lambda1=1.0, lambda2=1.0, lambda3=0.01,
                lr=0.01, momentum=0.9, iterations=5000, lr_decay=0.1,
                lr_decay_interval=3500, batch_source=32, batch_target=32,
                seed=0, data=None, data_seed=0, grl_scale=1.0,
                eval_interval=500, cls_measure=MeasureKind.SE_WEIGHTED,
                loc_measure=MeasureKind.SD):
        if mode not in MODES:
            raise ConfigError('unknown mode %r' % (mode,))
        if not isinstance(model, ModelConfig):
            model = ModelConfig.from_json(model)
        try:
            cls_measure = MeasureKind.parse(cls_measure)
            loc_measure = MeasureKind.parse(loc_measure)
        except ValueError as exc:
            raise ConfigError(str(exc))
        for name, value in (
                ('lambda1', lambda1), ('lambda2', lambda2),
                ('lambda3', lambda3), ('grl_scale', grl_scale)):
            if not (math.isfinite(value) and value >= 0):
                raise ConfigError('%s must be finite and nonnegative' % name)
        if not (math.isfinite(lr) and lr > 0):
            raise ConfigError('lr must be positive')
        if not 0 <= momentum < 1:
            raise ConfigError('momentum must lie in [0, 1)')
        if not 0 < lr_decay <= 1:
            raise ConfigError('lr_decay must lie in (0, 1]')
        for name, value, least in (
                ('iterations', iterations, 0),
                ('lr_decay_interval', lr_decay_interval, 1),
                ('batch_source', batch_source, 1),
                ('batch_target', batch_target, 1),
                ('eval_interval', eval_interval, 1)):
            if int(value) != value or value < least:
                raise ConfigError('%s must be an integer >= %d' % (name, least))
        if mode == 'dann_task':
            model = model.replace(split_fc=True)
        elif model.split_fc:
            raise ConfigError('split_fc is only valid in dann_task mode')
        if mode in CLS_MODES:
            _check_branch(
                'classification', cls_measure, CLS_MEASURES,
                model.aux_classifiers)
        if mode in LOC_MODES:
            _check_branch(
                'localization', loc_measure, LOC_MEASURES,
                model.aux_localizers)
        return super(ExperimentConfig, cls).__new__(
            cls, mode, model, float(lambda1), float(lambda2), float(lambda3),
            float(lr), float(momentum), int(iterations), float(lr_decay),
            int(lr_decay_interval), int(batch_source), int(batch_target),
            int(seed), data, int(data_seed), float(grl_scale),
            int(eval_interval), cls_measure, loc_measure)

    @classmethod
    def default(cls):
        "Returns the desk-scale default configuration."
        return cls.from_json({})

    @classmethod
    def from_json(cls, obj):
        """
        Constructs a configuration from the JSON-compatible :class:`dict`
        *obj*. Fields absent from *obj* (including fields of the nested
        ``model`` object) take their packaged default values.
        """
        if not isinstance(obj, dict):
            raise ConfigError('experiment config must be a JSON object')
        merged = _default_json()
        model = merged.pop('model')
        overrides = obj.get('model', {})
        if not isinstance(overrides, dict):
            raise ConfigError('model must be a JSON object')
        model.update(overrides)
        merged.update(obj)
        merged['model'] = model
        try:
            return cls(**merged)
        except ConfigError:
            raise
        except (TypeError, ValueError) as exc:
            raise ConfigError('invalid experiment config: %s' % exc)

    def replace(self, **kwargs):
        """
        Returns a copy of the configuration with the given fields replaced.
        Unlike :meth:`_replace` the result is validated.
        """
        return ExperimentConfig(**dict(self._asdict(), **kwargs))

    def as_json(self):
        "Returns the configuration as a JSON-compatible :class:`dict`."
        result = OrderedDict(self._asdict())
        result['model'] = self.model.as_json()
        result['cls_measure'] = self.cls_measure.value
        result['loc_measure'] = self.loc_measure.value
        return result

    @classmethod
    def load(cls, path):
        """
        Reads a configuration from the JSON file at *path*. A relative
        :attr:`data` directory is resolved against the directory holding the
        file.
        """
        with io.open(path, 'r', encoding='utf-8') as f:
            try:
                obj = json.load(f)
            except ValueError as exc:
                raise ConfigError('%s: %s' % (path, exc))
        if isinstance(obj, dict) and obj.get('data') is not None:
            obj['data'] = os.path.join(
                os.path.dirname(os.path.abspath(path)), obj['data'])
        return cls.from_json(obj)

    def save(self, path):
        "Writes the configuration to *path* as JSON."
        with io.open(path, 'w', encoding='utf-8') as f:
            json.dump(self.as_json(), f, indent=4)
            f.write('\n')

    @property
    def adaptive(self):
        "``True`` if the mode reads (unlabeled) target batches."
        return self.mode not in SUPERVISED_MODES

    @property
    def cls_branch(self):
        "``True`` if classification inconsistency alignment is active."
        return self.mode in CLS_MODES and self.model.aux_classifiers > 0

    @property
    def loc_branch(self):
        "``True`` if localization inconsistency alignment is active."
        return self.mode in LOC_MODES and self.model.aux_localizers > 0

    def learning_rate(self, iteration):
        "Returns the learning rate in effect at *iteration*."
        return self.lr * self.lr_decay ** (iteration // self.lr_decay_interval)


def _check_branch(task, measure, valid, count):
    if measure not in valid:
        raise ConfigError('%s is not a %s measure' % (measure.value, task))
    if count == 1:
        raise ConfigError(
            '%s inconsistency requires at least 2 auxiliary heads' % task)
    if measure.pairwise and count not in (0, 2):
        raise ConfigError(
            '%s requires exactly 2 auxiliary heads; got %d' % (
                measure.value, count))


class EpochSampler(object):
    """
    Draws mini-batch indices from a dataset of *size* samples by cycling
    through shuffled epochs. The order of epoch *k* depends only on *seed*,
    *stream* and *k*; a draw which exhausts an epoch continues into the next.
    """

    def __init__(self, size, seed, stream):
        if size < 1:
            raise ValueError('cannot sample from an empty dataset')
        self._size = size
        self._seed = seed
        self._stream = stream
        self._epoch = 0
        self._order = self._permutation(0)
        self._position = 0

    def __repr__(self):
        return '<EpochSampler size=%d epoch=%d position=%d>' % (
            self._size, self._epoch, self._position)

    def _permutation(self, epoch):
        rng = np.random.default_rng([self._seed, self._stream, epoch])
        return rng.permutation(self._size)

    @property
    def epoch(self):
        return self._epoch

    def draw(self, count):
        "Returns an array of *count* sample indices."
        parts = []
        while count > 0:
            if self._position == self._size:
                self._epoch += 1
                self._order = self._permutation(self._epoch)
                self._position = 0
            take = min(count, self._size - self._position)
            parts.append(self._order[self._position:self._position + take])
            self._position += take
            count -= take
        return np.concatenate(parts) if parts else np.empty(0, dtype=np.int64)


class TrainState(namedtuple('TrainState', (
        'config', 'model', 'velocity', 'iteration', 'source_sampler',
        'target_sampler'))):
    """
    The state of a training run: its :class:`ExperimentConfig`, the current
    :class:`~tialab.model.Model`, a mapping of parameter names to momentum
    buffers (:attr:`velocity`), the number of completed iterations, and the
    :class:`EpochSampler` for each domain.
    """

    __slots__ = ()


def init_state(config, source_size, target_size, model=None):
    """
    Returns the initial :class:`TrainState` for *config* with samplers over
    datasets of *source_size* and *target_size* samples. If *model* is not
    given, it is initialized from the configuration's seed.
    """
    if model is None:
        model = init_model(config.model, config.seed)
    velocity = OrderedDict(
        (name, np.zeros_like(value))
        for name, value in model.parameters.items())
    return TrainState(
        config, model, velocity, 0,
        EpochSampler(source_size, config.seed, 100),
        EpochSampler(target_size, config.seed, 101))


MetricsRecord = namedtuple('MetricsRecord', (
    'iteration', 'lr', 'loss_det', 'loss_da', 'loss_cls_da', 'loss_loc_da',
    'total', 'src_cls_ia', 'tgt_cls_ia', 'src_loc_ia', 'tgt_loc_ia'))
MetricsRecord.__doc__ = """
The measurements of one :func:`train_step`: the iteration it performed, the
learning rate used, each loss component weighted by its trade-off
parameter (0 when absent), their total, and the batch-mean inconsistencies
of the source and target batches (``None`` when the branch is inactive).
"""

MetricsRow = namedtuple('MetricsRow', METRICS_HEADER + (
    'src_cls_ia', 'tgt_cls_ia', 'src_loc_ia', 'tgt_loc_ia'))
MetricsRow.__doc__ = """
One row of the metrics history written by :func:`run_experiment`. The
fields up to *tgt_mean_iou* form the columns of ``metrics.csv``; the
remaining fields hold the monitor-batch inconsistencies.
"""

Objective = namedtuple('Objective', ('total', 'components', 'stats'))

ExperimentResult = namedtuple('ExperimentResult', ('model', 'history', 'summary'))

RunSummary = namedtuple('RunSummary', ('source', 'target'))


def objective(config, binding, source, target=None, reverse=True):
    """
    Builds the overall objective of *config* on the tape of *binding* (a
    :class:`~tialab.model.Binding`) for the labeled *source* batch and the
    *target* batch, whose labels are never read. Returns an ``Objective``
    of the total loss tensor, the unweighted
    :class:`~tialab.losses.LossComponents`, and a mapping of batch-mean
    inconsistency statistics.

    If *reverse* is ``False`` the gradient reversal layers are omitted, which
    leaves the value unchanged; this exists to verify gradients against
    finite differences.
    """
    tape = binding.tape
    grl_scale = config.grl_scale if reverse else None
    adversarial = config.cls_branch or config.loc_branch
    discriminator = config.adaptive
    source_out = forward(
        binding, source.x, supervised=True, adversarial=adversarial,
        discriminator=discriminator, grl_scale=grl_scale)
    det = detection_losses(source_out, source.y, source.boxes).total()
    da = cls_da = loc_da = None
    stats = OrderedDict(
        (key, None)
        for key in ('src_cls_ia', 'tgt_cls_ia', 'src_loc_ia', 'tgt_loc_ia'))
    if config.adaptive:
        if target is None:
            raise ValueError('%s requires a target batch' % config.mode)
        target_out = forward(
            binding, target.x, supervised=False, adversarial=adversarial,
            discriminator=discriminator, grl_scale=grl_scale)
        domains = np.concatenate((
            np.zeros(len(source.x)), np.ones(len(target.x))))

        def domain_loss(s, t):
            return dann_loss(tape.apply('concat', s, t, axis=0), domains)

        da = domain_loss(source_out.disc, target_out.disc)
        if config.mode == 'dann_task':
            cls_da = domain_loss(source_out.disc_cls, target_out.disc_cls)
            loc_da = domain_loss(source_out.disc_loc, target_out.disc_loc)
        if config.cls_branch:
            s = inconsistency(config.cls_measure, source_out.aux_cls_adversarial)
            t = inconsistency(config.cls_measure, target_out.aux_cls_adversarial)
            cls_da = task_da_loss('cls', s, t)
            stats['src_cls_ia'] = float(s.values.mean())
            stats['tgt_cls_ia'] = float(t.values.mean())
        if config.loc_branch:
            s = inconsistency(config.loc_measure, source_out.aux_loc_adversarial)
            t = inconsistency(config.loc_measure, target_out.aux_loc_adversarial)
            loc_da = task_da_loss('loc', s, t)
            stats['src_loc_ia'] = float(s.values.mean())
            stats['tgt_loc_ia'] = float(t.values.mean())
    components = LossComponents(det, da, cls_da, loc_da)
    total = total_loss(
        components, config.lambda1, config.lambda2, config.lambda3)
    return Objective(total, components, stats)


def _weighted(config, components):
    result = OrderedDict()
    for key, weight, term in (
            ('loss_det', 1.0, components.det),
            ('loss_da', config.lambda1, components.da),
            ('loss_cls_da', config.lambda2, components.cls_da),
            ('loss_loc_da', config.lambda3, components.loc_da)):
        result[key] = 0.0 if term is None else weight * float(term)
    return result


def step_gradients(config, model, source, target=None, iteration=0):
    """
    Evaluates the objective of *config* for *model* on the given batches and
    returns a tuple of an ordered mapping of parameter names to gradients,
    the weighted loss components, and the inconsistency statistics.
    Non-finite values raise :exc:`~tialab.exc.TrainingDiverged` identifying
    *iteration*.
    """
    with Tape() as tape:
        binding = model.bind(tape)
        try:
            result = objective(config, binding, source, target)
        except NonFiniteError as exc:
            raise TrainingDiverged(iteration, {'forward': str(exc)})
        weighted = _weighted(config, result.components)
        grads = binding.gradients(tape.backward(result.total))
    for name, grad in grads.items():
        if not np.all(np.isfinite(grad)):
            raise TrainingDiverged(iteration, weighted)
    return grads, weighted, result.stats


def train_step(state, source, target):
    """
    Performs one iteration of training on the labeled *source* batch and the
    *target* batch (whose labels are ignored) and returns a tuple of the new
    :class:`TrainState` and the :class:`MetricsRecord` of the step.

    Every parameter is updated by SGD with momentum: ``v = momentum * v +
    g`` then ``theta = theta - lr * v``.
    """
    config = state.config
    if len(source.x) != config.batch_source:
        raise ValueError('expected %d source samples; got %d' % (
            config.batch_source, len(source.x)))
    if config.adaptive and len(target.x) != config.batch_target:
        raise ValueError('expected %d target samples; got %d' % (
            config.batch_target, len(target.x)))
    lr = config.learning_rate(state.iteration)
    grads, weighted, stats = step_gradients(
        config, state.model, source, target if config.adaptive else None,
        state.iteration)
    velocity = OrderedDict()
    params = OrderedDict()
    for name, value in state.model.parameters.items():
        v = config.momentum * state.velocity[name] + grads[name]
        velocity[name] = v
        params[name] = value - lr * v
    try:
        model = state.model.replace_parameters(params)
    except NonFiniteError:
        raise TrainingDiverged(state.iteration, weighted)
    record = MetricsRecord(
        state.iteration, lr, total=sum(weighted.values()),
        **weighted, **stats)
    logger.debug('iteration %d: total=%.6g', state.iteration, record.total)
    return state._replace(
        model=model, velocity=velocity, iteration=state.iteration + 1), record


def load_benchmark(config):
    """
    Returns the benchmark named by *config*: the splits read from
    :attr:`~ExperimentConfig.data`, or the default benchmark generated from
    :attr:`~ExperimentConfig.data_seed` if no directory is given.
    """
    if config.data is None:
        return generate_dataset(ShiftSpec.default(), config.data_seed)
    return read_benchmark(config.data, config.model.dim)


def _monitor(config, model, source, target):
    with Tape() as tape:
        result = objective(config, model.bind(tape), source, target)
        return _weighted(config, result.components), result.stats


def _format(value):
    if isinstance(value, float):
        return '%.17g' % value
    return str(value)


def run_experiment(config, out_dir=None, datasets=None):
    """
    Trains a model according to *config* and returns an ``ExperimentResult``
    of the final :class:`~tialab.model.Model`, the list of
    :class:`MetricsRow` measured, and a ``RunSummary`` of the final
    :class:`~tialab.evaluate.EvalSummary` on the source and target test
    splits.

    *datasets* is a :class:`~tialab.synth.Benchmark`; if omitted it is
    obtained from *config* by :func:`load_benchmark`. A row of metrics is
    measured before training, after every
    :attr:`~ExperimentConfig.eval_interval` iterations, and after the final
    iteration. Loss columns are measured on a fixed monitor batch (the first
    samples of each training split).

    If *out_dir* is given, ``metrics.csv`` (written row by row),
    ``model.json`` and ``eval.json`` are written there.
    """
    if datasets is None:
        datasets = load_benchmark(config)
    for split in datasets:
        if split.dim != config.model.dim:
            raise ConfigError('model expects %d features; data has %d' % (
                config.model.dim, split.dim))
        if split.classes is not None and split.classes != config.model.classes:
            raise ConfigError('model expects %d classes; data has %d' % (
                config.model.classes, split.classes))
    if config.mode == 'target_only':
        warnings.warn(UnlabeledTargetWarning(
            'target_only trains on target labels'))
        train_set = datasets.target_train
    else:
        train_set = datasets.source_train
    target_set = datasets.target_train
    state = init_state(config, len(train_set), len(target_set))
    monitor_source = train_set.batch(
        np.arange(min(config.batch_source, len(train_set))))
    monitor_target = target_set.batch(
        np.arange(min(config.batch_target, len(target_set))), labeled=False)
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
    logger.info(
        'starting %s run: seed=%d iterations=%d', config.mode, config.seed,
        config.iterations)

    history = []
    summary = []

    def measure(f, writer):
        weighted, stats = _monitor(
            config, state.model, monitor_source, monitor_target)
        source = evaluate(state.model, datasets.source_test)
        target = evaluate(state.model, datasets.target_test)
        row = MetricsRow(
            iter=state.iteration,
            src_acc=source.accuracy, tgt_acc=target.accuracy,
            src_loc_mse=source.loc_mse, tgt_loc_mse=target.loc_mse,
            tgt_mean_iou=target.mean_iou, **weighted, **stats)
        history.append(row)
        summary[:] = [RunSummary(source, target)]
        logger.info(
            'iteration %d: src_acc=%.4f tgt_acc=%.4f tgt_mean_iou=%.4f',
            row.iter, row.src_acc, row.tgt_acc, row.tgt_mean_iou)
        if writer is not None:
            writer.writerow([_format(v) for v in row[:len(METRICS_HEADER)]])
            f.flush()

    f = writer = None
    if out_dir is not None:
        f = io.open(
            os.path.join(out_dir, 'metrics.csv'), 'w', encoding='utf-8',
            newline='')
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(METRICS_HEADER)
    try:
        measure(f, writer)
        for i in range(config.iterations):
            source = train_set.batch(
                state.source_sampler.draw(config.batch_source))
            target = target_set.batch(
                state.target_sampler.draw(config.batch_target), labeled=False)
            state, record = train_step(state, source, target)
            if (state.iteration % config.eval_interval == 0 or
                    state.iteration == config.iterations):
                measure(f, writer)
    finally:
        if f is not None:
            f.close()
    summary = summary[0]
    if out_dir is not None:
        serialize_model(state.model, os.path.join(out_dir, 'model.json'))
        doc = OrderedDict((
            ('mode', config.mode),
            ('seed', config.seed),
            ('iterations', state.iteration),
            ('source_test', summary.source.as_json()),
            ('target_test', summary.target.as_json()),
            ('monitor', OrderedDict((
                ('initial', dict(history[0]._asdict())),
                ('final', dict(history[-1]._asdict())),
                ))),
            ))
        with io.open(os.path.join(out_dir, 'eval.json'), 'w', encoding='utf-8') as f:
            json.dump(doc, f, indent=4)
            f.write('\n')
    logger.info('finished %s run: seed=%d', config.mode, config.seed)
    return ExperimentResult(state.model, history, summary)
