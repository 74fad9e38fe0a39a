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
The ablation module runs families of experiments which differ from a base
configuration in their mode, measures, or auxiliary head counts, repeats each
over several seeds, and tabulates the target-domain results.

Three preset families are provided:

``table4``
    The effect of the alignment variant on each subtask: the discriminator
    baseline, per-task discriminators, three pairs of alternative measures
    (two auxiliary heads each) and full inconsistency alignment.

``fig5``
    The effect of the number of auxiliary heads: one sweep of the classifier
    count with no localizers, one sweep of the localizer count with no
    classifiers, each over 0, 2, 4, 8, 16 and 32.

``table6``
    The effect of the dispersion measure for localization, with the
    classification branch removed.

Cells are independent and may be run concurrently in separate processes; the
number of workers defaults to the ``TIA_THREADS`` environment variable (or
the number of CPUs). Results never depend on the number of workers.

.. note::

    All items in this module are available from the :mod:`tialab` namespace
    without having to import :mod:`tialab.ablation` directly.

The following items are defined in the module:


AblationCell
============

.. autoclass:: AblationCell


AblationSpec
============

.. autoclass:: AblationSpec
    :members:


Functions
=========

.. autofunction:: run_ablation

.. autofunction:: write_ablation

.. autofunction:: preset_cells
"""

import io
import os
import csv
import json
import logging
import warnings
from collections import namedtuple, OrderedDict
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .exc import ConfigError, CellFailedWarning
from .losses import MeasureKind
from .trainer import ExperimentConfig, run_experiment, load_benchmark

logger = logging.getLogger('tialab')

SWEEP = (0, 2, 4, 8, 16, 32)


class AblationCell(namedtuple('AblationCell', (
        'label', 'mode', 'aux_classifiers', 'aux_localizers', 'cls_measure',
        'loc_measure'))):
    """
    One row of an ablation table: a *label*, the *mode* to run, and overrides
    of the auxiliary head counts and measures (``None`` keeps the base
    configuration's value).
    """

    __slots__ = ()

    def __new__(cls, label, mode, aux_classifiers=None, aux_localizers=None,
                cls_measure=None, loc_measure=None):
        try:
            if cls_measure is not None:
                cls_measure = MeasureKind.parse(cls_measure)
            if loc_measure is not None:
                loc_measure = MeasureKind.parse(loc_measure)
        except ValueError as exc:
            raise ConfigError(str(exc))
        return super(AblationCell, cls).__new__(
            cls, str(label), mode, aux_classifiers, aux_localizers,
            cls_measure, loc_measure)

    def config(self, base, seed):
        "Returns the :class:`~tialab.trainer.ExperimentConfig` for *seed*."
        model = base.model
        if self.aux_classifiers is not None:
            model = model.replace(aux_classifiers=self.aux_classifiers)
        if self.aux_localizers is not None:
            model = model.replace(aux_localizers=self.aux_localizers)
        # dann_task forces split_fc on; every other mode needs it off
        model = model.replace(split_fc=False)
        changes = {'mode': self.mode, 'model': model, 'seed': seed}
        if self.cls_measure is not None:
            changes['cls_measure'] = self.cls_measure
        if self.loc_measure is not None:
            changes['loc_measure'] = self.loc_measure
        return base.replace(**changes)

    def as_json(self):
        result = OrderedDict(self._asdict())
        for key in ('cls_measure', 'loc_measure'):
            if result[key] is not None:
                result[key] = result[key].value
        return result


def preset_cells(name):
    "Returns the tuple of :class:`AblationCell` for the preset *name*."
    if name == 'table4':
        return (
            AblationCell('baseline_dann', 'baseline_dann', 0, 0),
            AblationCell('dann_task', 'dann_task', 0, 0),
            AblationCell('l1_l1', 'measure_variant', 2, 2, 'l1', 'l1'),
            AblationCell('kl_l1', 'measure_variant', 2, 2, 'kl', 'l1'),
            AblationCell('swd_swd', 'measure_variant', 2, 2, 'swd', 'swd'),
            AblationCell('tia_full', 'tia_full'),
            )
    elif name == 'fig5':
        return tuple(
            AblationCell('cls_n%d' % n, 'tia_full', n, 0) for n in SWEEP
            ) + tuple(
            AblationCell('loc_m%d' % m, 'tia_full', 0, m) for m in SWEEP
            )
    elif name == 'table6':
        return tuple(
            AblationCell(kind, 'tia_loc', 0, None, None, kind)
            for kind in ('mad', 'variance', 'sd'))
    else:
        raise ConfigError('unknown ablation preset %r' % (name,))


class AblationSpec(namedtuple('AblationSpec', ('base', 'seeds', 'cells'))):
    """
    An ablation study: the *base* :class:`~tialab.trainer.ExperimentConfig`,
    the tuple of *seeds* each cell is repeated over, and the tuple of
    *cells*. Every cell's configuration is validated on construction.
    """

    __slots__ = ()

    def __new__(cls, base, seeds=(0, 1, 2, 3, 4), cells=()):
        try:
            seeds = tuple(int(s) for s in seeds)
        except (TypeError, ValueError) as exc:
            raise ConfigError('invalid ablation seeds: %s' % exc)
        cells = tuple(cells)
        if not seeds:
            raise ConfigError('an ablation requires at least one seed')
        if len(set(seeds)) != len(seeds):
            raise ConfigError('ablation seeds must be distinct')
        if not cells:
            raise ConfigError('an ablation requires at least one cell')
        labels = [cell.label for cell in cells]
        if len(set(labels)) != len(labels):
            raise ConfigError('ablation cell labels must be distinct')
        for cell in cells:
            cell.config(base, seeds[0])
        return super(AblationSpec, cls).__new__(cls, base, seeds, cells)

    @classmethod
    def from_json(cls, obj):
        """
        Constructs a spec from a JSON-compatible :class:`dict` with the
        members ``base`` (an experiment config object, defaulting to the
        packaged defaults), ``seeds``, and either ``preset`` (one of
        ``table4``, ``fig5`` or ``table6``) or ``cells`` (a list of cell
        objects).
        """
        if not isinstance(obj, dict):
            raise ConfigError('ablation config must be a JSON object')
        base = ExperimentConfig.from_json(obj.get('base', {}))
        if 'preset' in obj:
            cells = preset_cells(obj['preset'])
        else:
            try:
                cells = [AblationCell(**cell) for cell in obj.get('cells', [])]
            except TypeError as exc:
                raise ConfigError('invalid ablation cell: %s' % exc)
        return cls(base, obj.get('seeds', (0, 1, 2, 3, 4)), cells)

    @classmethod
    def load(cls, path):
        "Reads a spec from the JSON file at *path*."
        with io.open(path, 'r', encoding='utf-8') as f:
            try:
                obj = json.load(f)
            except ValueError as exc:
                raise ConfigError('%s: %s' % (path, exc))
        if isinstance(obj, dict) and isinstance(obj.get('base'), dict):
            data = obj['base'].get('data')
            if data is not None:
                obj['base']['data'] = os.path.join(
                    os.path.dirname(os.path.abspath(path)), data)
        return cls.from_json(obj)


AblationResult = namedtuple('AblationResult', ('cell', 'config', 'runs', 'errors'))
AblationResult.__doc__ = """
The outcome of one cell: the :class:`AblationCell`, the configuration of its
first seed, an ordered mapping of seeds to target-test
:class:`~tialab.evaluate.EvalSummary` (``None`` for failed seeds), and a
mapping of failed seeds to error messages.
"""


def default_workers():
    """
    Returns the worker count from the ``TIA_THREADS`` environment variable,
    or the number of CPUs if it is unset.
    """
    value = os.environ.get('TIA_THREADS')
    if value is None:
        return os.cpu_count() or 1
    try:
        workers = int(value)
    except ValueError:
        raise ConfigError('TIA_THREADS must be an integer; got %r' % value)
    if workers < 1:
        raise ConfigError('TIA_THREADS must be positive')
    return workers


def _run_cell(config, datasets, out_dir):
    try:
        result = run_experiment(config, out_dir, datasets)
    except Exception as exc:
        return None, '%s: %s' % (exc.__class__.__name__, exc)
    return result.summary.target, None


def run_ablation(spec, workers=None, datasets=None, runs_dir=None):
    """
    Runs every cell of the :class:`AblationSpec` *spec* once per seed and
    returns a list of ``AblationResult``, in cell order.

    All cells share *datasets* (by default the benchmark named by the base
    configuration). Runs execute in up to *workers* processes (by default
    :func:`default_workers`); with a single worker they execute inline. If
    *runs_dir* is given, each run writes its outputs to
    ``runs_dir/<label>/seed-<seed>``. A failed run is reported with
    :exc:`~tialab.exc.CellFailedWarning` and recorded in the results; the
    remaining runs proceed.
    """
    if workers is None:
        workers = default_workers()
    if datasets is None:
        datasets = load_benchmark(spec.base)
    jobs = OrderedDict()
    for cell in spec.cells:
        for seed in spec.seeds:
            out_dir = None
            if runs_dir is not None:
                out_dir = os.path.join(runs_dir, cell.label, 'seed-%d' % seed)
            jobs[cell.label, seed] = (cell.config(spec.base, seed), datasets, out_dir)
    logger.info(
        'running %d ablation runs over %d cells with %d workers',
        len(jobs), len(spec.cells), workers)
    if workers == 1:
        outcomes = {key: _run_cell(*job) for key, job in jobs.items()}
    else:
        with ProcessPoolExecutor(max_workers=workers) as executor:
            futures = {
                key: executor.submit(_run_cell, *job)
                for key, job in jobs.items()}
            outcomes = {}
            for key, future in futures.items():
                try:
                    outcomes[key] = future.result()
                except Exception as exc:
                    outcomes[key] = (None, '%s: %s' % (
                        exc.__class__.__name__, exc))
    results = []
    for cell in spec.cells:
        runs = OrderedDict()
        errors = OrderedDict()
        for seed in spec.seeds:
            summary, error = outcomes[cell.label, seed]
            runs[seed] = summary
            if error is not None:
                errors[seed] = error
                warnings.warn(CellFailedWarning(
                    'cell %s, seed %d failed: %s' % (cell.label, seed, error)))
        results.append(AblationResult(
            cell, cell.config(spec.base, spec.seeds[0]), runs, errors))
    return results


METRICS = (
    ('tgt_acc', 'accuracy'),
    ('tgt_loc_mse', 'loc_mse'),
    ('tgt_mean_iou', 'mean_iou'),
    )


def _format(value):
    if value is None:
        return ''
    if isinstance(value, float):
        return '%.17g' % value
    return str(value)


def ablation_header(seeds):
    "Returns the CSV header of an ablation table over *seeds*."
    header = [
        'label', 'mode', 'cls_measure', 'loc_measure', 'aux_classifiers',
        'aux_localizers', 'status']
    for seed in seeds:
        header.extend('%s_s%d' % (column, seed) for column, _ in METRICS)
    for column, _ in METRICS:
        header.extend((column + '_mean', column + '_std'))
    return header


def ablation_rows(results):
    """
    Yields the rows of the table for *results* (as returned by
    :func:`run_ablation`): the cell parameters, a status of ``ok`` or
    ``failed``, each seed's target accuracy, localization error and mean
    overlap, and the mean and standard deviation of each over the successful
    seeds.
    """
    for result in results:
        config = result.config
        row = [
            result.cell.label, config.mode,
            config.cls_measure.value if config.cls_branch else '',
            config.loc_measure.value if config.loc_branch else '',
            config.model.aux_classifiers, config.model.aux_localizers,
            'failed' if result.errors else 'ok',
            ]
        for summary in result.runs.values():
            row.extend(
                None if summary is None else getattr(summary, attr)
                for _, attr in METRICS)
        done = [s for s in result.runs.values() if s is not None]
        for _, attr in METRICS:
            if done:
                values = np.array([getattr(s, attr) for s in done])
                row.extend((
                    float(values.mean()),
                    float(values.std(ddof=1)) if len(values) > 1 else 0.0))
            else:
                row.extend((None, None))
        yield [_format(v) for v in row]


def write_ablation(results, seeds, path):
    "Writes the table for *results* over *seeds* to the CSV file *path*."
    with io.open(path, 'w', encoding='utf-8', newline='') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(ablation_header(seeds))
        for row in ablation_rows(results):
            writer.writerow(row)
    logger.info('wrote ablation table to %s', path)
