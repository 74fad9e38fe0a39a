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
The gradcheck module verifies analytic gradients against central finite
differences. :func:`grad_check` checks a single function; :func:`run_suite`
checks every primitive operation and every loss over many random instances,
and confirms the contracts of the gradient reversal and detach primitives
(which finite differences cannot see, as both are identities in the forward
pass).

.. note::

    All items in this module are available from the :mod:`tialab` namespace
    without having to import :mod:`tialab.gradcheck` directly.

The following items are defined in the module:


GradCheckReport
===============

.. autoclass:: GradCheckReport


Functions
=========

.. autofunction:: grad_check

.. autofunction:: run_suite
"""

import math
import logging
from collections import namedtuple, OrderedDict

import numpy as np

from .exc import NonFiniteError
from .autodiff import Tape, grl_apply, detach
from .losses import (
    MeasureKind,
    cls_inconsistency,
    loc_inconsistency,
    alt_measure,
    task_da_loss,
    detection_losses,
    dann_loss,
    swd_projections,
    )
from .model import ModelConfig, init_model, forward, group_of
from .synth import Batch
from .trainer import ExperimentConfig, objective

logger = logging.getLogger('tialab')


class GradCheckReport(namedtuple('GradCheckReport', (
        'name', 'max_error', 'passed', 'worst', 'checked'))):
    """
    The result of a gradient check: the *name* of the function checked, the
    largest relative error found, whether it was below the tolerance
    (*passed*), the coordinate with the largest error (*worst*, a tuple of
    instance, parameter and index), and the number of coordinates checked.
    """

    __slots__ = ()

    def __str__(self):
        return '%-24s %s max_error=%.3g checked=%d' % (
            self.name, 'ok    ' if self.passed else 'FAILED',
            self.max_error, self.checked)


def _value(f, params, where):
    with Tape() as tape:
        tensors = [tape.variable(p) for p in params]
        try:
            value = float(f(*tensors))
        except NonFiniteError as exc:
            raise NonFiniteError('%s (%s)' % (exc, where))
    if not math.isfinite(value):
        raise NonFiniteError('function is non-finite (%s)' % where)
    return value


def grad_check(f, params, h=1e-5, tol=1e-4, coords=None, rng=None, name=None):
    """
    Compares the analytic gradient of *f* with central differences
    ``(f(x + h) - f(x - h)) / 2h`` at every coordinate of the arrays in
    *params*. *f* is called with one :class:`~tialab.autodiff.Tensor` per
    array (all on one tape) and must return a single-valued tensor.

    The relative error at a coordinate is ``|a - n| / max(1, |a|, |n|)``;
    the check passes if the largest is below *tol*. If *coords* is given,
    only that many coordinates chosen by *rng* are checked. Non-finite
    values raise :exc:`~tialab.exc.NonFiniteError` naming the coordinate.
    """
    if not h > 0:
        raise ValueError('h must be positive')
    params = [np.array(p, dtype=np.float64) for p in params]
    with Tape() as tape:
        tensors = [tape.variable(p) for p in params]
        try:
            loss = f(*tensors)
        except NonFiniteError as exc:
            raise NonFiniteError('%s (at the unperturbed parameters)' % exc)
        grads = tape.backward(loss)
        analytic = [grads[t] for t in tensors]
    coordinates = [
        (i, index) for i, p in enumerate(params) for index in np.ndindex(p.shape)]
    if coords is not None and coords < len(coordinates):
        if rng is None:
            rng = np.random.default_rng(0)
        chosen = np.sort(rng.choice(len(coordinates), coords, replace=False))
        coordinates = [coordinates[j] for j in chosen]
    max_error = 0.0
    worst = None
    for i, index in coordinates:
        shifted = [p.copy() for p in params]
        where = 'parameter %d, index %r' % (i, index)
        shifted[i][index] = params[i][index] + h
        plus = _value(f, shifted, where + ', +h')
        shifted[i][index] = params[i][index] - h
        minus = _value(f, shifted, where + ', -h')
        numeric = (plus - minus) / (2 * h)
        a = analytic[i][index]
        error = abs(a - numeric) / max(1.0, abs(a), abs(numeric))
        if worst is None or error > max_error:
            max_error = error
            worst = (i, index)
    return GradCheckReport(
        name or getattr(f, '__name__', 'f'), max_error, max_error < tol,
        worst, len(coordinates))


def _weights(rng, out):
    # Random output weights so that every output coordinate matters
    return out.tape.constant(rng.standard_normal(out.shape))


def _away(rng, shape, gap=1e-3, low=None):
    # Values bounded away from zero (and from each other) so that kinks in
    # relu, abs, sort and similar are never within reach of the step
    while True:
        x = rng.standard_normal(shape)
        if low is not None:
            x = np.abs(x) + low
        flat = np.sort(x.ravel())
        if np.min(np.abs(flat)) >= gap and (
                flat.size < 2 or np.min(np.diff(flat)) >= gap):
            return x


def _shape(rng, ndim=2):
    return tuple(int(n) for n in rng.integers(1, 5, size=ndim))


def _elementwise(method, **kwargs):
    def case(rng):
        x = _away(rng, _shape(rng))
        c = rng.standard_normal(x.shape)

        def f(x):
            out = getattr(x, method)(**kwargs)
            return (out * out.tape.constant(c)).sum()
        return f, [x]
    return case


def _binary(op):
    def case(rng):
        batch, width = _shape(rng)
        a = rng.standard_normal((batch, width))
        b = rng.standard_normal((width,) if rng.random() < 0.5 else (batch, width))
        if rng.random() < 0.5:
            a, b = b, a
        out_shape = a.shape if len(a.shape) >= len(b.shape) else b.shape
        c = rng.standard_normal(out_shape)

        def f(a, b):
            out = a.tape.apply(op, a, b)
            return (out * out.tape.constant(c)).sum()
        return f, [a, b]
    return case


def _case_scale(rng):
    x = rng.standard_normal(_shape(rng))
    factor = float(rng.standard_normal())
    c = rng.standard_normal(x.shape)
    return (lambda x: (x * factor * x.tape.constant(c)).sum()), [x]


def _case_neg(rng):
    x = rng.standard_normal(_shape(rng))
    c = rng.standard_normal(x.shape)
    return (lambda x: (-x * x.tape.constant(c)).sum()), [x]


def _case_matmul(rng):
    n, k, m = (int(v) for v in rng.integers(1, 5, size=3))
    a = rng.standard_normal((n, k))
    b = rng.standard_normal((k, m))
    c = rng.standard_normal((n, m))
    return (lambda a, b: ((a @ b) * a.tape.constant(c)).sum()), [a, b]


def _case_exp(rng):
    x = rng.uniform(-2, 2, _shape(rng))
    c = rng.standard_normal(x.shape)
    return (lambda x: (x.exp() * x.tape.constant(c)).sum()), [x]


def _case_log(rng):
    x = rng.uniform(0.5, 2.0, _shape(rng))
    c = rng.standard_normal(x.shape)
    floor = 1e-12 if rng.random() < 0.5 else None
    return (lambda x: (x.log(floor) * x.tape.constant(c)).sum()), [x]


def _reduction(method):
    def case(rng):
        x = _away(rng, _shape(rng, 3))
        axis = int(rng.integers(0, 3)) if rng.random() < 0.8 else None
        reduced = getattr(np.ones(x.shape), 'sum')(axis=axis)
        c = rng.standard_normal(np.shape(reduced))

        def f(x):
            out = getattr(x, method)(axis=axis)
            return (out * out.tape.constant(c)).sum()
        return f, [x]
    return case


def _case_softmax(rng):
    x = rng.standard_normal(_shape(rng, 3))
    axis = int(rng.integers(0, 3))
    c = rng.standard_normal(x.shape)
    return (lambda x: (x.softmax(axis) * x.tape.constant(c)).sum()), [x]


def _case_smooth_l1(rng):
    while True:
        x = 2 * rng.standard_normal(_shape(rng))
        if np.min(np.abs(np.abs(x) - 1.0)) > 1e-3:
            break
    c = rng.standard_normal(x.shape)
    return (lambda x: (x.smooth_l1() * x.tape.constant(c)).sum()), [x]


def _case_sort(rng):
    x = _away(rng, _shape(rng))
    axis = int(rng.integers(0, 2))
    c = rng.standard_normal(x.shape)
    return (lambda x: (x.sort(axis) * x.tape.constant(c)).sum()), [x]


def _joining(op):
    def case(rng):
        count = int(rng.integers(1, 4))
        shape = _shape(rng)
        axis = int(rng.integers(0, 2))
        xs = [rng.standard_normal(shape) for _ in range(count)]
        outputs = np.stack(xs, axis) if op == 'stack' else np.concatenate(xs, axis)
        c = rng.standard_normal(outputs.shape)

        def f(*xs):
            out = xs[0].tape.apply(op, *xs, axis=axis)
            return (out * out.tape.constant(c)).sum()
        return f, xs
    return case


def _case_take(rng):
    x = rng.standard_normal(_shape(rng, 3))
    index = int(rng.integers(0, x.shape[0]))
    c = rng.standard_normal(x.shape[1:])
    return (lambda x: (x[index] * x.tape.constant(c)).sum()), [x]


def _case_reshape(rng):
    x = rng.standard_normal(_shape(rng))
    c = rng.standard_normal(x.size)
    return (lambda x: (x.reshape(x.size) * x.tape.constant(c)).sum()), [x]


def _case_cls_inconsistency(rng):
    n = int(rng.integers(2, 9))
    classes = int(rng.integers(2, 6))
    shape = (n, classes) if rng.random() < 0.5 else (n, int(rng.integers(1, 4)), classes)
    logits = rng.standard_normal(shape)
    return (lambda x: cls_inconsistency(x.softmax(-1)).sum()), [logits]


def _case_loc_inconsistency(rng):
    m = int(rng.integers(2, 9))
    shape = (m, 4) if rng.random() < 0.5 else (m, int(rng.integers(1, 4)), 4)
    preds = rng.standard_normal(shape)
    return (lambda x: loc_inconsistency(x).sum()), [preds]


def _alt(kind):
    kind = MeasureKind(kind)

    def case(rng):
        batch = int(rng.integers(1, 4))
        if kind in (MeasureKind.L1, MeasureKind.KL):
            logits = rng.standard_normal((2, batch, int(rng.integers(2, 5))))
            return (lambda x: alt_measure(kind, x.softmax(-1))), [logits]
        elif kind == MeasureKind.SWD:
            while True:
                outputs = 3 * rng.standard_normal((2, batch + 1, 4))
                if _swd_separated(outputs):
                    break
            return (lambda x: alt_measure(kind, x)), [outputs]
        else:
            count = int(rng.integers(2, 9))
            outputs = _away(rng, (count, batch, 4))
            return (lambda x: alt_measure(kind, x)), [outputs]
    return case


def _swd_separated(outputs, gap=1e-3):
    directions = swd_projections(outputs.shape[-1])
    for side in outputs:
        projected = np.sort(side @ directions, axis=0)
        if np.min(np.diff(projected, axis=0)) < gap:
            return False
    return True


def _case_task_da(rng):
    s = rng.standard_normal(int(rng.integers(1, 6)))
    t = rng.standard_normal(int(rng.integers(1, 6)))
    task = 'cls' if rng.random() < 0.5 else 'loc'
    return (lambda s, t: task_da_loss(task, s * s, t.exp())), [s, t]


def _case_dann(rng):
    batch = int(rng.integers(1, 6))
    logits = rng.standard_normal((batch, 1))
    domains = rng.integers(0, 2, batch)
    return (lambda x: dann_loss(x.sigmoid(), domains)), [logits]


TINY = ModelConfig(
    dim=3, classes=3, trunk=(8,), aux_classifiers=2, aux_localizers=2,
    discriminator=(4,))


def _tiny(rng, seed):
    model = init_model(TINY, seed)
    x = rng.standard_normal((3, TINY.dim))
    y = rng.integers(0, TINY.classes, 3)
    boxes = rng.uniform(0.1, 0.9, (3, 4))
    return model, Batch(x, y, boxes)


def _bind(model, tape, names, tensors):
    bound = {
        name: tape.constant(value)
        for name, value in model.parameters.items()}
    bound.update(zip(names, tensors))
    return model.bind(tape, bound)


def _case_detection(rng):
    model, batch = _tiny(rng, int(rng.integers(0, 2 ** 31)))
    # The trunk only varies when the detached auxiliary path is left out
    trunk = rng.random() < 0.5
    names = [
        name for name in model.parameters
        if trunk or group_of(name) != 'gen']

    def f(*tensors):
        binding = _bind(model, tensors[0].tape, names, tensors)
        bundle = forward(binding, batch.x, supervised=not trunk)
        return detection_losses(bundle, batch.y, batch.boxes).total()
    return f, [model.parameters[name] for name in names]


def _case_total(rng):
    model, source = _tiny(rng, int(rng.integers(0, 2 ** 31)))
    target = Batch(rng.standard_normal((3, TINY.dim)), None, None)
    config = ExperimentConfig.default().replace(model=TINY, mode='tia_full')
    names = [name for name in model.parameters if group_of(name) != 'gen']

    def f(*tensors):
        binding = _bind(model, tensors[0].tape, names, tensors)
        return objective(config, binding, source, target).total
    return f, [model.parameters[name] for name in names]


CASES = OrderedDict((
    ('add',               _binary('add')),
    ('sub',               _binary('sub')),
    ('mul',               _binary('mul')),
    ('scale',             _case_scale),
    ('neg',               _case_neg),
    ('matmul',            _case_matmul),
    ('relu',              _elementwise('relu')),
    ('exp',               _case_exp),
    ('log',               _case_log),
    ('sigmoid',           _elementwise('sigmoid')),
    ('softmax',           _case_softmax),
    ('sum',               _reduction('sum')),
    ('mean',              _reduction('mean')),
    ('norm',              _reduction('norm')),
    ('abs',               _elementwise('abs')),
    ('smooth_l1',         _case_smooth_l1),
    ('sort',              _case_sort),
    ('stack',             _joining('stack')),
    ('concat',            _joining('concat')),
    ('take',              _case_take),
    ('reshape',           _case_reshape),
    ('cls_inconsistency', _case_cls_inconsistency),
    ('loc_inconsistency', _case_loc_inconsistency),
    ('l1',                _alt('l1')),
    ('kl',                _alt('kl')),
    ('swd',               _alt('swd')),
    ('mad',               _alt('mad')),
    ('variance',          _alt('variance')),
    ('task_da_loss',      _case_task_da),
    ('dann_loss',         _case_dann),
    ('detection_losses',  _case_detection),
    ('total_loss',        _case_total),
    ))


def _grl_contract(rng, instances):
    max_error = 0.0
    worst = None
    for instance in range(instances):
        x = rng.standard_normal(_shape(rng))
        c = rng.standard_normal(x.shape)
        scale = float(rng.uniform(0, 2))
        results = []
        for reverse in (True, False):
            with Tape() as tape:
                v = tape.variable(x)
                y = grl_apply(v, scale) if reverse else v
                loss = (y * y * tape.constant(c)).sum()
                results.append((y.values.copy(), tape.backward(loss)[v]))
        (forward_grl, grad_grl), (forward_plain, grad_plain) = results
        error = float(np.max(np.abs(grad_grl + scale * grad_plain)))
        if not np.array_equal(forward_grl, forward_plain):
            error = math.inf
        if worst is None or error > max_error:
            max_error = error
            worst = (instance, 0, None)
    return GradCheckReport('grl', max_error, max_error <= 1e-12, worst, instances)


def _detach_contract(rng, instances):
    max_error = 0.0
    worst = None
    for instance in range(instances):
        x = rng.standard_normal(_shape(rng))
        w = rng.standard_normal(x.shape)
        c = rng.standard_normal(x.shape)
        with Tape() as tape:
            vx = tape.variable(x)
            vw = tape.variable(w)
            product = vx * vw
            cut = detach(product)
            loss = (cut * tape.constant(c)).sum() + (vx * tape.constant(c)).sum()
            grads = tape.backward(loss)
            error = max(
                float(np.max(np.abs(grads[vw]))),
                float(np.max(np.abs(grads[vx] - c))))
            if not np.array_equal(cut.values, product.values):
                error = math.inf
        if worst is None or error > max_error:
            max_error = error
            worst = (instance, 0, None)
    return GradCheckReport('detach', max_error, max_error == 0.0, worst, instances)


def run_suite(seed=0, instances=100, h=1e-5, tol=1e-4, coords=6):
    """
    Checks every primitive operation and every loss on *instances* random
    instances each (checking up to *coords* coordinates per instance), plus
    the gradient reversal and detach contracts, and returns a list of
    :class:`GradCheckReport`, one per operation or loss.
    """
    rng = np.random.default_rng(seed)
    reports = []
    for name, case in CASES.items():
        max_error = 0.0
        worst = None
        checked = 0
        for instance in range(instances):
            f, params = case(rng)
            report = grad_check(f, params, h, tol, coords, rng, name)
            checked += report.checked
            if worst is None or report.max_error > max_error:
                max_error = report.max_error
                worst = (instance,) + tuple(report.worst or (None, None))
        reports.append(GradCheckReport(
            name, max_error, max_error < tol, worst, checked))
        logger.info('%s', reports[-1])
    for contract in (_grl_contract, _detach_contract):
        reports.append(contract(rng, instances))
        logger.info('%s', reports[-1])
    return reports
