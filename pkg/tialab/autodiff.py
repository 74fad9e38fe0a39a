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
The autodiff module implements a minimal reverse-mode automatic
differentiation engine over dense arrays of 64-bit floats. A :class:`Tape` is
built afresh for every evaluation (define-by-run); each operation applied to a
:class:`Tensor` appends one record to the tape, and :meth:`Tape.backward`
visits those records in exact reverse order to accumulate gradients.

Besides the usual arithmetic, the module provides the two non-standard
primitives that inconsistency alignment relies upon: :func:`grl_apply` (the
gradient reversal layer) and :func:`detach`.

.. note::

    All items in this module are available from the :mod:`tialab` namespace
    without having to import :mod:`tialab.autodiff` directly.

The following items are defined in the module:


Tape
====

.. autoclass:: Tape
    :members:


Tensor
======

.. autoclass:: Tensor
    :members:


Gradients
=========

.. autoclass:: Gradients
    :members:


Op
==

.. autoclass:: Op


Functions
=========

.. autofunction:: primitive_forward

.. autofunction:: grl_apply

.. autofunction:: detach

.. autofunction:: backward
"""

import logging
import math
from collections import namedtuple
from collections.abc import Mapping

import numpy as np

from .exc import ShapeError, NonFiniteError, TapeError

logger = logging.getLogger('tialab')


class Op(namedtuple('Op', ('kind', 'forward', 'backward'))):
    """
    Describes a primitive operation. The *forward* callable receives the input
    arrays (followed by any keyword parameters) and returns a tuple of the
    output array and a cache object. The *backward* callable receives the
    upstream gradient, the input arrays, the output array, the cache and the
    same keyword parameters, and returns one gradient (or ``None`` for "no
    contribution") per input.
    """

    __slots__ = ()


Record = namedtuple('Record', (
    'op', 'inputs', 'args', 'output', 'value', 'cache', 'params'))


def _broadcastable(a, b):
    # Only leading dimensions broadcast: the smaller operand's shape must be
    # the trailing part of the larger operand's shape
    if a.ndim < b.ndim:
        a, b = b, a
    return b.ndim == 0 or a.shape[a.ndim - b.ndim:] == b.shape


def _unbroadcast(g, shape):
    if g.shape == shape:
        return g
    if len(shape) == 0:
        return np.asarray(g.sum())
    return g.reshape((-1,) + tuple(shape)).sum(axis=0)


def _check_broadcast(kind, a, b):
    if not _broadcastable(a, b):
        raise ShapeError('%s: incompatible shapes %r and %r' % (
            kind, a.shape, b.shape))


def _add_forward(a, b):
    _check_broadcast('add', a, b)
    return a + b, None

def _add_backward(g, a, b, out, cache):
    return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)

def _sub_forward(a, b):
    _check_broadcast('sub', a, b)
    return a - b, None

def _sub_backward(g, a, b, out, cache):
    return _unbroadcast(g, a.shape), -_unbroadcast(g, b.shape)

def _mul_forward(a, b):
    _check_broadcast('mul', a, b)
    return a * b, None

def _mul_backward(g, a, b, out, cache):
    return _unbroadcast(g * b, a.shape), _unbroadcast(g * a, b.shape)

def _scale_forward(a, factor):
    return a * factor, None

def _scale_backward(g, a, out, cache, factor):
    return (g * factor,)

def _neg_forward(a):
    return -a, None

def _neg_backward(g, a, out, cache):
    return (-g,)

def _matmul_forward(a, b):
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError('matmul: incompatible shapes %r and %r' % (
            a.shape, b.shape))
    return a @ b, None

def _matmul_backward(g, a, b, out, cache):
    return g @ b.T, a.T @ g

def _relu_forward(a):
    return np.maximum(a, 0.0), None

def _relu_backward(g, a, out, cache):
    return (g * (a > 0.0),)

def _exp_forward(a):
    return np.exp(a), None

def _exp_backward(g, a, out, cache):
    return (g * out,)

def _log_forward(a, floor=None):
    if floor is not None:
        a = np.maximum(a, floor)
    with np.errstate(divide='ignore', invalid='ignore'):
        return np.log(a), None

def _log_backward(g, a, out, cache, floor=None):
    if floor is None:
        return (g / a,)
    mask = a > floor
    return (np.where(mask, g / np.where(mask, a, 1.0), 0.0),)

def _sigmoid_forward(a):
    return 0.5 * (1.0 + np.tanh(0.5 * a)), None

def _sigmoid_backward(g, a, out, cache):
    return (g * out * (1.0 - out),)

def _softmax_forward(a, axis=-1):
    e = np.exp(a - a.max(axis=axis, keepdims=True))
    return e / e.sum(axis=axis, keepdims=True), None

def _softmax_backward(g, a, out, cache, axis=-1):
    return (out * (g - (g * out).sum(axis=axis, keepdims=True)),)

def _expand(g, shape, axis):
    if axis is not None:
        g = np.expand_dims(g, axis)
    return np.broadcast_to(g, shape)

def _sum_forward(a, axis=None):
    return np.asarray(a.sum(axis=axis)), None

def _sum_backward(g, a, out, cache, axis=None):
    return (_expand(g, a.shape, axis),)

def _mean_forward(a, axis=None):
    return np.asarray(a.mean(axis=axis)), None

def _mean_backward(g, a, out, cache, axis=None):
    count = a.size if axis is None else a.shape[axis]
    return (_expand(g, a.shape, axis) / count,)

def _norm_forward(a, axis=None):
    return np.asarray(np.sqrt((a * a).sum(axis=axis))), None

def _norm_backward(g, a, out, cache, axis=None):
    # Zero subgradient where the norm vanishes
    n = _expand(out, a.shape, axis)
    safe = np.where(n > 0.0, n, 1.0)
    return (np.where(n > 0.0, _expand(g, a.shape, axis) * a / safe, 0.0),)

def _abs_forward(a):
    return np.abs(a), None

def _abs_backward(g, a, out, cache):
    return (g * np.sign(a),)

def _smooth_l1_forward(a, beta=1.0):
    d = np.abs(a)
    return np.where(d < beta, 0.5 * a * a / beta, d - 0.5 * beta), None

def _smooth_l1_backward(g, a, out, cache, beta=1.0):
    return (g * np.clip(a / beta, -1.0, 1.0),)

def _sort_forward(a, axis=0):
    order = np.argsort(a, axis=axis, kind='stable')
    return np.take_along_axis(a, order, axis=axis), order

def _sort_backward(g, a, out, cache, axis=0):
    result = np.zeros_like(a)
    np.put_along_axis(result, cache, g, axis=axis)
    return (result,)

def _stack_forward(*arrays, axis=0):
    shapes = {a.shape for a in arrays}
    if len(shapes) != 1:
        raise ShapeError('stack: incompatible shapes %s' % ' and '.join(
            repr(a.shape) for a in arrays))
    return np.stack(arrays, axis=axis), None

def _stack_backward(g, *args, axis=0):
    arrays = args[:-2]
    return tuple(np.take(g, i, axis=axis) for i in range(len(arrays)))

def _concat_forward(*arrays, axis=0):
    try:
        return np.concatenate(arrays, axis=axis), None
    except ValueError:
        raise ShapeError('concat: incompatible shapes %s' % ' and '.join(
            repr(a.shape) for a in arrays))

def _concat_backward(g, *args, axis=0):
    arrays = args[:-2]
    bounds = np.cumsum([a.shape[axis] for a in arrays])[:-1]
    return tuple(np.split(g, bounds, axis=axis))

def _take_forward(a, index=0, axis=0):
    return np.take(a, index, axis=axis), None

def _take_backward(g, a, out, cache, index=0, axis=0):
    result = np.zeros_like(a)
    slices = [slice(None)] * a.ndim
    slices[axis] = index
    result[tuple(slices)] = g
    return (result,)

def _reshape_forward(a, shape=()):
    try:
        return a.reshape(shape), None
    except ValueError:
        raise ShapeError('reshape: cannot reshape %r to %r' % (a.shape, shape))

def _reshape_backward(g, a, out, cache, shape=()):
    return (g.reshape(a.shape),)

def _grl_forward(a, scale=1.0):
    return a, None

def _grl_backward(g, a, out, cache, scale=1.0):
    return (-scale * g,)

def _detach_forward(a):
    return a, None

def _detach_backward(g, a, out, cache):
    return (None,)


OPS = {op.kind: op for op in (
    Op('add',       _add_forward,       _add_backward),
    Op('sub',       _sub_forward,       _sub_backward),
    Op('mul',       _mul_forward,       _mul_backward),
    Op('scale',     _scale_forward,     _scale_backward),
    Op('neg',       _neg_forward,       _neg_backward),
    Op('matmul',    _matmul_forward,    _matmul_backward),
    Op('relu',      _relu_forward,      _relu_backward),
    Op('exp',       _exp_forward,       _exp_backward),
    Op('log',       _log_forward,       _log_backward),
    Op('sigmoid',   _sigmoid_forward,   _sigmoid_backward),
    Op('softmax',   _softmax_forward,   _softmax_backward),
    Op('sum',       _sum_forward,       _sum_backward),
    Op('mean',      _mean_forward,      _mean_backward),
    Op('norm',      _norm_forward,      _norm_backward),
    Op('abs',       _abs_forward,       _abs_backward),
    Op('smooth_l1', _smooth_l1_forward, _smooth_l1_backward),
    Op('sort',      _sort_forward,      _sort_backward),
    Op('stack',     _stack_forward,     _stack_backward),
    Op('concat',    _concat_forward,    _concat_backward),
    Op('take',      _take_forward,      _take_backward),
    Op('reshape',   _reshape_forward,   _reshape_backward),
    Op('grl',       _grl_forward,       _grl_backward),
    Op('detach',    _detach_forward,    _detach_backward),
    )}


class Tensor(object):
    """
    Represents an array of 64-bit floats recorded on a :class:`Tape`.

    Users never construct tensors directly; they are obtained from
    :meth:`Tape.variable` and :meth:`Tape.constant`, and from applying
    operations to other tensors. The usual arithmetic operators are supported
    (``+``, ``-``, ``*``, unary ``-`` and ``@`` for matrix multiplication);
    the other operations are available as methods::

        >>> tape = Tape()
        >>> x = tape.variable([[1.0, 2.0]])
        >>> w = tape.variable([[3.0], [4.0]])
        >>> (x @ w).values
        array([[11.]])

    Operands of ``+``, ``-`` and ``*`` must either share a shape or the
    smaller operand's shape must match the trailing dimensions of the larger
    (broadcasting over leading batch dimensions only). Python numbers are
    accepted in place of either operand.
    """

    __slots__ = ('_tape', '_node', '_values')
    __array_ufunc__ = None

    def __init__(self, tape, node, values):
        self._tape = tape
        self._node = node
        self._values = values

    def __repr__(self):
        return '<Tensor node=%d shape=%r>' % (self._node, self.shape)

    @property
    def tape(self):
        "The :class:`Tape` this tensor is recorded upon."
        return self._tape

    @property
    def node(self):
        "The integer node identifier of this tensor on its :attr:`tape`."
        return self._node

    @property
    def values(self):
        """
        The (read-only) :class:`numpy.ndarray` of values held by the tensor.
        """
        return self._values

    @property
    def shape(self):
        "The shape of the tensor as a tuple of dimension sizes."
        return self._values.shape

    @property
    def size(self):
        "The total number of values held by the tensor."
        return self._values.size

    def __float__(self):
        if self.size != 1:
            raise TypeError('only single-valued tensors convert to float')
        return float(self._values.reshape(()))

    def _lift(self, other):
        if isinstance(other, Tensor):
            return other
        return self._tape.constant(other)

    def __add__(self, other):
        return self._tape.apply('add', self, self._lift(other))

    def __radd__(self, other):
        return self._tape.apply('add', self._lift(other), self)

    def __sub__(self, other):
        return self._tape.apply('sub', self, self._lift(other))

    def __rsub__(self, other):
        return self._tape.apply('sub', self._lift(other), self)

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            return self._tape.apply('scale', self, factor=float(other))
        return self._tape.apply('mul', self, self._lift(other))

    def __rmul__(self, other):
        if isinstance(other, (int, float)):
            return self._tape.apply('scale', self, factor=float(other))
        return self._tape.apply('mul', self._lift(other), self)

    def __truediv__(self, other):
        if not isinstance(other, (int, float)):
            raise TypeError('tensors may only be divided by numbers')
        return self._tape.apply('scale', self, factor=1.0 / other)

    def __neg__(self):
        return self._tape.apply('neg', self)

    def __matmul__(self, other):
        return self._tape.apply('matmul', self, self._lift(other))

    def __getitem__(self, index):
        "Integer indexing selects a single slice along the first axis."
        if not isinstance(index, (int, np.integer)):
            raise TypeError('tensors may only be indexed by integers')
        if not -self.shape[0] <= index < self.shape[0]:
            raise IndexError('index %d out of range' % index)
        return self._tape.apply('take', self, index=int(index), axis=0)

    def relu(self):
        return self._tape.apply('relu', self)

    def exp(self):
        return self._tape.apply('exp', self)

    def log(self, floor=None):
        """
        Natural logarithm. If *floor* is given, values are clamped below at
        *floor* before evaluation (and receive no gradient where clamped).
        """
        if floor is None:
            return self._tape.apply('log', self)
        return self._tape.apply('log', self, floor=floor)

    def sigmoid(self):
        return self._tape.apply('sigmoid', self)

    def softmax(self, axis=-1):
        return self._tape.apply('softmax', self, axis=axis)

    def sum(self, axis=None):
        return self._tape.apply('sum', self, axis=axis)

    def mean(self, axis=None):
        return self._tape.apply('mean', self, axis=axis)

    def norm(self, axis=None):
        "L2-norm along *axis* (a zero subgradient is used at the origin)."
        return self._tape.apply('norm', self, axis=axis)

    def abs(self):
        return self._tape.apply('abs', self)

    def smooth_l1(self, beta=1.0):
        return self._tape.apply('smooth_l1', self, beta=beta)

    def sort(self, axis=0):
        return self._tape.apply('sort', self, axis=axis)

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], tuple):
            shape = shape[0]
        return self._tape.apply('reshape', self, shape=tuple(shape))

    def grl(self, scale=1.0):
        return grl_apply(self, scale)

    def detach(self):
        return detach(self)


class Gradients(Mapping):
    """
    The result of :meth:`Tape.backward`: a mapping of node identifiers to
    gradient arrays. It may be indexed with a node identifier or with the
    :class:`Tensor` itself. Nodes which the backward pass never reached map
    to arrays of zeros.
    """

    def __init__(self, shapes, grads):
        self._shapes = shapes
        self._grads = grads

    def __repr__(self):
        return '<Gradients %d nodes>' % len(self)

    def __len__(self):
        return len(self._shapes)

    def __iter__(self):
        return iter(range(len(self._shapes)))

    def __getitem__(self, key):
        if isinstance(key, Tensor):
            key = key.node
        try:
            shape = self._shapes[key]
        except (IndexError, TypeError):
            raise KeyError(key)
        try:
            return np.array(self._grads[key])
        except KeyError:
            return np.zeros(shape)

    def reached(self, key):
        "Returns ``True`` if the backward pass reached the node *key*."
        if isinstance(key, Tensor):
            key = key.node
        return key in self._grads


class Tape(object):
    """
    Records operations on :class:`Tensor` objects so that gradients can be
    computed by reverse-mode accumulation.

    A tape is intended to be short-lived: build one per evaluation, register
    the parameters with :meth:`variable`, compute a scalar loss, then call
    :meth:`backward`. The tape may be used as a context manager in which case
    it is closed (and its records released) on exit::

        >>> with Tape() as tape:
        ...     x = tape.variable([1.0, 2.0])
        ...     grads = tape.backward((x * x).sum())
        ...
        >>> grads[x]
        array([2., 4.])

    A tape is confined to a single thread; separate tapes share no state.
    """

    def __init__(self):
        self._records = []
        self._shapes = []
        self._closed = False

    def __repr__(self):
        return '<Tape nodes=%d records=%d>' % (
            len(self._shapes), len(self._records))

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc_value, exc_tb):
        self.close()

    def __len__(self):
        return len(self._records)

    @property
    def records(self):
        "The sequence of operations recorded so far, in recording order."
        return tuple(self._records)

    def close(self):
        """
        Closes the tape, releasing all recorded data. Any further use of the
        tape raises :exc:`~tialab.exc.TapeError`.
        """
        self._records = []
        self._closed = True

    def _check_open(self):
        if self._closed:
            raise TapeError('tape is closed')

    def _new_node(self, values):
        values.setflags(write=False)
        self._shapes.append(values.shape)
        return Tensor(self, len(self._shapes) - 1, values)

    def variable(self, values):
        """
        Registers *values* (anything :func:`numpy.asarray` accepts) as a leaf
        tensor whose gradient is of interest. The values are copied.
        """
        self._check_open()
        values = np.array(values, dtype=np.float64)
        if not np.all(np.isfinite(values)):
            raise NonFiniteError('variable: non-finite values')
        return self._new_node(values)

    # Constants are ordinary leaves
    constant = variable

    def apply(self, op, *inputs, **params):
        """
        Applies the primitive *op* (an op-kind name or an :class:`Op`
        instance) to the *inputs* tensors with the given keyword *params*,
        records the operation, and returns the output tensor.
        """
        self._check_open()
        if not isinstance(op, Op):
            try:
                op = OPS[op]
            except KeyError:
                raise TapeError('unknown op kind %r' % op)
        for t in inputs:
            if not isinstance(t, Tensor):
                raise TypeError('%s: inputs must be tensors' % op.kind)
            if t.tape is not self:
                raise TapeError('%s: input recorded on another tape' % op.kind)
        args = tuple(t.values for t in inputs)
        value, cache = op.forward(*args, **params)
        value = np.array(value, dtype=np.float64)
        if not np.all(np.isfinite(value)):
            raise NonFiniteError('%s produced non-finite values' % op.kind)
        result = self._new_node(value)
        self._records.append(Record(
            op, tuple(t.node for t in inputs), args, result.node, value,
            cache, params))
        return result

    def backward(self, loss):
        """
        Computes the gradient of the scalar *loss* tensor with respect to
        every node on the tape. The seed gradient at *loss* is 1.0 and records
        are visited in exact reverse recording order. Returns a
        :class:`Gradients` mapping.
        """
        self._check_open()
        if loss.tape is not self:
            raise TapeError('loss recorded on another tape')
        if loss.size != 1:
            raise TapeError(
                'backward requires a scalar loss; got shape %r' % (loss.shape,))
        grads = {loss.node: np.ones(loss.shape)}
        for record in reversed(self._records):
            g = grads.get(record.output)
            if g is None:
                continue
            contributions = record.op.backward(
                g, *(record.args + (record.value, record.cache)),
                **record.params)
            for node, contribution in zip(record.inputs, contributions):
                if contribution is None:
                    continue
                if node in grads:
                    grads[node] = grads[node] + contribution
                else:
                    grads[node] = contribution
        logger.debug('backward over %d records', len(self._records))
        return Gradients(list(self._shapes), grads)


def primitive_forward(kind, *inputs, **params):
    """
    Applies the primitive operation named *kind* to the *inputs* tensors
    (which must share a tape) and returns the output tensor.
    """
    if not inputs:
        raise TypeError('%s: at least one input is required' % kind)
    return inputs[0].tape.apply(kind, *inputs, **params)


def grl_apply(x, grl_scale=1.0):
    """
    Gradient reversal layer. The result is identical to *x* in the forward
    pass; during the backward pass the upstream gradient is multiplied by
    ``-grl_scale`` before flowing to *x*.
    """
    if not math.isfinite(grl_scale):
        raise ValueError('grl_scale must be finite')
    if grl_scale < 0:
        raise ValueError(
            'grl_scale must not be negative; the reversal supplies the sign')
    return x.tape.apply('grl', x, scale=float(grl_scale))


def detach(x):
    """
    Returns a tensor identical to *x* in the forward pass through which no
    gradient flows back to *x*.
    """
    return x.tape.apply('detach', x)


def backward(loss):
    "Equivalent to ``loss.tape.backward(loss)``."
    return loss.tape.backward(loss)
