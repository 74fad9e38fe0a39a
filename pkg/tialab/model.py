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
The model module defines the detection-surrogate network: a shared trunk of
fully-connected layers, a primary classifier and localizer, banks of
auxiliary classifiers and localizers, and a binary domain discriminator.

Every parameter belongs to exactly one of six groups, identified by the
prefix of its name:

================ ==========================================================
Group            Parameters
================ ==========================================================
``gen``          the trunk (``gen.0.w``, ``gen.0.b``, ...)
``cls_primary``  the primary classifier
``loc_primary``  the primary localizer
``cls_aux``      the auxiliary classifiers (``cls_aux.0.w``, ...)
``loc_aux``      the auxiliary localizers
``disc``         the domain discriminator(s)
================ ==========================================================

The partition determines how gradients flow: the auxiliary heads are
evaluated twice, once on detached trunk features (their supervised path) and
once on gradient-reversed features (their adversarial path), and the
discriminator always reads gradient-reversed features.

.. note::

    All items in this module are available from the :mod:`tialab` namespace
    without having to import :mod:`tialab.model` directly.

The following items are defined in the module:


ModelConfig
===========

.. autoclass:: ModelConfig
    :members:


Model
=====

.. autoclass:: Model
    :members:


Binding
=======

.. autoclass:: Binding
    :members:


ForwardBundle
=============

.. autoclass:: ForwardBundle


Functions
=========

.. autofunction:: init_model

.. autofunction:: forward

.. autofunction:: serialize_model

.. autofunction:: load_model
"""

import io
import json
import math
import logging
from collections import namedtuple, OrderedDict

import numpy as np

from .exc import ConfigError, ShapeError, NonFiniteError, ModelFormatError
from .autodiff import Tape, Tensor, grl_apply, detach

logger = logging.getLogger('tialab')

FORMAT_VERSION = 1

GROUPS = ('gen', 'cls_primary', 'loc_primary', 'cls_aux', 'loc_aux', 'disc')

# Stream identifiers for parameter initialization; one per module so that
# adding or removing heads leaves every other module's weights unchanged
_STREAMS = {
    'gen':         0,
    'cls_primary': 1,
    'loc_primary': 2,
    'cls_aux':     3,
    'loc_aux':     4,
    'disc':        5,
    'disc.cls':    6,
    'disc.loc':    7,
    'gen.cls_fc':  8,
    'gen.loc_fc':  9,
    }


class ModelConfig(namedtuple('ModelConfig', (
        'dim', 'classes', 'trunk', 'aux_classifiers', 'aux_localizers',
        'discriminator', 'split_fc'))):
    """
    Describes the shape of a :class:`Model`.

    .. attribute:: dim

        The input feature dimension *d*.

    .. attribute:: classes

        The number of classes *C*.

    .. attribute:: trunk

        A tuple of hidden layer widths for the trunk (each layer is linear
        followed by relu). The last width is the feature dimension and must
        be at least 8.

    .. attribute:: aux_classifiers

        The number *N* of auxiliary classifiers (0 disables the bank).

    .. attribute:: aux_localizers

        The number *M* of auxiliary localizers (0 disables the bank).

    .. attribute:: discriminator

        A tuple of hidden layer widths for the domain discriminator.

    .. attribute:: split_fc

        If ``True``, the last trunk layer is duplicated into a
        classification layer (feeding the classifiers) and a localization
        layer (feeding the localizers), each of which has its own
        discriminator besides the one reading the shared features.
    """

    __slots__ = ()

    def __new__(cls, dim, classes, trunk=(64, 64), aux_classifiers=8,
                aux_localizers=4, discriminator=(32,), split_fc=False):
        try:
            dim = int(dim)
            classes = int(classes)
            trunk = tuple(int(w) for w in trunk)
            discriminator = tuple(int(w) for w in discriminator)
            aux_classifiers = int(aux_classifiers)
            aux_localizers = int(aux_localizers)
        except (TypeError, ValueError) as exc:
            raise ConfigError('invalid model config: %s' % exc)
        split_fc = bool(split_fc)
        if dim < 1:
            raise ConfigError('input dimension must be positive')
        if classes < 2:
            raise ConfigError('at least 2 classes are required')
        if not trunk:
            raise ConfigError('the trunk requires at least one layer')
        if min(trunk + discriminator) < 1:
            raise ConfigError('layer widths must be positive')
        if trunk[-1] < 8:
            raise ConfigError('the trunk output must have at least 8 features')
        if aux_classifiers < 0 or aux_localizers < 0:
            raise ConfigError('auxiliary head counts must not be negative')
        if split_fc and len(trunk) < 2:
            raise ConfigError('split_fc requires at least two trunk layers')
        return super(ModelConfig, cls).__new__(
            cls, dim, classes, trunk, aux_classifiers, aux_localizers,
            discriminator, split_fc)

    @classmethod
    def from_json(cls, obj):
        "Constructs a configuration from a JSON-compatible :class:`dict`."
        try:
            return cls(**obj)
        except TypeError as exc:
            raise ConfigError('invalid model config: %s' % exc)

    def replace(self, **kwargs):
        """
        Returns a copy of the configuration with the given fields replaced.
        Unlike :meth:`_replace` the result is validated.
        """
        return ModelConfig(**dict(self._asdict(), **kwargs))

    def as_json(self):
        "Returns the configuration as a JSON-compatible :class:`dict`."
        result = self._asdict()
        result['trunk'] = list(self.trunk)
        result['discriminator'] = list(self.discriminator)
        return dict(result)

    @property
    def features(self):
        "The width of the features read by the heads."
        return self.trunk[-1]

    def shapes(self):
        """
        Returns an ordered mapping of parameter names to their shapes. The
        order is the canonical order of parameters in the model.
        """
        result = OrderedDict()

        def linear(prefix, fan_in, fan_out):
            result[prefix + '.w'] = (fan_in, fan_out)
            result[prefix + '.b'] = (fan_out,)

        def mlp(prefix, fan_in, widths, out):
            for i, width in enumerate(widths):
                linear('%s.%d' % (prefix, i), fan_in, width)
                fan_in = width
            linear('%s.%d' % (prefix, len(widths)), fan_in, out)

        shared = self.trunk[:-1] if self.split_fc else self.trunk
        fan_in = self.dim
        for i, width in enumerate(shared):
            linear('gen.%d' % i, fan_in, width)
            fan_in = width
        if self.split_fc:
            linear('gen.cls_fc', fan_in, self.features)
            linear('gen.loc_fc', fan_in, self.features)
        linear('cls_primary', self.features, self.classes)
        linear('loc_primary', self.features, 4)
        for i in range(self.aux_classifiers):
            linear('cls_aux.%d' % i, self.features, self.classes)
        for i in range(self.aux_localizers):
            linear('loc_aux.%d' % i, self.features, 4)
        mlp('disc', fan_in, self.discriminator, 1)
        if self.split_fc:
            mlp('disc.cls', self.features, self.discriminator, 1)
            mlp('disc.loc', self.features, self.discriminator, 1)
        return result


def _stream(name):
    # "cls_aux.3.w" -> ("cls_aux", 3); "disc.cls.1.b" -> ("disc.cls", 1);
    # "gen.cls_fc.w" -> ("gen.cls_fc", 0)
    parts = name.split('.')[:-1]
    if parts[-1].isdigit():
        return '.'.join(parts[:-1]), int(parts[-1])
    return '.'.join(parts), 0


def group_of(name):
    "Returns the parameter group that the parameter *name* belongs to."
    group = name.split('.', 1)[0]
    if group not in GROUPS:
        raise ValueError('unknown parameter group in %r' % name)
    return group


def init_model(config, seed):
    """
    Returns a new :class:`Model` for *config* with weights drawn uniformly
    from :math:`\\pm\\sqrt{3/\\text{fan-in}}` and zero biases.

    Every layer and every auxiliary head draws from its own random stream,
    derived from *seed* and the layer's position, so auxiliary heads start
    out different from one another and the weights of one module never
    depend on how many heads another module has.
    """
    if not isinstance(config, ModelConfig):
        raise ConfigError('config must be a ModelConfig')
    params = OrderedDict()
    for name, shape in config.shapes().items():
        if name.endswith('.b'):
            params[name] = np.zeros(shape)
        else:
            stream, index = _stream(name)
            rng = np.random.default_rng([seed, _STREAMS[stream], index])
            limit = math.sqrt(3.0 / shape[0])
            params[name] = rng.uniform(-limit, limit, shape)
    return Model(config, params)


class Model(object):
    """
    Holds a :class:`ModelConfig` and the parameter arrays it implies.
    Instances are immutable; training produces new instances through
    :meth:`replace_parameters`.

    Models are constructed with :func:`init_model` or :func:`load_model`.
    """

    def __init__(self, config, params):
        shapes = config.shapes()
        if set(params) != set(shapes):
            missing = sorted(set(shapes) - set(params))
            extra = sorted(set(params) - set(shapes))
            raise ShapeError(
                'parameters do not match the configuration (missing: %s; '
                'unexpected: %s)' % (', '.join(missing) or 'none',
                                     ', '.join(extra) or 'none'))
        self._config = config
        self._params = OrderedDict()
        for name, shape in shapes.items():
            value = np.array(params[name], dtype=np.float64)
            if value.shape != shape:
                raise ShapeError('%s must have shape %r; got %r' % (
                    name, shape, value.shape))
            if not np.all(np.isfinite(value)):
                raise NonFiniteError('%s holds non-finite values' % name)
            value.setflags(write=False)
            self._params[name] = value

    def __repr__(self):
        return '<Model dim=%d classes=%d N=%d M=%d>' % (
            self._config.dim, self._config.classes,
            self._config.aux_classifiers, self._config.aux_localizers)

    def __eq__(self, other):
        return (
            isinstance(other, Model) and
            self._config == other._config and
            all(np.array_equal(a, other._params[name])
                for name, a in self._params.items()))

    def __ne__(self, other):
        return not self.__eq__(other)

    __hash__ = None

    @property
    def config(self):
        "The :class:`ModelConfig` of the model."
        return self._config

    @property
    def parameters(self):
        """
        An ordered mapping of parameter names to (read-only) arrays.
        """
        return self._params.copy()

    def group(self, group):
        "Returns the names of the parameters in *group*."
        if group not in GROUPS:
            raise ValueError('unknown parameter group %r' % group)
        return [name for name in self._params if group_of(name) == group]

    def replace_parameters(self, params):
        """
        Returns a new model with the same configuration whose parameters are
        taken from the mapping *params*; parameters not named in *params*
        are retained.
        """
        new = self._params.copy()
        for name, value in params.items():
            if name not in new:
                raise KeyError(name)
            new[name] = value
        return Model(self._config, new)

    def bind(self, tape, tensors=None):
        """
        Registers the parameters on *tape* as variables and returns the
        resulting :class:`Binding`. If *tensors* is given it must map every
        parameter name to an existing tensor on *tape*, which is used in
        place of a fresh variable.
        """
        if tensors is None:
            tensors = {
                name: tape.variable(value)
                for name, value in self._params.items()}
        return Binding(self, tape, tensors)

    def predict(self, x):
        """
        Evaluates the primary heads on the feature matrix *x* and returns a
        tuple of class probabilities (*n* x *C*) and boxes (*n* x 4) as
        arrays.
        """
        with Tape() as tape:
            bundle = forward(self.bind(tape), x, supervised=False)
            return (
                np.array(bundle.cls_probs.values),
                np.array(bundle.boxes.values))


class Binding(object):
    """
    The parameters of a :class:`Model` registered on a
    :class:`~tialab.autodiff.Tape`. Indexing the binding by parameter name
    returns the corresponding :class:`~tialab.autodiff.Tensor`.
    """

    def __init__(self, model, tape, tensors):
        missing = set(model.parameters) - set(tensors)
        if missing:
            raise KeyError('binding lacks %s' % ', '.join(sorted(missing)))
        for tensor in tensors.values():
            if tensor.tape is not tape:
                raise ValueError('bound tensors must be recorded on the tape')
        self._model = model
        self._tape = tape
        self._tensors = dict(tensors)

    def __getitem__(self, name):
        return self._tensors[name]

    @property
    def model(self):
        return self._model

    @property
    def tape(self):
        return self._tape

    @property
    def config(self):
        return self._model.config

    def gradients(self, grads):
        """
        Given the :class:`~tialab.autodiff.Gradients` from a backward pass
        over the binding's tape, returns an ordered mapping of parameter
        names to gradient arrays.
        """
        return OrderedDict(
            (name, grads[self._tensors[name]])
            for name in self._model.parameters)


ForwardBundle = namedtuple('ForwardBundle', (
    'features', 'cls_features', 'loc_features', 'cls_probs', 'boxes',
    'aux_cls_supervised', 'aux_cls_adversarial',
    'aux_loc_supervised', 'aux_loc_adversarial',
    'disc', 'disc_cls', 'disc_loc'))
ForwardBundle.__doc__ = """
The outputs of :func:`forward`, as :class:`~tialab.autodiff.Tensor`
instances (or ``None`` where a path was not requested or is not present):

* *features* -- trunk output (*B* x features); with ``split_fc`` this is the
  shared layer feeding the duplicated layers
* *cls_features*, *loc_features* -- the features read by the classifiers and
  localizers respectively (both equal *features* unless ``split_fc``)
* *cls_probs* -- primary class probabilities (*B* x *C*)
* *boxes* -- primary boxes (*B* x 4)
* *aux_cls_supervised*, *aux_cls_adversarial* -- auxiliary class
  probabilities via detached and via gradient-reversed features (*N* x *B* x
  *C*)
* *aux_loc_supervised*, *aux_loc_adversarial* -- auxiliary boxes via detached
  and via gradient-reversed features (*M* x *B* x 4)
* *disc* -- discriminator probability of the target domain (*B* x 1)
* *disc_cls*, *disc_loc* -- the task-specific discriminators (``split_fc``
  only)
"""


def _guard(layer, fn, *args):
    try:
        return fn(*args)
    except NonFiniteError as exc:
        raise NonFiniteError('layer %s: %s' % (layer, exc))


def _linear(binding, prefix, x):
    return _guard(
        prefix, lambda: x @ binding[prefix + '.w'] + binding[prefix + '.b'])


def _relu(binding, prefix, x):
    return _guard(
        prefix,
        lambda: (x @ binding[prefix + '.w'] + binding[prefix + '.b']).relu())


def _discriminator(binding, prefix, x):
    widths = binding.config.discriminator
    for i in range(len(widths)):
        x = _relu(binding, '%s.%d' % (prefix, i), x)
    out = _linear(binding, '%s.%d' % (prefix, len(widths)), x)
    return _guard(prefix, out.sigmoid)


def _bank(binding, prefix, count, x, softmax):
    if count == 0:
        return None
    outputs = []
    for i in range(count):
        layer = '%s.%d' % (prefix, i)
        out = _linear(binding, layer, x)
        if softmax:
            out = _guard(layer, out.softmax, -1)
        outputs.append(out)
    return binding.tape.apply('stack', *outputs, axis=0)


def _reverse(x, grl_scale):
    if grl_scale is None:
        return x
    return grl_apply(x, grl_scale)


def forward(model, x, supervised=True, adversarial=False, discriminator=False,
            grl_scale=1.0):
    """
    Evaluates *model* (a :class:`Model` or a :class:`Binding`) on the feature
    batch *x* (an array or a :class:`~tialab.autodiff.Tensor` of shape *B* x
    *d*) and returns a :class:`ForwardBundle`.

    The trunk and primary heads are always evaluated. The remaining paths are
    requested by flags:

    * *supervised* -- auxiliary heads on ``detach(features)``
    * *adversarial* -- auxiliary heads on ``grl_apply(features, grl_scale)``
    * *discriminator* -- discriminator(s) on ``grl_apply(features,
      grl_scale)``

    The auxiliary heads share their weights between both paths, hence both
    paths produce identical values and differ only in the gradients they
    send to the trunk. If *grl_scale* is ``None`` the reversal is omitted and
    the adversarial paths read the features directly; this exists to verify
    gradients against finite differences.
    """
    if isinstance(model, Model):
        model = model.bind(Tape())
    binding = model
    config = binding.config
    tape = binding.tape
    if not isinstance(x, Tensor):
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != config.dim or x.shape[0] < 1:
            raise ShapeError('forward: expected a batch of width %d; got %r' % (
                config.dim, x.shape))
        x = tape.constant(x)
    elif len(x.shape) != 2 or x.shape[1] != config.dim:
        raise ShapeError('forward: expected a batch of width %d; got %r' % (
            config.dim, x.shape))

    shared = config.trunk[:-1] if config.split_fc else config.trunk
    h = x
    for i in range(len(shared)):
        h = _relu(binding, 'gen.%d' % i, h)
    features = h
    if config.split_fc:
        cls_features = _relu(binding, 'gen.cls_fc', features)
        loc_features = _relu(binding, 'gen.loc_fc', features)
    else:
        cls_features = loc_features = features

    cls_probs = _guard(
        'cls_primary', _linear(binding, 'cls_primary', cls_features).softmax, -1)
    boxes = _linear(binding, 'loc_primary', loc_features)

    aux_cls_supervised = aux_loc_supervised = None
    aux_cls_adversarial = aux_loc_adversarial = None
    if supervised:
        aux_cls_supervised = _bank(
            binding, 'cls_aux', config.aux_classifiers,
            detach(cls_features), True)
        aux_loc_supervised = _bank(
            binding, 'loc_aux', config.aux_localizers,
            detach(loc_features), False)
    if adversarial:
        reversed_cls = _reverse(cls_features, grl_scale)
        reversed_loc = (
            reversed_cls if loc_features is cls_features else
            _reverse(loc_features, grl_scale))
        aux_cls_adversarial = _bank(
            binding, 'cls_aux', config.aux_classifiers, reversed_cls, True)
        aux_loc_adversarial = _bank(
            binding, 'loc_aux', config.aux_localizers, reversed_loc, False)

    disc = disc_cls = disc_loc = None
    if discriminator:
        disc = _discriminator(binding, 'disc', _reverse(features, grl_scale))
        if config.split_fc:
            disc_cls = _discriminator(
                binding, 'disc.cls', _reverse(cls_features, grl_scale))
            disc_loc = _discriminator(
                binding, 'disc.loc', _reverse(loc_features, grl_scale))

    return ForwardBundle(
        features, cls_features, loc_features, cls_probs, boxes,
        aux_cls_supervised, aux_cls_adversarial,
        aux_loc_supervised, aux_loc_adversarial,
        disc, disc_cls, disc_loc)


def serialize_model(model, path):
    """
    Writes *model* to *path* as JSON: an object with the members
    ``format_version``, ``config`` and ``parameters``, the last mapping each
    group to an object of parameter arrays (as nested lists) keyed by the
    remainder of the parameter name.
    """
    parameters = OrderedDict((group, OrderedDict()) for group in GROUPS)
    for name, value in model.parameters.items():
        group, rest = name.split('.', 1)
        parameters[group][rest] = value.tolist()
    doc = OrderedDict((
        ('format_version', FORMAT_VERSION),
        ('config', model.config.as_json()),
        ('parameters', parameters),
        ))
    with io.open(path, 'w', encoding='utf-8') as f:
        json.dump(doc, f)
        f.write('\n')
    logger.info('wrote model to %s', path)


def load_model(path, dim=None):
    """
    Reads a model written by :func:`serialize_model` from *path*. If *dim* is
    given, a model whose input dimension differs raises
    :exc:`~tialab.exc.ModelFormatError`, as does a truncated or malformed
    file, an unknown format version, or parameters that do not match the
    stored configuration.
    """
    with io.open(path, 'r', encoding='utf-8') as f:
        try:
            doc = json.load(f)
        except ValueError as exc:
            raise ModelFormatError('%s: truncated or malformed model file (%s)' % (
                path, exc))
    if not isinstance(doc, dict):
        raise ModelFormatError('%s: not a model file' % path)
    version = doc.get('format_version')
    if version != FORMAT_VERSION:
        raise ModelFormatError('%s: unsupported format version %r (expected %d)' % (
            path, version, FORMAT_VERSION))
    try:
        config = ModelConfig.from_json(doc['config'])
        params = {
            '%s.%s' % (group, rest): np.array(value, dtype=np.float64)
            for group, members in doc['parameters'].items()
            for rest, value in members.items()
            }
    except (KeyError, TypeError, AttributeError, ValueError) as exc:
        raise ModelFormatError('%s: invalid model file (%s)' % (path, exc))
    if dim is not None and config.dim != dim:
        raise ModelFormatError('%s: model expects %d features; data has %d' % (
            path, config.dim, dim))
    try:
        return Model(config, params)
    except (ShapeError, NonFiniteError) as exc:
        raise ModelFormatError('%s: %s' % (path, exc))
