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
The exc module defines the various exception and warning classes specific to
tialab.

.. note::

    All items in this module are available from the :mod:`tialab` namespace
    without having to import :mod:`tialab.exc` directly.

The following items are defined in the module:


Exceptions
==========

.. autoexception:: Error

.. autoexception:: ShapeError

.. autoexception:: NonFiniteError

.. autoexception:: TapeError

.. autoexception:: ConfigError

.. autoexception:: DatasetError

.. autoexception:: ParseError

.. autoexception:: HeaderMismatch

.. autoexception:: ModelFormatError

.. autoexception:: TrainingDiverged

Warnings
========

.. autoexception:: TialabWarning

.. autoexception:: CellFailedWarning

.. autoexception:: UnlabeledTargetWarning
"""


class Error(Exception):
    "Base class for all tialab exceptions"

class ShapeError(Error, ValueError):
    "Exception raised when operand shapes are incompatible with an operation"

class NonFiniteError(Error, ArithmeticError):
    "Exception raised when an operation produces NaN or infinite values"

class TapeError(Error, RuntimeError):
    "Exception raised when a gradient tape is misused"

class ConfigError(Error, ValueError):
    "Exception raised for an invalid configuration or specification"

class DatasetError(Error, ValueError):
    "Base class for errors relating to datasets"

class ParseError(DatasetError):
    """
    Exception raised when a dataset file contains a malformed row. The
    :attr:`line` and :attr:`column` attributes identify the offending cell
    (either may be ``None`` when not applicable).
    """
    def __init__(self, message, line=None, column=None):
        if line is not None:
            if column is not None:
                message = 'line %d, column %s: %s' % (line, column, message)
            else:
                message = 'line %d: %s' % (line, message)
        super(ParseError, self).__init__(message)
        self.line = line
        self.column = column

class HeaderMismatch(ParseError):
    "Exception raised when a dataset header does not match the expected schema"

class ModelFormatError(Error, ValueError):
    "Exception raised when a model file is truncated, malformed or mismatched"

class TrainingDiverged(NonFiniteError):
    """
    Exception raised when a training step produces a non-finite loss. The
    :attr:`iteration` attribute holds the failing iteration and
    :attr:`components` maps each loss component to its value.
    """
    def __init__(self, iteration, components):
        super(TrainingDiverged, self).__init__(
            'non-finite loss at iteration %d (%s)' % (
                iteration, ', '.join(
                    '%s=%r' % (k, v) for k, v in sorted(components.items()))))
        self.iteration = iteration
        self.components = dict(components)

class TialabWarning(Warning):
    "Base class for warnings raised by tialab"

class CellFailedWarning(TialabWarning):
    "Warning raised when an ablation cell fails; remaining cells proceed"

class UnlabeledTargetWarning(TialabWarning):
    "Warning raised when a run deliberately reads target-domain labels"
