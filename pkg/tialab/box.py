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
The box module defines the :class:`Box` class, which represents an
axis-aligned bounding box in normalized image coordinates by its center,
width and height.

.. note::

    All items in this module are available from the :mod:`tialab` namespace
    without having to import :mod:`tialab.box` directly.

The following items are defined in the module:


Box
===

.. autoclass:: Box(cx, cy, w, h)
"""

from collections import namedtuple


class Box(namedtuple('Box', ('cx', 'cy', 'w', 'h'))):
    """
    Represents a bounding box by its center (:attr:`cx`, :attr:`cy`), width
    :attr:`w` and height :attr:`h`. Coordinates are normalized such that the
    image spans 0 to 1 on both axes::

        >>> Box(0.5, 0.5, 1.0, 1.0)
        Box(cx=0.5, cy=0.5, w=1.0, h=1.0)
        >>> Box(0.5, 0.5, 1.0, 1.0).corners
        (0.0, 0.0, 1.0, 1.0)

    .. automethod:: intersection

    .. automethod:: iou

    .. autoattribute:: corners

    .. autoattribute:: area

    .. autoattribute:: valid
    """

    __slots__ = ()

    def __new__(cls, cx, cy, w, h):
        return super(Box, cls).__new__(cls, float(cx), float(cy), float(w), float(h))

    @property
    def corners(self):
        """
        The ``(x0, y0, x1, y1)`` corners of the box where ``(x0, y0)`` is the
        minimal corner.
        """
        return (
            self.cx - self.w / 2, self.cy - self.h / 2,
            self.cx + self.w / 2, self.cy + self.h / 2)

    @property
    def area(self):
        return self.w * self.h

    @property
    def valid(self):
        "``True`` if the box has strictly positive width and height."
        return self.w > 0 and self.h > 0

    def intersection(self, other):
        """
        Returns the area of overlap between this box and *other* (0.0 when the
        boxes are disjoint or merely touch).
        """
        ax0, ay0, ax1, ay1 = self.corners
        bx0, by0, bx1, by1 = other.corners
        w = min(ax1, bx1) - max(ax0, bx0)
        h = min(ay1, by1) - max(ay0, by0)
        if w <= 0 or h <= 0:
            return 0.0
        return w * h

    def iou(self, other):
        """
        Returns the intersection over union of this box and *other*. Both
        boxes must be :attr:`valid`.
        """
        other = Box(*other)
        if not (self.valid and other.valid):
            raise ValueError('iou requires strictly positive widths and heights')
        inter = self.intersection(other)
        union = self.area + other.area - inter
        return min(1.0, max(0.0, inter / union))
