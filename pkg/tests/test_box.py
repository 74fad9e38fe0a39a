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

import pytest

from conftest import fp_equal
from tialab import Box


def test_box_init():
    b = Box(0.5, 0.5, 0.2, 0.4)
    assert b.cx == 0.5
    assert b.cy == 0.5
    assert b.w == 0.2
    assert b.h == 0.4
    assert Box('0.1', 0, 1, '2') == (0.1, 0.0, 1.0, 2.0)
    assert isinstance(Box(1, 2, 3, 4).cx, float)

def test_box_corners():
    assert Box(0.5, 0.5, 1.0, 1.0).corners == (0.0, 0.0, 1.0, 1.0)
    assert Box(0.25, 0.125, 0.5, 0.25).corners == (0.0, 0.0, 0.5, 0.25)

def test_box_area_valid():
    assert Box(0.5, 0.5, 0.5, 0.25).area == 0.125
    assert Box(0.5, 0.5, 0.5, 0.25).valid
    assert not Box(0.5, 0.5, 0.0, 0.25).valid
    assert not Box(0.5, 0.5, 0.5, -0.25).valid

def test_box_intersection():
    a = Box(0.5, 0.5, 1.0, 1.0)
    assert a.intersection(Box(0.5, 0.5, 0.5, 0.5)) == 0.25
    assert a.intersection(Box(2.0, 2.0, 0.5, 0.5)) == 0.0
    # touching edges don't overlap
    assert Box(0.25, 0.5, 0.5, 1.0).intersection(Box(0.75, 0.5, 0.5, 1.0)) == 0.0

def test_box_iou_identical():
    b = Box(0.3, 0.6, 0.2, 0.1)
    assert b.iou(b) == 1.0

def test_box_iou_half_overlap():
    a = Box(0.5, 0.5, 0.2, 0.2)
    b = Box(0.6, 0.5, 0.2, 0.2)
    assert fp_equal(a.iou(b), 1 / 3)
    assert fp_equal(b.iou(a), 1 / 3)

def test_box_iou_disjoint():
    assert Box(0.1, 0.1, 0.1, 0.1).iou(Box(0.9, 0.9, 0.1, 0.1)) == 0.0

def test_box_iou_accepts_tuples():
    assert Box(0.5, 0.5, 0.2, 0.2).iou((0.5, 0.5, 0.2, 0.2)) == 1.0

def test_box_iou_invalid():
    with pytest.raises(ValueError):
        Box(0.5, 0.5, 0.0, 0.2).iou(Box(0.5, 0.5, 0.2, 0.2))
    with pytest.raises(ValueError):
        Box(0.5, 0.5, 0.2, 0.2).iou(Box(0.5, 0.5, 0.2, -0.2))
