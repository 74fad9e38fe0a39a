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

import json
from unittest import mock

import pytest
import numpy as np

from conftest import fp_equal
from tialab import (
    Box,
    Dataset,
    ModelConfig,
    DetectionType,
    EvalSummary,
    init_model,
    iou,
    classify_detection,
    evaluate,
    DatasetError,
    ShapeError,
    )


def fake_model(probs, boxes):
    return mock.Mock(config=None, predict=mock.Mock(
        return_value=(np.array(probs, dtype=float), np.array(boxes, dtype=float))))

def sample_dataset():
    return Dataset(
        np.zeros((4, 2)), [0, 1, 1, 2],
        [(0.5, 0.5, 0.2, 0.2)] * 4, 'target', classes=3)


def test_iou_identical():
    assert iou((0.3, 0.3, 0.2, 0.4), (0.3, 0.3, 0.2, 0.4)) == 1.0

def test_iou_disjoint():
    assert iou((0.1, 0.1, 0.1, 0.1), (0.8, 0.8, 0.1, 0.1)) == 0.0

def test_iou_unit_squares():
    assert fp_equal(iou((0.5, 0.5, 1.0, 1.0), (1.0, 0.5, 1.0, 1.0)), 1 / 3)

def test_iou_symmetric_translation():
    rng = np.random.default_rng(0)
    for i in range(50):
        a = Box(*rng.uniform(0.2, 0.8, 2), *rng.uniform(0.05, 0.5, 2))
        b = Box(*rng.uniform(0.2, 0.8, 2), *rng.uniform(0.05, 0.5, 2))
        value = iou(a, b)
        assert 0.0 <= value <= 1.0
        assert fp_equal(value, iou(b, a))
        dx, dy = 0.25, -0.125
        moved_a = Box(a.cx + dx, a.cy + dy, a.w, a.h)
        moved_b = Box(b.cx + dx, b.cy + dy, b.w, b.h)
        assert abs(iou(moved_a, moved_b) - value) < 1e-12

def test_iou_rejects_degenerate():
    with pytest.raises(ValueError):
        iou((0.5, 0.5, 0.0, 0.2), (0.5, 0.5, 0.2, 0.2))
    with pytest.raises(ValueError):
        iou((0.5, 0.5, 0.2, 0.2), (0.5, 0.5, 0.2, -1.0))

def test_classify_detection():
    assert classify_detection(0.6) == DetectionType.CORRECT
    assert classify_detection(0.4) == DetectionType.MISLOCALIZATION
    assert classify_detection(0.1) == DetectionType.BACKGROUND

def test_classify_detection_boundaries():
    assert classify_detection(0.5) == DetectionType.CORRECT
    assert classify_detection(np.nextafter(0.5, 0)) == DetectionType.MISLOCALIZATION
    assert classify_detection(0.3) == DetectionType.MISLOCALIZATION
    assert classify_detection(np.nextafter(0.3, 0)) == DetectionType.BACKGROUND
    assert classify_detection(0.0) == DetectionType.BACKGROUND
    assert classify_detection(1.0) == DetectionType.CORRECT

def test_classify_detection_partition():
    for value in np.linspace(0, 1, 1001):
        kind = classify_detection(value)
        assert kind in DetectionType
        assert (kind == DetectionType.CORRECT) == (value >= 0.5)

def test_classify_detection_range():
    with pytest.raises(ValueError):
        classify_detection(-0.1)
    with pytest.raises(ValueError):
        classify_detection(1.5)
    with pytest.raises(ValueError):
        classify_detection(float('nan'))

def test_detection_type_values():
    assert [t.value for t in DetectionType] == [
        'Correct', 'MisLocalization', 'Background']

def test_evaluate_ground_truth():
    ds = sample_dataset()
    model = fake_model(np.eye(3)[ds.y], ds.boxes)
    summary = evaluate(model, ds)
    assert summary.accuracy == 1.0
    assert summary.loc_mse == 0.0
    assert summary.mean_iou == 1.0
    assert summary.count == 4
    assert summary.counted == 4
    assert summary.taxonomy == {
        'Correct': 1.0, 'MisLocalization': 0.0, 'Background': 0.0}
    model.predict.assert_called_once()

def test_evaluate_taxonomy():
    ds = sample_dataset()
    probs = [[0.9, 0.05, 0.05], [0.1, 0.8, 0.1], [0.2, 0.7, 0.1], [0.6, 0.2, 0.2]]
    boxes = [
        (0.5, 0.5, 0.2, 0.2),
        (0.6, 0.5, 0.2, 0.2),
        (0.1, 0.1, 0.1, 0.1),
        (0.5, 0.5, 0.2, 0.2),
        ]
    summary = evaluate(fake_model(probs, boxes), ds)
    assert summary.accuracy == 0.75
    assert summary.counted == 3
    for value in summary.taxonomy.values():
        assert fp_equal(value, 1 / 3)
    assert summary.class_taxonomy == {
        'Correct': 0.5, 'MisLocalization': 0.25, 'Background': 0.25}
    expected = ((np.array(boxes) - ds.boxes) ** 2).mean()
    assert fp_equal(summary.loc_mse, expected)
    assert fp_equal(summary.mean_iou, (1 + 1 / 3 + 0 + 1) / 4)

def test_evaluate_nothing_correct():
    ds = sample_dataset()
    probs = np.eye(3)[[1, 0, 0, 0]]
    summary = evaluate(fake_model(probs, ds.boxes), ds)
    assert summary.accuracy == 0.0
    assert summary.counted == 0
    assert sum(summary.taxonomy.values()) == 0.0
    assert sum(summary.class_taxonomy.values()) == 0.0

def test_evaluate_clamps_boxes():
    ds = sample_dataset()
    boxes = np.array(ds.boxes)
    boxes[0, 2] = -0.5
    summary = evaluate(fake_model(np.eye(3)[ds.y], boxes), ds)
    assert summary.taxonomy['Background'] == 0.25
    assert 0.0 <= summary.mean_iou <= 1.0

def test_evaluate_empty():
    ds = Dataset(np.zeros((0, 2)), [], np.zeros((0, 4)), [])
    with pytest.raises(DatasetError):
        evaluate(fake_model([], []), ds)

def test_evaluate_dim_mismatch():
    model = init_model(ModelConfig(3, 3, trunk=(8,)), 0)
    with pytest.raises(ShapeError):
        evaluate(model, sample_dataset())

def test_evaluate_uniform_classifier(small_benchmark):
    spec, bench = small_benchmark
    model = init_model(ModelConfig(spec.dim, spec.classes), 0)
    model = model.replace_parameters({
        'cls_primary.w': np.zeros((64, spec.classes))})
    summary = evaluate(model, bench.target_test)
    # ties resolve to the first class under argmax
    assert summary.accuracy == 0.25

def test_evaluate_deterministic(small_benchmark):
    spec, bench = small_benchmark
    model = init_model(ModelConfig(spec.dim, spec.classes), 1)
    assert evaluate(model, bench.source_test) == evaluate(model, bench.source_test)

def test_summary_json():
    ds = sample_dataset()
    summary = evaluate(fake_model(np.eye(3)[ds.y], ds.boxes), ds)
    assert isinstance(summary, EvalSummary)
    obj = json.loads(json.dumps(summary.as_json()))
    assert obj['accuracy'] == 1.0
    assert obj['taxonomy']['Correct'] == 1.0
    assert obj['count'] == summary.count
    assert obj['class_taxonomy'] == dict(summary.class_taxonomy)
