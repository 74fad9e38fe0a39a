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

import math

import pytest
import numpy as np

from conftest import fp_equal
from tialab import (
    Tape,
    MeasureKind,
    ForwardBundle,
    cls_inconsistency,
    loc_inconsistency,
    inconsistency,
    alt_measure,
    task_da_loss,
    detection_losses,
    dann_loss,
    total_loss,
    LossComponents,
    ShapeError,
    )
from tialab.losses import swd_projections


def random_probs(shape, seed=0):
    logits = 3 * np.random.default_rng(seed).standard_normal(shape)
    e = np.exp(logits - logits.max(axis=-1, keepdims=True))
    return e / e.sum(axis=-1, keepdims=True)


def make_bundle(tape, probs, boxes, aux_probs=None, aux_boxes=None):
    constant = lambda v: None if v is None else tape.constant(v)
    return ForwardBundle(
        None, None, None, constant(probs), constant(boxes),
        constant(aux_probs), None, constant(aux_boxes), None,
        None, None, None)


def test_measure_parse():
    assert MeasureKind.parse('se_weighted') is MeasureKind.SE_WEIGHTED
    assert MeasureKind.parse('SWD') is MeasureKind.SWD
    assert MeasureKind.parse('Variance') is MeasureKind.VARIANCE
    assert MeasureKind.parse(MeasureKind.SD) is MeasureKind.SD
    with pytest.raises(ValueError):
        MeasureKind.parse('wasserstein')

def test_measure_pairwise():
    assert MeasureKind.L1.pairwise
    assert MeasureKind.KL.pairwise
    assert MeasureKind.SWD.pairwise
    assert not MeasureKind.SD.pairwise
    assert not MeasureKind.MAD.pairwise

def test_cls_inconsistency_disagreement():
    s = 1 / (1 + math.exp(-1))
    entropy = -(s * math.log(s) + (1 - s) * math.log(1 - s))
    value = float(cls_inconsistency([[1, 0], [0, 1]]))
    assert fp_equal(value, -entropy)
    assert fp_equal(value, -0.5823, 1e-4)

def test_cls_inconsistency_agreement():
    for n in (2, 4, 8, 16):
        rows = np.tile(random_probs(4, seed=n), (n, 1))
        assert abs(float(cls_inconsistency(rows)) + math.log(n)) <= 1e-9
    rows = np.tile(random_probs(4), (8, 1))
    assert fp_equal(float(cls_inconsistency(rows)), -2.0794415, 1e-7)

def test_cls_inconsistency_range():
    rng = np.random.default_rng(0)
    checked = 0
    for n in range(2, 17):
        classes = 2 + n % 5
        stack = rng.dirichlet(np.ones(classes), size=(n, 667))
        values = cls_inconsistency(stack).values
        assert np.all(values >= -math.log(n) - 1e-12)
        assert np.all(values <= 0.0)
        checked += len(values)
    assert checked >= 10 ** 4

def test_cls_inconsistency_per_sample():
    stack = random_probs((3, 6, 4))
    values = cls_inconsistency(stack).values
    assert values.shape == (6,)
    for b in range(6):
        assert fp_equal(values[b], float(cls_inconsistency(stack[:, b])))

def test_cls_inconsistency_errors():
    with pytest.raises(ShapeError):
        cls_inconsistency([[0.5, 0.5]])
    with pytest.raises(ValueError):
        cls_inconsistency([[0.5, 0.6], [0.5, 0.5]])
    with pytest.raises(ValueError):
        cls_inconsistency([[1.5, -0.5], [0.5, 0.5]])

def test_cls_inconsistency_gradient_flows():
    tape = Tape()
    probs = tape.variable(random_probs((3, 4)))
    grads = tape.backward(cls_inconsistency(probs))
    assert grads[probs].any()

def test_loc_inconsistency_agreement():
    assert float(loc_inconsistency(np.tile([0.5, 0.5, 0.25, 0.125], (4, 1)))) == 0.0

def test_loc_inconsistency_example():
    assert fp_equal(float(loc_inconsistency([[1, 0, 0, 0], [-1, 0, 0, 0]])), 0.25)

def test_loc_inconsistency_invariance():
    rng = np.random.default_rng(0)
    for trial in range(200):
        preds = rng.standard_normal((int(rng.integers(2, 9)), 4))
        base = float(loc_inconsistency(preds))
        shift = 3 * rng.standard_normal(4)
        scale = rng.uniform(0.1, 4.0) * rng.choice([-1.0, 1.0])
        assert abs(float(loc_inconsistency(preds + shift)) - base) <= 1e-12
        assert abs(float(loc_inconsistency(scale * preds)) - abs(scale) * base) <= 1e-12

def test_loc_inconsistency_per_sample():
    stack = np.random.default_rng(1).standard_normal((4, 7, 4))
    values = loc_inconsistency(stack).values
    assert values.shape == (7,)
    assert fp_equal(values[3], float(loc_inconsistency(stack[:, 3])))

def test_loc_inconsistency_zero_subgradient():
    tape = Tape()
    preds = tape.variable(np.tile([0.5, 0.5, 0.25, 0.125], (3, 1)))
    grads = tape.backward(loc_inconsistency(preds))
    assert not grads[preds].any()

def test_loc_inconsistency_errors():
    with pytest.raises(ShapeError):
        loc_inconsistency([[0.5, 0.5, 0.2, 0.1]])
    with pytest.raises(ShapeError):
        loc_inconsistency([0.5, 0.5, 0.2, 0.1])

def test_alt_measures_identical():
    probs = np.tile(random_probs((6, 3)), (2, 1, 1))
    boxes = np.tile(np.random.default_rng(0).standard_normal((6, 4)), (2, 1, 1))
    assert float(alt_measure('l1', probs)) == 0.0
    assert abs(float(alt_measure('kl', probs))) < 1e-15
    assert float(alt_measure('swd', boxes)) == 0.0
    assert float(alt_measure('mad', boxes)) == 0.0
    assert float(alt_measure('variance', boxes)) == 0.0

def test_alt_measure_l1():
    assert fp_equal(float(alt_measure(MeasureKind.L1, [[1, 0], [0, 1]])), 1.0)

def test_alt_measure_variance():
    value = float(alt_measure(MeasureKind.VARIANCE, [[1, 0, 0, 0], [-1, 0, 0, 0]]))
    assert fp_equal(value, 0.25)

def test_alt_measure_mad():
    value = float(alt_measure(MeasureKind.MAD, [[1, 0, 0, 0], [-1, 0, 0, 0]]))
    assert fp_equal(value, 0.25)

def test_alt_measure_kl():
    a = np.array([0.75, 0.25])
    b = np.array([0.25, 0.75])
    expected = 0.5 * (
        np.sum(a * np.log(a / b)) + np.sum(b * np.log(b / a)))
    assert fp_equal(float(alt_measure('kl', [a, b])), expected)
    assert float(alt_measure('kl', [a, b])) > 0

def test_alt_measure_swd_positive():
    rng = np.random.default_rng(2)
    a = rng.standard_normal((16, 4))
    assert float(alt_measure('swd', [a, a + 1.0])) > 0
    # sorting makes the measure blind to batch order
    assert float(alt_measure('swd', [a, a[::-1]])) < 1e-24

def test_alt_measure_rejects():
    with pytest.raises(ValueError):
        alt_measure('sd', [[1, 0, 0, 0], [-1, 0, 0, 0]])
    with pytest.raises(ValueError):
        alt_measure('se_weighted', [[1, 0], [0, 1]])
    with pytest.raises(ShapeError):
        alt_measure('l1', [[1, 0], [0, 1], [0.5, 0.5]])
    with pytest.raises(ValueError):
        alt_measure('kl', [[1.5, 0], [0, 1]])

def test_inconsistency_dispatch():
    rows = [[1, 0], [0, 1]]
    assert float(inconsistency('se_weighted', rows)) == float(cls_inconsistency(rows))
    boxes = [[1, 0, 0, 0], [-1, 0, 0, 0]]
    assert float(inconsistency(MeasureKind.SD, boxes)) == float(loc_inconsistency(boxes))

def test_swd_projections():
    p = swd_projections(4)
    assert p.shape == (4, 128)
    assert np.abs(np.linalg.norm(p, axis=0) - 1).max() < 1e-12
    assert np.array_equal(p, swd_projections(4))

def test_task_da_equal():
    assert float(task_da_loss('cls', [0.25, 0.75], [0.5, 0.5])) == 0.0

def test_task_da_example():
    assert fp_equal(float(task_da_loss('loc', [0.1], [0.4])), -0.3)

def test_task_da_antisymmetric():
    rng = np.random.default_rng(0)
    s, t = rng.random(8), rng.random(8)
    assert fp_equal(
        float(task_da_loss('cls', s, t)), -float(task_da_loss('cls', t, s)))

def test_task_da_gradients():
    tape = Tape()
    s = tape.variable([0.1, 0.3])
    t = tape.variable([0.4, 0.2, 0.6, 0.8])
    grads = tape.backward(task_da_loss('cls', s, t))
    assert grads[s].tolist() == [0.5, 0.5]
    assert grads[t].tolist() == [-0.25] * 4

def test_task_da_mixed_inputs():
    tape = Tape()
    t = tape.variable([0.4])
    assert fp_equal(float(task_da_loss('cls', [0.1], t)), -0.3)
    assert fp_equal(float(task_da_loss('cls', t, [0.1])), 0.3)

def test_task_da_errors():
    with pytest.raises(ValueError):
        task_da_loss('det', [0.1], [0.2])
    with pytest.raises(ValueError):
        task_da_loss('cls', [], [0.2])

def test_detection_perfect():
    tape = Tape()
    bundle = make_bundle(
        tape, [[1.0, 0.0], [0.0, 1.0]], [[0.5, 0.5, 0.1, 0.1]] * 2)
    losses = detection_losses(bundle, [0, 1], [[0.5, 0.5, 0.1, 0.1]] * 2)
    assert float(losses.cls) <= 1e-12
    assert float(losses.loc) == 0.0
    assert losses.aux_cls is None
    assert losses.aux_loc is None

def test_detection_smooth_l1_small():
    tape = Tape()
    bundle = make_bundle(tape, [[0.5, 0.5]], [[1.0, 0.5, 0.2, 0.2]])
    losses = detection_losses(bundle, [0], [[0.5, 0.5, 0.2, 0.2]])
    assert float(losses.loc) == 0.125
    assert fp_equal(float(losses.cls), math.log(2))

def test_detection_smooth_l1_large():
    tape = Tape()
    bundle = make_bundle(tape, [[0.5, 0.5]], [[0.5, 2.5, 0.2, 0.2]])
    losses = detection_losses(bundle, [1], [[0.5, 0.5, 0.2, 0.2]])
    assert float(losses.loc) == 1.5

def test_detection_auxiliary_sums():
    tape = Tape()
    aux_probs = [[[0.5, 0.5]], [[0.25, 0.75]]]
    aux_boxes = [[[1.0, 0.5, 0.2, 0.2]], [[0.5, 2.5, 0.2, 0.2]]]
    bundle = make_bundle(
        tape, [[0.5, 0.5]], [[0.5, 0.5, 0.2, 0.2]], aux_probs, aux_boxes)
    losses = detection_losses(bundle, [1], [[0.5, 0.5, 0.2, 0.2]])
    assert fp_equal(float(losses.aux_cls), math.log(2) - math.log(0.75))
    assert fp_equal(float(losses.aux_loc), 1.625)
    assert fp_equal(float(losses.total()), 2 * math.log(2) - math.log(0.75) + 1.625)

def test_detection_errors():
    tape = Tape()
    bundle = make_bundle(tape, [[0.5, 0.5]], [[0.5, 0.5, 0.2, 0.2]])
    with pytest.raises(ValueError):
        detection_losses(bundle, [2], [[0.5, 0.5, 0.2, 0.2]])
    with pytest.raises(ValueError):
        detection_losses(bundle, [0], None)
    with pytest.raises(ShapeError):
        detection_losses(bundle, [0, 1], [[0.5, 0.5, 0.2, 0.2]])
    with pytest.raises(ShapeError):
        detection_losses(bundle, [0], [[0.5, 0.5, 0.2]])

def test_dann_confused():
    assert fp_equal(float(dann_loss(np.full((6, 1), 0.5), [0, 0, 0, 1, 1, 1])), math.log(2))

def test_dann_perfect():
    assert float(dann_loss([[0.0], [1.0]], [0, 1])) < 1e-11

def test_dann_flipped():
    probs = [[0.1], [0.2], [0.9], [0.7]]
    assert float(dann_loss(probs, [1, 1, 0, 0])) > float(dann_loss(probs, [0, 0, 1, 1]))

def test_dann_errors():
    with pytest.raises(ShapeError):
        dann_loss([[0.5], [0.5]], [0, 1, 1])
    with pytest.raises(ValueError):
        dann_loss([[0.5], [0.5]], [0, 2])
    with pytest.raises(ValueError):
        dann_loss([[1.5], [0.5]], [0, 1])

def test_total_loss():
    assert fp_equal(total_loss(LossComponents(1.0, 1.0, 1.0, 1.0)), 3.01)

def test_total_loss_absent():
    assert total_loss(LossComponents(2.0)) == 2.0
    assert fp_equal(total_loss(LossComponents(2.0, da=0.5), lambda1=0.2), 2.1)

def test_total_loss_baseline():
    components = LossComponents(1.5, 0.25, 7.0, 9.0)
    assert total_loss(components, lambda2=0.0, lambda3=0.0) == 1.75

def test_total_loss_tensors():
    tape = Tape()
    det = tape.variable(1.0)
    da = tape.variable(2.0)
    total = total_loss(LossComponents(det, da, None, None), lambda1=0.5)
    assert float(total) == 2.0
    grads = tape.backward(total)
    assert grads[det] == 1.0
    assert grads[da] == 0.5

def test_total_loss_rejects():
    with pytest.raises(ValueError):
        total_loss(LossComponents(1.0), lambda1=-0.1)
    with pytest.raises(ValueError):
        total_loss(LossComponents(1.0), lambda3=math.nan)
