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
The tialab package is a desk-scale laboratory for task-specific inconsistency
alignment: domain-adaptive training of a detection-surrogate network in which
banks of auxiliary classifiers and localizers measure how much they disagree
on each domain, and a gradient reversal layer turns that disagreement into a
signal for aligning the shared features.

The classes and functions defined in most modules of this package are
available directly from the :mod:`tialab` namespace::

    from tialab import ExperimentConfig, run_experiment

    result = run_experiment(ExperimentConfig.default(), out_dir='run')
    print(result.summary.target.accuracy)

The following sections document the various modules available within the
package:

* :ref:`api_autodiff`
* :ref:`api_gradcheck`
* :ref:`api_synth`
* :ref:`api_model`
* :ref:`api_losses`
* :ref:`api_trainer`
* :ref:`api_evaluate`
* :ref:`api_ablation`
* :ref:`api_box`
* :ref:`api_toy`
* :ref:`api_exc`
"""

from .exc import (
    Error,
    ShapeError,
    NonFiniteError,
    TapeError,
    ConfigError,
    DatasetError,
    ParseError,
    HeaderMismatch,
    ModelFormatError,
    TrainingDiverged,
    TialabWarning,
    CellFailedWarning,
    UnlabeledTargetWarning,
    )
from .autodiff import (
    Tape,
    Tensor,
    Gradients,
    Op,
    primitive_forward,
    grl_apply,
    detach,
    backward,
    )
from .gradcheck import GradCheckReport, grad_check, run_suite
from .box import Box
from .synth import (
    ShiftSpec,
    Sample,
    Dataset,
    Batch,
    Benchmark,
    generate_dataset,
    write_dataset,
    read_dataset,
    write_benchmark,
    read_benchmark,
    )
from .model import (
    ModelConfig,
    Model,
    Binding,
    ForwardBundle,
    init_model,
    forward,
    serialize_model,
    load_model,
    )
from .losses import (
    MeasureKind,
    DetectionLosses,
    LossComponents,
    cls_inconsistency,
    loc_inconsistency,
    inconsistency,
    alt_measure,
    task_da_loss,
    detection_losses,
    dann_loss,
    total_loss,
    )
from .trainer import (
    ExperimentConfig,
    TrainState,
    EpochSampler,
    MetricsRecord,
    MetricsRow,
    init_state,
    objective,
    step_gradients,
    train_step,
    run_experiment,
    )
from .evaluate import (
    EvalSummary,
    DetectionType,
    evaluate,
    iou,
    classify_detection,
    )
from .ablation import (
    AblationCell,
    AblationSpec,
    preset_cells,
    run_ablation,
    write_ablation,
    )
from .toy import toy2d
