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
import numpy as np


MAX_VALUE = (2 - 2 ** -52) * 2 ** 1023

# See <http://floating-point-gui.de/errors/comparison/> for the base
# functionality below. Values compared against zero are shifted by one first
# so that tiny residues (e.g. 1e-17 from cancellation) compare equal to zero.
#
# WARNING: if two deliberately tiny values are compared with this function,
# tests may incorrectly pass when they should fail.

def fp_equal(x, y, epsilon=1e-9):
    if x == y:
        return True
    if x == 0.0 or y == 0.0:
        x = 1.0 - x
        y = 1.0 - y
    # use relative error
    return abs(x - y) / min(abs(x) + abs(y), MAX_VALUE) < epsilon

def fp_arrays_equal(a, b, epsilon=1e-9):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    return a.shape == b.shape and all(
        fp_equal(float(x), float(y), epsilon)
        for x, y in zip(a.ravel(), b.ravel()))


def pytest_addoption(parser):
    parser.addoption(
        '--runslow', action='store_true', default=False,
        help='run the slow end-to-end tests')

def pytest_configure(config):
    config.addinivalue_line('markers', 'slow: slow end-to-end test')

def pytest_collection_modifyitems(config, items):
    if config.getoption('--runslow'):
        return
    skip = pytest.mark.skip(reason='needs --runslow')
    for item in items:
        if 'slow' in item.keywords:
            item.add_marker(skip)


@pytest.fixture(scope='session')
def small_benchmark():
    from tialab import ShiftSpec, generate_dataset
    spec = ShiftSpec.build(n_train=200, n_test=100)
    return spec, generate_dataset(spec, 0)

@pytest.fixture()
def quick_config():
    from tialab import ExperimentConfig
    return ExperimentConfig.default().replace(
        iterations=6, eval_interval=3, batch_source=8, batch_target=8)
