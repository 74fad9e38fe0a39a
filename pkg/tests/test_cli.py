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

import io
import csv
import json
import logging
from unittest import mock

import pytest

from tialab import (
    ShiftSpec,
    ExperimentConfig,
    GradCheckReport,
    read_dataset,
    load_model,
    )
from tialab.cli import main
from tialab.ablation import ablation_header


@pytest.fixture()
def data_dir(tmp_path):
    spec_path = tmp_path / 'spec.json'
    ShiftSpec.build(n_train=40, n_test=20).save(str(spec_path))
    out = tmp_path / 'data'
    assert main(['gen', '--spec', str(spec_path), '--seed', '3', '--out', str(out)]) == 0
    return out


def test_help():
    assert main(['--help']) == 0

def test_no_command():
    assert main([]) == 1

def test_bad_argument():
    assert main(['gen', '--seed', 'seven', '--out', 'x']) == 1
    assert main(['frobnicate']) == 1

def test_gen(data_dir):
    for name in ('source_train', 'source_test', 'target_train', 'target_test'):
        assert (data_dir / (name + '.csv')).exists()
    assert (data_dir / 'shift.json').exists()
    assert len(read_dataset(str(data_dir / 'source_train.csv'))) == 40
    assert len(read_dataset(str(data_dir / 'target_test.csv'))) == 20

def test_gen_missing_spec(tmp_path):
    assert main([
        'gen', '--spec', str(tmp_path / 'missing.json'),
        '--out', str(tmp_path / 'data')]) == 1

def test_train_missing_config(tmp_path):
    assert main([
        'train', '--config', str(tmp_path / 'missing.json'),
        '--out', str(tmp_path / 'run')]) == 1

def test_train_invalid_config(tmp_path):
    path = tmp_path / 'bad.json'
    path.write_text('{"mode": "tia_everything"}')
    assert main(['train', '--config', str(path), '--out', str(tmp_path / 'run')]) == 1

def test_train_and_eval(data_dir, tmp_path, quick_config):
    config_path = tmp_path / 'experiment.json'
    quick_config.replace(mode='tia_full').save(str(config_path))
    run = tmp_path / 'run'
    assert main([
        'train', '--config', str(config_path), '--out', str(run),
        '--data', str(data_dir), '--seed', '2', '--iterations', '3']) == 0
    for name in ('metrics.csv', 'model.json', 'eval.json'):
        assert (run / name).exists()
    with io.open(str(run / 'metrics.csv'), encoding='utf-8') as f:
        rows = list(csv.reader(f))
    assert [row[0] for row in rows[1:]] == ['0', '3']
    assert load_model(str(run / 'model.json')).config == quick_config.model

    out = tmp_path / 'eval.json'
    assert main([
        'eval', '--model', str(run / 'model.json'),
        '--data', str(data_dir), '--out', str(out)]) == 0
    with io.open(str(out), encoding='utf-8') as f:
        doc = json.load(f)
    assert list(doc) == ['source_test', 'target_test']
    assert doc['target_test']['count'] == 20
    assert 0 <= doc['target_test']['accuracy'] <= 1

    out = tmp_path / 'target.json'
    assert main([
        'eval', '--model', str(run / 'model.json'),
        '--data', str(data_dir / 'target_test.csv'), '--out', str(out)]) == 0
    with io.open(str(out), encoding='utf-8') as f:
        single = json.load(f)
    assert single == doc['target_test']

def test_eval_bad_model(data_dir, tmp_path):
    path = tmp_path / 'model.json'
    path.write_text('{"format": "something else"}')
    assert main([
        'eval', '--model', str(path), '--data', str(data_dir),
        '--out', str(tmp_path / 'eval.json')]) == 1

def test_train_config_bad_types(tmp_path):
    for text in (
            '{"model": {"dim": "ten"}}',
            '{"model": null}',
            '{"seed": "seven"}',
            '{"lambda1": "one"}',
            ):
        path = tmp_path / 'bad.json'
        path.write_text(text)
        assert main([
            'train', '--config', str(path),
            '--out', str(tmp_path / 'run')]) == 1

def test_train_config_not_utf8(tmp_path):
    path = tmp_path / 'bad.json'
    path.write_bytes(b'{"mode": "tia_\xff"}')
    assert main(['train', '--config', str(path), '--out', str(tmp_path / 'run')]) == 1

def test_eval_data_not_utf8(data_dir, tmp_path, quick_config):
    run = tmp_path / 'run'
    config_path = tmp_path / 'experiment.json'
    quick_config.replace(iterations=0, data=str(data_dir)).save(str(config_path))
    assert main(['train', '--config', str(config_path), '--out', str(run)]) == 0
    text = (data_dir / 'target_test.csv').read_bytes()
    bad = tmp_path / 'bad.csv'
    bad.write_bytes(text.replace(b'target', b'targ\xff', 1))
    assert main([
        'eval', '--model', str(run / 'model.json'), '--data', str(bad),
        '--out', str(tmp_path / 'eval.json')]) == 1

def test_ablate_bad_seeds(tmp_path):
    path = tmp_path / 'ablation.json'
    path.write_text('{"preset": "table4", "seeds": ["zero"]}')
    assert main([
        'ablate', '--config', str(path), '--out', str(tmp_path / 'table.csv')]) == 1

def test_eval_dim_mismatch(tmp_path, quick_config):
    spec_path = tmp_path / 'spec.json'
    ShiftSpec.build(dim=6, n_train=20, n_test=10).save(str(spec_path))
    assert main([
        'gen', '--spec', str(spec_path), '--out', str(tmp_path / 'data6')]) == 0
    run = tmp_path / 'run'
    config_path = tmp_path / 'experiment.json'
    quick_config.replace(iterations=0).save(str(config_path))
    assert main(['train', '--config', str(config_path), '--out', str(run)]) == 0
    assert main([
        'eval', '--model', str(run / 'model.json'),
        '--data', str(tmp_path / 'data6'),
        '--out', str(tmp_path / 'eval.json')]) == 1

def test_ablate(data_dir, tmp_path):
    config_path = tmp_path / 'ablation.json'
    config_path.write_text(json.dumps({
        'base': {
            'data': 'data', 'iterations': 2, 'eval_interval': 2,
            'batch_source': 8, 'batch_target': 8},
        'seeds': [0],
        'cells': [
            {'label': 'baseline', 'mode': 'source_only'},
            {'label': 'tia', 'mode': 'tia_full'},
            ],
        }))
    out = tmp_path / 'table.csv'
    assert main([
        'ablate', '--config', str(config_path), '--out', str(out),
        '--workers', '1', '--runs', str(tmp_path / 'runs')]) == 0
    with io.open(str(out), encoding='utf-8') as f:
        rows = list(csv.reader(f))
    assert rows[0] == ablation_header([0])
    assert [row[0] for row in rows[1:]] == ['baseline', 'tia']
    assert (tmp_path / 'runs').is_dir()

def test_gradcheck():
    assert main(['gradcheck', '--seed', '1', '--instances', '1']) == 0

def test_gradcheck_failure(caplog):
    reports = [
        GradCheckReport('mul', 0.0, True, (0, 0, (0,)), 6),
        GradCheckReport('swd', 0.5, False, (0, 0, (1,)), 6),
        ]
    with mock.patch('tialab.cli.run_suite', return_value=reports) as run_suite:
        with caplog.at_level(logging.ERROR, logger='tialab'):
            assert main(['gradcheck', '--seed', '4', '--instances', '7']) == 2
    run_suite.assert_called_once_with(4, 7)
    assert 'gradient check failed for: swd' in caplog.text

def test_toy2d_arguments(tmp_path):
    out = str(tmp_path / 'toy.csv')
    with mock.patch('tialab.cli.toy2d') as toy2d:
        assert main(['toy2d', '--out', out, '--iterations', '5', '--grid', '3']) == 0
    toy2d.assert_called_once_with(out, 0, 5, 3)

def test_unexpected_failure(tmp_path):
    with mock.patch('tialab.cli.toy2d', side_effect=RuntimeError('boom')):
        assert main(['toy2d', '--out', str(tmp_path / 'toy.csv')]) == 2
        assert main(['-v', 'toy2d', '--out', str(tmp_path / 'toy.csv')]) == 2
