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
The cli module provides the ``tialab`` command, which ties the laboratory
together::

    $ tialab gen --spec default --seed 7 --out data/
    $ tialab train --config experiment.json --out run/
    $ tialab eval --model run/model.json --data data/ --out eval.json
    $ tialab ablate --config table4.json --out table4.csv
    $ tialab gradcheck --seed 0
    $ tialab toy2d --out toy.csv

Diagnostics are written to stderr and all results to files. The exit code is
0 on success, 1 when the inputs are invalid (bad arguments, missing or
malformed files, invalid configurations), and 2 when a run fails.

.. autofunction:: main
"""

import io
import os
import sys
import json
import logging
import argparse
from collections import OrderedDict

from .exc import (
    ConfigError,
    DatasetError,
    ModelFormatError,
    ShapeError,
    )
from .synth import (
    ShiftSpec,
    generate_dataset,
    write_benchmark,
    read_dataset,
    read_benchmark,
    )
from .model import load_model
from .trainer import ExperimentConfig, run_experiment
from .evaluate import evaluate
from .ablation import AblationSpec, run_ablation, write_ablation
from .gradcheck import run_suite
from .toy import toy2d

logger = logging.getLogger('tialab')

VALIDATION_ERRORS = (ConfigError, DatasetError, ModelFormatError, ShapeError, OSError)


class ArgumentParser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _parser():
    parser = ArgumentParser(
        prog='tialab',
        description='Task-specific inconsistency alignment laboratory')
    parser.add_argument(
        '-v', '--verbose', dest='log_level', action='store_const',
        const=logging.DEBUG, default=logging.INFO,
        help='produce more console output')
    parser.add_argument(
        '-q', '--quiet', dest='log_level', action='store_const',
        const=logging.WARNING, help='produce less console output')
    commands = parser.add_subparsers(dest='command', metavar='command')
    commands.required = True

    gen = commands.add_parser('gen', help='generate a synthetic benchmark')
    gen.add_argument(
        '--spec', default='default',
        help='a shift specification JSON file, or "default"')
    gen.add_argument('--seed', type=int, default=0)
    gen.add_argument('--out', required=True, help='the output directory')
    gen.set_defaults(func=do_gen)

    train = commands.add_parser('train', help='run an experiment')
    train.add_argument('--config', required=True, help='an experiment JSON file')
    train.add_argument('--out', required=True, help='the output directory')
    train.add_argument('--data', help='override the dataset directory')
    train.add_argument('--seed', type=int, help='override the seed')
    train.add_argument('--iterations', type=int, help='override the iteration count')
    train.set_defaults(func=do_train)

    ev = commands.add_parser('eval', help='evaluate a trained model')
    ev.add_argument('--model', required=True, help='a model JSON file')
    ev.add_argument(
        '--data', required=True,
        help='a dataset CSV file, or a benchmark directory')
    ev.add_argument('--out', required=True, help='the output JSON file')
    ev.set_defaults(func=do_eval)

    ablate = commands.add_parser('ablate', help='run an ablation study')
    ablate.add_argument('--config', required=True, help='an ablation JSON file')
    ablate.add_argument('--out', required=True, help='the output CSV file')
    ablate.add_argument(
        '--workers', type=int,
        help='the number of concurrent runs (default: $TIA_THREADS or the '
        'number of CPUs)')
    ablate.add_argument(
        '--runs', help='a directory in which to keep the output of every run')
    ablate.set_defaults(func=do_ablate)

    check = commands.add_parser('gradcheck', help='verify all gradients')
    check.add_argument('--seed', type=int, default=0)
    check.add_argument('--instances', type=int, default=100)
    check.set_defaults(func=do_gradcheck)

    toy = commands.add_parser(
        'toy2d', help='export a two-dimensional decision grid')
    toy.add_argument('--out', required=True, help='the output CSV file')
    toy.add_argument('--seed', type=int, default=0)
    toy.add_argument('--iterations', type=int, default=1000)
    toy.add_argument('--grid', type=int, default=41)
    toy.set_defaults(func=do_toy2d)
    return parser


def do_gen(options):
    if options.spec == 'default':
        spec = ShiftSpec.default()
    else:
        spec = ShiftSpec.load(options.spec)
    write_benchmark(generate_dataset(spec, options.seed), options.out, spec)
    return 0


def do_train(options):
    config = ExperimentConfig.load(options.config)
    changes = {}
    if options.data is not None:
        changes['data'] = options.data
    if options.seed is not None:
        changes['seed'] = options.seed
    if options.iterations is not None:
        changes['iterations'] = options.iterations
    if changes:
        config = config.replace(**changes)
    run_experiment(config, options.out)
    return 0


def do_eval(options):
    model = load_model(options.model)
    if os.path.isdir(options.data):
        benchmark = read_benchmark(options.data, model.config.dim)
        doc = OrderedDict(
            (name, evaluate(model, split).as_json())
            for name, split in zip(benchmark._fields, benchmark)
            if name.endswith('_test'))
    else:
        doc = evaluate(
            model, read_dataset(options.data, model.config.dim)).as_json()
    with io.open(options.out, 'w', encoding='utf-8') as f:
        json.dump(doc, f, indent=4)
        f.write('\n')
    return 0


def do_ablate(options):
    spec = AblationSpec.load(options.config)
    results = run_ablation(spec, workers=options.workers, runs_dir=options.runs)
    write_ablation(results, spec.seeds, options.out)
    failed = [result.cell.label for result in results if result.errors]
    if failed:
        logger.error('failed cells: %s', ', '.join(failed))
        return 2
    return 0


def do_gradcheck(options):
    reports = run_suite(options.seed, options.instances)
    failed = [report.name for report in reports if not report.passed]
    if failed:
        logger.error('gradient check failed for: %s', ', '.join(failed))
        return 2
    return 0


def do_toy2d(options):
    toy2d(options.out, options.seed, options.iterations, options.grid)
    return 0


def main(args=None):
    """
    The entry point of the ``tialab`` command. *args* defaults to the
    command line arguments; the exit code is returned.
    """
    if args is None:
        args = sys.argv[1:]
    logging.captureWarnings(True)
    try:
        options = _parser().parse_args(args)
    except ConfigError as exc:
        logging.basicConfig(stream=sys.stderr, format='%(message)s')
        logger.error('tialab: %s', exc)
        return 1
    except SystemExit as exc:
        return exc.code
    logging.basicConfig(
        stream=sys.stderr, level=options.log_level,
        format='%(levelname)s: %(message)s')
    logger.setLevel(options.log_level)
    try:
        return options.func(options)
    except VALIDATION_ERRORS as exc:
        logger.error('%s', exc)
        return 1
    except Exception as exc:
        if options.log_level <= logging.DEBUG:
            logger.exception('%s', exc)
        else:
            logger.error('%s', exc)
        return 2


cli_main = main
