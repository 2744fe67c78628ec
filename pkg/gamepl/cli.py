"""Command-line interface: ``gamepl gen|train|eval|sweep``.

::

    gamepl gen --classes 8 --dim 16 --train 2000 --test 1000 --seed 7 --out data.csv
    gamepl train --data data.csv --setting fspl --loss g2netpl --seed 7 --out-dir run1
    gamepl eval --model run1/model.json --pseudo run1/pseudo.csv --data data.csv
    gamepl sweep --data data.csv --settings sspl:0.2,sspl:0.4 --losses g2netpl,an \\
        --seeds 0,1 --out sweep.csv

Configuration precedence for ``train`` and ``sweep``: command-line flags
(including ``--set key=value``) override keys of the ``--config`` file,
which override the defaults of :class:`~gamepl.model.game.TrainConfig`.
The config file holds flat ``key = value`` lines; ``#`` starts a comment.

Exit codes: 0 success, 2 usage error, 3 numerical failure (divergence),
4 input/output error.
"""
import argparse
import configparser
import csv
import json
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
import numpy as np
import xarray as xr
import gamepl
from gamepl.data.dataset import load_dataset, save_dataset
from gamepl.data.synthetic import SyntheticSpec, gen_synthetic
from gamepl.data.masking import apply_setting, parse_setting
from gamepl.evaluation.metrics import map_score, pseudo_label_quality
from gamepl.evaluation.traces import export_traces
from gamepl.model.game import TrainConfig, CONFIG_KEYS, build_model
from gamepl.player.classifier import forward, save_model, load_model
from gamepl.player.pseudo_label import PseudoLabelStore
from gamepl.utils import constants as const
from gamepl.utils.attrdict import AttrDict
from gamepl.utils.exceptions import (DatasetFormatError, DivergenceError,
                                     UndefinedMetricError)


EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4

METRIC_KEYS = ('map_test_final', 'map_test_best', 'best_epoch', 'pseudo_map',
               'converged_epoch')
SWEEP_COLUMNS = ('setting', 'loss', 'seed', 'status') + METRIC_KEYS + ('error',)
_CONFIG_SECTION = 'gamepl'


class UsageError(ValueError):
    """Inconsistent or invalid command-line arguments."""
    pass


def _status(message):
    print('gamepl: {}'.format(message), file=sys.stderr)


def _finite_or_none(value):
    if value is None:
        return None
    value = float(value)
    return value if math.isfinite(value) else None


def _split_list(text):
    return [item.strip() for item in text.split(',') if item.strip()]


def read_config_file(path):
    """Flat ``key = value`` pairs of a config file as a dict of strings."""
    parser = configparser.ConfigParser(inline_comment_prefixes=('#',),
                                       interpolation=None)
    parser.optionxform = str
    with open(path) as f:
        text = f.read()
    try:
        parser.read_string('[{}]\n{}'.format(_CONFIG_SECTION, text), source=path)
    except configparser.Error as err:
        raise UsageError('cannot parse config file {}: {}'.format(path, err))
    return dict(parser[_CONFIG_SECTION])


def _parse_overrides(pairs):
    values = {}
    for pair in pairs or ():
        key, sep, value = pair.partition('=')
        if not sep or not key.strip():
            raise UsageError('--set expects key=value, got {!r}'.format(pair))
        values[key.strip()] = value.strip()
    return values


def resolve_config(args, **fixed):
    """Defaults < config file < flags, as a validated :class:`TrainConfig`."""
    layers = []
    if getattr(args, 'config', None):
        layers.append(read_config_file(args.config))
    layers.append({key: getattr(args, 'cfg_' + key) for key in CONFIG_KEYS
                   if getattr(args, 'cfg_' + key, None) is not None})
    layers.append(_parse_overrides(getattr(args, 'set', None)))
    layers.append({key: value for key, value in fixed.items() if value is not None})
    values = AttrDict()
    for layer in layers:
        values = values + layer
    try:
        return TrainConfig.from_dict(values)
    except ValueError as err:
        raise UsageError(str(err))


def _check_loss_setting(loss, setting):
    kind, fraction = parse_setting(setting)
    if loss in ('bce', 'bce-ls') and kind != 'full':
        raise UsageError("loss '{}' needs the 'full' setting, got {!r}".format(loss, setting))


def run_metrics(game):
    """Deterministic summary of a finished training run."""
    traces = game.traces
    maps = np.array([rec.map_test for rec in traces], dtype=float)
    if np.all(np.isnan(maps)):
        best, best_epoch = None, None
    else:
        k = int(np.nanargmax(maps))
        best, best_epoch = float(maps[k]), int(traces[k].epoch)
    train = game.dataset.train
    if game.store is not None:
        pseudo_map = traces[-1].pseudo_map
    else:
        #  for baselines: the network's own predictions on the unobserved entries
        unobserved = train.mask == const.UNOBSERVED
        try:
            pseudo_map = map_score(game.predict(train.features), train.ground_truth,
                                   where=unobserved).map if unobserved.any() else None
        except UndefinedMetricError:
            pseudo_map = None
    return {'map_test_final': _finite_or_none(traces[-1].map_test),
            'map_test_best': best,
            'best_epoch': best_epoch,
            'pseudo_map': _finite_or_none(pseudo_map),
            'converged_epoch': game.converged_epoch}


def _write_json(doc, path):
    with open(path, 'w') as f:
        json.dump(doc, f, indent=2, sort_keys=True)
        f.write('\n')


def cmd_gen(args):
    try:
        spec = SyntheticSpec(num_classes=args.classes, input_dim=args.dim,
                             num_train=args.train, num_test=args.test,
                             separation=args.separation, label_noise=args.label_noise,
                             mean_positives=args.mean_positives)
    except ValueError as err:
        raise UsageError(str(err))
    start = time.perf_counter()
    dataset = gen_synthetic(spec, seed=args.seed)
    save_dataset(dataset, args.out)
    manifest = {'command': 'gen',
                'version': gamepl.__version__,
                'synthetic': spec.as_dict(),
                'seed': args.seed,
                'fingerprint': dataset.fingerprint(),
                'artifacts': {'dataset': args.out},
                'timing': {'wall_seconds': time.perf_counter() - start}}
    _write_json(manifest, args.out + '.manifest.json')
    _status('wrote {} ({} train, {} test)'.format(args.out, dataset.num_train, dataset.num_test))
    return EXIT_OK


def cmd_train(args):
    config = resolve_config(args, loss=args.loss, seed=args.seed)
    _check_loss_setting(config.loss, args.setting)
    dataset = load_dataset(args.data)
    masked = apply_setting(dataset, args.setting, seed=config.seed)
    os.makedirs(args.out_dir, exist_ok=True)
    start = time.perf_counter()
    try:
        game = build_model(masked, config, verbose=args.verbose)
    except ValueError as err:
        raise UsageError(str(err))
    game.run()
    wall = time.perf_counter() - start
    artifacts = {'model': os.path.join(args.out_dir, 'model.json'),
                 'traces': os.path.join(args.out_dir, 'traces.csv'),
                 'metrics': os.path.join(args.out_dir, 'metrics.json')}
    save_model(game.model, artifacts['model'])
    if game.store is not None:
        artifacts['pseudo'] = os.path.join(args.out_dir, 'pseudo.csv')
        game.store.save(artifacts['pseudo'])
    export_traces(game.traces, artifacts['traces'])
    metrics = run_metrics(game)
    _write_json(metrics, artifacts['metrics'])
    manifest = {'command': 'train',
                'version': gamepl.__version__,
                'config': config.as_dict(),
                'setting': args.setting,
                'dataset': {'path': args.data, 'fingerprint': dataset.fingerprint()},
                'seed': config.seed,
                'artifacts': artifacts,
                'timing': {'wall_seconds': wall}}
    manifest['artifacts']['manifest'] = os.path.join(args.out_dir, 'manifest.json')
    _write_json(manifest, manifest['artifacts']['manifest'])
    _status('trained {} on {} for {} epochs, final test mAP {}'.format(
        config.loss, args.setting, len(game.traces), metrics['map_test_final']))
    return EXIT_OK


def cmd_eval(args):
    model = load_model(args.model)
    dataset = load_dataset(args.data)
    if model.input_dim != dataset.input_dim:
        raise UsageError('model expects input_dim {}, data has input_dim {}'.format(
            model.input_dim, dataset.input_dim))
    if model.num_classes != dataset.num_classes:
        raise UsageError('model has {} classes, data has {}'.format(
            model.num_classes, dataset.num_classes))
    test = dataset.test
    result = {'map_test': None, 'pseudo_map': None}
    if test.num_images:
        try:
            result['map_test'] = map_score(forward(model, test.features),
                                           test.ground_truth).map
        except UndefinedMetricError:
            pass
    if args.pseudo:
        store = PseudoLabelStore.load(args.pseudo)
        train = dataset.train
        if store.shape != train.ground_truth.shape:
            raise UsageError('pseudo labels have shape {}, training split {}'.format(
                store.shape, train.ground_truth.shape))
        mask = np.where(store.frozen_mask, store.frozen_values.astype(int), const.UNOBSERVED)
        try:
            result['pseudo_map'] = pseudo_label_quality(store, train.ground_truth, mask).map
        except UndefinedMetricError:
            pass
    result = {key: _finite_or_none(value) for key, value in result.items()}
    if args.out:
        _write_json(result, args.out)
    else:
        print(json.dumps(result, indent=2, sort_keys=True))
    return EXIT_OK


def _sweep_run(job):
    """One (setting, loss, seed) cell of a sweep; never raises."""
    dataset, setting, config = job
    row = {'setting': setting, 'loss': config.loss, 'seed': config.seed,
           'status': 'ok', 'error': ''}
    try:
        masked = apply_setting(dataset, setting, seed=config.seed)
        game = build_model(masked, config)
        game.run()
        row.update(run_metrics(game))
    except Exception as err:
        row.update({key: None for key in METRIC_KEYS})
        row.update(status='failed', error='{}: {}'.format(type(err).__name__, err))
    return row


def _format_cell(value):
    if value is None:
        return ''
    if isinstance(value, float):
        return '%.9g' % value
    return str(value)


def export_sweep_runs(rows, path):
    """One CSV row per sweep run, columns in ``SWEEP_COLUMNS`` order."""
    with open(path, 'w', newline='') as f:
        writer = csv.writer(f)
        writer.writerow(SWEEP_COLUMNS)
        for row in rows:
            writer.writerow([_format_cell(row[col]) for col in SWEEP_COLUMNS])


def summarize_sweep(
rows, settings, losses, seeds):
    """Mean and standard deviation over seeds of every metric per
    (setting, loss) cell, as an ``xarray.Dataset``. Failed runs are NaN
    and skipped."""
    shape = (len(settings), len(losses), len(seeds))
    data_vars = {}
    for key in ('map_test_final', 'map_test_best', 'pseudo_map'):
        values = np.full(shape, np.nan)
        for row in rows:
            if row[key] is not None:
                index = (settings.index(row['setting']), losses.index(row['loss']),
                         seeds.index(row['seed']))
                values[index] = row[key]
        data_vars[key] = (('setting', 'loss', 'seed'), values)
    ds = xr.Dataset(data_vars, coords={'setting': settings, 'loss': losses, 'seed': seeds})
    summary = xr.Dataset()
    for key in data_vars:
        summary[key + '_mean'] = ds[key].mean('seed', skipna=True)
        summary[key + '_std'] = ds[key].std('seed', skipna=True)
    summary['n_ok'] = ds['map_test_final'].notnull().sum('seed')
    return summary


def cmd_sweep(args):
    settings = _split_list(args.settings)
    losses = _split_list(args.losses)
    try:
        seeds = [int(s) for s in _split_list(args.seeds)]
    except ValueError:
        raise UsageError('--seeds must be a comma-separated list of integers')
    for label, items in (('settings', settings), ('losses', losses), ('seeds', seeds)):
        if not items:
            raise UsageError('--{} must not be empty'.format(label))
    for label, items in (('settings', settings), ('losses', losses), ('seeds', seeds)):
        if len(set(items)) != len(items):
            raise UsageError('--{} lists an entry twice'.format(label))
    if args.workers < 1:
        raise UsageError('--workers must be at least 1')
    base = resolve_config(args)
    jobs = []
    for setting in settings:
        for loss in losses:
            try:
                parse_setting(setting)
                config = base.replace(loss=loss)
            except ValueError as err:
                raise UsageError(str(err))
            for seed in seeds:
                jobs.append((setting, config.replace(seed=seed)))
    dataset = load_dataset(args.data)
    start = time.perf_counter()
    work = [(dataset, setting, config) for setting, config in jobs]
    if args.workers == 1:
        rows = [_sweep_run(job) for job in work]
    else:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            rows = list(pool.map(_sweep_run, work))
    export_sweep_runs(rows, args.out)
    summary = summarize_sweep(rows, settings, losses, seeds)
    root, ext = os.path.splitext(args.out)
    summary_path = root + '_summary' + (ext or '.csv')
    summary.to_dataframe().reset_index().to_csv(summary_path, index=False,
                                                 float_format='%.9g')
    failed = sum(row['status'] != 'ok' for row in rows)
    manifest = {'command': 'sweep',
                'version': gamepl.__version__,
                'config': base.as_dict(),
                'settings': settings, 'losses': losses, 'seeds': seeds,
                'workers': args.workers,
                'dataset': {'path': args.data, 'fingerprint': dataset.fingerprint()},
                'artifacts': {'runs': args.out, 'summary': summary_path},
                'timing': {'wall_seconds': time.perf_counter() - start}}
    _write_json(manifest, root + '.manifest.json')
    _status('sweep finished: {} runs, {} failed'.format(len(rows), failed))
    return EXIT_OK


def _add_config_flags(parser):
    parser.add_argument('--config', help='file of flat key = value lines')
    parser.add_argument('--set', action='append', metavar='KEY=VALUE',
                        help='override one configuration key; may be repeated')
    group = parser.add_argument_group('configuration keys')
    for key in CONFIG_KEYS:
        if key in ('loss', 'seed'):
            continue
        group.add_argument('--' + key.replace('_', '-'), dest='cfg_' + key, metavar='VALUE')


def build_parser():
    parser = argparse.ArgumentParser(
        prog='gamepl', description='Partial-label multi-label learning as a two-player game.')
    parser.add_argument('--version', action='version', version=gamepl.__version__)
    sub = parser.add_subparsers(dest='command', metavar='command')
    sub.required = True

    gen = sub.add_parser('gen', help='generate a synthetic dataset')
    gen.add_argument('--classes', type=int, default=8)
    gen.add_argument('--dim', type=int, default=16)
    gen.add_argument('--train', type=int, default=2000)
    gen.add_argument('--test', type=int, default=1000)
    gen.add_argument('--separation', type=float, default=2.5)
    gen.add_argument('--label-noise', type=float, default=0.0)
    gen.add_argument('--mean-positives', type=float, default=2.0)
    gen.add_argument('--seed', type=int, default=0)
    gen.add_argument('--out', required=True)
    gen.set_defaults(func=cmd_gen)

    train = sub.add_parser('train', help='mask a dataset and train one model')
    train.add_argument('--data', required=True)
    train.add_argument('--setting', default='fspl', help='full, fspl, spn or sspl:<p>')
    train.add_argument('--loss', default=None, choices=gamepl.LOSSES,
                       help='training objective [default: g2netpl]')
    train.add_argument('--seed', type=int, default=None)
    train.add_argument('--out-dir', required=True)
    train.add_argument('--verbose', action='store_true')
    _add_config_flags(train)
    train.set_defaults(func=cmd_train)

    ev = sub.add_parser('eval', help='score a trained model')
    ev.add_argument('--model', required=True)
    ev.add_argument('--pseudo', help='pseudo-label checkpoint of the same run')
    ev.add_argument('--data', required=True)
    ev.add_argument('--out', help='write the metrics here instead of stdout')
    ev.set_defaults(func=cmd_eval)

    sweep = sub.add_parser('sweep', help='train over settings x losses x seeds')
    sweep.add_argument('--data', required=True)
    sweep.add_argument('--settings', required=True, help='comma-separated settings')
    sweep.add_argument('--losses', required=True, help='comma-separated losses')
    sweep.add_argument('--seeds', default='0', help='comma-separated seeds')
    sweep.add_argument('--workers', type=int, default=1)
    sweep.add_argument('--out', required=True)
    _add_config_flags(sweep)
    sweep.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None):
    """Entry point; returns the exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code
    try:
        return args.func(args)
    except DivergenceError as err:
        _status('training diverged: {}'.format(err))
        return EXIT_NUMERICAL
    except DatasetFormatError as err:
        _status('bad input file: {}'.format(err))
        return EXIT_IO
    except OSError as err:
        _status(str(err))
        return EXIT_IO
    except ValueError as err:
        _status('usage error: {}'.format(err))
        return EXIT_USAGE
