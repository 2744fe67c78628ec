import csv
import json
import os
import numpy as np
import pytest
from gamepl import cli
from gamepl.player.classifier import ClassifierModel, save_model


GEN_ARGS = ['--classes', '4', '--dim', '5', '--train', '60', '--test', '30', '--seed', '3']


@pytest.fixture()
def data_path(tmp_path):
    path = str(tmp_path / 'data.csv')
    assert cli.main(['gen'] + GEN_ARGS + ['--out', path]) == cli.EXIT_OK
    return path


def _read(path):
    with open(path, 'rb') as f:
        return f.read()


def _train(data_path, out_dir, *extra):
    return cli.main(['train', '--data', data_path, '--out-dir', str(out_dir),
                     '--epochs', '2', '--batch-size', '20'] + list(extra))


@pytest.mark.fast
def test_gen_is_reproducible(tmp_path, data_path):
    again = str(tmp_path / 'again.csv')
    assert cli.main(['gen'] + GEN_ARGS + ['--out', again]) == cli.EXIT_OK
    assert _read(again) == _read(data_path)
    with open(data_path + '.manifest.json') as f:
        manifest = json.load(f)
    assert manifest['synthetic']['num_classes'] == 4
    assert manifest['seed'] == 3


@pytest.mark.fast
def test_usage_errors(tmp_path, data_path):
    assert cli.main(['gen'] + GEN_ARGS) == cli.EXIT_USAGE
    assert cli.main(['gen', '--classes', '0', '--out', str(tmp_path / 'x.csv')]) == cli.EXIT_USAGE
    assert cli.main(['train', '--data', data_path, '--out-dir', str(tmp_path / 'r'),
                     '--loss', 'focal']) == cli.EXIT_USAGE
    assert _train(data_path, tmp_path / 'r', '--set', 'sigma') == cli.EXIT_USAGE
    assert _train(data_path, tmp_path / 'r', '--set', 'unknown_key=1') == cli.EXIT_USAGE
    assert _train(data_path, tmp_path / 'r', '--setting', 'sspl:2') == cli.EXIT_USAGE


@pytest.mark.fast
def test_train_writes_its_artifacts(tmp_path, data_path):
    out = tmp_path / 'run'
    assert _train(data_path, out, '--seed', '1', '--stop-on-convergence', 'false') == cli.EXIT_OK
    for name in ['model.json', 'pseudo.csv', 'traces.csv', 'metrics.json', 'manifest.json']:
        assert os.path.exists(str(out / name))
    with open(str(out / 'metrics.json')) as f:
        metrics = json.load(f)
    assert set(metrics) == set(cli.METRIC_KEYS)
    assert 0. <= metrics['map_test_final'] <= 1.
    assert metrics['best_epoch'] in (1, 2)
    with open(str(out / 'manifest.json')) as f:
        manifest = json.load(f)
    assert manifest['config']['seed'] == 1
    assert manifest['config']['epochs'] == 2
    assert manifest['config']['loss'] == 'g2netpl'
    assert manifest['setting'] == 'fspl'
    assert 'wall_seconds' in manifest['timing']
    with open(str(out / 'traces.csv')) as f:
        assert len(list(csv.reader(f))) == 3


@pytest.mark.fast
def test_repeated_training_gives_identical_metrics(tmp_path, data_path):
    assert _train(data_path, tmp_path / 'a', '--seed', '4') == cli.EXIT_OK
    assert _train(data_path, tmp_path / 'b', '--seed', '4') == cli.EXIT_OK
    for name in ['metrics.json', 'traces.csv', 'pseudo.csv', 'model.json']:
        assert _read(str(tmp_path / 'a' / name)) == _read(str(tmp_path / 'b' / name))


@pytest.mark.fast
def test_baseline_training_has_no_pseudo_labels(tmp_path, data_path):
    out = tmp_path / 'an'
    assert _train(data_path, out, '--loss', 'an') == cli.EXIT_OK
    assert not os.path.exists(str(out / 'pseudo.csv'))
    with open(str(out / 'metrics.json')) as f:
        metrics = json.load(f)
    # the network's own scores on the unobserved training entries
    assert 0. <= metrics['pseudo_map'] <= 1.


@pytest.mark.fast
def test_train_exit_codes(tmp_path, data_path):
    assert _train(data_path, tmp_path / 'a', '--loss', 'bce') == cli.EXIT_USAGE
    assert _train(data_path, tmp_path / 'b', '--loss', 'bce', '--setting', 'full') == cli.EXIT_OK
    assert _train(data_path, tmp_path / 'c', '--divergence-factor', '0.01') == cli.EXIT_NUMERICAL
    assert _train(str(tmp_path / 'missing.csv'), tmp_path / 'd') == cli.EXIT_IO
    bad = tmp_path / 'bad.csv'
    bad.write_text('this is not a dataset\n')
    assert _train(str(bad), tmp_path / 'e') == cli.EXIT_IO


@pytest.mark.fast
def test_config_precedence(tmp_path):
    cfg = tmp_path / 'run.cfg'
    cfg.write_text('sigma = 0.2  # narrower mapping\nepochs = 3\nlr = 0.5\n'
                   'beta = 0.6\n\n# comment\n')
    parser = cli.build_parser()
    args = parser.parse_args(['train', '--data', 'x', '--out-dir', 'y', '--config', str(cfg),
                              '--sigma', '0.4', '--set', 'epochs=4', '--beta', '0.5',
                              '--set', 'beta=0.65', '--loss', 'an'])
    config = cli.resolve_config(args, loss=args.loss, seed=args.seed)
    assert config.sigma == 0.4
    assert config.epochs == 4
    assert config.lr == 0.5
    assert config.beta == 0.65
    assert config.loss == 'an'
    assert config.seed == 0
    assert cli.read_config_file(str(cfg))['sigma'] == '0.2'


@pytest.mark.fast
def test_eval_matches_training_metrics(tmp_path, data_path):
    out = tmp_path / 'run'
    assert _train(data_path, out) == cli.EXIT_OK
    result = str(tmp_path / 'eval.json')
    assert cli.main(['eval', '--model', str(out / 'model.json'), '--pseudo',
                     str(out / 'pseudo.csv'), '--data', data_path,
                     '--out', result]) == cli.EXIT_OK
    with open(result) as f:
        scores = json.load(f)
    with open(str(out / 'metrics.json')) as f:
        metrics = json.load(f)
    assert scores['map_test'] == metrics['map_test_final']
    assert scores['pseudo_map'] == pytest.approx(metrics['pseudo_map'])


@pytest.mark.fast
def test_eval_checks_dimensions(tmp_path, data_path, capsys):
    path = str(tmp_path / 'model.json')
    save_model(ClassifierModel('linear', 7, 4, {'W': np.zeros((4, 7)), 'b': np.zeros(4)}), path)
    assert cli.main(['eval', '--model', path, '--data', data_path]) == cli.EXIT_USAGE
    assert '7' in capsys.readouterr().err
    # a model that scores everything alike still gets a defined mAP
    save_model(ClassifierModel('linear', 5, 4, {'W': np.zeros((4, 5)), 'b': np.zeros(4)}), path)
    assert cli.main(['eval', '--model', path, '--data', data_path]) == cli.EXIT_OK
    scores = json.loads(capsys.readouterr().out)
    assert 0. < scores['map_test'] <= 1.
    assert scores['pseudo_map'] is None


def _sweep(data_path, out, *extra):
    return cli.main(['sweep', '--data', data_path, '--settings', 'fspl,sspl:0.5',
                     '--losses', 'g2netpl,an,bce', '--seeds', '0,1', '--epochs', '2',
                     '--batch-size', '30', '--out', out] + list(extra))


@pytest.mark.fast
def test_sweep(tmp_path, data_path):
    out = str(tmp_path / 'sweep.csv')
    assert _sweep(data_path, out) == cli.EXIT_OK
    with open(out) as f:
        rows = list(csv.DictReader(f))
    assert len(rows) == 2 * 3 * 2
    assert list(rows[0]) == list(cli.SWEEP_COLUMNS)
    # full-label losses fail on partial labels, without stopping the sweep
    for row in rows:
        if row['loss'] == 'bce':
            assert row['status'] == 'failed'
            assert row['map_test_final'] == ''
        else:
            assert row['status'] == 'ok'
    with open(str(tmp_path / 'sweep_summary.csv')) as f:
        summary = list(csv.DictReader(f))
    assert len(summary) == 2 * 3
    assert {'setting', 'loss', 'map_test_final_mean', 'map_test_final_std',
            'n_ok'} <= set(summary[0])
    assert os.path.exists(str(tmp_path / 'sweep.manifest.json'))


@pytest.mark.fast
def test_sweep_workers_do_not_change_results(tmp_path, data_path):
    serial = str(tmp_path / 'serial.csv')
    parallel = str(tmp_path / 'parallel.csv')
    assert _sweep(data_path, serial) == cli.EXIT_OK
    assert _sweep(data_path, parallel, '--workers', '2') == cli.EXIT_OK
    assert _read(serial) == _read(parallel)


@pytest.mark.fast
@pytest.mark.parametrize('option, value', [
    ('--losses', ','),
    ('--seeds', '0,0'),
    ('--seeds', 'a'),
    ('--settings', 'half'),
    ('--workers', '0'),
])
def test_sweep_usage_errors(tmp_path, data_path, option, value):
    args = {'--settings': 'fspl', '--losses': 'an', '--seeds': '0', '--workers': '1'}
    args[option] = value
    argv = ['sweep', '--data', data_path, '--out', str(tmp_path / 's.csv')]
    for key, item in args.items():
        argv += [key, item]
    assert cli.main(argv) == cli.EXIT_USAGE


@pytest.mark.fast
def test_sweep_runs_file_reads_back(tmp_path):
    path = str(tmp_path / 'runs.csv')
    ok = {'setting': 'sspl:0.5', 'loss': 'g2netpl', 'seed': 2, 'status': 'ok', 'error': '',
          'map_test_final': 0.5, 'map_test_best': 0.625, 'best_epoch': 3,
          'pseudo_map': 0.25, 'converged_epoch': None}
    failed = dict(ok, loss='bce', status='failed',
                  error="ValueError: loss 'bce', seed 2: labels are partial, not full")
    failed.update({key: None for key in cli.METRIC_KEYS})
    cli.export_sweep_runs([ok, failed], path)
    with open(path, newline='') as f:
        rows = list(csv.DictReader(f))
    assert list(rows[0]) == list(cli.SWEEP_COLUMNS)
    assert rows[0]['map_test_best'] == '0.625'
    assert rows[0]['best_epoch'] == '3'
    assert rows[0]['converged_epoch'] == ''
    assert rows[1]['error'] == failed['error']
    assert rows[1]['map_test_final'] == ''
