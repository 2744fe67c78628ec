import numpy as np
import pytest
from gamepl.utils import constants as const
from gamepl.utils.numerics import MappingSpec
from gamepl.utils.exceptions import DimensionError, DatasetFormatError
from gamepl.losses.network_losses import evaluate_loss, Regularizer, LOSSES
from gamepl.player.pseudo_label import PseudoLabelStore
from gamepl.player.classifier import (init_model, forward, backward, sgd_step,
                                      momentum_increments, save_model, load_model,
                                      ClassifierModel, NetworkPlayer)


def _random_problem(rng, arch, loss):
    input_dim = int(rng.integers(2, 6))
    L = int(rng.integers(2, 5))
    batch = int(rng.integers(1, 7))
    model = init_model(arch, input_dim, L, seed=int(rng.integers(1000)),
                       hidden_dim=int(rng.integers(2, 6)))
    for value in model.params.values():
        value += 0.1 * rng.standard_normal(value.shape)
    X = rng.standard_normal((batch, input_dim))
    if loss in ('bce', 'bce-ls'):
        mask = rng.integers(0, 2, (batch, L))
    else:
        mask = rng.integers(-1, 2, (batch, L))
    pseudo = rng.uniform(0., 1., (batch, L))
    xi = rng.uniform(0., 1., (batch, L))
    return model, X, mask, pseudo, xi


def _total(model, X, mask, pseudo, xi, loss):
    return evaluate_loss(loss, forward(model, X), mask, pseudo=pseudo, xi_weights=xi,
                         reg=Regularizer(1.5, 0.3)).total


@pytest.mark.fast
def test_init_is_deterministic():
    a = init_model('mlp', 5, 3, seed=11, hidden_dim=4)
    b = init_model('mlp', 5, 3, seed=11, hidden_dim=4)
    for name in a.param_names:
        np.testing.assert_array_equal(a.params[name], b.params[name])
    assert a.num_params == 4 * 5 + 4 + 3 * 4 + 3
    bound = 1. / np.sqrt(5)
    assert np.all(np.abs(a.params['W_hidden']) <= bound)
    np.testing.assert_array_equal(a.params['b'], 0.)
    with pytest.raises(ValueError):
        init_model('linear', 0, 3)
    with pytest.raises(ValueError):
        init_model('cnn', 5, 3)


@pytest.mark.fast
def test_forward_shapes_and_range():
    model = init_model('linear', 4, 3, seed=0)
    preds = forward(model, np.random.default_rng(0).standard_normal((7, 4)))
    assert preds.shape == (7, 3)
    assert np.all((preds > 0.) & (preds < 1.))
    with pytest.raises(DimensionError):
        forward(model, np.zeros((2, 5)))
    with pytest.raises(DimensionError):
        forward(model, np.zeros(4))


@pytest.mark.fast
@pytest.mark.parametrize('loss', LOSSES)
def test_backprop_matches_finite_differences(loss):
    rng = np.random.default_rng(2024)
    h = 1e-6
    for n in range(20):
        arch = 'linear' if n % 2 else 'mlp'
        model, X, mask, pseudo, xi = _random_problem(rng, arch, loss)
        preds = forward(model, X)
        report = evaluate_loss(loss, preds, mask, pseudo=pseudo, xi_weights=xi,
                               reg=Regularizer(1.5, 0.3))
        grads = backward(model, X, report.grad)
        for name in model.param_names:
            param = model.params[name]
            fd = np.zeros_like(param)
            for index in np.ndindex(*param.shape):
                old = param[index]
                param[index] = old + h
                up = _total(model, X, mask, pseudo, xi, loss)
                param[index] = old - h
                down = _total(model, X, mask, pseudo, xi, loss)
                param[index] = old
                fd[index] = (up - down) / (2. * h)
            np.testing.assert_allclose(grads[name], fd, rtol=1e-4, atol=1e-6)


@pytest.mark.fast
def test_input_gradient():
    rng = np.random.default_rng(5)
    model = init_model('mlp', 3, 2, seed=1, hidden_dim=4)
    X = rng.standard_normal((2, 3))
    upstream = rng.standard_normal((2, 2))
    grads = backward(model, X, upstream)
    h = 1e-6
    for index in np.ndindex(*X.shape):
        Xp, Xm = X.copy(), X.copy()
        Xp[index] += h
        Xm[index] -= h
        fd = np.sum(upstream * (forward(model, Xp) - forward(model, Xm))) / (2. * h)
        assert grads['input'][index] == pytest.approx(fd, rel=1e-5, abs=1e-8)


@pytest.mark.fast
def test_sgd_step_with_momentum():
    model = init_model('linear', 2, 1, seed=0)
    W0 = model.params['W'].copy()
    grads = {'W': np.ones((1, 2)), 'b': np.ones(1)}
    sgd_step(model, grads, lr=0.1, momentum=0.5)
    np.testing.assert_allclose(model.params['W'], W0 - 0.1)
    sgd_step(model, grads, lr=0.1, momentum=0.5)
    np.testing.assert_allclose(model.params['W'], W0 - 0.1 - 0.15)
    with pytest.raises(ValueError):
        sgd_step(model, grads, lr=-1.)


@pytest.mark.fast
def test_frozen_parameters_keep_their_values():
    model = init_model('mlp', 3, 2, seed=0, hidden_dim=2)
    grads = {name: np.ones_like(value) for name, value in model.params.items()}
    inc = momentum_increments(model, grads, 0.1, frozen=('W_hidden', 'b_hidden'))
    np.testing.assert_array_equal(inc['W_hidden'], 0.)
    np.testing.assert_array_equal(model.velocity['W_hidden'], 0.)
    np.testing.assert_allclose(inc['W'], -0.1)


@pytest.mark.fast
@pytest.mark.parametrize('arch', ['linear', 'mlp'])
def test_checkpoint_roundtrip(tmp_path, arch):
    model = init_model(arch, 4, 3, seed=9, hidden_dim=5)
    path = str(tmp_path / 'model.json')
    save_model(model, path)
    loaded = load_model(path)
    assert loaded.arch == arch
    for name in model.param_names:
        np.testing.assert_array_equal(loaded.params[name], model.params[name])


@pytest.mark.fast
def test_checkpoint_errors(tmp_path):
    path = tmp_path / 'model.json'
    path.write_text('{"format": "something-else"}')
    with pytest.raises(DatasetFormatError):
        load_model(str(path))
    path.write_text('not json')
    with pytest.raises(DatasetFormatError):
        load_model(str(path))
    with pytest.raises(DimensionError):
        ClassifierModel('linear', 2, 2, {'W': np.zeros((2, 3)), 'b': np.zeros(2)})


@pytest.mark.fast
def test_network_player_step():
    rng = np.random.default_rng(0)
    X = rng.standard_normal((6, 3))
    mask = np.array([[1, -1]] * 3 + [[-1, 1]] * 3)
    model = init_model('linear', 3, 2, seed=0)
    store = PseudoLabelStore.from_mask(mask, MappingSpec())
    xi = np.ones(mask.shape)
    proc = NetworkPlayer(model, X, mask, store=store, xi=xi, lr=0.5, momentum=0.,
                         reg=Regularizer(1., 0.))
    assert proc.time_type == 'explicit'
    assert proc.state['W'] is model.params['W']
    W0 = model.params['W'].copy()
    proc.batch = np.array([0, 1, 2])
    report = proc.objective(forward(model, X[:3]), proc.batch)
    grads = backward(model, X[:3], report.grad / 3.)
    proc.step_forward()
    np.testing.assert_allclose(model.params['W'], W0 - 0.5 * grads['W'])
    assert proc.batch_loss == pytest.approx(report.total)
    with pytest.raises(ValueError):
        NetworkPlayer(model, X, mask, loss='g2netpl')


@pytest.mark.fast
def test_learning_rate_decays_per_epoch():
    X = np.ones((2, 1))
    mask = np.array([[1], [0]])
    proc = NetworkPlayer(init_model('linear', 1, 1), X, mask, loss='an', lr=0.1,
                         lr_decay=0.5, steps_per_epoch=1)
    proc.step_forward()
    assert proc.learning_rate == 0.1
    proc.step_forward()
    assert proc.learning_rate == 0.05
