import numpy as np
import pytest
from gamepl.utils.numerics import stable_bce
from gamepl.utils.exceptions import DimensionError
from gamepl.losses.network_losses import (loss_obs, loss_unobs, loss_g2netpl, baseline_loss,
                                          evaluate_loss, expected_positives_penalty,
                                          Regularizer, BASELINES)


@pytest.fixture()
def problem():
    rng = np.random.default_rng(7)
    preds = rng.uniform(0.05, 0.95, (5, 4))
    mask = np.array([[1, -1, -1, -1],
                     [-1, 1, 0, -1],
                     [-1, -1, 1, -1],
                     [1, 0, -1, -1],
                     [-1, -1, -1, 1]])
    pseudo = rng.uniform(0., 1., (5, 4))
    xi = rng.uniform(0., 1., (5, 4))
    return preds, mask, pseudo, xi


@pytest.mark.fast
def test_game_loss_is_the_sum_of_its_parts(problem):
    preds, mask, pseudo, xi = problem
    reg = Regularizer(2., 0.5)
    report = loss_g2netpl(preds, mask, pseudo, xi, reg)
    obs, obs_grad = loss_obs(preds, mask, reg)
    unobs, unobs_grad = loss_unobs(preds, pseudo, mask, xi)
    assert report.total == pytest.approx(obs + unobs)
    assert report.obs_part == obs
    assert report.unobs_part == unobs
    np.testing.assert_allclose(report.grad, obs_grad + unobs_grad)


@pytest.mark.fast
def test_unobserved_term_only_sees_unobserved_entries(problem):
    preds, mask, pseudo, xi = problem
    unobs, grad = loss_unobs(preds, pseudo, mask, xi)
    free = mask == -1
    assert unobs == pytest.approx(np.sum(xi[free] * stable_bce(pseudo[free], preds[free])))
    np.testing.assert_array_equal(grad[~free], 0.)
    zero, zero_grad = loss_unobs(preds, pseudo, mask, np.zeros_like(xi))
    assert zero == 0.
    np.testing.assert_array_equal(zero_grad, 0.)


@pytest.mark.fast
def test_fully_observed_game_loss_equals_bce(problem):
    preds, mask, pseudo, xi = problem
    full = np.random.default_rng(0).integers(0, 2, mask.shape)
    report = evaluate_loss('g2netpl', preds, full, pseudo=pseudo, xi_weights=xi,
                           reg=Regularizer(1., 0.))
    bce = evaluate_loss('bce', preds, full)
    assert report.total == bce.total
    assert report.unobs_part == 0.
    np.testing.assert_array_equal(report.grad, bce.grad)


@pytest.mark.fast
def test_full_label_losses_reject_partial_masks(problem):
    preds, mask, pseudo, xi = problem
    for kind in ['bce', 'bce-ls']:
        with pytest.raises(ValueError):
            baseline_loss(kind, preds, mask)
    with pytest.raises(ValueError):
        baseline_loss('focal', preds, mask)


@pytest.mark.fast
def test_assume_negative_family(problem):
    preds, mask, pseudo, xi = problem
    targets = (mask == 1).astype(float)
    an, an_grad = baseline_loss('an', preds, mask)
    assert an == pytest.approx(np.sum(stable_bce(targets, preds)))
    eps = 0.1
    ls, ls_grad = baseline_loss('an-ls', preds, mask, ls_epsilon=eps)
    smoothed = np.where(targets == 1., 1. - eps, eps)
    assert ls == pytest.approx(np.sum(stable_bce(smoothed, preds)))
    wan, wan_grad = baseline_loss('wan', preds, mask)
    weights = np.where(mask == 1, 1., 1. / 3.)
    assert wan == pytest.approx(np.sum(weights * stable_bce(targets, preds)))
    np.testing.assert_allclose(wan_grad, weights * an_grad)


@pytest.mark.fast
def test_expected_positive_regularization(problem):
    preds, mask, pseudo, xi = problem
    reg = Regularizer(1., 0.2)
    epr, grad = baseline_loss('epr', preds, mask, reg=reg)
    obs, obs_grad = loss_obs(preds, mask, reg)
    assert epr == obs
    penalty, penalty_grad = expected_positives_penalty(preds, reg)
    dev = preds.mean(axis=1) - 0.25
    assert penalty == pytest.approx(0.2 * np.sum(dev**2))
    observed = mask != -1
    targets = (mask == 1).astype(float)
    assert obs == pytest.approx(np.sum(stable_bce(targets[observed], preds[observed]))
                                + penalty)


@pytest.mark.fast
def test_every_loss_reports_total_as_sum(problem):
    preds, mask, pseudo, xi = problem
    full = (mask == 1).astype(int)
    for kind in BASELINES:
        m = full if kind in ('bce', 'bce-ls') else mask
        report = evaluate_loss(kind, preds, m, pseudo=pseudo, xi_weights=xi)
        assert report.total == report.obs_part + report.unobs_part
        assert report.grad.shape == preds.shape
        assert np.isfinite(report.total)


@pytest.mark.fast
def test_loss_shape_checks(problem):
    preds, mask, pseudo, xi = problem
    with pytest.raises(DimensionError):
        loss_obs(preds[:3], mask)
    with pytest.raises(DimensionError):
        loss_unobs(preds, pseudo[:, :2], mask, xi)


@pytest.mark.fast
def test_losses_are_finite_for_saturated_predictions():
    preds = np.array([[0., 1.], [1., 0.]])
    mask = np.array([[1, 0], [0, 1]])
    for kind in BASELINES:
        total, grad = baseline_loss(kind, preds, mask)
        assert np.isfinite(total)
        assert np.all(np.isfinite(grad))
