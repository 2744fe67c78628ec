from .network_losses import (loss_obs, loss_unobs, loss_g2netpl, baseline_loss,
                             evaluate_loss, LossReport, Regularizer,
                             BASELINES, LOSSES)
