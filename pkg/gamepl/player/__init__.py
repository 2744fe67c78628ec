from .classifier import (ClassifierModel, init_model, forward, backward, sgd_step,
                         momentum_increments, save_model, load_model, NetworkPlayer)
from .pseudo_label import (PseudoLabelStore, LambdaSchedule, lambda_at, ace_loss,
                           ace_loss_exp, ace_grad, ace_grad_exp, update_pseudo,
                           solve_pseudo_exact, PseudoLabelPlayer)
from .scheduler import SchedulerParams, progress, xi, ConfidenceScheduler
