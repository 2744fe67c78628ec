from .game import (G2NetPL, BaselineModel, TrainConfig, build_model, train,
                   nash_residual)
