"""NumPy LSTM building blocks trained by backpropagation through time."""

from .activations import ACTIVATIONS, activation, activation_backward, sigmoid, softmax
from .losses import LOSSES, compute_loss
from .lstm import (
    LstmCellParams,
    bidirectional_backward,
    bidirectional_forward,
    lstm_cell_backward,
    lstm_cell_forward,
    lstm_layer_backward,
    lstm_layer_forward,
)
from .model import VARIANTS, ForecastModel, ModelSpec, init_params, model_backward, model_forward
from .optim import OPTIMIZERS, SGD, Adagrad, Adam, RMSprop, make_optimizer, optimizer_step
from .train import TrainConfig, split_rows, train
