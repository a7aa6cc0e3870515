from .checkpoint import load_network, save_network
from .loss import cross_entropy, softmax
from .models import (
    LSTMClassifier,
    LSTMFCNClassifier,
    LstmConfig,
    LstmFcnConfig,
    Network,
    build_network,
    init_lstm_fcn_params,
    init_lstm_params,
    lstm_fcn_forward,
    lstm_forward,
)
from .optim import AdamW, adamw_step

__all__ = [
    "AdamW", "LSTMClassifier", "LSTMFCNClassifier", "LstmConfig", "LstmFcnConfig", "Network",
    "adamw_step", "build_network", "cross_entropy", "init_lstm_fcn_params", "init_lstm_params",
    "load_network", "lstm_fcn_forward", "lstm_forward", "save_network", "softmax",
]
