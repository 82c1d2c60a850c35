"""Minimal reverse-mode differentiation engine and the layers built on it."""
from .layers import (Affine, Dense, Dropout, FeatureAttention, Layer, MinMax, Network, Sort,
                     TemporalAttention, attention_weights, dense_forward, dropout_forward,
                     feature_attention, glorot_uniform, temporal_attention)
from .losses import bce_with_logits, l1_loss, mse_loss, softmax_cross_entropy
from .optim import (EarlyStopping, History, OptimizerState, PlateauScheduler, TrainConfig,
                    early_stop_check, evaluate_loss, fit, lr_on_plateau, sgd_step)
from .spec import AttentionSpec, DenseSpec, DropoutSpec, NetworkSpec, build_network, mlp_spec
from .tensor import Parameter, Tensor, no_grad

__all__ = [
    "Affine", "AttentionSpec", "Dense", "DenseSpec", "Dropout", "DropoutSpec", "EarlyStopping",
    "FeatureAttention", "History", "Layer", "MinMax", "Network", "NetworkSpec", "OptimizerState",
    "Parameter", "PlateauScheduler", "Sort", "TemporalAttention", "Tensor", "TrainConfig",
    "attention_weights", "bce_with_logits", "build_network", "dense_forward", "dropout_forward",
    "early_stop_check", "evaluate_loss", "feature_attention", "fit", "glorot_uniform",
    "l1_loss", "lr_on_plateau", "mlp_spec", "mse_loss", "no_grad", "sgd_step",
    "softmax_cross_entropy", "temporal_attention",
]
