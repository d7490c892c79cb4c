from .losses import (
    LossConfig,
    in_range_fraction,
    loss_gtheta_rate,
    loss_rate,
    loss_voltage,
    target_spikes_per_instance,
)
from .models import (
    TrainableLsnn,
    TrainableRelNet,
    bptt_gradients,
    lsnn_loss_and_grads,
    relnet_loss_and_grads,
)
from .optim import Adam, SgdMomentum
from .rewiring import SparseWeights, make_sparse, rewire_sparse
from .surrogate import SurrogateParams, pseudo_derivative, relaxed_spike
from .teacher import pretrain_teacher_matching

__all__ = [
    "Adam",
    "LossConfig",
    "SgdMomentum",
    "SparseWeights",
    "SurrogateParams",
    "TrainableLsnn",
    "TrainableRelNet",
    "bptt_gradients",
    "in_range_fraction",
    "loss_gtheta_rate",
    "loss_rate",
    "loss_voltage",
    "lsnn_loss_and_grads",
    "make_sparse",
    "pretrain_teacher_matching",
    "pseudo_derivative",
    "relaxed_spike",
    "relnet_loss_and_grads",
    "rewire_sparse",
    "target_spikes_per_instance",
]
