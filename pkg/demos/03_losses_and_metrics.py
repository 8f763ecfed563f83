"""
Losses and evaluation metrics on tiny maps
==========================================

Small hand-checkable cases for the training losses and the benchmark
metrics.
"""

# %%
import math

import numpy as np

from tsfp.losses import loss_cc, loss_kl, loss_nss, loss_total
from tsfp.metrics import metric_auc_judd, metric_cc, metric_nss, metric_sauc, metric_sim
from tsfp.tensor import Tensor

# %%
# KL between a uniform prediction and a one-hot density is ln 4.
print("KL uniform vs one-hot:", loss_kl(Tensor([0.5] * 4), [0, 0, 1, 0]).item(), "ln 4 =", math.log(4))

# %%
# CC is -1 for any positive affine copy of the target, +1 when reversed.
G = np.array([0.4, 0.2, 0.3, 0.1])
print("CC loss, affine copy:", loss_cc(Tensor(0.5 * G + 0.1), G).item())
print("CC loss, reversed:   ", loss_cc(Tensor([0.1, 0.3, 0.2, 0.4]), G).item())

# %%
# NSS standardises the map and averages it over fixated pixels.
print("NSS loss [0,1] / [0,1]:", loss_nss(Tensor([0.0, 1.0]), [0, 1]).item())
flat = loss_nss(Tensor([0.3] * 4), [1, 0, 0, 0])
print("constant map:", flat.item(), flat.flags)

# %%
# The combined loss weights CC by 0.5 and NSS by 0.1.
S = np.array([0.2, 0.4, 0.9, 0.1])
print("total:", loss_total(Tensor(S), [0, 0, 1, 0], S).item())

# %%
# Metrics, higher is better.
rng = np.random.default_rng(1)
S = rng.random((4, 4))
F = S >= np.sort(S.ravel())[-3]
others = [rng.random((4, 4)) < 0.3]
print("NSS", metric_nss(S, F), "CC", metric_cc(S, S), "SIM", metric_sim(S, S ** 2))
print("AUC-J", metric_auc_judd(S, F), "s-AUC", metric_sauc(S, F, others))
print("AUC-J of a constant map:", metric_auc_judd(np.ones((4, 4)), F))
