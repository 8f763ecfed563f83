"""
Overfitting a moving blob
=========================

Train the toy network on eight synthetic videos where the ground truth
follows a drifting bright blob.  Takes about a minute on a laptop CPU.
"""

# %%
import numpy as np

from tsfp.config import TrainConfig, toy_model_config
from tsfp.data import sample_clip, synthetic_dataset
from tsfp.metrics import metric_nss
from tsfp.model import TSFPNet
from tsfp.tensor import Tensor
from tsfp.train import train

train_set = synthetic_dataset(8, 8, 32, 64, seed=1)
val_set = synthetic_dataset(2, 8, 32, 64, seed=2)
model = TSFPNet.init(toy_model_config(), seed=0)

# %%
# Eight clips per update, accumulated over two micro-batches of four.
cfg = TrainConfig(clip_len=8, batch_videos=8, micro_batch=4, accumulation_steps=2, lr=1e-3,
                  lr_milestones=(), epochs=10_000, max_steps=200, val_frames_per_video=4)
result = train(model, train_set, val_set, cfg)
for line in result.log[:2] + ["..."] + result.log[-2:]:
    print(line)

# %%
print(f"loss {result.loss_history[0]:.3f} -> {result.loss_history[-1]:.3f}")
print(f"best validation NSS {result.best_val_nss:.3f} at epoch {result.best_epoch}")

rng = np.random.default_rng(0)
samples = [sample_clip(train_set, v, rng, 8) for v in train_set.videos]
nss = [metric_nss(model(Tensor(s.clip)).data, s.fixation) for s in samples]
print(f"training-set NSS {np.mean(nss):.2f}")
