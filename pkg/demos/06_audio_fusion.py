"""
Audio-visual attention
======================

The audio branch gates the fused visual features with an attention map in
(0, 1) and keeps a residual path, so audio can only rescale them by a
factor between 1 and 2.
"""

# %%
import numpy as np

from tsfp.config import AudioConfig, toy_model_config
from tsfp.model import TSFPNet
from tsfp.tensor import Tensor

model = TSFPNet.init(toy_model_config(audio=AudioConfig()), seed=0)
rng = np.random.default_rng(0)
clip = Tensor(rng.standard_normal((3, 8, 32, 64)))
wave = rng.uniform(-1, 1, 4267)  # 8 frames at 30 fps, 16 kHz

visual = model.features(clip).data
fused = model.features(clip, audio=wave).data
ratio = fused[visual != 0] / visual[visual != 0]
print(f"fused / visual in [{ratio.min():.3f}, {ratio.max():.3f}]")

# %%
# With the bilinear weight at zero every attention value is 0.5, so audio
# scales the visual features by exactly 1.5.
model.params["fuse.W"].data[:] = 0
fused = model.features(clip, audio=wave).data
print("max |fused - 1.5 visual| =", np.abs(fused - 1.5 * visual).max())
