"""
Sliding-window prediction
=========================

Every frame gets a map from a T-frame window that ends on it.  The first
T-1 frames borrow future frames played backwards.
"""

# %%
import numpy as np

from tsfp.config import toy_model_config
from tsfp.inference import predict_video, window_indices
from tsfp.model import TSFPNet

T = 8
for L in (1, 4, 15):
    print(f"L={L}")
    for k in sorted({0, min(1, L - 1), min(T - 1, L - 1), L - 1}):
        print(f"  frame {k}: window {window_indices(k, L, T)}")

# %%
# Output count always equals the input count, and a frame's map never
# depends on later frames once the window is full.
model = TSFPNet.init(toy_model_config(), seed=0)
rng = np.random.default_rng(0)
frames = [rng.standard_normal((3, 32, 64)).astype(np.float32) for _ in range(12)]
maps = predict_video(model, frames, T)
print(len(frames), "frames ->", len(maps), "maps")

changed = predict_video(model, frames[:10] + [np.zeros_like(f) for f in frames[10:]], T)
print("frame 9 unchanged after editing frames 10-11:", np.array_equal(maps[9], changed[9]))
