"""
One clip through the network
============================

Follow a toy clip (8 frames of 32x64) through the encoder, the pyramid and
the decoder, printing the tensor shapes at every stage.
"""

# %%
import numpy as np

from tsfp import pyramid
from tsfp.config import toy_model_config
from tsfp.encoder import encoder_forward, receptive_field
from tsfp.model import TSFPNet
from tsfp.tensor import Tensor

config = toy_model_config()
model = TSFPNet.init(config, seed=0)
clip = Tensor(np.random.default_rng(0).standard_normal((3, 8, 32, 64)))

# %%
# Four encoder levels, shallow to deep, as (C, T, H, W).
feats = encoder_forward(clip, model.params, config.encoder)
for i, f in enumerate(feats, start=1):
    print(f"level {i}: {f.shape}  receptive field {receptive_field(config.encoder, i)}")

# %%
# Laterals bring every level to the pyramid width; the top-down pass adds
# the upsampled deeper level into each shallower one.
pyr = pyramid.build_pyramid(feats, model.params, config)
print("pyramid:", [p.shape for p in pyr])

# %%
# Each level has its own decode branch; the branches meet at
# (C_p, T/4, H/4, W/4) and are summed.
for i, plan in pyramid.branch_plans(config).items():
    print(f"branch {i}: {plan.n_blocks} blocks, {plan.spatial_doublings} spatial doublings")
fused = pyramid.hierarchical_decode(pyr, model.params, config)
print("fused:", fused.shape)

# %%
# The head collapses time, projects to one channel and upsamples x4.
S = model.head(fused)
print("saliency map:", S.shape, f"range ({S.data.min():.3f}, {S.data.max():.3f})")

# %%
# The two ablation variants share the same encoder.
for variant in ("full", "only_multi_level", "only_final_level"):
    m = TSFPNet.init(config.with_variant(variant), seed=0)
    print(f"{variant:<18} {m.parameter_count():>8} parameters, map {m(clip).shape}")
