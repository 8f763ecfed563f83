import numpy as np
import pytest

from tsfp import pyramid
from tsfp.config import ConfigError, EncoderConfig, toy_model_config
from tsfp.functional import upsample_trilinear
from tsfp.model import TSFPNet, model_forward
from tsfp.tensor import Tensor, mean, tsum

VARIANTS = ("full", "only_multi_level", "only_final_level")


def _feats(rng, config, scale=1.0):
    from tsfp.encoder import level_shapes

    dims = (config.clip_len, config.height, config.width)
    return [Tensor(scale * rng.standard_normal(s)) for s in level_shapes(config.encoder, dims)]


def _zero(weights, prefixes):
    for k, t in weights.items():
        if any(k.startswith(p + ".") for p in prefixes):
            t.data = np.zeros_like(t.data)


class TestPyramid:
    def test_zero_features_zero_pyramid(self, toy_model, toy_config, rng):
        feats = [Tensor(np.zeros(f.shape)) for f in _feats(rng, toy_config)]
        assert all(np.all(p.data == 0) for p in pyramid.build_pyramid(feats, toy_model.params, toy_config))

    def test_shapes(self, toy_model, toy_config, rng):
        feats = _feats(rng, toy_config)
        pyr = pyramid.build_pyramid(feats, toy_model.params, toy_config)
        assert [p.shape for p in pyr] == [(32,) + f.shape[1:] for f in feats]

    def test_constant_deepest_level_propagates(self, toy_model, toy_config, rng):
        w = toy_model.params
        _zero(w, ["pyr.lateral1", "pyr.lateral2", "pyr.lateral3"])
        feats = _feats(rng, toy_config)
        feats[3] = Tensor(np.full(feats[3].shape, 0.7))
        pyr = pyramid.build_pyramid(feats, w, toy_config)
        deep = pyr[3].data
        for p in pyr:
            for c in range(p.shape[0]):
                np.testing.assert_allclose(p.data[c], deep[c].flat[0], rtol=1e-6)

    def test_top_down_identity(self, toy_model, toy_config, rng):
        w = toy_model.params
        _zero(w, ["pyr.lateral1", "pyr.lateral2", "pyr.lateral3"])
        feats = _feats(rng, toy_config)
        pyr = pyramid.build_pyramid(feats, w, toy_config)
        chain = pyr[3]
        for i in (2, 1, 0):
            chain = upsample_trilinear(chain, pyr[i].shape[1:])
            np.testing.assert_allclose(pyr[i].data, chain.data, atol=1e-6)

    def test_needs_all_levels(self, toy_config, rng):
        cfg = toy_config.with_variant("only_final_level")
        model = TSFPNet.init(cfg, 0)
        with pytest.raises(ConfigError):
            pyramid.build_pyramid(_feats(rng, cfg), model.params, cfg)


class TestDecode:
    def test_plans(self, toy_config):
        plans = pyramid.branch_plans(toy_config)
        # level 1 is at T, level 4 at T/4 = T_d, spatial 1x..8x
        assert [plans[i].spatial_doublings for i in (1, 2, 3, 4)] == [0, 1, 2, 3]
        assert [plans[i].time_steps for i in (1, 2, 3, 4)] == [2, 1, 0, 0]
        assert [plans[i].n_blocks for i in (1, 2, 3, 4)] == [2, 1, 2, 3]

    def test_output_shape(self, toy_model, toy_config, rng):
        feats = _feats(rng, toy_config)
        out = pyramid.hierarchical_decode(pyramid.build_pyramid(feats, toy_model.params, toy_config),
                                          toy_model.params, toy_config)
        assert out.shape == (32, 2, 8, 16)

    def test_zero_pyramid_zero_output(self, toy_model, toy_config, rng):
        pyr = [Tensor(np.zeros((32,) + f.shape[1:])) for f in _feats(rng, toy_config)]
        out = pyramid.hierarchical_decode(pyr, toy_model.params, toy_config)
        assert np.all(out.data == 0)

    def test_disabling_branches_leaves_one(self, toy_model, toy_config, rng):
        w = toy_model.params
        pyr = [Tensor(p.data) for p in pyramid.build_pyramid(_feats(rng, toy_config), w, toy_config)]
        alone = pyramid.decode_branch(pyr[2], 3, w, toy_config)
        for i in (1, 2, 4):
            _zero(w, [f"pyr.branch{i}"])
        out = pyramid.hierarchical_decode(pyr, w, toy_config)
        np.testing.assert_array_equal(out.data, alone.data)

    def test_unreachable_target(self):
        with pytest.raises(ConfigError):
            toy_model_config(encoder=EncoderConfig(stage_temporal_stride=(1, 3, 1, 1)), clip_len=12)


class TestHead:
    def test_zero_everything_gives_half(self, toy_model, toy_config):
        _zero(toy_model.params, ["head"])
        S = pyramid.output_head(Tensor(np.zeros((32, 2, 8, 16))), toy_model.params, toy_config)
        assert S.shape == (32, 64) and np.all(S.data == 0.5)

    def test_range(self, toy_model, toy_config, rng):
        S = pyramid.output_head(Tensor(5 * rng.standard_normal((32, 2, 8, 16))), toy_model.params, toy_config)
        assert S.shape == (32, 64) and np.all((S.data > 0) & (S.data < 1))

    def test_head_blocks(self, toy_config):
        assert pyramid.head_blocks(toy_config) == 1
        assert pyramid.head_blocks(toy_config.__class__()) == 3


class TestModel:
    @pytest.mark.parametrize("variant", VARIANTS)
    def test_forward_shape_and_range(self, toy_config, rng, variant):
        model = TSFPNet.init(toy_config.with_variant(variant), 0)
        S = model_forward(Tensor(rng.standard_normal((3, 8, 32, 64))), model)
        assert S.shape == (32, 64)
        assert np.all((S.data > 0) & (S.data < 1)) and 0 < S.data.sum() < np.inf

    def test_deterministic(self, toy_model, rng):
        clip = Tensor(rng.standard_normal((3, 8, 32, 64)))
        np.testing.assert_array_equal(toy_model(clip).data, toy_model(clip).data)

    def test_seeded_init(self, toy_config, rng):
        clip = Tensor(rng.standard_normal((3, 8, 32, 64)))
        a, b = TSFPNet.init(toy_config, 5), TSFPNet.init(toy_config, 5)
        np.testing.assert_array_equal(a(clip).data, b(clip).data)

    def test_parameter_counts(self, toy_config):
        counts = {v: TSFPNet.init(toy_config.with_variant(v), 0).parameter_count() for v in VARIANTS}
        assert counts["only_final_level"] < counts["only_multi_level"] == counts["full"]

    def test_only_final_has_no_shallow_laterals(self, toy_config):
        names = set(TSFPNet.init(toy_config.with_variant("only_final_level"), 0).params)
        assert not any(n.startswith(("pyr.lateral1", "pyr.lateral2", "pyr.lateral3")) for n in names)

    def test_multi_level_differs_from_full(self, toy_model, rng):
        clip = Tensor(rng.standard_normal((3, 8, 32, 64)))
        a = toy_model(clip).data
        b = toy_model(clip, variant="only_multi_level").data
        assert not np.array_equal(a, b)

    def test_variant_override_needs_weights(self, toy_config, rng):
        model = TSFPNet.init(toy_config.with_variant("only_final_level"), 0)
        with pytest.raises(ValueError):
            model(Tensor(rng.standard_normal((3, 8, 32, 64))), variant="full")

    @pytest.mark.parametrize("variant", VARIANTS)
    def test_gradient_reaches_every_parameter(self, toy_config, rng, variant):
        model = TSFPNet.init(toy_config.with_variant(variant), 0)
        mean(model(Tensor(rng.standard_normal((3, 8, 32, 64))))).backward()
        dead = [k for k, t in model.params.items() if t.grad is None or not np.any(t.grad)]
        assert dead == []

    def test_save_load_round_trip(self, toy_model, rng, tmp_path):
        toy_model.save(tmp_path / "m.tsfpw")
        loaded = TSFPNet.load(tmp_path / "m.tsfpw")
        assert loaded.config == toy_model.config
        clip = Tensor(rng.standard_normal((3, 8, 32, 64)))
        np.testing.assert_array_equal(loaded(clip).data, toy_model(clip).data)

    def test_batched_forward(self, toy_model, rng):
        clips = rng.standard_normal((2, 3, 8, 32, 64)).astype(np.float32)
        out = toy_model(Tensor(clips))
        assert out.shape == (2, 32, 64)
        np.testing.assert_allclose(out.data[1], toy_model(Tensor(clips[1])).data, atol=1e-6)
        assert float(tsum(out).data) > 0
