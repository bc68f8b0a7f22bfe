import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import channel_from
from ezfsim.channel import RNG_ALGORITHM, ChannelModel, ChannelSet, SystemConfig, bcu_block, generate_channels, make_rng
from ezfsim.errors import ConfigError


class TestSystemConfig:
    def test_valid(self):
        cfg = SystemConfig(256, 4, 64, 16, 4, 2)
        assert cfg.l_tot == 32 and cfg.eta == 0.125 and cfg.tau == 65

    @pytest.mark.parametrize("kwargs, needle", [
        (dict(n_t=256, n_bcu=4, m=32, n_users=16, n_r=4, n_streams=2), "P·M = N_T"),
        (dict(n_t=8, n_bcu=1, m=8, n_users=1, n_r=2, n_streams=3), "L ≤ N_R"),
        (dict(n_t=8, n_bcu=1, m=8, n_users=5, n_r=2, n_streams=2), "L_tot = K·L ≤ N_T"),
        (dict(n_t=8, n_bcu=1, m=8, n_users=1, n_r=2, n_streams=2, tau=-1), "tau"),
        (dict(n_t=0, n_bcu=1, m=0, n_users=1, n_r=2, n_streams=2), "n_t"),
    ])
    def test_violations_name_the_invariant(self, kwargs, needle):
        with pytest.raises(ConfigError, match=needle):
            SystemConfig(**kwargs)

    def test_replace_follows_partition(self):
        cfg = SystemConfig(256, 4, 64, 16, 4, 2).replace(n_bcu=8, m=32)
        assert cfg.n_t == 256
        with pytest.raises(ConfigError):
            SystemConfig(256, 4, 64, 16, 4, 2).replace(n_t=256, n_bcu=8)

    def test_round_trip_dict(self):
        cfg = SystemConfig(64, 4, 16, 8, 4, 2, tau=3)
        assert SystemConfig(**cfg.to_dict()) == cfg


class TestGenerate:
    cfg = SystemConfig(64, 4, 16, 8, 4, 2)

    def test_seeded_reproducibility(self):
        a = generate_channels(self.cfg, ChannelModel(seed=7))
        b = generate_channels(self.cfg, ChannelModel(seed=7))
        np.testing.assert_array_equal(a.h, b.h)
        c = generate_channels(self.cfg, ChannelModel(seed=8))
        assert not np.array_equal(a.h, c.h)

    def test_unit_average_power(self):
        cfg = SystemConfig(256, 4, 64, 16, 4, 2)
        h = generate_channels(cfg, ChannelModel(seed=1)).h
        assert h.size >= 16384
        # 5 standard errors of the mean of Exp(1) over N_T*K*N_R entries
        tol = max(0.02, 5 / math.sqrt(h.size))
        assert abs(np.mean(np.abs(h) ** 2) - 1.0) < tol

    def test_unit_average_power_large(self):
        cfg = SystemConfig(256, 4, 64, 64, 8, 2)
        h = generate_channels(cfg, ChannelModel(seed=2)).h
        assert h.size >= 1e5
        assert abs(np.mean(np.abs(h) ** 2) - 1.0) < 0.02

    def test_zero_spread_disparity_is_iid(self):
        a = generate_channels(self.cfg, ChannelModel("iid-rayleigh", seed=3))
        b = generate_channels(self.cfg, ChannelModel("bcu-disparity", 0.0, seed=3))
        np.testing.assert_array_equal(a.h, b.h)
        np.testing.assert_array_equal(b.gains, 1.0)

    def test_disparity_gains_have_unit_power(self):
        cfg = SystemConfig(64, 64, 1, 32, 2, 1)
        gains = np.concatenate([
            generate_channels(cfg, ChannelModel("bcu-disparity", 6.0), rng=make_rng(0, i)).gains.ravel()
            for i in range(20)])
        assert gains.size == 40960
        assert abs(np.mean(gains**2) - 1.0) < 0.05
        db = 20 * np.log10(gains)
        assert abs(np.std(db) - 6.0) < 0.1

    def test_disparity_scales_whole_blocks(self):
        ch = generate_channels(self.cfg, ChannelModel("bcu-disparity", 10.0, seed=4))
        iid = generate_channels(self.cfg, ChannelModel(seed=4))
        for k in range(self.cfg.n_users):
            for p in range(self.cfg.n_bcu):
                np.testing.assert_allclose(ch.block(k, p), ch.gains[k, p] * iid.block(k, p))

    def test_read_only(self):
        ch = generate_channels(self.cfg)
        with pytest.raises(ValueError):
            ch.h[0, 0, 0] = 1

    def test_bad_model(self):
        with pytest.raises(ConfigError):
            ChannelModel("quadriga")
        with pytest.raises(ConfigError):
            ChannelModel("bcu-disparity", -1.0)

    def test_rng_is_named(self):
        assert "Philox" in RNG_ALGORITHM
        assert isinstance(make_rng(0).bit_generator, np.random.Philox)


class TestBlocks:
    def test_single_bcu_block_is_whole_channel(self, rng):
        ch = generate_channels(SystemConfig(8, 1, 8, 2, 2, 1), rng=rng)
        np.testing.assert_array_equal(bcu_block(ch, 1, 0), ch.h[1])

    def test_slicing_by_definition(self):
        h = np.arange(8).reshape(1, 2, 4).astype(complex)
        ch = channel_from(h, n_bcu=2)
        np.testing.assert_array_equal(bcu_block(ch, 0, 1), h[0][:, 2:4])

    def test_index_errors(self, rng):
        ch = generate_channels(SystemConfig(8, 2, 4, 2, 2, 1), rng=rng)
        with pytest.raises(IndexError):
            bcu_block(ch, 0, 2)
        with pytest.raises(IndexError):
            bcu_block(ch, -1, 0)

    def test_shape_mismatch(self):
        with pytest.raises(ConfigError):
            ChannelSet(SystemConfig(8, 2, 4, 1, 2, 1), np.zeros((1, 2, 4), dtype=complex))

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**31), st.sampled_from([1, 2, 4]), st.integers(1, 4), st.integers(1, 4))
    def test_partition_and_stacking(self, seed, p, m, k):
        cfg = SystemConfig(p * m, p, m, k, 2, 1) if k <= p * m else None
        if cfg is None:
            return
        ch = generate_channels(cfg, rng=make_rng(seed))
        for kk in range(k):
            np.testing.assert_array_equal(np.hstack([ch.block(kk, pp) for pp in range(p)]), ch.h[kk])
        for pp in range(p):
            np.testing.assert_array_equal(ch.local(pp), np.vstack([ch.block(kk, pp) for kk in range(k)]))
        reassembled = np.hstack([ch.local(pp) for pp in range(p)])
        np.testing.assert_array_equal(reassembled, ch.stacked())
        np.testing.assert_array_equal(reassembled.reshape(k, 2, p * m), ch.h)
