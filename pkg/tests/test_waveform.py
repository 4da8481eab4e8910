import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from isac_tsde.core import SystemConfig, dft
from isac_tsde.waveform import (
    SubcarrierMap,
    chu_symbols,
    equalize_despread,
    map_subcarriers,
    qpsk_symbols,
    rx_front_end,
    sensing_snapshot,
    spread,
    strip_cp,
    to_time_with_cp,
)


class TestSubcarrierMap:
    def test_indices(self):
        np.testing.assert_array_equal(SubcarrierMap(4, 5).indices(), [0, 4, 8, 12, 16])

    def test_localized_flag(self, cfg):
        assert SubcarrierMap.for_config(1, cfg).localized
        assert not SubcarrierMap.for_config(2, cfg).localized

    def test_largest_index_in_range(self, cfg):
        for eta in range(1, cfg.eta_max + 1):
            assert SubcarrierMap.for_config(eta, cfg).indices()[-1] < cfg.K

    @pytest.mark.parametrize("eta", [0, 33])
    def test_rejects_bad_eta(self, cfg, eta):
        with pytest.raises(ValueError):
            SubcarrierMap.for_config(eta, cfg)

    def test_rejects_wrong_k1(self, cfg):
        with pytest.raises(ValueError, match="K1=32"):
            SubcarrierMap(1, 16).check(cfg)


class TestSymbols:
    def test_qpsk_constellation(self, rng):
        s = qpsk_symbols(1000, rng)
        np.testing.assert_allclose(np.abs(s), 1.0)
        assert set(np.round(np.angle(s, deg=True))) <= {45.0, 135.0, -45.0, -135.0}

    @pytest.mark.parametrize("n", [15, 16, 32, 1024])
    def test_chu_flat_spectrum(self, n, rng):
        for _ in range(5):
            s = chu_symbols(n, rng)
            np.testing.assert_allclose(np.abs(s), 1.0, atol=1e-12)
            np.testing.assert_allclose(np.abs(dft(s, n)), np.sqrt(n), rtol=1e-9)

    def test_chu_blocks_vary(self, rng):
        assert not np.allclose(chu_symbols(32, rng), chu_symbols(32, rng))


class TestChain:
    def test_cp_is_tail_copy(self, cfg, rng):
        X = np.zeros(cfg.K, dtype=complex)
        X[:cfg.K1] = qpsk_symbols(cfg.K1, rng)
        tx = to_time_with_cp(X, cfg)
        assert tx.shape == (cfg.K + cfg.n_cp,)
        np.testing.assert_allclose(tx[:cfg.n_cp], tx[-cfg.n_cp:])

    def test_unused_subcarriers_are_zero(self, cfg, rng):
        X_tilde = map_subcarriers(spread(qpsk_symbols(cfg.K1, rng), cfg),
                                  SubcarrierMap.for_config(4, cfg), cfg)
        mask = np.ones(cfg.K, dtype=bool)
        mask[::4][:cfg.K1] = False
        assert np.all(X_tilde[mask] == 0)

    @pytest.mark.parametrize("eta", range(1, 33))
    def test_identity_loopback(self, cfg, eta):
        rng = np.random.default_rng(eta)
        s = qpsk_symbols(cfg.K1, rng)
        smap = SubcarrierMap.for_config(eta, cfg)
        X = spread(s, cfg)
        Y = rx_front_end(strip_cp(to_time_with_cp(map_subcarriers(X, smap, cfg), cfg), cfg),
                         smap, cfg)
        np.testing.assert_allclose(Y, X, atol=1e-10)
        np.testing.assert_allclose(equalize_despread(Y, np.ones(cfg.K1), cfg), s, atol=1e-10)

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.sampled_from([(64, 8, 16), (128, 16, 16), (256, 4, 32)]))
    def test_loopback_property(self, seed, dims):
        cfg = SystemConfig(30e3, *dims)
        rng = np.random.default_rng(seed)
        eta = int(rng.integers(1, cfg.eta_max + 1))
        smap = SubcarrierMap.for_config(eta, cfg)
        s = qpsk_symbols(cfg.K1, rng)
        Y = rx_front_end(strip_cp(to_time_with_cp(map_subcarriers(spread(s, cfg), smap, cfg),
                                                  cfg), cfg), smap, cfg)
        np.testing.assert_allclose(equalize_despread(Y, np.ones(cfg.K1), cfg), s, atol=1e-10)

    def test_equalizer_undoes_channel(self, cfg, rng):
        s = qpsk_symbols(cfg.K1, rng)
        H = rng.standard_normal(cfg.K1) + 1j * rng.standard_normal(cfg.K1)
        np.testing.assert_allclose(equalize_despread(H * spread(s, cfg), H, cfg), s, atol=1e-10)

    def test_equalizer_zero_channel(self, cfg):
        H = np.ones(cfg.K1)
        H[3] = 0
        with pytest.raises(ValueError, match="zero channel"):
            equalize_despread(np.ones(cfg.K1), H, cfg)

    def test_strip_cp_length_check(self, cfg):
        with pytest.raises(ValueError):
            strip_cp(np.ones(cfg.K), cfg)


class TestSensingSnapshot:
    def test_division(self):
        np.testing.assert_allclose(sensing_snapshot([2, 4j], [1, 2]), [2, 2j])

    def test_zero_symbol(self):
        with pytest.raises(ValueError, match="zero"):
            sensing_snapshot([1, 1], [1, 0])

    def test_shape_mismatch(self):
        with pytest.raises(ValueError, match="shape"):
            sensing_snapshot([1, 1, 1], [1, 1])
