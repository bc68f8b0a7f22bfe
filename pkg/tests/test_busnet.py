import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import crandn
from ezfsim.busnet import (
    FronthaulBus,
    pack_equalizer,
    pack_hermitian,
    real_count,
    run_apd,
    run_centralized,
    run_dezf,
    unpack_equalizer,
    unpack_hermitian,
)
from ezfsim.channel import SystemConfig, generate_channels, make_rng
from ezfsim.fronthaul import REFERENCE_BASE, analytic_load
from ezfsim.numerics import canonical_phase, hermitize
from ezfsim.precoder import build_precoder
from ezfsim.validation import random_config


def _oracle(scheme, cfg, topology="fusion"):
    # independent restatement of the per-phase message sizes
    p, k, n_r, l, tau = cfg.n_bcu, cfg.n_users, cfg.n_r, cfg.n_streams, cfg.tau
    lt = k * l
    if scheme == "CEN":
        return tau * 2 * cfg.n_t
    if scheme == "APD":
        return p * k + k * (2 * n_r * l - l) + p * lt * lt + tau * 2 * lt
    fan = p + (1 if topology == "fusion" else 0)
    return fan * k * n_r * n_r + fan * lt * lt + tau * 2 * lt


class TestRealCount:
    def test_examples(self):
        assert real_count("EqualizerBlock", (4, 2)) == 14
        assert real_count("LocalGram", (32, 32)) == 1024
        assert real_count("SymbolVector", (32,)) == 64
        assert real_count("Metric", (16,)) == 16
        assert real_count("UserGram", (16, 4, 4)) == 256
        assert real_count("PrecodedVector", (256,)) == 512

    def test_errors(self):
        with pytest.raises(ValueError):
            real_count("Telemetry", (1,))
        with pytest.raises(ValueError):
            real_count("LocalGram", (3, 4))

    def test_bus_checks_payload_size(self):
        with pytest.raises(AssertionError):
            FronthaulBus().send("x", "SymbolVector", (2,), np.zeros(3))


class TestPacking:
    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2**31), st.integers(1, 10))
    def test_hermitian_round_trip(self, seed, d):
        a = crandn(np.random.default_rng(seed), d, d)
        g = hermitize(a @ a.conj().T)
        v = pack_hermitian(g)
        assert v.size == d * d and v.dtype.kind == "f"
        np.testing.assert_array_equal(unpack_hermitian(v, d), g)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2**31), st.integers(1, 8), st.integers(1, 4))
    def test_equalizer_round_trip(self, seed, n_r, l):
        if l > n_r:
            return
        u, _ = canonical_phase(np.linalg.qr(crandn(np.random.default_rng(seed), n_r, l))[0])
        v, pivots = pack_equalizer(u)
        assert v.size == real_count("EqualizerBlock", (n_r, l))
        np.testing.assert_array_equal(unpack_equalizer(v, pivots, n_r), u)


class TestApd:
    def test_table1_row1_ledger(self):
        run = run_apd(generate_channels(REFERENCE_BASE))
        d = run.ledger.to_dict()
        assert d["per_kind"]["Metric"] == 64
        assert d["per_kind"]["EqualizerBlock"] == 224
        assert d["per_kind"]["LocalGram"] == 4096
        assert d["per_kind"]["SymbolVector"] == 4160
        assert run.ledger.total == 8544

    def test_single_bcu(self, rng):
        cfg = SystemConfig(16, 1, 16, 4, 4, 2, tau=3)
        run = run_apd(generate_channels(cfg, rng=rng))
        assert run.ledger.per_kind["Metric"] == 4
        assert run.ledger.total == _oracle("APD", cfg)

    def test_zero_tau(self, rng):
        cfg = SystemConfig(16, 2, 8, 4, 4, 2, tau=0)
        run = run_apd(generate_channels(cfg, rng=rng))
        assert run.ledger.total == _oracle("APD", cfg.replace(tau=65)) - 2 * 65 * cfg.l_tot
        assert run.x.shape == (16, 0)

    def test_consensus(self, rng):
        run = run_apd(generate_channels(SystemConfig(32, 4, 8, 4, 4, 2), rng=rng))
        for node in run.nodes[1:]:
            np.testing.assert_array_equal(node.g, run.nodes[0].g)
            np.testing.assert_array_equal(node.q, run.nodes[0].q)
            np.testing.assert_array_equal(node.u, run.nodes[0].u)

    def test_bitwise_equal_to_direct_pipeline(self, rng):
        ch = generate_channels(SystemConfig(64, 4, 16, 8, 4, 2), rng=rng)
        run = run_apd(ch)
        direct, _ = build_precoder(ch, "APD")
        np.testing.assert_array_equal(run.precoder.w, direct.w)
        assert run.precoder.gamma == direct.gamma

    def test_symbols_and_x(self, rng):
        cfg = SystemConfig(16, 2, 8, 2, 4, 2, tau=5)
        ch = generate_channels(cfg, rng=rng)
        s = crandn(rng, 4, 5)
        run = run_apd(ch, symbols=s)
        np.testing.assert_allclose(run.x, run.precoder.w @ s, atol=1e-14)
        sent = np.array([m.payload for m in run.log if m.kind == "SymbolVector"])
        np.testing.assert_array_equal(sent[:, 0::2] + 1j * sent[:, 1::2], s.T)
        with pytest.raises(ValueError):
            run_apd(ch, symbols=np.zeros((4, 4)))

    def test_unpacking_protocol_object(self, rng):
        pre, ledger = run_apd(generate_channels(SystemConfig(8, 2, 4, 2, 2, 1), rng=rng))
        assert pre.scheme == "APD" and ledger.total > 0


class TestDezf:
    def test_table1_row1(self):
        assert run_dezf(generate_channels(REFERENCE_BASE)).ledger.total == 10560

    def test_table2_row3(self):
        cfg = REFERENCE_BASE.replace(n_bcu=16, m=16)
        assert run_dezf(generate_channels(cfg)).ledger.total == 25920

    def test_single_bcu(self, rng):
        cfg = SystemConfig(16, 1, 16, 4, 4, 2, tau=7)
        total = run_dezf(generate_channels(cfg, rng=rng)).ledger.total
        assert total == 2 * (4 * 16 + 8 * 8) + 2 * 7 * 8

    def test_peer_topology(self, rng):
        cfg = SystemConfig(32, 4, 8, 4, 4, 2)
        ch = generate_channels(cfg, rng=rng)
        peer = run_dezf(ch, topology="peer")
        assert peer.ledger.total == _oracle("DEZF", cfg, "peer") == analytic_load("DEZF", cfg, "peer")
        assert peer.ledger.per_kind["AggregateBroadcast"] == 0
        np.testing.assert_allclose(peer.precoder.w, run_dezf(ch).precoder.w, atol=1e-12)
        with pytest.raises(ValueError):
            run_dezf(ch, topology="ring")

    def test_x_reassembly(self, rng):
        cfg = SystemConfig(32, 4, 8, 4, 4, 2, tau=6)
        ch = generate_channels(cfg, rng=rng)
        s = crandn(rng, 8, 6)
        run = run_dezf(ch, symbols=s)
        cen, _ = build_precoder(ch, "CEN")
        np.testing.assert_allclose(run.x, cen.w @ s, atol=1e-10)


class TestCentralized:
    def test_table_params(self):
        assert run_centralized(generate_channels(REFERENCE_BASE)).ledger.total == 33280

    def test_minimal(self):
        cfg = SystemConfig(1, 1, 1, 1, 1, 1, tau=1)
        assert run_centralized(generate_channels(cfg)).ledger.total == 2

    def test_independent_of_k_p_l(self):
        totals = {run_centralized(generate_channels(SystemConfig(16, p, 16 // p, k, 4, l, tau=9))).ledger.total
                  for p in (1, 2, 4) for k in (1, 3) for l in (1, 2)}
        assert totals == {2 * 9 * 16}


def test_ledger_json_export():
    run = run_apd(generate_channels(REFERENCE_BASE))
    doc = json.loads(run.ledger.to_json("APD", REFERENCE_BASE))
    assert set(doc) == {"scheme", "cfg", "per_kind", "total"}
    assert doc["total"] == sum(doc["per_kind"].values()) == 8544
    assert doc["cfg"]["n_t"] == 256


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31))
def test_ledger_equals_formula(seed):
    rng = make_rng(seed)
    cfg = random_config(rng)
    ch = generate_channels(cfg, rng=rng)
    for scheme, run in (("APD", run_apd), ("DEZF", run_dezf), ("CEN", run_centralized)):
        total = run(ch).ledger.total
        assert total == analytic_load(scheme, cfg) == _oracle(scheme, cfg)
