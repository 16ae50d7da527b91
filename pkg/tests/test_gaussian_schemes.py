import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sdof_lab.channel import ChannelDims, ChannelSet, draw_channels
from sdof_lab.errors import InvalidInputError, WrongRegimeError
from sdof_lab.gaussian_schemes import (
    SLOTS,
    assemble_mixing,
    decode_columns,
    design_r1,
    design_r2,
    design_r3,
    design_r4,
    design_r5,
    lambda_matrix,
    psi_matrix,
    stacked_eve_matrix,
    synthesize,
    verify_alignment,
    verify_decodability,
)
from sdof_lab.matrix_kernel import nullity, rank
from sdof_lab.regimes import RegimeClass, classify_regime


def fading(N, K, slots=3, seed=0):
    return draw_channels(ChannelDims(N, K), "fading", slots, seed)


def certified(design, chs):
    res = verify_alignment(design, chs)
    dec = verify_decodability(design, chs)
    return res.passed and dec.passed, res.max_residual


class TestR1:
    def test_hand_nullspaces(self):
        ch = ChannelSet(np.eye(2), np.eye(2), np.array([[1.0, 0.0]]), np.array([[0.0, 1.0]]))
        d = design_r1(ch, seed=0)
        P1, P2 = d.precoders[0]["P1"], d.precoders[0]["P2"]
        assert P1.shape == P2.shape == (2, 1)
        assert abs(P1[0, 0]) < 1e-15 and abs(abs(P1[1, 0]) - 1) < 1e-15
        assert abs(P2[1, 0]) < 1e-15 and abs(abs(P2[0, 0]) - 1) < 1e-15
        assert certified(d, [ch])[0]

    def test_random_draws_full_rank(self):
        for s in range(20):
            ch = fading(5, 2, 1, s)[0]
            d = design_r1(ch, seed=s)
            p = d.precoders[0]
            assert rank(np.hstack([ch.H1 @ p["P1"], ch.H2 @ p["P2"]])) == 5

    def test_no_eavesdropper(self):
        ch = fading(3, 0, 1, 1)[0]
        d = design_r1(ch, seed=1)
        assert d.precoders[0]["P1"].shape == (3, 3)
        assert d.precoders[0]["P2"].shape == (3, 0)

    def test_eavesdropper_sees_nothing(self):
        ch = fading(4, 2, 1, 3)[0]
        mix = assemble_mixing(design_r1(ch, seed=3), [ch])
        assert np.max(np.abs(mix.B_v1)) < 1e-14
        assert np.max(np.abs(mix.B_v2)) < 1e-14

    def test_wrong_regime(self):
        with pytest.raises(WrongRegimeError):
            design_r1(fading(2, 2, 1)[0])


class TestR2:
    def test_k_equals_n_has_no_nullspace_streams(self):
        chs = fading(2, 2)
        d = design_r2(chs, seed=0)
        for p in d.precoders:
            assert p["Gperp1"].shape == (2, 0)
            assert p["Q"].shape == (2, 2)
        ok, resid = certified(d, chs)
        assert ok and resid <= 1e-9

    def test_receiver_map_is_square_and_invertible(self):
        chs = fading(3, 2, seed=5)
        d = design_r2(chs, seed=5)
        mix = assemble_mixing(d, chs)
        Phi = decode_columns(mix.layout, mix.recv, mix.rx_dim)
        # 6 (N - K) nullspace streams + 3 (2K - N) aligned + 3 (2K - N) merged jamming = 3N
        assert Phi.shape == (9, 9)
        assert rank(Phi) == 9

    def test_needs_three_slots(self):
        with pytest.raises(InvalidInputError):
            design_r2(fading(3, 2, 2))

    def test_q_is_orthonormal(self):
        d = design_r2(fading(5, 4), seed=2)
        Q = d.precoders[1]["Q"]
        assert np.allclose(Q.T @ Q, np.eye(3))


class TestR3:
    @pytest.mark.parametrize("N,K,want", [(3, 3, 9), (3, 4, 3), (2, 2, 6)])
    def test_psi_nullity(self, N, K, want):
        assert nullity(psi_matrix(fading(N, K))) == want == 9 * N - 6 * K

    def test_2x2_decode_rank(self):
        chs = fading(2, 2, seed=7)
        d = design_r3(chs, seed=7)
        assert verify_decodability(d, chs).rank == 6
        assert verify_alignment(d, chs).max_residual <= 1e-9

    def test_no_slack_case(self):
        chs = fading(3, 4, seed=2)
        assert certified(design_r3(chs, seed=2), chs)[0]


class TestR4:
    def test_dimension_bookkeeping(self):
        ch = fading(3, 4, 1, 0)[0]
        d = design_r4(ch, seed=0)
        p = d.precoders[0]
        assert p["R1"].shape == (3, 0)
        assert p["P1"].shape == (3, 1) and p["Q"].shape == (3, 1)
        assert certified(d, [ch])[0]

    def test_boundary_with_r5(self):
        ch = fading(2, 3, 1, 0)[0]
        d = design_r4(ch, seed=0)
        assert (d.budget.n1, d.budget.n2) == (1, 0)
        assert certified(d, [ch])[0]

    def test_n6_k8(self):
        ch = fading(6, 8, 1, 4)[0]
        d = design_r4(ch, seed=4)
        ok, resid = certified(d, [ch])
        assert ok and resid <= 1e-9
        assert verify_decodability(d, [ch]).rank == 6


class TestR5:
    def test_one_stream_one_jammer(self):
        ch = fading(2, 3, 1, 0)[0]
        d = design_r5(ch, seed=0)
        p = d.precoders[0]
        assert p["P"].shape == p["Q"].shape == (2, 1)
        assert rank(np.hstack([ch.H1 @ p["P"], ch.H2 @ p["Q"]])) == 2
        mix = assemble_mixing(d, [ch])
        assert np.max(np.abs(mix.B_v1 - mix.B_u2)) <= 1e-12

    def test_k_2n_is_empty(self):
        ch = fading(2, 4, 1, 0)[0]
        d = synthesize([ch], seed=0)
        assert d.budget.sdof == 0
        assert d.precoders[0]["P"].shape == (2, 0)

    def test_n4_k6(self):
        ch = fading(4, 6, 1, 3)[0]
        d = design_r5(ch, seed=3)
        assert verify_alignment(d, [ch]).max_residual <= 1e-9


def test_zero_channels_fail_decodability():
    ch = fading(2, 1, 1, 0)[0]
    d = design_r1(ch, seed=0)
    z = ChannelSet(np.zeros((2, 2)), np.zeros((2, 2)), ch.G1, ch.G2)
    assert not verify_decodability(d, [z]).passed


def test_identity_channels_pass():
    ch = ChannelSet(np.eye(2), np.eye(2), np.array([[0.3, -0.8]]), np.array([[0.6, 0.1]]))
    d = design_r1(ch, seed=0)
    assert verify_decodability(d, [ch]).passed


def test_tampered_precoder_is_caught():
    chs = fading(3, 2, seed=1)
    d = design_r2(chs, seed=1)
    d.precoders[0]["P1"] = d.precoders[0]["P1"] + 1e-3
    rep = verify_alignment(d, chs)
    assert not rep.passed
    assert "G1P1 = G2H2^-1Q" in rep.failures


@pytest.mark.parametrize("N,K", [(2, 1), (4, 3), (3, 3), (6, 9), (4, 7), (2, 5)])
def test_power_normalization(N, K):
    chs = fading(N, K)
    d = synthesize(chs, seed=0)
    lay = d.layout(chs[:d.slots])
    loads = [sum(float(np.sum(g.maps[t] ** 2)) for g in lay.groups if g.tx == i)
             for i in (1, 2) for t in range(d.slots)]
    if any(loads):
        assert max(d.alpha * x for x in loads) == pytest.approx(1.0)


def test_eavesdropper_pairing_in_mixing_model():
    for N, K in [(3, 2), (3, 3), (5, 7)]:
        chs = fading(N, K)
        d = synthesize(chs, seed=1)
        mix = assemble_mixing(d, chs[:d.slots])
        for pair in mix.layout.pairs:
            assert np.max(np.abs(mix.eve[pair.info] - mix.eve[pair.jam])) <= 1e-9


def test_slot_table():
    assert SLOTS[RegimeClass.R2] == SLOTS[RegimeClass.R3] == 3
    assert SLOTS[RegimeClass.R1] == SLOTS[RegimeClass.R4] == SLOTS[RegimeClass.R5] == 1


# ------------------------------------------------------------ properties

valid_nk = st.integers(1, 8).flatmap(lambda N: st.tuples(st.just(N), st.integers(0, 2 * N - 1)))


@given(valid_nk, st.integers(0, 2**32 - 1))
def test_every_regime_certifies(nk, seed):
    N, K = nk
    chs = fading(N, K, 3, seed)
    d = synthesize(chs, seed=seed)
    ok, resid = certified(d, chs[:d.slots])
    assert ok and resid <= 1e-8


@given(valid_nk, st.integers(0, 2**32 - 1))
def test_nullity_identities(nk, seed):
    N, K = nk
    chs = fading(N, K, 3, seed)
    assert nullity(stacked_eve_matrix(chs[0])) == 2 * N - K
    if 2 * K <= 3 * N:
        assert nullity(lambda_matrix(chs[0])) == 3 * N - 2 * K
        assert nullity(psi_matrix(chs)) == 9 * N - 6 * K


def test_classification_drives_synthesis():
    for N, K in [(4, 2), (4, 3), (4, 4), (4, 6), (4, 7)]:
        d = synthesize(fading(N, K), seed=0)
        assert d.regime is classify_regime(N, K)
