import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from radarcoex.matops import frobenius_norm, hermitian, random_complex_gaussian
from radarcoex.precoders import (
    MMSE,
    NSP,
    SSVSP,
    ZF,
    EmptyNullSpaceError,
    Precoder,
    WaveformBlock,
    ZfInfeasibleError,
    coherence_matrix,
    mmse_precoder,
    nsp_precoder,
    orthogonal_waveform,
    precode,
    resolve_sigma_th,
    ssvsp_precoder,
    zf_precoder,
)
from radarcoex.scenario import TRUE_CSI, CompositeChannel, RadarArray, gen_cluster_channel, uniform_topology


def _channel(m_r: int, m_k: int, n_bs: int, seed: int) -> CompositeChannel:
    topo = uniform_topology(m_k, 1, n_bs)
    return gen_cluster_channel(topo, 1, RadarArray(m_r=m_r), seed=seed)


def test_orthogonal_waveform_coherence_small():
    block = orthogonal_waveform(4, 4)
    assert np.allclose(coherence_matrix(block), np.eye(4), atol=1e-12)


def test_orthogonal_waveform_coherence_large():
    block = orthogonal_waveform(100, 128)
    assert np.linalg.norm(coherence_matrix(block) - np.eye(100)) <= 1e-10
    assert np.allclose(np.abs(block.x), 1.0, atol=1e-12)


def test_orthogonal_waveform_too_short():
    with pytest.raises(ValueError, match="at least"):
        orthogonal_waveform(10, 9)


def test_coherence_single_snapshot_is_rank_one():
    x = np.array([[1.0], [1.0j]])
    c = coherence_matrix(WaveformBlock(x=x))
    assert np.linalg.matrix_rank(c) == 1


def test_nsp_of_zero_channel_is_identity():
    ch = CompositeChannel(cluster_index=1, h=np.zeros((3, 8), dtype=complex), kind=TRUE_CSI, n_bs=3)
    pc = nsp_precoder(ch)
    assert np.allclose(pc.p, np.eye(8), atol=1e-12)
    assert pc.subspace_rank == 8


def test_nsp_projection_laws_and_annihilation():
    ch = _channel(100, 3, 8, seed=1)
    pc = nsp_precoder(ch)
    p = pc.p
    assert pc.kind == NSP
    assert pc.subspace_rank == 76
    assert np.linalg.norm(p - hermitian(p)) <= 1e-10
    assert np.linalg.norm(p @ p - p) <= 1e-10
    assert frobenius_norm(ch.h @ p) <= 1e-12 * frobenius_norm(ch.h)
    eig = np.linalg.eigvalsh(p)
    assert np.all((np.abs(eig) <= 1e-8) | (np.abs(eig - 1.0) <= 1e-8))


def test_nsp_batch_invariants():
    # 200 draws across feasible shapes: Hermitian, idempotent, annihilating
    for seed in range(200):
        m_k = 1 + seed % 3
        n_bs = 2 + seed % 5
        m_r = m_k * n_bs + 4 + seed % 30
        ch = _channel(m_r, m_k, n_bs, seed=seed)
        p = nsp_precoder(ch).p
        assert np.linalg.norm(p - hermitian(p)) <= 1e-10 * m_r
        assert np.linalg.norm(p @ p - p) <= 1e-10 * m_r
        assert frobenius_norm(ch.h @ p) <= 1e-11 * frobenius_norm(ch.h)


def test_nsp_raises_when_no_null_space():
    ch = _channel(4, 4, 2, seed=0)  # 8 rows, 4 columns: full column rank
    with pytest.raises(EmptyNullSpaceError):
        nsp_precoder(ch)


def test_ssvsp_zero_threshold_equals_nsp_exactly():
    ch = _channel(40, 3, 6, seed=2)
    p_nsp = nsp_precoder(ch)
    p_s = ssvsp_precoder(ch, sigma_th=0.0)
    assert np.array_equal(p_s.p, p_nsp.p)
    assert p_s.subspace_rank == p_nsp.subspace_rank
    assert p_s.kind == SSVSP


def test_ssvsp_zero_threshold_inherits_empty_error():
    ch = _channel(4, 4, 2, seed=0)
    with pytest.raises(EmptyNullSpaceError):
        ssvsp_precoder(ch, sigma_th=0.0)


def test_ssvsp_positive_threshold_selecting_nothing_gives_zero_projector():
    ch = _channel(4, 4, 2, seed=0)
    smin = np.linalg.svd(ch.h, compute_uv=False)[-1]
    pc = ssvsp_precoder(ch, sigma_th=smin * 0.5)
    assert pc.subspace_rank == 0
    assert np.all(pc.p == 0.0)
    assert pc.p.shape == (4, 4)


def test_ssvsp_threshold_above_sigma_max_gives_identity():
    ch = _channel(30, 2, 5, seed=3)
    smax = np.linalg.svd(ch.h, compute_uv=False)[0]
    pc = ssvsp_precoder(ch, sigma_th=smax * 1.01)
    assert pc.subspace_rank == 30
    assert np.linalg.norm(pc.p - np.eye(30)) <= 1e-10


def test_ssvsp_rejects_negative_threshold():
    ch = _channel(10, 1, 2, seed=0)
    with pytest.raises(ValueError, match="nonnegative"):
        ssvsp_precoder(ch, sigma_th=-0.1)


def test_ssvsp_leak_bound():
    for seed in range(25):
        ch = _channel(40, 3, 6, seed=seed)
        sigma = np.linalg.svd(ch.h, compute_uv=False)
        sigma_th = float(np.median(sigma))
        pc = ssvsp_precoder(ch, sigma_th=sigma_th)
        admitted = pc.subspace_rank - (40 - len(sigma))
        leak = frobenius_norm(ch.h @ pc.p)
        assert leak <= sigma_th * np.sqrt(max(admitted, 0)) + 1e-9


def test_ssvsp_subspace_grows_with_threshold():
    ch = _channel(40, 3, 6, seed=4)
    sigma = np.linalg.svd(ch.h, compute_uv=False)
    thresholds = [0.0, float(sigma[-1]) * 1.01, float(np.median(sigma)), float(sigma[0]) * 1.01]
    ranks = [ssvsp_precoder(ch, t).subspace_rank for t in thresholds]
    assert ranks == sorted(ranks)
    assert ranks[0] == 40 - len(sigma)
    assert ranks[-1] == 40


def test_ssvsp_reconstruction_error_shrinks_with_threshold():
    # larger subspace keeps more of any waveform
    ch = _channel(40, 3, 6, seed=5)
    x = orthogonal_waveform(40, 64).x
    sigma = np.linalg.svd(ch.h, compute_uv=False)
    t_lo, t_hi = float(sigma[-1]) * 1.01, float(np.median(sigma))
    err_lo = frobenius_norm(ssvsp_precoder(ch, t_lo).p @ x - x)
    err_hi = frobenius_norm(ssvsp_precoder(ch, t_hi).p @ x - x)
    assert err_hi <= err_lo + 1e-9


def test_resolve_sigma_th_modes():
    ch = _channel(20, 2, 4, seed=6)
    smax = float(np.linalg.svd(ch.h, compute_uv=False)[0])
    assert resolve_sigma_th(ch, 0.5, None) == pytest.approx(0.5 * smax, rel=1e-12)
    assert resolve_sigma_th(ch, None, 1.25) == 1.25
    with pytest.raises(ValueError, match="exactly one"):
        resolve_sigma_th(ch, 0.5, 1.25)
    with pytest.raises(ValueError, match="exactly one"):
        resolve_sigma_th(ch, None, None)


@settings(max_examples=25, deadline=None)
@given(
    m_k=st.integers(min_value=1, max_value=3),
    n_bs=st.integers(min_value=1, max_value=6),
    surplus=st.integers(min_value=1, max_value=20),
    seed=st.integers(min_value=0, max_value=2**31),
)
def test_projection_invariants_property(m_k, n_bs, surplus, seed):
    m_r = m_k * n_bs + surplus
    ch = _channel(m_r, m_k, n_bs, seed=seed)
    p = nsp_precoder(ch).p
    assert np.linalg.norm(p @ p - p) <= 1e-9 * m_r
    assert frobenius_norm(ch.h @ p) <= 1e-10 * max(1.0, frobenius_norm(ch.h))


def test_zf_diagonal_oracle():
    h = np.diag([1.0, 2.0]).astype(complex)
    pc = zf_precoder(h)
    assert pc.kind == ZF
    assert np.allclose(pc.p, np.diag([1.0, 0.5]), atol=1e-12)
    assert np.allclose(h @ pc.p, np.eye(2), atol=1e-12)


def test_zf_identity_on_random_channels():
    for seed in range(20):
        h = random_complex_gaussian(4, 26, seed)
        pc = zf_precoder(h)
        assert np.linalg.norm(h @ pc.p - np.eye(4)) <= 1e-9


def test_zf_infeasible_cases():
    h = random_complex_gaussian(4, 26, 0)
    dup = np.vstack([h, h[:1, :]])
    with pytest.raises(ZfInfeasibleError, match="rank deficient"):
        zf_precoder(dup)
    with pytest.raises(ZfInfeasibleError, match="antennas"):
        zf_precoder(random_complex_gaussian(27, 26, 0))


def test_zf_normalized_power():
    h = random_complex_gaussian(4, 26, 1)
    pc = zf_precoder(h, normalize_power=True)
    assert frobenius_norm(pc.p) == pytest.approx(1.0, rel=1e-12)
    hp = h @ pc.p
    # still diagonal: identity up to one global scale
    scale = hp[0, 0]
    assert np.linalg.norm(hp - scale * np.eye(4)) <= 1e-9 * abs(scale)


def test_mmse_diagonal_oracle():
    h = np.diag([1.0, 2.0]).astype(complex)
    pc = mmse_precoder(h, d_r=2, sigma2=0.5)
    assert pc.kind == MMSE
    assert np.allclose(pc.p, np.diag([0.5, 0.4]), atol=1e-12)


def test_mmse_converges_to_zf():
    h = random_complex_gaussian(4, 26, 2)
    pz = zf_precoder(h).p
    pm = mmse_precoder(h, d_r=4, sigma2=1e-12).p
    assert np.linalg.norm(pm - pz) <= 1e-6


def test_mmse_zero_noise_delegates_to_zf():
    h = random_complex_gaussian(3, 10, 3)
    pm = mmse_precoder(h, d_r=3, sigma2=0.0)
    assert pm.kind == MMSE
    assert np.array_equal(pm.p, zf_precoder(h).p)


def test_mmse_handles_rank_deficient_rows():
    h = random_complex_gaussian(3, 10, 4)
    dup = np.vstack([h, h[:1, :]])
    pc = mmse_precoder(dup, d_r=4, sigma2=0.1)
    assert np.all(np.isfinite(pc.p))


def test_mmse_validation():
    h = random_complex_gaussian(3, 10, 5)
    with pytest.raises(ValueError, match="d_r"):
        mmse_precoder(h, d_r=4, sigma2=0.1)
    with pytest.raises(ValueError, match="nonnegative"):
        mmse_precoder(h, d_r=3, sigma2=-0.1)


def test_precode_applies_projector():
    ch = _channel(16, 2, 3, seed=7)
    pc = nsp_precoder(ch)
    block = orthogonal_waveform(16, 32)
    out = precode(block, pc)
    assert np.array_equal(out.x, pc.p @ block.x)
    assert frobenius_norm(ch.h @ out.x) <= 1e-9 * frobenius_norm(ch.h @ block.x)


def test_orthogonal_waveform_projection_identity():
    # for orthogonal streams the lost energy is l * (m_r - rank of projector)
    ch = _channel(100, 3, 8, seed=8)
    block = orthogonal_waveform(100, 128)
    for sigma_th in (0.0, 4.0):
        pc = ssvsp_precoder(ch, sigma_th=sigma_th)
        lost = frobenius_norm(pc.p @ block.x - block.x) ** 2
        expected = block.l * (100 - pc.subspace_rank)
        assert lost == pytest.approx(expected, rel=1e-6)
