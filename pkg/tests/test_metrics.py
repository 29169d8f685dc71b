import math

import numpy as np
import pytest

from radarcoex.estimation import TrainingConfig
from radarcoex.matops import frobenius_norm, random_complex_gaussian
from radarcoex.metrics import (
    ORTHOGONAL,
    RAD2_TO_DEG2,
    CrbInput,
    build_rx,
    coop_ber,
    crb_experiment,
    crb_record,
    crb_theta,
    interference_norm,
    qpsk_symbols,
    quad_form,
)
from radarcoex.precoders import nsp_precoder, zf_precoder
from radarcoex.scenario import (
    RadarArray,
    Scenario,
    gen_cluster_channel,
    steering_vector,
    uniform_topology,
)


def _scenario(m_r=100, m_k=3, n_bs=8, c_t=1, theta=0.0) -> Scenario:
    return Scenario(
        array=RadarArray(m_r=m_r), topology=uniform_topology(m_k, c_t, n_bs), theta=theta
    )


def qfunc(x: float) -> float:
    return 0.5 * math.erfc(x / math.sqrt(2.0))


def test_crb_two_element_closed_form():
    # two elements, spacing 3/4, broadside, identity coherence, unit SNR:
    # the bound collapses to 2 / (27 pi^2)
    inp = CrbInput(RadarArray(m_r=2, spacing_wavelengths=0.75), np.eye(2, dtype=complex), 0.0, 1.0)
    expected = 2.0 / (27.0 * math.pi**2)
    assert crb_theta(inp) == pytest.approx(expected, rel=1e-9)


def test_crb_scales_inversely_with_snr():
    arr = RadarArray(m_r=6)
    r = np.eye(6, dtype=complex)
    low = crb_theta(CrbInput(arr, r, 0.2, 1.0))
    high = crb_theta(CrbInput(arr, r, 0.2, 2.0))
    assert high == pytest.approx(low / 2.0, rel=1e-12)


def test_crb_infinite_when_direction_unilluminated():
    arr = RadarArray(m_r=5)
    a = steering_vector(arr, 0.3)
    r_x = np.conj(np.eye(5) - np.outer(a, a.conj()) / 5.0)
    assert crb_theta(CrbInput(arr, r_x, 0.3, 1.0)) == math.inf


def test_crb_positive_on_random_coherence():
    arr = RadarArray(m_r=8)
    for seed in range(30):
        g = random_complex_gaussian(8, 8, seed)
        r_x = g @ g.conj().T / 8.0
        value = crb_theta(CrbInput(arr, r_x, 0.1, 2.0))
        assert value > 0.0


def test_crb_input_validation():
    arr = RadarArray(m_r=4)
    with pytest.raises(ValueError, match="Hermitian"):
        CrbInput(arr, np.triu(np.ones((4, 4), dtype=complex)), 0.0, 1.0)
    with pytest.raises(ValueError, match="square"):
        CrbInput(arr, np.ones((4, 3), dtype=complex), 0.0, 1.0)
    with pytest.raises(ValueError, match="elements"):
        CrbInput(arr, np.eye(5, dtype=complex), 0.0, 1.0)
    with pytest.raises(ValueError, match="snr"):
        CrbInput(arr, np.eye(4, dtype=complex), 0.0, 0.0)


def test_quad_form_known_value():
    x = np.array([1.0, 1.0j])
    y = np.array([1.0, 1.0])
    m = np.array([[1.0, 2.0], [3.0, 4.0]])
    assert quad_form(x, m, y) == pytest.approx(3.0 - 7.0j)


def test_crb_projection_never_beats_full_illumination():
    arr = RadarArray(m_r=40)
    topo = uniform_topology(3, 1, 8)
    full = crb_theta(CrbInput(arr, np.eye(40, dtype=complex), 0.0, 1.0))
    values = []
    for seed in range(10):
        ch = gen_cluster_channel(topo, 1, arr, seed)
        p = nsp_precoder(ch).p
        values.append(crb_theta(CrbInput(arr, p @ p.conj().T, 0.0, 1.0)))
    assert np.median(values) >= full


def test_interference_norm_identity_is_sum_of_block_norms():
    ch = gen_cluster_channel(uniform_topology(3, 1, 4), 1, RadarArray(m_r=20), 0)
    total = interference_norm(ch, np.eye(20, dtype=complex))
    assert total == pytest.approx(sum(np.linalg.norm(b, "fro") for b in ch.blocks()), rel=1e-12)


def test_interference_norm_nsp_annihilates():
    ch = gen_cluster_channel(uniform_topology(3, 1, 8), 1, RadarArray(m_r=100), 1)
    pc = nsp_precoder(ch)
    baseline = interference_norm(ch, np.eye(100, dtype=complex))
    assert interference_norm(ch, pc) <= 1e-11 * baseline


def test_interference_norm_accepts_raw_blocks():
    blocks = [random_complex_gaussian(4, 10, s) for s in range(3)]
    p = np.eye(10, dtype=complex)
    total = interference_norm(blocks, p)
    assert total == pytest.approx(sum(np.linalg.norm(b, "fro") for b in blocks), rel=1e-12)


def test_qpsk_gray_mapping():
    bits = np.array([[0, 0, 1, 1], [0, 1, 0, 1]])
    s = qpsk_symbols(bits)
    r = 1.0 / np.sqrt(2.0)
    assert np.allclose(s, [r + 1j * r, r - 1j * r, -r + 1j * r, -r - 1j * r])
    assert np.allclose(np.abs(s), 1.0)


def test_coop_ber_zf_matches_closed_form():
    h = random_complex_gaussian(4, 26, 0)
    grid = [4.0, 10.0]
    n = 40000
    ber = coop_ber(h, "zf", grid, n, seed=1)
    for g, rho_db in enumerate(grid):
        p = qfunc(math.sqrt(10.0 ** (rho_db / 10.0)))
        se = math.sqrt(p * (1 - p) / (2 * 4 * n))
        assert abs(ber[g] - p) <= 3 * se


def test_coop_ber_zf_vanishes_at_high_snr():
    h = random_complex_gaussian(4, 26, 2)
    ber = coop_ber(h, "zf", [90.0], 5000, seed=3)
    assert ber[0] == 0.0


def test_coop_ber_deterministic():
    h = random_complex_gaussian(4, 26, 4)
    a = coop_ber(h, "mmse", [0.0, 6.0], 2000, seed=9)
    b = coop_ber(h, "mmse", [0.0, 6.0], 2000, seed=9)
    c = coop_ber(h, "mmse", [0.0, 6.0], 2000, seed=10)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_coop_ber_zf_per_stream_monotone_on_matched_noise():
    # same symbols and noise at every grid point: under ZF an error at high
    # SNR implies the same error at low SNR, so the count cannot increase
    h = random_complex_gaussian(4, 26, 5)
    per = coop_ber(h, "zf", [-2.0, 1.0, 4.0, 7.0, 10.0], 20000, seed=6, return_per_stream=True)
    assert per.shape == (5, 4)
    assert np.all(np.diff(per, axis=0) <= 0.0)


def test_coop_ber_zf_not_above_mmse_at_high_snr():
    wins = 0
    for seed in range(20):
        h = random_complex_gaussian(4, 26, 100 + seed)
        zf = coop_ber(h, "zf", [7.0, 10.0], 20000, seed=seed)
        mm = coop_ber(h, "mmse", [7.0, 10.0], 20000, seed=seed)
        if np.all(zf <= mm):
            wins += 1
    assert wins >= 16


def test_coop_ber_estimated_design_hits_error_floor():
    # few spare antennas and a bad estimate: residual cross-stream
    # interference keeps the BER away from zero at any SNR
    h = random_complex_gaussian(4, 5, 7)
    h_est = h + 0.5 * random_complex_gaussian(4, 5, 8)
    exact = coop_ber(h, "zf", [40.0], 20000, seed=11)
    floored = coop_ber(h, "zf", [40.0], 20000, seed=11, h_for_precoder=h_est)
    assert exact[0] == 0.0
    assert floored[0] > 0.01


def test_coop_ber_validation():
    h = random_complex_gaussian(4, 26, 0)
    with pytest.raises(ValueError, match="precoder_kind"):
        coop_ber(h, "nsp", [0.0], 100, seed=0)
    with pytest.raises(ValueError, match="n_symbols"):
        coop_ber(h, "zf", [0.0], 0, seed=0)
    with pytest.raises(ValueError, match="shape"):
        coop_ber(h, "zf", [0.0], 100, seed=0, h_for_precoder=h[:, :10])


def test_crb_record_fills_degrees_column():
    rec = crb_record("crb", "nsp", "true", {"m_r": 10}, 0, 7, 1e-4)
    assert rec.value_name == "crb_rad2"
    assert rec.value_deg2 == pytest.approx(1e-4 * RAD2_TO_DEG2)
    inf_rec = crb_record("crb", "nsp", "true", {}, 0, 7, math.inf)
    assert inf_rec.value_deg2 == math.inf


def test_build_rx_orthogonal_is_identity():
    r_x, resolved = build_rx(_scenario(), ORTHOGONAL, "true", seed=0)
    assert np.array_equal(r_x, np.eye(100, dtype=complex))
    assert resolved is None


def test_build_rx_nsp_is_the_projector():
    sc = _scenario(m_r=40)
    r_x, _ = build_rx(sc, "nsp", "true", seed=3)
    # p p^H of an orthogonal projector is the projector itself
    assert np.linalg.norm(r_x @ r_x - r_x) <= 1e-9
    ch = gen_cluster_channel(sc.topology, 1, sc.array, seed=np.random.SeedSequence(3, spawn_key=(0,)))
    assert frobenius_norm(ch.h @ r_x) <= 1e-9 * frobenius_norm(ch.h)


def test_build_rx_ssvsp_reports_resolved_threshold():
    sc = _scenario(m_r=40)
    r_x, resolved = build_rx(sc, "ssvsp", "true", seed=3, sigma_th_rel=0.5)
    assert resolved is not None and resolved > 0.0
    assert r_x.shape == (40, 40)


def test_build_rx_estimated_requires_training():
    with pytest.raises(ValueError, match="TrainingConfig"):
        build_rx(_scenario(m_r=40), "nsp", "estimated", seed=0)


def test_build_rx_unknown_scheme():
    with pytest.raises(ValueError, match="scheme"):
        build_rx(_scenario(m_r=40), "waterfilling", "true", seed=0)


def test_build_rx_cooperation_shapes():
    sc = _scenario(m_r=30, m_k=2, n_bs=3, c_t=2)
    for scheme in ("zf", "mmse"):
        r_x, _ = build_rx(sc, scheme, "true", seed=1)
        assert r_x.shape == (30, 30)
        assert np.linalg.norm(r_x - r_x.conj().T) <= 1e-10 * np.linalg.norm(r_x)


def test_crb_experiment_matches_channels_across_schemes():
    sc = _scenario(m_r=40)
    records = crb_experiment(sc, ["orthogonal", "nsp"], "true", trials=3, seed=5, snr=1.0)
    assert len(records) == 6
    by_scheme = {s: [r for r in records if r.scheme == s] for s in ("orthogonal", "nsp")}
    for a, b in zip(by_scheme["orthogonal"], by_scheme["nsp"]):
        assert a.trial == b.trial
        assert a.seed == b.seed
    # identity coherence has no randomness: constant across trials
    ortho_values = {r.value for r in by_scheme["orthogonal"]}
    assert len(ortho_values) == 1


def test_crb_experiment_estimated_noiseless_equals_true():
    sc = _scenario(m_r=40)
    est = TrainingConfig(l_t=24, rho=10.0)
    true_recs = crb_experiment(sc, ["nsp"], "true", trials=4, seed=2, snr=1.0)
    noiseless = crb_experiment(
        sc, ["nsp"], "estimated", trials=4, seed=2, snr=1.0, est=est, noiseless=True
    )
    for a, b in zip(true_recs, noiseless):
        assert b.value == pytest.approx(a.value, rel=1e-9)
        assert b.csi == "estimated"


def test_zf_rx_supports_crb():
    # cooperation coherence matrices still give a finite bound
    sc = _scenario(m_r=26, m_k=4, n_bs=1, c_t=1)
    r_x, _ = build_rx(sc, "zf", "true", seed=0)
    value = crb_theta(CrbInput(sc.array, r_x, 0.0, 1.0))
    assert math.isfinite(value) and value > 0.0


def test_zf_precoder_identity_reminder():
    h = random_complex_gaussian(4, 26, 12)
    assert np.linalg.norm(h @ zf_precoder(h).p - np.eye(4)) <= 1e-9
