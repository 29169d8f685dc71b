"""Performance metrics: direction-estimation CRB, interference norms, BER.

crb_theta evaluates the Cramer-Rao bound on the target direction estimate
for a monostatic uniform linear array transmitting with a given waveform
coherence matrix; precoding enters through that matrix, so the same
expression covers the orthogonal baseline, projection precoders, and the
cooperation precoders.

coop_ber Monte-Carlos the downlink of the cooperation phase: Gray-mapped
QPSK streams through the precoder and channel with per-stream
nearest-neighbor detection.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .estimation import TrainingConfig, estimate_cluster_channel
from .matops import (
    Seed,
    derive_seed,
    frobenius_norm,
    hermitian,
    rng_from,
    seed_to_int,
)
from .precoders import (
    MMSE,
    ZF,
    Precoder,
    mmse_precoder,
    nsp_precoder,
    resolve_sigma_th,
    ssvsp_precoder,
    zf_precoder,
)
from .scenario import (
    CompositeChannel,
    RadarArray,
    Scenario,
    gen_cluster_channel,
    steering_derivative,
    steering_vector,
)

ORTHOGONAL = "orthogonal"

RAD2_TO_DEG2 = (180.0 / math.pi) ** 2


@dataclass(frozen=True)
class CrbInput:
    """Inputs to crb_theta: array, waveform coherence matrix, angle, SNR.

    r_x must be m_r x m_r and Hermitian to 1e-9 relative; snr is linear
    and positive; theta is radians.
    """

    array: RadarArray
    r_x: np.ndarray
    theta: float
    snr: float

    def __post_init__(self):
        r = np.asarray(self.r_x)
        if r.ndim != 2 or r.shape[0] != r.shape[1]:
            raise ValueError(f"r_x must be square, got shape {r.shape}")
        if r.shape[0] != self.array.m_r:
            raise ValueError(
                f"r_x is {r.shape[0]}x{r.shape[0]} but the array has {self.array.m_r} elements"
            )
        scale = max(float(np.linalg.norm(r, "fro")), np.finfo(float).tiny)
        if float(np.linalg.norm(r - r.conj().T, "fro")) > 1e-9 * scale:
            raise ValueError("r_x must be Hermitian (within 1e-9 relative)")
        if self.snr <= 0:
            raise ValueError("snr must be positive (linear scale)")


def crb_theta(inp: CrbInput) -> float:
    """CRB on the target direction estimate, in radians squared.

    The Fisher information combines the steering vector a, its derivative
    da, and the transposed coherence matrix:

        info = m_r da^H r_x^T da + (a^H r_x^T a) ||da||^2
               - m_r |a^H r_x^T da|^2 / (a^H r_x^T a)

    and crb = 1 / (2 snr info). Returns math.inf when the normalization
    term a^H r_x^T a vanishes (target direction outside the transmitted
    subspace) or the information is nonpositive within tolerance; the
    result is never negative.
    """
    a = steering_vector(inp.array, inp.theta)
    da = steering_derivative(inp.array, inp.theta)
    rt = np.asarray(inp.r_x).T
    m_r = inp.array.m_r
    q_dd = quad_form(da, rt, da)
    q_aa = quad_form(a, rt, a)
    q_ad = quad_form(a, rt, da)
    r_scale = float(np.linalg.norm(rt, "fro"))
    if q_aa.real <= 1e-12 * r_scale * m_r:
        return math.inf
    nda = float(np.real(np.vdot(da, da)))
    terms = (m_r * q_dd, q_aa * nda, -m_r * (q_ad * np.conj(q_ad)) / q_aa)
    info = sum(terms)
    scale = sum(abs(t) for t in terms)
    if scale > 0 and abs(info.imag) > 1e-8 * scale:
        raise FloatingPointError(
            f"Fisher information has a non-negligible imaginary residue "
            f"({info.imag:.3e} against scale {scale:.3e}); r_x is not consistent"
        )
    info_re = float(info.real)
    if info_re <= 1e-12 * scale:
        return math.inf
    return 1.0 / (2.0 * inp.snr * info_re)


def quad_form(x: np.ndarray, m: np.ndarray, y: np.ndarray) -> complex:
    """Quadratic form x^H m y for 1-D vectors."""
    return complex(x.conj() @ m @ y)


def interference_norm(
    channel: CompositeChannel | list[np.ndarray],
    precoder: Precoder | np.ndarray,
) -> float:
    """Total interference the precoded radar inflicts on a cluster.

    Sum over the cluster's BSs of the Frobenius norm of (per-BS channel
    times precoder). Pass the true-CSI channel here even when the precoder
    was built from estimates; that is the physical leak.
    """
    blocks = channel.blocks() if isinstance(channel, CompositeChannel) else list(channel)
    p = precoder.p if isinstance(precoder, Precoder) else np.asarray(precoder)
    return float(sum(np.linalg.norm(b @ p, "fro") for b in blocks))


def qpsk_symbols(bits: np.ndarray) -> np.ndarray:
    """Gray-mapped unit-energy QPSK symbols from a (2, ...) bit array."""
    return ((1 - 2 * bits[0]) + 1j * (1 - 2 * bits[1])) / np.sqrt(2.0)


def coop_ber(
    h_comp: np.ndarray,
    precoder_kind: str,
    rho_db_grid: list[float],
    n_symbols: int,
    seed: Seed,
    normalize_power: bool = False,
    return_per_stream: bool = False,
    h_for_precoder: np.ndarray | None = None,
) -> np.ndarray:
    """Monte-Carlo BER of the cooperation downlink over an SNR grid.

    Per grid point: build the zf or mmse precoder for the d_r x m_r
    channel (mmse regularized by 1/rho), push n_symbols Gray-mapped QPSK
    vectors through precoder and channel, add complex AWGN of variance
    1/rho per receive antenna, and detect each stream from its own
    receive entry by nearest neighbor. The streams carry unit power, and
    zero-forcing hands them to the receive antennas unchanged, so under
    ZF the per-receive-antenna SNR is exactly rho and the BER follows the
    closed-form Gray-QPSK curve; MMSE faces the same noise floor with an
    attenuated, interference-bearing signal. Symbols and base noise are
    drawn once, so grid points and precoder kinds compare on matched
    realizations. h_for_precoder, when given, is the (estimated) channel
    the precoder is designed from while propagation stays on h_comp.
    Returns BER per grid point averaged over streams, or the
    (grid, stream) matrix with return_per_stream=True.
    """
    if precoder_kind not in (ZF, MMSE):
        raise ValueError(f"precoder_kind must be {ZF!r} or {MMSE!r}")
    if n_symbols < 1:
        raise ValueError("n_symbols must be positive")
    h = np.asarray(h_comp)
    d_r = h.shape[0]
    h_design = h if h_for_precoder is None else np.asarray(h_for_precoder)
    if h_design.shape != h.shape:
        raise ValueError(
            f"h_for_precoder shape {h_design.shape} differs from channel {h.shape}"
        )
    rng = rng_from(seed)
    bits = rng.integers(0, 2, size=(2, d_r, n_symbols))
    symbols = qpsk_symbols(bits)
    w0 = (
        rng.standard_normal((d_r, n_symbols))
        + 1j * rng.standard_normal((d_r, n_symbols))
    ) / np.sqrt(2.0)
    out = np.empty((len(rho_db_grid), d_r))
    for g, rho_db in enumerate(rho_db_grid):
        rho = 10.0 ** (rho_db / 10.0)
        if precoder_kind == ZF:
            pc = zf_precoder(h_design, normalize_power=normalize_power)
        else:
            pc = mmse_precoder(h_design, d_r, 1.0 / rho, normalize_power=normalize_power)
        b = h @ pc.p
        y = b @ symbols + np.sqrt(1.0 / rho) * w0
        errs = (y.real < 0) != (bits[0] == 1)
        errs_im = (y.imag < 0) != (bits[1] == 1)
        out[g] = (errs.sum(axis=1) + errs_im.sum(axis=1)) / (2.0 * n_symbols)
    if return_per_stream:
        return out
    return out.mean(axis=1)


@dataclass(frozen=True)
class MetricRecord:
    """One scalar result plus everything needed to regenerate it.

    params carries the scenario and operating-point values that become CSV
    columns; seed alone re-creates the row's random draws. value_deg2 is
    the optional degrees-squared rendering, populated for CRB values.
    """

    experiment: str
    scheme: str
    csi: str
    params: dict = field(default_factory=dict)
    trial: int = 0
    seed: int = 0
    value_name: str = "value"
    value: float = math.nan
    value_deg2: float | None = None


def crb_record(experiment, scheme, csi, params, trial, seed, value) -> MetricRecord:
    """MetricRecord for a CRB value, with the degrees-squared column filled."""
    return MetricRecord(
        experiment=experiment,
        scheme=scheme,
        csi=csi,
        params=params,
        trial=trial,
        seed=seed,
        value_name="crb_rad2",
        value=value,
        value_deg2=value * RAD2_TO_DEG2 if math.isfinite(value) else math.inf,
    )


def build_rx(
    scenario: Scenario,
    scheme: str,
    csi: str,
    seed: Seed,
    est: TrainingConfig | None = None,
    noiseless: bool = False,
    sigma_th_rel: float | None = None,
    sigma_th_abs: float | None = None,
    rel_tol: float | None = None,
) -> tuple[np.ndarray, float | None]:
    """Waveform coherence matrix under a scheme, plus any resolved sigma_th.

    orthogonal gives the identity. nsp/ssvsp project for cluster 1 and use
    r_x = p p^H. zf/mmse stack every cluster's channel into the all-BS
    composite (one stream per BS antenna) and use the same r_x = p p^H
    form. csi="estimated" builds the precoder from training-based channel
    estimates; the true channel never leaks into it.
    """
    array = scenario.array
    if scheme == ORTHOGONAL:
        return np.eye(array.m_r, dtype=complex), None
    topo = scenario.topology

    def channel_for(cluster_index: int) -> CompositeChannel:
        true_ch = gen_cluster_channel(topo, cluster_index, array, derive_seed(seed, 0))
        if csi == "estimated":
            if est is None:
                raise ValueError("estimated CSI requires a TrainingConfig")
            return estimate_cluster_channel(
                true_ch, est, derive_seed(seed, 1, cluster_index), noiseless
            )
        return true_ch

    if scheme in ("nsp", "ssvsp"):
        ch = channel_for(1)
        if scheme == "nsp":
            pc = nsp_precoder(ch, rel_tol)
            resolved = None
        else:
            resolved = resolve_sigma_th(ch, sigma_th_rel, sigma_th_abs)
            pc = ssvsp_precoder(ch, resolved, rel_tol)
        return pc.p @ hermitian(pc.p), resolved
    if scheme in (ZF, MMSE):
        h_all = np.vstack([channel_for(i).h for i in range(1, topo.c_t + 1)])
        if scheme == ZF:
            pc = zf_precoder(h_all)
        else:
            rho = est.rho if est is not None else 10.0
            pc = mmse_precoder(h_all, h_all.shape[0], 1.0 / rho)
        return pc.p @ hermitian(pc.p), None
    raise ValueError(f"unknown scheme {scheme!r}")


def crb_experiment(
    scenario: Scenario,
    schemes: list[str],
    csi: str,
    trials: int,
    seed: Seed,
    snr: float,
    est: TrainingConfig | None = None,
    noiseless: bool = False,
    sigma_th_rel: float | None = None,
    sigma_th_abs: float | None = None,
    rel_tol: float | None = None,
    experiment: str = "crb",
    base_params: dict | None = None,
) -> list[MetricRecord]:
    """CRB records over schemes and trials for one scenario point.

    Channel draws are matched across schemes at each trial (the trial seed
    does not involve the scheme), so per-trial scheme comparisons are on
    the same channels. Records appear scheme-major, trial-minor.
    """
    records = []
    for scheme in schemes:
        for trial in range(trials):
            row_seed = seed_to_int(derive_seed(seed, trial))
            r_x, resolved = build_rx(
                scenario,
                scheme,
                csi,
                row_seed,
                est=est,
                noiseless=noiseless,
                sigma_th_rel=sigma_th_rel,
                sigma_th_abs=sigma_th_abs,
                rel_tol=rel_tol,
            )
            value = crb_theta(CrbInput(scenario.array, r_x, scenario.theta, snr))
            params = dict(base_params or {})
            if resolved is not None:
                params["sigma_th"] = resolved
            records.append(
                crb_record(experiment, scheme, csi, params, trial, row_seed, value)
            )
    return records
