"""Switched cluster selection and the per-PRI two-phase operating cycle.

Each pulse repetition interval (PRI) the radar first cooperates with the
network (collects clustering info, estimates every cluster's channel,
prepares the downlink information precoder) and then mitigates interference:
it scores the clusters and points its projected waveform at the most
favorable one.

Two switching rules:

* snsp_select ranks clusters by null-space dimension (bigger is better) and
  uses the exact null-space projection on the winner.
* sssvsp_select ranks by waveform distortion ||p_s x - x||_F under each
  cluster's relaxed projection (smaller is better).

Ties break toward the lowest cluster position. Indices returned are 1-based
positions into the channel list handed in.
"""

from dataclasses import dataclass

import numpy as np

from .estimation import TrainingConfig, estimate_cluster_channel
from .matops import Seed, derive_seed, frobenius_norm
from .precoders import (
    MMSE,
    SSVSP,
    ZF,
    EmptyNullSpaceError,
    Precoder,
    WaveformBlock,
    mmse_precoder,
    nsp_precoder,
    orthogonal_waveform,
    precode,
    resolve_sigma_th,
    ssvsp_precoder,
    zf_precoder,
)
from .scenario import (
    CompositeChannel,
    CompTopology,
    Scenario,
    gen_cluster_channel,
    nullity,
)

COOPERATION = "cooperation"
INTERFERENCE_MITIGATION = "interference_mitigation"

SNSP = "snsp"
SSSVSP = "sssvsp"

DEFAULT_WAVEFORM_L = 128


class NoFeasibleClusterError(RuntimeError):
    """Every cluster has an empty null space; switched NSP cannot operate."""


@dataclass(frozen=True)
class SelectionResult:
    """Outcome of one switched-selection decision.

    scores holds one real score per cluster in input order (nullity for
    snsp, waveform distortion for sssvsp). best_index and worst_index are
    1-based positions into the input list.
    """

    best_index: int
    worst_index: int
    scores: tuple[float, ...]
    chosen_precoder: Precoder
    precoded_waveform: WaveformBlock


def _default_block(channels: list[CompositeChannel]) -> WaveformBlock:
    m_r = channels[0].m_r
    return orthogonal_waveform(m_r, max(DEFAULT_WAVEFORM_L, m_r))


def snsp_select(
    channels: list[CompositeChannel],
    rel_tol: float | None = None,
    x: WaveformBlock | None = None,
) -> SelectionResult:
    """Switched null-space projection: pick the cluster with most null space.

    Scores are null-space dimensions; the best cluster is the one whose
    composite channel leaves the radar the largest projection subspace,
    the worst the smallest. Raises NoFeasibleClusterError if every score
    is zero.
    """
    if not channels:
        raise ValueError("need at least one cluster channel")
    scores = tuple(float(nullity(ch, rel_tol)) for ch in channels)
    if all(s == 0 for s in scores):
        raise NoFeasibleClusterError(
            "no cluster has a nonempty null space; switched NSP cannot transmit"
        )
    best = int(np.argmax(scores)) + 1
    worst = int(np.argmin(scores)) + 1
    chosen = nsp_precoder(channels[best - 1], rel_tol)
    block = x if x is not None else _default_block(channels)
    return SelectionResult(
        best_index=best,
        worst_index=worst,
        scores=scores,
        chosen_precoder=chosen,
        precoded_waveform=precode(block, chosen),
    )


def _ssvsp_or_zero(
    channel: CompositeChannel, sigma_th: float, rel_tol: float | None
) -> Precoder:
    try:
        return ssvsp_precoder(channel, sigma_th, rel_tol)
    except EmptyNullSpaceError:
        p = np.zeros((channel.m_r, channel.m_r), dtype=complex)
        return Precoder(p=p, kind=SSVSP, subspace_rank=0, sigma_threshold=sigma_th)


def sssvsp_select(
    channels: list[CompositeChannel],
    sigma_th: float | list[float] | tuple[float, ...],
    x: WaveformBlock,
    rel_tol: float | None = None,
) -> SelectionResult:
    """Switched small-singular-value space projection.

    Each cluster is scored by how much its relaxed projection distorts the
    probing block, ||p_s x - x||_F; the least distorting cluster wins.
    sigma_th is an absolute threshold, one scalar for all clusters or one
    value per cluster (relative thresholds resolve per cluster upstream).
    Zero-nullity clusters still score (their projector may be empty, giving
    the maximal score ||x||_F), so this never raises for lack of null space.
    """
    if not channels:
        raise ValueError("need at least one cluster channel")
    if isinstance(sigma_th, (list, tuple)):
        if len(sigma_th) != len(channels):
            raise ValueError(
                f"{len(sigma_th)} thresholds given for {len(channels)} clusters"
            )
        sigma_ths = [float(th) for th in sigma_th]
    else:
        sigma_ths = [float(sigma_th)] * len(channels)
    precoders = [
        _ssvsp_or_zero(ch, th, rel_tol) for ch, th in zip(channels, sigma_ths)
    ]
    scores = tuple(frobenius_norm(pc.p @ x.x - x.x) for pc in precoders)
    best = int(np.argmin(scores)) + 1
    worst = int(np.argmax(scores)) + 1
    chosen = precoders[best - 1]
    return SelectionResult(
        best_index=best,
        worst_index=worst,
        scores=scores,
        chosen_precoder=chosen,
        precoded_waveform=precode(x, chosen),
    )


@dataclass(frozen=True)
class PriCycleConfig:
    """Knobs for run_pri_cycle.

    scheme picks the switching rule; sigma_th_rel/sigma_th_abs configure the
    relaxed projection threshold (sssvsp only, at most one; neither means
    threshold 0); coop_scheme picks the cooperation-phase information
    precoder. redraw_channels=False keeps one static channel draw across
    PRIs, True draws fresh channels each PRI.
    """

    scheme: str = SNSP
    pri_count: int = 1
    l_t: int | None = None
    rho: float = 10.0
    noiseless: bool = False
    sigma_th_rel: float | None = None
    sigma_th_abs: float | None = None
    waveform_l: int = DEFAULT_WAVEFORM_L
    coop_scheme: str = ZF
    redraw_channels: bool = False
    rel_tol: float | None = None

    def __post_init__(self):
        if self.scheme not in (SNSP, SSSVSP):
            raise ValueError(f"scheme must be {SNSP!r} or {SSSVSP!r}, got {self.scheme!r}")
        if self.coop_scheme not in (ZF, MMSE):
            raise ValueError(f"coop_scheme must be {ZF!r} or {MMSE!r}")
        if self.pri_count < 1:
            raise ValueError("pri_count must be positive")


@dataclass(frozen=True)
class PriState:
    """Snapshot of one phase of one PRI."""

    mode: str
    pri_index: int
    clustering_info: CompTopology
    channel_estimates: tuple[CompositeChannel, ...]
    coop_precoder: Precoder | None = None


def run_pri_cycle(
    scenario: Scenario, cfg: PriCycleConfig, seed: Seed = 0
) -> tuple[list[PriState], list[SelectionResult]]:
    """Simulate pri_count PRIs of the two-phase radar operating cycle.

    Per PRI: a cooperation phase (clustering info acquisition, per-cluster
    channel estimation, downlink information precoder on the stacked
    estimates) strictly followed by an interference-mitigation phase
    (switched selection over the estimated channels). Deterministic per
    seed; redraw_channels controls whether the physical channels change
    between PRIs.
    """
    topo = scenario.topology
    array = scenario.array
    trace: list[PriState] = []
    results: list[SelectionResult] = []
    block = orthogonal_waveform(array.m_r, max(cfg.waveform_l, array.m_r))
    for pri in range(1, cfg.pri_count + 1):
        draw = pri if cfg.redraw_channels else 0
        channel_seed = derive_seed(seed, 0, draw)
        noise_seed = derive_seed(seed, 1, draw)
        true_channels = [
            gen_cluster_channel(topo, i, array, channel_seed)
            for i in range(1, topo.c_t + 1)
        ]
        l_t = cfg.l_t if cfg.l_t is not None else max(ch.n_rows for ch in true_channels)
        tcfg = TrainingConfig(l_t=l_t, rho=cfg.rho)
        estimates = [
            estimate_cluster_channel(ch, tcfg, derive_seed(noise_seed, i), cfg.noiseless)
            for i, ch in enumerate(true_channels, start=1)
        ]
        h_all = np.vstack([est.h for est in estimates])
        if cfg.coop_scheme == ZF:
            coop = zf_precoder(h_all)
        else:
            coop = mmse_precoder(h_all, h_all.shape[0], 1.0 / cfg.rho)
        trace.append(
            PriState(
                mode=COOPERATION,
                pri_index=pri,
                clustering_info=topo,
                channel_estimates=tuple(estimates),
                coop_precoder=coop,
            )
        )
        if cfg.scheme == SNSP:
            result = snsp_select(estimates, cfg.rel_tol, x=block)
        else:
            if cfg.sigma_th_rel is None and cfg.sigma_th_abs is None:
                sigma_ths: list[float] = [0.0 for _ in estimates]
            else:
                sigma_ths = [
                    resolve_sigma_th(ch, cfg.sigma_th_rel, cfg.sigma_th_abs)
                    for ch in estimates
                ]
            result = sssvsp_select(estimates, sigma_ths, block, cfg.rel_tol)
        trace.append(
            PriState(
                mode=INTERFERENCE_MITIGATION,
                pri_index=pri,
                clustering_info=topo,
                channel_estimates=tuple(estimates),
            )
        )
        results.append(result)
    return trace, results
