"""Radar transmit precoders and probing waveform blocks.

Two families:

* Projection precoders shape the radar waveform to avoid interfering with a
  cluster. nsp_precoder projects onto the exact null space of the composite
  channel (zero interference, needs more radar antennas than stacked BS
  antennas). ssvsp_precoder relaxes that: it also admits right singular
  directions whose singular value sits under a threshold, trading a bounded
  interference leak for a larger projection subspace.

* Cooperation precoders let the radar broadcast information streams to the
  BSs over the same channel: classic zero-forcing and MMSE transmit filters.
"""

from dataclasses import dataclass

import numpy as np

from .matops import default_rel_tol, frobenius_norm, hermitian, numeric_rank, svd
from .scenario import CompositeChannel

NSP = "nsp"
SSVSP = "ssvsp"
ZF = "zf"
MMSE = "mmse"


class EmptyNullSpaceError(RuntimeError):
    """Composite channel has no null space to project onto."""


class ZfInfeasibleError(RuntimeError):
    """Zero-forcing needs a full-row-rank channel with rows <= columns."""


@dataclass(frozen=True)
class Precoder:
    """A transmit precoding matrix plus how it was built.

    For nsp/ssvsp, p is an m_r x m_r orthogonal projection (Hermitian,
    idempotent) and subspace_rank its rank. For zf/mmse, p is m_r x d_r.
    sigma_threshold records the ssvsp threshold actually applied.
    """

    p: np.ndarray
    kind: str
    subspace_rank: int | None = None
    sigma_threshold: float | None = None


@dataclass(frozen=True)
class WaveformBlock:
    """m_r x l block of probing waveform snapshots."""

    x: np.ndarray

    @property
    def m_r(self) -> int:
        return self.x.shape[0]

    @property
    def l(self) -> int:
        return self.x.shape[1]


def orthogonal_waveform(m_r: int, l: int) -> WaveformBlock:
    """Deterministic waveform block with exactly orthogonal antenna streams.

    Rows are the first m_r rows of the l-point DFT matrix, so
    (1/l) x x^H = I and every antenna transmits at constant unit power.
    Requires l >= m_r.
    """
    if l < m_r:
        raise ValueError(f"block length l={l} must be at least m_r={m_r}")
    p = np.arange(m_r)[:, None]
    q = np.arange(l)[None, :]
    return WaveformBlock(x=np.exp(-2j * np.pi * p * q / l))


def coherence_matrix(block: WaveformBlock) -> np.ndarray:
    """Sample coherence matrix (1/l) x x^H of a waveform block."""
    return (block.x @ hermitian(block.x)) / block.l


def _resolved_rel_tol(channel: CompositeChannel, rel_tol: float | None) -> float:
    if rel_tol is None:
        return default_rel_tol(channel.n_rows, channel.m_r)
    return rel_tol


def nsp_precoder(channel: CompositeChannel, rel_tol: float | None = None) -> Precoder:
    """Projection onto the null space of the composite channel.

    With res = svd(h) and r its numeric rank, the projector is
    v_bar v_bar^H over the last m_r - r right singular vectors, so
    h @ p vanishes to rounding. Raises EmptyNullSpaceError when the
    channel has full column rank (no null space to use).
    """
    rel_tol = _resolved_rel_tol(channel, rel_tol)
    res = svd(channel.h)
    rank = numeric_rank(res, rel_tol)
    null_dim = channel.m_r - rank
    if null_dim == 0:
        raise EmptyNullSpaceError(
            f"channel of shape {channel.h.shape} has no null space; "
            "the radar needs more antennas than the cluster's stacked total"
        )
    v_bar = res.v[:, rank:]
    return Precoder(p=v_bar @ hermitian(v_bar), kind=NSP, subspace_rank=null_dim)


def ssvsp_precoder(
    channel: CompositeChannel, sigma_th: float, rel_tol: float | None = None
) -> Precoder:
    """Projection onto the span of small-singular-value directions.

    Keeps every right singular vector whose singular value is strictly
    below sigma_th, plus the whole null space. sigma_th = 0 reduces to
    nsp_precoder exactly, including its empty-null-space error. For
    sigma_th > 0 an empty selection yields a rank-0 zero projector so
    that selection layers can still score the cluster. The interference
    leak obeys ||h @ p||_F <= sigma_th * sqrt(rank - nullity).
    """
    if sigma_th < 0:
        raise ValueError(f"sigma_th must be nonnegative, got {sigma_th}")
    rel_tol = _resolved_rel_tol(channel, rel_tol)
    res = svd(channel.h)
    rank = numeric_rank(res, rel_tol)
    keep = np.zeros(channel.m_r, dtype=bool)
    keep[rank:] = True
    keep[:rank] |= res.sigma[:rank] < sigma_th
    n_keep = int(np.count_nonzero(keep))
    if n_keep == 0:
        if sigma_th == 0:
            raise EmptyNullSpaceError(
                f"channel of shape {channel.h.shape} has no null space and "
                "sigma_th=0 admits no singular directions"
            )
        p = np.zeros((channel.m_r, channel.m_r), dtype=complex)
        return Precoder(p=p, kind=SSVSP, subspace_rank=0, sigma_threshold=sigma_th)
    v_bar = res.v[:, keep]
    return Precoder(
        p=v_bar @ hermitian(v_bar),
        kind=SSVSP,
        subspace_rank=n_keep,
        sigma_threshold=sigma_th,
    )


def resolve_sigma_th(
    channel: CompositeChannel,
    sigma_th_rel: float | None,
    sigma_th_abs: float | None,
) -> float:
    """Turn a relative-or-absolute threshold setting into an absolute one.

    Exactly one of the two may be given; the relative form is a fraction
    of the channel's largest singular value.
    """
    if (sigma_th_rel is None) == (sigma_th_abs is None):
        raise ValueError("give exactly one of sigma_th_rel and sigma_th_abs")
    if sigma_th_abs is not None:
        return float(sigma_th_abs)
    sigma = svd(channel.h).sigma
    smax = float(sigma[0]) if sigma.size else 0.0
    return float(sigma_th_rel) * smax


def zf_precoder(h_comp: np.ndarray, normalize_power: bool = False) -> Precoder:
    """Zero-forcing transmit precoder p = h^H (h h^H)^{-1}.

    h_comp is the d_r x m_r downlink channel carrying one stream per row;
    h_comp @ p = I, so every BS antenna receives its own stream free of
    cross-stream interference. Raises ZfInfeasibleError when d_r > m_r or
    the rows are rank deficient. normalize_power=True rescales to unit
    total transmit power (||p||_F = 1), giving up the exact identity.
    """
    h_comp = np.asarray(h_comp)
    d_r, m_r = h_comp.shape
    if d_r > m_r:
        raise ZfInfeasibleError(
            f"cannot zero-force {d_r} streams through {m_r} transmit antennas"
        )
    res = svd(h_comp)
    if numeric_rank(res, default_rel_tol(d_r, m_r)) < d_r:
        raise ZfInfeasibleError("ZF infeasible: channel rows are rank deficient")
    gram = h_comp @ hermitian(h_comp)
    p = hermitian(h_comp) @ np.linalg.inv(gram)
    if normalize_power:
        p = p / frobenius_norm(p)
    return Precoder(p=p, kind=ZF)


def mmse_precoder(
    h_comp: np.ndarray, d_r: int, sigma2: float, normalize_power: bool = False
) -> Precoder:
    """MMSE transmit precoder p = h^H (h h^H + d_r sigma2 I)^{-1}.

    Regularizes the ZF inverse by the noise level; as sigma2 -> 0 it
    converges to the ZF precoder whenever ZF is feasible, and it stays
    finite for rank-deficient channels as long as sigma2 > 0.
    """
    h_comp = np.asarray(h_comp)
    if h_comp.shape[0] != d_r:
        raise ValueError(f"d_r={d_r} does not match channel rows {h_comp.shape[0]}")
    if sigma2 < 0:
        raise ValueError("sigma2 must be nonnegative")
    if sigma2 == 0:
        zf = zf_precoder(h_comp, normalize_power=normalize_power)
        return Precoder(p=zf.p, kind=MMSE)
    gram = h_comp @ hermitian(h_comp) + d_r * sigma2 * np.eye(d_r)
    p = hermitian(h_comp) @ np.linalg.inv(gram)
    if normalize_power:
        p = p / frobenius_norm(p)
    return Precoder(p=p, kind=MMSE)


def precode(block: WaveformBlock, precoder: Precoder) -> WaveformBlock:
    """Apply a precoder to a waveform block."""
    return WaveformBlock(x=precoder.p @ block.x)
