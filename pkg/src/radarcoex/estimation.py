"""Maximum-likelihood training-based estimation of the radar-to-BS channels.

The radar sends L_t training snapshots on the reverse link; each cluster's
BSs jointly observe them and the ML estimate of the stacked reverse channel
follows in closed form. Training rows are taken from a DFT matrix, which
meets the optimality condition S S^H = L_t I with unit-modulus entries, so
the estimator error is white with per-entry variance n_streams/(rho L_t).
"""

from dataclasses import dataclass

import numpy as np

from .matops import Seed, hermitian, rng_from
from .scenario import ESTIMATED_CSI, CompositeChannel


@dataclass(frozen=True)
class TrainingConfig:
    """Training length and average per-antenna SNR (linear)."""

    l_t: int
    rho: float

    def __post_init__(self):
        if self.l_t < 1:
            raise ValueError("l_t must be positive")
        if self.rho <= 0:
            raise ValueError("rho must be positive (linear scale)")


@dataclass(frozen=True)
class TrainingMatrix:
    """n_streams x l_t training block with orthogonal unit-modulus rows."""

    s: np.ndarray

    @property
    def n_streams(self) -> int:
        return self.s.shape[0]

    @property
    def l_t(self) -> int:
        return self.s.shape[1]


def design_training(n_streams: int, l_t: int) -> TrainingMatrix:
    """First n_streams rows of the l_t-point DFT matrix.

    Rows are mutually orthogonal with unit-modulus entries, so
    S S^H = l_t I exactly. Raises ValueError when l_t < n_streams, which
    would make the channel unidentifiable.
    """
    if n_streams < 1:
        raise ValueError("n_streams must be positive")
    if l_t < n_streams:
        raise ValueError(
            f"training too short for identifiability: l_t={l_t} < n_streams={n_streams}"
        )
    p = np.arange(n_streams)[:, None]
    q = np.arange(l_t)[None, :]
    return TrainingMatrix(s=np.exp(-2j * np.pi * p * q / l_t))


def estimate_channel(
    h_bar_true: np.ndarray,
    training: TrainingMatrix,
    cfg: TrainingConfig,
    seed: Seed,
    noiseless: bool = False,
) -> np.ndarray:
    """ML estimate of the reverse-link channel from noisy training snapshots.

    h_bar_true is m_r x n_streams (radar transmit antennas by stacked BS
    antennas). The observation is
        y = sqrt(rho / n_streams) h_bar s + w
    with w i.i.d. unit-variance complex Gaussian, and the estimate is
        h_hat = sqrt(n_streams / rho) y s^H (s s^H)^{-1}.
    noiseless=True drops w, making the estimate exact; it exists for tests
    and for forcing true-CSI behavior through the estimation path.
    """
    h_bar_true = np.asarray(h_bar_true)
    if h_bar_true.ndim != 2:
        raise ValueError("h_bar_true must be a 2-D matrix")
    n_streams = h_bar_true.shape[1]
    if training.n_streams != n_streams:
        raise ValueError(
            f"training has {training.n_streams} rows for {n_streams} streams"
        )
    if cfg.l_t != training.l_t:
        raise ValueError(f"cfg.l_t={cfg.l_t} differs from training length {training.l_t}")
    if cfg.l_t < n_streams:
        raise ValueError(
            f"training too short for identifiability: l_t={cfg.l_t} < n_streams={n_streams}"
        )
    s = training.s
    scale = np.sqrt(cfg.rho / n_streams)
    y = scale * (h_bar_true @ s)
    if not noiseless:
        rng = rng_from(seed)
        m_r = h_bar_true.shape[0]
        w = (rng.standard_normal((m_r, cfg.l_t)) + 1j * rng.standard_normal((m_r, cfg.l_t)))
        y = y + w / np.sqrt(2.0)
    gram = s @ hermitian(s)
    # gram is l_t * I by construction; solve keeps the formula literal.
    return (y @ hermitian(s)) @ np.linalg.inv(gram) / scale


def estimated_composite(
    h_bar_hat: np.ndarray, cluster_index: int, n_bs: int
) -> CompositeChannel:
    """Forward composite channel from a reverse-link estimate (reciprocity)."""
    return CompositeChannel(
        cluster_index=cluster_index,
        h=hermitian(h_bar_hat),
        kind=ESTIMATED_CSI,
        n_bs=n_bs,
    )


def estimate_cluster_channel(
    true_channel: CompositeChannel,
    cfg: TrainingConfig,
    seed: Seed,
    noiseless: bool = False,
) -> CompositeChannel:
    """Run training-based estimation against a known true composite channel.

    Convenience wrapper: forms the reverse channel by reciprocity, designs
    DFT training for the cluster's stacked antenna count, estimates, and
    returns the forward composite estimate with matching metadata.
    """
    h_bar_true = hermitian(true_channel.h)
    training = design_training(true_channel.n_rows, cfg.l_t)
    h_bar_hat = estimate_channel(h_bar_true, training, cfg, seed, noiseless=noiseless)
    return estimated_composite(h_bar_hat, true_channel.cluster_index, true_channel.n_bs)
