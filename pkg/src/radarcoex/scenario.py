"""Radar array geometry, clustered network topology, and channel generation.

The radar is a uniform linear array that shares spectrum with a cellular
network whose base stations (BSs) are grouped into coordinating clusters.
Channels between the radar and the BSs of one cluster stack vertically into
a composite interference channel; its null space is what the projection
precoders exploit.

Cluster and BS indices are 1-based throughout, matching how selection
results report them.
"""

from dataclasses import dataclass

import numpy as np

from .matops import (
    Seed,
    default_rel_tol,
    derive_seed,
    numeric_rank,
    random_complex_gaussian,
    svd,
)

TRUE_CSI = "true_csi"
ESTIMATED_CSI = "estimated_csi"


@dataclass(frozen=True)
class RadarArray:
    """Uniform linear radar array.

    m_r: number of antenna elements (at least 2).
    spacing_wavelengths: inter-element spacing in carrier wavelengths.
    carrier_hz: carrier frequency, metadata for reporting.
    """

    m_r: int
    spacing_wavelengths: float = 0.75
    carrier_hz: float = 3.5e9

    def __post_init__(self):
        if self.m_r < 2:
            raise ValueError(f"m_r must be at least 2, got {self.m_r}")
        if self.spacing_wavelengths <= 0:
            raise ValueError("spacing_wavelengths must be positive")
        if self.carrier_hz <= 0:
            raise ValueError("carrier_hz must be positive")


@dataclass(frozen=True)
class CompTopology:
    """Clustered coordination topology of the cellular network.

    m: total BS count in the network.
    k: total user count, metadata only.
    n_bs: antennas per BS, either one int for every cluster or a per-cluster
        tuple (all BSs inside one cluster share a count).
    clusters: per-cluster frozensets of 1-based BS ids, pairwise disjoint.
    """

    m: int
    k: int
    n_bs: int | tuple[int, ...]
    clusters: tuple[frozenset[int], ...]

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("m must be positive")
        if not self.clusters:
            raise ValueError("at least one cluster is required")
        seen: set[int] = set()
        for idx, cluster in enumerate(self.clusters, start=1):
            if not cluster:
                raise ValueError(f"cluster {idx} is empty")
            if seen & cluster:
                raise ValueError(f"cluster {idx} overlaps an earlier cluster")
            seen |= cluster
        if not seen <= set(range(1, self.m + 1)):
            raise ValueError("cluster BS ids must lie in 1..m")
        if isinstance(self.n_bs, tuple):
            if len(self.n_bs) != len(self.clusters):
                raise ValueError(
                    f"per-cluster n_bs has {len(self.n_bs)} entries "
                    f"for {len(self.clusters)} clusters"
                )
            bad = [n for n in self.n_bs if n < 1]
        else:
            bad = [self.n_bs] if self.n_bs < 1 else []
        if bad:
            raise ValueError("n_bs entries must be positive")

    @property
    def c_t(self) -> int:
        return len(self.clusters)

    def n_bs_for(self, cluster_index: int) -> int:
        """Antennas per BS in the given 1-based cluster."""
        self._check_cluster_index(cluster_index)
        if isinstance(self.n_bs, tuple):
            return self.n_bs[cluster_index - 1]
        return self.n_bs

    def m_k(self, cluster_index: int) -> int:
        """Number of BSs in the given 1-based cluster."""
        self._check_cluster_index(cluster_index)
        return len(self.clusters[cluster_index - 1])

    def _check_cluster_index(self, cluster_index: int) -> None:
        if not 1 <= cluster_index <= self.c_t:
            raise ValueError(
                f"cluster_index must be in 1..{self.c_t}, got {cluster_index}"
            )


def uniform_topology(
    m_k: int, c_t: int, n_bs: int | tuple[int, ...], k: int = 1
) -> CompTopology:
    """Topology of c_t disjoint clusters with m_k BSs each, ids assigned in order."""
    if m_k < 1 or c_t < 1:
        raise ValueError("m_k and c_t must be positive")
    clusters = tuple(
        frozenset(range(i * m_k + 1, (i + 1) * m_k + 1)) for i in range(c_t)
    )
    n_bs_field = tuple(int(n) for n in n_bs) if isinstance(n_bs, (tuple, list)) else int(n_bs)
    return CompTopology(m=m_k * c_t, k=k, n_bs=n_bs_field, clusters=clusters)


@dataclass(frozen=True)
class CompositeChannel:
    """Vertical stack of the per-BS channels of one cluster.

    h has one n_bs-row block per BS, in ascending BS-id order, and m_r
    columns. kind records whether entries are ground truth or estimates.
    """

    cluster_index: int
    h: np.ndarray
    kind: str
    n_bs: int

    def __post_init__(self):
        if self.kind not in (TRUE_CSI, ESTIMATED_CSI):
            raise ValueError(f"unknown CSI kind {self.kind!r}")
        if self.h.ndim != 2:
            raise ValueError("composite channel must be a 2-D matrix")
        if self.n_bs < 1 or self.h.shape[0] % self.n_bs != 0:
            raise ValueError(
                f"row count {self.h.shape[0]} is not a multiple of n_bs={self.n_bs}"
            )

    @property
    def m_r(self) -> int:
        return self.h.shape[1]

    @property
    def n_rows(self) -> int:
        return self.h.shape[0]

    def blocks(self) -> list[np.ndarray]:
        """Per-BS row blocks, in the stacking order."""
        n = self.n_bs
        return [self.h[i * n : (i + 1) * n, :] for i in range(self.n_rows // n)]


@dataclass(frozen=True)
class Scenario:
    """One simulated deployment: array plus topology plus target geometry."""

    array: RadarArray
    topology: CompTopology
    theta: float = 0.0
    r0_km: float = 5.0


def steering_vector(array: RadarArray, theta: float) -> np.ndarray:
    """Far-field steering vector of the radar array toward angle theta.

    theta is in radians off broadside; entry p (1-based) is
    exp(-j 2 pi spacing (p - 1) sin(theta)). Unit modulus per entry.
    """
    p = np.arange(array.m_r)
    return np.exp(-2j * np.pi * array.spacing_wavelengths * p * np.sin(theta))


def steering_derivative(array: RadarArray, theta: float) -> np.ndarray:
    """Derivative of steering_vector with respect to theta."""
    p = np.arange(array.m_r)
    coeff = -2j * np.pi * array.spacing_wavelengths * p * np.cos(theta)
    return coeff * steering_vector(array, theta)


def block_seed(seed: Seed, cluster_index: int, bs_index: int) -> np.random.SeedSequence:
    """Seed of one BS block inside gen_cluster_channel, exposed for tests."""
    return derive_seed(seed, cluster_index, bs_index)


def gen_cluster_channel(
    topology: CompTopology, cluster_index: int, array: RadarArray, seed: Seed
) -> CompositeChannel:
    """Draw the composite radar-to-cluster channel for one cluster.

    Each BS block is an independent n_bs x m_r i.i.d. complex Gaussian
    draw with a seed derived from (seed, cluster_index, bs_index); blocks
    stack in ascending BS-id order. Deterministic per seed.
    """
    n_bs = topology.n_bs_for(cluster_index)
    members = sorted(topology.clusters[cluster_index - 1])
    blocks = [
        random_complex_gaussian(n_bs, array.m_r, block_seed(seed, cluster_index, bs))
        for bs in members
    ]
    return CompositeChannel(
        cluster_index=cluster_index,
        h=np.vstack(blocks),
        kind=TRUE_CSI,
        n_bs=n_bs,
    )


def nullity(channel: CompositeChannel, rel_tol: float | None = None) -> int:
    """Null-space dimension of the composite channel, m_r minus numeric rank."""
    if rel_tol is None:
        rel_tol = default_rel_tol(channel.n_rows, channel.m_r)
    return channel.m_r - numeric_rank(svd(channel.h), rel_tol)
