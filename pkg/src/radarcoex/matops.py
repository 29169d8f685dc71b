"""Complex matrix primitives: SVD, numeric rank, norms, and seeded random draws.

Everything downstream (channel generation, projection precoders, estimation)
goes through these helpers so that tolerance conventions and seeding stay in
one place. Matrices are plain numpy complex128 arrays.
"""

from dataclasses import dataclass

import numpy as np

Seed = int | np.random.SeedSequence | np.random.Generator


class SvdConvergenceError(RuntimeError):
    """Raised when the underlying SVD iteration fails to converge."""


@dataclass(frozen=True)
class SvdResult:
    """Full singular value decomposition a = u @ diag(sigma) @ v.conj().T.

    u is (m, m) unitary, v is (n, n) unitary with right singular vectors as
    columns, sigma is length min(m, n), real, sorted descending.
    """

    u: np.ndarray
    sigma: np.ndarray
    v: np.ndarray


def svd(a: np.ndarray) -> SvdResult:
    """Full SVD of a 2-D complex matrix.

    Raises SvdConvergenceError if the LAPACK iteration does not converge,
    ValueError if a is not 2-D.
    """
    a = np.asarray(a)
    if a.ndim != 2:
        raise ValueError(f"svd expects a 2-D matrix, got shape {a.shape}")
    try:
        u, s, vh = np.linalg.svd(a, full_matrices=True)
    except np.linalg.LinAlgError as exc:
        raise SvdConvergenceError(f"SVD did not converge for shape {a.shape}") from exc
    return SvdResult(u=u, sigma=s, v=vh.conj().T)


def reconstruct(res: SvdResult) -> np.ndarray:
    """Rebuild the original matrix from an SvdResult (mainly for tests)."""
    m = res.u.shape[0]
    n = res.v.shape[0]
    s = np.zeros((m, n), dtype=complex)
    k = res.sigma.shape[0]
    s[:k, :k] = np.diag(res.sigma)
    return res.u @ s @ res.v.conj().T


def default_rel_tol(rows: int, cols: int) -> float:
    """Default relative rank tolerance, max(rows, cols) times machine epsilon."""
    return max(rows, cols) * float(np.finfo(np.float64).eps)


def numeric_rank(res: SvdResult, rel_tol: float) -> int:
    """Count singular values above rel_tol * sigma_max.

    rel_tol must lie in (0, 1). A zero matrix has rank 0.
    """
    if not 0.0 < rel_tol < 1.0:
        raise ValueError(f"rel_tol must be in (0, 1), got {rel_tol}")
    if res.sigma.size == 0:
        return 0
    smax = float(res.sigma[0])
    if smax == 0.0:
        return 0
    return int(np.count_nonzero(res.sigma > rel_tol * smax))


def derive_seed(seed: Seed, *key: int) -> np.random.SeedSequence:
    """Derive a child seed from a root seed and an integer key path.

    Children with distinct key paths give statistically independent streams,
    and the derivation is deterministic, so any row of an experiment can be
    regenerated in isolation from (root seed, key).
    """
    if isinstance(seed, np.random.Generator):
        raise TypeError("derive_seed needs an int or SeedSequence, not a Generator")
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    spawn_key = tuple(ss.spawn_key) + tuple(int(k) for k in key)
    return np.random.SeedSequence(entropy=ss.entropy, spawn_key=spawn_key)


def seed_to_int(seed: Seed) -> int:
    """Collapse a seed to a single reproducible unsigned 64-bit integer."""
    if isinstance(seed, np.random.Generator):
        raise TypeError("seed_to_int needs an int or SeedSequence, not a Generator")
    if isinstance(seed, int):
        return seed
    return int(seed.generate_state(1, dtype=np.uint64)[0])


def rng_from(seed: Seed) -> np.random.Generator:
    """Build a Generator from an int, SeedSequence, or pass one through."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def random_complex_gaussian(rows: int, cols: int, seed: Seed) -> np.ndarray:
    """Draw an i.i.d. circularly symmetric complex Gaussian matrix.

    Entries have zero mean and unit total variance (1/2 per real and
    imaginary part). The same seed gives a bitwise identical draw.
    """
    if rows < 1 or cols < 1:
        raise ValueError(f"matrix dimensions must be positive, got {rows}x{cols}")
    rng = rng_from(seed)
    re = rng.standard_normal((rows, cols))
    im = rng.standard_normal((rows, cols))
    return (re + 1j * im) / np.sqrt(2.0)


def hermitian(a: np.ndarray) -> np.ndarray:
    """Conjugate transpose."""
    return np.asarray(a).conj().T


def frobenius_norm(a: np.ndarray) -> float:
    """Frobenius norm."""
    return float(np.linalg.norm(a, "fro"))


def l2_norm(x: np.ndarray) -> float:
    """Euclidean norm of a vector."""
    return float(np.linalg.norm(np.ravel(x)))


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Matrix product with an explicit inner-dimension check."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape[-1] != b.shape[0]:
        raise ValueError(f"inner dimensions differ: {a.shape} @ {b.shape}")
    return a @ b
