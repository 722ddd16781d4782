"""Dense Hermitian linear algebra and the spectral-order maximum ``A v B``.

``A v B`` is assembled from nested spectral subspaces: with the merged
spectrum ``l_1 > ... > l_p`` of ``A`` and ``B`` and

    E_j = sum_{i <= j} (ker(A - l_i) + ker(B - l_i)),

the maximum carries eigenvalue ``l_j`` on ``E_j`` minus ``E_{j-1}`` (in the
orthogonal sense), for every ``j`` where the chain actually grows.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .distributions import EmpiricalStep
from .errors import AmbiguousCutError, ContractError, DomainError
from .rng import RngStream

__all__ = [
    "SpectralDecomposition", "SubspaceBasis", "as_hermitian", "eig",
    "haar_unitary", "rotate_diag", "spectral_projector", "subspace_sum",
    "spectral_max", "empirical_spectral_law", "top_n_merge",
    "degeneracy_tol", "write_hermitian_csv", "read_hermitian_csv",
]

HERMITIAN_TOL = 1e-12
RANK_RTOL = 1e-8


def degeneracy_tol(values) -> float:
    """Merge tolerance for eigenvalues: ``1e-8 * (1 + max |lambda|)``."""
    values = np.asarray(values)
    return 1e-8 * (1.0 + (np.max(np.abs(values)) if values.size else 0.0))


def as_hermitian(H) -> np.ndarray:
    """Validate ``H`` as a finite square Hermitian matrix and return it as complex."""
    H = np.asarray(H, dtype=complex)
    if H.ndim != 2 or H.shape[0] != H.shape[1] or H.shape[0] < 1:
        raise ContractError(f"expected a non-empty square matrix, got shape {H.shape}")
    if not np.all(np.isfinite(H)):
        raise ContractError("matrix has non-finite entries")
    scale = max(1.0, float(np.max(np.abs(H))))
    if np.max(np.abs(H - H.conj().T)) > HERMITIAN_TOL * scale:
        raise ContractError("matrix is not Hermitian within tolerance")
    return H


@dataclass(frozen=True)
class SpectralDecomposition:
    """Eigenvalues in decreasing order; column ``j`` of ``vectors`` pairs with ``values[j]``."""

    values: np.ndarray
    vectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return (self.vectors * self.values) @ self.vectors.conj().T


@dataclass(frozen=True)
class SubspaceBasis:
    """Orthonormal columns spanning a subspace of ``C^dim``."""

    basis: np.ndarray

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    @property
    def rank(self) -> int:
        return self.basis.shape[1]

    def projector(self) -> np.ndarray:
        return self.basis @ self.basis.conj().T

    @classmethod
    def empty(cls, dim: int) -> "SubspaceBasis":
        return cls(np.zeros((dim, 0), dtype=complex))


def eig(H) -> SpectralDecomposition:
    """Eigendecomposition with eigenvalues sorted decreasingly (LAPACK ``heevd``)."""
    H = as_hermitian(H)
    w, V = np.linalg.eigh(H)
    return SpectralDecomposition(w[::-1].copy(), V[:, ::-1].copy())


def haar_unitary(N: int, rng: RngStream) -> np.ndarray:
    """Haar-distributed ``N x N`` unitary.

    QR of a standard complex Gaussian matrix, with the phases of ``R``'s
    diagonal moved into ``Q`` so the factorisation is unique.
    """
    if N < 1:
        raise DomainError("dimension must be at least 1")
    Z = (rng.standard_normal((N, N)) + 1j * rng.standard_normal((N, N))) / np.sqrt(2.0)
    Q, R = np.linalg.qr(Z)
    d = np.diagonal(R)
    return Q * (d / np.abs(d))


def rotate_diag(values, rng: RngStream) -> np.ndarray:
    """``U diag(values) U*`` for a fresh Haar ``U``."""
    values = np.asarray(values, dtype=float)
    if values.ndim != 1 or not np.all(np.isfinite(values)):
        raise DomainError("values must be a finite 1-d array")
    U = haar_unitary(values.size, rng)
    M = (U * values) @ U.conj().T
    return 0.5 * (M + M.conj().T)


def spectral_projector(H, t: float, tol: float | None = None) -> SubspaceBasis:
    """Orthonormal basis of the span of eigenvectors of ``H`` with eigenvalue ``> t``."""
    dec = eig(H)
    tol = degeneracy_tol(dec.values) if tol is None else tol
    if np.any(np.abs(dec.values - t) <= tol):
        raise AmbiguousCutError(f"cut level {t!r} lies within {tol:.3g} of an eigenvalue")
    return SubspaceBasis(dec.vectors[:, dec.values > t])


def _orth(M: np.ndarray, ref: float | None = None) -> np.ndarray:
    """Orthonormal basis of the column span of ``M`` with relative rank cut."""
    if M.shape[1] == 0:
        return M
    U, s, _ = np.linalg.svd(M, full_matrices=False)
    top = s[0] if ref is None else ref
    r = int(np.sum(s > RANK_RTOL * top)) if top > 0 else 0
    return U[:, :r]


def _basis(X) -> np.ndarray:
    return X.basis if isinstance(X, SubspaceBasis) else np.asarray(X, dtype=complex)


def subspace_sum(A, B) -> SubspaceBasis:
    """Orthonormal basis of ``Im A + Im B``; rank by singular values above ``1e-8 * s_max``."""
    a, b = _basis(A), _basis(B)
    if a.shape[0] != b.shape[0]:
        raise ContractError("subspaces live in different ambient dimensions")
    return SubspaceBasis(_orth(np.hstack((a, b))))


def _clusters(values: np.ndarray, tol: float) -> list[tuple[int, int]]:
    """Split decreasing values into ``[start, stop)`` runs with gaps ``<= tol``."""
    out = []
    start = 0
    for i in range(1, values.size + 1):
        if i == values.size or values[i - 1] - values[i] > tol:
            out.append((start, i))
            start = i
    return out


def spectral_max(A, B) -> np.ndarray:
    """Least upper bound of ``A`` and ``B`` in the spectral order."""
    A, B = as_hermitian(A), as_hermitian(B)
    if A.shape != B.shape:
        raise ContractError("matrices must have the same dimension")
    N = A.shape[0]
    da, db = eig(A), eig(B)
    vals = np.concatenate((da.values, db.values))
    vecs = np.hstack((da.vectors, db.vectors))
    order = np.argsort(-vals, kind="stable")
    vals, vecs = vals[order], vecs[:, order]
    tol = degeneracy_tol(vals)

    out = np.zeros((N, N), dtype=complex)
    Q = np.zeros((N, 0), dtype=complex)  # orthonormal basis of E_{j-1}
    for start, stop in _clusters(vals, tol):
        lam = vals[start:stop].mean()
        V = vecs[:, start:stop]
        # the part of the new eigenvectors not already in E_{j-1}
        R = V - Q @ (Q.conj().T @ V)
        W = _orth(R, ref=1.0)
        if W.shape[1] == 0:
            continue
        W = W[:, : N - Q.shape[1]]
        out += lam * (W @ W.conj().T)
        Q = np.hstack((Q, W))
        if Q.shape[1] >= N:
            break
    return 0.5 * (out + out.conj().T)


def empirical_spectral_law(H) -> EmpiricalStep:
    """Uniform law on the eigenvalues of ``H`` counted with multiplicity."""
    return EmpiricalStep(eig(H).values)


def top_n_merge(values, N: int) -> np.ndarray:
    """The ``N`` largest entries, in decreasing order, multiplicities kept."""
    values = np.asarray(values, dtype=float).ravel()
    if N < 0 or values.size < N:
        raise DomainError(f"need at least {N} values, got {values.size}")
    return np.sort(values)[::-1][:N].copy()


def write_hermitian_csv(path, H) -> None:
    """Real block stacked on imaginary block, ``2N`` rows of ``N`` values."""
    H = as_hermitian(H)
    N = H.shape[0]
    with open(path, "w") as fh:
        fh.write(f"# hermitian N={N}\n")
        for row in np.vstack((H.real, H.imag)):
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def read_hermitian_csv(path) -> np.ndarray:
    with open(path) as fh:
        header = fh.readline().strip()
        if not header.startswith("# hermitian N="):
            raise ContractError(f"{path}: missing '# hermitian N=<dim>' header")
        N = int(header.split("=", 1)[1])
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    if data.shape != (2 * N, N):
        raise ContractError(f"{path}: expected {2 * N}x{N} values, got {data.shape}")
    return as_hermitian(data[:N] + 1j * data[N:])
