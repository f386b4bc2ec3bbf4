"""Spectral decompositions and product observables X (x) Y.

Distinct eigenvalues are sorted ascending and the position in that list is
the label ``k`` used by the relabelled operators ``omega_mu`` and ``k_mu``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .qstate import TOL, Operator, embed, tensor

MERGE_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class SpectralDecomposition:
    source: Operator
    eigenvalues: tuple[float, ...]
    projectors: tuple[Operator, ...]

    def __len__(self):
        return len(self.eigenvalues)

    @property
    def dims(self) -> tuple[int, ...]:
        return self.source.dims

    def reassemble(self) -> Operator:
        mat = sum(lam * p.matrix for lam, p in zip(self.eigenvalues, self.projectors))
        return Operator(self.dims, mat)

    def embedded(self, targets, dims) -> "SpectralDecomposition":
        """The same decomposition lifted onto a larger space."""
        return SpectralDecomposition(
            embed(self.source, targets, dims),
            self.eigenvalues,
            tuple(embed(p, targets, dims) for p in self.projectors),
        )


def spectral_decompose(H: Operator, merge_tol: float = MERGE_TOL) -> SpectralDecomposition:
    """Distinct eigenvalues of Hermitian ``H`` with their (possibly degenerate) projectors."""
    if not H.is_hermitian(TOL):
        raise ValueError("spectral_decompose requires a Hermitian operator")
    herm = 0.5 * (H.matrix + H.matrix.conj().T)
    vals, vecs = np.linalg.eigh(herm)
    groups: list[list[int]] = []
    for i, v in enumerate(vals):
        if groups and abs(v - vals[groups[-1][0]]) <= merge_tol:
            groups[-1].append(i)
        else:
            groups.append([i])
    eigenvalues = []
    projectors = []
    for g in groups:
        eigenvalues.append(float(np.mean(vals[g])))
        V = vecs[:, g]
        projectors.append(Operator(H.dims, V @ V.conj().T))
    return SpectralDecomposition(H, tuple(eigenvalues), tuple(projectors))


def projector_decomposition(projectors, eigenvalues=None) -> SpectralDecomposition:
    """Build a decomposition from an explicit complete family of orthogonal projectors."""
    projectors = tuple(projectors)
    if eigenvalues is None:
        eigenvalues = tuple(float(k) for k in range(len(projectors)))
    dims = projectors[0].dims
    src = Operator(dims, sum(lam * p.matrix for lam, p in zip(eigenvalues, projectors)))
    total = sum(p.matrix for p in projectors)
    if np.max(np.abs(total - np.eye(total.shape[0]))) > TOL:
        raise ValueError("projectors do not sum to the identity")
    return SpectralDecomposition(src, tuple(float(e) for e in eigenvalues), projectors)


@dataclass(frozen=True, eq=False)
class ProductObservable:
    """``X`` on subsystem A and ``Y`` on subsystem B.

    The protocol party holding the factor with fewer distinct eigenvalues plays
    Alice. When that is B, ``swapped`` is set and ``alice``/``bob`` give the
    subsystem indices; operators returned by this class always act on the
    original A (x) B ordering.
    """

    X: Operator
    Y: Operator
    spec_x: SpectralDecomposition
    spec_y: SpectralDecomposition
    swapped: bool

    @classmethod
    def from_operators(cls, X, Y, merge_tol: float = MERGE_TOL) -> "ProductObservable":
        X = X if isinstance(X, Operator) else Operator((np.shape(X)[0],), X)
        Y = Y if isinstance(Y, Operator) else Operator((np.shape(Y)[0],), Y)
        if len(X.dims) != 1 or len(Y.dims) != 1:
            raise ValueError("product factors must each act on a single subsystem")
        sx = spectral_decompose(X, merge_tol)
        sy = spectral_decompose(Y, merge_tol)
        return cls(X, Y, sx, sy, swapped=len(sx) > len(sy))

    @property
    def dims(self) -> tuple[int, int]:
        return (self.X.dims[0], self.Y.dims[0])

    @property
    def alice(self) -> int:
        return 1 if self.swapped else 0

    @property
    def bob(self) -> int:
        return 0 if self.swapped else 1

    @property
    def alice_spec(self) -> SpectralDecomposition:
        return self.spec_y if self.swapped else self.spec_x

    @property
    def bob_spec(self) -> SpectralDecomposition:
        return self.spec_x if self.swapped else self.spec_y

    @property
    def n_labels(self) -> int:
        """Number of distinct eigenvalues on Alice's side, written |x|."""
        return len(self.alice_spec)

    def operator(self) -> Operator:
        return tensor(self.X, self.Y)

    def _on_ab(self, alice_op: Operator) -> Operator:
        bob_op = self.bob_spec.source
        return tensor(bob_op, alice_op) if self.swapped else tensor(alice_op, bob_op)

    def relabelled_alice(self, mu: int) -> Operator:
        """``sum_k x_{k-mu} Xhat_k`` on Alice's subsystem."""
        n = self.n_labels
        _check_mu(mu, n)
        sp = self.alice_spec
        mat = sum(sp.eigenvalues[(k - mu) % n] * sp.projectors[k].matrix for k in range(n))
        return Operator(sp.dims, mat)


def _check_mu(mu: int, n: int) -> None:
    if not 0 <= mu < n:
        raise ValueError(f"mu={mu} out of range for {n} eigenvalue labels")


def omega_mu(p: ProductObservable, mu: int) -> Operator:
    """The product operator realized when Alice reads ``mu``; ``omega_mu(p, 0)`` is X (x) Y."""
    if mu == 0:
        return p.operator()
    return p._on_ab(p.relabelled_alice(mu))


def k_mu(p: ProductObservable, mu: int) -> Operator:
    """Label operator ``sum_k ((k - mu) mod |x|) Xhat_k`` on Alice's subsystem."""
    n = p.n_labels
    _check_mu(mu, n)
    sp = p.alice_spec
    mat = sum(((k - mu) % n) * sp.projectors[k].matrix for k in range(n))
    return Operator(sp.dims, mat)
