"""Reduction of a cylinder D x L problem to n coupled 2D channels.

With the Dirichlet sine basis phi_j of L = [a, b] (eigenvalues
lambda_j = (j pi / (b - a))^2), a 3D potential v(x, z) becomes the matrix
potential V_ij(x) = int_L phi_i v phi_j dz, and a 3D DtN kernel
Phi(theta, z, theta', z') becomes the n x n kernel obtained by the same
double projection.  The 2D problem then carries the effective potential
Lambda + V with Lambda = diag(lambda_j).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgument
from .fields import MatrixField
from .forward import DtnKernel
from .geometry import DomainGrid

__all__ = ["ChannelBasis", "project_potential", "reduce_dtn_kernel", "project_boundary_data",
           "effective_potential"]


@dataclass(frozen=True)
class ChannelBasis:
    """Sine eigenbasis of -d^2/dz^2 on [a, b] with a Gauss-Legendre z-rule."""

    a: float
    b: float
    n: int
    n_quad: int | None = None
    nodes: np.ndarray = field(init=False, repr=False, compare=False)
    weights: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not self.b > self.a:
            raise InvalidArgument("need a < b")
        if self.n < 1:
            raise InvalidArgument("n must be >= 1")
        q = 4 * self.n + 16 if self.n_quad is None else int(self.n_quad)
        if q < 4 * self.n:
            raise InvalidArgument(f"n_quad must be >= 4 n = {4 * self.n}")
        object.__setattr__(self, "n_quad", q)
        x, w = np.polynomial.legendre.leggauss(q)
        h = 0.5 * (self.b - self.a)
        object.__setattr__(self, "nodes", self.a + h * (x + 1.0))
        object.__setattr__(self, "weights", h * w)

    @property
    def length(self) -> float:
        return self.b - self.a

    @property
    def eigenvalues(self) -> np.ndarray:
        j = np.arange(1, self.n + 1)
        return (j * np.pi / self.length) ** 2

    def functions(self, z) -> np.ndarray:
        """phi_j(z) for j = 1..n, shape (len(z), n)."""
        z = np.atleast_1d(np.asarray(z, dtype=float))
        j = np.arange(1, self.n + 1)
        return np.sqrt(2.0 / self.length) * np.sin(np.multiply.outer(z - self.a, j) * np.pi / self.length)

    def gram(self) -> np.ndarray:
        P = self.functions(self.nodes)
        return (P * self.weights[:, None]).T @ P

    def project(self, f) -> np.ndarray:
        """int phi_j f dz for samples f of shape (n_quad, ...) -> (n, ...)."""
        P = self.functions(self.nodes) * self.weights[:, None]
        return np.tensordot(P, np.asarray(f), axes=([0], [0]))


def _sample_potential(v3d, grid: DomainGrid, basis: ChannelBasis):
    zq = basis.nodes
    if callable(v3d):
        vi = np.asarray(v3d(grid.interior_nodes[:, None], zq[None, :]), dtype=complex)
        vb = np.asarray(v3d(grid.boundary_nodes[:, None], zq[None, :]), dtype=complex)
        return np.broadcast_to(vi, (grid.N, len(zq))), np.broadcast_to(vb, (grid.M, len(zq)))
    if isinstance(v3d, tuple):
        vi, vb = (np.asarray(x, dtype=complex) for x in v3d)
    else:
        vi, vb = np.asarray(v3d, dtype=complex), None
    if vi.shape != (grid.N, len(zq)):
        raise InvalidArgument(f"v3d samples must have shape (N, n_quad) = {(grid.N, len(zq))}, got {vi.shape}")
    if vb is not None and vb.shape != (grid.M, len(zq)):
        raise InvalidArgument(f"boundary samples must have shape (M, n_quad) = {(grid.M, len(zq))}")
    return vi, vb


def project_potential(v3d, basis: ChannelBasis, grid: DomainGrid):
    """Channel matrix V(x) and Lambda = diag(lambda_j).

    ``v3d`` is either a callable v(x, z) (x complex, broadcasting), an array of
    shape (N, n_quad) sampled at the interior nodes times ``basis.nodes``, or a
    pair (interior, boundary) of such arrays.
    """
    vi, vb = _sample_potential(v3d, grid, basis)
    P = basis.functions(basis.nodes)
    Pw = P * basis.weights[:, None]
    V = np.einsum("qi,pq,qj->pij", Pw, vi, P)
    Vb = None if vb is None else np.einsum("qi,pq,qj->pij", Pw, vb, P)
    return MatrixField(grid, V, Vb), np.diag(basis.eigenvalues).astype(complex)


def effective_potential(V: MatrixField, Lambda) -> MatrixField:
    """Lambda + V, the 2D potential of the reduced system."""
    L = np.asarray(Lambda, dtype=complex)
    b = None if V.boundary is None else V.boundary + L
    return MatrixField(V.grid, V.values + L, b)


def reduce_dtn_kernel(phi3d, basis: ChannelBasis, grid: DomainGrid, is_difference: bool = True) -> DtnKernel:
    """n-channel kernel from 3D Schwartz kernel samples.

    ``phi3d`` holds Phi(theta_k, z_q, theta_l, z_r) with shape
    (M, n_quad, M, n_quad), or is a callable of (theta, z, theta', z').  The
    boundary arc-length weight in theta' is folded in, as in :class:`DtnKernel`.
    """
    M, q = grid.M, basis.n_quad
    if callable(phi3d):
        t, z = grid.boundary_theta, basis.nodes
        phi3d = phi3d(t[:, None, None, None], z[None, :, None, None], t[None, None, :, None], z[None, None, None, :])
        phi3d = np.broadcast_to(phi3d, (M, q, M, q))
    phi3d = np.asarray(phi3d, dtype=complex)
    if phi3d.shape != (M, q, M, q):
        raise InvalidArgument(f"phi3d must have shape (M, n_quad, M, n_quad) = {(M, q, M, q)}, got {phi3d.shape}")
    P = basis.functions(basis.nodes) * basis.weights[:, None]
    blocks = np.einsum("qi,kqlr,rj->klij", P, phi3d, P, optimize=True)
    blocks = blocks * grid.boundary_weights[None, :, None, None]
    n = basis.n
    return DtnKernel(grid, n, blocks.transpose(0, 2, 1, 3).reshape(M * n, M * n), is_difference)


def project_boundary_data(f3d, basis: ChannelBasis, grid: DomainGrid, tol: float = 1e-12) -> np.ndarray:
    """Channel coefficients f_j(theta_k) of Dirichlet data f(theta, z), shape (M, n).

    ``f3d`` is a callable of (theta, z).  Data must vanish on the cylinder ends
    z = a, b; anything else is rejected.
    """
    t = grid.boundary_theta
    ends = np.asarray(f3d(t[:, None], np.array([basis.a, basis.b])[None, :]))
    vals = np.asarray(f3d(t[:, None], basis.nodes[None, :]), dtype=complex)
    scale = max(float(np.abs(vals).max()), 1.0)
    if np.abs(ends).max() > tol * scale:
        raise InvalidArgument("boundary data must vanish on the ends of the cylinder")
    return basis.project(vals.T).T
