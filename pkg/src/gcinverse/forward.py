"""Forward Dirichlet problem  -Lap psi + v psi = 0,  psi = f on the boundary,
and the Dirichlet-to-Neumann kernels built from it.

The disc backend is a Lippmann-Schwinger formulation

    psi = psi_0 - G_D (v psi),

with psi_0 the harmonic extension of f and G_D the Dirichlet Green operator
of the disc, both applied mode by mode in angle (see :mod:`gcinverse.polar`).
The normal derivative is then  Phi0 f + (volume term of v psi), so the
difference kernel Phi - Phi0 is assembled directly, without cancellation.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.linalg as sla
from scipy.sparse.linalg import LinearOperator, gmres

from .errors import EigenvalueConditionViolated, InvalidArgument
from .fields import BoundaryField, MatrixField
from .geometry import DomainGrid
from .polar import DirichletGreen, boundary_dtn0_matrix, differentiation_matrix, harmonic_extension_matrix

log = logging.getLogger(__name__)

__all__ = ["DtnKernel", "ForwardSolver", "solve_dirichlet", "dtn_apply", "dtn_kernel",
           "dtn_difference", "check_direig", "DIREIG_THRESHOLD", "free_dtn_kernel",
           "normal_derivative_from_interior"]

DIREIG_THRESHOLD = 1e-10
DENSE_LIMIT = 6000


@dataclass
class DtnKernel:
    """Discrete Schwartz kernel with quadrature weights folded in.

    ``matrix`` has shape (M n, M n); row/column index ``node * n + channel``, so
    that (Phi f)(theta_k) = sum_l block(k, l) @ f(theta_l).
    """

    grid: DomainGrid
    n: int
    matrix: np.ndarray
    is_difference: bool = False

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=np.complex128)
        size = self.grid.M * self.n
        if self.matrix.shape != (size, size):
            raise InvalidArgument(f"kernel matrix must be {size}x{size}, got {self.matrix.shape}")

    def blocks(self) -> np.ndarray:
        """View as (M, M, n, n) blocks."""
        M, n = self.grid.M, self.n
        return self.matrix.reshape(M, n, M, n).transpose(0, 2, 1, 3)

    def apply(self, f) -> np.ndarray:
        """Apply to boundary samples f of shape (M, n, m)."""
        f = np.asarray(f.values if isinstance(f, BoundaryField) else f)
        M, n = self.grid.M, self.n
        out = self.matrix @ f.reshape(M * n, -1)
        return out.reshape((M, n) + f.shape[2:])

    def schwartz_values(self) -> np.ndarray:
        """Kernel samples Phi(theta_k, theta_l), i.e. blocks divided by |dz| weights."""
        return self.blocks() / self.grid.boundary_weights[None, :, None, None]

    def __sub__(self, other: "DtnKernel") -> "DtnKernel":
        return DtnKernel(self.grid, self.n, self.matrix - other.matrix, True)

    def norm(self) -> float:
        return float(np.abs(self.matrix).max())

    def to_dict(self) -> dict:
        return {"grid": self.grid.to_dict(), "n": self.n, "is_difference": self.is_difference,
                "re": self.matrix.real.tolist(), "im": self.matrix.imag.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "DtnKernel":
        return cls(DomainGrid.from_dict(d["grid"]), int(d["n"]),
                   np.asarray(d["re"]) + 1j * np.asarray(d["im"]), bool(d["is_difference"]))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, s: str) -> "DtnKernel":
        return cls.from_dict(json.loads(s))


@lru_cache(maxsize=8)
def _grid_operators(grid: DomainGrid):
    G = DirichletGreen(grid)
    H = harmonic_extension_matrix(grid)
    return G, H


@lru_cache(maxsize=4)
def _green_matrix(grid: DomainGrid) -> np.ndarray:
    """Dense matrix of G_D on the interior nodes, from its rotation invariance."""
    G, _ = _grid_operators(grid)
    nt, nr = grid.n_theta, grid.n_r
    deltas = np.zeros((grid.N, nr))
    deltas[np.arange(nr), np.arange(nr)] = 1.0  # angle index 0, radial index j
    c = G.apply(deltas).reshape(nt, nr, nr)
    a = np.arange(nt)
    idx = (a[:, None] - a[None, :]) % nt
    return c[idx].transpose(0, 2, 1, 3).reshape(grid.N, grid.N)


def _check_potential(v: MatrixField):
    if v.grid.kind != "disc":
        raise InvalidArgument("the forward solver supports disc grids only")


class ForwardSolver:
    """Factorized discrete Lippmann-Schwinger operator for one potential."""

    def __init__(self, v: MatrixField, method: str = "auto"):
        _check_potential(v)
        self.v = v
        self.grid = v.grid
        self.n = v.n
        self.G, self.H = _grid_operators(self.grid)
        size = self.grid.N * self.n
        self.method = ("dense" if size <= DENSE_LIMIT else "gmres") if method == "auto" else method
        self._lu = None
        if self.method == "dense":
            Gm = _green_matrix(self.grid)
            A = np.einsum("PQ,Qab->PaQb", Gm, v.values).reshape(size, size)
            A[np.diag_indices(size)] += 1.0
            self.A = A
            self._lu = sla.lu_factor(A, check_finite=False)
            piv = np.abs(np.diag(self._lu[0]))
            if piv.min() <= 1e-14 * piv.max():
                raise EigenvalueConditionViolated("discrete Dirichlet operator is singular")

    def _apply_A(self, x):
        N, n = self.grid.N, self.n
        X = x.reshape(N, n, -1)
        vx = np.einsum("pab,pbm->pam", self.v.values, X)
        return (X + self.G.apply(vx)).reshape(x.shape)

    def solve_interior(self, psi0):
        """Solve (I + G_D v) psi = psi0 for psi0 of shape (N, n, m)."""
        N, n = self.grid.N, self.n
        rhs = psi0.reshape(N * n, -1)
        if self.method == "dense":
            sol = sla.lu_solve(self._lu, rhs, check_finite=False)
        else:
            op = LinearOperator((N * n, N * n), matvec=lambda x: self._apply_A(x.reshape(-1, 1)).ravel(),
                                dtype=np.complex128)
            cols = []
            for j in range(rhs.shape[1]):
                x, info = gmres(op, rhs[:, j], rtol=1e-12, atol=0.0, restart=200, maxiter=50)
                if info != 0:
                    raise EigenvalueConditionViolated(f"GMRES did not converge (info={info})")
                cols.append(x)
            sol = np.stack(cols, axis=1)
        return sol.reshape(psi0.shape)

    def harmonic_extension(self, f):
        """f of shape (M, n, m) -> (N, n, m)."""
        return np.einsum("pl,lam->pam", self.H, f)

    def solve(self, f):
        return self.solve_interior(self.harmonic_extension(f))

    def difference_response(self, psi):
        """(Phi - Phi0) f from the interior solution psi."""
        vpsi = np.einsum("pab,pbm->pam", self.v.values, psi)
        return self.G.normal_derivative(vpsi)

    def difference_kernel(self) -> DtnKernel:
        M, n = self.grid.M, self.n
        f = np.zeros((M, n, M * n))
        for l in range(M):
            for b in range(n):
                f[l, b, l * n + b] = 1.0
        psi = self.solve(f)
        K = self.difference_response(psi).reshape(M * n, M * n)
        return DtnKernel(self.grid, n, K, is_difference=True)


def _as_matrix_data(f: BoundaryField):
    return np.asarray(f.values, dtype=np.complex128)


def solve_dirichlet(v: MatrixField, f: BoundaryField) -> MatrixField:
    """Interior solution of -Lap psi + v psi = 0 with psi = f on the boundary."""
    if f.grid != v.grid:
        raise InvalidArgument("potential and boundary data live on different grids")
    if f.n != v.n:
        raise InvalidArgument("channel counts differ")
    fs = ForwardSolver(v)
    psi = fs.solve(_as_matrix_data(f))
    return MatrixField(v.grid, psi, _as_matrix_data(f).copy())


def dtn_apply(v: MatrixField, f: BoundaryField) -> BoundaryField:
    """Outward normal derivative of the solution with Dirichlet data f."""
    if f.grid != v.grid:
        raise InvalidArgument("potential and boundary data live on different grids")
    fs = ForwardSolver(v)
    data = _as_matrix_data(f)
    psi = fs.solve(data)
    phi0 = np.einsum("kl,lam->kam", boundary_dtn0_matrix(v.grid), data)
    return BoundaryField(v.grid, phi0 + fs.difference_response(psi))


def dtn_difference(v: MatrixField) -> DtnKernel:
    """Kernel of Phi - Phi0."""
    return ForwardSolver(v).difference_kernel()


def dtn_kernel(v: MatrixField) -> DtnKernel:
    """Kernel of Phi itself (free part |k|/R plus the volume correction)."""
    diff = dtn_difference(v)
    n = v.n
    K0 = np.kron(boundary_dtn0_matrix(v.grid), np.eye(n))
    return DtnKernel(v.grid, n, K0 + diff.matrix, is_difference=False)


def free_dtn_kernel(grid: DomainGrid, n: int) -> DtnKernel:
    return DtnKernel(grid, n, np.kron(boundary_dtn0_matrix(grid), np.eye(n)), False)


def normal_derivative_from_interior(psi: MatrixField) -> BoundaryField:
    """Outward normal derivative recovered from interior samples alone.

    Each angular mode of ``psi`` on the outermost radial panel, together with
    its boundary value, is interpolated by a polynomial in r and differentiated
    at r = R.  Modes |k| < n_theta / 2 are recovered, plus the Nyquist mode as
    cos(n_theta theta / 2), so this is an independent (band-limited) check on
    the DtN maps, not a solver path.
    """
    g = psi.grid
    if g.kind != "disc" or psi.boundary is None:
        raise InvalidArgument("need a disc grid and boundary samples")
    n, nt, p = psi.n, g.n_theta, g.radial_order
    if g.M < nt:
        raise InvalidArgument("need at least n_theta boundary nodes")
    R = g.radius
    kk = np.rint(np.fft.fftfreq(nt) * nt).astype(int)       # Nyquist appears as -nt/2
    U = np.fft.fft(psi.values.reshape(nt, g.n_r, n, n), axis=0) / nt
    kb = np.rint(np.fft.fftfreq(g.M) * g.M).astype(int)
    B = np.fft.fft(psi.boundary, axis=0) / g.M
    pos = {int(k): i for i, k in enumerate(kb)}
    Bk = np.stack([B[pos[k]] for k in kk])
    nyq = int(np.argmin(kk))
    if g.M > nt:
        Bk[nyq] = B[pos[-nt // 2]] + B[pos[nt // 2]]
    r = np.append(g.r[-p:], R)
    D = differentiation_matrix(r)[-1]
    prof = np.concatenate([U[:, -p:], Bk[:, None]], axis=1)
    dmodes = np.einsum("j,kjab->kab", D, prof)
    E = np.exp(1j * np.multiply.outer(g.boundary_theta, kk))
    E[:, nyq] = np.cos(0.5 * nt * g.boundary_theta)
    return BoundaryField(g, np.einsum("mk,kab->mab", E, dmodes))


def check_direig(v: MatrixField, threshold: float = DIREIG_THRESHOLD):
    """Report whether 0 is safely away from the Dirichlet spectrum of -Lap + v.

    Returns ``(ok, report)`` where ``report`` holds the extreme singular values
    of the discrete operator I + G_D v and their ratio.
    """
    _check_potential(v)
    grid, n = v.grid, v.n
    size = grid.N * n
    Gm = _green_matrix(grid)
    A = np.einsum("PQ,Qab->PaQb", Gm, v.values).reshape(size, size)
    A[np.diag_indices(size)] += 1.0
    if size <= 2500:
        s = sla.svdvals(A)
        smax, smin = float(s[0]), float(s[-1])
    else:
        smax = float(np.linalg.norm(A, 2)) if size <= 4000 else _power_norm(A)
        try:
            lu = sla.lu_factor(A, check_finite=False)
            smin = 1.0 / _power_norm_inverse(lu, size)
        except (sla.LinAlgError, ZeroDivisionError):
            smin = 0.0
    ratio = smin / smax if smax > 0 else 0.0
    report = {"sigma_min": smin, "sigma_max": smax, "ratio": ratio, "threshold": threshold,
              "condition_number": (smax / smin) if smin > 0 else float("inf")}
    return ratio > threshold, report


def _power_norm(A, iters=30):
    x = np.random.default_rng(0).standard_normal(A.shape[1]).astype(complex)
    for _ in range(iters):
        y = A.conj().T @ (A @ x)
        x = y / np.linalg.norm(y)
    return float(np.sqrt(np.linalg.norm(A.conj().T @ (A @ x))))


def _power_norm_inverse(lu, size, iters=30):
    x = np.random.default_rng(1).standard_normal(size).astype(complex)
    nrm = 0.0
    for _ in range(iters):
        y = sla.lu_solve(lu, x, check_finite=False)
        y = sla.lu_solve(lu, y, trans=2, check_finite=False)
        nrm = np.linalg.norm(y)
        if not np.isfinite(nrm):
            raise ZeroDivisionError
        x = y / nrm
    return float(np.sqrt(nrm))
