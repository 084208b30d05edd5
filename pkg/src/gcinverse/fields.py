"""Matrix-valued fields on a :class:`DomainGrid` and the norms used on them."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgument
from .geometry import DomainGrid
from .polar import differentiation_matrix, lagrange_matrix, to_modes, from_modes, mode_numbers

__all__ = ["MatrixField", "BoundaryField", "entry_max", "sup_norm", "dbar_derivative",
           "c1zbar_norm", "dz_derivative", "interpolate", "identity_field", "constant_field"]


def entry_max(u) -> float:
    """max_{i,j} |u_ij| taken over every matrix in ``u`` (0 for empty input)."""
    u = np.asarray(u)
    return float(np.abs(u).max()) if u.size else 0.0


@dataclass
class MatrixField:
    """Samples of an n x n matrix function at the interior nodes (optionally
    also at the boundary nodes) of ``grid``."""

    grid: DomainGrid
    values: np.ndarray              # (N, n, n)
    boundary: np.ndarray | None = None  # (M, n, n)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.complex128)
        if self.values.ndim != 3 or self.values.shape[0] != self.grid.N \
                or self.values.shape[1] != self.values.shape[2]:
            raise InvalidArgument(f"field values must have shape (N, n, n), got {self.values.shape}")
        if self.boundary is not None:
            self.boundary = np.asarray(self.boundary, dtype=np.complex128)
            if self.boundary.shape != (self.grid.M,) + self.values.shape[1:]:
                raise InvalidArgument("boundary values must have shape (M, n, n)")

    @property
    def n(self) -> int:
        return self.values.shape[1]

    def __mul__(self, other):
        if np.isscalar(other):
            b = None if self.boundary is None else self.boundary * other
            return MatrixField(self.grid, self.values * other, b)
        return NotImplemented

    __rmul__ = __mul__

    def __add__(self, other: "MatrixField"):
        b = None
        if self.boundary is not None and other.boundary is not None:
            b = self.boundary + other.boundary
        return MatrixField(self.grid, self.values + other.values, b)

    def __sub__(self, other: "MatrixField"):
        return self + (-1.0) * other

    def matmul(self, other: "MatrixField") -> "MatrixField":
        """Pointwise matrix product."""
        b = None
        if self.boundary is not None and other.boundary is not None:
            b = self.boundary @ other.boundary
        return MatrixField(self.grid, self.values @ other.values, b)

    def integrate(self, weight=None) -> np.ndarray:
        """Area integral of ``weight * field`` (weight sampled on the nodes)."""
        w = self.grid.interior_weights
        if weight is not None:
            w = w * weight
        return np.einsum("p,pij->ij", w, self.values)

    def to_dict(self) -> dict:
        d = {"grid": self.grid.to_dict(), "n": self.n,
             "re": self.values.real.tolist(), "im": self.values.imag.tolist()}
        if self.boundary is not None:
            d["boundary_re"] = self.boundary.real.tolist()
            d["boundary_im"] = self.boundary.imag.tolist()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "MatrixField":
        grid = DomainGrid.from_dict(d["grid"])
        vals = np.asarray(d["re"]) + 1j * np.asarray(d["im"])
        b = None
        if "boundary_re" in d:
            b = np.asarray(d["boundary_re"]) + 1j * np.asarray(d["boundary_im"])
        return cls(grid, vals, b)

    def to_csv(self) -> str:
        """One row per node: index, location, then Re/Im of every entry."""
        n = self.n
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        cols = [f"{p}_{i}{j}" for i in range(n) for j in range(n) for p in ("re", "im")]
        w.writerow(["node", "kind", "x", "y"] + cols)
        def rows(kind, nodes, vals):
            for idx, (z, m) in enumerate(zip(nodes, vals)):
                ent = []
                for i in range(n):
                    for j in range(n):
                        ent += [repr(float(m[i, j].real)), repr(float(m[i, j].imag))]
                w.writerow([idx, kind, repr(float(z.real)), repr(float(z.imag))] + ent)
        rows("interior", self.grid.interior_nodes, self.values)
        if self.boundary is not None:
            rows("boundary", self.grid.boundary_nodes, self.boundary)
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


@dataclass
class BoundaryField:
    grid: DomainGrid
    values: np.ndarray  # (M, n, n)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.complex128)
        if self.values.ndim != 3 or self.values.shape[0] != self.grid.M:
            raise InvalidArgument(f"boundary values must have shape (M, n, n), got {self.values.shape}")

    @property
    def n(self) -> int:
        return self.values.shape[1]

    def integrate(self, weight=None) -> np.ndarray:
        w = self.grid.boundary_weights
        if weight is not None:
            w = w * weight
        return np.einsum("p,pij->ij", w, self.values)

    def to_dict(self) -> dict:
        return {"grid": self.grid.to_dict(), "n": self.n,
                "re": self.values.real.tolist(), "im": self.values.imag.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "BoundaryField":
        return cls(DomainGrid.from_dict(d["grid"]), np.asarray(d["re"]) + 1j * np.asarray(d["im"]))


def identity_field(grid: DomainGrid, n: int, boundary: bool = False) -> MatrixField:
    return constant_field(grid, np.eye(n), boundary)


def constant_field(grid: DomainGrid, mat, boundary: bool = False) -> MatrixField:
    mat = np.asarray(mat, dtype=np.complex128)
    vals = np.broadcast_to(mat, (grid.N,) + mat.shape).copy()
    b = np.broadcast_to(mat, (grid.M,) + mat.shape).copy() if boundary else None
    return MatrixField(grid, vals, b)


def sup_norm(u: MatrixField) -> float:
    """sup over nodes of the entrywise max-modulus (boundary samples included)."""
    m = entry_max(u.values)
    if u.boundary is not None:
        m = max(m, entry_max(u.boundary))
    return m


def _radial_diff(grid: DomainGrid):
    """Block-diagonal (per panel) spectral d/dr on the radial nodes."""
    p = grid.radial_order
    D = np.zeros((grid.n_r, grid.n_r))
    for P in range(grid.n_r // p):
        sl = slice(P * p, (P + 1) * p)
        D[sl, sl] = differentiation_matrix(grid.r[sl])
    return D


def _polar_derivative(u: MatrixField, sign: int) -> MatrixField:
    g = u.grid
    if g.kind != "disc":
        raise InvalidArgument("complex derivatives need a disc grid")
    if g.radial_order < 4:
        raise InvalidArgument("radial resolution too coarse for differentiation")
    n = u.n
    U, trail = to_modes(g, u.values)
    k = mode_numbers(g.n_theta)
    if g.n_theta % 2 == 0:
        k = np.where(k == -g.n_theta // 2, 0, k)
    dth = from_modes(g, U * (1j * k)[None, :, None], trail).reshape(g.n_theta, g.n_r, n, n)
    vals = u.values.reshape(g.n_theta, g.n_r, n, n)
    dr = np.einsum("ij,ajkl->aikl", _radial_diff(g), vals)
    r = g.r[None, :, None, None]
    e = np.exp(sign * 1j * g.theta)[:, None, None, None]
    out = 0.5 * e * (dr + sign * 1j * dth / r)
    return MatrixField(g, out.reshape(g.N, n, n))


def dbar_derivative(u: MatrixField) -> MatrixField:
    """Entrywise d/d(zbar) = (1/2) e^{i theta} (d_r + (i/r) d_theta) on a disc grid.

    Angular derivatives are spectral (FFT); radial derivatives use per-panel
    polynomial differentiation on the Gauss nodes.
    """
    return _polar_derivative(u, 1)


def dz_derivative(u: MatrixField) -> MatrixField:
    """Entrywise d/dz = (1/2) e^{-i theta} (d_r - (i/r) d_theta) on a disc grid."""
    return _polar_derivative(u, -1)


def c1zbar_norm(u: MatrixField) -> float:
    """max(||u||_C, ||du/dzbar||_C) on the interior nodes."""
    return max(entry_max(u.values), entry_max(dbar_derivative(u).values))


def interpolate(u: MatrixField, z) -> np.ndarray:
    """Values of ``u`` at arbitrary points of a disc grid, shape (len(z), n, n).

    Trigonometric interpolation in angle and the panel polynomial in radius.
    """
    g = u.grid
    if g.kind != "disc":
        raise InvalidArgument("interpolation is implemented on disc grids")
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    n, nt, p = u.n, g.n_theta, g.radial_order
    R = g.radius
    r, th = np.abs(z), np.angle(z)
    if np.any(r > R * (1 + 1e-12)):
        raise InvalidArgument("points must lie in the closed disc")
    U = np.fft.fft(u.values.reshape(nt, g.n_r, n, n), axis=0) / nt
    k = mode_numbers(nt).astype(float)
    if nt % 2 == 0:
        U[nt // 2] *= 0.0
    E = np.exp(1j * np.multiply.outer(th, k))                 # (P, nt)
    prof = np.einsum("Pk,kiab->Piab", E, U)                   # angular interpolant on each radius
    if nt % 2 == 0:
        ny = np.fft.fft(u.values.reshape(nt, g.n_r, n, n), axis=0)[nt // 2] / nt
        prof += np.cos(0.5 * nt * th)[:, None, None, None] * ny[None]
    out = np.empty((len(z), n, n), dtype=complex)
    br = np.asarray(g.radial.breaks)
    panel = np.clip(np.searchsorted(br, r, side="right") - 1, 0, len(br) - 2)
    for P in np.unique(panel):
        sel = np.nonzero(panel == P)[0]
        nodes = g.r[P * p:(P + 1) * p]
        L = lagrange_matrix(nodes, r[sel])
        out[sel] = np.einsum("Qi,Qiab->Qab", L, prof[sel, P * p:(P + 1) * p])
    return out
