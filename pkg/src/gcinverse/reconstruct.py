"""Reconstruction of v(z0) from the DtN difference kernel.

The boundary equation for psi is solved in the mu-gauge m = exp(-lam (z-z0)^2) psi:

    m = I + S D (K exp(lam (zeta - z0)^2) m),

where K is the DtN difference kernel (whose response is band-limited), D
multiplies by exp(-conj(lam (z - z0)^2)) and keeps the negative Fourier modes,
and S is the boundary trace of  E -> (1/4 pi) T[exp(-phi) B_E]  with
B_E(eta) = int E(zeta) / (conj(eta) - conj(zeta)) |d zeta|.  On the disc
B_E(eta) = -2 pi sum_{m >= 0} (conj(eta)/R)^m E_{-m-1}.

The factor in D has a spectrum far wider than the M boundary samples can
hold, so it is applied as an exact convolution of Fourier coefficients; on the
samples themselves it would alias and the error would be amplified by the
dynamic range exp(2 |lam| R^2) of the exponentials.  For the same reason m
itself is sampled on a boundary grid finer than the data.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .bukhgeim import SpectralParam, green_kernel
from .errors import (FredholmAlternativeFailure, GCInverseError, IllConditionedRegime,
                     InvalidArgument, NoUsableLambda)
from .forward import DtnKernel
from .fields import BoundaryField, entry_max
from .geometry import DomainGrid, contains
from .polar import mode_numbers

log = logging.getLogger(__name__)

__all__ = ["ReconstructionConfig", "CutoffSpec", "PointField", "big_green_G", "boundary_S_matrix",
           "solve_boundary_psi", "h_from_boundary", "reconstruct_point", "reconstruct_field",
           "h_plus_correction", "exterior_moment"]


@dataclass
class ReconstructionConfig:
    lambda_schedule: list
    z0_set: list = field(default_factory=lambda: [0j])
    fredholm_regularization: float = 0.0
    conditioning_cap: float = 1e12
    lambda_phase: float = 0.0
    rech_exponent_variant: str = "squared"
    kernel_safety: float = 1.0

    def __post_init__(self):
        lam = [complex(x) for x in self.lambda_schedule]
        if not lam:
            raise InvalidArgument("lambda_schedule is empty")
        if any(abs(x) < 1 for x in lam):
            raise InvalidArgument("every scheduled |lambda| must be >= 1")
        if any(abs(b) < abs(a) for a, b in zip(lam[:-1], lam[1:])):
            raise InvalidArgument("lambda_schedule must have non-decreasing |lambda|")
        self.lambda_schedule = lam
        self.z0_set = [complex(z) for z in self.z0_set]
        if self.fredholm_regularization < 0:
            raise InvalidArgument("fredholm_regularization must be >= 0")
        if not self.conditioning_cap > 1:
            raise InvalidArgument("conditioning_cap must exceed 1")
        if self.rech_exponent_variant not in ("squared", "printed"):
            raise InvalidArgument("rech_exponent_variant must be 'squared' or 'printed'")

    def lambdas(self):
        """Schedule rotated by the configured phase."""
        rot = np.exp(1j * self.lambda_phase)
        return [lam * rot for lam in self.lambda_schedule]

    def to_dict(self) -> dict:
        return {"lambda_schedule": [[x.real, x.imag] for x in self.lambda_schedule],
                "z0_set": [[z.real, z.imag] for z in self.z0_set],
                "fredholm_regularization": self.fredholm_regularization,
                "conditioning_cap": self.conditioning_cap, "lambda_phase": self.lambda_phase,
                "rech_exponent_variant": self.rech_exponent_variant,
                "kernel_safety": self.kernel_safety}

    @classmethod
    def from_dict(cls, d: dict) -> "ReconstructionConfig":
        def cplx(x):
            return complex(x[0], x[1]) if isinstance(x, (list, tuple)) else complex(x)
        return cls([cplx(x) for x in d["lambda_schedule"]],
                   [cplx(z) for z in d.get("z0_set", [0.0])],
                   float(d.get("fredholm_regularization", 0.0)),
                   float(d.get("conditioning_cap", 1e12)),
                   float(d.get("lambda_phase", 0.0)),
                   d.get("rech_exponent_variant", "squared"),
                   float(d.get("kernel_safety", 1.0)))


@dataclass(frozen=True)
class CutoffSpec:
    """Radial C^2 cutoff: 1 for r <= inner, 0 for r >= outer (quintic smoothstep)."""

    inner: float
    outer: float

    def __post_init__(self):
        if not 0 < self.inner < self.outer:
            raise InvalidArgument("cutoff needs 0 < inner < outer")

    def __call__(self, r):
        t = np.clip((np.asarray(r) - self.inner) / (self.outer - self.inner), 0.0, 1.0)
        return 1.0 - t ** 3 * (10.0 - 15.0 * t + 6.0 * t * t)


@dataclass
class PointField:
    """Reconstructed matrices at a list of points."""

    points: np.ndarray
    values: np.ndarray
    failures: dict = field(default_factory=dict)
    traces: list = field(default_factory=list)

    def to_csv(self) -> str:
        n = self.values.shape[1]
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["point", "x", "y"] + [f"{p}_{i}{j}" for i in range(n) for j in range(n) for p in ("re", "im")])
        for idx, (z, m) in enumerate(zip(self.points, self.values)):
            ent = []
            for i in range(n):
                for j in range(n):
                    ent += [repr(float(m[i, j].real)), repr(float(m[i, j].imag))]
            w.writerow([idx, repr(float(z.real)), repr(float(z.imag))] + ent)
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {"points": [[z.real, z.imag] for z in self.points],
                "re": self.values.real.tolist(), "im": self.values.imag.tolist(),
                "failures": {str(k): v for k, v in self.failures.items()}}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def _disc_radius(grid: DomainGrid) -> float:
    if grid.kind != "disc":
        raise InvalidArgument("the boundary reconstruction is implemented for discs")
    return grid.radius


def dynamic_range_log(grid: DomainGrid, p: SpectralParam) -> float:
    """log of max/min of |exp(lam (z - z0)^2)| over the boundary nodes."""
    gr = p.growth(grid.boundary_nodes)
    return float(gr.max() - gr.min())


def _check_cap(grid, p, cap):
    lr = dynamic_range_log(grid, p)
    if lr > math.log(cap):
        raise IllConditionedRegime(
            f"boundary dynamic range e^{lr:.1f} exceeds conditioning cap {cap:.3g} at lambda={p.lam}")
    return lr


def big_green_G(z: complex, zeta: complex, p: SpectralParam, R: float = 1.0,
                cap: float = 1e12, rule=None) -> complex:
    """G(z, zeta) = exp(lam (z-z0)^2) g(z, zeta) exp(-lam (zeta-z0)^2); prefactors in log-space."""
    if not (abs(z) <= R * (1 + 1e-12) and abs(zeta) <= R * (1 + 1e-12)):
        raise InvalidArgument("points must lie in the closed disc")
    expo = p.lam * ((complex(z) - p.z0) ** 2 - (complex(zeta) - p.z0) ** 2)
    if abs(expo.real) > math.log(cap):
        raise IllConditionedRegime(f"prefactor e^{expo.real:.1f} exceeds conditioning cap")
    gk = green_kernel(z, zeta, p, R=R, rule=rule)
    if gk == 0:
        return 0j
    return complex(np.exp(expo + np.log(gk)))


def _radial_rule(R: float, band: float, order: int = 16):
    """Composite Gauss rule on [0, R]: uniform panels for the oscillation plus
    dyadic panels towards R for the steep weights (s/R)^p."""
    n_uni = max(2, int(math.ceil(band / 10.0)))
    br = set(np.linspace(0.0, R, n_uni + 1).tolist())
    br.update((R * (1.0 - 2.0 ** -i) for i in range(1, 14)))
    br = np.array(sorted(br))
    x, w = np.polynomial.legendre.leggauss(order)
    s = np.concatenate([0.5 * (b - a) * x + 0.5 * (a + b) for a, b in zip(br[:-1], br[1:])])
    ws = np.concatenate([0.5 * (b - a) * w for a, b in zip(br[:-1], br[1:])])
    return s, ws


def boundary_S_matrix(grid: DomainGrid, p: SpectralParam, n_powers: int, safety: float = 1.0,
                      n_out: int | None = None) -> np.ndarray:
    """S[l, m]: boundary sample l of (1/4pi) T[exp(-phi) B] for the unit mode E_{-m-1}.

    Here B(eta) = -2 pi (conj(eta)/R)^m.  Only modes k <= 0 of the transformed
    function reach the boundary, where (Tu)_{k-1}(R) = 2 int_0^R (s/R)^{1-k} u_k ds.
    With Phi_j(s) the angular modes of exp(-phi) this gives

        S[l, m] = -sum_{j <= m} exp(i (j - m - 1) t_l) int_0^R (s/R)^{1 + 2m - j} Phi_j(s) ds.

    The samples are taken at ``n_out`` equispaced angles (default: the grid's M).
    """
    R = _disc_radius(grid)
    n_out = grid.M if n_out is None else int(n_out)
    band = safety * 4.0 * abs(p.lam) * R * (R + abs(p.z0))
    nt = int(2 ** math.ceil(math.log2(2 * band + 10 * math.sqrt(band + 1) + 64)))
    s, ws = _radial_rule(R, band)
    th = 2 * np.pi * np.arange(nt) / nt
    eta = s[:, None] * np.exp(1j * th)[None, :]
    Phi = np.fft.fft(np.exp(-1j * p.phase(eta)), axis=1) / nt       # (n_s, nt), mode j at j % nt
    jj = np.rint(np.fft.fftfreq(nt) * nt).astype(int)
    logs = np.log(s / R)
    C = np.zeros((n_out, n_powers), dtype=complex)
    for m in range(n_powers):
        sel = jj <= m
        j = jj[sel]
        powr = np.exp(np.multiply.outer(logs, 1.0 + 2 * m - j))     # exponents >= 1
        H = np.einsum("s,sj,sj->j", ws, powr, Phi[:, sel])
        # output mode j - m - 1; folding modulo n_out is exact at the sample points
        np.add.at(C[:, m], (j - m - 1) % n_out, H)
    return -np.fft.ifft(C, axis=0) * n_out


def _exp_series(a: complex, tol: float):
    """Coefficients a^k / k! until they drop below tol times the largest."""
    if a == 0:
        return np.ones(1, dtype=complex)
    la = abs(a)
    kmax = int(la + 10 * math.sqrt(la) + 40)
    k = np.arange(kmax + 1)
    logmag = k * math.log(la) - np.array([math.lgamma(i + 1) for i in k])
    keep = logmag >= logmag.max() + math.log(tol)
    last = int(np.nonzero(keep)[0].max())
    k = k[: last + 1]
    return np.exp(logmag[: last + 1] + 1j * k * np.angle(a))


def _conj_exp_coeffs(grid: DomainGrid, p: SpectralParam, variant: str = "squared", tol: float = 1e-20):
    """Fourier coefficients d[i] (mode -i) of exp(-conj(lam) conj(z - z0)^q) on the circle, q = 2 or 1.

    With w = exp(-it) the function is exp(A w^2 + B w + C), so d is the
    product of two exponential power series times exp(C), computed term by term.
    """
    R = _disc_radius(grid)
    lb, zb = np.conj(p.lam), np.conj(p.z0)
    if variant == "squared":
        A, B, C = -lb * R * R, 2 * lb * R * zb, -lb * zb * zb
        sa = _exp_series(A, tol)
        ea = np.zeros(2 * len(sa) - 1, dtype=complex)
        ea[::2] = sa
    else:
        B, C = -lb * R, lb * zb
        ea = np.ones(1, dtype=complex)
    eb = _exp_series(B, tol)
    return np.exp(C) * np.convolve(ea, eb)


def _mode_maps(grid: DomainGrid, d: np.ndarray):
    """Matrices taking boundary samples y to (a) the modes -1..-J of conj-exp * y and (b) its mode 0."""
    M = grid.M
    kb = mode_numbers(M)
    Fm = np.exp(-1j * np.multiply.outer(kb, grid.boundary_theta)) / M   # samples -> modes
    if M % 2 == 0:
        Fm[kb == -M // 2] *= 0.0    # drop the ambiguous Nyquist mode
    J = len(d) + M // 2
    mm = np.arange(J)
    idx = mm[:, None] + 1 + kb[None, :]        # d index giving mode -(m+1) from input mode kb
    D = np.where((idx >= 0) & (idx < len(d)), d[np.clip(idx, 0, len(d) - 1)], 0.0)
    idx0 = kb
    d0 = np.where((idx0 >= 0) & (idx0 < len(d)), d[np.clip(idx0, 0, len(d) - 1)], 0.0)
    return D @ Fm, d0 @ Fm, J


def _fine_count(grid: DomainGrid, p: SpectralParam) -> int:
    """Boundary sample count for the unknown: a power-of-two multiple of M that
    resolves exp(lam (z - z0)^2) m without aliasing into the data band."""
    band = 4.0 * abs(p.lam) * grid.radius * (grid.radius + abs(p.z0))
    M2 = grid.M
    while M2 < 4 * band + grid.M:
        M2 *= 2
    return M2


def _band_limit_map(grid: DomainGrid, M2: int) -> np.ndarray:
    """P (M x M2): samples on M2 points -> data-node samples of the |j| < M/2 part."""
    M = grid.M
    kb = mode_numbers(M)
    kb = kb[np.abs(kb) < M // 2]
    tau = 2 * np.pi * np.arange(M2) / M2
    F2 = np.exp(-1j * np.multiply.outer(kb, tau)) / M2
    E = np.exp(1j * np.multiply.outer(grid.boundary_theta, kb))
    return E @ F2


@dataclass
class BoundarySolution:
    psi: BoundaryField
    m: np.ndarray            # mu-gauge values on the fine boundary samples
    response: np.ndarray     # (Phi - Phi0) psi at the data nodes, band-limited
    residual: float
    log_dynamic_range: float
    block_norm: float = 0.0  # max row sum of the Nystrom block (A minus identity)


def solve_boundary_psi(dtn_diff: DtnKernel, p: SpectralParam, cfg: ReconstructionConfig | None = None,
                       return_details: bool = False):
    """Nystrom solve of the boundary equation for psi restricted to the boundary.

    The unknown m = exp(-lam (z - z0)^2) psi lives on a boundary sampling finer
    than the data (its spectrum reaches past M/2); psi is band-limited to the
    data modes before the kernel acts, and the factor exp(-conj(lam (z - z0)^2))
    is applied exactly in Fourier space.
    """
    cfg = cfg or ReconstructionConfig([max(abs(p.lam), 1.0)])
    if not dtn_diff.is_difference:
        raise InvalidArgument("solve_boundary_psi needs the DtN difference kernel")
    g, n, M = dtn_diff.grid, dtn_diff.n, dtn_diff.grid.M
    if not contains(g, p.z0):
        raise InvalidArgument("z0 must lie inside the domain")
    lr = _check_cap(g, p, cfg.conditioning_cap)
    M2 = _fine_count(g, p)
    tau = 2 * np.pi * np.arange(M2) / M2
    zf = g.radius * np.exp(1j * tau)
    In = np.eye(n)
    rhs = np.broadcast_to(np.eye(n, dtype=complex), (M2, n, n)).reshape(M2 * n, n)
    if dtn_diff.norm() == 0.0:
        m = rhs.copy()
        y = np.zeros((M * n, n), dtype=complex)
        res, bn = 0.0, 0.0
    else:
        d = _conj_exp_coeffs(g, p)
        Dm, _, J = _mode_maps(g, d)
        S = boundary_S_matrix(g, p, J, cfg.kernel_safety, n_out=M2)
        Pe = _band_limit_map(g, M2) * np.exp(p.lam * (zf - p.z0) ** 2)[None, :]
        KP = dtn_diff.matrix @ np.kron(Pe, In)                  # (M n, M2 n)
        A = -np.kron(S @ Dm, In) @ KP
        bn = float(np.abs(A).sum(axis=1).max())
        A[np.diag_indices(M2 * n)] += 1.0 + cfg.fredholm_regularization
        lu = sla.lu_factor(A, check_finite=False)
        piv = np.abs(np.diag(lu[0]))
        if not np.all(np.isfinite(piv)) or piv.min() <= 1e-13 * piv.max():
            raise FredholmAlternativeFailure(
                f"boundary system singular at lambda={p.lam}; |lambda| may be below the solvability threshold")
        m = sla.lu_solve(lu, rhs, check_finite=False)
        res = float(np.abs(A @ m - rhs).max() / np.abs(rhs).max())
        y = KP @ m
    m = m.reshape(M2, n, n)
    step = M2 // M
    psi = np.exp(p.lam * (g.boundary_nodes - p.z0) ** 2)[:, None, None] * m[::step]
    out = BoundaryField(g, psi)
    if return_details:
        return out, BoundarySolution(out, m, y.reshape(M, n, n), res, lr, bn)
    return out


def h_from_boundary(dtn_diff: DtnKernel, psi_bdry: BoundaryField, p: SpectralParam,
                    variant: str = "squared", response=None) -> np.ndarray:
    """Boundary integral of exp(-conj(lam) conj(z - z0)^2) (Phi - Phi0) psi.

    The weight multiplies the band-limited response in Fourier space, so the
    integral is 2 pi R times the zero mode of the product.  ``variant="printed"``
    uses the first power conj(z - z0) in the exponent instead; it is kept for
    sensitivity studies only.  ``response`` ((Phi - Phi0) psi at the nodes,
    e.g. from :func:`solve_boundary_psi`) replaces the product with the samples.
    """
    if variant not in ("squared", "printed"):
        raise InvalidArgument("variant must be 'squared' or 'printed'")
    g = dtn_diff.grid
    y = dtn_diff.apply(psi_bdry.values) if response is None else np.asarray(response)
    d = _conj_exp_coeffs(g, p, variant)
    _, d0, _ = _mode_maps(g, d)
    return 2.0 * np.pi * g.radius * np.einsum("k,kab->ab", d0, y)


def _fit_limit(lams, ests):
    """Least-squares fit est = L + c log(3|lam|)/|lam|^{1/2}, entrywise."""
    lams = np.abs(np.asarray(lams))
    if len(lams) < 2 or np.ptp(lams) == 0:
        return None
    x = np.log(3 * lams) / np.sqrt(lams)
    A = np.stack([np.ones_like(x), x], axis=1)
    Y = np.asarray(ests).reshape(len(lams), -1)
    coef, *_ = np.linalg.lstsq(A.astype(complex), Y, rcond=None)
    return coef[0].reshape(np.asarray(ests).shape[1:])


def _increment_slope(lams, ests):
    lams = np.abs(np.asarray(lams))
    if len(lams) < 3:
        return None
    inc = [entry_max(ests[i + 1] - ests[i]) for i in range(len(ests) - 1)]
    mid = np.sqrt(lams[1:] * lams[:-1])
    ok = np.asarray(inc) > 0
    if ok.sum() < 2:
        return None
    return float(np.polyfit(np.log(mid[ok]), np.log(np.asarray(inc)[ok]), 1)[0])


def reconstruct_point(dtn_diff: DtnKernel, z0: complex, cfg: ReconstructionConfig):
    """(2/pi)|lam| h_{z0}(lam) over the schedule.

    Returns ``(value, diagnostics)``: the estimate at the last usable lambda
    and a dict with the per-lambda trace, the fitted limit of
    L + c log(3|lam|)/|lam|^{1/2}, and the slope of successive increments.
    """
    if not contains(dtn_diff.grid, z0):
        raise InvalidArgument(f"z0={z0} must lie inside the domain")
    trace, lams, ests = [], [], []
    for lam in cfg.lambdas():
        p = SpectralParam(z0, lam)
        entry = {"lambda": [lam.real, lam.imag]}
        try:
            psi, det = solve_boundary_psi(dtn_diff, p, cfg, return_details=True)
            h = h_from_boundary(dtn_diff, psi, p, cfg.rech_exponent_variant, response=det.response)
            est = (2.0 / math.pi) * abs(lam) * h
            entry.update(status="ok", residual=det.residual, log_dynamic_range=det.log_dynamic_range,
                         block_norm=det.block_norm,
                         h_re=h.real.tolist(), h_im=h.imag.tolist(),
                         estimate_re=est.real.tolist(), estimate_im=est.imag.tolist())
            lams.append(lam)
            ests.append(est)
        except (IllConditionedRegime, FredholmAlternativeFailure) as exc:
            entry.update(status=type(exc).__name__, message=str(exc))
        trace.append(entry)
    if not ests:
        exc = NoUsableLambda(f"no usable lambda in the schedule at z0={z0}")
        exc.trace = trace
        raise exc
    fit = _fit_limit(lams, ests)
    diag = {"z0": [z0.real, z0.imag], "trace": trace,
            "fitted_limit": None if fit is None else {"re": fit.real.tolist(), "im": fit.imag.tolist()},
            "increment_slope": _increment_slope(lams, ests)}
    return ests[-1], diag


def reconstruct_field(dtn_diff: DtnKernel, cfg: ReconstructionConfig) -> PointField:
    """reconstruct_point over cfg.z0_set, in the given order; failures are recorded, not raised."""
    n = dtn_diff.n
    pts = np.asarray(cfg.z0_set, dtype=complex)
    vals = np.full((len(pts), n, n), np.nan + 0j)
    fails, traces = {}, []
    for i, z0 in enumerate(pts):
        try:
            v, d = reconstruct_point(dtn_diff, complex(z0), cfg)
            vals[i] = v
            traces.append(d)
        except GCInverseError as exc:
            fails[i] = f"{type(exc).__name__}: {exc}"
            traces.append({"z0": [z0.real, z0.imag], "error": fails[i], "trace": getattr(exc, "trace", [])})
    return PointField(pts, vals, fails, traces)


def exterior_moment(R: float, chi: CutoffSpec, p: SpectralParam, n_panels: int | None = None,
                    order: int = 16) -> complex:
    """int_{R < |z| < chi.outer} exp(phi) chi(|z|) dA on an annular product rule."""
    if chi.inner < R:
        raise InvalidArgument("the cutoff must equal 1 on the whole domain (inner radius >= R)")
    b = chi.outer
    band = 4.0 * abs(p.lam) * b * (b + abs(p.z0))
    nt = int(2 * band + 128)
    nt += nt % 2
    if n_panels is None:
        n_panels = max(4, int(math.ceil(band * (b - R) / (b * 8.0))) + 2)
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.unique(np.concatenate([np.linspace(R, chi.inner, max(2, n_panels // 2) + 1),
                                      np.linspace(chi.inner, b, n_panels + 1)]))
    edges = edges[edges >= R]
    r = np.concatenate([0.5 * (hi - lo) * x + 0.5 * (hi + lo) for lo, hi in zip(edges[:-1], edges[1:])])
    wr = np.concatenate([0.5 * (hi - lo) * w for lo, hi in zip(edges[:-1], edges[1:])])
    th = 2 * np.pi * np.arange(nt) / nt
    e = np.exp(1j * th)[:, None]
    wrad = r * wr * chi(r)
    step = max(1, (1 << 22) // nt)   # radial chunks keep the work array near 64 MB
    total = 0j
    for s in range(0, len(r), step):
        total += np.sum(p.weight(r[None, s:s + step] * e) @ wrad[s:s + step])
    return complex(total * 2 * np.pi / nt)


def h_plus_correction(h, Lambda, p: SpectralParam, chi: CutoffSpec, R: float = 1.0) -> np.ndarray:
    """h + Lambda * int_{R^2 minus D} exp(phi) chi dA."""
    Lambda = np.asarray(Lambda, dtype=complex)
    h = np.asarray(h, dtype=complex)
    if not np.any(Lambda):
        return h.copy()
    return h + Lambda * exterior_moment(R, chi, p)
