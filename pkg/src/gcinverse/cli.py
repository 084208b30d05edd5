"""Batch command-line front end.

Every command reads one JSON run configuration, validates it completely
before any computation, and writes its results to ``--out``.  The resolved
configuration (defaults filled in) is echoed into every result file: as a
``config`` member of JSON documents and as a leading ``# config:`` line of
CSV tables.  Outputs contain no timestamps or host details, so a fixed
configuration and seed reproduce them byte for byte.

Exit codes: 0 success, 2 invalid configuration or input, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
from dataclasses import dataclass, field, fields

import numpy as np
from threadpoolctl import threadpool_limits

from .errors import GCInverseError, InvalidArgument
from .fields import MatrixField
from .forward import DtnKernel
from .geometry import DomainGrid, contains, make_disc, make_ellipse
from .synthetic import PotentialSpec, describe, generate

log = logging.getLogger("gcinverse")

EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL = 0, 2, 3
SUITES = ("lemmas", "rates", "alessandrini", "uniqueness", "condbord")
RATE_SUITES = ("lemmas", "rates")


# --- configuration --------------------------------------------------------------

def _cplx(x, what):
    if isinstance(x, (list, tuple)) and len(x) == 2:
        return complex(float(x[0]), float(x[1]))
    if isinstance(x, (int, float)) and not isinstance(x, bool):
        return complex(x)
    raise InvalidArgument(f"{what}: expected a number or a [re, im] pair, got {x!r}")


def _pair(z: complex):
    return [z.real, z.imag]


# the disc default is the reference resolution: 128 boundary nodes, 64 x 32 interior
DOMAIN_DEFAULTS = {"disc": {"radius": 1.0, "M": 128, "N_radial": 32, "n_theta": 64, "breaks": [0.0, 1.0]},
                   "ellipse": {"a": 2.0, "b": 1.0, "M": 64, "N": 1024, "n_theta": None}}


def _domain(d: dict) -> tuple[dict, DomainGrid]:
    d = dict(d)
    kind = d.pop("kind", "disc")
    if kind not in DOMAIN_DEFAULTS:
        raise InvalidArgument(f"domain.kind must be 'disc' or 'ellipse', got {kind!r}")
    full = dict(DOMAIN_DEFAULTS[kind])
    unknown = set(d) - set(full)
    if unknown:
        raise InvalidArgument(f"unknown domain fields {sorted(unknown)}")
    full.update(d)
    try:
        if kind == "disc":
            grid = make_disc(float(full["radius"]), int(full["M"]), int(full["N_radial"]),
                             None if full["n_theta"] is None else int(full["n_theta"]),
                             tuple(float(b) for b in full["breaks"]))
        else:
            grid = make_ellipse(float(full["a"]), float(full["b"]), int(full["M"]), int(full["N"]),
                                None if full["n_theta"] is None else int(full["n_theta"]))
    except (TypeError, ValueError) as exc:
        if isinstance(exc, InvalidArgument):
            raise
        raise InvalidArgument(f"domain: {exc}") from None
    return {"kind": kind, **full}, grid


@dataclass
class RunConfig:
    """Validated run configuration; see the README for the field reference."""

    domain: dict = field(default_factory=lambda: {"kind": "disc"})
    potential: dict | None = None
    potential_path: str | None = None
    n: int = 1
    lambda_schedule: list = field(default_factory=lambda: [4.0, 8.0, 15.0])
    z0_set: list = field(default_factory=lambda: [0.0])
    lambda_phase: float = 0.0
    rech_exponent_variant: str = "squared"
    conditioning_cap: float = 1e12
    fredholm_regularization: float = 0.0
    kernel_path: str | None = None
    truth: bool = True
    suites: list = field(default_factory=lambda: ["lemmas"])
    suite_options: dict = field(default_factory=dict)
    reduce3d: dict | None = None
    seed: int = 0

    # resolved objects (not part of the echo)
    def __post_init__(self):
        self.domain, self.grid = _domain(self.domain)
        if not isinstance(self.n, int) or self.n < 1:
            raise InvalidArgument("n must be a positive integer")
        self.spec = None
        if self.potential is not None and self.potential_path is not None:
            raise InvalidArgument("give either potential or potential_path, not both")
        if self.potential is not None:
            if not isinstance(self.potential, dict):
                raise InvalidArgument("potential must be an object")
            pot = dict(self.potential)
            pot.setdefault("n", self.n)
            pot.setdefault("seed", self.seed)
            self.spec = PotentialSpec.from_dict(pot)
            if self.spec.n != self.n:
                raise InvalidArgument(f"potential.n={self.spec.n} differs from n={self.n}")
            self.potential = self.spec.to_dict()
        from .reconstruct import ReconstructionConfig
        self.recon = ReconstructionConfig(
            [_cplx(x, "lambda_schedule") for x in self.lambda_schedule],
            [_cplx(z, "z0_set") for z in self.z0_set],
            float(self.fredholm_regularization), float(self.conditioning_cap),
            float(self.lambda_phase), self.rech_exponent_variant)
        self.lambda_schedule = [_pair(x) for x in self.recon.lambda_schedule]
        self.z0_set = [_pair(z) for z in self.recon.z0_set]
        if isinstance(self.suites, str):
            self.suites = [self.suites]
        bad = [s for s in self.suites if s not in SUITES]
        if bad:
            raise InvalidArgument(f"unknown suite(s) {bad}; expected names from {list(SUITES)}")
        if not isinstance(self.suite_options, dict):
            raise InvalidArgument("suite_options must be an object")

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        if not isinstance(d, dict):
            raise InvalidArgument("the configuration must be a JSON object")
        names = {f.name for f in fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise InvalidArgument(f"unknown configuration fields {sorted(unknown)}")
        return cls(**d)

    def echo(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def load_config(path: str | None, seed: int | None) -> RunConfig:
    d = {}
    if path is not None:
        try:
            with open(path) as fh:
                d = json.load(fh)
        except OSError as exc:
            raise InvalidArgument(f"cannot read config {path}: {exc.strerror}") from None
        except json.JSONDecodeError as exc:
            raise InvalidArgument(f"config {path} is not valid JSON: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    if seed is not None:
        if not isinstance(d, dict):
            raise InvalidArgument("the configuration must be a JSON object")
        d = dict(d, seed=int(seed))
        if isinstance(d.get("potential"), dict):
            d["potential"] = dict(d["potential"], seed=int(seed))
    return RunConfig.from_dict(d)


# --- output helpers ---------------------------------------------------------------

def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (complex, np.complexfloating)):
        return [_jsonable(float(x.real)), _jsonable(float(x.imag))]
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else str(x)
    return x


class Writer:
    def __init__(self, out: str, cfg: RunConfig):
        self.out = out
        self.cfg = cfg
        self.echo = _jsonable(cfg.echo())
        os.makedirs(out, exist_ok=True)
        self.written = []

    def json(self, name: str, payload: dict):
        doc = dict(_jsonable(payload), config=self.echo)
        self._write(name, json.dumps(doc, sort_keys=True, indent=1, allow_nan=False) + "\n")

    def csv(self, name: str, text: str):
        head = "# config: " + json.dumps(self.echo, sort_keys=True, allow_nan=False) + "\n"
        self._write(name, head + text)

    def _write(self, name, text):
        with open(os.path.join(self.out, name), "w", newline="") as fh:
            fh.write(text)
        self.written.append(name)


def _table(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in r])
    return buf.getvalue()


def read_csv(path: str) -> list[dict]:
    """Rows of a CSV file as dicts, skipping leading '#' comment lines."""
    try:
        with open(path, newline="") as fh:
            lines = [ln for ln in fh if not ln.startswith("#")]
    except OSError as exc:
        raise InvalidArgument(f"cannot read {path}: {exc.strerror}") from None
    return list(csv.DictReader(lines))


def _load_json(path: str, what: str) -> dict:
    try:
        with open(path) as fh:
            d = json.load(fh)
    except OSError as exc:
        raise InvalidArgument(f"cannot read {what} {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise InvalidArgument(f"{what} {path} is not valid JSON: line {exc.lineno}: {exc.msg}") from None
    return d


def load_kernel(path: str) -> DtnKernel:
    d = _load_json(path, "kernel")
    try:
        return DtnKernel.from_dict(d.get("kernel", d))
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, InvalidArgument):
            raise
        raise InvalidArgument(f"kernel {path} is malformed: {exc}") from None


def load_field(path: str) -> MatrixField:
    d = _load_json(path, "field")
    try:
        return MatrixField.from_dict(d.get("field", d))
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, InvalidArgument):
            raise
        raise InvalidArgument(f"field {path} is malformed: {exc}") from None


def _potential(cfg: RunConfig, required: bool = True) -> MatrixField | None:
    if cfg.spec is not None:
        return generate(cfg.spec, cfg.grid)
    if cfg.potential_path is not None:
        v = load_field(cfg.potential_path)
        if v.grid != cfg.grid:
            raise InvalidArgument("the potential file lives on a different grid than the configured domain")
        if v.n != cfg.n:
            raise InvalidArgument(f"the potential file has n={v.n}, config says n={cfg.n}")
        return v
    if required:
        raise InvalidArgument("this command needs potential or potential_path")
    return None


# --- commands ---------------------------------------------------------------------

def cmd_forward(cfg: RunConfig, w: Writer):
    from .forward import check_direig, dtn_difference, free_dtn_kernel
    v = _potential(cfg)
    ok, rep = check_direig(v)
    if not ok:
        from .errors import EigenvalueConditionViolated
        raise EigenvalueConditionViolated(f"0 is numerically a Dirichlet eigenvalue: {rep}")
    K0 = free_dtn_kernel(cfg.grid, cfg.n)
    D = dtn_difference(v)
    K = DtnKernel(cfg.grid, cfg.n, K0.matrix + D.matrix, False)
    w.json("dtn_kernel.json", {"kernel": K.to_dict()})
    w.json("dtn0_kernel.json", {"kernel": K0.to_dict()})
    w.json("difference_kernel.json", {"kernel": D.to_dict()})
    w.json("potential.json", {"field": v.to_dict()})
    w.csv("potential.csv", v.to_csv())
    w.json("forward_report.json", {"direig": rep, "potential_norms": describe(v),
                                   "difference_norm": D.norm(), "kernel_norm": K.norm()})


def _difference_kernel(cfg: RunConfig) -> tuple[DtnKernel, MatrixField | None]:
    from .forward import dtn_difference
    v = _potential(cfg, required=cfg.kernel_path is None)
    if cfg.kernel_path is not None:
        K = load_kernel(cfg.kernel_path)
        if K.grid != cfg.grid or K.n != cfg.n:
            raise InvalidArgument("kernel file does not match the configured domain and n")
        if not K.is_difference:
            raise InvalidArgument("reconstruct needs the difference kernel (Phi - Phi0)")
    else:
        K = dtn_difference(v)
    return K, v


def cmd_reconstruct(cfg: RunConfig, w: Writer):
    from .reconstruct import reconstruct_field
    from .synthetic import evaluate
    for z0 in cfg.recon.z0_set:
        if not contains(cfg.grid, z0):
            raise InvalidArgument(f"z0={z0} is not inside the domain")
    K, v = _difference_kernel(cfg)
    pf = reconstruct_field(K, cfg.recon)
    w.csv("reconstruction.csv", pf.to_csv())
    w.json("reconstruction.json", {"field": pf.to_dict(), "traces": pf.traces,
                                   "rech_exponent_variant": cfg.recon.rech_exponent_variant})
    rows = []
    truth = None
    if cfg.truth and cfg.spec is not None:
        truth = evaluate(cfg.spec, np.asarray(cfg.recon.z0_set))
    per_lam = {}
    for i, tr in enumerate(pf.traces):
        for j, e in enumerate(tr.get("trace", [])):
            lam = complex(*e["lambda"])
            row = [i, tr["z0"][0], tr["z0"][1], lam.real, lam.imag, e["status"],
                   e.get("residual", ""), e.get("log_dynamic_range", ""), e.get("block_norm", "")]
            if truth is not None:
                err = ""
                if e["status"] == "ok":
                    est = np.asarray(e["estimate_re"]) + 1j * np.asarray(e["estimate_im"])
                    err = float(np.abs(est - truth[i]).max())
                    per_lam.setdefault(j, (lam, []))[1].append(err)
                row.append(err)
            rows.append(row)
    head = ["point", "z0_re", "z0_im", "lambda_re", "lambda_im", "status", "residual",
            "log_dynamic_range", "block_norm"] + (["error_vs_truth"] if truth is not None else [])
    w.csv("diagnostics.csv", _table(head, rows))
    if truth is not None:
        scale = max(float(np.abs(truth).max()), 1e-300)
        erows = []
        for j in sorted(per_lam):
            lam, errs = per_lam[j]
            e = np.asarray(errs)
            erows.append([lam.real, lam.imag, len(e), float(e.max()), float(np.sqrt(np.mean(e ** 2))),
                          float(e.max()) / scale])
        w.csv("errors.csv", _table(["lambda_re", "lambda_im", "points", "linf", "l2", "linf_relative"], erows))
    if len(pf.failures) == len(pf.points):
        # diagnostics are on disk; a run without a single usable point is still a failure
        from .errors import NoUsableLambda
        raise NoUsableLambda("no point could be reconstructed: " + "; ".join(pf.failures.values()))


def _rate_rows(rep) -> str:
    rows = [[lam, err] for lam, err in zip(rep.lambda_values, rep.errors)]
    return _table(["lambda", "error"], rows)


def _suite_lemmas(cfg, opts, w):
    from .verify import LEMMA_LAMBDAS, lemma1_constant, lemma_rate_suite
    lams = tuple(float(x) for x in opts.get("lambda_values", LEMMA_LAMBDAS))
    reps = lemma_rate_suite(lams)
    out = {}
    for name, rep in reps.items():
        w.csv(f"rates_{name}.csv", _rate_rows(rep))
        out[name] = rep.to_dict()
    l1 = opts.get("lemma1_lambdas", [25.0, 100.0, 400.0])
    consts = [lemma1_constant(0.5, float(lam)) for lam in l1]
    spread = max(consts) / min(consts)
    out["lemma1"] = {"lambda_values": l1, "constants": consts, "max_over_min": spread,
                     "passed": bool(max(consts) <= 1.25 * min(consts))}
    return out


def _suite_rates(cfg, opts, w):
    from .verify import THEOREM_LAMBDAS, theorem_rate_suite
    lams = tuple(float(x) for x in opts.get("lambda_values", THEOREM_LAMBDAS))
    out = {}
    for name, rep in theorem_rate_suite(lams).items():
        w.csv(f"rates_{name}.csv", _rate_rows(rep))
        out[name] = rep.to_dict()
    return out


def _default_potential(cfg):
    v = _potential(cfg, required=False)
    if v is None:
        spec = PotentialSpec("radial_bump" if cfg.n == 1 else "triangular_matrix", cfg.n, 3.0, 0.5,
                             0.05, cfg.seed)
        v = generate(spec, cfg.grid)
    return v


def _suite_alessandrini(cfg, opts, w):
    from .forward import dtn_difference
    from .verify import alessandrini_residual, harmonic_field
    v = _default_potential(cfg)
    K = dtn_difference(v)
    lam = _cplx(opts.get("lambda", 5.0), "suite_options.alessandrini.lambda")
    z0 = _cplx(opts.get("z0", 0.1), "suite_options.alessandrini.z0")
    tol = float(opts.get("tolerance", 1e-4))
    cases = {"constant": lambda z: np.ones_like(z),
             "exponential": lambda z: np.exp(-np.conj(lam) * np.conj(z - z0) ** 2)}
    out = {}
    for name, f in cases.items():
        r = alessandrini_residual(v, harmonic_field(cfg.grid, f, cfg.n), K)
        out[name] = {"residual": r, "tolerance": tol, "passed": bool(r <= tol)}
    return out


def _suite_uniqueness(cfg, opts, w):
    from .verify import uniqueness_experiment
    v1 = _default_potential(cfg)
    factor = float(opts.get("factor", 1.5))
    v2 = v1 * factor
    distinct = uniqueness_experiment(v1, v2)
    same = uniqueness_experiment(v1, v1)
    return {"distinct": dict(distinct, passed=bool(distinct["distinct"])),
            "identical": dict(same, passed=bool(same["at_floor"]))}


def _suite_condbord(cfg, opts, w):
    from .fields import BoundaryField
    from .verify import condbord_study
    lams = [float(x) for x in opts.get("lambda_values", [10.0, 30.0, 100.0, 300.0])]
    out = {}
    for name, grid in (("disc", make_disc(1.0, 64, 8)), ("ellipse", make_ellipse(2.0, 1.0, 64, 1024))):
        zb = grid.boundary_nodes
        wv = BoundaryField(grid, (1.0 + 0.25 * zb.real)[:, None, None] * np.ones((1, 1, 1)))
        rep = condbord_study(grid, wv, 0.0, lams)
        w.csv(f"rates_condbord_{name}.csv", _rate_rows(rep))
        out[name] = rep.to_dict()
    return out


SUITE_FUNCS = {"lemmas": _suite_lemmas, "rates": _suite_rates, "alessandrini": _suite_alessandrini,
               "uniqueness": _suite_uniqueness, "condbord": _suite_condbord}


def _all_passed(x) -> bool:
    if isinstance(x, dict):
        ok = bool(x.get("passed", True))
        return ok and all(_all_passed(v) for v in x.values() if isinstance(v, dict))
    return True


def cmd_verify(cfg: RunConfig, w: Writer, suites=None):
    suites = list(cfg.suites if suites is None else suites)
    report = {}
    for s in suites:
        opts = cfg.suite_options.get(s, {})
        if not isinstance(opts, dict):
            raise InvalidArgument(f"suite_options.{s} must be an object")
        report[s] = SUITE_FUNCS[s](cfg, opts, w)
        report[s]["passed"] = _all_passed(report[s])
    w.json("verify_report.json", {"suites": report, "passed": all(report[s]["passed"] for s in suites)})


def cmd_convergence(cfg: RunConfig, w: Writer):
    chosen = [s for s in cfg.suites if s in RATE_SUITES] or list(RATE_SUITES)
    cmd_verify(cfg, w, chosen)


# --- reduce3d ----------------------------------------------------------------------

def _index_csv(path, index_cols, shape, what):
    """Read a CSV with integer index columns plus re[, im] into an array of ``shape``."""
    rows = read_csv(path)
    if not rows:
        raise InvalidArgument(f"{what} {path}: no data rows")
    cols = list(rows[0].keys())
    missing = [c for c in index_cols + ["re"] if c not in cols]
    if missing:
        raise InvalidArgument(f"{what} {path}: missing column(s) {missing}; header is {cols}")
    out = np.zeros(shape, dtype=complex)
    seen = np.zeros(shape, dtype=bool)
    for r, row in enumerate(rows, start=2):
        idx = []
        for c, lim in zip(index_cols, shape):
            try:
                i = int(row[c])
            except (TypeError, ValueError):
                raise InvalidArgument(f"{what} {path}: row {r}, column '{c}': not an integer ({row[c]!r})") from None
            if not 0 <= i < lim:
                raise InvalidArgument(f"{what} {path}: row {r}, column '{c}': index {i} outside [0, {lim})")
            idx.append(i)
        vals = []
        for c in ("re", "im"):
            if c not in row or (c == "im" and row[c] in (None, "")):
                vals.append(0.0)
                continue
            try:
                x = float(row[c])
            except (TypeError, ValueError):
                raise InvalidArgument(f"{what} {path}: row {r}, column '{c}': not a number ({row[c]!r})") from None
            if not math.isfinite(x):
                raise InvalidArgument(f"{what} {path}: row {r}, column '{c}': non-finite value")
            vals.append(x)
        t = tuple(idx)
        if seen[t]:
            raise InvalidArgument(f"{what} {path}: row {r}: duplicate index {t}")
        seen[t] = True
        out[t] = vals[0] + 1j * vals[1]
    if not seen.all():
        first = tuple(int(i) for i in np.argwhere(~seen)[0])
        raise InvalidArgument(f"{what} {path}: {int((~seen).sum())} index tuple(s) missing, first {first}")
    return out


REDUCE_DEFAULTS = {"interval": [0.0, 1.0], "n_quad": None, "v3d_csv": None, "phi3d_csv": None,
                   "v3d_potential": None}


def cmd_reduce3d(cfg: RunConfig, w: Writer):
    from .channels import ChannelBasis, project_potential, reduce_dtn_kernel
    from .synthetic import evaluate
    opts = dict(REDUCE_DEFAULTS)
    given = cfg.reduce3d or {}
    unknown = set(given) - set(opts)
    if unknown:
        raise InvalidArgument(f"unknown reduce3d fields {sorted(unknown)}")
    opts.update(given)
    a, b = (float(x) for x in opts["interval"])
    basis = ChannelBasis(a, b, cfg.n, opts["n_quad"])
    grid = cfg.grid
    q = basis.n_quad
    if (opts["v3d_csv"] is None) == (opts["v3d_potential"] is None):
        raise InvalidArgument("reduce3d needs exactly one of v3d_csv or v3d_potential")
    if opts["v3d_csv"] is not None:
        v3d = _index_csv(opts["v3d_csv"], ["node", "quad"], (grid.N, q), "v3d")
    else:
        spec = PotentialSpec.from_dict(dict(opts["v3d_potential"], n=1))
        opts["v3d_potential"] = spec.to_dict()
        def v3d(x, z):  # z-independent potential a(x)
            return np.broadcast_to(evaluate(spec, x.ravel())[:, 0, 0].reshape(x.shape), np.broadcast(x, z).shape)
    V, Lam = project_potential(v3d, basis, grid)
    w.json("channel_potential.json", {"field": V.to_dict()})
    w.csv("channel_potential.csv", V.to_csv())
    w.json("channel_lambda.json", {"Lambda": Lam, "eigenvalues": basis.eigenvalues,
                                   "interval": [a, b], "n_quad": q})
    if opts["phi3d_csv"] is not None:
        M = grid.M
        phi = _index_csv(opts["phi3d_csv"], ["row_node", "row_quad", "col_node", "col_quad"], (M, q, M, q), "phi3d")
        K = reduce_dtn_kernel(phi, basis, grid)
        w.json("channel_kernel.json", {"kernel": K.to_dict()})


COMMANDS = {"forward": cmd_forward, "reconstruct": cmd_reconstruct, "verify": cmd_verify,
            "reduce3d": cmd_reduce3d, "convergence": cmd_convergence}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="gcinverse", description=__doc__.split("\n\n")[0])
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--config", help="JSON run configuration (defaults apply when omitted)")
    ap.add_argument("--out", default="out", help="output directory (created if needed)")
    ap.add_argument("--threads", type=int, default=1, help="BLAS/OpenMP threads")
    ap.add_argument("--seed", type=int, default=None, help="seed for random potentials (overrides the config)")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INVALID if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return EXIT_INVALID
    if args.seed is not None and not 0 <= args.seed < 2 ** 64:
        print("error: --seed must be an unsigned 64-bit integer", file=sys.stderr)
        return EXIT_INVALID
    try:
        cfg = load_config(args.config, args.seed)
        w = Writer(args.out, cfg)
        with threadpool_limits(limits=args.threads), np.errstate(over="ignore", under="ignore"):
            COMMANDS[args.command](cfg, w)
            w.json("config.json", {"command": args.command, "outputs": sorted(w.written)})
    except InvalidArgument as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (GCInverseError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"numerical failure ({type(exc).__name__}): {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
