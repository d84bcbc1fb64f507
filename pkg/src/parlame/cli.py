"""Command-line experiment runner.

Every subcommand writes its artifacts (CSV tables, JSON reports) into
``--out`` and prints one ``PASS``/``FAIL`` line with the measured quantity.
Exit codes: 0 pass, 2 fail, 1 usage error.  Options can come from a JSON
file given with ``--config``; flags on the command line win.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import time
from dataclasses import dataclass, field

import numpy as np

from .errors import ParlameError
from .kernels import LameCoefficients

EXIT_PASS, EXIT_USAGE, EXIT_FAIL = 0, 1, 2

COEFF_SETS = [(1.0, -1.0), (1.0, 0.0), (2.0, 0.5)]
ROUNDOFF = 100 * np.finfo(float).eps

DEFAULTS = {
    "common": {"out": ".", "seed": 0, "mu": 1.0, "lam": -1.0, "geometry": None, "order": 12, "time_order": 16},
    "kernel-check": {"points": 50, "h": 1e-3, "dims": "2,3", "all_coeffs": True, "tol": 1e-4},
    "green-check": {"targets": 10, "tol": 2e-3},
    "jump-check": {"points": 5, "t0": 0.5, "tol": 1e-2},
    "poly-verify": {"max_degree": 6, "dims": "2,3"},
    "ortho-gram": {"max_N": 3, "max_nu": 3, "dims": "2,3", "order": 16, "tol": 1e-8, "shrink": 10.0},
    "illposed-table": {"k": "1..20", "N": 3, "xn": 1.0, "grid": 32},
    "reconstruct": {"degree": 8, "layer_degree": 4, "alphas": "1e-2,1e-4,1e-6,1e-8,1e-10,1e-12", "n_space": 10,
                    "n_time": 8, "data": "heat-poly", "tol": 5e-2},
    "uniqueness-probe": {"degree": 8, "layer_degree": 4, "alpha": 1e-10, "n_space": 10, "n_time": 8,
                         "deltas": "0,1e-3,1e-2", "tol": 1e-6},
}
COMMANDS = [k for k in DEFAULTS if k != "common"]


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    """A resolved subcommand invocation.  The JSON form is accepted back by
    ``--config``, so a run can be repeated from its own ``config.json``."""

    command: str
    options: dict = field(default_factory=dict)

    def to_json(self):
        return _json(dict(self.options, command=self.command))

    @classmethod
    def from_json(cls, text):
        doc = json.loads(text)
        if not isinstance(doc, dict) or doc.get("command") not in COMMANDS:
            raise ValueError("config JSON needs a known 'command'")
        cmd = doc.pop("command")
        return cls(cmd, doc)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}")


def _build_parser():
    p = _Parser(prog="parlame", description="Parabolic Lame system experiments.")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True
    S = argparse.SUPPRESS
    for name in COMMANDS:
        sp = sub.add_parser(name, argument_default=S)
        sp.add_argument("--config", help="JSON file with option values")
        sp.add_argument("--out", help="artifact directory")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--mu", type=float)
        sp.add_argument("--lam", "--lambda", dest="lam", type=float)
        sp.add_argument("--geometry", help="JSON geometry descriptor (file path or inline JSON)")
        sp.add_argument("--order", type=int)
        sp.add_argument("--time-order", dest="time_order", type=int)
        sp.add_argument("--tol", type=float)
        if name == "kernel-check":
            sp.add_argument("--points", type=int)
            sp.add_argument("--h", type=float)
            sp.add_argument("--dims")
            sp.add_argument("--single", dest="all_coeffs", action="store_false",
                            help="check only the --mu/--lam pair instead of the standard three")
        elif name == "green-check":
            sp.add_argument("--targets", type=int)
        elif name == "jump-check":
            sp.add_argument("--points", type=int)
            sp.add_argument("--t0", type=float)
        elif name == "poly-verify":
            sp.add_argument("--max-degree", dest="max_degree", type=int)
            sp.add_argument("--dims")
        elif name == "ortho-gram":
            sp.add_argument("--max-N", dest="max_N", type=int)
            sp.add_argument("--max-nu", dest="max_nu", type=int)
            sp.add_argument("--dims")
            sp.add_argument("--shrink", type=float)
        elif name == "illposed-table":
            sp.add_argument("--k")
            sp.add_argument("--N", type=int)
            sp.add_argument("--xn", type=float)
            sp.add_argument("--grid", type=int)
        elif name in ("reconstruct", "uniqueness-probe"):
            sp.add_argument("--degree", type=int)
            sp.add_argument("--layer-degree", dest="layer_degree", type=int,
                            help="degree of layer-function densities; negative disables them")
            sp.add_argument("--n-space", dest="n_space", type=int)
            sp.add_argument("--n-time", dest="n_time", type=int)
            if name == "reconstruct":
                sp.add_argument("--alphas")
                sp.add_argument("--data", help="'heat-poly', 'zero' or 'family:K'")
            else:
                sp.add_argument("--alpha", type=float)
                sp.add_argument("--deltas")
    return p


def resolve_options(argv):
    """Parse ``argv`` and merge defaults, the config file and explicit flags.

    Returns an :class:`ExperimentConfig`.
    """
    args = vars(_build_parser().parse_args(argv))
    cmd = args.pop("command")
    opts = dict(DEFAULTS["common"])
    opts.update(DEFAULTS[cmd])
    cfg_path = args.pop("config", None)
    if cfg_path is not None:
        try:
            with open(cfg_path, encoding="utf-8") as fh:
                cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {cfg_path}: {exc}") from exc
        if not isinstance(cfg, dict):
            raise UsageError("config file must hold a JSON object")
        for key, val in cfg.items():
            key = key.replace("-", "_")
            if key == "command":
                if val != cmd:
                    raise UsageError(f"config file is for {val!r}, not {cmd!r}")
                continue
            if key not in opts:
                raise UsageError(f"unknown config key {key!r} for {cmd}")
            opts[key] = val
    opts.update(args)
    return ExperimentConfig(cmd, opts)


# ------------------------------------------------------------- helpers


def _coeffs(o):
    from .kernels import check_parabolicity

    c = LameCoefficients(float(o["mu"]), float(o["lam"]))
    check_parabolicity(c)
    return c


def _dims(text):
    return [int(v) for v in str(text).split(",") if v.strip()]


def _floats(text):
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    return [float(v) for v in str(text).split(",") if v.strip()]


def _domain(o, default_bounds):
    from .geometry import CylinderDomain, domain_from_json, make_box

    g = o.get("geometry")
    if g is None:
        return CylinderDomain(make_box(default_bounds), 1.0)
    if isinstance(g, dict):
        return domain_from_json(g)
    if os.path.exists(str(g)):
        with open(g, encoding="utf-8") as fh:
            return domain_from_json(fh.read())
    return domain_from_json(str(g))


def _opts(o):
    from .potentials import QuadOptions

    return QuadOptions(int(o["order"]), int(o["time_order"]))


def _write(out, name, text):
    os.makedirs(out, exist_ok=True)
    path = os.path.join(out, name)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    return path


def _csv(header, rows):
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(header)
    for r in rows:
        wr.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])
    return buf.getvalue()


def _json(doc):
    return json.dumps(doc, indent=2, sort_keys=True, default=float) + "\n"


# ---------------------------------------------------------- subcommands


def cmd_kernel_check(o):
    from .kernels import heat_kernel, heat_kernel_mass, kernel_derivatives, lame_pde_residual

    rng = np.random.default_rng(int(o["seed"]))
    sets = COEFF_SETS if o["all_coeffs"] else [(float(o["mu"]), float(o["lam"]))]
    rows, worst, reduction = [], 0.0, 0.0
    for mu, lam in sets:
        c = LameCoefficients(mu, lam)
        for n in _dims(o["dims"]):
            for _ in range(int(o["points"])):
                x = rng.uniform(-1.0, 1.0, n)
                while np.linalg.norm(x) < 0.2:
                    x = rng.uniform(-1.0, 1.0, n)
                t = float(rng.uniform(0.1, 1.0))
                r = float(np.abs(lame_pde_residual(x, t, c, h=float(o["h"]))).max())
                worst = max(worst, r)
                rows.append([mu, lam, n, t, r] + list(x) + [0.0] * (3 - n))
                if c.is_heat:
                    (Phi,) = kernel_derivatives(x, t, c)
                    ref = heat_kernel(x, mu * t) * np.eye(n)
                    reduction = max(reduction, float(np.abs(Phi - ref).max()))
    mass_rows, mass_err = [], 0.0
    for n in (1, 2, 3):
        for t in np.sort(rng.uniform(0.05, 2.0, 3)):
            err = abs(heat_kernel_mass(n, float(t)) - 1.0)
            mass_err = max(mass_err, err)
            mass_rows.append([n, float(t), err])
    _write(o["out"], "kernel_check.csv", _csv(["mu", "lambda", "n", "t", "residual", "x_1", "x_2", "x_3"], rows))
    _write(o["out"], "kernel_mass.csv", _csv(["n", "t", "error"], mass_rows))
    ok = worst <= o["tol"] and reduction == 0.0 and mass_err <= 1e-8
    return ok, (f"kernel-check max residual {worst:.3e} (tol {o['tol']:g}), heat reduction defect {reduction:.1e}, "
                f"mass defect {mass_err:.1e}")


def _green_targets(rng, box, count):
    lo, hi = box.lo, box.hi
    inner = [np.concatenate([rng.uniform(lo + 0.1 * (hi - lo), hi - 0.1 * (hi - lo)), [rng.uniform(0.1, 1.0)]])
             for _ in range(count)]
    outer = []
    while len(outer) < count:
        x = rng.uniform(lo - 0.5 * (hi - lo), hi + 0.5 * (hi - lo))
        if box.distance_to_boundary(x) > 0.05 and not box.contains(x):
            outer.append(np.concatenate([x, [rng.uniform(0.1, 1.0)]]))
    return inner, outer


def cmd_green_check(o):
    from .caloric import heat_polynomial
    from .polynomial import CaloricPolynomial
    from .potentials import PolynomialField, green_identity

    c = _coeffs(o)
    dom = _domain(o, [[0.0, 1.0], [0.0, 1.0]])
    n = dom.dim
    if not c.is_heat:
        raise UsageError("green-check uses the heat case (lam = -mu)")
    H = heat_polynomial(1, 1, 1, n).with_scale(1.0).scale_time(c.mu)
    field = PolynomialField([H] + [CaloricPolynomial(n)] * (n - 1), c)
    rng = np.random.default_rng(int(o["seed"]))
    inner, outer = _green_targets(rng, dom.base, int(o["targets"]))
    inner = [np.concatenate([p[:-1], [p[-1] * dom.T]]) for p in inner]
    outer = [np.concatenate([p[:-1], [p[-1] * dom.T]]) for p in outer]
    rows, e_in, e_out = [], 0.0, 0.0
    qo = _opts(o)
    for kind, pts in (("interior", inner), ("exterior", outer)):
        for p in pts:
            total, ref = green_identity(field, dom, p[:-1], float(p[-1]), c, 0.0, qo)
            err = float(np.abs(total - ref).max())
            if kind == "interior":
                e_in = max(e_in, err)
            else:
                e_out = max(e_out, err)
            rows.append([kind] + list(p) + [err])
    _write(o["out"], "green_check.csv", _csv(["kind"] + [f"x_{i + 1}" for i in range(n)] + ["t", "error"], rows))
    ok = max(e_in, e_out) <= o["tol"]
    return ok, f"green-check interior {e_in:.3e} exterior {e_out:.3e} (tol {o['tol']:g})"


def jump_cases(dom, t0, points):
    """Surface points on the face ``x_2 = lo`` and smooth densities for the jump checks."""
    from .geometry import face

    patch = face(dom, 1, 0)
    box = dom.base
    lo, hi = box.lo[0], box.hi[0]
    xs = lo + (hi - lo) * (np.arange(points) + 1) / (points + 1)
    pts = []
    for x1 in xs:
        p = box.center.copy()
        p[0] = x1
        p[1] = box.lo[1]
        pts.append(p)

    def density(y, tau):
        a = 1.0 + 0.5 * np.sin(y[..., 0]) + 0.3 * tau
        b = 0.5 - y[..., 0] ** 2 + 0.2 * tau
        comps = [a, b] + [0.25 * a * b] * (y.shape[-1] - 2)
        return np.stack(comps, axis=-1)

    return patch, pts, density


def cmd_jump_check(o):
    from .potentials import jump_probe

    c = _coeffs(o)
    dom = _domain(o, [[0.0, 1.0], [0.0, 1.0]])
    t0 = float(o["t0"]) * dom.T
    patch, pts, density = jump_cases(dom, t0, int(o["points"]))
    qo = _opts(o)
    rows, worst = [], {}
    for q in ("W", "sigmaV", "sigmaW"):
        for p in pts:
            res = jump_probe(q, density, patch, p, t0, c, opts=qo)
            expect = np.zeros(dom.dim) if q == "sigmaW" else density(p, t0)
            err = float(np.abs(res.jump - expect).max())
            worst[q] = max(worst.get(q, 0.0), err)
            rows.append([q] + list(p) + [t0, err, res.error_estimate])
    _write(o["out"], "jump_check.csv",
           _csv(["quantity"] + [f"x_{i + 1}" for i in range(dom.dim)] + ["t", "error", "extrapolation_estimate"], rows))
    ok = max(worst.values()) <= o["tol"]
    desc = " ".join(f"{k} {v:.3e}" for k, v in worst.items())
    return ok, f"jump-check {desc} (tol {o['tol']:g})"


def poly_identities(max_degree, dims, coeff_sets):
    """Exact checks of ``w^{(j,k)}`` and of the face solutions; returns counts and failures."""
    from .caloric import caloric_w, poly_cauchy_solve
    from .polynomial import CaloricPolynomial, lame_apply

    checked, failures = 0, []
    for j in range(max_degree + 1):
        for k in range(max_degree + 1):
            w = caloric_w(j, k)
            target = CaloricPolynomial.monomial(1, (k,), j)
            ok = (w.heat() - target).is_zero() and w.restrict(0).is_zero() and w.dx(0).restrict(0).is_zero()
            checked += 1
            if not ok:
                failures.append(f"w({j},{k})")
    from .caloric import _multi_indices

    for n in dims:
        for mu, lam in coeff_sets:
            c = LameCoefficients(mu, lam)
            for total in range(max_degree + 1):
                for j in range(total + 1):
                    for alpha in _multi_indices(n, total - j):
                        for m in range(n):
                            try:
                                v = poly_cauchy_solve(j, alpha, c, component=m)
                            except ArithmeticError:
                                failures.append(f"v(n={n},mu={mu},lam={lam},j={j},alpha={alpha},m={m})")
                                continue
                            g = [CaloricPolynomial.monomial(n, alpha, j) if i == m else CaloricPolynomial(n)
                                 for i in range(n)]
                            Lv = lame_apply(v, mu, lam)
                            good = all((a - b).is_zero() for a, b in zip(Lv, g))
                            good = good and all(p.restrict(n - 1).is_zero() and p.dx(n - 1).restrict(n - 1).is_zero()
                                                for p in v)
                            checked += 1
                            if not good:
                                failures.append(f"v(n={n},mu={mu},lam={lam},j={j},alpha={alpha},m={m})")
    return checked, failures


def cmd_poly_verify(o):
    checked, failures = poly_identities(int(o["max_degree"]), _dims(o["dims"]), COEFF_SETS)
    _write(o["out"], "poly_verify.json", _json({"max_degree": int(o["max_degree"]), "dims": _dims(o["dims"]),
                                                "checked": checked, "failures": failures}))
    return not failures, f"poly-verify {checked} exact identities, {len(failures)} failures"


def gram_study(dims, max_N, max_nu, order):
    """Annihilation and double-orthogonality measurements for heat polynomials."""
    from .caloric import BasisElement, double_orthogonality_gram, heat_polynomial, off_block_max, spherical_harmonics

    out = []
    for n in dims:
        basis = []
        for nu in range(max_nu + 1):
            for s in range(1, len(spherical_harmonics(n, nu)) + 1):
                for N in range(max_N + 1):
                    if nu == 0 and N >= 1:
                        continue
                    basis.append(BasisElement(heat_polynomial(N, nu, s, n), N, nu, s))
        axis = [BasisElement(heat_polynomial(N, 0, 1, n, axis=i), N, 0, 1, axis=i)
                for i in range(n) for N in range(1, max_N + 1)]
        annihilated = all(b.poly.heat().is_zero() for b in basis + axis)
        keys = [b.key for b in basis]
        G1 = double_orthogonality_gram(basis, 1.0, 1.0, order)
        G2 = double_orthogonality_gram(basis, 1.0, 1.0, 2 * order)
        off1, off2 = off_block_max(G1, keys), off_block_max(G2, keys)
        scale = float(np.abs(G1).max())
        Ga = double_orthogonality_gram(basis + axis, 1.0, 1.0, order)
        keys_a = [b.key for b in basis + axis]
        axis_cross = 0.0
        for a in range(len(basis), len(keys_a)):
            for b in range(len(basis)):
                if basis[b].nu >= 1:
                    axis_cross = max(axis_cross, abs(Ga[a, b]))
        out.append({"n": n, "size": len(basis), "annihilated": annihilated, "off_block": off1,
                    "off_block_doubled": off2, "gram_scale": scale, "axis_vs_harmonic_max": axis_cross})
    return out


def cmd_ortho_gram(o):
    order = int(o["order"])
    rows = gram_study(_dims(o["dims"]), int(o["max_N"]), int(o["max_nu"]), order)
    ok = True
    for r in rows:
        floor = ROUNDOFF * r["gram_scale"]
        shrink_ok = r["off_block_doubled"] * float(o["shrink"]) <= r["off_block"] or (
            r["off_block"] <= floor and r["off_block_doubled"] <= floor)
        r["shrink_ok"] = bool(shrink_ok)
        r["roundoff_floor"] = floor
        ok = ok and r["annihilated"] and r["off_block"] <= o["tol"] and shrink_ok
    _write(o["out"], "ortho_gram.json", _json({"order": order, "rows": rows}))
    worst = max(r["off_block"] for r in rows)
    shrink = min(r["off_block"] / r["off_block_doubled"] if r["off_block_doubled"] > 0 else math.inf for r in rows)
    floor = all(r["off_block"] <= r["roundoff_floor"] for r in rows)
    note = ", both orders at the roundoff floor" if shrink < float(o["shrink"]) and floor else ""
    return ok, (f"ortho-gram off-block max {worst:.3e} at order {order} (tol {o['tol']:g}), "
                f"shrink on doubling x{shrink:.2f}{note}")


def cmd_illposed_table(o):
    from .illposed import amplification_table, parse_k_range, table_to_csv

    c = _coeffs(o)
    ks = parse_k_range(o["k"])
    N, xn = int(o["N"]), float(o["xn"])
    rows = amplification_table(ks, N, c, xn, grid=int(o["grid"]))
    _write(o["out"], "illposed_table.csv", table_to_csv(rows))
    bound = max(1.0, c.c_long)
    ok = all(d <= bound / k ** (N - 1) * (1 + 1e-12) for k, d, _, _ in rows)
    ok = ok and all(abs(s - math.exp(k * xn) / k**N) <= 1e-12 * s for k, _, s, _ in rows)
    tail = [r for r in rows if r[0] >= 5]
    ok = ok and all(b[3] > a[3] for a, b in zip(tail, tail[1:]))
    return ok, f"illposed-table {len(rows)} rows, last ratio {rows[-1][3]:.6e}"


def _recon_setup(o):
    from .cauchy import ReconstructionConfig
    from .geometry import face

    c = _coeffs(o)
    dom = _domain(o, [[0.0, 1.0], [0.0, 1.0]])
    patch = face(dom, dom.dim - 1, 0)
    ld = o.get("layer_degree")
    ld = None if ld is None or int(ld) < 0 else int(ld)
    alphas = tuple(_floats(o["alphas"])) if "alphas" in o else (float(o["alpha"]),)
    cfg = ReconstructionConfig(int(o["degree"]), ld, alphas, int(o["n_space"]), int(o["n_time"]), 0.05, _opts(o))
    return c, dom, patch, cfg


def manufactured_data(kind, dom, patch, c):
    """``(CauchyData, reference)`` for ``'heat-poly'``, ``'zero'`` or ``'family:K'``."""
    from .caloric import heat_polynomial, poly_cauchy_solve
    from .cauchy import CauchyData
    from .illposed import IllPosedFamily, family_jacobian, family_solution
    from .polynomial import CaloricPolynomial
    from .potentials import PolynomialField

    n = dom.dim
    if kind == "zero":
        return CauchyData.zero(dom, patch), (lambda x, t: np.zeros(n))
    if kind == "heat-poly":
        if c.is_heat:
            H = heat_polynomial(1, 1, 1, n).with_scale(1.0).scale_time(c.mu)
            comps = [H] + [CaloricPolynomial(n)] * (n - 1)
        else:
            from .caloric import face_cauchy_extend

            H = heat_polynomial(1, 1, 1, n).with_scale(1.0)
            zero = [CaloricPolynomial(n)] * n
            a0 = [H.restrict(n - 1)] + [CaloricPolynomial(n)] * (n - 1)
            comps = face_cauchy_extend(a0, zero, zero, c)
        field = PolynomialField(comps, c)
        return CauchyData.from_field(field, dom, patch, c), field.value
    if kind.startswith("family:"):
        k = int(kind.split(":", 1)[1])
        fam = IllPosedFamily(k, 3, dom.T, c, n)

        class _F:
            def value(self, x, t):
                return family_solution(fam, x, t)

            def jacobian(self, x, t):
                return family_jacobian(fam, x, t)

        f = _F()
        return CauchyData.from_field(f, dom, patch, c), f.value
    raise UsageError(f"unknown data kind {kind!r}")


def cmd_reconstruct(o):
    from .cauchy import ReconstructionProblem, field_csv, report_json

    c, dom, patch, cfg = _recon_setup(o)
    data, ref = manufactured_data(str(o["data"]), dom, patch, c)
    prob = ReconstructionProblem(dom, patch, c, cfg)
    res = prob.solve(data, ref)
    _write(o["out"], "reconstruct.json", report_json(res, cfg, c, {"data": str(o["data"])}) + "\n")
    _write(o["out"], "reconstruct_field.csv", field_csv(res))
    err = res.best_error
    ok = err is not None and err <= o["tol"]
    return ok, f"reconstruct best relative error {err:.3e} at alpha {res.fit.alpha:g} (tol {o['tol']:g})"


def cmd_uniqueness_probe(o):
    from .cauchy import ReconstructionProblem, uniqueness_probe

    o = dict(o)
    c, dom, patch, cfg = _recon_setup(o)
    data, _ = manufactured_data("heat-poly", dom, patch, c)
    prob = ReconstructionProblem(dom, patch, c, cfg)
    deltas = tuple(_floats(o["deltas"]))
    rep = uniqueness_probe(data, c, cfg, deltas, float(o["alpha"]), problem=prob)
    _write(o["out"], "uniqueness_probe.json", _json(rep))
    zero = [r["interior_sup"] for r in rep["runs"] if r["delta"] == 0.0]
    ok = bool(zero) and zero[0] <= o["tol"]
    ratio = rep.get("scaling_ratio")
    if ratio is not None:
        ok = ok and 5.0 <= ratio <= 20.0
    return ok, f"uniqueness-probe zero-data sup {zero[0] if zero else float('nan'):.3e}, scaling ratio {ratio}"


HANDLERS = {
    "kernel-check": cmd_kernel_check,
    "green-check": cmd_green_check,
    "jump-check": cmd_jump_check,
    "poly-verify": cmd_poly_verify,
    "ortho-gram": cmd_ortho_gram,
    "illposed-table": cmd_illposed_table,
    "reconstruct": cmd_reconstruct,
    "uniqueness-probe": cmd_uniqueness_probe,
}


def run(argv=None):
    """Run one subcommand; returns the exit code."""
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        cfg = resolve_options(argv)
        t0 = time.perf_counter()
        ok, msg = HANDLERS[cfg.command](dict(cfg.options))
        # the output directory is left out so runs into different folders compare equal
        saved = ExperimentConfig(cfg.command, {k: v for k, v in cfg.options.items() if k != "out"})
        _write(cfg.options["out"], f"{cfg.command}.config.json", saved.to_json())
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        print("usage: parlame {" + ",".join(COMMANDS) + "} [options]", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        # bad parameter values (including invalid geometry) are usage errors
        print(f"parlame: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ParlameError as exc:
        print(f"FAIL {type(exc).__name__}: {exc}", flush=True)
        return EXIT_FAIL
    dt = time.perf_counter() - t0
    print(f"{'PASS' if ok else 'FAIL'} {msg} [{dt:.1f}s]", flush=True)
    return EXIT_PASS if ok else EXIT_FAIL


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
