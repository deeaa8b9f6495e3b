"""Command-line verification runs.

A run is described by a JSON config (numbers as strings so rationals stay
exact), executes a selection of checks at one or more points and writes a
JSON report.  Reports are deterministic: the same config, seed, mode and
version give byte-identical output.  Exit codes: 0 when every non-skipped
check passes, 1 when one fails, 2 for configuration errors.
"""

from __future__ import annotations

import argparse
import json
import random
import sys
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Sequence

from . import __version__
from .algebra import linalg
from .algebra.scalar import Scalar, format_decimal, magnitude, parse_scalar, to_float
from .errors import ConfigError, IsoHKError, UnsupportedOrders
from .flows import all_flows, independence_report, isopotential_flows, model_derivative_Q, model_flatness_residual
from .metric import (
    annihilator_check,
    assemble_metric,
    build_frame,
    hermiticity_residuals,
    jk_identities,
    ricci_convergence,
)
from .moduli import (
    ExtendedPoint,
    ModuliPoint,
    PoleOrders,
    curve_stats,
    genericity_check,
    random_point,
    verify_apparent_singularity,
)
from .pvi import (
    PviPoint,
    euler_norm,
    metric_mismatch,
    pvi_algebraic_check,
    pvi_flow_residual,
    pvi_flows,
    pvi_integrate,
    pvi_killing_check,
    pvi_metric_field,
    pvi_potentials,
    pvi_structure,
    random_pvi_point,
)
from .twoforms import (
    check_omega_pattern,
    homothety_check,
    model_kernel_check,
    model_omega_contour,
    model_omega_decompose,
    model_omega_direct,
    model_omega_parts,
    omega_M,
)

SCHEMA_VERSION = 1
GENERAL_GROUPS = ("potential", "flows", "two-forms", "metric", "genericity")
PVI_GROUPS = ("pvi",)
DECOMPOSITION_HBAR = (Fraction(1), Fraction(2), Fraction(3), Fraction(-1), Fraction(1, 2))
ALGEBRAIC_W = (Fraction(4), Fraction(3, 4), Fraction(1, 4), Fraction(2))
TOP_KEYS = {
    "kind",
    "pole_orders",
    "point",
    "random_points",
    "hbar",
    "mode",
    "tolerances",
    "seed",
    "checks",
    "output",
    "integrate",
}


# Config ---------------------------------------------------------------------


@dataclass(frozen=True)
class IntegrateSettings:
    start: Scalar | None = None
    end: Scalar | None = None
    detour: float = 0.3
    tolerance: float = 1e-10


@dataclass(frozen=True)
class RunConfig:
    kind: str
    pole_orders: tuple[int, ...]
    points: tuple[Any, ...]
    hbar: tuple[Scalar, ...]
    mode: str
    tolerance: float
    seed: int | None
    checks: tuple[str, ...]
    output: str | None
    integrate: IntegrateSettings = field(default_factory=IntegrateSettings)
    exact_input: bool = True

    @property
    def orders(self) -> PoleOrders:
        return PoleOrders.from_pole_orders(self.pole_orders)


def _number(value: Any, path: str) -> tuple[Scalar, bool]:
    if not isinstance(value, str):
        raise ConfigError(path, "numbers must be strings")
    try:
        return parse_scalar(value)
    except IsoHKError as exc:
        raise ConfigError(path, str(exc)) from None


def _numbers(value: Any, path: str) -> tuple[list[Scalar], bool]:
    if not isinstance(value, list):
        raise ConfigError(path, "expected a list")
    out, exact = [], True
    for i, item in enumerate(value):
        x, e = _number(item, f"{path}[{i}]")
        out.append(x)
        exact = exact and e
    return out, exact


def _keys(obj: Any, allowed: set[str], path: str) -> dict:
    if not isinstance(obj, dict):
        raise ConfigError(path, "expected an object")
    unknown = sorted(set(obj) - allowed)
    if unknown:
        raise ConfigError(f"{path}.{unknown[0]}" if path else unknown[0], "unknown key")
    return obj


def _eps(value: Any, n: int, path: str) -> tuple[int, ...]:
    if value is None:
        return (1,) * n
    values = value if isinstance(value, list) else [value]
    if len(values) != n or any(e not in (1, -1) for e in values):
        raise ConfigError(path, f"expected {n} signs +1 or -1")
    return tuple(values)


def _general_point(obj: Any, orders: PoleOrders, path: str) -> tuple[ExtendedPoint, bool]:
    obj = _keys(obj, {"a_inf", "w", "a_fin", "q", "v", "eps"}, path)
    exact = True
    a_inf, e = _numbers(obj.get("a_inf", []), f"{path}.a_inf")
    exact &= e
    w, e = _numbers(obj.get("w", []), f"{path}.w")
    exact &= e
    a_fin = []
    raw_fin = obj.get("a_fin", [])
    if not isinstance(raw_fin, list):
        raise ConfigError(f"{path}.a_fin", "expected a list of lists")
    for i, row in enumerate(raw_fin):
        vals, e = _numbers(row, f"{path}.a_fin[{i}]")
        a_fin.append(vals)
        exact &= e
    q, e = _numbers(obj.get("q", []), f"{path}.q")
    exact &= e
    v, e = _numbers(obj.get("v", []), f"{path}.v")
    exact &= e
    eps = _eps(obj.get("eps"), orders.n, f"{path}.eps")
    try:
        base = ModuliPoint.build(orders, a_inf, w, a_fin)
        return ExtendedPoint.build(base, q, v, eps), exact
    except IsoHKError as exc:
        raise ConfigError(path, str(exc)) from None


def _pvi_point(obj: Any, path: str) -> tuple[PviPoint, bool]:
    obj = _keys(obj, {"a", "w", "q", "v", "eps"}, path)
    values, exact = [], True
    for key in ("a", "w", "q", "v"):
        if key not in obj:
            raise ConfigError(f"{path}.{key}", "missing")
        x, e = _number(obj[key], f"{path}.{key}")
        values.append(x)
        exact &= e
    eps = _eps(obj.get("eps"), 1, f"{path}.eps")[0]
    try:
        return PviPoint.build(*values, eps=eps), exact
    except IsoHKError as exc:
        raise ConfigError(path, str(exc)) from None


def _check_names(kind: str) -> tuple[str, ...]:
    return PVI_GROUPS if kind == "pvi" else GENERAL_GROUPS


def parse_config(text: str) -> RunConfig:
    """Validate a JSON run config; errors name the offending path."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("", f"malformed JSON: {exc}") from None
    doc = _keys(doc, TOP_KEYS, "")
    kind = doc.get("kind", "general")
    if kind not in ("general", "pvi"):
        raise ConfigError("kind", "must be 'general' or 'pvi'")
    seed = doc.get("seed")
    if seed is not None and (not isinstance(seed, int) or isinstance(seed, bool)):
        raise ConfigError("seed", "must be an integer")
    mode = doc.get("mode", "auto")
    if mode not in ("exact", "float", "auto"):
        raise ConfigError("mode", "must be exact, float or auto")
    tolerance = 1e-8
    if "tolerances" in doc:
        tol_doc = _keys(doc["tolerances"], {"residual"}, "tolerances")
        if "residual" in tol_doc:
            tol_value, _ = _number(tol_doc["residual"], "tolerances.residual")
            tolerance = float(to_float(tol_value).real)
            if tolerance <= 0:
                raise ConfigError("tolerances.residual", "must be positive")
    hbar, exact_hbar = _numbers(doc.get("hbar", ["1"]), "hbar")
    if not hbar or any(h == 0 for h in hbar):
        raise ConfigError("hbar", "need at least one nonzero value")
    raw_checks = doc.get("checks", ["all"])
    if not isinstance(raw_checks, list) or not all(isinstance(c, str) for c in raw_checks):
        raise ConfigError("checks", "expected a list of names")
    allowed = _check_names(kind)
    checks: list[str] = []
    for i, name in enumerate(raw_checks):
        if name == "all":
            checks.extend(c for c in allowed if c not in checks)
        elif name in allowed:
            if name not in checks:
                checks.append(name)
        else:
            raise ConfigError(f"checks[{i}]", f"unknown check {name!r} for kind {kind}")
    output = doc.get("output")
    if output is not None and not isinstance(output, str):
        raise ConfigError("output", "must be a path string")
    count = doc.get("random_points", 0)
    if not isinstance(count, int) or isinstance(count, bool) or count < 0:
        raise ConfigError("random_points", "must be a non-negative integer")
    if count and seed is None:
        raise ConfigError("seed", "a seed is required when random points are requested")
    if "point" in doc and count:
        raise ConfigError("random_points", "give either a point or random_points")

    points: list[Any] = []
    exact = exact_hbar
    pole_orders: tuple[int, ...] = ()
    settings = IntegrateSettings()
    if kind == "general":
        if "integrate" in doc:
            raise ConfigError("integrate", "only valid for kind 'pvi'")
        raw = doc.get("pole_orders")
        if not isinstance(raw, list) or not raw or not all(isinstance(k, int) and not isinstance(k, bool) for k in raw):
            raise ConfigError("pole_orders", "expected a non-empty list of integers")
        try:
            orders = PoleOrders.from_pole_orders(raw)
        except UnsupportedOrders as exc:
            raise UnsupportedOrders(f"pole_orders: {exc}") from None
        pole_orders = tuple(raw)
        if "point" in doc:
            pt, e = _general_point(doc["point"], orders, "point")
            points.append(pt)
            exact &= e
        elif count:
            points.extend(random_point(orders, seed + k) for k in range(count))
        else:
            points.append(random_point(orders, 0))
    else:
        if "pole_orders" in doc:
            raise ConfigError("pole_orders", "not used for kind 'pvi'")
        if "point" in doc:
            pt, e = _pvi_point(doc["point"], "point")
            points.append(pt)
            exact &= e
        elif count:
            points.extend(random_pvi_point(seed + k) for k in range(count))
        else:
            points.append(PviPoint.build(1, 2, 3, Fraction(1, 2)))
        if "integrate" in doc:
            idoc = _keys(doc["integrate"], {"from", "to", "detour", "tolerance"}, "integrate")
            start = _number(idoc["from"], "integrate.from")[0] if "from" in idoc else None
            end = _number(idoc["to"], "integrate.to")[0] if "to" in idoc else None
            detour = float(_number(idoc["detour"], "integrate.detour")[0]) if "detour" in idoc else 0.3
            tol = float(_number(idoc["tolerance"], "integrate.tolerance")[0]) if "tolerance" in idoc else 1e-10
            settings = IntegrateSettings(start, end, detour, tol)
    if mode == "exact" and not (exact and all(p.is_exact() for p in points)):
        raise ConfigError("mode", "exact mode needs rational input and rational p")
    return RunConfig(
        kind, pole_orders, tuple(points), tuple(hbar), mode, tolerance, seed, tuple(checks), output, settings, exact
    )


# Report ---------------------------------------------------------------------


@dataclass
class CheckResult:
    name: str
    status: str
    residual: float | None
    details: str = ""

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "status": self.status,
            "residual": None if self.residual is None else format_decimal(self.residual),
            "details": self.details,
        }


@dataclass
class Report:
    meta: dict
    case: dict
    checks: list[CheckResult]
    elapsed: float = 0.0

    @property
    def passed(self) -> bool:
        return all(c.status != "fail" for c in self.checks)

    def to_json(self) -> str:
        doc = {"meta": self.meta, "case": self.case, "checks": [c.as_dict() for c in self.checks]}
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"


class _Runner:
    """Collects check results; exceptions inside a check become failures."""

    def __init__(self, tol: float) -> None:
        self.tol = tol
        self.results: list[CheckResult] = []

    def run(self, name: str, fn: Callable[[], tuple[bool, float | None, str]]) -> None:
        try:
            ok, residual, details = fn()
            status = "pass" if ok else "fail"
        except IsoHKError as exc:
            status, residual, details = "fail", None, f"{type(exc).__name__}: {exc}"
        except (ArithmeticError, ValueError) as exc:
            status, residual, details = "fail", None, f"{type(exc).__name__}: {exc}"
        self.results.append(CheckResult(name, status, residual, details))

    def skip(self, name: str, reason: str) -> None:
        self.results.append(CheckResult(name, "skip", None, reason))

    def small(self, values: Sequence[float]) -> tuple[bool, float]:
        worst = max(values, default=0.0)
        return worst < self.tol, worst


def _prepare(points: Sequence[Any], mode: str) -> list[Any]:
    if mode == "float":
        return [p.to_float() for p in points]
    return list(points)


def _hbars(values: Sequence[Scalar], mode: str) -> list[Scalar]:
    return [to_float(h) if mode == "float" else h for h in values]


def _general_checks(config: RunConfig, runner: _Runner) -> None:
    orders = config.orders
    points = _prepare(config.points, config.mode)
    hbars = _hbars(config.hbar, config.mode)
    n = orders.n

    for idx, ext in enumerate(points):
        tag = f"[{idx}]"
        exact = ext.is_exact()

        def judge(values: Sequence[float]) -> tuple[bool, float]:
            worst = max(values, default=0.0)
            return (worst == 0.0 if exact else worst < runner.tol), worst

        if "potential" in config.checks:

            def apparent() -> tuple[bool, float, str]:
                vals = []
                for h in hbars:
                    q = ext.potentials().assemble(h)
                    for qi, vi, pi in zip(ext.q, ext.v, ext.p_values()):
                        vals.append(verify_apparent_singularity(q, qi, vi + pi / h).residual)
                ok, worst = judge(vals)
                return ok, worst, f"{len(vals)} (q_I, hbar) pairs"

            runner.run(f"potential.apparent_singularity{tag}", apparent)

        if "flows" in config.checks:

            def flatness() -> tuple[bool, float, str]:
                flows = all_flows(orders, ext)
                vals = [model_flatness_residual(ext, h, f) for h in hbars for f in flows]
                ok, worst = judge(vals)
                return ok, worst, f"{len(flows)} generators x {len(hbars)} hbar"

            def isopotential() -> tuple[bool, float, str]:
                vals = []
                for h in hbars:
                    for f in isopotential_flows(orders, ext):
                        dq = model_derivative_Q(ext, h, f.at(h))
                        vals.append(0.0 if dq.is_zero() else dq.max_abs() / max(ext.potentials().assemble(h).max_abs(), 1e-300))
                ok, worst = judge(vals)
                return ok, worst, "D_L Q for the isopotential generators"

            def independence() -> tuple[bool, float, str]:
                rep = independence_report(orders, ext)
                ok = rep.rank == 4 * n and rep.det_N != 0 and rep.parity_ok
                return ok, None, f"rank {rep.rank}/{4 * n}, det N = {format_decimal(rep.det_N)}, parity {rep.parity_ok}"

            runner.run(f"flows.flatness{tag}", flatness)
            runner.run(f"flows.isopotential{tag}", isopotential)
            runner.run(f"flows.independence{tag}", independence)

        if "two-forms" in config.checks:

            def kernel() -> tuple[bool, float, str]:
                flows = all_flows(orders, ext)
                vals, dims = [], []
                for h in hbars:
                    mat = model_omega_direct(ext, h)
                    rep = model_kernel_check(ext, h, flows, mat)
                    vals.append(rep.residual)
                    dims.append(rep.kernel_dimension)
                ok, worst = judge(vals)
                return ok and all(d == 2 * n for d in dims), worst, f"kernel dimensions {dims}, expected {2 * n}"

            def decomposition() -> tuple[bool, float, str]:
                samples = _hbars(DECOMPOSITION_HBAR, config.mode)
                fit = model_omega_decompose(ext, samples)
                parts = model_omega_parts(ext)
                outer = max(fit.coefficient_minus3, fit.coefficient_plus1) / max(fit.scale, 1e-300)
                gaps = []
                for name in ("minus", "i_omega_I", "plus"):
                    a, b = getattr(fit.parts, name), getattr(parts, name)
                    scale = max(b.max_abs(), 1e-300)
                    gaps.append(max(magnitude(x - y) for ra, rb in zip(a.entries, b.entries) for x, y in zip(ra, rb)) / scale)
                ok, worst = judge([outer] + gaps)
                return ok, worst, f"outer coefficients {format_decimal(outer)}, parts gap {format_decimal(max(gaps))}"

            def vertical() -> tuple[bool, float, str]:
                plus = model_omega_parts(ext).plus
                worst = 0.0
                for j in range(2 * n):
                    for k in range(2 * n):
                        r, c = 2 * n + j, 2 * n + k
                        expected: Scalar = 0
                        if j >= n and k == j - n:
                            expected = 1
                        elif j < n and k == j + n:
                            expected = -1
                        worst = max(worst, magnitude(plus[r, c] - expected))
                return judge([worst])[0], worst, "Omega_+ on span{dq, dv} against sum dv^dq"

            def base_form() -> tuple[bool, float, str]:
                omega = omega_M(orders, ext.base)
                check_omega_pattern(orders, omega)
                det = linalg.det(omega.entries)
                return det != 0, None, f"det omega = {format_decimal(det)}"

            def involution() -> tuple[bool, float, str]:
                a = model_omega_parts(ext)
                b = model_omega_parts(ext.flipped())
                gaps = []
                for name, sign in (("minus", 1), ("i_omega_I", -1)):
                    x, y = getattr(a, name), getattr(b, name)
                    scale = max(x.max_abs(), 1e-300)
                    gaps.append(
                        max(magnitude(u - sign * w) for ru, rw in zip(x.entries, y.entries) for u, w in zip(ru, rw)) / scale
                    )
                ok, worst = judge(gaps)
                return ok, worst, "Omega_- fixed and Omega_I negated under eps -> -eps"

            def homothety() -> tuple[bool, float, str]:
                vals = []
                for lam in (1.1, 2.0):
                    rep = homothety_check(orders, ext, lam)
                    vals += [rep.minus, rep.omega_I, rep.plus]
                worst = max(vals)
                return worst < runner.tol, worst, "lambda in {1.1, 2}"

            def contour() -> tuple[bool, float, str]:
                rng = random.Random(config.seed if config.seed is not None else 0)
                h = hbars[0]
                mat = model_omega_direct(ext, h)
                dim = ext.dim
                scale = max(abs(complex(x)) for row in mat.entries for x in row)
                worst = 0.0
                for _ in range(3):
                    j, k = rng.sample(range(dim), 2)
                    e_j = [1 if i == j else 0 for i in range(dim)]
                    e_k = [1 if i == k else 0 for i in range(dim)]
                    total = model_omega_contour(ext, h, e_j, e_k)
                    worst = max(worst, abs(total - complex(mat[j, k])) / scale)
                return worst < runner.tol, worst, "3 entries, series residues against quadrature"

            runner.run(f"two-forms.kernel{tag}", kernel)
            runner.run(f"two-forms.decomposition{tag}", decomposition)
            runner.run(f"two-forms.vertical{tag}", vertical)
            runner.run(f"two-forms.base_form{tag}", base_form)
            runner.run(f"two-forms.involution{tag}", involution)
            runner.run(f"two-forms.homothety{tag}", homothety)
            runner.run(f"two-forms.contour{tag}", contour)

        if "metric" in config.checks:

            def structure(point: ExtendedPoint):
                parts = model_omega_parts(point)
                frame = build_frame(all_flows(orders, point))
                return parts, frame, assemble_metric(frame, parts.omega_I)

            def metric_checks() -> tuple[bool, float, str]:
                parts, frame, g = structure(ext)
                rel = frame.relations_residual()
                herm = hermiticity_residuals(g, frame)
                ann = annihilator_check(parts.minus, parts.i_omega_I, parts.plus, frame)
                jk = jk_identities(parts, frame, g)
                vals = [rel, *herm, *ann, *jk, g.symmetry_residual() / max(g.max_abs(), 1e-300)]
                worst = max(vals)
                det = linalg.det(g.entries)
                ok = worst < runner.tol and magnitude(det) > 0
                return ok, worst, "quaternion relations, hermiticity, annihilators, J/K identities, symmetry"

            def metric_involution() -> tuple[bool, float, str]:
                _, _, g = structure(ext)
                _, _, h = structure(ext.flipped())
                scale = max(g.max_abs(), 1e-300)
                worst = max(magnitude(x + y) for rx, ry in zip(g.entries, h.entries) for x, y in zip(rx, ry)) / scale
                ok = worst == 0.0 if exact else worst < runner.tol
                return ok, worst, "g changes sign under eps -> -eps"

            runner.run(f"metric.identities{tag}", metric_checks)
            runner.run(f"metric.involution{tag}", metric_involution)

        if "genericity" in config.checks:

            def discriminant() -> tuple[bool, float, str]:
                reps = [genericity_check(orders, ext, h) for h in hbars]
                ok = all(r.simple_zeros for r in reps)
                smallest = min(magnitude(r.discriminant) for r in reps)
                return ok, None, f"min |disc| = {format_decimal(smallest)}"

            def genus() -> tuple[bool, float, str]:
                stats = [curve_stats(orders, ext, h) for h in hbars]
                ok = all(s.genus_Sigma == 2 * n and s.genus_Sigma0 == n for s in stats)
                s = stats[0]
                return ok, None, f"genus(Sigma) = {s.genus_Sigma}, genus(Sigma0) = {s.genus_Sigma0}"

            runner.run(f"genericity.discriminant{tag}", discriminant)
            runner.run(f"genericity.genus{tag}", genus)


def _pvi_checks(config: RunConfig, runner: _Runner) -> None:
    points = _prepare(config.points, config.mode)
    hbars = _hbars(config.hbar, config.mode)
    for idx, pt in enumerate(points):
        tag = f"[{idx}]"
        exact = pt.is_exact()

        def judge(values: Sequence[float]) -> tuple[bool, float]:
            worst = max(values, default=0.0)
            return (worst == 0.0 if exact else worst < runner.tol), worst

        def potentials() -> tuple[bool, float, str]:
            vals = []
            for h in hbars:
                q = pvi_potentials(pt).assemble(h)
                vals.append(verify_apparent_singularity(q, pt.q, pt.v + pt.p / h).residual)
            ok, worst = judge(vals)
            return ok, worst, "R(q) = 2pv, S(q) = v^2 and the apparent singularity at q"

        def flows() -> tuple[bool, float, str]:
            u, v = pvi_flows(pt)
            vals = [model_flatness_residual(pt, h, f) for h in hbars for f in (u, v)]
            ok, worst = judge(vals)
            return ok, worst, "flatness of U (A = 0) and V"

        def flow_residual() -> tuple[bool, float, str]:
            vals = [magnitude(pvi_flow_residual(pt, h)) for h in hbars]
            ok, worst = judge(vals)
            return ok, worst, "Painleve VI along V by jets"

        def omega() -> tuple[bool, float, str]:
            st = pvi_structure(pt)
            wa, aw = st.omega(1, 0), st.omega(0, 1)
            gap = magnitude(aw - Fraction(1, 2))
            ok = gap == 0.0 if exact else gap < runner.tol
            return ok, gap, f"Omega_-(d/da, d/dw) = {format_decimal(aw)}, Omega_-(d/dw, d/da) = {format_decimal(wa)}"

        def metric() -> tuple[bool, float, str]:
            st = pvi_structure(pt)
            herm = hermiticity_residuals(st.metric, st.frame)
            ann = annihilator_check(st.parts.minus, st.parts.i_omega_I, st.parts.plus, st.frame)
            vals = [metric_mismatch(pt), st.frame.relations_residual(), *herm, *ann]
            worst = max(vals)
            return worst < runner.tol, worst, "closed form against the frame-assembled metric, hermiticity, annihilators"

        def euler() -> tuple[bool, float, str]:
            closed, assembled = euler_norm(pt)
            scale = max(float(abs(pvi_structure(pt).metric.full()).max()), 1e-300)
            worst = max(magnitude(closed), abs(assembled) / scale)
            return worst < runner.tol, worst, "g(E, E) with E = 2a d/da"

        def killing() -> tuple[bool, float, str]:
            rep = pvi_killing_check(pt)
            ok = (rep.exact or rep.q1_residual < 1e-10) and rep.lie_residual < 1e-6
            return ok, max(rep.q1_residual, rep.lie_residual), f"K(Q1) = Q0 exact: {rep.exact}; Lie derivative {format_decimal(rep.lie_residual)}"

        def ricci() -> tuple[bool, float, str]:
            r1, r2, order = ricci_convergence(pvi_metric_field(pt), pt.to_float(), 1e-4, dps=40)
            return r1 < 1e-5 and abs(order - 2) < 0.5, r1, f"step halved: {format_decimal(r2)}, order {order:.3f}"

        runner.run(f"pvi.potentials{tag}", potentials)
        runner.run(f"pvi.flows{tag}", flows)
        runner.run(f"pvi.flow_residual{tag}", flow_residual)
        runner.run(f"pvi.omega{tag}", omega)
        runner.run(f"pvi.metric{tag}", metric)
        runner.run(f"pvi.euler{tag}", euler)
        runner.run(f"pvi.killing{tag}", killing)
        runner.run(f"pvi.ricci{tag}", ricci)

        settings = config.integrate

        def integrate() -> tuple[bool, float, str]:
            start = pt
            if settings.start is not None and settings.start != pt.w:
                raise ConfigError("integrate.from", "must equal the point's w")
            end = settings.end if settings.end is not None else pt.w + 1
            tr = pvi_integrate(start, hbars[0], complex(end), settings.tolerance, settings.detour)
            return tr.residual < 1e-6, tr.residual, f"w: {format_decimal(pt.w)} -> {format_decimal(end)}, q(end) = {format_decimal(tr.end[0])}"

        runner.run(f"pvi.integrate{tag}", integrate)

    def algebraic() -> tuple[bool, float, str]:
        vals, skipped = [], 0
        for w in ALGEBRAIC_W:
            for branch in pvi_algebraic_check(w):
                if branch.skipped:
                    skipped += 1
                else:
                    vals.append(magnitude(branch.residual))
        worst = max(vals)
        return worst < 1e-10, worst, f"{len(vals)} branches, {skipped} skipped"

    runner.run("pvi.algebraic", algebraic)


def run_checks(config: RunConfig) -> Report:
    """Execute the configured checks; individual failures never abort the run."""
    started = time.perf_counter()
    runner = _Runner(config.tolerance)
    if config.kind == "general":
        _general_checks(config, runner)
    else:
        _pvi_checks(config, runner)
    elapsed = time.perf_counter() - started
    mode_used = config.mode
    if mode_used == "auto":
        mode_used = "exact" if all(p.is_exact() for p in config.points) and config.exact_input else "float"
    meta = {
        "schema": SCHEMA_VERSION,
        "version": __version__,
        "mode": mode_used,
        "seed": config.seed,
        "timing": None,
    }
    case = {
        "kind": config.kind,
        "pole_orders": list(config.pole_orders),
        "points": [[format_decimal(c) for c in p.coordinates()] for p in config.points],
        "hbar": [format_decimal(h) for h in config.hbar],
        "checks": list(config.checks),
        "tolerance": format_decimal(config.tolerance),
    }
    return Report(meta, case, runner.results, elapsed)


# Entry point ----------------------------------------------------------------


def _emit(report: Report, out: str | None, timing: bool) -> int:
    if timing:
        report.meta["timing"] = {"seconds": format_decimal(report.elapsed)}
    text = report.to_json()
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0 if report.passed else 1


def _verify(args: argparse.Namespace) -> int:
    with open(args.config, encoding="utf-8") as fh:
        text = fh.read()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("", f"malformed JSON: {exc}") from None
    if isinstance(doc, dict):
        if args.mode:
            doc["mode"] = args.mode
        if args.tol is not None:
            doc["tolerances"] = {**doc.get("tolerances", {}), "residual": repr(args.tol)}
        if args.seed is not None:
            doc["seed"] = args.seed
        if args.checks:
            doc["checks"] = [c.strip() for c in args.checks.split(",") if c.strip()]
    config = parse_config(json.dumps(doc))
    return _emit(run_checks(config), args.out or config.output, args.timing)


def _pvi_point_arg(text: str | None) -> PviPoint:
    if not text:
        return PviPoint.build(1, 2, 3, Fraction(1, 2))
    parts = [p.strip() for p in text.split(",")]
    if len(parts) not in (4, 5):
        raise ConfigError("--point", "expected a,w,q,v[,eps]")
    values = [_number(p, "--point")[0] for p in parts[:4]]
    eps = int(parts[4]) if len(parts) == 5 else 1
    try:
        return PviPoint.build(*values, eps=eps)
    except IsoHKError as exc:
        raise ConfigError("--point", str(exc)) from None


def _pvi_integrate(args: argparse.Namespace) -> int:
    pt = _pvi_point_arg(args.point)
    w0 = _number(args.w_from, "--from")[0] if args.w_from else pt.w
    if w0 != pt.w:
        pt = PviPoint.build(pt.a, w0, pt.q, pt.v, pt.eps)
    w1 = _number(args.w_to, "--to")[0]
    hbar = _number(args.hbar, "--hbar")[0]
    runner = _Runner(1e-6)

    def integrate() -> tuple[bool, float, str]:
        tr = pvi_integrate(pt, hbar, complex(w1), args.tol, args.detour)
        return tr.residual < 1e-6, tr.residual, (
            f"q(end) = {format_decimal(tr.end[0])}, jet residual {format_decimal(tr.jet_residual)}, "
            f"p drift {format_decimal(tr.p_drift)}"
        )

    runner.run("pvi.integrate", integrate)
    meta = {"schema": SCHEMA_VERSION, "version": __version__, "mode": "float", "seed": None, "timing": None}
    case = {
        "kind": "pvi",
        "points": [[format_decimal(c) for c in pt.coordinates()]],
        "hbar": [format_decimal(hbar)],
        "integrate": {"from": format_decimal(w0), "to": format_decimal(w1), "detour": format_decimal(args.detour)},
    }
    return _emit(Report(meta, case, runner.results), args.out, False)


def _pvi_check(args: argparse.Namespace) -> int:
    doc: dict[str, Any] = {"kind": "pvi", "checks": ["all"]}
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            doc = json.loads(fh.read())
        doc.setdefault("kind", "pvi")
    config = parse_config(json.dumps(doc))
    return _emit(run_checks(config), args.out or config.output, args.timing)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="isohk", description="Verify isomonodromic hyper-Kahler structures.")
    sub = parser.add_subparsers(dest="command", required=True)

    verify = sub.add_parser("verify", help="run the checks described by a JSON config")
    verify.add_argument("--config", required=True)
    verify.add_argument("--out")
    verify.add_argument("--mode", choices=("exact", "float", "auto"))
    verify.add_argument("--tol", type=float)
    verify.add_argument("--seed", type=int)
    verify.add_argument("--checks", help="comma-separated check groups")
    verify.add_argument("--timing", action="store_true", help="record wall time (reports stop being byte-identical)")
    verify.set_defaults(handler=_verify)

    pvi = sub.add_parser("pvi", help="the four-pole Painleve VI family")
    pvi_sub = pvi.add_subparsers(dest="pvi_command", required=True)
    integ = pvi_sub.add_parser("integrate", help="integrate the Painleve flow and report the residual")
    integ.add_argument("--from", dest="w_from")
    integ.add_argument("--to", dest="w_to", required=True)
    integ.add_argument("--point", help="a,w,q,v[,eps] as strings; default 1,2,3,1/2")
    integ.add_argument("--hbar", default="1")
    integ.add_argument("--detour", type=float, default=0.3)
    integ.add_argument("--tol", type=float, default=1e-10)
    integ.add_argument("--out")
    integ.set_defaults(handler=_pvi_integrate)
    check = pvi_sub.add_parser("check", help="run the full PVI suite")
    check.add_argument("--config")
    check.add_argument("--out")
    check.add_argument("--timing", action="store_true")
    check.set_defaults(handler=_pvi_check)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except (ConfigError, UnsupportedOrders) as exc:
        sys.stderr.write(f"config error: {exc}\n")
        return 2
    except OSError as exc:
        sys.stderr.write(f"config error: {exc}\n")
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
