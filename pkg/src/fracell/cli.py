"""Batch front-end: `fracell <command> [--config path] [--key=value ...] [--out dir]`.

Commands: solve, kernel, extension, halfline, probe, converge.  Configs are
flat key=value text files; command-line --key=value pairs override them.
Every run writes report.json (sorted keys, no timestamps) embedding the
resolved-config hash and the package version, plus CSV artifacts; the exit
status is 0 iff every enabled assertion passed.  Outputs are a pure
function of (config, seed).  FRACELL_THREADS caps sweep parallelism.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .grids import (
    BoundaryCondition,
    CoefficientField,
    DIRICHLET,
    Grid,
    GridFunction,
)
from .operators import assemble
from .spectral import (
    CompatibilityError,
    eigendecompose,
    fractional_apply,
    fractional_solve,
    fractional_solve_sine,
    hs_energy_norm,
)
from .semigroup import (
    SingularQuadrature,
    greens_function,
    greens_function_quadrature,
    jump_kernel,
    kernel_log_fit,
    kernel_slope_fit,
)
from .extension import (
    ExtensionMesh,
    dtn_constant_divform,
    dtn_extract,
    extension_energy,
    solve_extension,
)
from .halfspace import (
    HalfLineProblem,
    RHS_INDICATOR,
    RHS_ONE,
    closed_form_halfline,
    halfline_inverse_quadrature,
    interior_log_constant,
)
from .regularity import (
    CampanatoProbe,
    boundary_exponent,
    dirichlet_layer_split,
    dyadic_radii,
    harnack_quotient,
    interior_exponent,
    lp_spike,
)
from .io import (
    config_hash,
    write_eigen_csv,
    write_eigen_summary,
    write_eigenvectors,
    write_extension_csv,
    write_field_csv,
    write_grid_json,
    write_oracle_csv,
    write_report_json,
)

COMMANDS = ("solve", "kernel", "extension", "halfline", "probe", "converge")

from .grids import l2_norm


class ConfigError(ValueError):
    """Bad or missing configuration key; the message names it."""


@dataclass
class RunConfig:
    command: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ConfigError(f"key 'command': unknown command {self.command!r}")

    def raw(self, key: str, default=None):
        return self.params.get(key, default)

    def get_float(self, key, default=None, lo=None, hi=None) -> float:
        val = self.params.get(key, default)
        if val is None:
            raise ConfigError(f"key {key!r}: required but missing")
        try:
            x = float(val)
        except (TypeError, ValueError):
            raise ConfigError(f"key {key!r}: not a number: {val!r}") from None
        if lo is not None and x < lo or hi is not None and x > hi:
            raise ConfigError(f"key {key!r}: value {x} outside [{lo}, {hi}]")
        return x

    def get_int(self, key, default=None, lo=None) -> int:
        x = self.get_float(key, default)
        if x != int(x):
            raise ConfigError(f"key {key!r}: expected an integer, got {x}")
        n = int(x)
        if lo is not None and n < lo:
            raise ConfigError(f"key {key!r}: value {n} below minimum {lo}")
        return n

    def get_choice(self, key, choices, default=None) -> str:
        val = self.params.get(key, default)
        if val not in choices:
            raise ConfigError(f"key {key!r}: expected one of {choices}, got {val!r}")
        return val

    def get_bool(self, key, default="false") -> bool:
        val = str(self.params.get(key, default)).lower()
        if val not in ("true", "false", "0", "1"):
            raise ConfigError(f"key {key!r}: expected true/false, got {val!r}")
        return val in ("true", "1")

    def resolved(self) -> dict:
        """Canonical config for hashing/reporting; the output directory is
        a disposition, not a numerical input, and is excluded so reruns
        into different directories stay byte-identical."""
        items = {k: str(v) for k, v in self.params.items() if k != "out"}
        return {"command": self.command, **items}


def parse_config_file(path) -> dict:
    out = {}
    for ln, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {ln} of {path}: expected key = value")
        key, _, val = stripped.partition("=")
        out[key.strip()] = val.strip()
    return out


def coefficient_from_spec(grid: Grid, spec: str) -> CoefficientField:
    name, _, arg = spec.partition(":")
    if name == "identity":
        return CoefficientField.identity(grid)
    if name == "constant":
        return CoefficientField.constant(grid, float(arg) * np.eye(grid.dim))
    if name == "diag":
        vals = [float(v) for v in arg.split(",")]
        if grid.dim != len(vals):
            raise ConfigError(f"key 'coeff': diag needs {grid.dim} entries")
        return CoefficientField.constant(grid, np.diag(vals))
    if name == "sine":
        amp = float(arg) if arg else 0.5
        if not -1 < amp < 1:
            raise ConfigError("key 'coeff': sine amplitude must lie in (-1,1)")
        L = grid.extents[0]
        return CoefficientField.from_callable(
            grid, lambda *xs: 1.0 + amp * np.sin(2 * np.pi * xs[0] / L)
        )
    raise ConfigError(f"key 'coeff': unknown coefficient spec {spec!r}")


def rhs_from_spec(grid: Grid, spec: str, bc: BoundaryCondition, rng) -> GridFunction:
    name, _, arg = spec.partition(":")
    if name == "ones":
        return GridFunction.ones(grid)
    if name == "sine":
        k = int(arg) if arg else 1
        L = grid.extents[0]
        return GridFunction.from_callable(grid, lambda *xs: np.sin(k * np.pi * xs[0] / L))
    if name == "bump":
        L = grid.extents[0]
        return GridFunction.from_callable(
            grid, lambda *xs: (xs[0] * (L - xs[0])) ** 2 * (16.0 / L**4)
        )
    if name == "random":
        vals = rng.standard_normal(grid.shape)
        if bc.is_dirichlet:
            vals = vals * grid.interior_mask()
        else:
            vals = vals - vals.mean()
        return GridFunction(grid, vals)
    if name == "spike":
        p = float(arg) if arg else 3.0
        center = tuple(e / 2 for e in grid.extents)
        return lp_spike(grid, center, p)
    raise ConfigError(f"key 'rhs': unknown spec {spec!r}")


def _build_problem(cfg: RunConfig):
    dim = cfg.get_int("dim", 1)
    if dim not in (1, 2):
        raise ConfigError("key 'dim': must be 1 or 2")
    nodes = cfg.get_int("nodes", 130, lo=3)
    extent = cfg.get_float("extent", 1.0, lo=1e-12)
    grid = Grid((extent,) * dim, (nodes,) * dim)
    bc = BoundaryCondition(cfg.get_choice("bc", ("dirichlet", "neumann"), "dirichlet"))
    A = coefficient_from_spec(grid, cfg.raw("coeff", "identity"))
    op = assemble(grid, A, bc)
    return grid, bc, A, op


def _assertion(name, value, target, tol, mode="le") -> dict:
    if mode == "le":
        ok = value <= target + tol
    elif mode == "abs":
        ok = abs(value - target) <= tol
    else:
        raise ValueError(mode)
    return {
        "name": name,
        "value": float(value),
        "target": float(target),
        "tolerance": float(tol),
        "mode": mode,
        "pass": bool(ok),
    }


def _max_workers() -> int:
    try:
        return max(1, int(os.environ.get("FRACELL_THREADS", "1")))
    except ValueError:
        return 1


def _parallel_map(fn, items):
    workers = _max_workers()
    if workers == 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def _cmd_solve(cfg: RunConfig, out: Path, rng) -> tuple[list, dict]:
    grid, bc, A, op = _build_problem(cfg)
    s = cfg.get_float("s", 0.5, lo=1e-9, hi=1.0)
    basis = eigendecompose(op)
    f = rhs_from_spec(grid, cfg.raw("rhs", "ones"), bc, rng)
    try:
        u = fractional_solve(basis, f, s)
    except CompatibilityError as exc:
        return (
            [
                {
                    "name": "solve_compatible_datum",
                    "value": math.inf,
                    "target": 0.0,
                    "tolerance": 0.0,
                    "mode": "le",
                    "pass": False,
                    "detail": str(exc),
                }
            ],
            {"error": str(exc)},
        )
    back = fractional_apply(basis, u, s)
    # compare on the active nodes: the Dirichlet representation of f drops
    # boundary samples, the Neumann one its mean
    mask = basis.active_mask
    fv = f.values[mask]
    if not bc.is_dirichlet:
        fv = fv - fv.mean()
    diff = back.values[mask] - fv
    resid = float(np.linalg.norm(diff) / max(np.linalg.norm(fv), 1e-300))
    write_field_csv(out / "solution.csv", u)
    write_grid_json(out / "problem.json", grid, bc, cfg.raw("coeff", "identity"))
    write_eigen_csv(out / "spectrum.csv", basis)
    write_eigen_summary(out / "spectrum.json", basis)
    write_eigenvectors(out, basis, cfg.get_int("eigenvectors", 3, lo=0))
    assertions = [_assertion("solve_round_trip", resid, 0.0, 1e-8)]
    return assertions, {
        "solution_l2": l2_norm(u),
        "round_trip_residual": resid,
        "spectrum": {"min": basis.eigenvalues.min(), "max": basis.lambda_max},
    }


def _cmd_kernel(cfg: RunConfig, out: Path, rng) -> tuple[list, dict]:
    grid, bc, A, op = _build_problem(cfg)
    s = cfg.get_float("s", 0.5, lo=1e-9, hi=1.0 - 1e-9)
    kind = cfg.get_choice("kind", ("jump", "greens"), "jump")
    basis = eigendecompose(op)
    n = grid.dim
    assertions = []
    payload = {}
    if kind == "jump":
        q = SingularQuadrature.for_spectrum(s, basis.lambda_min_positive, basis.lambda_max)
        K = jump_kernel(basis, s, q)
        fit = kernel_slope_fit(
            K,
            r_min=_optional_float(cfg, "fit_rmin"),
            r_max=_optional_float(cfg, "fit_rmax"),
            interior_margin=_optional_float(cfg, "margin"),
        )
        target = -(n + 2 * s)
        tol = cfg.get_float("slope_tol", 0.15, lo=0.0)
        assertions.append(_assertion("jump_kernel_slope", fit.slope, target, tol, "abs"))
        assertions.append(_assertion("kernel_symmetry", K.symmetry_defect(), 0.0, 1e-10))
        payload["fit"] = fit.as_dict()
    else:
        G = greens_function(basis, s)
        Gq = greens_function_quadrature(basis, s)
        routes = float(
            np.abs(G.entries - Gq.entries).max() / np.abs(G.entries).max()
        )
        assertions.append(_assertion("greens_route_agreement", routes, 0.0, 1e-6))
        assertions.append(_assertion("greens_symmetry", G.symmetry_defect(), 0.0, 1e-10))
        if n == 2 * s:  # 1D, s = 1/2: logarithmic regime
            fit = kernel_log_fit(G)
            assertions.append(_assertion("greens_log_r2", -fit.r2, -0.99, 0.0))
        else:
            fit = kernel_slope_fit(
                G,
                r_min=_optional_float(cfg, "fit_rmin"),
                r_max=_optional_float(cfg, "fit_rmax"),
                interior_margin=_optional_float(cfg, "margin"),
            )
            target = -(n - 2 * s)
            tol = cfg.get_float("slope_tol", 0.1, lo=0.0)
            assertions.append(_assertion("greens_slope", fit.slope, target, tol, "abs"))
        payload["fit"] = fit.as_dict()
        payload["route_agreement"] = routes
    if cfg.get_bool("write_kernel"):
        from .io import write_kernel_csv

        kernel_obj = K if kind == "jump" else G
        write_kernel_csv(out / f"{kind}_kernel.csv", kernel_obj)
    write_report_json(out / "kernel_fit.json", payload)
    return assertions, payload


def _optional_float(cfg: RunConfig, key: str):
    return None if cfg.raw(key) is None else cfg.get_float(key)


def _cmd_extension(cfg: RunConfig, out: Path, rng) -> tuple[list, dict]:
    grid, bc, A, op = _build_problem(cfg)
    if not bc.is_dirichlet:
        raise ConfigError("key 'bc': extension command drives the Dirichlet problem")
    s = cfg.get_float("s", 0.5, lo=1e-9, hi=1.0 - 1e-9)
    layers = cfg.get_int("layers", 64, lo=4)
    basis = eigendecompose(op)
    mesh = ExtensionMesh.build(
        grid,
        s,
        layers,
        gamma_mesh=_optional_float(cfg, "gamma"),
        lam0=basis.lambda_min_positive,
    )
    which = cfg.get_choice("u", ("phi1", "bump"), "phi1")
    if which == "phi1":
        u = basis.eigenfunction(0)
    else:
        u = rhs_from_spec(grid, "bump", bc, rng)
    U = solve_extension(op, u, mesh)
    dtn = dtn_extract(U, s)
    target = fractional_apply(basis, u, s)
    dtn_err = l2_norm(dtn - target) / l2_norm(target)
    energy = extension_energy(U)
    energy_ref = dtn_constant_divform(s) * hs_energy_norm(basis, u, s) ** 2
    energy_err = abs(energy - energy_ref) / energy_ref
    if cfg.get_bool("write_field"):
        write_extension_csv(out / "extension.csv", U)
    assertions = [
        _assertion("extension_dtn_error", dtn_err, 0.0, cfg.get_float("dtn_tol", 2e-2)),
        _assertion("extension_energy_identity", energy_err, 0.0, cfg.get_float("energy_tol", 1e-2)),
    ]
    payload = {
        "s": s,
        "mesh": {"layers": layers, "height": mesh.height, "gamma": mesh.gamma_mesh},
        "dtn_error": dtn_err,
        "energy_error": energy_err,
    }
    write_report_json(out / "extension_report.json", payload)
    return assertions, payload


def _cmd_halfline(cfg: RunConfig, out: Path, rng) -> tuple[list, dict]:
    s = cfg.get_float("s", 0.25, lo=1e-9, hi=1.0 - 1e-9)
    T = cfg.get_float("T", 16.0, lo=1.0)
    assertions = []
    payload = {"s": s}
    if s < 0.5:
        problem = HalfLineProblem(s, RHS_ONE, truncation=T)
        xs = np.geomspace(1e-3, 1e-1, 12)
        vals = halfline_inverse_quadrature(problem, xs)
        cf = closed_form_halfline(problem, xs)
        slope = float(np.polyfit(np.log(xs), np.log(vals), 1)[0])
        assertions.append(_assertion("halfline_growth_slope", slope, 2 * s, 1e-3, "abs"))
        payload["slope"] = slope
    elif s == 0.5:
        problem = HalfLineProblem(s, RHS_INDICATOR, truncation=T)
        xs = np.linspace(0.05, 0.45, 9)
        vals = halfline_inverse_quadrature(problem, xs)
        cf = closed_form_halfline(problem, xs)
        c_fit = float(np.dot(vals, cf) / np.dot(cf, cf))
        resid = float(np.abs(vals - c_fit * cf).max() / np.abs(vals).max())
        c_oracle = interior_log_constant(numeric=True)
        assertions.append(_assertion("halfline_log_residual", resid, 0.0, 1e-6))
        assertions.append(
            _assertion(
                "log_constant_oracle",
                c_oracle,
                3.0 * math.log(3.0),
                1e-8,
                "abs",
            )
        )
        payload.update({"fitted_constant": c_fit, "residual": resid})
    else:
        problem = HalfLineProblem(s, RHS_INDICATOR, truncation=T)
        xs = np.linspace(0.05, 0.45, 9)
        vals = halfline_inverse_quadrature(problem, xs)
        cf = closed_form_halfline(problem, xs)
        ratio = vals / cf
        spread = float((ratio.max() - ratio.min()) / abs(ratio.mean()))
        assertions.append(_assertion("halfline_ratio_constancy", spread, 0.0, 1e-6))
        payload["ratio_mean"] = float(ratio.mean())
    write_oracle_csv(out / "halfline.csv", xs, vals, cf)
    write_report_json(out / "halfline_report.json", payload)
    return assertions, payload


def _cmd_probe(cfg: RunConfig, out: Path, rng) -> tuple[list, dict]:
    which = cfg.get_choice("probe", ("interior", "interior_lp", "boundary", "layer", "harnack"))
    s = cfg.get_float("s", 0.25, lo=1e-9, hi=1.0 - 1e-9)
    nodes = cfg.get_int("nodes", 2**15 + 1, lo=9)
    grid = Grid((1.0,), (nodes,))
    h = grid.spacing[0]
    report = {"probe": which, "s": s}
    assertions = []

    if which in ("interior", "interior_lp"):
        if which == "interior":
            alpha = cfg.get_float("alpha", 0.2, lo=1e-9, hi=1.0 - 1e-9)
            f = GridFunction.from_callable(grid, lambda x: np.abs(x - 0.5) ** alpha)
            target = alpha + 2 * s
            mode = "oscillation"
        else:
            p = cfg.get_float("p", 3.0, lo=1.0)
            f = lp_spike(grid, (0.5,), p)
            target = 2 * s - 1.0 / p
            mode = "linear" if target > 1.0 else "oscillation"
            alpha = 0.0
        u = fractional_solve_sine(grid, f, s)
        radii = dyadic_radii(grid, r_max=cfg.get_float("r_max", 0.03125), floor_cells=30.0)
        probe = CampanatoProbe((0.5,), tuple(radii), alpha=alpha, mode=mode)
        fit = interior_exponent(u, probe)
        tol = cfg.get_float("tol", 0.1)
        assertions.append(_assertion("probe_exponent", fit.exponent, target, tol, "abs"))
        report.update({"x0": [0.5], "fit": fit.as_dict(), "target": target, "tolerance": tol})
    elif which == "boundary":
        u = fractional_solve_sine(grid, GridFunction.ones(grid), s)
        fit = boundary_exponent(u, (0.0,), d_min=30 * h, d_max=cfg.get_float("d_max", 0.01))
        target = min(2 * s, 1.0)
        tol = cfg.get_float("tol", 0.05)
        assertions.append(_assertion("probe_exponent", fit.exponent, target, tol, "abs"))
        report.update({"x0": [0.0], "fit": fit.as_dict(), "target": target, "tolerance": tol})
    elif which == "layer":
        f = GridFunction.ones(grid)
        u = fractional_solve_sine(grid, f, s)
        fit_u = boundary_exponent(u, (0.0,), 30 * h, 0.01)
        growth = min(2 * s, 1.0)
        v = dirichlet_layer_split(
            u, f, s, lambda d: d**growth, (0.0,), (30 * h, 0.005)
        )
        fit_v = boundary_exponent(v, (0.0,), 30 * h, 0.01)
        gain = fit_v.exponent - fit_u.exponent
        assertions.append(_assertion("layer_split_improvement", -gain, 0.0, 0.0))
        report.update(
            {
                "x0": [0.0],
                "exponent_u": fit_u.exponent,
                "exponent_v": fit_v.exponent,
                "improvement": gain,
            }
        )
    else:  # harnack
        nodes_h = cfg.get_int("nodes", 257, lo=17)
        grid = Grid((1.0,), (nodes_h,))
        op = assemble(grid, CoefficientField.identity(grid), DIRICHLET)
        basis = eigendecompose(op)
        f = GridFunction.from_callable(
            grid, lambda x: np.where((x > 0.05) & (x < 0.15), 1.0, 0.0)
        )
        rep = harnack_quotient(basis, f, s, (0.6,), 0.2)
        assertions.append(_assertion("harnack_quotient_lower", -rep["quotient"], -1.0, 0.0))
        report.update(rep)

    write_report_json(out / "probe_report.json", report)
    return assertions, report


def _cmd_converge(cfg: RunConfig, out: Path, rng) -> tuple[list, dict]:
    s = cfg.get_float("s", 0.5, lo=1e-9, hi=1.0 - 1e-9)
    nodes = cfg.get_int("nodes", 130, lo=9)
    layers = cfg.get_int("layers", 64, lo=4)
    levels = cfg.get_int("levels", 3, lo=2)

    def one_level(level: int):
        n = (nodes - 1) * 2**level + 1
        m = layers * 2**level
        g = Grid((1.0,), (n,))
        op = assemble(g, CoefficientField.identity(g), DIRICHLET)
        basis = eigendecompose(op)
        mesh = ExtensionMesh.build(g, s, m, lam0=basis.lambda_min_positive)
        u = basis.eigenfunction(0)
        U = solve_extension(op, u, mesh)
        dtn = dtn_extract(U, s)
        target = fractional_apply(basis, u, s)
        err = l2_norm(dtn - target) / l2_norm(target)
        energy_err = abs(
            extension_energy(U) - dtn_constant_divform(s) * hs_energy_norm(basis, u, s) ** 2
        ) / (dtn_constant_divform(s) * hs_energy_norm(basis, u, s) ** 2)
        return err, energy_err

    results = _parallel_map(one_level, list(range(levels)))
    errs = [r[0] for r in results]
    energy_errs = [r[1] for r in results]
    order = float(-np.polyfit(np.log2([2**k for k in range(levels)]), np.log2(errs), 1)[0])
    assertions = [
        _assertion("dtn_convergence_order", -order, -0.8, 0.0),
        _assertion(
            "energy_error_decreasing",
            0.0 if all(a > b for a, b in zip(energy_errs, energy_errs[1:])) else 1.0,
            0.0,
            0.0,
        ),
    ]
    payload = {
        "s": s,
        "mesh": {"base_nodes": nodes, "base_layers": layers, "refinements": levels - 1},
        "levels": levels,
        "dtn_errors": errs,
        "energy_errors": energy_errs,
        "observed_order": order,
    }
    write_report_json(out / "convergence.json", payload)
    return assertions, payload


_DISPATCH = {
    "solve": _cmd_solve,
    "kernel": _cmd_kernel,
    "extension": _cmd_extension,
    "halfline": _cmd_halfline,
    "probe": _cmd_probe,
    "converge": _cmd_converge,
}


@dataclass
class ExitReport:
    passed: bool
    assertions: list
    report_path: Path


def run(cfg: RunConfig, out_dir=None) -> ExitReport:
    out = Path(out_dir if out_dir is not None else cfg.raw("out", "fracell_out"))
    out.mkdir(parents=True, exist_ok=True)
    seed = cfg.get_int("seed", 0)
    rng = np.random.default_rng(seed)
    assertions, payload = _DISPATCH[cfg.command](cfg, out, rng)
    passed = all(a["pass"] for a in assertions)
    resolved = cfg.resolved()
    report = {
        "command": cfg.command,
        "config": resolved,
        "config_sha256": config_hash(resolved),
        "version": __version__,
        "assertions": assertions,
        "pass": passed,
        "results": payload,
    }
    report_path = out / "report.json"
    write_report_json(report_path, report)
    return ExitReport(passed, assertions, report_path)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="fracell",
        description="fractional elliptic operator experiments (solve, kernels, extension, half-line oracles, regularity probes, convergence)",
    )
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", help="flat key=value config file")
    parser.add_argument("--out", help="output directory (default fracell_out)")
    args, rest = parser.parse_known_args(argv)

    params = {}
    try:
        if args.config:
            params.update(parse_config_file(args.config))
        for item in rest:
            if not item.startswith("--") or "=" not in item:
                raise ConfigError(f"override {item!r}: expected --key=value")
            key, _, val = item[2:].partition("=")
            params[key] = val
        if args.out:
            params["out"] = args.out
        cfg = RunConfig(args.command, params)
        result = run(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    for a in result.assertions:
        status = "PASS" if a["pass"] else "FAIL"
        print(f"[{status}] {a['name']}: value={a['value']:.6g} target={a['target']:.6g} tol={a['tolerance']:.2g}")
    print(f"report: {result.report_path}")
    return 0 if result.passed else 1


if __name__ == "__main__":
    sys.exit(main())
