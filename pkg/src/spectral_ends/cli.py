"""Command-line front end: eigen / resonance-scan / mesh / validate.

Each run emits one structured JSON result document (to --output or stdout)
echoing every configuration value that influenced it, so identical flags
reproduce bit-identical documents (timing fields excepted).  Resonance scans
additionally write the grid as CSV `re,im,cond,logabsdet`.

Exit codes: 0 success, 1 validation-suite failure, 2 invalid flags,
3 numerical failure (the message names the failing stage).
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import warnings

import numpy as np

from spectral_ends import fem, mesh as meshmod, ntd, resonance, solver, specfun
from spectral_ends.geometry import Arc, PRESETS, Segment, boundary_table, build_preset
from spectral_ends.pipeline import PipelineError, RunConfig, build
from spectral_ends.specfun import BranchMode

EXIT_OK = 0
EXIT_VALIDATE = 1
EXIT_FLAGS = 2
EXIT_NUMERICAL = 3

_GEOMETRY_PARAM_FLAGS = (
    ("delta", float, "obstructed-strip: disc centre offset"),
    ("radius", float, "obstructed-strip: disc radius"),
    ("symmetry", str, "obstructed-strip: condition at x=0 (neumann|dirichlet)"),
    ("eps", float, "cshape-cavity: half-width of the wall gap"),
    ("rart", float, "artificial circle radius (cshape-cavity, gaussian-potential)"),
    ("amplitude", float, "gaussian-potential: barrier amplitude"),
    ("decay", float, "gaussian-potential: barrier decay rate"),
)


class FlagError(ValueError):
    pass


def _parse_range(text: str, name: str) -> tuple:
    parts = text.split(":")
    if len(parts) != 2:
        raise FlagError(f"--{name} expects lo:hi, got {text!r}")
    try:
        lo, hi = float(parts[0]), float(parts[1])
    except ValueError as e:
        raise FlagError(f"--{name}: {e}") from e
    return lo, hi


def _parse_grid_axis(text: str, name: str) -> tuple:
    parts = text.split(":")
    if len(parts) != 3:
        raise FlagError(f"--{name} expects lo:hi:count, got {text!r}")
    try:
        lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError as e:
        raise FlagError(f"--{name}: {e}") from e
    return lo, hi, n


def _geometry_params(args) -> dict:
    params = {}
    for flag, _, _ in _GEOMETRY_PARAM_FLAGS:
        value = getattr(args, flag)
        if value is not None:
            params["rho_art" if flag == "rart" else flag] = value
    return params


def _add_geometry_flags(p: argparse.ArgumentParser):
    p.add_argument("--geometry", required=True, choices=PRESETS)
    for flag, typ, help_text in _GEOMETRY_PARAM_FLAGS:
        p.add_argument(f"--{flag}", type=typ, default=None, help=help_text)
    p.add_argument("--refine", type=int, default=3, help="uniform refinement levels")


def _add_pipeline_flags(p: argparse.ArgumentParser):
    p.add_argument("--lambda-max", type=float, default=100.0)
    p.add_argument("--M", type=int, default=None, help="transverse modes per end")
    p.add_argument("--lambda0", type=float, default=ntd.DEFAULT_LAMBDA0)
    p.add_argument("--output", default=None, help="result document path (default stdout)")


def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, np.ndarray):
        return [_jsonable(v) for v in x.tolist()]
    if isinstance(x, complex):
        return {"re": x.real, "im": x.imag}
    if isinstance(x, float) and not math.isfinite(x):
        return repr(x)
    return x


def _write_document(doc: dict, path):
    text = json.dumps(_jsonable(doc), indent=2, sort_keys=False) + "\n"
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w") as f:
            f.write(text)


def _config_echo(asm, extra: dict | None = None) -> dict:
    cfg = asm.config
    echo = {
        "geometry": cfg.geometry,
        "params": dict(asm.geometry.params),
        "refine": cfg.refine,
        "lambda_max": cfg.lambda_max,
        "M": asm.data.M,
        "lambda0": cfg.lambda0,
        "tol": cfg.tol,
    }
    if extra:
        echo.update(extra)
    return echo


def _mesh_summary(m: meshmod.Mesh) -> dict:
    return {
        "nodes": int(m.num_nodes),
        "triangles": int(len(m.triangles)),
        "min_angle_deg": m.min_angle(),
        "max_edge_length": m.max_edge_length(),
    }


def _sqrt_lambda(lam: float):
    return math.sqrt(lam) if lam > 0 else None


# ---------------------------------------------------------------------------
# eigen
# ---------------------------------------------------------------------------


def _window_for(asm, J: int) -> tuple:
    kappa = asm.data.kappa
    hi = float(kappa[J])
    if J == 0:
        has_dirichlet = any(s.coeff.is_dirichlet for s in asm.geometry.segments)
        lo = 0.0 if has_dirichlet else -10.0
    else:
        lo = float(kappa[J - 1])
    width = hi - lo
    return (lo + 1e-9 * max(1.0, abs(lo)), hi - 1e-6 * max(1.0, width))


def _finding_entry(f: solver.EigenFinding, J: int) -> dict:
    return {
        "lambda": f.lam,
        "sqrt_lambda": _sqrt_lambda(f.lam),
        "J": J,
        "sigma_index": f.sigma_index,
        "orth_residual": f.orth_residual,
        "embedded_flag": f.embedded_flag,
        "window": [f.window[0], f.window[1]],
    }


def cmd_eigen(args) -> int:
    config = RunConfig(
        geometry=args.geometry,
        params=_geometry_params(args),
        refine=args.refine,
        lambda_max=args.lambda_max,
        M=args.M,
        J=args.J if args.J is not None else 0,
        lambda0=args.lambda0,
        search=_parse_range(args.search, "search") if args.search else None,
        tol=args.tol,
    )
    asm = build(config)
    if asm.data.kind == "circle":
        raise PipelineError("solver", "eigenvalue search requires cylindrical ends")
    data = asm.data

    windows = []
    if args.J is not None:
        if not 0 <= args.J < data.M:
            raise FlagError(f"--J must lie in [0, {data.M})")
        js = [args.J]
    else:
        if args.search is not None:
            raise FlagError("--search requires an explicit --J window")
        js = [J for J in range(data.M) if data.kappa[J] <= config.lambda_max]
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            for J in js:
                search = config.search
                if search is None:
                    search = _window_for(asm, J)
                    if search[1] <= search[0]:
                        continue  # degenerate window (repeated threshold)
                K = solver.count_bound(data.mu, asm.nu, search[1])
                K = min(K, data.M - J)
                found = solver.find_eigenvalues(data, J, search, tol=config.tol, K=K)
                windows.append(
                    {
                        "J": J,
                        "search": [search[0], search[1]],
                        "count_bound_K": K,
                        "findings": [_finding_entry(f, J) for f in found],
                    }
                )
        asm.warnings.extend(str(w.message) for w in caught)
    except solver.SolverError as e:
        raise PipelineError("solver", str(e)) from e

    findings = [f for w in windows for f in w["findings"]]
    findings.sort(key=lambda f: f["lambda"])
    doc = {
        "command": "eigen",
        "config": _config_echo(
            asm, {"J": args.J if args.J is not None else "auto", "search": args.search}
        ),
        "thresholds": list(data.kappa),
        "counts": {"mu": int(len(data.mu)), "nu": int(len(asm.nu))},
        "windows": windows,
        "findings": findings,
        "r0_asymmetry": asm.r0_asymmetry,
        "mesh": _mesh_summary(asm.mesh),
        "warnings": sorted(set(asm.warnings)),
        "timings": asm.timings,
    }
    _write_document(doc, args.output)
    return EXIT_OK


# ---------------------------------------------------------------------------
# resonance-scan
# ---------------------------------------------------------------------------


def _estimate_entry(e: resonance.ResonanceEstimate) -> dict:
    k = specfun.branch_sqrt(e.lam, BranchMode.NEGATIVE_IMAG)
    return {
        "lambda": e.lam,
        "sqrt_lambda": complex(k),
        "quality": e.quality,
        "zoom_level": e.zoom_level,
        "final_grid_spacing": e.final_grid_spacing,
        "nearby_neumann_pole": e.nearby_neumann_pole,
        "unresolved_pole_pair": e.unresolved_pole_pair,
        "boundary_warning": e.boundary_warning,
    }


def cmd_resonance_scan(args) -> int:
    re_lo, re_hi, re_n = _parse_grid_axis(args.re, "re")
    im_lo, im_hi, im_n = _parse_grid_axis(args.im, "im")
    try:
        spec = resonance.GridSpec(re_lo, re_hi, re_n, im_lo, im_hi, im_n)
    except resonance.ResonanceError as e:
        raise FlagError(str(e)) from e
    if args.levels < 1 or args.workers < 1:
        raise FlagError("--levels and --workers must be at least 1")
    config = RunConfig(
        geometry=args.geometry,
        params=_geometry_params(args),
        refine=args.refine,
        lambda_max=args.lambda_max,
        M=args.M,
        lambda0=args.lambda0,
    )
    asm = build(config)
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            scan = resonance.condition_scan(asm.data, spec, args.workers)
            estimates = resonance.locate_and_zoom(asm.data, scan, args.levels, args.workers)
        asm.warnings.extend(str(w.message) for w in caught)
    except (resonance.ResonanceError, ntd.NtdError) as e:
        raise PipelineError("resonance", str(e)) from e
    if args.csv:
        resonance.write_scan_csv(scan, args.csv)
    hazards = [float(m) for m in asm.data.mu if spec.re_lo <= m <= spec.re_hi]
    doc = {
        "command": "resonance-scan",
        "config": _config_echo(
            asm,
            {
                "grid": {
                    "re": [re_lo, re_hi, re_n],
                    "im": [im_lo, im_hi, im_n],
                },
                "levels": args.levels,
                "workers": args.workers,
            },
        ),
        "thresholds": list(asm.data.kappa),
        "counts": {"mu": int(len(asm.data.mu)), "nu": int(len(asm.nu))},
        "estimates": [_estimate_entry(e) for e in estimates],
        "pole_hazards": hazards,
        "r0_asymmetry": asm.r0_asymmetry,
        "mesh": _mesh_summary(asm.mesh),
        "warnings": sorted(set(asm.warnings)),
        "timings": asm.timings,
    }
    _write_document(doc, args.output)
    return EXIT_OK


# ---------------------------------------------------------------------------
# mesh
# ---------------------------------------------------------------------------


def _piece_shoelace(curve) -> float:
    """Signed shoelace contribution of one exact boundary curve."""
    if isinstance(curve, Segment):
        return 0.5 * (curve.p0[0] * curve.p1[1] - curve.p0[1] * curve.p1[0])
    if isinstance(curve, Arc):
        cx, cy = curve.center
        r, t0, t1 = curve.radius, curve.theta0, curve.theta1
        return 0.5 * (
            r * r * (t1 - t0)
            + r * (cx * (math.sin(t1) - math.sin(t0)) + cy * (math.cos(t1) - math.cos(t0)))
        )
    raise TypeError(f"unknown curve type {type(curve).__name__}")


def analytic_area(g) -> float:
    """Exact area from the boundary description.

    Boundary pieces are chained into closed loops by endpoint matching; the
    loop of largest absolute signed area is the outer boundary and the rest
    are holes.
    """
    loops, pending = [], []
    for _, _, curve in boundary_table(g):
        if isinstance(curve, Arc) and abs(abs(curve.theta1 - curve.theta0) - 2 * math.pi) < 1e-12:
            loops.append(_piece_shoelace(curve))
        else:
            pending.append(curve)

    def close(a, b):
        return math.hypot(a[0] - b[0], a[1] - b[1]) < 1e-9

    while pending:
        curve = pending.pop()
        start, cursor = curve.endpoints()
        total = _piece_shoelace(curve)
        while not close(cursor, start):
            for i, nxt in enumerate(pending):
                p, q = nxt.endpoints()
                if close(cursor, p):
                    total += _piece_shoelace(nxt)
                    cursor = q
                    break
                if close(cursor, q):
                    total -= _piece_shoelace(nxt)
                    cursor = p
                    break
            else:
                raise ValueError("boundary pieces do not close into loops")
            pending.pop(i)
        loops.append(total)
    loops = sorted((abs(a) for a in loops), reverse=True)
    return loops[0] - sum(loops[1:])


def cmd_mesh(args) -> int:
    try:
        g = build_preset(args.geometry, _geometry_params(args))
    except Exception as e:
        raise PipelineError("geometry", str(e)) from e
    try:
        m = meshmod.generate(g)
        for _ in range(args.refine):
            m = meshmod.refine(m, g)
        if args.out:
            meshmod.write_mesh(m, args.out)
    except meshmod.MeshError as e:
        raise PipelineError("mesh", str(e)) from e
    if args.check:
        exact = analytic_area(g)
        err = abs(m.total_area() - exact) / exact
        sys.stdout.write(
            f"nodes: {m.num_nodes}\ntriangles: {len(m.triangles)}\n"
            f"min angle (deg): {m.min_angle():.4f}\n"
            f"area: {m.total_area():.12g} (analytic {exact:.12g}, "
            f"relative error {err:.3e})\n"
        )
    elif not args.out:
        raise FlagError("mesh requires --out and/or --check")
    return EXIT_OK


# ---------------------------------------------------------------------------
# validate
# ---------------------------------------------------------------------------


def _rect_assembly():
    config = RunConfig(geometry="rect-test", refine=3, lambda_max=200.0, M=3)
    return build(config)


def _suite_rectangle_ntd(asm):
    """Interior NtD of the test rectangle against the separable formula
    coth(gamma)/gamma, gamma = sqrt(k^2 pi^2 - lambda)."""
    worst = 0.0
    for lam in (-2.0, 0.5, 1.5):
        R = ntd.interior_ntd(asm.data, lam, asm.data.full)
        gamma = np.sqrt(np.arange(1, asm.data.M + 1) ** 2 * math.pi**2 - lam)
        exact = 1.0 / (gamma * np.tanh(gamma))
        scale = np.abs(exact).max()
        err = np.abs(R - np.diag(exact)).max() / scale
        worst = max(worst, float(err))
    return worst <= 1e-2, f"max relative error {worst:.3e} (tolerance 1e-02)"


def _suite_wronskian(_asm):
    """H_n and its conjugate pair on the real axis satisfy
    Im(H_n(z) conj(H_n'(z))) = -2/(pi z)."""
    worst = 0.0
    for n in range(0, 6):
        for z in (0.7, 1.3, 5.0, 20.0):
            h, hp = specfun.hankel1(n, z)
            resid = abs((h * np.conj(hp)).imag + 2.0 / (math.pi * z))
            worst = max(worst, resid / max(1.0, abs(h) * abs(hp)))
    return worst <= 1e-9, f"max relative residual {worst:.3e} (tolerance 1e-09)"


def _suite_counting(asm):
    """Counting identity: the number of negative eigenvalues of the reference
    NtD matrix R0(Lambda) equals #{mu < Lambda} - #{nu < Lambda}, exactly."""
    checked = []
    for lam2 in (5.0, 15.0, 30.0, 45.0, 60.0):
        R0, _ = ntd.r0_reference(asm.op, asm.bases, lam2, asm.basis.mu)
        neg = int((np.linalg.eigvalsh(np.real(R0)) < 0).sum())
        diff = int((asm.data.mu < lam2).sum()) - int((asm.nu < lam2).sum())
        if neg != diff:
            return False, (
                f"at Lambda = {lam2}: #neg-eig(R0) = {neg} != "
                f"#mu - #nu = {diff}"
            )
        checked.append(diff)
    return True, f"#neg-eig(R0) = #mu - #nu = {checked} at 5 checkpoints"


def _suite_branch_continuity(_asm):
    """branch_sqrt is continuous along 1000-step paths crossing the real axis
    away from the respective branch cuts."""
    t = np.linspace(-1.0, 1.0, 1000)
    paths = (
        (BranchMode.POSITIVE_REAL, 1.0 + 1j * t),  # cut on the negative reals
        (BranchMode.NEGATIVE_IMAG, -1.0 + 1j * t),  # cut on the positive reals
    )
    worst = 0.0
    for mode, ws in paths:
        vals = np.array([specfun.branch_sqrt(w, mode) for w in ws])
        jumps = np.abs(np.diff(vals))
        steps = np.abs(np.diff(ws))
        worst = max(worst, float((jumps / steps).max()))
    # |d sqrt(w)/dw| = 1/(2 sqrt|w|) <= 0.5 on these paths (|w| >= 1)
    return worst <= 1.0, f"max jump/step ratio {worst:.3f} (bound 1.0)"


def _suite_monotonicity(asm):
    """Nonpositive pencil branches increase on a pole-free window."""
    subs = solver._pole_subintervals(asm.data, -5.0, 9.0)
    try:
        for a, b in subs:
            solver._audit_monotone(asm.data, 0, a + 1e-6, b - 1e-6)
    except solver.SolverError as e:
        return False, str(e)
    return True, f"audited {len(subs)} pole-free subintervals of [-5, 9]"


def _suite_pencil_determinant(_asm):
    """pencil_sigmas against a determinant-sweep oracle on random symmetric
    6x6 instances."""
    rng = np.random.default_rng(20260823)
    worst = 0.0
    for _ in range(5):
        q, _r = np.linalg.qr(rng.standard_normal((6, 6)))
        R = q @ np.diag(rng.uniform(-3.0, 3.0, 6)) @ q.T
        T = rng.uniform(0.5, 2.0, 6)
        spec = solver.pencil_sigmas(R, T, 6)
        sigmas = np.sort(spec.sigma)
        lo, hi = sigmas[0] - 1.0, sigmas[-1] + 1.0
        grid = np.linspace(lo, hi, 20001)
        signs = np.array([np.linalg.slogdet(s * R - np.diag(T))[0] for s in grid])
        roots = []
        for i in np.flatnonzero(signs[:-1] * signs[1:] < 0):
            a, b = grid[i], grid[i + 1]
            for _ in range(80):
                m = 0.5 * (a + b)
                if signs[i] * np.linalg.slogdet(m * R - np.diag(T))[0] <= 0:
                    b = m
                else:
                    a = m
            roots.append(0.5 * (a + b))
        if len(roots) != len(sigmas):
            return False, f"determinant sweep found {len(roots)} of {len(sigmas)} roots"
        worst = max(worst, float(np.abs(np.array(roots) - sigmas).max()))
    return worst <= 1e-8, f"max sigma disagreement {worst:.3e} (tolerance 1e-08)"


_SUITES = (
    ("rectangle-ntd", _suite_rectangle_ntd),
    ("wronskian", _suite_wronskian),
    ("counting-identity", _suite_counting),
    ("branch-continuity", _suite_branch_continuity),
    ("monotonicity", _suite_monotonicity),
    ("pencil-determinant", _suite_pencil_determinant),
)


def _inject_branch_sign_fault():
    """Test-mode fault: negate branch_sqrt below the real axis (breaks
    continuity across the axis)."""
    orig = specfun.branch_sqrt

    def bad(w, mode):
        r = orig(w, mode)
        return -r if complex(w).imag < 0 else r

    specfun.branch_sqrt = bad
    return orig


def cmd_validate(args) -> int:
    restore = None
    if args.inject_fault == "branch-sign":
        restore = _inject_branch_sign_fault()
    try:
        asm = _rect_assembly()
        failed = 0
        for name, suite in _SUITES:
            try:
                ok, detail = suite(asm)
            except Exception as e:  # a crashing suite is a failing suite
                ok, detail = False, f"{type(e).__name__}: {e}"
            failed += not ok
            sys.stdout.write(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}\n")
        sys.stdout.write(f"{len(_SUITES) - failed}/{len(_SUITES)} suites passed\n")
        return EXIT_OK if failed == 0 else EXIT_VALIDATE
    finally:
        if restore is not None:
            specfun.branch_sqrt = restore


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spectral-ends",
        description="Eigenvalues and resonances of planar domains with "
        "cylindrical ends via interface Neumann-to-Dirichlet reduction.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("eigen", help="real-axis eigenvalue search")
    _add_geometry_flags(p)
    _add_pipeline_flags(p)
    p.add_argument("--J", type=int, default=None,
                   help="threshold window index (default: all windows below lambda-max)")
    p.add_argument("--search", default=None, help="lo:hi window override (needs --J)")
    p.add_argument("--tol", type=float, default=solver.DEFAULT_ROOT_TOL)
    p.set_defaults(run=cmd_eigen)

    p = sub.add_parser("resonance-scan", help="lower-half-plane condition scan")
    _add_geometry_flags(p)
    _add_pipeline_flags(p)
    p.add_argument("--re", required=True, help="real-axis grid lo:hi:count")
    p.add_argument("--im", required=True, help="imaginary-axis grid lo:hi:count (hi <= 0)")
    p.add_argument("--levels", type=int, default=resonance.DEFAULT_ZOOM_LEVELS)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--csv", default=None, help="write the scan grid as CSV")
    p.set_defaults(run=cmd_resonance_scan)

    p = sub.add_parser("mesh", help="generate and inspect meshes")
    _add_geometry_flags(p)
    p.add_argument("--out", default=None, help="mesh file path")
    p.add_argument("--check", action="store_true",
                   help="print min angle and area error vs the exact boundary")
    p.set_defaults(run=cmd_mesh)

    p = sub.add_parser("validate", help="run the built-in oracle suites")
    p.add_argument("--inject-fault", choices=["branch-sign"], default=None,
                   help="test mode: deliberately break a branch cut")
    p.set_defaults(run=cmd_validate)
    return parser


def _merge_range_values(argv):
    """Join `--im -0.02:0:51` into `--im=-0.02:0:51` so argparse does not
    mistake a negative range value for an option."""
    merged, i = [], 0
    flags = {"--im", "--re", "--search"}
    while i < len(argv):
        if argv[i] in flags and i + 1 < len(argv):
            merged.append(f"{argv[i]}={argv[i + 1]}")
            i += 2
        else:
            merged.append(argv[i])
            i += 1
    return merged


def main(argv=None) -> int:
    parser = build_parser()
    if argv is None:
        argv = sys.argv[1:]
    try:
        args = parser.parse_args(_merge_range_values(list(argv)))
    except SystemExit as e:
        return e.code if e.code is not None else EXIT_FLAGS
    try:
        return args.run(args)
    except FlagError as e:
        sys.stderr.write(f"error: {e}\n")
        return EXIT_FLAGS
    except PipelineError as e:
        if e.stage == "geometry":
            sys.stderr.write(f"error: {e}\n")
            return EXIT_FLAGS
        sys.stderr.write(f"numerical failure in stage {e.stage}: {e}\n")
        return EXIT_NUMERICAL
    except (fem.FemError, meshmod.MeshError, ntd.NtdError, resonance.ResonanceError,
            solver.SolverError, specfun.SpecFunError) as e:
        sys.stderr.write(f"numerical failure: {e}\n")
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
