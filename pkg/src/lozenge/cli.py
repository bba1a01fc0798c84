"""Command line interface: ``lozenge <subcommand> ...``.

Exit status is 0 on success, 1 when validation or verification fails and 2
on usage errors (bad flags, unreadable or malformed input files).
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import platform
import secrets
import sys
from fractions import Fraction
from importlib import metadata
from pathlib import Path

log = logging.getLogger("lozenge")

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


# -- helpers -------------------------------------------------------------------


def _read_json(path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}: malformed JSON ({exc.msg} at line {exc.lineno})") from exc


def _polygon(args):
    from .polygon import PolygonError, PolygonSpec, scale

    try:
        if getattr(args, "config", None):
            return PolygonSpec.from_dict(_read_json(args.config))
        if getattr(args, "limit_config", None):
            if not args.N:
                raise UsageError("--limit-config needs --N to build a finite polygon")
            return scale(_limit(args), args.N)
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, PolygonError):
            raise
        raise UsageError(f"bad polygon file: {exc}") from exc
    raise UsageError("one of --config / --limit-config is required")


def _limit(args):
    from .polygon import LimitPolygon

    try:
        return LimitPolygon.from_dict(_read_json(args.limit_config))
    except (KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"bad limit polygon file: {exc}") from exc


def _limit_or_spec_limit(args):
    from .limit_shape import spec_limit_polygon

    if getattr(args, "limit_config", None):
        return _limit(args)
    if getattr(args, "config", None):
        return spec_limit_polygon(_polygon(args))
    raise UsageError("one of --config / --limit-config is required")


def _pair(text: str) -> tuple[float, float]:
    try:
        a, b = (float(v) for v in text.split(","))
    except ValueError as exc:
        raise UsageError(f"expected 'chi,eta', got {text!r}") from exc
    return a, b


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise UsageError(f"expected comma separated integers, got {text!r}") from exc


def _frac_cells(value: Fraction) -> tuple[str, str]:
    return f"{value.numerator}/{value.denominator}", repr(float(value))


def _write_csv(path, header, rows) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    if path in (None, "-"):
        sys.stdout.write(buf.getvalue())
    else:
        Path(path).write_text(buf.getvalue())


def _versions() -> dict:
    out = {"python": platform.python_version()}
    for pkg in ("artifact", "numpy", "scipy", "mpmath", "matplotlib"):
        try:
            out[pkg] = metadata.version(pkg)
        except metadata.PackageNotFoundError:
            out[pkg] = None
    return out


def _config_hash(args) -> str | None:
    h = hashlib.sha256()
    seen = False
    for attr in ("config", "limit_config", "points_file", "array"):
        value = getattr(args, attr, None)
        for p in value if isinstance(value, list) else [value]:
            if p and Path(p).is_file():
                h.update(Path(p).read_bytes())
                seen = True
    return h.hexdigest() if seen else None


def _write_manifest(args, argv, outputs: list[str]) -> Path:
    if args.manifest:
        path = Path(args.manifest)
    elif outputs:
        path = Path(str(outputs[0]) + ".manifest.json")
    else:
        path = Path("lozenge-run.manifest.json")
    manifest = {
        "command": args.command,
        "argv": list(argv),
        "config_sha256": _config_hash(args),
        "seed": getattr(args, "seed", None),
        "versions": _versions(),
        "outputs": [str(o) for o in outputs],
    }
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


# -- subcommands ---------------------------------------------------------------


def cmd_validate(args) -> tuple[int, list]:
    from .polygon import PolygonError, validate

    if args.limit_config and not args.N:
        problem = _limit(args).violation()
    else:
        try:
            problem = validate(_polygon(args))
        except PolygonError as exc:
            problem = str(exc)
    if problem:
        print(f"invalid: {problem}")
        return EXIT_FAIL, []
    print("valid")
    return EXIT_OK, []


def cmd_kernel(args) -> tuple[int, list]:
    from .exact_kernel import KernelRangeError, kernel_K

    spec = _polygon(args)
    if args.points_file:
        try:
            with open(args.points_file, newline="") as fh:
                raw = [r for r in csv.reader(fh) if r and not r[0].lstrip().startswith("#")]
        except OSError as exc:
            raise UsageError(f"cannot read {args.points_file}: {exc.strerror}") from exc
        if raw and not raw[0][0].strip().lstrip("-").isdigit():
            raw = raw[1:]  # header
        rows = []
        for r in raw:
            try:
                x1, n1, x2, n2 = (int(v) for v in r)
            except ValueError as exc:
                raise UsageError(f"bad point row {r!r}: expected x1,n1,x2,n2") from exc
            try:
                v = kernel_K(spec, x1, n1, x2, n2).value
            except KernelRangeError as exc:
                raise UsageError(f"row {r!r}: {exc}") from exc
            rows.append([x1, n1, x2, n2, v.numerator, v.denominator, repr(float(v))])
        _write_csv(args.out, ["x1", "n1", "x2", "n2", "value_num", "value_den", "value_f64"], rows)
        return EXIT_OK, [args.out] if args.out and args.out != "-" else []
    if None in (args.x1, args.n1, args.x2, args.n2):
        raise UsageError("give --x1 --n1 --x2 --n2 or --points FILE")
    try:
        v = kernel_K(spec, args.x1, args.n1, args.x2, args.n2).value
    except KernelRangeError as exc:
        raise UsageError(str(exc)) from exc
    print(f"{v}\t{float(v):.17g}")
    return EXIT_OK, []


def cmd_sample(args) -> tuple[int, list]:
    from .render import render_tiling
    from .sampler import sample_batch

    spec = _polygon(args)
    batch = sample_batch(spec, args.n, args.seed, args.workers)
    lines = "".join(json.dumps(a.to_list()) + "\n" for a in batch.arrays)
    outputs = []
    if args.out and args.out != "-":
        Path(args.out).write_text(lines)
        outputs.append(args.out)
    else:
        sys.stdout.write(lines)
    if args.svg:
        d = Path(args.svg)
        d.mkdir(parents=True, exist_ok=True)
        for i, arr in enumerate(batch.arrays):
            p = d / f"sample_{i:05d}.svg"
            p.write_text(render_tiling(spec, arr))
            outputs.append(str(p))
    return EXIT_OK, outputs


def cmd_moments(args) -> tuple[int, list]:
    from .fluctuations import gff_gap_table

    lp = _limit_or_spec_limit(args)
    points = [_pair(p) for p in args.points.split(";") if p.strip()]
    if not points:
        raise UsageError("--points needs at least one 'chi,eta'")
    reports = gff_gap_table(lp, points, _int_list(args.N_list), mode=args.mode, n_samples=args.samples, seed=args.seed, workers=args.workers)
    rows = []
    for r in reports:
        if r.moment is None:
            rows.append([r.N, len(points), "", "", "", "", repr(r.gff_prediction), "", r.status])
            continue
        if isinstance(r.moment, Fraction):
            exact, f64 = _frac_cells(r.moment)
        else:
            exact, f64 = "", repr(float(r.moment))
        rows.append([r.N, len(points), exact, f64, repr(r.scaled_moment), "" if r.stderr is None else repr(r.stderr), repr(r.gff_prediction), repr(r.scaled_gap), r.status])
    header = ["N", "s", "moment", "moment_f64", "scaled_moment", "stderr_scaled", "prediction", "gap", "status"]
    _write_csv(args.out, header, rows)
    outputs = [args.out] if args.out and args.out != "-" else []
    if args.figure:
        from .plotting import plot_moments

        outputs.append(str(plot_moments(reports, args.figure)))
    return EXIT_OK, outputs


def _boundary_csv(lp, M, out) -> None:
    from .render import boundary_samples

    _write_csv(out, ["w", "chi", "eta"], [[repr(w), repr(c), repr(e)] for w, c, e in boundary_samples(lp, M)])


def cmd_limit_shape(args) -> tuple[int, list]:
    from .limit_shape import Action, FrozenPoint, burgers_residual, classify, solve_w

    lp = _limit_or_spec_limit(args)
    outputs = []
    status = EXIT_OK
    if args.point:
        chi, eta = _pair(args.point)
        region = classify(lp, chi, eta)
        result = {"chi": chi, "eta": eta, "region": region}
        if region == "liquid":
            w = solve_w(lp, chi, eta).w
            act = Action(lp)
            result.update({
                "w": [w.real, w.imag],
                "d2S": [complex(act.d2S(w, chi, eta)).real, complex(act.d2S(w, chi, eta)).imag],
                "Xi": [complex(act.Xi(w, chi, eta)).real, complex(act.Xi(w, chi, eta)).imag],
            })
            if args.check_burgers:
                try:
                    b = burgers_residual(lp, chi, eta)
                    result.update({"burgers_residual": b.burgers, "omega_eta_residual": b.om_eta})
                except FrozenPoint as exc:
                    result["burgers_residual"] = f"n/a: {exc}"
        print(json.dumps(result))
    if args.frozen_boundary:
        _boundary_csv(lp, args.samples, args.out)
        if args.out and args.out != "-":
            outputs.append(args.out)
        if args.figure:
            from .plotting import plot_frozen_boundary

            outputs.append(str(plot_frozen_boundary(lp, args.samples, args.figure)))
    if not (args.point or args.frozen_boundary):
        raise UsageError("nothing to do: give --point and/or --frozen-boundary")
    return status, outputs


def cmd_frozen_boundary(args) -> tuple[int, list]:
    from .render import render_frozen_boundary

    lp = _limit_or_spec_limit(args)
    svg = render_frozen_boundary(lp, args.samples)
    outputs = []
    if args.out and args.out != "-":
        Path(args.out).write_text(svg)
        outputs.append(args.out)
    else:
        sys.stdout.write(svg + "\n")
    if args.csv:
        _boundary_csv(lp, args.samples, args.csv)
        outputs.append(args.csv)
    if args.figure:
        from .plotting import plot_frozen_boundary

        outputs.append(str(plot_frozen_boundary(lp, args.samples, args.figure)))
    return EXIT_OK, outputs


def cmd_render(args) -> tuple[int, list]:
    from .oracle import InconsistentArray, ParticleArray
    from .render import render_tiling
    from .sampler import make_rng, sample

    spec = _polygon(args)
    if args.array:
        try:
            text = Path(args.array).read_text().strip().splitlines()[args.index]
            arr = ParticleArray.from_list(json.loads(text))
        except (OSError, IndexError, json.JSONDecodeError, TypeError, ValueError) as exc:
            raise UsageError(f"cannot read array {args.index} of {args.array}: {exc}") from exc
    else:
        arr = sample(spec, make_rng(args.seed))
    try:
        svg = render_tiling(spec, arr)
    except InconsistentArray as exc:
        print(f"invalid array: {exc}")
        return EXIT_FAIL, []
    if args.out and args.out != "-":
        Path(args.out).write_text(svg)
        return EXIT_OK, [args.out]
    sys.stdout.write(svg + "\n")
    return EXIT_OK, []


def cmd_verify(args) -> tuple[int, list]:
    from .checks import run_suite
    from .polygon import PolygonSpec

    specs = None
    if args.config:
        try:
            specs = [PolygonSpec.from_dict(_read_json(p)) for p in args.config]
        except (KeyError, TypeError, ValueError) as exc:
            raise UsageError(f"bad polygon file: {exc}") from exc
    results = run_suite(specs, bulk=not args.no_bulk, mc=args.mc, workers=args.workers)
    report = json.dumps([r.to_json() for r in results], indent=2)
    outputs = []
    if args.out and args.out != "-":
        Path(args.out).write_text(report + "\n")
        outputs.append(args.out)
    else:
        print(report)
    for r in results:
        log.info("%-24s %s", r.check, r.status)
    return (EXIT_FAIL if any(r.status == "fail" for r in results) else EXIT_OK), outputs


# -- parser ----------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="lozenge", description="Uniform lozenge tilings of polygons: exact kernel, sampling, limit shape, fluctuations.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, seed=False, workers=False, limit=True):
        sp.add_argument("--config", help="polygon JSON {N, A, B}")
        if limit:
            sp.add_argument("--limit-config", help="limit polygon JSON {a, b}")
            sp.add_argument("--N", type=int, help="scale the limit polygon to this N")
        if seed:
            sp.add_argument("--seed", type=int, default=None, help="RNG seed (random and recorded if omitted)")
        if workers:
            sp.add_argument("--workers", type=int, default=None, help="worker processes (default: $LOZENGE_WORKERS or 1)")
        sp.add_argument("--manifest", help="manifest path (default: next to the first output)")

    sp = sub.add_parser("validate", help="check a polygon file")
    common(sp)
    sp.set_defaults(func=cmd_validate)

    sp = sub.add_parser("kernel", help="exact kernel values")
    common(sp)
    for name in ("x1", "n1", "x2", "n2"):
        sp.add_argument(f"--{name}", type=int)
    sp.add_argument("--points", dest="points_file", help="CSV with x1,n1,x2,n2 per line")
    sp.add_argument("--out", help="CSV output (default stdout)")
    sp.set_defaults(func=cmd_kernel)

    sp = sub.add_parser("sample", help="exact uniform samples")
    common(sp, seed=True, workers=True)
    sp.add_argument("--n", type=int, default=1)
    sp.add_argument("--out", help="arrays as JSON lines (default stdout)")
    sp.add_argument("--svg", help="directory for one SVG per sample")
    sp.set_defaults(func=cmd_sample)

    sp = sub.add_parser("moments", help="finite-N fluctuation moments against the Gaussian prediction")
    common(sp, seed=True, workers=True)
    sp.add_argument("--points", required=True, help='"chi1,eta1;chi2,eta2"')
    sp.add_argument("--N-list", default="8,16,24,32")
    sp.add_argument("--mode", choices=("exact", "mc"), default="exact")
    sp.add_argument("--samples", type=int, default=20000)
    sp.add_argument("--out", help="CSV output (default stdout)")
    sp.add_argument("--figure", help="PNG figure of moments and gaps")
    sp.set_defaults(func=cmd_moments)

    sp = sub.add_parser("limit-shape", help="complex coordinate and frozen boundary")
    common(sp)
    sp.add_argument("--point", help="chi,eta")
    sp.add_argument("--frozen-boundary", action="store_true")
    sp.add_argument("--samples", type=int, default=400)
    sp.add_argument("--check-burgers", action="store_true")
    sp.add_argument("--out", help="frozen boundary CSV (w,chi,eta)")
    sp.add_argument("--figure", help="PNG figure of the frozen boundary")
    sp.set_defaults(func=cmd_limit_shape)

    sp = sub.add_parser("frozen-boundary", help="SVG of the polygon and its frozen boundary")
    common(sp)
    sp.add_argument("--samples", type=int, default=400)
    sp.add_argument("--out", help="SVG output (default stdout)")
    sp.add_argument("--csv", help="also write the samples as CSV")
    sp.add_argument("--figure", help="PNG figure")
    sp.set_defaults(func=cmd_frozen_boundary)

    sp = sub.add_parser("render", help="SVG of one tiling")
    common(sp, seed=True)
    sp.add_argument("--array", help="JSON lines file written by 'sample'")
    sp.add_argument("--index", type=int, default=0)
    sp.add_argument("--out", help="SVG output (default stdout)")
    sp.set_defaults(func=cmd_render)

    sp = sub.add_parser("verify", help="run the verification suite, JSON report")
    sp.add_argument("--config", nargs="*", help="small polygons for the exact checks")
    sp.add_argument("--no-bulk", action="store_true", help="skip the bulk kernel expansion check")
    sp.add_argument("--mc", action="store_true", help="include the Monte Carlo check (minutes)")
    sp.add_argument("--workers", type=int, default=None)
    sp.add_argument("--out", help="JSON output (default stdout)")
    sp.add_argument("--manifest")
    sp.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    from .limit_shape import FrozenPoint
    from .polygon import PolygonError

    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"lozenge: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    if hasattr(args, "seed") and args.seed is None:
        args.seed = secrets.randbits(32)
    try:
        code, outputs = args.func(args)
    except UsageError as exc:
        print(f"lozenge {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (PolygonError, FrozenPoint, ValueError) as exc:
        print(f"lozenge {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL
    _write_manifest(args, argv, outputs)
    return code


if __name__ == "__main__":
    sys.exit(main())
