"""Batch front door: verify and transform systems stored in text files.

Subcommands map one-to-one onto library entry points; every report is
deterministic byte-for-byte for fixed ``--seed``/``--samples``/
``--precision``.  Exit status 0 means the requested verification
passed, 1 means it ran and failed (the report ends with the first
non-vanishing residual in canonical form plus a witness point), and 2
means the input could not be used at all.
"""

from __future__ import annotations

import argparse
import contextlib
import io
import random
import shlex
import sys
from fractions import Fraction
from pathlib import Path

from dmzkit import dmz as D
from dmzkit import expr as E
from dmzkit import gauge as GA
from dmzkit import geometry as G
from dmzkit import hydro as H
from dmzkit import systemfile as SF
from dmzkit import waves as W

PASS, FAIL, USAGE = 0, 1, 2
_CORPUS_SUFFIXES = (".dmz", ".gdmz", ".wave", ".hydro", ".jetq")


class _InputError(Exception):
    """Anything that should exit with status 2."""


def _verdict_text(v) -> str:
    if isinstance(v, E.ProvablyZero):
        return "zero (proved)"
    if isinstance(v, E.ProbablyZero):
        return f"zero ({v.samples} samples)"
    if isinstance(v, E.ProvablyNonzero):
        return "NONZERO (proved)"
    return "NONZERO (sampled)"


def _find_witness(e: E.Expr, seed: int):
    """Deterministic point where a nonzero expression stays nonzero."""
    names = E.variables(e)
    if not names:
        return {}
    rng = random.Random(f"cli-witness:{seed}:{','.join(names)}")
    for attempt in range(400):
        if attempt == 0:
            point = {nm: Fraction(i + 2) for i, nm in enumerate(names)}
        else:
            point = {nm: Fraction(rng.randint(-40, 40), rng.randint(1, 8))
                     for nm in names}
        try:
            val = E.eval_at(e, point)
        except (E.PoleError, E.IndeterminateError):
            continue
        if isinstance(val, Fraction):
            if val != 0:
                return point
        elif val.abs_min() > 0:
            return point
    return None


def _format_point(point: dict) -> str:
    if not point:
        return "any point (constant residual)"
    return ", ".join(f"{nm} = {point[nm]}" for nm in sorted(point))


def _print_failure(label: str, value: E.Expr, verdict, seed: int):
    print(f"FAIL {label}")
    print(f"  residual = \"{E.render(value)}\"")
    witness = getattr(verdict, "witness", None)
    if witness is None:
        witness = _find_witness(value, seed)
    if witness is None:
        print("  witness: none found among sampled rational points")
    else:
        print(f"  witness: {_format_point(witness)}")
        if not E.opaque_names(value):
            try:
                val = E.eval_at(value, witness)
                if isinstance(val, Fraction):
                    print(f"  value at witness: {val}")
            except (E.PoleError, E.IndeterminateError):
                pass


def _residual_label(res) -> str:
    idx = ",".join(str(i) for i in res.indices)
    return f"{res.family}[{idx}]"


def _check_residuals(residuals, args, heading: str) -> int:
    """Shared verdict loop: print one line per residual, fail on the
    first nonzero one."""
    print(heading)
    failure = None
    for res in residuals:
        verdict = D.zero_verdict(res.value, seed=args.seed,
                                 samples=args.samples,
                                 precision=args.precision)
        print(f"  {_residual_label(res)}: {_verdict_text(verdict)}")
        if failure is None and not verdict.zero:
            failure = (res, verdict)
    if failure is None:
        print("result: pass")
        return PASS
    res, verdict = failure
    _print_failure(f"{_residual_label(res)}: residual does not vanish",
                   res.value, verdict, args.seed)
    print("result: fail")
    return FAIL


def _load(path: str, *kinds) -> SF.SystemFile:
    sf = SF.load(path)
    if kinds and sf.kind not in kinds:
        raise _InputError(
            f"{path}: kind {sf.kind!r} not usable here (need {' or '.join(kinds)})")
    return sf


def _cli_expr(sf: SF.SystemFile, text: str, what: str,
              extra_names: tuple = ()) -> E.Expr:
    try:
        e = E.parse(text, opaque=sf.opaque_names)
    except E.ExprError as exc:
        raise _InputError(f"{what}: {exc}") from exc
    bad = set(E.variables(e)) - set(sf.coordinates) - set(extra_names)
    if bad:
        raise _InputError(f"{what}: undeclared variables {sorted(bad)}")
    return e


# ---------------------------------------------------------------------------
# subcommands


def _cmd_check_involutive(args) -> int:
    sf = _load(args.file, "dmz")
    S = sf.dmz()
    print(f"system: {args.file} (dmz, n = {S.n})")
    off = S.off_index_entries()
    if off:
        (i, j, k), val = off[0]
        for (a, b, c), _ in off:
            print(f"  off-index entry Gamma[{a}][{b}][{c}] present")
        _print_failure(
            f"off-index coefficient Gamma[{i}][{j}][{k}] must vanish",
            val, None, args.seed)
        print("result: fail")
        return FAIL
    print("  off-index entries: none")
    return _check_residuals(D.integrability_residuals(S), args,
                            "integrability residuals:")


def _cmd_compat(args) -> int:
    sf = _load(args.file, "gdmz")
    Gs = sf.gdmz()
    obstructions = D.gdmz_formal_obstructions(Gs)
    print(f"system: {args.file} (gdmz, n = {Gs.n}, dependent = {Gs.dep})")
    if obstructions:
        print(f"  surviving formal second-derivative symbols: "
              f"{', '.join(obstructions)}")
        residuals = D.gdmz_compatibility_residuals(Gs)
        for res in residuals:
            formal = set(E.variables(res.value)) & set(obstructions)
            if formal:
                _print_failure(
                    f"{_residual_label(res)}: keeps formal symbols "
                    f"{sorted(formal)}", res.value, None, args.seed)
                print("result: fail")
                return FAIL
    return _check_residuals(D.gdmz_compatibility_residuals(Gs), args,
                            "cross-derivative residuals:")


def _cmd_gauge(args) -> int:
    sf = _load(args.file, "dmz")
    S = sf.dmz()
    if args.lam is None and args.to_3wri is None and args.to_m3wri is None:
        raise _InputError(
            "gauge needs --lambda, --to-3wri, or --to-m3wri")
    if args.to_3wri is not None and args.to_m3wri is not None:
        raise _InputError("--to-3wri and --to-m3wri are mutually exclusive")
    try:
        if args.lam is not None:
            lam = _cli_expr(sf, args.lam, "--lambda")
            S = GA.gauge_transform(S, lam)
        if args.to_3wri is not None:
            u = _cli_expr(sf, args.to_3wri, "--to-3wri")
            S = GA.to_threewave_gauge(S, u, seed=args.seed)
        if args.to_m3wri is not None:
            mu = _cli_expr(sf, args.to_m3wri, "--to-m3wri")
            S = GA.to_m3wri_gauge(S, mu, seed=args.seed)
    except GA.GaugeError as exc:
        print(f"FAIL gauge transformation: {exc}")
        print("result: fail")
        return FAIL
    text = SF.render_dmz(S)
    if args.output:
        Path(args.output).write_text(text)
        print(f"wrote {args.output}")
    else:
        sys.stdout.write(text)
    return PASS


def _cmd_invariants(args) -> int:
    sf = _load(args.file, "dmz")
    S = sf.dmz()
    table = GA.gauge_invariants(S)
    print(f"gauge invariants of {args.file}:")
    for (i, j) in sorted(table):
        print(f"  h[{i}][{j}] = \"{E.render(table[(i, j)])}\"")
    return PASS


def _cmd_lame(args) -> int:
    sf = _load(args.file, "dmz")
    S = sf.dmz()
    if args.verify is None:
        try:
            pots = D.lame_potentials(S)
        except (D.DmzError, E.ExprError) as exc:
            print(f"FAIL potential reconstruction: {exc}")
            print("result: fail")
            return FAIL
        print(f"potentials for {args.file}:")
        for i in range(1, S.n + 1):
            print(f"  h[{i}] = \"{E.render(pots.h(i))}\"")
        return PASS
    pieces = [p.strip() for p in args.verify.split(",")]
    if len(pieces) != S.n:
        raise _InputError(
            f"--verify needs {S.n} comma-separated potentials, got {len(pieces)}")
    hs = [_cli_expr(sf, p, f"potential {i + 1}") for i, p in enumerate(pieces)]
    pots = D.LamePotentials(S.coords, h=hs)
    print(f"system: {args.file} (dmz, n = {S.n})")
    print("potential residuals:")
    failure = None
    for i in range(1, S.n + 1):
        for j in range(1, S.n + 1):
            if i == j:
                continue
            value = pots.h(j) * S.gamma2(i, j) - E.diff(hs[j - 1], S.coords[i - 1])
            verdict = D.zero_verdict(value, seed=args.seed,
                                     samples=args.samples,
                                     precision=args.precision)
            print(f"  gradient-match[{i},{j}]: {_verdict_text(verdict)}")
            if failure is None and not verdict.zero:
                failure = (i, j, value, verdict)
    if failure is None:
        print("result: pass")
        return PASS
    i, j, value, verdict = failure
    _print_failure(f"gradient-match[{i},{j}]: residual does not vanish",
                   value, verdict, args.seed)
    print("result: fail")
    return FAIL


def _cmd_threewave(args) -> int:
    sf = _load(args.file, "wave")
    A = sf.wave()
    print(f"system: {args.file} (wave, n = {len(A.coords)})")
    return _check_residuals(W.nwave_residuals(A), args,
                            "resonant-interaction residuals:")


def _cmd_m3wave(args) -> int:
    sf = _load(args.file, "wave")
    A = sf.wave()
    print(f"system: {args.file} (wave, n = {len(A.coords)})")
    return _check_residuals(W.m3wri_residuals(A), args,
                            "modified-interaction residuals:")


def _cmd_construct(args) -> int:
    sf = _load(args.file, "jetquotient")
    chart, parts, invariant, inverse, dep = sf.jetquotient()
    hyp = G.check_n_hyperbolic(chart, parts, args.seed)
    print(f"chart: {', '.join(chart.names)} (dim {chart.dim})")
    for msg in hyp.messages:
        print(f"  {msg}")
    if not hyp.ok:
        print("FAIL splitting is not hyperbolic in the required sense")
        print("result: fail")
        return FAIL
    try:
        result = D.construct_gdmz(chart, parts, invariant, inverse, dep=dep,
                                  seed=args.seed, check_hyperbolic=False)
    except (D.DmzError, G.GeometryError) as exc:
        print(f"FAIL construction: {exc}")
        print("result: fail")
        return FAIL
    for line in result.report:
        print(f"  {line}")
    sys.stdout.write(SF.render_gdmz(result.gdmz))
    return PASS


def _cmd_semiham(args) -> int:
    sf = _load(args.file, "hydro")
    V = sf.hydro()
    try:
        locus = H.check_strong_hyperbolicity(V, seed=args.seed)
    except H.HydroError as exc:
        print(f"FAIL hyperbolicity: {exc}")
        print("result: fail")
        return FAIL
    print(f"system: {args.file} (hydro, n = {V.n})")
    for msg in locus:
        print(f"  warning: {msg}")
    return _check_residuals(H.semihamiltonian_residuals(V), args,
                            "semi-Hamiltonian residuals:")


def _cmd_commute(args) -> int:
    sf_v = _load(args.system, "hydro")
    sf_w = _load(args.flow, "hydro")
    V = sf_v.hydro()
    flow = sf_w.flow(required=False)
    if flow is None:
        flow = H.FlowField(sf_w.coordinates,
                           [sf_w.hydro().velocity(i)
                            for i in range(1, len(sf_w.coordinates) + 1)])
    if flow.coords != V.coords:
        raise _InputError("the two files use different coordinates")
    print(f"system: {args.system} (hydro, n = {V.n})")
    print(f"flow:   {args.flow}")
    return _check_residuals(H.commuting_flow_residuals(V, flow), args,
                            "commuting-flow residuals:")


def _parse_fraction(text: str, what: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise _InputError(f"{what}: not a rational number: {text!r}") from exc


def _cmd_hodograph(args) -> int:
    sf = _load(args.file, "hydro")
    V = sf.hydro()
    flow = sf.flow(required=True)
    x = _parse_fraction(args.x, "--x")
    t = _parse_fraction(args.t, "--t")
    guess = [_parse_fraction(p, "--guess")
             for p in args.guess.split(",") if p.strip()]
    if len(guess) != V.n:
        raise _InputError(f"--guess needs {V.n} comma-separated rationals")
    try:
        result = H.hodograph_solve(V, flow, x, t, guess)
    except H.HydroError as exc:
        print(f"FAIL hodograph solve: {exc}")
        print("result: fail")
        return FAIL
    names = ",".join(f"u{i}" for i in range(1, V.n + 1))
    print(f"x,t,{names},residual")
    cells = [f"{float(x):.17g}", f"{float(t):.17g}"]
    cells += [f"{float(u):.17g}" for u in result.u]
    cells.append(f"{float(result.residual):.17g}")
    print(",".join(cells))
    if result.pde_residual is not None:
        print(f"# finite-difference equation residual: "
              f"{result.pde_residual:.3e}", file=sys.stderr)
    return PASS


def _cmd_corpus(args) -> int:
    directory = Path(args.directory) if args.directory else _default_corpus()
    if not directory.is_dir():
        raise _InputError(f"{directory}: not a directory")
    files = sorted(p for p in directory.iterdir()
                   if p.suffix in _CORPUS_SUFFIXES)
    if not files:
        raise _InputError(f"{directory}: no system files found")
    mismatches = 0
    print(f"corpus: {directory} ({len(files)} files)")
    for path in files:
        sf = SF.load(str(path))
        expect = sf.metadata.get("expect", "pass").strip()
        check = sf.metadata.get("check", "").strip()
        if expect not in ("pass", "fail") or not check:
            raise _InputError(
                f"{path}: metadata needs check and expect = pass|fail")
        argv = shlex.split(check)
        if "{file}" in check:
            argv = [a.replace("{file}", str(path)) for a in argv]
        else:
            argv = argv[:1] + [str(path)] + argv[1:]
        argv += ["--seed", str(args.seed), "--samples", str(args.samples),
                 "--precision", str(args.precision)]
        buffer = io.StringIO()
        try:
            with contextlib.redirect_stdout(buffer), \
                    contextlib.redirect_stderr(buffer):
                code = main(argv)
        except SystemExit as exc:  # argparse rejected the embedded check
            code = exc.code if isinstance(exc.code, int) else USAGE
        got = {PASS: "pass", FAIL: "fail"}.get(code, "error")
        ok = got == expect
        mismatches += 0 if ok else 1
        status = "ok " if ok else "BAD"
        print(f"  {status} {path.name:<22} expect={expect:<4} got={got:<5} "
              f"({check})")
        if not ok and args.verbose:
            for line in buffer.getvalue().splitlines():
                print(f"      | {line}")
    print(f"result: {'pass' if mismatches == 0 else 'fail'} "
          f"({len(files) - mismatches}/{len(files)} files as expected)")
    return PASS if mismatches == 0 else FAIL


def _default_corpus() -> Path:
    return Path(__file__).resolve().parent / "corpus"


# ---------------------------------------------------------------------------
# argument plumbing


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0,
                        help="seed for randomised zero tests (default 0)")
    common.add_argument("--samples", type=int, default=32,
                        help="sample count for numeric zero tests (default 32)")
    common.add_argument("--precision", type=int, default=256,
                        help="working precision in bits (default 256)")

    parser = argparse.ArgumentParser(
        prog="dmzkit",
        description="verify and transform overdetermined linear systems, "
                    "wave interactions, and diagonal hydrodynamic flows")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check-involutive", parents=[common],
                       help="involutivity of a dmz file")
    p.add_argument("file")
    p.set_defaults(run=_cmd_check_involutive)

    p = sub.add_parser("compat", parents=[common],
                       help="cross-derivative compatibility of a gdmz file")
    p.add_argument("file")
    p.set_defaults(run=_cmd_compat)

    p = sub.add_parser("gauge", parents=[common],
                       help="rescale a dmz file by exp(lambda), optionally "
                            "into an interaction-ready gauge")
    p.add_argument("file")
    p.add_argument("--lambda", dest="lam", metavar="EXPR")
    p.add_argument("--to-3wri", dest="to_3wri", metavar="SOLUTION_EXPR")
    p.add_argument("--to-m3wri", dest="to_m3wri", metavar="LAMBDA_EXPR")
    p.add_argument("--output", "-o", metavar="FILE")
    p.set_defaults(run=_cmd_gauge)

    p = sub.add_parser("invariants", parents=[common],
                       help="table of gauge invariants of a dmz file")
    p.add_argument("file")
    p.set_defaults(run=_cmd_invariants)

    p = sub.add_parser("lame", parents=[common],
                       help="reconstruct or verify diagonal-metric potentials")
    p.add_argument("file")
    p.add_argument("--verify", metavar="H1,H2,...")
    p.set_defaults(run=_cmd_lame)

    p = sub.add_parser("threewave", parents=[common],
                       help="resonant-interaction residuals of a wave file")
    p.add_argument("file")
    p.set_defaults(run=_cmd_threewave)

    p = sub.add_parser("m3wave", parents=[common],
                       help="modified-interaction residuals of a wave file")
    p.add_argument("file")
    p.set_defaults(run=_cmd_m3wave)

    p = sub.add_parser("construct", parents=[common],
                       help="build a semilinear system from a jetquotient file")
    p.add_argument("file")
    p.set_defaults(run=_cmd_construct)

    p = sub.add_parser("semiham", parents=[common],
                       help="semi-Hamiltonian property of a hydro file")
    p.add_argument("file")
    p.set_defaults(run=_cmd_semiham)

    p = sub.add_parser("commute", parents=[common],
                       help="commutation of the second file's flow with the "
                            "first file's system")
    p.add_argument("system")
    p.add_argument("flow")
    p.set_defaults(run=_cmd_commute)

    p = sub.add_parser("hodograph", parents=[common],
                       help="solve the implicit flow equations at one point")
    p.add_argument("file")
    p.add_argument("--x", required=True)
    p.add_argument("--t", required=True)
    p.add_argument("--guess", required=True, metavar="Q1,Q2,...")
    p.set_defaults(run=_cmd_hodograph)

    p = sub.add_parser("corpus", parents=[common],
                       help="run every golden file's embedded check")
    p.add_argument("directory", nargs="?",
                   help="directory of system files (default: bundled corpus)")
    p.add_argument("--verbose", action="store_true",
                   help="show the captured report of each mismatch")
    p.set_defaults(run=_cmd_corpus)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.run(args)
    except (_InputError, SF.SystemFileError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE
    except (D.DmzError, G.GeometryError, H.HydroError, E.ExprError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE


if __name__ == "__main__":
    sys.exit(main())
