"""
Command-line entry point for batch verification.

Every verification subcommand prints a RunManifest, as text lines or as JSON
with --json, and exits with 0 when every report passed, 1 when any failed and
2 on usage, parse, registry or validation errors.
"""

import argparse
import json
import re
import sys
from typing import Any, Callable, Dict, List, Optional, Sequence

import structlog
from pydantic import ValidationError

from src.config.logging_config import configure_logging
from src.config.settings import get_settings
from src.models.report_models import (
    DensityReport,
    ModularFormProfile,
    RunManifest,
    VerificationReport,
)
from src.models.series_models import APAssertion, EtaQuotient
from src.services.congruence_verifier import (
    eligible_prime,
    legendre_values,
    verify_ap,
    verify_cuigu,
    verify_eligibility_solutions,
    verify_inftystep,
    verify_internal_congruence,
    verify_parity_characterization,
    verify_sellers,
    verify_thm12_families,
)
from src.services.eta_modular import (
    construct_A,
    construct_Bk,
    density,
    holomorphy_report,
    recount_density,
    verify_bk_bridge,
)
from src.services.exceptions import ExpressionParseError, IneligiblePrimeError, QSeriesError
from src.services.expression import evaluate_text
from src.services.identity_registry import get_registry, verify_p_dissection
from src.services.partition_oracle import verify_oracle_agreement
from src.services.qfactory import expand_eta_quotient
from src.services.series import TruncatedSeries
from src.services.verification_runner import VerificationRunner


logger = structlog.get_logger()

EXIT_PASS, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

_NAMED_QUOTIENT = re.compile(r"^\s*B_?\{?(\d+)\}?\s*$")


# ----------------------------------------------------------------------
# Helpers
# ----------------------------------------------------------------------


def _named_quotient(spec: str) -> Optional[EtaQuotient]:
    """B_k and A name the level-360 family and its level-60 building block."""
    if spec.strip() == "A":
        return construct_A()
    match = _NAMED_QUOTIENT.match(spec)
    return construct_Bk(int(match.group(1))) if match else None


def expand_spec(spec: str, trunc: int, modulus: Optional[int]) -> TruncatedSeries:
    quotient = _named_quotient(spec)
    if quotient is not None:
        return expand_eta_quotient(quotient, trunc, modulus).require_combined()
    return evaluate_text(spec, trunc, modulus)


def _parse_exponents(text: str) -> Dict[int, int]:
    """'12:5,60:-1' -> {12: 5, 60: -1}."""
    out: Dict[int, int] = {}
    for item in text.split(","):
        delta, _, r = item.partition(":")
        out[int(delta)] = int(r)
    return out


def _parameters(args: argparse.Namespace) -> Dict[str, Any]:
    return {
        k: (str(v) if not isinstance(v, (int, str, bool, list, type(None))) else v)
        for k, v in vars(args).items()
        if k not in ("handler", "json")
    }


def _format_report(report: Any) -> List[str]:
    if isinstance(report, VerificationReport):
        mod = report.modulus if report.modulus is not None else "exact"
        line = (
            f"{report.status.upper():4}  {report.id:<24} order={report.order_checked} "
            f"mod={mod} {report.elapsed_ms}ms  {report.detail}"
        )
        if not report.passed:
            line += (
                f"  [witness={report.first_bad_exponent} "
                f"lhs={report.lhs_coeff} rhs={report.rhs_coeff}]"
            )
        return [line]
    if isinstance(report, DensityReport):
        lines = [f"INFO  {report.id:<24} residue {report.residue} mod {report.modulus}"]
        for c in report.checkpoints:
            lines.append(f"      X={c.x:<10} count={c.count:<10} delta={c.value} ~ {float(c.value):.6f}")
        return lines
    if isinstance(report, ModularFormProfile):
        status = "PASS" if report.passed else "FAIL"
        lines = [
            f"{status:4}  {report.id:<24} level={report.level} weight={report.weight} "
            f"sums=({report.sum_delta}, {report.sum_level_over_delta}) "
            f"admissible={report.admissible} holomorphic={report.holomorphic} "
            f"chi-class={report.character_square_class}"
        ]
        for row in report.table_rows:
            values = ", ".join(str(v) for v in row.values)
            lines.append(
                f"      d in {row.divisors}: L = {values}  closed form {row.closed_form} "
                f"{'ok' if row.matches else 'MISMATCH'}"
            )
        return lines
    return [str(report)]


def _emit(manifest: RunManifest, as_json: bool) -> int:
    if as_json:
        print(manifest.model_dump_json(indent=2))
    else:
        for report in manifest.results:
            for line in _format_report(report):
                print(line)
        print(f"overall: {manifest.overall} ({len(manifest.results)} reports)")
    return manifest.exit_code


def _manifest(args: argparse.Namespace, results: Sequence[Any]) -> int:
    manifest = RunManifest.build(
        command=args.command,
        parameters=_parameters(args),
        results=list(results),
        tool_version=get_settings().app_version,
    )
    logger.info("run_finished", command=args.command, overall=manifest.overall, reports=len(results))
    return _emit(manifest, args.json)


def _run_tasks(tasks: Dict[str, Callable[[], Any]]) -> List[Any]:
    return VerificationRunner().run_sync(tasks)


# ----------------------------------------------------------------------
# Subcommands
# ----------------------------------------------------------------------


def cmd_expand(args: argparse.Namespace) -> int:
    series = expand_spec(args.spec, args.trunc, args.mod)
    if args.json:
        print(
            json.dumps(
                {
                    "expression": args.spec,
                    "trunc": series.trunc,
                    "modulus": series.modulus,
                    "coefficients": series.to_list(),
                }
            )
        )
    else:
        for n, c in enumerate(series.to_list()):
            print(f"{n} {c}")
    return EXIT_PASS


def cmd_verify(args: argparse.Namespace) -> int:
    registry = get_registry(args.registry)
    ids = registry.ids(args.filter)
    if not ids:
        print(f"no registry entry matches {args.filter!r}", file=sys.stderr)
        return EXIT_USAGE
    tasks = {
        i: (lambda e=registry.get(i): registry.verify_entry(e, args.trunc, args.mod)) for i in ids
    }
    return _manifest(args, _run_tasks(tasks))


def cmd_congruence(args: argparse.Namespace) -> int:
    assertion = APAssertion(
        ell=args.ell,
        m=args.m,
        r=args.r,
        modulus=args.mod,
        claimed=args.claimed,
        bound=args.bound,
        oracle_bound=args.oracle_bound,
        source=args.source,
    )
    return _manifest(args, [verify_ap(assertion)])


def cmd_parity(args: argparse.Namespace) -> int:
    return _manifest(args, [verify_parity_characterization(args.bound)])


def cmd_density(args: argparse.Namespace) -> int:
    trunc = args.trunc or max(args.checkpoints)
    series = expand_spec(args.spec, trunc, args.mod)
    report = density(series, args.mod, args.residue, args.checkpoints, label=args.spec)
    if not recount_density(series, report):
        logger.error("density_recount_mismatch", spec=args.spec)
        return EXIT_FAIL
    return _manifest(args, [report])


def cmd_eta_check(args: argparse.Namespace) -> int:
    results: List[Any] = []
    if args.exponents:
        quotient = EtaQuotient.from_factors(_parse_exponents(args.exponents), level=args.level)
        results.append(holomorphy_report(quotient))
    else:
        for k in args.k:
            results.append(holomorphy_report(construct_Bk(k), label=f"B_{k}", k=k))
        if args.bridge:
            tasks = {f"bk-bridge-k{k}": (lambda k=k: verify_bk_bridge(k, args.trunc)) for k in args.bridge}
            results.extend(_run_tasks(tasks))
    return _manifest(args, results)


def cmd_oracle_compare(args: argparse.Namespace) -> int:
    return _manifest(args, [verify_oracle_agreement(args.ell, args.bound)])


def cmd_families(args: argparse.Namespace) -> int:
    for p in args.p:
        if not eligible_prime(p):
            three, minus_five = legendre_values(p)
            raise IneligiblePrimeError(f"p={p} is not eligible: (3/{p}) = {three} = (-5/{p})")
    tasks: Dict[str, Callable[[], Any]] = {}
    for p in args.p:
        tasks[f"eligibility-p{p}"] = lambda p=p: verify_eligibility_solutions(p)
        tasks[f"families-p{p}"] = lambda p=p: verify_thm12_families(p, args.alpha, args.bound, args.trunc)
        for alpha in range(args.alpha + 1):
            tasks[f"inftystep-p{p}-a{alpha}"] = (
                lambda p=p, alpha=alpha: verify_inftystep(p, alpha, args.bound, args.trunc)
            )
    return _manifest(args, _run_tasks(tasks))


def cmd_internal(args: argparse.Namespace) -> int:
    return _manifest(args, [verify_internal_congruence(args.alpha, args.bound, args.trunc)])


def cmd_cuigu(args: argparse.Namespace) -> int:
    return _manifest(args, [verify_cuigu(args.ell, args.bound), verify_sellers(args.ell, args.bound)])


def cmd_sellers(args: argparse.Namespace) -> int:
    return _manifest(args, [verify_sellers(args.ell, args.bound)])


def cmd_pdissect(args: argparse.Namespace) -> int:
    return _manifest(args, [verify_p_dissection(p, args.target, args.trunc) for p in args.p])


# ----------------------------------------------------------------------
# Parser
# ----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    settings = get_settings()
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="print JSON instead of text lines")

    parser = argparse.ArgumentParser(
        prog="qcong", description="Truncated q-series engine and partition congruence verifier"
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {settings.app_version}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("expand", parents=[common], help="expand an expression")
    p.add_argument("spec", help="expression in the text grammar, or B_k / A")
    p.add_argument("--trunc", type=int, default=20)
    p.add_argument("--mod", type=int, default=None)
    p.set_defaults(handler=cmd_expand)

    p = sub.add_parser("verify", parents=[common], help="verify registry entries")
    p.add_argument("--registry", default=None, help="registry file (default: packaged registry)")
    p.add_argument("--filter", default="*", help="glob over entry ids")
    p.add_argument("--trunc", type=int, default=None)
    p.add_argument("--mod", type=int, default=None, help="override the entries' modulus")
    p.set_defaults(handler=cmd_verify)

    p = sub.add_parser("congruence", parents=[common], help="check b'_ell(mn+r) = c mod M")
    p.add_argument("--ell", type=int, default=5)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--r", type=int, required=True)
    p.add_argument("--mod", type=int, required=True)
    p.add_argument("--claimed", type=int, default=0)
    p.add_argument("--bound", type=int, default=500)
    p.add_argument("--oracle-bound", type=int, default=None)
    p.add_argument("--source", choices=["series", "oracle", "both"], default="series")
    p.set_defaults(handler=cmd_congruence)

    p = sub.add_parser("parity", parents=[common], help="parity of b'_5(2n+1)")
    p.add_argument("--bound", type=int, default=100_000)
    p.set_defaults(handler=cmd_parity)

    p = sub.add_parser("density", parents=[common], help="residue density at checkpoints")
    p.add_argument("spec")
    p.add_argument("--mod", type=int, required=True)
    p.add_argument("--residue", type=int, default=0)
    p.add_argument("--checkpoints", type=int, nargs="+", required=True)
    p.add_argument("--trunc", type=int, default=None)
    p.set_defaults(handler=cmd_density)

    p = sub.add_parser("eta-check", parents=[common], help="modular form data of B_k or a quotient")
    p.add_argument("--k", type=int, nargs="+", default=[1, 2, 3, 4, 5, 6])
    p.add_argument("--exponents", default=None, help="explicit quotient, e.g. 12:5,60:-1")
    p.add_argument("--level", type=int, default=None)
    p.add_argument("--bridge", type=int, nargs="*", default=[], help="k values for the 6n+1 bridge")
    p.add_argument("--trunc", type=int, default=600)
    p.set_defaults(handler=cmd_eta_check)

    p = sub.add_parser("oracle-compare", parents=[common], help="series against direct counts")
    p.add_argument("--ell", type=int, default=5)
    p.add_argument("--bound", type=int, default=1001)
    p.set_defaults(handler=cmd_oracle_compare)

    p = sub.add_parser("families", parents=[common], help="mod 4 families for eligible primes")
    p.add_argument("--p", type=int, nargs="+", default=[7, 11, 13])
    p.add_argument("--alpha", type=int, default=1)
    p.add_argument("--bound", type=int, default=None)
    p.add_argument("--trunc", type=int, default=None)
    p.set_defaults(handler=cmd_families)

    p = sub.add_parser("internal", parents=[common], help="b'_5(5n+1) internal congruence mod 5")
    p.add_argument("--alpha", type=int, default=2)
    p.add_argument("--bound", type=int, default=None)
    p.add_argument("--trunc", type=int, default=None)
    p.set_defaults(handler=cmd_internal)

    p = sub.add_parser("cuigu", parents=[common], help="b'_ell against b_ell mod 2")
    p.add_argument("--ell", type=int, default=5)
    p.add_argument("--bound", type=int, default=500)
    p.set_defaults(handler=cmd_cuigu)

    p = sub.add_parser("sellers", parents=[common], help="b'_ell(ell n + r) even")
    p.add_argument("--ell", type=int, default=5)
    p.add_argument("--bound", type=int, default=500)
    p.set_defaults(handler=cmd_sellers)

    p = sub.add_parser("pdissect", parents=[common], help="p-dissections of (q;q) and (q;q)^3")
    p.add_argument("--p", type=int, nargs="+", default=[5, 7])
    p.add_argument("--target", choices=["f1", "f1cubed"], default="f1")
    p.add_argument("--trunc", type=int, default=None)
    p.set_defaults(handler=cmd_pdissect)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    settings = get_settings()
    configure_logging(settings)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    try:
        return args.handler(args)
    except ExpressionParseError as e:
        print(f"parse error: {e}\n{e.pointer()}", file=sys.stderr)
    except ValidationError as e:
        print(f"invalid input: {e}", file=sys.stderr)
    except QSeriesError as e:
        print(f"{type(e).__name__}: {e}", file=sys.stderr)
    except Exception as e:
        logger.error("unexpected_error", exception_type=type(e).__name__, error=str(e))
        print(f"unexpected error: {e}", file=sys.stderr)
    return EXIT_USAGE


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
