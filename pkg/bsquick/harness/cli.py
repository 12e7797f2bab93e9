"""
Консольная утилита `bsq`
"""
from __future__ import annotations

import argparse
import pathlib
import sys
import typing as ty

from loguru import logger

from bsquick.birman_schwinger import knapp_table
from bsquick.exceptions import BSQuickError
from bsquick.forge import verify_certificate
from bsquick.harness.config import SweepConfig, load_config
from bsquick.harness.sweep import (
    SweepRow,
    expected_dn_slope,
    fit_dn_slope,
    fit_norm_exponent,
    key_of,
    run_sweep,
    sweep_columns,
)
from bsquick.harness.storage import (
    load_certificate,
    save_certificate,
    save_report,
    write_csv,
)
from bsquick.kernel import ShellBump, kernel_decay_profile
from bsquick.pretty_view import pretty_view
from bsquick.region import RegionShape, RegionSpec

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2

DEFAULT_KNAPP_MS = (2.0, 4.0, 8.0, 16.0)
DEFAULT_KERNEL_EPS = (0.02,)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--config", type=pathlib.Path, help="JSON config file"
    )
    common.add_argument("--out", type=pathlib.Path, help="Output directory")
    common.add_argument("--eps", type=float, nargs="+", help="eps values")
    common.add_argument("--q", type=float, nargs="+", help="q exponents")
    common.add_argument(
        "--L", type=float, nargs="+", help="Davies-Nath L values"
    )
    common.add_argument(
        "--grid-scale", type=float, help="Grid refinement factor"
    )
    common.add_argument("--tol", type=float, help="Certification tolerance")
    common.add_argument("--dimension", type=int, help="Space dimension d")
    common.add_argument(
        "--symbol", choices=("laplacian", "fractional"), help="Symbol h0"
    )
    common.add_argument("--s", type=float, help="Fractional exponent s")
    common.add_argument("--lambda", dest="energy", type=float, help="Energy")
    common.add_argument(
        "--workers", type=int, help="Rows computed in parallel"
    )
    common.add_argument(
        "--log-level",
        default="INFO",
        choices=("TRACE", "DEBUG", "INFO", "SUCCESS", "WARNING", "ERROR"),
    )

    parser = argparse.ArgumentParser(
        prog="bsq",
        description=(
            "Forge complex eigenvalues of h0(D) + V through the "
            "Birman-Schwinger operator and tabulate sharpness quotients"
        ),
    )
    commands = parser.add_subparsers(dest="command", required=True)
    commands.add_parser(
        "forge", parents=[common], help="Forge one certificate (first eps)"
    )
    verify = commands.add_parser(
        "verify", parents=[common], help="Load and re-certify a certificate"
    )
    verify.add_argument("path", type=pathlib.Path)
    commands.add_parser(
        "sweep", parents=[common], help="Certificates and quotients over eps"
    )
    knapp = commands.add_parser(
        "knapp", parents=[common], help="Knapp lower bounds over M"
    )
    knapp.add_argument("--M", dest="stretches", type=float, nargs="+")
    knapp.add_argument(
        "--delta",
        type=float,
        default=0.0,
        help="Cap parameter c0 = M^(delta - 1)",
    )
    kernel = commands.add_parser(
        "kernel", parents=[common], help="Cutoff resolvent kernel decay"
    )
    kernel.add_argument("--inner", type=float, default=0.3)
    kernel.add_argument("--outer", type=float, default=0.9)
    commands.add_parser(
        "fractional", parents=[common], help="Fractional Laplacian table"
    )
    return parser


def configure_logging(level: str) -> None:
    logger.remove()
    logger.add(sys.stderr, level=level)


def resolve_config(args: argparse.Namespace) -> SweepConfig:
    """Конфиг из файла (или по умолчанию) с переопределениями из флагов"""
    if args.config is None:
        config = SweepConfig()
    else:
        config = load_config(args.config)
    overrides = {
        "epsilons": args.eps,
        "q_values": args.q,
        "l_values": args.L,
        "grid_scale": args.grid_scale,
        "certification_tol": args.tol,
        "dimension": args.dimension,
        "symbol": args.symbol,
        "exponent_s": args.s,
        "energy": args.energy,
        "workers": args.workers,
        "output_dir": None if args.out is None else str(args.out),
    }
    return config.replace(**overrides)


def _output_dir(config: SweepConfig) -> pathlib.Path:
    path = pathlib.Path(config.output_dir)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _rows_report(
    config: SweepConfig, rows: ty.List[SweepRow]
) -> ty.Dict[str, ty.Any]:
    report: ty.Dict[str, ty.Any] = {
        "config": config.to_mapping(),
        "rows": [
            {
                "epsilon": row.epsilon,
                "status": row.status.name.lower(),
                "reason": row.reason,
                "eps_mu": row.eps_mu,
                "residual": row.residual,
            }
            for row in rows
        ],
    }
    certified = [row for row in rows if row.passed]
    if len(certified) >= 2:
        report["norm_exponents"] = {
            key_of(q): fit_norm_exponent(certified, q)._asdict()
            for q in config.q_values
        }
    if certified and len(config.l_values) >= 2:
        report["dn_slopes"] = {
            key_of(row.epsilon): {
                **fit_dn_slope(row)._asdict(),
                "expected": expected_dn_slope(row).slope,
            }
            for row in certified
        }
    return report


def _run_table(config: SweepConfig, name: str) -> int:
    rows = run_sweep(config)
    out = _output_dir(config)
    write_csv(
        out / f"{name}.csv",
        sweep_columns(config),
        (row.to_record() for row in rows),
    )
    report = _rows_report(config, rows)
    save_report(report, out / f"{name}.json")
    print(pretty_view(report))
    return EXIT_OK if all(row.passed for row in rows) else EXIT_FAILED


def command_forge(args: argparse.Namespace) -> int:
    config = resolve_config(args)
    config = config.replace(epsilons=config.epsilons[:1])
    (row,) = run_sweep(config, keep_certificates=True)
    out = _output_dir(config)
    if row.certificate is not None:
        save_certificate(
            row.certificate, out / f"certificate_eps{key_of(row.epsilon)}.bsq"
        )
        report = row.certificate.describe()
    else:
        report = {"epsilon": row.epsilon}
    report["status"] = row.status.name.lower()
    report["reason"] = row.reason
    save_report(report, out / f"certificate_eps{key_of(row.epsilon)}.json")
    print(pretty_view(report))
    return EXIT_OK if row.passed else EXIT_FAILED


def command_verify(args: argparse.Namespace) -> int:
    tol = 1e-3 if args.tol is None else args.tol
    certificate = load_certificate(args.path)
    report = verify_certificate(certificate, tol)
    description = certificate.describe()
    description["verification"] = report.describe()
    print(pretty_view(description))
    return EXIT_OK if report.passed else EXIT_FAILED


def command_sweep(args: argparse.Namespace) -> int:
    return _run_table(resolve_config(args), "sweep")


def command_fractional(args: argparse.Namespace) -> int:
    config = resolve_config(args)
    config = config.replace(
        symbol="fractional",
        exponent_s=1.0 if args.s is None else args.s,
        q_values=args.q or [2.0],
    )
    return _run_table(config, "fractional")


def command_knapp(args: argparse.Namespace) -> int:
    config = resolve_config(args)
    symbol = config.make_symbol()
    stretches = args.stretches or list(DEFAULT_KNAPP_MS)
    epsilons = args.eps or [0.05]
    records = []
    for epsilon in epsilons:

        def grid_for(M: float, c0: float, epsilon: float = epsilon):
            region = RegionSpec(RegionShape.TUBE, epsilon=epsilon, M=M)
            return config.grid_policy.knapp_grid(
                region, symbol, config.energy, c0, config.dimension
            )

        for row in knapp_table(
            epsilon,
            stretches,
            grid_for,
            symbol,
            config.energy,
            delta=args.delta,
        ):
            records.append(row._asdict())
    out = _output_dir(config)
    write_csv(out / "knapp.csv", ["epsilon", "M", "c0", "bound"], records)
    print(pretty_view({"knapp": records}))
    bounded = all(0 < record["bound"] <= 1 for record in records)
    return EXIT_OK if bounded else EXIT_FAILED


def command_kernel(args: argparse.Namespace) -> int:
    config = resolve_config(args)
    symbol = config.make_symbol()
    cutoff = ShellBump(inner=args.inner, outer=args.outer)
    epsilons = args.eps or list(DEFAULT_KERNEL_EPS)
    out = _output_dir(config)
    reports = {}
    failed = []
    for epsilon in epsilons:
        grid = config.grid_policy.kernel_grid(
            epsilon, symbol, config.energy, cutoff.outer, config.dimension
        )
        profile = kernel_decay_profile(
            symbol, config.energy, epsilon, cutoff, grid
        )
        reports[key_of(epsilon)] = profile.describe()
        if not profile.passed:
            failed.append(epsilon)
            logger.warning(
                "Kernel profile at eps={epsilon} is off: exponent "
                "{exponent:.4f} (expected {expected:.4f}), suppression "
                "{suppression:.4f} (expected {expected_suppression:.4f})",
                epsilon=epsilon,
                exponent=profile.fitted_exponent,
                expected=profile.expected_exponent,
                suppression=profile.suppression_ratio,
                expected_suppression=profile.expected_suppression,
            )
        write_csv(
            out / f"kernel_eps{key_of(epsilon)}.csv",
            ["radius", "envelope"],
            (
                {"radius": radius, "envelope": value}
                for radius, value in zip(profile.radii, profile.envelope)
            ),
        )
    save_report(reports, out / "kernel.json")
    print(pretty_view(reports))
    return EXIT_FAILED if failed else EXIT_OK


COMMANDS: ty.Dict[str, ty.Callable[[argparse.Namespace], int]] = {
    "forge": command_forge,
    "verify": command_verify,
    "sweep": command_sweep,
    "knapp": command_knapp,
    "kernel": command_kernel,
    "fractional": command_fractional,
}


def main(argv: ty.Optional[ty.Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.log_level)
    try:
        return COMMANDS[args.command](args)
    except BSQuickError as error:
        logger.error(
            "{command} failed: {error}", command=args.command, error=error
        )
        return EXIT_USAGE
