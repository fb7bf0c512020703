"""
Command-line front end: ``onebit-mimo {simulate,bound,pilot-error,mi}``.

Every sub-command expands its scalar and ``--*-list`` flags into the
cartesian product of sweep points, validates all points before doing any
work and emits one row per point as CSV or JSON.

Exit status is 0 on success, 2 for invalid arguments and 3 for runtime or
I/O failures.
"""

from __future__ import annotations

import argparse
import contextlib
import dataclasses
import itertools
import json
import logging
import math
import os
import pathlib
import sys
import typing as t
from collections import abc

import numpy as np
import pandas as pd
import structlog

from onebit_mimo import __version__, analytics, montecarlo, utils
from onebit_mimo.schemes import DecoderVariant, SchemeKind

logger = structlog.get_logger(__name__)

PROG = "onebit-mimo"
EXIT_OK = 0
EXIT_USAGE = 2
EXIT_RUNTIME = 3

SweepParameter = t.Literal["M", "N", "P", "Pp", "K", "trials"]

_INTEGER_PARAMETERS = frozenset({"M", "N", "K", "trials"})
_POWER_PARAMETERS = frozenset({"P", "Pp"})
# parameter -> (scalar attribute, list attribute, flag)
_SWEEP_FLAGS: dict[str, tuple[str, str, str]] = {
    "M": ("m", "m_list", "--m"),
    "N": ("n", "n_list", "--n"),
    "P": ("power", "power_list", "--power"),
    "Pp": ("pilot_power", "pilot_power_list", "--pilot-power"),
    "K": ("pilots", "pilots_list", "--pilots"),
    "trials": ("trials", "trials_list", "--trials"),
}


@dataclasses.dataclass(frozen=True)
class SweepSpec:
    """
    The values one parameter takes across a sweep.

    Examples
    --------
    >>> SweepSpec.parse("M", "16,32, 64").values
    (16, 32, 64)
    >>> SweepSpec.parse("P", "0,10", db=True).values
    (1.0, 10.0)
    >>> SweepSpec.parse("K", "0")
    Traceback (most recent call last):
        ...
    ValueError: `K` must be a positive integer: 0
    """

    parameter: SweepParameter
    """The swept parameter."""
    values: tuple[float, ...]
    """The values in sweep order."""

    def __post_init__(self) -> None:
        if self.parameter not in _SWEEP_FLAGS:
            raise ValueError(f"Unknown sweep parameter: {self.parameter!r}")
        if len(self.values) == 0:
            raise ValueError(f"The sweep over {self.parameter} is empty")
        for value in self.values:
            if self.parameter in _INTEGER_PARAMETERS:
                utils.validate_positive_int(self.parameter, t.cast(int, value))
            else:
                utils.validate_positive(self.parameter, value)

    @classmethod
    def parse(
        cls, parameter: SweepParameter, text: str, *, db: bool = False
    ) -> SweepSpec:
        """
        Parses a comma-separated list of values.

        Powers are converted from dB when `db` is True.

        Raises
        ------
        ValueError
            If a value is malformed or outside the parameter's domain.
        """
        items = [item.strip() for item in text.split(",") if item.strip()]
        values = [_parse_value(parameter, item) for item in items]
        return cls.of(parameter, values, db=db)

    @classmethod
    def of(
        cls,
        parameter: SweepParameter,
        values: abc.Iterable[float],
        *,
        db: bool = False,
    ) -> SweepSpec:
        """
        Builds a sweep from already parsed values.
        """
        if db and parameter in _POWER_PARAMETERS:
            values = [utils.db_to_linear(v) for v in values]
        return cls(parameter, tuple(values))


def _parse_value(parameter: str, text: str) -> float:
    try:
        if parameter in _INTEGER_PARAMETERS:
            return int(text)
        value = float(text)
    except ValueError:
        raise ValueError(f"Invalid value for {parameter}: {text!r}") from None
    if not math.isfinite(value):
        raise ValueError(f"Invalid value for {parameter}: {text!r}")
    return value


def resolve_sweep(
    args: argparse.Namespace, parameters: abc.Sequence[SweepParameter]
) -> list[SweepSpec]:
    """
    Collects the sweep of each parameter from its scalar or list flag.

    Raises
    ------
    ValueError
        If neither flag of a parameter is given or a value is invalid.
    """
    specs = []
    for parameter in parameters:
        scalar, listed, flag = _SWEEP_FLAGS[parameter]
        text = getattr(args, listed, None)
        if text is not None:
            specs.append(SweepSpec.parse(parameter, text, db=args.db))
            continue
        value = getattr(args, scalar, None)
        if value is None:
            raise ValueError(f"one of the arguments {flag} {flag}-list is required")
        specs.append(SweepSpec.of(parameter, [value], db=args.db))
    return specs


def sweep_points(specs: abc.Sequence[SweepSpec]) -> list[dict[str, t.Any]]:
    """
    Cartesian product of the sweeps, the first sweep varying slowest.

    Examples
    --------
    >>> sweep_points([SweepSpec("M", (4, 8)), SweepSpec("N", (1, 2))])
    [{'M': 4, 'N': 1}, {'M': 4, 'N': 2}, {'M': 8, 'N': 1}, {'M': 8, 'N': 2}]
    """
    names = [spec.parameter for spec in specs]
    return [
        dict(zip(names, values))
        for values in itertools.product(*(spec.values for spec in specs))
    ]


@dataclasses.dataclass(frozen=True)
class ResultRow:
    """
    One simulated sweep point next to its analytic bounds.
    """

    scheme: str
    decoder: str
    M: int
    N: int
    P: float
    Pp: float
    K: int
    trials: int
    seed: int
    block_errors: int
    block_error_rate: float
    bit_error_rate: float
    ci95_halfwidth: float
    bound_union: float | None
    bound_chernoff: float | None
    bound_asymptotic: float | None
    p_eps: float
    mi_bits_per_use: float
    mi_estimator: str


@dataclasses.dataclass(frozen=True)
class BoundRow:
    scheme: str
    decoder: str
    M: int
    N: int
    P: float
    Pp: float
    K: int
    bound_union: float | None
    bound_chernoff: float | None
    bound_asymptotic: float | None
    p_eps: float


@dataclasses.dataclass(frozen=True)
class PilotErrorRow:
    Pp: float
    K: int
    samples: int
    seed: int
    errors: int
    measured: float
    ci95_halfwidth: float
    p_eps: float
    p_eps_tiebreak: float
    p_eps_exact: float


@dataclasses.dataclass(frozen=True)
class MutualInformationRow:
    scheme: str
    decoder: str
    M: int
    N: int
    P: float
    Pp: float
    K: int
    trials: int
    seed: int
    mi_bits_per_use: float
    mi_fano_floor: float
    mi_estimator: str
    bit_error_rate: float
    ci95_halfwidth: float
    capacity_limit: int
    capacity_upper_bound: int


Row: t.TypeAlias = ResultRow | BoundRow | PilotErrorRow | MutualInformationRow


def _system_configs(args: argparse.Namespace) -> list[montecarlo.SystemConfig]:
    specs = resolve_sweep(args, ["M", "N", "P", "Pp", "K", "trials"])
    return [
        montecarlo.SystemConfig(
            scheme=SchemeKind(args.scheme),
            decoder=DecoderVariant(args.decoder),
            m=point["M"],
            n=point["N"],
            power=point["P"],
            pilot_power=point["Pp"],
            pilots=point["K"],
            trials=point["trials"],
            seed=args.seed,
            noiseless=args.noiseless,
            exact_csi=args.exact_csi,
        )
        for point in sweep_points(specs)
    ]


def _bounds(cfg: montecarlo.SystemConfig) -> dict[str, t.Any]:
    return analytics.bound_columns(
        cfg.scheme, cfg.power, cfg.pilot_power, cfg.pilots, cfg.m, cfg.n
    )


def cmd_simulate(args: argparse.Namespace, workers: int) -> list[ResultRow]:
    """
    Runs `montecarlo.run_trials` on every sweep point.
    """
    configs = _system_configs(args)
    bounds = [_bounds(cfg) for cfg in configs]
    rows = []
    for cfg, bound in zip(configs, bounds):
        stats = montecarlo.run_trials(cfg, workers=workers)
        rows.append(
            ResultRow(
                scheme=cfg.scheme.value,
                decoder=cfg.decoder.value,
                M=cfg.m,
                N=cfg.n,
                P=cfg.power,
                Pp=cfg.pilot_power,
                K=cfg.pilots,
                trials=cfg.trials,
                seed=cfg.seed,
                block_errors=stats.block_errors,
                block_error_rate=stats.block_error_rate,
                bit_error_rate=stats.bit_error_rate,
                ci95_halfwidth=stats.block_ci95,
                mi_bits_per_use=stats.mutual_information,
                mi_estimator=montecarlo.MI_ESTIMATOR,
                **bound,
            )
        )
    return rows


def cmd_bound(args: argparse.Namespace, workers: int) -> list[BoundRow]:
    """
    Evaluates the closed-form bounds on every sweep point.
    """
    scheme = SchemeKind(args.scheme)
    specs = resolve_sweep(args, ["M", "N", "P", "Pp", "K"])
    rows = []
    for point in sweep_points(specs):
        rows.append(
            BoundRow(
                scheme=scheme.value,
                decoder=DecoderVariant(args.decoder).value,
                M=point["M"],
                N=point["N"],
                P=point["P"],
                Pp=point["Pp"],
                K=point["K"],
                **analytics.bound_columns(
                    scheme, point["P"], point["Pp"], point["K"], point["M"], point["N"]
                ),
            )
        )
    return rows


def cmd_pilot_error(args: argparse.Namespace, workers: int) -> list[PilotErrorRow]:
    """
    Measures the CSI error rate on every (Pp, K) sweep point.
    """
    utils.validate_positive_int("samples", args.samples)
    specs = resolve_sweep(args, ["Pp", "K"])
    points = sweep_points(specs)
    rows = []
    for point in points:
        estimate = montecarlo.estimate_pilot_error(
            point["Pp"], point["K"], args.samples, args.seed, workers=workers
        )
        rows.append(
            PilotErrorRow(
                Pp=estimate.pilot.pilot_power,
                K=estimate.pilot.pilots,
                samples=estimate.samples,
                seed=estimate.seed,
                errors=estimate.errors,
                measured=estimate.measured,
                ci95_halfwidth=estimate.ci95,
                p_eps=estimate.analytic,
                p_eps_tiebreak=estimate.analytic_tiebreak,
                p_eps_exact=estimate.analytic_exact,
            )
        )
    return rows


def cmd_mi(args: argparse.Namespace, workers: int) -> list[MutualInformationRow]:
    """
    Estimates the mutual information on every sweep point.
    """
    configs = _system_configs(args)
    rows = []
    for cfg in configs:
        stats = montecarlo.estimate_mutual_information(cfg, workers=workers)
        rows.append(
            MutualInformationRow(
                scheme=cfg.scheme.value,
                decoder=cfg.decoder.value,
                M=cfg.m,
                N=cfg.n,
                P=cfg.power,
                Pp=cfg.pilot_power,
                K=cfg.pilots,
                trials=cfg.trials,
                seed=cfg.seed,
                mi_bits_per_use=stats.mutual_information,
                mi_fano_floor=stats.fano_floor,
                mi_estimator=montecarlo.MI_ESTIMATOR,
                bit_error_rate=stats.bit_error_rate,
                ci95_halfwidth=stats.bit_ci95,
                capacity_limit=analytics.capacity_limit(cfg.scheme, cfg.m, cfg.n),
                capacity_upper_bound=analytics.capacity_upper_bound(cfg.m, cfg.n),
            )
        )
    return rows


_COMMANDS: dict[str, abc.Callable[[argparse.Namespace, int], abc.Sequence[Row]]] = {
    "simulate": cmd_simulate,
    "bound": cmd_bound,
    "pilot-error": cmd_pilot_error,
    "mi": cmd_mi,
}


def format_rows(rows: abc.Sequence[Row], fmt: t.Literal["csv", "json"]) -> str:
    """
    Renders rows as CSV with a header row or as a JSON array of objects.

    Reals are written with 17 significant digits and missing values as
    empty CSV fields or JSON nulls.

    Examples
    --------
    >>> row = BoundRow("rx-combine", "paper", 1, 4, 1.0, 1.0, 1, None, 1.125, 0.5, 0.25)
    >>> rows = [row]
    >>> print(format_rows(rows, "csv"), end="")
    scheme,decoder,M,N,P,Pp,K,bound_union,bound_chernoff,bound_asymptotic,p_eps
    rx-combine,paper,1,4,1,1,1,,1.125,0.5,0.25
    """
    records = [dataclasses.asdict(row) for row in rows]
    if fmt == "json":
        return json.dumps(records, indent=2) + "\n"
    columns = [field.name for field in dataclasses.fields(rows[0])] if rows else []
    df = pd.DataFrame(records, columns=columns)
    return df.to_csv(index=False, float_format="%.17g", na_rep="", lineterminator="\n")


def _to_python(value: t.Any) -> t.Any:
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, float) and math.isnan(value):
        return None
    return value


def read_rows(filepath: str | os.PathLike[str]) -> list[dict[str, t.Any]]:
    """
    Parses a CSV file written by this tool back into row dictionaries.

    Empty fields become None.

    Parameters
    ----------
    filepath : str | os.PathLike[str]
        The path to the CSV file.

    Returns
    -------
    list[dict[str, Any]]
        One dictionary per row, keyed by the header.
    """
    df = pd.read_csv(filepath, float_precision="round_trip")
    return [
        {key: _to_python(value) for key, value in record.items()}
        for record in df.to_dict(orient="records")
    ]


def configure_logging(verbose: bool = False) -> None:
    """
    Sends structured log events to stderr, keeping stdout for results.
    """
    structlog.configure(
        processors=[
            structlog.processors.add_log_level,
            structlog.processors.TimeStamper(fmt="iso"),
            structlog.dev.ConsoleRenderer(colors=False),
        ],
        wrapper_class=structlog.make_filtering_bound_logger(
            logging.DEBUG if verbose else logging.WARNING
        ),
        logger_factory=structlog.PrintLoggerFactory(file=sys.stderr),
        cache_logger_on_first_use=False,
    )


def _add_sweep_flag(
    parser: argparse.ArgumentParser,
    parameter: SweepParameter,
    kind: type,
    help_text: str,
    default: t.Any = None,
) -> None:
    _, _, flag = _SWEEP_FLAGS[parameter]
    group = parser.add_mutually_exclusive_group()
    group.add_argument(flag, type=kind, default=default, help=help_text)
    group.add_argument(
        f"{flag}-list",
        metavar="VALUES",
        default=None,
        help=f"comma-separated sweep over {flag}",
    )


def build_parser() -> argparse.ArgumentParser:
    output = argparse.ArgumentParser(add_help=False)
    output.add_argument(
        "--out", type=pathlib.Path, default=None, help="output file (default stdout)"
    )
    output.add_argument("--format", choices=["csv", "json"], default="csv")
    output.add_argument(
        "--workers",
        type=int,
        default=None,
        help=f"worker processes (default ${montecarlo.WORKERS_ENV} or 1)",
    )
    output.add_argument(
        "--db", action="store_true", help="read --power and --pilot-power in dB"
    )
    output.add_argument("-v", "--verbose", action="store_true")

    scenario = argparse.ArgumentParser(add_help=False)
    scenario.add_argument(
        "--scheme", required=True, choices=[kind.value for kind in SchemeKind]
    )
    scenario.add_argument(
        "--decoder",
        choices=[variant.value for variant in DecoderVariant],
        default=DecoderVariant.LITERAL.value,
        help="combining rule of rx-combine",
    )
    _add_sweep_flag(scenario, "M", int, "transmit antennas")
    _add_sweep_flag(scenario, "N", int, "receive antennas")
    _add_sweep_flag(scenario, "P", float, "transmit power")

    pilots = argparse.ArgumentParser(add_help=False)
    _add_sweep_flag(pilots, "Pp", float, "pilot power")
    _add_sweep_flag(pilots, "K", int, "pilots per channel coefficient", default=1)

    seeded = argparse.ArgumentParser(add_help=False)
    seeded.add_argument("--seed", type=int, required=True, help="master seed")

    trials = argparse.ArgumentParser(add_help=False)
    _add_sweep_flag(trials, "trials", int, "channel uses", default=10_000)
    trials.add_argument(
        "--noiseless", action="store_true", help="diagnostic: no data noise"
    )
    trials.add_argument(
        "--exact-csi", action="store_true", help="diagnostic: CSI without errors"
    )

    parser = argparse.ArgumentParser(
        prog=PROG, description="1-bit massive MIMO simulator and analytic bounds."
    )
    parser.add_argument(
        "--version", action="version", version=f"%(prog)s {__version__}"
    )
    commands = parser.add_subparsers(dest="command", required=True)
    commands.add_parser(
        "simulate",
        parents=[scenario, pilots, trials, seeded, output],
        help="Monte-Carlo block and bit error rates",
    )
    commands.add_parser(
        "bound", parents=[scenario, pilots, output], help="closed-form error bounds"
    )
    pilot_error = commands.add_parser(
        "pilot-error",
        parents=[pilots, seeded, output],
        help="measured CSI error rate",
    )
    pilot_error.add_argument(
        "--samples", type=int, default=100_000, help="channel coefficients to draw"
    )
    commands.add_parser(
        "mi",
        parents=[scenario, pilots, trials, seeded, output],
        help="mutual information per channel use",
    )
    return parser


def check_writable(path: pathlib.Path | None) -> None:
    """
    Fails before any trial runs if `path` cannot be written.

    Raises
    ------
    OSError
        If the directory is missing, or the file or its directory is not
        writable.
    """
    if path is None:
        return
    if path.is_dir():
        raise IsADirectoryError(f"Is a directory: '{path}'")
    if not path.parent.is_dir():
        raise FileNotFoundError(f"No such directory: '{path.parent}'")
    if not os.access(path if path.exists() else path.parent, os.W_OK):
        raise PermissionError(f"Permission denied: '{path}'")


def _open_output(
    path: pathlib.Path | None,
) -> contextlib.AbstractContextManager[t.TextIO]:
    if path is None:
        return contextlib.nullcontext(sys.stdout)
    return open(path, "w", encoding="utf-8", newline="")


def main(argv: abc.Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.verbose)
    try:
        check_writable(args.out)
    except OSError as e:
        print(f"{PROG}: error: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    try:
        workers = montecarlo.resolve_workers(args.workers)
        rows = _COMMANDS[args.command](args, workers)
    except ValueError as e:
        parser.error(str(e))
    except (OSError, RuntimeError) as e:
        print(f"{PROG}: error: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    try:
        with _open_output(args.out) as stream:
            stream.write(format_rows(rows, args.format))
    except OSError as e:
        print(f"{PROG}: error: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    logger.info("rows_written", command=args.command, rows=len(rows))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
