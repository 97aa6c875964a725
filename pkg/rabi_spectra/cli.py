# Copyright 2025 Google LLC
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Command line for the spectral toolkit.

Every command resolves a RunConfig from field defaults, an optional YAML file
(--config), --set overrides and explicit flags, in increasing precedence, and
echoes the resolved configuration next to its result.
"""

import logging
import sys
from collections.abc import Callable
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Literal

import click
import numpy as np
import yaml
from click.core import ParameterSource
from pydantic import BaseModel, ConfigDict, ValidationError
from tabulate import tabulate

from rabi_spectra import overlaps, perturbation, specfun, spectral_analysis
from rabi_spectra import weyl_asymptotics as weyl
from rabi_spectra.errors import RabiSpectraError, SpecError
from rabi_spectra.utils.artifacts import (
    load_config,
    parse_overrides,
    render_csv,
    render_json,
    write_schemas,
    write_text,
)
from rabi_spectra.utils.tracing import configure_tracing
from rabi_spectra.utils.typing import ModelFamily, ModelSpec, RabiParameters

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
# Fields that steer where and how results are shown, not what they are.
PRESENTATION_FIELDS = {"out", "log_level", "trace", "show", "workers"}


class RunConfig(BaseModel):
    """Every parameter of every command, with its default."""

    model_config = ConfigDict(extra="forbid")

    command: Literal[
        "overlap",
        "laguerre-zeros",
        "avoid-seq",
        "spectrum",
        "perturb",
        "quasimode",
        "braak",
        "weyl",
        "smges-check",
        "schema",
    ]

    # model
    family: ModelFamily = ModelFamily.QR
    alpha: float = 1.0
    gamma1: float = 1.0
    gamma2: float = -1.0
    delta: float | None = None
    eps: float = 0.0
    cutoff: int = 40
    alphas: list[float] = []
    gammas: list[float] = []

    # overlaps and zeros
    N: int = 0
    k: int = 0
    method: Literal["closed_form", "quadrature"] = "closed_form"
    nodes: int | None = None
    degree: int = 1
    x0: float = 0.5
    jmax: int = 4
    kcap: int = 400

    # spectra
    m: int = 24
    tol: float = 1e-10
    cap: int | None = None
    growth: float = spectral_analysis.CUTOFF_GROWTH
    parity: bool = True
    shift: float | None = None
    Nmax: int = 10

    # perturbation
    K: int | None = None
    residual_cutoff: int | None = None
    C: float = 1.0
    override: bool = False
    eps_grid: list[float] = [1e-2, 10**-2.5, 1e-3]

    # weyl
    lambdas: list[float] = [10.5, 15.5, 20.5, 24.5]
    reliability_fraction: float = 0.5
    order: int = weyl.DEFAULT_SPHERE_ORDER
    samples: int = 256
    seed: int = 0
    sampling: Literal["random", "grid"] = "random"

    # output
    out: str | None = None
    format: Literal["json", "csv"] = "json"
    log_level: str = "INFO"
    trace: bool = False
    show: bool = False
    workers: int = 1

    def model_spec(self) -> ModelSpec:
        family = self.family
        if family is ModelFamily.QR:
            return ModelSpec.qr(self.alpha, self.gamma1, self.gamma2, self.eps, self.cutoff)
        if family is ModelFamily.QRABI:
            if self.delta is None:
                raise SpecError("QRabi needs delta")
            return ModelSpec.qrabi(self.alpha, self.delta, self.eps, self.cutoff)
        if family is ModelFamily.AB_FRAME:
            return ModelSpec.ab_frame(self.rabi_parameters(), self.cutoff)
        return ModelSpec.n_level(family, self.alphas, self.gammas, self.cutoff)

    def rabi_parameters(self) -> RabiParameters:
        if self.family is ModelFamily.QRABI and self.delta is not None:
            return RabiParameters.from_delta(self.alpha, self.delta, self.eps)
        return RabiParameters(
            alpha=self.alpha, gamma1=self.gamma1, gamma2=self.gamma2, eps=self.eps
        )

    def default_shift(self) -> float:
        """Shift taking the two-level spectra onto N + 1/2 + O(eps)."""
        if self.shift is not None:
            return self.shift
        shift = 0.5 * self.alpha * self.alpha
        if self.family is ModelFamily.QRABI:
            shift += 0.5
        if self.family is ModelFamily.AB_FRAME:
            shift = 0.0
        return shift

    def echo(self) -> dict[str, Any]:
        return self.model_dump(mode="json", exclude=PRESENTATION_FIELDS)


@dataclass
class Outcome:
    """A command's JSON result and the rows of its tabular form."""

    result: dict[str, Any]
    rows: list[dict[str, Any]] = field(default_factory=list)


def _dump(model: BaseModel) -> dict[str, Any]:
    return model.model_dump(mode="json", by_alias=True)


def _overlap(config: RunConfig) -> Outcome:
    result = _dump(
        overlaps.overlap(config.N, config.k, config.alpha, config.method, config.nodes)
    )
    return Outcome(result, [result])


def _laguerre_zeros(config: RunConfig) -> Outcome:
    zeros = specfun.laguerre_zeros(config.degree)
    rows = [{"degree": config.degree, "index": i + 1, "zero": z} for i, z in enumerate(zeros)]
    return Outcome({"degree": config.degree, "zeros": zeros}, rows)


def _avoid_seq(config: RunConfig) -> Outcome:
    sequence = specfun.nondegenerate_sequence(config.x0, config.jmax, config.kcap)
    result = _dump(sequence)
    return Outcome(result, result["entries"])


def _spectrum_of(config: RunConfig) -> Any:
    spec = config.model_spec()
    if config.parity and spec.family in (ModelFamily.QR, ModelFamily.QRABI):
        return spectral_analysis.parity_split(
            spec, config.m, config.tol, config.cap, config.growth
        )
    return spectral_analysis.converged_spectrum(
        spec, config.m, config.tol, config.cap, config.growth
    )


def _spectrum(config: RunConfig) -> Outcome:
    spectrum = _spectrum_of(config)
    labels = spectrum.parity or [None] * len(spectrum.eigenvalues)
    rows = [
        {"index": i, "eigenvalue": value, "parity": label, "converged": i < spectrum.converged_count}
        for i, (value, label) in enumerate(zip(spectrum.eigenvalues, labels, strict=True))
    ]
    return Outcome(_dump(spectrum), rows)


def _perturb(config: RunConfig) -> Outcome:
    params = config.rabi_parameters()
    split = perturbation.first_order(config.N, params)
    result: dict[str, Any] = {
        "first_order": _dump(split),
        "prediction": list(perturbation.first_order_prediction(config.N, params)),
        "braak_radius": perturbation.braak_radius(config.Nmax, params),
        "degenerate_levels": perturbation.degenerate_levels(config.alpha, config.Nmax),
    }
    if split.degenerate or config.override:
        result["second_order"] = _dump(
            perturbation.quasimode_form(config.N, params, config.K, override=True)
        )
    row = {
        "N": config.N,
        "mu_minus": split.mu_minus,
        "mu_plus": split.mu_plus,
        "overlap_ratio": split.overlap_ratio,
        "degenerate": split.degenerate,
    }
    return Outcome(result, [row])


def _quasimode(config: RunConfig) -> Outcome:
    params = config.rabi_parameters()
    expansion = perturbation.quasimode_vectors(config.N, params, config.K, config.override)

    def residual_at(eps: float) -> Any:
        return perturbation.quasimode_residual(
            config.N, params, eps, expansion.K, config.residual_cutoff, config.override
        )

    with ThreadPoolExecutor(max_workers=config.workers) as pool:
        residuals = list(pool.map(residual_at, config.eps_grid))
    rows = [
        {
            "eps": r.eps,
            "residual": r.residual,
            "lambda_minus": r.lambda_minus,
            "lambda_plus": r.lambda_plus,
        }
        for r in residuals
    ]
    slope = None
    if len(residuals) >= 2 and all(r.residual > 0 for r in residuals):
        slope = float(
            np.polyfit(
                np.log([r.eps for r in residuals]),
                np.log([r.residual for r in residuals]),
                1,
            )[0]
        )
    result = {
        "expansion": {
            "N": expansion.N,
            "K": expansion.K,
            "mu_plus": expansion.mu_plus,
            "mu2_plus": expansion.mu2_plus,
            "mu2_minus": expansion.mu2_minus,
        },
        "residuals": [_dump(r) for r in residuals],
        "residual_slope": slope,
    }
    return Outcome(result, rows)


def _braak(config: RunConfig) -> Outcome:
    spectrum = _spectrum_of(config)
    report = spectral_analysis.braak_intervals(spectrum, config.default_shift(), config.Nmax)
    result = {"spectrum": _dump(spectrum), "report": _dump(report)}
    return Outcome(result, [_dump(count) for count in report.per_interval])


def _weyl(config: RunConfig) -> Outcome:
    spec = config.model_spec()
    prediction = weyl.weyl_prediction(spec, config.order, seed=config.seed)
    table = weyl.empirical_counting(
        spec,
        config.lambdas,
        reliability_fraction=config.reliability_fraction,
        workers=config.workers,
        prediction=prediction,
    )
    return Outcome(_dump(table), [_dump(row) for row in table.rows])


def _smges_check(config: RunConfig) -> Outcome:
    report = weyl.smges_gap_check(
        config.model_spec(), config.eps, config.samples, config.seed, config.sampling
    )
    result = _dump(report)
    return Outcome(result, [result])


def _schema(config: RunConfig) -> Outcome:
    if config.out is None:
        raise click.UsageError("schema needs --out DIRECTORY")
    paths = [str(path) for path in write_schemas(config.out)]
    return Outcome({"written": paths}, [{"path": p} for p in paths])


HANDLERS: dict[str, Callable[[RunConfig], Outcome]] = {
    "overlap": _overlap,
    "laguerre-zeros": _laguerre_zeros,
    "avoid-seq": _avoid_seq,
    "spectrum": _spectrum,
    "perturb": _perturb,
    "quasimode": _quasimode,
    "braak": _braak,
    "weyl": _weyl,
    "smges-check": _smges_check,
    "schema": _schema,
}


def _emit(config: RunConfig, outcome: Outcome) -> None:
    payload = {"command": config.command, "config": config.echo(), "result": outcome.result}
    if config.format == "csv":
        text = render_csv(outcome.rows)
    else:
        text = render_json(payload)
    if config.out is None or config.command == "schema":
        click.echo(text, nl=False)
    else:
        out = Path(config.out)
        write_text(out, text)
        if config.format == "csv":
            # CSV has no room for the config echo; it goes next to the table.
            write_text(out.with_suffix(".config.json"), render_json(payload))
    if config.show and outcome.rows:
        click.echo(tabulate(outcome.rows, headers="keys", floatfmt=".10g"), err=True)


def run(config: RunConfig) -> int:
    """Runs one command and writes its artifact.

    Returns:
        0 on success, else the exit code of the error, whose machine-readable
        form is printed on stdout.
    """
    logger.info(f"Running {config.command}")
    try:
        outcome = HANDLERS[config.command](config)
    except RabiSpectraError as e:
        logger.error(f"{config.command} failed: {e.message}")
        click.echo(render_json({"error": e.to_dict(), "config": config.echo()}), nl=False)
        return e.code
    _emit(config, outcome)
    return 0


def resolve_config(
    command: str,
    flags: dict[str, Any],
    config_path: str | None = None,
    overrides: str | None = None,
) -> RunConfig:
    """defaults < YAML file < --set overrides < explicit flags."""
    merged: dict[str, Any] = {}
    if config_path:
        try:
            merged.update(load_config(config_path))
        except (SpecError, yaml.YAMLError) as e:
            raise click.UsageError(f"Unreadable config file {config_path}: {e}") from e
    merged.update(parse_overrides(overrides))
    merged.update(flags)
    merged["command"] = command
    try:
        return RunConfig.model_validate(merged)
    except ValidationError as e:
        raise click.UsageError(f"Invalid configuration: {e}") from e


def _explicit(ctx: click.Context) -> dict[str, Any]:
    """Parameters given on the command line, skipping defaults."""
    explicit = {}
    for name, value in ctx.params.items():
        if ctx.get_parameter_source(name) is ParameterSource.COMMANDLINE:
            explicit[name] = list(value) if isinstance(value, tuple) else value
    return explicit


def _invoke(ctx: click.Context) -> None:
    group = ctx.find_root()
    flags = {
        key: value
        for key, value in _explicit(group).items()
        if key not in ("config_path", "overrides")
    }
    flags.update(_explicit(ctx))
    config = resolve_config(
        ctx.info_name or "",
        flags,
        group.params.get("config_path"),
        group.params.get("overrides"),
    )
    logging.getLogger().setLevel(config.log_level.upper())
    configure_tracing(enabled=config.trace)
    ctx.exit(run(config))


def model_options(command: Callable[..., Any]) -> Callable[..., Any]:
    decorators = [
        click.option(
            "--family",
            type=click.Choice([f.value for f in ModelFamily]),
            help="Model family (default QR)",
        ),
        click.option("--alpha", type=float, help="Two-level coupling (default 1.0)"),
        click.option("--gamma1", type=float, help="Upper level energy (default 1.0)"),
        click.option("--gamma2", type=float, help="Lower level energy (default -1.0)"),
        click.option("--delta", type=float, help="QRabi level splitting"),
        click.option("--eps", type=float, help="Perturbation strength (default 0)"),
        click.option("--cutoff", type=int, help="Per-mode Fock cutoff (default 40)"),
        click.option("--alphas", type=float, multiple=True, help="N-level couplings"),
        click.option("--gammas", type=float, multiple=True, help="N-level energies"),
    ]
    for decorator in reversed(decorators):
        command = decorator(command)
    return command


def spectrum_options(command: Callable[..., Any]) -> Callable[..., Any]:
    decorators = [
        click.option("--m", "m", type=int, help="Eigenvalues that must converge (default 24)"),
        click.option("--tol", type=float, help="Convergence tolerance (default 1e-10)"),
        click.option("--cap", type=int, help="Per-mode cutoff cap"),
        click.option("--growth", type=float, help="Cutoff growth factor (default 1.5)"),
        click.option("--parity/--no-parity", default=None, help="Split two-level spectra by parity"),
    ]
    for decorator in reversed(decorators):
        command = decorator(command)
    return command


@click.group()
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), help="Flat YAML file of RunConfig fields")
@click.option("--set", "overrides", default=None, help="Comma-separated list of overrides in KEY=VALUE format")
@click.option("--out", default=None, help="Output file (stdout when omitted)")
@click.option("--format", type=click.Choice(["json", "csv"]), help="Output format (default json)")
@click.option("--log-level", help="Logging level (default INFO)")
@click.option("--trace/--no-trace", default=None, help="Log OpenTelemetry spans")
@click.option("--show/--no-show", default=None, help="Print a table of the result on stderr")
@click.option("--workers", type=int, help="Threads for lambda and eps sweeps (default 1)")
def cli(**_: Any) -> None:
    """Spectral toolkit for the quantum Rabi model and its N-level relatives."""


@cli.command()
@click.option("--N", "N", type=int, help="First degree")
@click.option("--k", "k", type=int, help="Second degree")
@click.option("--alpha", type=float, help="Displacement")
@click.option("--method", type=click.Choice(["closed_form", "quadrature"]))
@click.option("--nodes", type=int, help="Gauss-Hermite nodes for the quadrature")
@click.pass_context
def overlap(ctx: click.Context, **_: Any) -> None:
    """Overlap of oppositely displaced Hermite functions."""
    _invoke(ctx)


@cli.command("laguerre-zeros")
@click.option("--degree", type=int, help="Laguerre degree")
@click.pass_context
def laguerre_zeros(ctx: click.Context, **_: Any) -> None:
    """All zeros of L_degree."""
    _invoke(ctx)


@cli.command("avoid-seq")
@click.option("--x0", type=float, help="Starting point (default 0.5)")
@click.option("--jmax", type=int, help="Sequence length (default 4)")
@click.option("--kcap", type=int, help="Largest degree searched (default 400)")
@click.pass_context
def avoid_seq(ctx: click.Context, **_: Any) -> None:
    """Degree sequence with shrinking zero-free windows around x0."""
    _invoke(ctx)


@cli.command()
@model_options
@spectrum_options
@click.pass_context
def spectrum(ctx: click.Context, **_: Any) -> None:
    """Converged low-lying eigenvalues."""
    _invoke(ctx)


@cli.command()
@model_options
@click.option("--N", "N", type=int, help="Level (default 0)")
@click.option("--K", "K", type=int, help="Spectral sum cutoff")
@click.option("--Nmax", "Nmax", type=int, help="Largest level for the radius (default 10)")
@click.option("--override/--no-override", default=None, help="Evaluate the second-order form anyway")
@click.pass_context
def perturb(ctx: click.Context, **_: Any) -> None:
    """First-order splitting and, at degenerate levels, the second-order form."""
    _invoke(ctx)


@cli.command()
@model_options
@click.option("--N", "N", type=int, help="Level (default 0)")
@click.option("--K", "K", type=int, help="Vector cutoff")
@click.option("--residual-cutoff", type=int, help="AB-frame cutoff for residuals")
@click.option("--eps-grid", type=float, multiple=True, help="Residual eps values")
@click.option("--override/--no-override", default=None, help="Allow non-degenerate levels")
@click.pass_context
def quasimode(ctx: click.Context, **_: Any) -> None:
    """Quasimode residuals over an eps grid."""
    _invoke(ctx)


@cli.command()
@model_options
@spectrum_options
@click.option("--shift", type=float, help="Spectral shift (alpha^2/2 for QR)")
@click.option("--Nmax", "Nmax", type=int, help="Last interval (default 10)")
@click.pass_context
def braak(ctx: click.Context, **_: Any) -> None:
    """Counts shifted eigenvalues in [N, N+1)."""
    _invoke(ctx)


@cli.command("weyl")
@model_options
@click.option("--lambdas", type=float, multiple=True, help="Counting thresholds")
@click.option("--reliability-fraction", type=float, help="Flag lambda above this share of the cutoff")
@click.option("--order", type=int, help="Sphere rule order (default 16)")
@click.option("--seed", type=int, help="Monte Carlo seed (default 0)")
@click.pass_context
def weyl_command(ctx: click.Context, **_: Any) -> None:
    """Counting function against the two-term Weyl prediction."""
    _invoke(ctx)


@cli.command("smges-check")
@model_options
@click.option("--samples", type=int, help="Sample count or grid order (default 256)")
@click.option("--seed", type=int, help="Sampling seed (default 0)")
@click.option("--sampling", type=click.Choice(["random", "grid"]))
@click.pass_context
def smges_check(ctx: click.Context, **_: Any) -> None:
    """Smallest eigenvalue gap of the perturbed symbol on p2 = 1."""
    _invoke(ctx)


@cli.command()
@click.pass_context
def schema(ctx: click.Context) -> None:
    """Writes the JSON schemas of all result models into --out."""
    _invoke(ctx)


def main() -> None:
    logging.basicConfig(level=logging.INFO, format=LOG_FORMAT, stream=sys.stderr)
    cli()


if __name__ == "__main__":
    main()
