"""Monte Carlo laboratory for the EPD modified score test.

Every replication draws from its own random stream, derived from
``(seed, replication index)`` with a Philox counter-based generator, so
results do not depend on how replications are spread over workers or on
the total number of replications.
"""

from __future__ import annotations

import csv
import enum
import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import specfun
from .apd import ParamVector, apd_sample
from .epd_test import EPDTestConfig, epd_power_prediction, run_epd_test
from .errors import DomainError, ParseError, UstatError
from .estimators import Estimator
from .ustat_core import TestResult

__all__ = [
    "Mode",
    "MCConfig",
    "MCReport",
    "Replications",
    "CSV_HEADER",
    "FIGURE1_DELTA1",
    "FIGURE1_DELTA2",
    "replication_rng",
    "alternative_theta",
    "simulate",
    "run_size_experiment",
    "run_power_experiment",
    "figure1_rows",
    "emit_figure1",
    "write_csv",
    "read_observations",
    "run_data_test",
    "format_test_result",
]

CSV_HEADER = ("delta1", "delta2", "estimator", "predicted_power", "empirical_power", "mc_stderr")
FIGURE1_DELTA1 = tuple(np.round(np.linspace(0.0, 3.5, 36), 10))
FIGURE1_DELTA2 = tuple(np.round(np.linspace(0.0, 18.0, 37), 10))


class Mode(str, enum.Enum):
    SIZE = "size"
    POWER = "power"
    FIGURE1 = "figure1"
    TEST = "test"


@dataclass(frozen=True)
class MCConfig:
    lam: float = 1.5
    estimator: Estimator = Estimator.ML
    n: int = 2000
    reps: int = 10_000
    alpha: float = 0.05
    seed: int = 0
    delta_grid: tuple[tuple[float, float], ...] = ((0.0, 0.0),)
    mode: Mode = Mode.SIZE
    mu0: float = 0.0
    sigma0: float = 1.0
    nuisance_delta: tuple[float, float] = (0.0, 0.0)
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "estimator", Estimator.parse(self.estimator))
        object.__setattr__(self, "mode", Mode(self.mode))
        grid = tuple((float(a), float(b)) for a, b in self.delta_grid)
        object.__setattr__(self, "delta_grid", grid)
        object.__setattr__(self, "nuisance_delta", tuple(float(v) for v in self.nuisance_delta))
        if int(self.reps) != self.reps or self.reps < 1:
            raise DomainError(f"reps must be a positive integer, got {self.reps!r}")
        if int(self.n) != self.n or self.n < 2:
            raise DomainError(f"n must be an integer >= 2, got {self.n!r}")
        if not 0 <= int(self.seed) < 2**64:
            raise DomainError(f"seed must be a 64-bit unsigned integer, got {self.seed!r}")
        if self.workers < 1:
            raise DomainError("workers must be >= 1")
        if self.mode in (Mode.POWER, Mode.FIGURE1) and not grid:
            raise DomainError(f"{self.mode.value} mode needs a non-empty delta grid")
        # validates lambda and alpha
        self.test_config()

    def test_config(self) -> EPDTestConfig:
        return EPDTestConfig(self.lam, self.estimator, self.alpha)

    def echo(self) -> dict:
        out = asdict(self)
        out["estimator"] = self.estimator.value
        out["mode"] = self.mode.value
        out["delta_grid"] = [list(p) for p in self.delta_grid]
        out["nuisance_delta"] = list(self.nuisance_delta)
        del out["workers"]  # outputs must not depend on it
        return out


@dataclass(frozen=True)
class MCReport:
    rejection_rate: float
    mc_stderr: float
    predicted_power: float
    reps: int
    rejections: int
    delta1: float
    delta2: float
    seed: int
    config: dict = field(default_factory=dict)

    @property
    def gap(self) -> float:
        """|empirical - predicted|, reported rather than asserted."""
        return abs(self.rejection_rate - self.predicted_power)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["gap"] = self.gap
        return out


@dataclass(frozen=True)
class Replications:
    """Per-replication statistics and U_n vectors, in replication order."""

    statistics: np.ndarray
    u_n: np.ndarray
    n: int

    def standardized(self, sigma: np.ndarray) -> np.ndarray:
        """sqrt(n) Sigma^{-1/2} U_n for each replication (Sigma diagonal or not)."""
        low = np.linalg.cholesky(sigma)
        return math.sqrt(self.n) * np.linalg.solve(low, self.u_n.T).T


def replication_rng(seed: int, index: int) -> np.random.Generator:
    """Independent stream for replication ``index`` under master ``seed``."""
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(index),))
    return np.random.Generator(np.random.Philox(ss))


def alternative_theta(config: MCConfig, delta1: float = 0.0, delta2: float = 0.0) -> ParamVector:
    """theta_n = theta_0 + (delta1, delta2, delta3, sigma0 delta4) / sqrt(n)."""
    root = math.sqrt(config.n)
    d3, d4 = config.nuisance_delta
    return ParamVector(
        0.5 + delta1 / root,
        config.lam + delta2 / root,
        config.mu0 + d3 / root,
        config.sigma0 * (1.0 + d4 / root),
        config.lam,
    )


def _run_chunk(args):
    config, theta, start, stop = args
    test_config = config.test_config()
    stats = np.empty(stop - start)
    u = np.empty((stop - start, 2))
    for k, r in enumerate(range(start, stop)):
        x = apd_sample(theta, replication_rng(config.seed, r), config.n)
        try:
            res = run_epd_test(x, test_config)
        except ParseError:
            raise
        except UstatError as exc:
            raise type(exc)(f"replication (seed={config.seed}, index={r}) failed: {exc}") from exc
        stats[k] = res.statistic
        u[k] = res.u_n
    return stats, u


def _chunks(reps: int, workers: int):
    size = max(1, math.ceil(reps / (4 * workers)))
    return [(s, min(reps, s + size)) for s in range(0, reps, size)]


def simulate(config: MCConfig, delta1: float = 0.0, delta2: float = 0.0) -> Replications:
    """Run ``config.reps`` replications under the (local) alternative."""
    theta = alternative_theta(config, delta1, delta2)
    jobs = [(config, theta, a, b) for a, b in _chunks(config.reps, config.workers)]
    if config.workers == 1:
        parts = [_run_chunk(job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            parts = list(pool.map(_run_chunk, jobs))
    stats = np.concatenate([p[0] for p in parts])
    u = np.concatenate([p[1] for p in parts])
    return Replications(stats, u, config.n)


def _report(config: MCConfig, reps: Replications, delta1: float, delta2: float) -> MCReport:
    crit = specfun.chi2_quantile(1.0 - config.alpha, 2)
    rejections = int(np.count_nonzero(reps.statistics > crit))
    rate = rejections / config.reps
    stderr = math.sqrt(rate * (1.0 - rate) / config.reps)
    predicted = epd_power_prediction(config.test_config(), delta1, delta2)
    return MCReport(
        rejection_rate=rate,
        mc_stderr=stderr,
        predicted_power=predicted,
        reps=config.reps,
        rejections=rejections,
        delta1=delta1,
        delta2=delta2,
        seed=int(config.seed),
        config=config.echo(),
    )


def run_size_experiment(config: MCConfig) -> MCReport:
    """Empirical rejection rate under EPD_lam(mu0, sigma0)."""
    if config.mode is not Mode.SIZE:
        raise DomainError("run_size_experiment needs mode SIZE")
    return _report(config, simulate(config), 0.0, 0.0)


def run_power_experiment(config: MCConfig) -> list[MCReport]:
    """Empirical and predicted power at each (delta1, delta2) of the grid."""
    if config.mode not in (Mode.POWER, Mode.FIGURE1):
        raise DomainError("run_power_experiment needs mode POWER")
    return [_report(config, simulate(config, d1, d2), d1, d2) for d1, d2 in config.delta_grid]


def figure1_grid() -> list[tuple[float, float]]:
    return [(d, 0.0) for d in FIGURE1_DELTA1] + [(0.0, d) for d in FIGURE1_DELTA2]


def figure1_rows(config: MCConfig, empirical: bool = False) -> list[dict]:
    """Power curves over delta1 in [0, 3.5] (delta2 = 0) and delta2 in [0, 18] (delta1 = 0)."""
    rows = []
    for est in (Estimator.ML, Estimator.MOM):
        cfg = MCConfig(
            lam=config.lam, estimator=est, n=config.n, reps=config.reps, alpha=config.alpha,
            seed=config.seed, delta_grid=figure1_grid(), mode=Mode.FIGURE1,
            mu0=config.mu0, sigma0=config.sigma0, workers=config.workers,
        )
        for d1, d2 in cfg.delta_grid:
            row = {
                "delta1": d1,
                "delta2": d2,
                "estimator": est.value,
                "predicted_power": epd_power_prediction(cfg.test_config(), d1, d2),
                "empirical_power": None,
                "mc_stderr": None,
            }
            if empirical:
                rep = _report(cfg, simulate(cfg, d1, d2), d1, d2)
                row["empirical_power"] = rep.rejection_rate
                row["mc_stderr"] = rep.mc_stderr
            rows.append(row)
    return rows


def report_rows(reports: list[MCReport], estimator) -> list[dict]:
    est = Estimator.parse(estimator).value
    return [
        {
            "delta1": r.delta1,
            "delta2": r.delta2,
            "estimator": est,
            "predicted_power": r.predicted_power,
            "empirical_power": r.rejection_rate,
            "mc_stderr": r.mc_stderr,
        }
        for r in reports
    ]


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    return format(float(value), ".17g")


def write_csv(rows: list[dict], stream) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for row in rows:
        writer.writerow([_fmt(row[k]) for k in CSV_HEADER])


def emit_figure1(config: MCConfig, path, empirical: bool = False) -> list[dict]:
    """Write the figure-1 power curves to ``path`` as CSV and return the rows."""
    rows = figure1_rows(config, empirical)
    buf = io.StringIO()
    write_csv(rows, buf)
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(buf.getvalue())
    except OSError as exc:
        raise OSError(f"cannot write {os.fspath(path)}: {exc.strerror or exc}") from exc
    return rows


def read_observations(path) -> np.ndarray:
    """One decimal number per line; blank lines and lines starting with '#' are skipped."""
    values = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            try:
                # float() is locale independent and accepts only '.' decimals
                value = float(line)
            except ValueError:
                raise ParseError(f"not a number: {line!r}", line=lineno, path=path) from None
            if not math.isfinite(value):
                raise ParseError(f"non-finite value: {line!r}", line=lineno, path=path)
            values.append(value)
    if not values:
        raise ParseError("no observations found", path=path)
    return np.array(values)


def run_data_test(path, config: EPDTestConfig) -> TestResult:
    return run_epd_test(read_observations(path), config)


def format_test_result(result: TestResult, config: EPDTestConfig) -> str:
    th = result.theta_hat
    decision = "reject" if result.reject(config.alpha) else "do not reject"
    lines = [
        f"statistic: {_fmt(result.statistic)}",
        f"df: {result.df}",
        f"p_value: {_fmt(result.p_value)}",
        f"critical_value: {_fmt(specfun.chi2_quantile(1.0 - config.alpha, result.df))}",
        f"mu_hat: {_fmt(th.mu)}",
        f"sigma_hat: {_fmt(th.sigma)}",
        f"lambda: {_fmt(config.lam)}",
        f"estimator: {config.estimator.value}",
        f"alpha: {_fmt(config.alpha)}",
        f"decision: {decision} H0",
    ]
    return "\n".join(lines)


def report_json(report: MCReport) -> str:
    return json.dumps(report.to_dict(), sort_keys=True)
