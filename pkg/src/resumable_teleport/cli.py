"""Batch front-end: verify, Monte Carlo and b0^2 sweeps.

Examples::

    python -m resumable_teleport --mode verify --dim 3 --schmidt b0sq=0.1666666667
    python -m resumable_teleport --mode montecarlo --dim 3 --schmidt 1,1.4142,1.7321 \\
        --trials 10000 --seed 7 --output mc.csv
    python -m resumable_teleport --mode sweep --dim 4 --sweep 0:1/N:0.05 --format csv

A config file holds one ``key = value`` per line, keys named like the long
flags (``dim``, ``schmidt``, ``mode`` ...). Flags given on the command line win.
If ``--output`` is not given and ``RESUMABLE_TELEPORT_OUTPUT_DIR`` is set, the
result goes to ``<dir>/<mode>.<ext>``; otherwise it is written to stdout.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
import time
from dataclasses import dataclass, field, fields
from fractions import Fraction
from pathlib import Path
from typing import Optional

import numpy as np

from . import oracle, protocol
from .core import NORM_TOL, ConsistencyError, outcome_distribution, postselect, tensor
from .gates import ChannelSpec, filter_d21
from .protocol import InputState

log = logging.getLogger("resumable_teleport")

OUTPUT_DIR_ENV = "RESUMABLE_TELEPORT_OUTPUT_DIR"
MODES = ("verify", "montecarlo", "sweep")
FORMATS = ("csv", "jsonl")
EXTENSIONS = {"csv": "csv", "jsonl": "jsonl"}
DEFAULT_SWEEP = "0:1/N:0.05"


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    mode: str
    dim: int
    channel: Optional[ChannelSpec]
    input: Optional[InputState]
    seed: int = 0
    trials: int = 1000
    max_attempts: int = 50
    sweep: list[float] = field(default_factory=list)
    output: Optional[Path] = None
    format: str = "csv"
    timing: bool = False
    transcripts: Optional[Path] = None


@dataclass
class ResultRow:
    N: int
    b0_squared: float
    analytic_p_success: float
    empirical_p_success: float
    trials: int
    mean_attempts: float
    min_fidelity_success: float
    min_fidelity_recovery: float
    wall_time_ms: Optional[float]


RESULT_COLUMNS = tuple(f.name for f in fields(ResultRow))
VERIFY_COLUMNS = ("property", "passed", "value", "tolerance", "seed")


# ---- parsing -----------------------------------------------------------


def _parse_number_list(text: str, what: str, kind=float) -> list:
    out = []
    for pos, item in enumerate(text.split(","), start=1):
        item = item.strip()
        try:
            out.append(kind(item.replace(" ", "")))
        except ValueError:
            raise ConfigError(f"{what}: item {pos} ({item!r}) is not a valid number") from None
    return out


def _parse_fraction(text: str, dim: int) -> float:
    text = text.strip().replace("1/N", f"1/{dim}")
    try:
        return float(Fraction(text)) if "/" in text else float(text)
    except (ValueError, ZeroDivisionError):
        raise ConfigError(f"not a number: {text!r}") from None


def parse_channel(text: str, dim: Optional[int]) -> ChannelSpec:
    """``maximal``, ``b0sq=<x>`` or a comma list of Schmidt coefficients."""
    text = text.strip()
    if text == "maximal":
        if dim is None:
            raise ConfigError("schmidt=maximal needs --dim")
        return ChannelSpec.maximal(dim)
    if text.startswith("b0sq="):
        if dim is None:
            raise ConfigError("schmidt=b0sq=... needs --dim")
        x = _parse_fraction(text[5:], dim)
        try:
            return ChannelSpec.from_b0_squared(dim, x)
        except ValueError as e:
            raise ConfigError(f"schmidt: {e}") from None
    coeffs = _parse_number_list(text, "schmidt")
    for pos, c in enumerate(coeffs, start=1):
        if c < 0:
            raise ConfigError(f"schmidt: item {pos} ({c}) is negative")
    if dim is not None and len(coeffs) != dim:
        raise ConfigError(f"schmidt: {len(coeffs)} coefficients given for dim {dim}")
    if len(coeffs) < 2:
        raise ConfigError("schmidt: need at least 2 coefficients")
    arr = np.asarray(coeffs, dtype=float)
    if not np.all(np.diff(arr) >= 0):
        log.warning("Schmidt coefficients sorted ascending: %s", sorted(coeffs))
    if abs(float(np.sum(arr**2)) - 1.0) > 1e-12:
        log.warning("Schmidt coefficients normalized (sum of squares was %.6g)", np.sum(arr**2))
    try:
        return ChannelSpec.from_coefficients(arr)
    except ValueError as e:
        raise ConfigError(f"schmidt: {e}") from None


def parse_sweep(text: str, dim: int) -> list[float]:
    """``start:stop:step`` (stop inclusive, ``1/N`` allowed) or a comma list of b0^2 values."""
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ConfigError(f"sweep: expected start:stop:step, got {text!r}")
        start, stop, step = (_parse_fraction(p, dim) for p in parts)
        if step <= 0:
            raise ConfigError("sweep: step must be positive")
        count = int(math.floor((stop - start) / step + 1e-9)) + 1
        grid = [start + i * step for i in range(max(count, 0))]
        if grid and stop - grid[-1] > 1e-12:
            grid.append(stop)
    else:
        grid = [_parse_fraction(p, dim) for p in text.split(",") if p.strip()]
    if not grid:
        raise ConfigError("sweep grid is empty")
    for x in grid:
        if not -1e-12 <= x <= 1 / dim + 1e-12:
            raise ConfigError(f"sweep: b0^2 = {x} outside [0, 1/{dim}]")
    return [round(min(max(x, 0.0), 1 / dim), 12) for x in grid]


def read_config_file(path: str) -> dict[str, str]:
    out = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key = value")
            key, value = line.split("=", 1)
            out[key.strip().replace("-", "_")] = value.strip()
    return out


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="resumable-teleport",
        description="Simulate resumable probabilistic qudit teleportation.",
    )
    p.add_argument("--config", help="flat key = value file; flags override it")
    p.add_argument("--mode", choices=MODES)
    p.add_argument("--dim", help="qudit dimension N >= 2")
    p.add_argument("--schmidt", help="coefficient list, 'maximal' or 'b0sq=<x>'")
    p.add_argument("--input", help="amplitude list (complex allowed, e.g. 0.6,0.8j) or 'random'")
    p.add_argument("--seed")
    p.add_argument("--trials", help="resumable runs per Monte Carlo batch")
    p.add_argument("--max-attempts", dest="max_attempts")
    p.add_argument("--sweep", help=f"b0^2 grid, default {DEFAULT_SWEEP}")
    p.add_argument("--output")
    p.add_argument("--format", choices=FORMATS)
    p.add_argument("--timing", action="store_true", default=None,
                   help="fill wall_time_ms (makes output non-reproducible)")
    p.add_argument("--transcripts", help="JSON-lines dump of the final transcript of every run (montecarlo mode)")
    return p


def _int(value, name: str, minimum: int) -> int:
    try:
        v = int(str(value).strip())
    except ValueError:
        raise ConfigError(f"{name}: {value!r} is not an integer") from None
    if v < minimum:
        raise ConfigError(f"{name} must be >= {minimum}, got {v}")
    return v


def _truthy(value) -> bool:
    return str(value).strip().lower() in ("1", "true", "yes", "on")


def parse_config(argv=None) -> RunConfig:
    args = build_parser().parse_args(argv)
    raw: dict[str, str] = {}
    if args.config:
        raw.update(read_config_file(args.config))
    raw.update({k: v for k, v in vars(args).items() if v is not None and k != "config"})

    mode = raw.get("mode", "verify")
    if mode not in MODES:
        raise ConfigError(f"mode must be one of {MODES}, got {mode!r}")
    fmt = raw.get("format", "csv")
    if fmt not in FORMATS:
        raise ConfigError(f"format must be one of {FORMATS}, got {fmt!r}")

    dim = _int(raw["dim"], "dim", 2) if "dim" in raw else None
    channel = None
    if "schmidt" in raw:
        channel = parse_channel(raw["schmidt"], dim)
        dim = channel.level_count
    elif mode != "sweep":
        if dim is None:
            raise ConfigError("need --dim or --schmidt")
        channel = ChannelSpec.maximal(dim)
    if dim is None:
        raise ConfigError("need --dim")

    seed = _int(raw.get("seed", 0), "seed", 0)
    input_text = raw.get("input", "random").strip()
    if input_text == "random":
        payload = InputState.random(dim, np.random.default_rng([seed, 1]))
    else:
        amps = _parse_number_list(input_text, "input", complex)
        if len(amps) != dim:
            raise ConfigError(f"input: {len(amps)} amplitudes given for dim {dim}")
        if np.linalg.norm(amps) == 0:
            raise ConfigError("input: all amplitudes are zero")
        payload = InputState.from_amplitudes(amps)

    sweep = []
    if mode == "sweep":
        sweep = parse_sweep(raw.get("sweep", DEFAULT_SWEEP), dim)

    output = raw.get("output")
    if output is None and os.environ.get(OUTPUT_DIR_ENV):
        output = os.path.join(os.environ[OUTPUT_DIR_ENV], f"{mode}.{EXTENSIONS[fmt]}")

    return RunConfig(
        mode=mode,
        dim=dim,
        channel=channel,
        input=payload,
        seed=seed,
        trials=_int(raw.get("trials", 1000), "trials", 1),
        max_attempts=_int(raw.get("max_attempts", 50), "max_attempts", 1),
        sweep=sweep,
        output=Path(output) if output else None,
        format=fmt,
        timing=_truthy(raw.get("timing", False)),
        transcripts=Path(raw["transcripts"]) if raw.get("transcripts") else None,
    )


# ---- running -----------------------------------------------------------


@dataclass
class Check:
    name: str
    passed: bool
    value: float
    tolerance: float
    seed: Optional[int] = None


def _check(name, value, tol, seed=None) -> Check:
    return Check(name, bool(value <= tol), float(value), tol, seed)


def verify_checks(payload: InputState, channel: ChannelSpec, seed: int, trials: int) -> list[Check]:
    """Every protocol property at one ``(N, channel, input)`` point."""
    n = channel.level_count
    b = channel.schmidt
    p_expected = n * channel.b0**2
    delta = protocol.alice_stages(protocol.prepare_total(payload, channel), channel)["delta"]
    p_s, p_f = protocol.flag_probabilities(delta)
    checks = [
        _check("flag_probability_law", abs(p_s - p_expected), 1e-9),
        _check("flag_probabilities_sum", abs(p_s + p_f - 1), NORM_TOL),
        _check("delta_norm", abs(delta.norm - 1), NORM_TOL),
        _check(
            "ancilla_support",
            sum(p for d, p in outcome_distribution(delta, 0) if d >= 2),
            1e-12,
        ),
    ]

    recon = oracle.reconstruct_total(payload, channel)
    direct = tensor(payload.state(), channel.state())
    checks.append(_check("total_state_reconstruction", np.max(np.abs(recon.amplitudes - direct.amplitudes)), 1e-12))

    table = oracle.enumerate_outcomes(payload, channel)
    piped = oracle.branch_table(delta.tensor_view())
    checks.append(_check("oracle_table_total", abs(table.total - 1), 1e-9))
    checks.append(_check(
        "oracle_pipeline_agreement",
        max(abs(p - piped.as_dict()[k]) for k, p in table.as_dict().items()),
        1e-9,
    ))
    success_cells = [r.probability for r in table.rows if r.flag == 0]
    checks.append(_check("success_cells_uniform", max(abs(c - channel.b0**2 / n) for c in success_cells), NORM_TOL))
    fail_err = max(
        (abs(table.probability(1, (j,)) - (b[j] ** 2 - channel.b0**2)) for j in range(1, n)),
        default=0.0,
    )
    checks.append(_check("failure_cell_law", fail_err, NORM_TOL))

    worst_success = 0.0
    if p_s > 1e-12:
        _, s0 = postselect(delta, 0, 0)
        for m in range(n):
            for k in range(n):
                br = protocol.success_branch(s0, m, k, payload)
                worst_success = max(worst_success, 1 - br.fidelity)
    checks.append(_check("success_fidelity_all_branches", worst_success, NORM_TOL))
    worst_recovery = 0.0
    if p_f > 1e-12:
        _, s1 = postselect(delta, 0, 1)
        for j in range(1, n):
            if b[j] ** 2 - channel.b0**2 > 1e-12:
                br = protocol.failure_branch(s1, j, payload)
                worst_recovery = max(worst_recovery, 1 - br.fidelity)
    checks.append(_check("recovery_fidelity_all_branches", worst_recovery, NORM_TOL))

    d21 = filter_d21(channel)
    expect_unitary = not (0 < channel.b0 < b[-1])
    checks.append(Check(
        "filter_unitarity_as_expected",
        d21.unitary_within(1e-12) == expect_unitary,
        d21.unitarity_deviation(),
        1e-12 if expect_unitary else 1e-6,
    ))

    a = protocol.run_attempt(payload, channel, seed).to_record()
    b_rec = protocol.run_attempt(payload, channel, seed).to_record()
    checks.append(Check("seed_determinism", a == b_rec, 0.0, 0.0, seed))

    successes = 0
    worst, worst_seed = 0.0, seed
    for t in range(trials):
        tr = protocol.run_attempt(payload, channel, seed + t)
        successes += tr.succeeded
        if 1 - tr.fidelity > worst:
            worst, worst_seed = 1 - tr.fidelity, seed + t
    checks.append(_check("sampled_fidelity", worst, NORM_TOL, worst_seed))
    sigma = math.sqrt(max(p_expected * (1 - p_expected), 1e-300) / trials)
    checks.append(Check(
        "sampled_success_rate_5sigma",
        abs(successes / trials - p_expected) <= 5 * sigma + 1e-12,
        successes / trials,
        5 * sigma,
        seed,
    ))
    return checks


def result_row(config: RunConfig, channel: ChannelSpec) -> ResultRow:
    start = time.perf_counter()
    stats = protocol.monte_carlo(config.input, channel, config.trials, config.seed, config.max_attempts)
    elapsed = (time.perf_counter() - start) * 1e3
    return ResultRow(
        N=channel.level_count,
        b0_squared=round(channel.b0**2, 12),
        analytic_p_success=channel.success_probability,
        empirical_p_success=stats.empirical_success_rate,
        trials=config.trials,
        mean_attempts=stats.mean_attempts_to_success,
        min_fidelity_success=stats.min_fidelity_success,
        min_fidelity_recovery=stats.min_fidelity_recovery,
        wall_time_ms=elapsed if config.timing else None,
    )


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _json_value(v):
    if isinstance(v, float) and not math.isfinite(v):
        return None
    return v


def render(rows: list[dict], columns: tuple[str, ...], fmt: str) -> str:
    buf = io.StringIO()
    if fmt == "csv":
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_fmt(r[c]) for c in columns])
    else:
        for r in rows:
            buf.write(json.dumps({c: _json_value(r[c]) for c in columns}) + "\n")
    return buf.getvalue()


def _write(text: str, output: Optional[Path]):
    if output is None:
        sys.stdout.write(text)
        return
    output.parent.mkdir(parents=True, exist_ok=True)
    output.write_text(text)


def dump_transcripts(config: RunConfig, channel: ChannelSpec, path: Path):
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w") as fh:
        for r in range(config.trials):
            base = config.seed + r * config.max_attempts
            _, t = protocol.run_resumable(config.input, channel, config.max_attempts, base)
            rec = t.to_record()
            rec["run"] = r
            fh.write(json.dumps(rec) + "\n")


def run(config: RunConfig) -> int:
    """Execute a validated config; returns the process exit code."""
    try:
        if config.mode == "verify":
            checks = verify_checks(config.input, config.channel, config.seed, min(config.trials, 2000))
            rows = [
                {"property": c.name, "passed": c.passed, "value": c.value,
                 "tolerance": c.tolerance, "seed": c.seed}
                for c in checks
            ]
            _write(render(rows, VERIFY_COLUMNS, config.format), config.output)
            log.info("analytic p_success = %.12g", config.channel.success_probability)
            failed = [c for c in checks if not c.passed]
            for c in failed:
                print(f"FAILED {c.name}: value={c.value!r} tol={c.tolerance} seed={c.seed}", file=sys.stderr)
            return 1 if failed else 0

        if config.mode == "montecarlo":
            row = result_row(config, config.channel)
            _write(render([vars(row)], RESULT_COLUMNS, config.format), config.output)
            if config.transcripts:
                dump_transcripts(config, config.channel, config.transcripts)
            return 0

        rows = []
        for x in config.sweep:
            ch = ChannelSpec.from_b0_squared(config.dim, x)
            rows.append(vars(result_row(config, ch)))
        _write(render(rows, RESULT_COLUMNS, config.format), config.output)
        return 0
    except OSError as e:
        print(f"I/O error: {e}", file=sys.stderr)
        return 2
    except ConsistencyError as e:
        print(f"invariant violated: {e} (seed {config.seed})", file=sys.stderr)
        return 1


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        config = parse_config(argv)
    except (ConfigError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    return run(config)


if __name__ == "__main__":
    sys.exit(main())
