"""Scenario runner: verification overlays, downlink sweeps, SINR
heatmaps and the multi-user uplink comparison, emitting CSV/JSON tables.

Exit codes: 0 success, 2 configuration error, 3 verification failure,
4 unsupported channel regime.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .channel import beta_for_tau_rms, exp_pdp, time_corr
from .errors import (
    ConfigurationError,
    DispersiveSinrError,
    UnsupportedRegimeError,
    VerificationError,
)
from .montecarlo import SimSpec, simulate
from .scenarios import ScenarioFile, load_scenario
from .sinr import DownlinkEngine, PowerBreakdown, sinr_report, uplink_compose
from .waveform import WaveformKind

__all__ = ["ResultTable", "main", "run_command"]

COLUMNS = (
    "scenario", "command", "series", "waveform", "user",
    "tau_rms", "fdts", "subcarrier",
    "p_signal", "p_ici", "p_isi", "sinr_db", "capacity_bpcu",
)

WAVEFORM_ORDER = (WaveformKind.CP, WaveformKind.ZP, WaveformKind.UF)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_VERIFY = 3
EXIT_REGIME = 4


def _fmt(value) -> str:
    if value is None or value == "":
        return ""
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, float):
        return format(value, ".12g")
    return str(value)


@dataclass
class ResultTable:
    """Row-oriented result container with a fixed column schema."""

    metadata: dict
    rows: list = field(default_factory=list)

    def add(self, **cells):
        unknown = set(cells) - set(COLUMNS)
        if unknown:
            raise ValueError(f"unknown columns: {unknown}")
        cells.setdefault("scenario", self.metadata.get("scenario", ""))
        cells.setdefault("command", self.metadata.get("command", ""))
        self.rows.append(tuple(_fmt(cells.get(col, "")) for col in COLUMNS))

    def to_csv(self) -> str:
        lines = [f"# {key} = {self.metadata[key]}" for key in sorted(self.metadata)]
        lines.append(",".join(COLUMNS))
        lines.extend(",".join(row) for row in self.rows)
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        payload = {
            "metadata": self.metadata,
            "columns": list(COLUMNS),
            "rows": [list(row) for row in self.rows],
        }
        return json.dumps(payload, indent=1, sort_keys=True) + "\n"


def _metadata(scenario: ScenarioFile, command: str, seed) -> dict:
    return {
        "scenario": scenario.scenario_id,
        "command": command,
        "seed": "" if seed is None else str(seed),
        "version": __version__,
        "timestamp": datetime.now(timezone.utc).isoformat(),
    }


def _powers_db(values: np.ndarray) -> np.ndarray:
    return 10.0 * np.log10(np.maximum(values, 1e-30))


def run_verify(scenario: ScenarioFile, seed=None, workers: int = 1):
    """Analytic and Monte Carlo overlay for all three waveforms.

    Returns (table, summary, exit_code); exit 3 when any subcarrier
    power deviates beyond three standard errors of the simulation.
    """
    if scenario.channel is None:
        raise ConfigurationError("verify needs a [channel] section")
    cfg = scenario.cfg
    pdp = scenario.channel.pdp(cfg)
    tcorr = scenario.channel.tcorr(scenario.corr_lag())
    mc = scenario.montecarlo
    n_real = int(mc.get("n_realizations", 10000))
    if seed is None:
        seed = int(mc.get("seed", 0))
    qam_order = int(mc.get("qam_order", 4))
    fdts = scenario.channel.fd_ts()
    table = _metadata_table(scenario, "verify", seed)
    worst = 0.0
    max_dev_db = {"p_signal": 0.0, "p_ici": 0.0, "p_isi": 0.0}
    for kind in WAVEFORM_ORDER:
        pb = DownlinkEngine(cfg, kind).powers(pdp, tcorr)
        emp = simulate(SimSpec(cfg, kind, pdp, tcorr, n_real, seed=seed,
                               qam_order=qam_order))
        rep = sinr_report(pb)
        common = dict(waveform=kind.value, tau_rms=pdp.rms_delay, fdts=fdts)
        analytic = (pb.p_signal, pb.p_ici, pb.p_isi)
        empirical = (emp.p_signal, emp.p_ici, emp.p_isi)
        errors = (emp.se_signal, emp.se_ici, emp.se_isi)
        for pos, k in enumerate(pb.subcarriers):
            table.add(series="analytic", subcarrier=k,
                      p_signal=pb.p_signal[pos], p_ici=pb.p_ici[pos],
                      p_isi=pb.p_isi[pos], sinr_db=rep.sinr_db[pos], **common)
            table.add(series="empirical", subcarrier=k,
                      p_signal=emp.p_signal[pos], p_ici=emp.p_ici[pos],
                      p_isi=emp.p_isi[pos], **common)
            table.add(series="empirical_se", subcarrier=k,
                      p_signal=emp.se_signal[pos], p_ici=emp.se_ici[pos],
                      p_isi=emp.se_isi[pos], **common)
        for name, ana, est, se in zip(max_dev_db, analytic, empirical, errors):
            dev = np.abs(ana - est)
            tol = np.maximum(3.0 * se, 1e-12)
            worst = max(worst, float((dev / tol).max()))
            both = (ana > 1e-14) & (est > 1e-14)
            if both.any():
                dev_db = np.abs(_powers_db(ana[both]) - _powers_db(est[both]))
                max_dev_db[name] = max(max_dev_db[name], float(dev_db.max()))
    summary = {
        "max_sigma_ratio": worst,
        "max_dev_db": max_dev_db,
        "n_realizations": n_real,
    }
    code = EXIT_OK if worst <= 1.0 else EXIT_VERIFY
    return table, summary, code


def _metadata_table(scenario, command, seed) -> ResultTable:
    return ResultTable(_metadata(scenario, command, seed))


def _sweep_channel(scenario: ScenarioFile, axis: str, value: float):
    """Profile and time correlation at one sweep point."""
    chan = scenario.channel
    if chan is None:
        raise ConfigurationError("sweep needs a [channel] section")
    cfg = scenario.cfg
    lag = scenario.corr_lag()
    if axis == "delay":
        n_taps = int(chan.options.get("n_taps", 1))
        stretch = int(chan.options.get("stretch", 1))
        beta = beta_for_tau_rms(float(value), n_taps, stretch)
        pdp = exp_pdp(beta, n_taps, stretch, max_delay=cfg.n - cfg.cp_len)
        return pdp, chan.tcorr(lag)
    pdp = chan.pdp(cfg)
    if value == 0.0:
        return pdp, time_corr("static", lag)
    return pdp, time_corr("jakes", lag, fd_ts=float(value))


def _mean_rows(table, kind, pdp, fdts, pb: PowerBreakdown, series="analytic",
               user=""):
    rep = sinr_report(pb)
    table.add(series=series, waveform=kind.value, user=user,
              tau_rms=pdp.rms_delay, fdts=fdts, subcarrier="",
              p_signal=pb.p_signal.mean(), p_ici=pb.p_ici.mean(),
              p_isi=pb.p_isi.mean(), sinr_db=rep.mean_sinr_db,
              capacity_bpcu=rep.capacity_bpcu)
    return rep


def run_sweep(scenario: ScenarioFile, seed=None, workers: int = 1):
    """Mean SINR per waveform along the delay or Doppler axis; marks
    UF/CP crossover points in the summary."""
    if not scenario.sweep:
        raise ConfigurationError("scenario has no [sweep] section")
    axis = scenario.sweep["axis"]
    values = scenario.sweep["values"]
    fixed_fdts = scenario.channel.fd_ts() if axis == "delay" else None
    table = _metadata_table(scenario, "sweep", seed)
    mean_sinr = {}

    def run_kind(kind):
        engine = DownlinkEngine(scenario.cfg, kind)
        rows = []
        for value in values:
            pdp, tcorr = _sweep_channel(scenario, axis, value)
            pb = engine.powers(pdp, tcorr)
            rows.append((value, pdp, tcorr.fd_ts, pb))
        return rows

    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        results = dict(zip(WAVEFORM_ORDER, pool.map(run_kind, WAVEFORM_ORDER)))
    for kind in WAVEFORM_ORDER:
        sinr_curve = []
        for value, pdp, fdts, pb in results[kind]:
            rep = _mean_rows(table, kind, pdp,
                             fixed_fdts if axis == "delay" else fdts, pb)
            sinr_curve.append(rep.mean_sinr_db)
        mean_sinr[kind.value] = np.array(sinr_curve)
    crossovers = {}
    for other in ("cp", "zp"):
        diff = mean_sinr["uf"] - mean_sinr[other]
        signs = np.sign(diff)
        flips = np.nonzero(np.diff(signs) != 0)[0]
        crossovers[f"uf_vs_{other}"] = [float(values[i]) for i in flips]
    summary = {"axis": axis, "mean_sinr_db": {k: v.tolist() for k, v in mean_sinr.items()},
               "crossovers": crossovers}
    return table, summary, EXIT_OK


def run_heatmap(scenario: ScenarioFile, seed=None, workers: int = 1):
    """Mean SINR grid per waveform over (tau_rms, fdts)."""
    if not scenario.heatmap:
        raise ConfigurationError("scenario has no [heatmap] section")
    taus = scenario.heatmap["tau_rms"]
    fdts_values = scenario.heatmap["fdts"]
    chan = scenario.channel
    if chan is None:
        raise ConfigurationError("heatmap needs a [channel] section")
    n_taps = int(chan.options.get("n_taps", 1))
    stretch = int(chan.options.get("stretch", 1))
    cfg = scenario.cfg
    lag = scenario.corr_lag()
    table = _metadata_table(scenario, "heatmap", seed)

    def run_kind(kind):
        engine = DownlinkEngine(cfg, kind)
        cells = []
        for fdts in fdts_values:  # fdts outer: reuses the Doppler cache
            tcorr = (time_corr("static", lag) if fdts == 0.0
                     else time_corr("jakes", lag, fd_ts=float(fdts)))
            for tau in taus:
                beta = beta_for_tau_rms(float(tau), n_taps, stretch)
                pdp = exp_pdp(beta, n_taps, stretch, max_delay=cfg.n - cfg.cp_len)
                cells.append((tau, fdts, pdp, engine.powers(pdp, tcorr)))
        return cells

    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        results = dict(zip(WAVEFORM_ORDER, pool.map(run_kind, WAVEFORM_ORDER)))
    grids = {}
    for kind in WAVEFORM_ORDER:
        grid = np.empty((fdts_values.size, taus.size))
        for idx, (tau, fdts, pdp, pb) in enumerate(results[kind]):
            rep = _mean_rows(table, kind, pdp, fdts, pb)
            grid[idx // taus.size, idx % taus.size] = rep.mean_sinr_db
        grids[kind.value] = grid.tolist()
    summary = {"tau_rms": taus.tolist(), "fdts": fdts_values.tolist(),
               "mean_sinr_db": grids}
    return table, summary, EXIT_OK


def run_uplink(scenario: ScenarioFile, seed=None, workers: int = 1):
    """Per-user SINR and capacity for every waveform family."""
    if len(scenario.users) < 1:
        raise ConfigurationError("uplink needs at least one [user.*] section")
    cfg = scenario.cfg
    users = scenario.uplink_users()
    fdts_by_user = {u.name: chan.fd_ts()
                    for (u, (_, _, chan)) in zip(users, scenario.users)}
    table = _metadata_table(scenario, "uplink", seed)
    capacities = {}
    mean_sinr = {}
    for kind in WAVEFORM_ORDER:
        reports = uplink_compose(cfg, kind, users)
        total = 0.0
        for user, pb in reports:
            rep = sinr_report(pb)
            fdts = fdts_by_user[user.name]
            for pos, k in enumerate(pb.subcarriers):
                table.add(series="analytic", waveform=kind.value, user=user.name,
                          tau_rms=user.pdp.rms_delay, fdts=fdts, subcarrier=k,
                          p_signal=pb.p_signal[pos], p_ici=pb.p_ici[pos],
                          p_isi=pb.p_isi[pos], sinr_db=rep.sinr_db[pos])
            _mean_rows(table, kind, user.pdp, fdts, pb, series="summary",
                       user=user.name)
            capacities[(kind.value, user.name)] = rep.capacity_bpcu
            mean_sinr[(kind.value, user.name)] = rep.mean_sinr_db
            total += rep.capacity_bpcu
        table.add(series="summary", waveform=kind.value, user="sum",
                  capacity_bpcu=total)
        capacities[(kind.value, "sum")] = total
    summary = {
        "capacity_bpcu": {f"{k}/{u}": v for (k, u), v in capacities.items()},
        "mean_sinr_db": {f"{k}/{u}": v for (k, u), v in mean_sinr.items()},
    }
    return table, summary, EXIT_OK


_COMMANDS = {
    "verify": run_verify,
    "sweep": run_sweep,
    "heatmap": run_heatmap,
    "uplink": run_uplink,
}


def run_command(command: str, scenario: ScenarioFile, seed=None, workers: int = 1):
    """Dispatch one CLI command; returns (table, summary, exit_code)."""
    if command not in _COMMANDS:
        raise ConfigurationError(f"unknown command {command!r}")
    return _COMMANDS[command](scenario, seed=seed, workers=workers)


def _write_outputs(table: ResultTable, scenario_id: str, command: str,
                   out_dir: Path, formats) -> list[Path]:
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    stem = f"{scenario_id}_{command}"
    if "csv" in formats:
        path = out_dir / f"{stem}.csv"
        path.write_text(table.to_csv())
        written.append(path)
    if "json" in formats:
        path = out_dir / f"{stem}.json"
        path.write_text(table.to_json())
        written.append(path)
    return written


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="dispersive-sinr",
        description="Closed-form multicarrier SINR analysis over doubly "
                    "dispersive channels, with Monte Carlo verification.",
    )
    parser.add_argument("command", choices=sorted(_COMMANDS))
    parser.add_argument("--scenario", required=True,
                        help="scenario file path or bundled scenario name")
    parser.add_argument("--seed", type=int, default=None,
                        help="override the scenario's Monte Carlo seed")
    parser.add_argument("--out", default=".", help="output directory")
    parser.add_argument("--format", choices=("csv", "json", "both"), default=None,
                        help="output format (default: scenario [output] or csv)")
    parser.add_argument("--workers", type=int, default=1,
                        help="worker threads for sweep/heatmap waveforms")
    args = parser.parse_args(argv)

    try:
        scenario = load_scenario(args.scenario)
        table, summary, code = run_command(args.command, scenario,
                                           seed=args.seed, workers=args.workers)
    except (ConfigurationError,) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except UnsupportedRegimeError as exc:
        print(f"unsupported regime: {exc}", file=sys.stderr)
        return EXIT_REGIME
    except VerificationError as exc:
        print(f"verification failure: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    except DispersiveSinrError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    if args.format is None:
        formats = [f.strip() for f in scenario.output.get("formats", "csv").split(",")]
    elif args.format == "both":
        formats = ["csv", "json"]
    else:
        formats = [args.format]
    written = _write_outputs(table, scenario.scenario_id, args.command,
                             Path(args.out), formats)
    print(json.dumps({"summary": summary}, indent=1, sort_keys=True, default=str))
    for path in written:
        print(f"wrote {path}")
    if code == EXIT_VERIFY:
        print("verification FAILED: deviation beyond 3 standard errors",
              file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
