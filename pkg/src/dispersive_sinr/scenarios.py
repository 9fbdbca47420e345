"""Scenario files: INI sections describing system, channel, sweeps and
uplink users.  Shipped reference scenarios live in ``data/scenarios``
and can be addressed by bare name from the CLI.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .channel import (
    PowerDelayProfile,
    TimeCorr,
    beta_for_tau_rms,
    exp_pdp,
    speed_to_fdts,
    time_corr,
    vehb_pdp,
)
from .errors import ConfigurationError, UnsupportedRegimeError
from .sinr import UplinkUser
from .waveform import SystemConfig

__all__ = ["ChannelSpec", "ScenarioFile", "load_scenario", "bundled_scenario_path"]


def bundled_scenario_path(name: str) -> Path:
    """Path of a shipped scenario by bare name (without extension)."""
    res = resources.files("dispersive_sinr").joinpath("data").joinpath("scenarios")
    path = Path(str(res.joinpath(f"{name}.ini")))
    if not path.is_file():
        raise ConfigurationError(f"no bundled scenario named {name!r}")
    return path


def _floats(text: str) -> list[float]:
    vals = [float(tok) for tok in text.replace(",", " ").split()]
    if not vals:
        raise ConfigurationError("empty value list")
    return vals


def _subband_range(text: str) -> tuple:
    out: list[int] = []
    for tok in text.replace(",", " ").split():
        if "-" in tok:
            lo, hi = tok.split("-", 1)
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(tok))
    return tuple(out)


@dataclass
class ChannelSpec:
    """Raw channel description; resolve to a profile and time correlation
    once the system dimensions are known."""

    options: dict

    def pdp(self, cfg: SystemConfig) -> PowerDelayProfile:
        opts = self.options
        kind = opts.get("pdp", "exp").lower()
        max_delay = cfg.n - cfg.cp_len
        if kind == "exp":
            n_taps = int(opts.get("n_taps", 1))
            stretch = int(opts.get("stretch", 1))
            if "beta" in opts:
                beta = float(opts["beta"])
            elif "tau_rms" in opts:
                beta = beta_for_tau_rms(float(opts["tau_rms"]), n_taps, stretch)
            else:
                raise ConfigurationError("exp pdp needs beta or tau_rms")
            return exp_pdp(beta, n_taps, stretch, max_delay=max_delay)
        if kind == "vehb":
            pdp = vehb_pdp(float(opts.get("sample_rate_scaling", 1.0)),
                           data_file=opts.get("data_file"))
            if pdp.max_delay > max_delay:
                raise UnsupportedRegimeError(
                    f"Vehicular-B span {pdp.max_delay} exceeds N - L = {max_delay}"
                )
            return pdp
        raise ConfigurationError(f"unknown pdp kind: {kind!r}")

    def fd_ts(self) -> float:
        opts = self.options
        if "doppler_fdts" in opts:
            return float(opts["doppler_fdts"])
        if "speed_kmh" in opts:
            try:
                return speed_to_fdts(float(opts["speed_kmh"]),
                                     float(opts["carrier_hz"]),
                                     float(opts["sample_rate_hz"]))
            except KeyError as missing:
                raise ConfigurationError(
                    f"speed_kmh needs carrier_hz and sample_rate_hz ({missing})"
                ) from None
        raise ConfigurationError("channel needs doppler_fdts or speed_kmh triple")

    def tcorr(self, max_lag: int) -> TimeCorr:
        fd_ts = self.fd_ts()
        if fd_ts == 0.0:
            return time_corr("static", max_lag)
        return time_corr("jakes", max_lag, fd_ts=fd_ts)


@dataclass
class ScenarioFile:
    """Parsed scenario: system config plus per-command sections."""

    scenario_id: str
    cfg: SystemConfig
    channel: ChannelSpec | None
    users: list[tuple[str, tuple, ChannelSpec]] = field(default_factory=list)
    sweep: dict = field(default_factory=dict)
    heatmap: dict = field(default_factory=dict)
    montecarlo: dict = field(default_factory=dict)
    output: dict = field(default_factory=dict)

    def corr_lag(self) -> int:
        """Lag depth that covers both the 2N analytics and the Monte
        Carlo span of two symbols."""
        return 2 * self.cfg.block_len

    def uplink_users(self) -> list[UplinkUser]:
        users = []
        for name, subbands, chan in self.users:
            users.append(UplinkUser(name, subbands, chan.pdp(self.cfg),
                                    chan.tcorr(self.corr_lag())))
        return users


def _build_config(section: dict) -> SystemConfig:
    n = int(section.get("n", 1024))
    cp_len = int(section.get("cp_len", 73))
    filter_len = int(section.get("filter_len", cp_len + 1))
    rb_size = int(section.get("n_rb", 12))
    if "subband_offsets" in section:
        offsets = tuple(int(x) for x in _floats(section["subband_offsets"]))
    elif "n_subbands" in section:
        m = int(section["n_subbands"])
        first = int(section.get("first_subband_offset", (n - m * rb_size) // 2))
        offsets = tuple(first + rb_size * b for b in range(m))
    else:
        offsets = None
    return SystemConfig(
        n=n, cp_len=cp_len, filter_len=filter_len, rb_size=rb_size,
        subband_offsets=offsets,
        noise_floor_db=float(section.get("noise_floor_db", -40.0)),
        filter_attenuation_db=float(section.get("filter_attenuation_db", 40.0)),
    )


def load_scenario(path) -> ScenarioFile:
    """Parse a scenario file (a filesystem path or bundled name)."""
    path = Path(path)
    if not path.is_file():
        path = bundled_scenario_path(str(path))
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        with open(path) as handle:
            parser.read_file(handle)
    except (OSError, configparser.Error) as exc:
        raise ConfigurationError(f"cannot parse scenario {path}: {exc}") from exc
    if "system" not in parser:
        raise ConfigurationError(f"scenario {path} lacks a [system] section")
    system = dict(parser["system"])
    cfg = _build_config(system)
    scenario_id = system.get("id", path.stem)

    channel = ChannelSpec(dict(parser["channel"])) if "channel" in parser else None

    users = []
    for name in parser.sections():
        if not name.startswith("user."):
            continue
        sec = dict(parser[name])
        if "subbands" not in sec:
            raise ConfigurationError(f"[{name}] needs a subbands entry")
        users.append((sec.get("name", name.split(".", 1)[1]),
                      _subband_range(sec["subbands"]), ChannelSpec(sec)))

    sweep: dict = {}
    if "sweep" in parser:
        sec = dict(parser["sweep"])
        axis = sec.get("axis", "").lower()
        if axis not in ("delay", "doppler"):
            raise ConfigurationError("sweep axis must be 'delay' or 'doppler'")
        values = np.array(_floats(sec["values"]))
        if values.size < 1 or np.any(np.diff(values) <= 0):
            raise ConfigurationError("sweep values must be non-empty and increasing")
        sweep = {"axis": axis, "values": values}

    heatmap: dict = {}
    if "heatmap" in parser:
        sec = dict(parser["heatmap"])
        heatmap = {
            "tau_rms": np.array(_floats(sec["tau_rms"])),
            "fdts": np.array(_floats(sec["fdts"])),
        }
        for key, vals in heatmap.items():
            if vals.size < 1 or np.any(np.diff(vals) <= 0):
                raise ConfigurationError(f"heatmap {key} values must be increasing")

    montecarlo = dict(parser["montecarlo"]) if "montecarlo" in parser else {}
    output = dict(parser["output"]) if "output" in parser else {}
    return ScenarioFile(
        scenario_id=scenario_id, cfg=cfg, channel=channel, users=users,
        sweep=sweep, heatmap=heatmap, montecarlo=montecarlo, output=output,
    )
