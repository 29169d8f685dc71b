"""Run configuration: TOML parsing, validation, and scenario construction.

A run is described by a small TOML document with flat sections
[scenario], [estimation], [precoding], [metrics], [run]. Every key is
validated (type and constraint) and unknown sections or keys are rejected
by name, so a typo fails loudly instead of silently using a default.

Angles are degrees and powers are dB here at the interface; conversion to
radians and linear scale happens once, in the build helpers below.
"""

import math
from dataclasses import dataclass

try:
    import tomllib
except ModuleNotFoundError:
    import tomli as tomllib

from .estimation import TrainingConfig
from .scenario import CompTopology, RadarArray, Scenario

SCHEMES = ("orthogonal", "nsp", "ssvsp", "snsp", "sssvsp", "zf", "mmse")
CSI_MODES = ("true", "estimated")


class ConfigError(ValueError):
    """A config document is malformed; the message names the offending key."""


@dataclass(frozen=True)
class ScenarioConfig:
    m_r: int
    n_bs: int | tuple[int, ...]
    m_k: int
    c_t: int = 1
    m: int | None = None
    carrier_hz: float = 3.5e9
    spacing_lambda: float = 0.75
    theta_deg: float = 0.0
    r0_km: float = 5.0

    def max_n_bs(self) -> int:
        return max(self.n_bs) if isinstance(self.n_bs, tuple) else self.n_bs


@dataclass(frozen=True)
class EstimationConfig:
    l_t: int
    rho_db: float = 10.0
    noiseless: bool = False


@dataclass(frozen=True)
class PrecodingConfig:
    scheme: str = "nsp"
    sigma_th_rel: float | None = None
    sigma_th_abs: float | None = None
    normalize_power: bool = False
    waveform_l: int = 128
    coop_scheme: str = "zf"
    rank_rel_tol: float | None = None


@dataclass(frozen=True)
class MetricsConfig:
    snr_db: float = 10.0
    trials: int = 50
    n_symbols: int = 100_000
    rho_db_grid: tuple[float, ...] = (-2.0, 1.0, 4.0, 7.0, 10.0)
    csi: str = "true"


@dataclass(frozen=True)
class RunBlock:
    seed: int = 0
    parallelism: int = 1
    output: str | None = None
    pri_count: int = 3
    redraw_channels: bool = False


@dataclass(frozen=True)
class RunConfig:
    scenario: ScenarioConfig
    estimation: EstimationConfig
    precoding: PrecodingConfig
    metrics: MetricsConfig
    run: RunBlock

    def build_scenario(self) -> Scenario:
        """Materialize the Scenario (the one degrees-to-radians point)."""
        sc = self.scenario
        array = RadarArray(
            m_r=sc.m_r,
            spacing_wavelengths=sc.spacing_lambda,
            carrier_hz=sc.carrier_hz,
        )
        clusters = tuple(
            frozenset(range(i * sc.m_k + 1, (i + 1) * sc.m_k + 1))
            for i in range(sc.c_t)
        )
        topology = CompTopology(
            m=sc.m if sc.m is not None else sc.m_k * sc.c_t,
            k=1,
            n_bs=sc.n_bs,
            clusters=clusters,
        )
        return Scenario(
            array=array,
            topology=topology,
            theta=math.radians(sc.theta_deg),
            r0_km=sc.r0_km,
        )

    def training_config(self) -> TrainingConfig:
        """Estimation block as a TrainingConfig (the dB-to-linear point for rho)."""
        return TrainingConfig(
            l_t=self.estimation.l_t,
            rho=10.0 ** (self.estimation.rho_db / 10.0),
        )

    def snr_linear(self) -> float:
        return 10.0 ** (self.metrics.snr_db / 10.0)


_REQUIRED = object()


def _take(section: str, data: dict, key: str, default=_REQUIRED):
    if key in data:
        return data.pop(key)
    if default is _REQUIRED:
        raise ConfigError(
            f"missing required key {section}.{key}; add it to the [{section}] section"
        )
    return default


def _as_int(section: str, key: str, value, minimum: int | None = None) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{section}.{key} must be an integer, got {value!r}")
    if minimum is not None and value < minimum:
        raise ConfigError(f"{section}.{key} must be >= {minimum}, got {value}")
    return value


def _as_float(section: str, key: str, value, minimum: float | None = None) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{section}.{key} must be a number, got {value!r}")
    out = float(value)
    if not math.isfinite(out):
        raise ConfigError(f"{section}.{key} must be finite, got {value!r}")
    if minimum is not None and out < minimum:
        raise ConfigError(f"{section}.{key} must be >= {minimum}, got {value}")
    return out


def _as_bool(section: str, key: str, value) -> bool:
    if not isinstance(value, bool):
        raise ConfigError(f"{section}.{key} must be true or false, got {value!r}")
    return value


def _as_str(section: str, key: str, value, choices: tuple[str, ...] | None = None) -> str:
    if not isinstance(value, str):
        raise ConfigError(f"{section}.{key} must be a string, got {value!r}")
    if choices is not None and value not in choices:
        raise ConfigError(
            f"{section}.{key} must be one of {', '.join(choices)}; got {value!r}"
        )
    return value


def _reject_unknown(section: str, data: dict) -> None:
    if data:
        keys = ", ".join(sorted(data))
        raise ConfigError(
            f"unknown key(s) in [{section}]: {keys}; remove or fix the spelling"
        )


def parse_config(text: str) -> RunConfig:
    """Parse and validate a TOML config document into a RunConfig."""
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config is not valid TOML: {exc}") from exc
    known = {"scenario", "estimation", "precoding", "metrics", "run"}
    unknown = set(doc) - known
    if unknown:
        raise ConfigError(
            f"unknown section(s): {', '.join(sorted(unknown))}; "
            f"expected {', '.join(sorted(known))}"
        )
    for name in known:
        if name in doc and not isinstance(doc[name], dict):
            raise ConfigError(f"[{name}] must be a section, not a value")

    sc = dict(doc.get("scenario", {}))
    if "scenario" not in doc:
        raise ConfigError("missing [scenario] section (m_r, n_bs, m_k are required)")
    m_r = _as_int("scenario", "m_r", _take("scenario", sc, "m_r"), minimum=2)
    raw_n_bs = _take("scenario", sc, "n_bs")
    m_k = _as_int("scenario", "m_k", _take("scenario", sc, "m_k"), minimum=1)
    c_t = _as_int("scenario", "c_t", _take("scenario", sc, "c_t", 1), minimum=1)
    if isinstance(raw_n_bs, list):
        n_bs: int | tuple[int, ...] = tuple(
            _as_int("scenario", "n_bs", v, minimum=1) for v in raw_n_bs
        )
        if len(n_bs) != c_t:
            raise ConfigError(
                f"scenario.n_bs lists {len(n_bs)} clusters but c_t={c_t}; "
                "give one entry per cluster or a single integer"
            )
    else:
        n_bs = _as_int("scenario", "n_bs", raw_n_bs, minimum=1)
    m_raw = _take("scenario", sc, "m", None)
    m = None if m_raw is None else _as_int("scenario", "m", m_raw, minimum=m_k * c_t)
    scenario = ScenarioConfig(
        m_r=m_r,
        n_bs=n_bs,
        m_k=m_k,
        c_t=c_t,
        m=m,
        carrier_hz=_as_float("scenario", "carrier_hz", _take("scenario", sc, "carrier_hz", 3.5e9), minimum=1.0),
        spacing_lambda=_as_float("scenario", "spacing_lambda", _take("scenario", sc, "spacing_lambda", 0.75), minimum=1e-6),
        theta_deg=_as_float("scenario", "theta_deg", _take("scenario", sc, "theta_deg", 0.0)),
        r0_km=_as_float("scenario", "r0_km", _take("scenario", sc, "r0_km", 5.0), minimum=0.0),
    )
    if abs(scenario.theta_deg) > 90.0:
        raise ConfigError("scenario.theta_deg must lie in [-90, 90]")
    _reject_unknown("scenario", sc)

    est = dict(doc.get("estimation", {}))
    min_streams = scenario.m_k * scenario.max_n_bs()
    l_t = _as_int("estimation", "l_t", _take("estimation", est, "l_t", min_streams), minimum=1)
    if l_t < min_streams:
        raise ConfigError(
            f"estimation.l_t={l_t} is below the largest cluster's stacked antenna "
            f"count {min_streams}; raise l_t or shrink the cluster"
        )
    estimation = EstimationConfig(
        l_t=l_t,
        rho_db=_as_float("estimation", "rho_db", _take("estimation", est, "rho_db", 10.0)),
        noiseless=_as_bool("estimation", "noiseless", _take("estimation", est, "noiseless", False)),
    )
    _reject_unknown("estimation", est)

    pre = dict(doc.get("precoding", {}))
    sigma_th_rel = _take("precoding", pre, "sigma_th_rel", None)
    sigma_th_abs = _take("precoding", pre, "sigma_th_abs", None)
    if sigma_th_rel is not None and sigma_th_abs is not None:
        raise ConfigError(
            "precoding.sigma_th_rel and precoding.sigma_th_abs are mutually "
            "exclusive; keep exactly one"
        )
    if sigma_th_rel is not None:
        sigma_th_rel = _as_float("precoding", "sigma_th_rel", sigma_th_rel, minimum=0.0)
    if sigma_th_abs is not None:
        sigma_th_abs = _as_float("precoding", "sigma_th_abs", sigma_th_abs, minimum=0.0)
    rank_rel_tol = _take("precoding", pre, "rank_rel_tol", None)
    if rank_rel_tol is not None:
        rank_rel_tol = _as_float("precoding", "rank_rel_tol", rank_rel_tol)
        if not 0.0 < rank_rel_tol < 1.0:
            raise ConfigError("precoding.rank_rel_tol must lie strictly in (0, 1)")
    precoding = PrecodingConfig(
        scheme=_as_str("precoding", "scheme", _take("precoding", pre, "scheme", "nsp"), SCHEMES),
        sigma_th_rel=sigma_th_rel,
        sigma_th_abs=sigma_th_abs,
        normalize_power=_as_bool("precoding", "normalize_power", _take("precoding", pre, "normalize_power", False)),
        waveform_l=_as_int("precoding", "waveform_l", _take("precoding", pre, "waveform_l", 128), minimum=1),
        coop_scheme=_as_str("precoding", "coop_scheme", _take("precoding", pre, "coop_scheme", "zf"), ("zf", "mmse")),
        rank_rel_tol=rank_rel_tol,
    )
    _reject_unknown("precoding", pre)

    met = dict(doc.get("metrics", {}))
    raw_grid = _take("metrics", met, "rho_db_grid", [-2.0, 1.0, 4.0, 7.0, 10.0])
    if not isinstance(raw_grid, list) or not raw_grid:
        raise ConfigError("metrics.rho_db_grid must be a nonempty list of numbers")
    rho_db_grid = tuple(_as_float("metrics", "rho_db_grid", v) for v in raw_grid)
    metrics = MetricsConfig(
        snr_db=_as_float("metrics", "snr_db", _take("metrics", met, "snr_db", 10.0)),
        trials=_as_int("metrics", "trials", _take("metrics", met, "trials", 50), minimum=1),
        n_symbols=_as_int("metrics", "n_symbols", _take("metrics", met, "n_symbols", 100_000), minimum=1),
        rho_db_grid=rho_db_grid,
        csi=_as_str("metrics", "csi", _take("metrics", met, "csi", "true"), CSI_MODES),
    )
    _reject_unknown("metrics", met)

    run_raw = dict(doc.get("run", {}))
    output = _take("run", run_raw, "output", None)
    if output is not None:
        output = _as_str("run", "output", output)
    run = RunBlock(
        seed=_as_int("run", "seed", _take("run", run_raw, "seed", 0), minimum=0),
        parallelism=_as_int("run", "parallelism", _take("run", run_raw, "parallelism", 1), minimum=1),
        output=output,
        pri_count=_as_int("run", "pri_count", _take("run", run_raw, "pri_count", 3), minimum=1),
        redraw_channels=_as_bool("run", "redraw_channels", _take("run", run_raw, "redraw_channels", False)),
    )
    _reject_unknown("run", run_raw)

    return RunConfig(
        scenario=scenario,
        estimation=estimation,
        precoding=precoding,
        metrics=metrics,
        run=run,
    )


def load_config(path: str) -> RunConfig:
    """Read and parse a config file."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    return parse_config(text)
