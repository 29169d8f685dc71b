"""Command-line entry point: run experiments from a TOML config, emit CSV.

Subcommands:

* crb-sweep          CRB vs a swept parameter for one or more schemes
* interference-sweep residual interference at the protected cluster
* selection-demo     switched selection (snsp and sssvsp) across PRIs
* coop-ber           downlink BER of the cooperation phase over an SNR grid
* pri-demo           the two-phase PRI cycle, selection results per PRI

Every row of the CSV carries the operating point and a seed that suffices
to regenerate it, and a rerun with the same config and seed is byte
identical. Row order is grid point, then scheme, then trial.
"""

import argparse
import csv
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace

import numpy as np

from .config import ConfigError, RunConfig, load_config
from .estimation import estimate_cluster_channel
from .matops import derive_seed, frobenius_norm, seed_to_int
from .metrics import (
    MetricRecord,
    CrbInput,
    coop_ber,
    crb_experiment,
    crb_record,
    crb_theta,
    interference_norm,
)
from .precoders import (
    mmse_precoder,
    nsp_precoder,
    resolve_sigma_th,
    ssvsp_precoder,
    zf_precoder,
)
from .scenario import gen_cluster_channel
from .selection import SNSP, SSSVSP, PriCycleConfig, run_pri_cycle

ENV_OUTDIR = "RADARCOEX_OUTDIR"

PARAM_COLUMNS = ["n_bs", "m_r", "m_k", "c_t", "l_t", "rho_db", "snr_db", "sigma_th"]
CSV_COLUMNS = (
    ["experiment", "scheme", "csi"]
    + PARAM_COLUMNS
    + ["trial", "seed", "value_name", "value", "value_deg2"]
)

SWEEP_KEYS = ("m_r", "n_bs", "m_k", "l_t")

COMMAND_SCHEMES = {
    "crb-sweep": ("orthogonal", "nsp", "ssvsp", "zf", "mmse"),
    "interference-sweep": ("orthogonal", "nsp", "ssvsp"),
    "selection-demo": (SNSP, SSSVSP),
    "coop-ber": ("zf", "mmse"),
}


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        f = float(v)
        if math.isinf(f):
            return "inf" if f > 0 else "-inf"
        if math.isnan(f):
            return "nan"
        return repr(f)
    if isinstance(v, (tuple, list)):
        return ";".join(_fmt(x) for x in v)
    return str(v)


def write_records(records: list[MetricRecord], path: str) -> None:
    """Write records as CSV with a fixed column set, byte-reproducibly."""
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for r in records:
            row = [r.experiment, r.scheme, r.csi]
            row += [_fmt(r.params.get(k)) for k in PARAM_COLUMNS]
            row += [_fmt(r.trial), _fmt(r.seed), r.value_name, _fmt(r.value), _fmt(r.value_deg2)]
            writer.writerow(row)


def base_params(cfg: RunConfig) -> dict:
    sc = cfg.scenario
    return {
        "n_bs": sc.n_bs,
        "m_r": sc.m_r,
        "m_k": sc.m_k,
        "c_t": sc.c_t,
        "l_t": cfg.estimation.l_t,
        "rho_db": cfg.estimation.rho_db,
        "snr_db": cfg.metrics.snr_db,
        "sigma_th": cfg.precoding.sigma_th_abs,
    }


def parse_sweep(text: str | None) -> tuple[str, list[int]] | None:
    """Parse --sweep KEY=START:STOP:STEP into (key, values), stop inclusive."""
    if text is None:
        return None
    if "=" not in text:
        raise ConfigError(f"--sweep must look like key=start:stop:step, got {text!r}")
    key, _, rng = text.partition("=")
    key = key.strip()
    if key not in SWEEP_KEYS:
        raise ConfigError(
            f"--sweep key must be one of {', '.join(SWEEP_KEYS)}, got {key!r}"
        )
    parts = rng.split(":")
    if len(parts) != 3:
        raise ConfigError(f"--sweep range must be start:stop:step, got {rng!r}")
    try:
        start, stop, step = (int(p) for p in parts)
    except ValueError as exc:
        raise ConfigError(f"--sweep bounds must be integers, got {rng!r}") from exc
    if step < 1:
        raise ConfigError("--sweep step must be a positive integer")
    if stop < start:
        raise ConfigError("--sweep stop must not be below start")
    return key, list(range(start, stop + 1, step))


def parse_schemes(text: str | None, command: str) -> list[str] | None:
    if text is None:
        return None
    names = [s for chunk in text.split("+") for s in chunk.split(",")]
    names = [s.strip() for s in names if s.strip()]
    allowed = COMMAND_SCHEMES.get(command, ())
    for name in names:
        if name not in allowed:
            raise ConfigError(
                f"scheme {name!r} is not valid for {command}; "
                f"choose from {', '.join(allowed)}"
            )
    if not names:
        raise ConfigError("--schemes must name at least one scheme")
    return names


def apply_sweep_point(cfg: RunConfig, key: str, value: int) -> RunConfig:
    """A copy of cfg with one swept parameter replaced and revalidated.

    Sweeping m_k or n_bs resets any explicit scenario.m and, when the
    training length falls below the stacked antenna count, lifts l_t to
    the minimum identifiable length (the CSV l_t column shows the value
    actually used).
    """
    sc = cfg.scenario
    est = cfg.estimation
    if key == "m_r":
        sc = replace(sc, m_r=value)
    elif key == "n_bs":
        sc = replace(sc, n_bs=value, m=None)
    elif key == "m_k":
        sc = replace(sc, m_k=value, m=None)
    elif key == "l_t":
        est = replace(est, l_t=value)
    min_streams = sc.m_k * sc.max_n_bs()
    if est.l_t < min_streams:
        if key == "l_t":
            raise ConfigError(
                f"swept l_t={value} is below the stacked antenna count {min_streams}"
            )
        est = replace(est, l_t=min_streams)
    if sc.m_r < 2:
        raise ConfigError(f"swept m_r={value} must be at least 2")
    return replace(cfg, scenario=sc, estimation=est)


def _projection_rx_and_interference(cfg: RunConfig, scheme: str, row_seed: int):
    """Channel draw, precoder, and interference values for one trial."""
    scenario = cfg.build_scenario()
    true_ch = gen_cluster_channel(
        scenario.topology, 1, scenario.array, derive_seed(row_seed, 0)
    )
    if cfg.metrics.csi == "estimated":
        ch = estimate_cluster_channel(
            true_ch,
            cfg.training_config(),
            derive_seed(row_seed, 1, 1),
            cfg.estimation.noiseless,
        )
    else:
        ch = true_ch
    resolved = None
    if scheme == "orthogonal":
        p = np.eye(scenario.array.m_r, dtype=complex)
    elif scheme == "nsp":
        p = nsp_precoder(ch, cfg.precoding.rank_rel_tol).p
    elif scheme == "ssvsp":
        rel = cfg.precoding.sigma_th_rel
        ab = cfg.precoding.sigma_th_abs
        if rel is None and ab is None:
            rel = 0.5
        resolved = resolve_sigma_th(ch, rel, ab)
        p = ssvsp_precoder(ch, resolved, cfg.precoding.rank_rel_tol).p
    else:
        raise ConfigError(f"scheme {scheme!r} is not an interference scheme")
    total = interference_norm(true_ch, p)
    bs1 = float(np.linalg.norm(true_ch.blocks()[0] @ p, "fro"))
    return total, bs1, resolved


def _interference_task(payload):
    cfg, scheme, grid_index, trials, root_seed = payload
    params0 = base_params(cfg)
    records = []
    for trial in range(trials):
        row_seed = seed_to_int(derive_seed(root_seed, grid_index, trial))
        total, bs1, resolved = _projection_rx_and_interference(cfg, scheme, row_seed)
        params = dict(params0)
        if resolved is not None:
            params["sigma_th"] = resolved
        common = dict(
            experiment="interference-sweep",
            scheme=scheme,
            csi=cfg.metrics.csi,
            params=params,
            trial=trial,
            seed=row_seed,
        )
        records.append(MetricRecord(**common, value_name="interference_norm", value=total))
        records.append(MetricRecord(**common, value_name="interference_norm_bs1", value=bs1))
    return records


def _crb_task(payload):
    cfg, scheme, grid_index, trials, root_seed = payload
    scenario = cfg.build_scenario()
    return crb_experiment(
        scenario,
        [scheme],
        cfg.metrics.csi,
        trials,
        derive_seed(root_seed, grid_index),
        snr=cfg.snr_linear(),
        est=cfg.training_config(),
        noiseless=cfg.estimation.noiseless,
        sigma_th_rel=(
            cfg.precoding.sigma_th_rel
            if (cfg.precoding.sigma_th_rel is not None or cfg.precoding.sigma_th_abs is not None)
            else 0.5
        ),
        sigma_th_abs=cfg.precoding.sigma_th_abs,
        rel_tol=cfg.precoding.rank_rel_tol,
        experiment="crb-sweep",
        base_params=base_params(cfg),
    )


def _ber_task(payload):
    cfg, schemes, trial, root_seed = payload
    scenario = cfg.build_scenario()
    topo = scenario.topology
    row_seed = seed_to_int(derive_seed(root_seed, trial))
    true_blocks = [
        gen_cluster_channel(topo, i, scenario.array, derive_seed(row_seed, 0))
        for i in range(1, topo.c_t + 1)
    ]
    h_true = np.vstack([ch.h for ch in true_blocks])
    if cfg.metrics.csi == "estimated":
        tcfg = cfg.training_config()
        h_pre = np.vstack(
            [
                estimate_cluster_channel(
                    ch, tcfg, derive_seed(row_seed, 1, ch.cluster_index), cfg.estimation.noiseless
                ).h
                for ch in true_blocks
            ]
        )
    else:
        h_pre = None
    grid = list(cfg.metrics.rho_db_grid)
    records = []
    params0 = base_params(cfg)
    for scheme in schemes:
        bers = coop_ber(
            h_true,
            scheme,
            grid,
            cfg.metrics.n_symbols,
            derive_seed(row_seed, 2),
            normalize_power=cfg.precoding.normalize_power,
            h_for_precoder=h_pre,
        )
        d_r = h_true.shape[0]
        h_build = h_true if h_pre is None else h_pre
        for g, rho_db in enumerate(grid):
            rho = 10.0 ** (rho_db / 10.0)
            if scheme == "zf":
                pc = zf_precoder(h_build, cfg.precoding.normalize_power)
            else:
                pc = mmse_precoder(h_build, d_r, 1.0 / rho, cfg.precoding.normalize_power)
            params = dict(params0, rho_db=rho_db)
            params["normalize_power"] = cfg.precoding.normalize_power
            common = dict(
                experiment="coop-ber",
                scheme=scheme,
                csi=cfg.metrics.csi,
                params=params,
                trial=trial,
                seed=row_seed,
            )
            records.append(
                MetricRecord(**common, value_name="ber", value=float(bers[g]))
            )
            records.append(
                MetricRecord(
                    **common, value_name="tx_power", value=frobenius_norm(pc.p) ** 2
                )
            )
    return records


_TASK_FUNCS = {
    "crb": _crb_task,
    "interference": _interference_task,
    "ber": _ber_task,
}


def _run_task(task):
    kind, payload = task
    return _TASK_FUNCS[kind](payload)


def _execute(tasks, parallelism: int) -> list[MetricRecord]:
    if parallelism <= 1 or len(tasks) <= 1:
        chunks = [_run_task(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=parallelism) as ex:
            chunks = list(ex.map(_run_task, tasks))
    return [r for chunk in chunks for r in chunk]


def run_grid_experiment(
    command: str,
    cfg: RunConfig,
    sweep: tuple[str, list[int]] | None,
    schemes: list[str],
) -> list[MetricRecord]:
    """crb-sweep and interference-sweep share the grid x scheme x trial shape."""
    kind = "crb" if command == "crb-sweep" else "interference"
    points = [cfg] if sweep is None else [
        apply_sweep_point(cfg, sweep[0], v) for v in sweep[1]
    ]
    tasks = []
    for grid_index, point_cfg in enumerate(points):
        for scheme in schemes:
            tasks.append(
                (kind, (point_cfg, scheme, grid_index, cfg.metrics.trials, cfg.run.seed))
            )
    return _execute(tasks, cfg.run.parallelism)


def run_coop_ber(cfg: RunConfig, schemes: list[str]) -> list[MetricRecord]:
    tasks = [
        ("ber", (cfg, schemes, trial, cfg.run.seed))
        for trial in range(cfg.metrics.trials)
    ]
    records = _execute(tasks, cfg.run.parallelism)
    grid_pos = {rho: i for i, rho in enumerate(cfg.metrics.rho_db_grid)}
    records.sort(
        key=lambda r: (
            grid_pos[r.params["rho_db"]],
            schemes.index(r.scheme),
            r.trial,
            r.value_name,
        )
    )
    return records


def _pri_cycle_config(cfg: RunConfig, scheme: str) -> PriCycleConfig:
    return PriCycleConfig(
        scheme=scheme,
        pri_count=cfg.run.pri_count,
        l_t=cfg.estimation.l_t,
        rho=10.0 ** (cfg.estimation.rho_db / 10.0),
        noiseless=cfg.estimation.noiseless,
        sigma_th_rel=cfg.precoding.sigma_th_rel,
        sigma_th_abs=cfg.precoding.sigma_th_abs,
        waveform_l=cfg.precoding.waveform_l,
        coop_scheme=cfg.precoding.coop_scheme,
        redraw_channels=cfg.run.redraw_channels,
        rel_tol=cfg.precoding.rank_rel_tol,
    )


def _selection_rows(
    cfg: RunConfig, scheme: str, experiment: str, with_crb: bool
) -> list[MetricRecord]:
    scenario = cfg.build_scenario()
    pri_cfg = _pri_cycle_config(cfg, scheme)
    trace, results = run_pri_cycle(scenario, pri_cfg, cfg.run.seed)
    records = []
    params0 = base_params(cfg)
    snr = cfg.snr_linear()
    for pri_index, result in enumerate(results, start=1):
        coop_state = trace[2 * (pri_index - 1)]
        estimates = coop_state.channel_estimates
        common = dict(
            experiment=experiment,
            scheme=scheme,
            csi="estimated" if not cfg.estimation.noiseless else "true",
            params=dict(params0),
            trial=pri_index,
            seed=cfg.run.seed,
        )
        records.append(
            MetricRecord(**common, value_name="best_index", value=result.best_index)
        )
        records.append(
            MetricRecord(**common, value_name="worst_index", value=result.worst_index)
        )
        records.append(
            MetricRecord(
                **common,
                value_name="best_score",
                value=float(result.scores[result.best_index - 1]),
            )
        )
        records.append(
            MetricRecord(
                **common,
                value_name="worst_score",
                value=float(result.scores[result.worst_index - 1]),
            )
        )
        if coop_state.coop_precoder is not None:
            records.append(
                MetricRecord(
                    **common,
                    value_name="coop_tx_power",
                    value=frobenius_norm(coop_state.coop_precoder.p) ** 2,
                )
            )
        if with_crb:
            for label, idx in (("best", result.best_index), ("worst", result.worst_index)):
                ch = estimates[idx - 1]
                if scheme == SNSP:
                    pc = nsp_precoder(ch, cfg.precoding.rank_rel_tol)
                else:
                    rel = cfg.precoding.sigma_th_rel
                    ab = cfg.precoding.sigma_th_abs
                    th = 0.0 if rel is None and ab is None else resolve_sigma_th(ch, rel, ab)
                    pc = ssvsp_precoder(ch, th, cfg.precoding.rank_rel_tol)
                r_x = pc.p @ pc.p.conj().T
                value = crb_theta(CrbInput(scenario.array, r_x, scenario.theta, snr))
                rec = crb_record(
                    experiment,
                    scheme,
                    common["csi"],
                    dict(params0),
                    pri_index,
                    cfg.run.seed,
                    value,
                )
                records.append(replace(rec, value_name=f"crb_{label}_rad2"))
    return records


def run_selection_demo(
    cfg: RunConfig, schemes: list[str], sweep: tuple[str, list[int]] | None
) -> list[MetricRecord]:
    points = [cfg] if sweep is None else [
        apply_sweep_point(cfg, sweep[0], v) for v in sweep[1]
    ]
    records = []
    for point_cfg in points:
        for scheme in schemes:
            records.extend(
                _selection_rows(point_cfg, scheme, "selection-demo", with_crb=True)
            )
    return records


def run_pri_demo(cfg: RunConfig) -> list[MetricRecord]:
    scheme = cfg.precoding.scheme
    if scheme not in (SNSP, SSSVSP):
        raise ConfigError(
            "pri-demo needs precoding.scheme set to snsp or sssvsp "
            f"(got {scheme!r})"
        )
    return _selection_rows(cfg, scheme, "pri-demo", with_crb=False)


def resolve_output(out_flag: str | None, cfg: RunConfig, command: str) -> str:
    if out_flag:
        return out_flag
    if cfg.run.output:
        return cfg.run.output
    outdir = os.environ.get(ENV_OUTDIR, ".")
    return os.path.join(outdir, f"{command}.csv")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="radarcoex",
        description="Spectrum-sharing radar precoding experiments (CSV output).",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "crb-sweep": "direction-estimation CRB across a parameter sweep",
        "interference-sweep": "residual interference at the protected cluster",
        "selection-demo": "switched cluster selection, snsp and sssvsp",
        "coop-ber": "cooperation downlink BER over the rho grid",
        "pri-demo": "two-phase PRI cycle demo",
    }
    for name, help_text in helps.items():
        sp = sub.add_parser(name, help=help_text)
        sp.add_argument("config", help="path to the TOML run config")
        sp.add_argument(
            "--sweep",
            default=None,
            metavar="KEY=START:STOP:STEP",
            help=f"integer sweep over one of {', '.join(SWEEP_KEYS)} (stop inclusive)",
        )
        sp.add_argument("--seed", type=int, default=None, help="override run.seed")
        sp.add_argument("--trials", type=int, default=None, help="override metrics.trials")
        sp.add_argument(
            "--schemes",
            default=None,
            help="comma- or plus-separated schemes (default: from config)",
        )
        sp.add_argument("--out", default=None, help="output CSV path")
    return parser


def _default_schemes(command: str, cfg: RunConfig) -> list[str]:
    if command in ("selection-demo", "coop-ber"):
        return list(COMMAND_SCHEMES[command])
    allowed = COMMAND_SCHEMES.get(command, ())
    scheme = cfg.precoding.scheme
    if scheme not in allowed:
        raise ConfigError(
            f"precoding.scheme={scheme!r} is not valid for {command}; "
            f"set one of {', '.join(allowed)} or pass --schemes"
        )
    return [scheme]


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            if args.seed < 0:
                raise ConfigError("--seed must be nonnegative")
            cfg = replace(cfg, run=replace(cfg.run, seed=args.seed))
        if args.trials is not None:
            if args.trials < 1:
                raise ConfigError("--trials must be positive")
            cfg = replace(cfg, metrics=replace(cfg.metrics, trials=args.trials))
        sweep = parse_sweep(args.sweep)
        command = args.command
        if sweep is not None and command in ("coop-ber", "pri-demo"):
            raise ConfigError(
                f"{command} does not take --sweep; its operating points come "
                "from the config"
            )
        if command == "pri-demo" and args.schemes is not None:
            raise ConfigError("pri-demo uses precoding.scheme, not --schemes")
        schemes = parse_schemes(args.schemes, command)
        if command == "pri-demo":
            records = run_pri_demo(cfg)
        else:
            if schemes is None:
                schemes = _default_schemes(command, cfg)
            if command in ("crb-sweep", "interference-sweep"):
                records = run_grid_experiment(command, cfg, sweep, schemes)
            elif command == "selection-demo":
                records = run_selection_demo(cfg, schemes, sweep)
            else:
                records = run_coop_ber(cfg, schemes)
        path = resolve_output(args.out, cfg, command)
        write_records(records, path)
    except (ConfigError, ValueError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
