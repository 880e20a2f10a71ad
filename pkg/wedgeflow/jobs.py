"""Run orchestration behind the command-line interface.

Every ``cmd_*`` function loads its configuration, runs the services, writes its
output files under ``out_dir`` and returns a JobResult. Structural failures are
re-raised after whatever partial output exists has been written; monitor
violations only raise under ``strict``.
"""

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import msgspec

from config import Config
from wedgeflow.errors import ConfigError, MonitorViolation, StructuralFailure
from wedgeflow.models import GasModel, History, RunConfig
from wedgeflow.services import bundle_export, functionals, tracking, validation
from wedgeflow.services.run_config import load_config, serialize_section

logger = logging.getLogger(__name__)

COUPLE_STATIONS = 21
COUPLED_HEADER = ["x", "phi", "l1", "ratio", "p1_wall", "p4_wall", "ratio_p4", "ratio_lambda", "partial"]
CONVERGENCE_HEADER = ["eps_coarse", "eps_fine", "l1", "nonphysical_fine", "events_fine"]
ORACLE_HEADER = ["check", "mach", "angle_deg", "expected", "measured", "residual", "tolerance", "passed"]
DETACHMENT_HEADER = ["mach", "gamma", "omega_crit_deg", "theta_max_deg"]
MIN_CONVERGENCE_SLOPE = 0.4


class JobResult(msgspec.Struct):
    command: str
    out_dir: str
    files: list[str] = msgspec.field(default_factory=list)
    summary: dict = msgspec.field(default_factory=dict)
    passed: bool = True


def _defaults(settings=Config) -> dict:
    return {"tracking": {"seed": settings.DEFAULT_SEED, "max_events": settings.MAX_EVENTS,
                         "tv_bound": settings.TV_BOUND}}


def _load(config_path, seed=None, settings=Config) -> RunConfig:
    cfg = load_config(config_path, _defaults(settings))
    if seed is not None:
        cfg = cfg.with_seed(seed)
    return cfg


def _finite_or_none(x):
    return x if x is None or math.isfinite(x) else None


def _failed_events(history: History) -> int:
    return sum(not v.passed for v in history.verdicts)


def _run_with_bundle(cfg: RunConfig, out_dir: Path, xlsx: bool, files: list) -> History:
    """Run and write the bundle; a failing run still writes its partial bundle before re-raising."""
    try:
        history = tracking.run(cfg)
    except StructuralFailure as exc:
        if exc.history is not None and exc.history.snapshots:
            files.extend(str(p) for p in bundle_export.write_bundle(exc.history, out_dir, xlsx=xlsx))
            logger.error("partial bundle written to %s", out_dir)
        raise
    files.extend(str(p) for p in bundle_export.write_bundle(history, out_dir, xlsx=xlsx))
    return history


def cmd_simulate(config_path, out_dir, seed=None, strict=False, xlsx=False, settings=Config) -> JobResult:
    """Track one configuration and write its bundle."""
    cfg = _load(config_path, seed, settings)
    out_dir = Path(out_dir)
    result = JobResult(command="simulate", out_dir=str(out_dir))
    history = _run_with_bundle(cfg, out_dir, xlsx, result.files)

    failed = _failed_events(history)
    final = history.reports[-1]
    result.summary = {
        "events": len(history.events),
        "fronts": len(history.final.fronts),
        "failed_events": failed,
        "F_initial": history.reports[0].F,
        "F_final": final.F,
        "nonphysical": final.nonphysical,
    }
    if history.background is not None:
        result.summary["sigma0"] = history.background.sigma0
    result.passed = failed == 0
    logger.info("simulate: %d events, %d monitor failures", len(history.events), failed)
    if strict and failed:
        raise MonitorViolation(f"{failed} of {len(history.events)} events violated the potential bound")
    return result


def _couple_stations(x_max: float, n: int = COUPLE_STATIONS) -> list[float]:
    return [x_max * k / (n - 1) for k in range(n)]


def cmd_couple(config_path, other_path, out_dir, seed=None, strict=False, xlsx=False,
               settings=Config) -> JobResult:
    """Track two inflows over the same wedge and follow Φ(U, V) and the L1 distance."""
    u_cfg = _load(config_path, seed, settings)
    v_cfg = _load(other_path, seed, settings)
    if u_cfg.vertices != v_cfg.vertices or u_cfg.gas != v_cfg.gas:
        raise ConfigError({"config_other": ["coupled runs need the same gas and wall vertices"]})
    if u_cfg.tracking.eps != v_cfg.tracking.eps or u_cfg.tracking.x_max != v_cfg.tracking.x_max:
        raise ConfigError({"config_other": ["coupled runs need the same tracking.eps and tracking.x_max"]})

    out_dir = Path(out_dir)
    result = JobResult(command="couple", out_dir=str(out_dir))
    u_hist = _run_with_bundle(u_cfg, out_dir / "u", xlsx, result.files)
    v_hist = _run_with_bundle(v_cfg, out_dir / "v", xlsx, result.files)

    g = u_cfg.gas
    consts = u_cfg.functionals
    x_max = u_cfg.tracking.x_max
    sigma0 = u_hist.background.sigma0 if u_hist.background else None
    reports = []
    rows = []
    for x in _couple_stations(x_max):
        y_low = min(tracking.y_bottom(u_hist) - u_hist.lambda_hat * x,
                    tracking.y_bottom(v_hist) - v_hist.lambda_hat * x)
        rep = functionals.lyapunov(u_hist.frontset_at(x), v_hist.frontset_at(x), u_hist.boundary, consts, g,
                                   y_low, sigma0)
        reports.append(rep)
        b = rep.boundary
        rows.append([x, rep.phi, rep.l1, rep.ratio,
                     b.p1 if b else None, b.p4 if b else None,
                     _finite_or_none(b.ratio_p4) if b else None, _finite_or_none(b.ratio_lambda) if b else None,
                     rep.partial])
    path = bundle_export.write_csv(out_dir / "coupled.csv", COUPLED_HEADER, rows)
    result.files.append(str(path))

    c1, c2 = functionals.equivalence_constants(reports)
    phi0 = reports[0].phi
    growth = max([(r.phi - phi0) / (u_cfg.tracking.eps * r.x) for r in reports if r.x > 0.0] + [0.0])
    ratios = [r.boundary.ratio_p4 for r in reports if r.boundary is not None]
    failed = _failed_events(u_hist) + _failed_events(v_hist)
    result.summary = {
        "stations": len(reports),
        "phi_initial": phi0,
        "phi_final": reports[-1].phi,
        "l1_final": reports[-1].l1,
        "C1": c1,
        "C2": c2,
        "growth": growth,
        "wall_ratio_max": max(ratios) if ratios else 0.0,
        "partial_stations": sum(r.partial for r in reports),
        "failed_events": failed,
    }
    result.passed = failed == 0
    logger.info("couple: Phi %.6e -> %.6e, C1=%.4g C2=%.4g", phi0, reports[-1].phi, c1, c2)
    if strict and failed:
        raise MonitorViolation(f"{failed} events violated the potential bound across the coupled runs")
    return result


def _verify(cfg: RunConfig) -> tuple[int, int]:
    history = tracking.run(cfg)
    return len(history.events), _failed_events(history)


def cmd_calibrate(config_path, out_dir, seed=None, strict=False, workers=1, seeds=1,
                  settings=Config) -> JobResult:
    """Probe interaction coefficients at the vertex background and derive constants sized for the data.

    The derived constants are checked by re-running the configuration with them
    for ``seeds`` consecutive seeds.
    """
    cfg = _load(config_path, seed, settings)
    table, consts = tracking.calibrate(cfg)

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    result = JobResult(command="calibrate", out_dir=str(out_dir))
    cfg_path = out_dir / "calibration.cfg"
    cfg_path.write_text("# calibrated functional constants\n" + "\n".join(serialize_section("functionals", consts))
                        + "\n", encoding="utf-8")
    result.files.append(str(cfg_path))

    rows = [["k_b4", table.k_b4], ["k_b3", table.k_b3], ["k_b2", table.k_b2], ["k_b0", table.k_b0],
            ["k_bs", table.k_bs]]
    rows += [[f"k_s{i + 1}", k] for i, k in enumerate(table.k_s)]
    for j, row in enumerate(table.k_weak, start=1):
        rows += [[f"k_weak{j}_{i + 1}", k] for i, k in enumerate(row)]
    rows += [["shift_above", table.shift_above]]
    rows += [[f"shift_below{j}", s] for j, s in enumerate(table.shift_below, start=1)]
    rows += [["weak_bound", table.weak_bound], ["reflection_margin", table.reflection_margin],
             ["simplified_bound", table.simplified_bound], ["shock_lipschitz", table.shock_lipschitz]]
    result.files.append(str(bundle_export.write_csv(out_dir / "coefficients.csv", ["name", "value"], rows)))

    checked = msgspec.structs.replace(cfg, functionals=consts)
    configs = [checked.with_seed(checked.tracking.seed + k) for k in range(max(1, seeds))]
    if workers > 1 and len(configs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_verify, configs))
    else:
        outcomes = [_verify(c) for c in configs]
    events = sum(n for n, _ in outcomes)
    failed = sum(f for _, f in outcomes)
    result.summary = {
        "k_s4": table.k_s[3],
        "k_b4": table.k_b4,
        "reflection_margin": table.reflection_margin,
        "k_minus": consts.k_minus,
        "kappa": consts.kappa,
        "k_star": consts.k_star,
        "c_star": consts.c_star,
        "checked_events": events,
        "failed_events": failed,
    }
    result.passed = failed == 0
    logger.info("calibrate: kappa=%.6g k_minus=%.6g, %d/%d checked events pass", consts.kappa, consts.k_minus,
                events - failed, events)
    if strict and failed:
        raise MonitorViolation(f"{failed} of {events} events violate the bound with the calibrated constants")
    return result


def cmd_converge(config_path, out_dir, eps_list, station=None, seed=None, strict=False, workers=1,
                 settings=Config) -> JobResult:
    """Pairwise L1 distances across decreasing ε and the fitted rate."""
    cfg = _load(config_path, seed, settings)
    table, _ = validation.convergence_study(cfg, eps_list, station=station, workers=workers)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = [[r.eps_coarse, r.eps_fine, r.l1, table.nonphysical[r.fine], table.event_counts[r.fine]]
            for r in table.rows]
    path = bundle_export.write_csv(out_dir / "convergence.csv", CONVERGENCE_HEADER, rows)
    result = JobResult(command="converge", out_dir=str(out_dir), files=[str(path)])
    result.summary = {"station": table.station, "slope": table.slope, "runs": len(table.event_counts)}
    result.passed = table.slope is None or table.slope >= MIN_CONVERGENCE_SLOPE
    if strict and not result.passed:
        raise MonitorViolation(f"fitted convergence slope {table.slope:.4g} is below {MIN_CONVERGENCE_SLOPE}")
    return result


def cmd_oracle(out_dir, gamma=1.4, tolerance=None, settings=Config) -> JobResult:
    """Self-test against the closed-form gas-dynamics relations; fails on any residual above tolerance."""
    tolerance = settings.ORACLE_TOLERANCE if tolerance is None else tolerance
    checks = validation.oracle_suite(GasModel(gamma=gamma), tolerance)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = [[c.check, c.mach, c.angle, c.expected, c.measured, c.residual, c.tolerance, c.passed] for c in checks]
    path = bundle_export.write_csv(out_dir / "oracle.csv", ORACLE_HEADER, rows)
    failed = [c for c in checks if not c.passed]
    result = JobResult(command="oracle", out_dir=str(out_dir), files=[str(path)],
                       summary={"checks": len(checks), "failed": len(failed),
                                "worst": max(c.residual for c in checks)},
                       passed=not failed)
    if failed:
        worst = max(failed, key=lambda c: c.residual)
        raise MonitorViolation(f"{len(failed)} oracle checks above tolerance {tolerance:g}; worst: {worst.check} "
                               f"at M={worst.mach:g}, angle={worst.angle:g} (residual {worst.residual:.3e})")
    return result


def detachment_rows(machs, gamma=1.4) -> list[list[float]]:
    g = GasModel(gamma=gamma)
    return [[m, gamma, math.degrees(validation.detachment_angle(m, g)),
             math.degrees(validation.max_deflection_angle(m, g))] for m in machs]


def cmd_detachment(out_dir, machs, gamma=1.4) -> JobResult:
    """Measured critical vertex angle next to the closed-form maximum deflection."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = detachment_rows(machs, gamma)
    path = bundle_export.write_csv(out_dir / "detachment.csv", DETACHMENT_HEADER, rows)
    gap = max(abs(r[2] - r[3]) for r in rows) if rows else 0.0
    return JobResult(command="detachment", out_dir=str(out_dir), files=[str(path)],
                     summary={"machs": len(rows), "max_gap_deg": gap})
