"""Command-line front end: experiment presets, config parsing, serialization.

Subcommands: so3-ivp, so3-bvp, sphere-bvp, landmarks-bvp, simulate,
mpp-forward, singular-check. Each reads a JSON config (--config takes a file
path or a built-in preset name), applies flag overrides, runs the
corresponding solver and writes `<out>.traj.json` + `<out>.csv` (trajectories)
or `<out>.samples.json` (sampler). A one-line summary goes to stdout; errors
go to stderr with exit code 1 (config), 2 (non-convergence), 3 (numerical).
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import configs, engine, homogeneous, landmarks, liegroup, presets, simulate
from .errors import (ConfigError, FrameDegenerate, LiftDegenerate,
                     MppgeoError, NonConvergence, NonFiniteState, NotHorizontal,
                     PathLeavesChart, RankDeficient, SingularJacobian,
                     SplittingInvalid, StepTooCoarse)
from .geometry import CovarianceSchedule, CurvePath, DriftModel
from .linalg import so3_log
from .odeint import uniform_grid
from .serialize import (CHECK_SCHEMA, SAMPLES_SCHEMA, TRAJ_SCHEMA, read_json,
                        write_csv, write_json)
from .shooting import ShootingConfig

NUMERICAL_ERRORS = (NonFiniteState, FrameDegenerate, PathLeavesChart,
                    StepTooCoarse, NotHorizontal, RankDeficient,
                    SingularJacobian, LiftDegenerate, SplittingInvalid)


def _sigma_from(value, rank: int | None = None) -> CovarianceSchedule:
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 1:
        arr = np.diag(arr)
    if rank is not None and arr.shape[0] != rank:
        raise ConfigError(f"sigma must have rank {rank}, got {arr.shape[0]}")
    try:
        return CovarianceSchedule.constant(arr)
    except ValueError as exc:
        raise ConfigError(f"invalid sigma: {exc}") from exc


def _drift_fn(cfg: dict):
    vec = cfg.get("drift")
    if vec is None:
        return None
    a = np.asarray(vec, dtype=float)
    return lambda t: a


def _summary(command: str, wall: float, **kv) -> None:
    parts = [f"{command}:"]
    for k, v in kv.items():
        if isinstance(v, float):
            parts.append(f"{k}={v:.6g}")
        else:
            parts.append(f"{k}={v}")
    parts.append(f"wall={wall:.3f}s")
    print(" ".join(parts))


# ---------------------------------------------------------------------------
# subcommand runners (each returns the summary dict written into diagnostics)


def run_so3_ivp(cfg: dict) -> None:
    sigma = _sigma_from(cfg["sigma"], 3)
    model = liegroup.so3_model(sigma=sigma, drift=_drift_fn(cfg))
    t0 = time.perf_counter()
    traj = liegroup.integrate_group(model, np.asarray(cfg["alpha0"], dtype=float),
                                    cfg.get("horizon", 1.0), cfg.get("steps", 1000))
    wall = time.perf_counter() - t0
    defect = traj.diagnostics["group_defect_max"]
    out = cfg.get("out", "so3_ivp")
    _write_group_traj(out, "so3-ivp", cfg, traj, residual=None, iterations=None)
    _summary("so3-ivp", wall, energy=float(traj.energy[-1]),
             orthogonality_drift=float(defect))


def run_so3_bvp(cfg: dict) -> None:
    sigma = _sigma_from(cfg["sigma"], 3)
    model = liegroup.so3_model(sigma=sigma, drift=_drift_fn(cfg))
    horizon = cfg.get("horizon", 1.0)
    steps = cfg.get("steps", 1000)
    target_cfg = cfg["target"]
    alpha_gen = None
    if "alpha_forward" in target_cfg:
        alpha_gen = np.asarray(target_cfg["alpha_forward"], dtype=float)
        target = liegroup.integrate_group(model, alpha_gen, horizon, steps) \
            .states[-1].gamma
    else:
        target = np.asarray(target_cfg["matrix"], dtype=float)

    def residual(alpha0):
        traj = liegroup.integrate_group(model, alpha0, horizon, steps)
        return so3_log(traj.states[-1].gamma @ target.T)

    if "guess" in cfg:
        guess = np.asarray(cfg["guess"], dtype=float)
    else:
        a0 = model.drift_at(0.0)
        guess = sigma.inv(0.0) @ (so3_log(target) / horizon - a0)

    from .shooting import ShootingProblem, solve
    t0 = time.perf_counter()
    result = solve(ShootingProblem(3, residual), guess,
                   ShootingConfig(tol=cfg.get("tol", 1e-8), seed=cfg.get("seed", 0)))
    traj = liegroup.integrate_group(model, result.unknowns, horizon, steps)
    wall = time.perf_counter() - t0
    extra = {"alpha0": result.unknowns.tolist()}
    if alpha_gen is not None:
        extra["alpha0_generator"] = alpha_gen.tolist()
        extra["alpha0_recovery_error"] = float(np.abs(result.unknowns - alpha_gen).max())
    out = cfg.get("out", "so3_bvp")
    _write_group_traj(out, "so3-bvp", cfg, traj,
                      residual=result.residual_norm,
                      iterations=result.iterations, extra=extra)
    _summary("so3-bvp", wall, residual=result.residual_norm,
             energy=float(traj.energy[-1]), iterations=result.iterations)


def _write_group_traj(out: str, command: str, cfg: dict, traj, residual,
                      iterations, extra: dict | None = None) -> None:
    gammas = np.array([s.gamma.reshape(-1) for s in traj.states])
    alphas = np.array([s.alpha for s in traj.states])
    doc = {
        "schema": TRAJ_SCHEMA,
        "command": command,
        "preset": cfg.get("preset"),
        "config": cfg,
        "t": traj.times,
        "state": {"gamma": gammas, "alpha": alphas,
                  "z": traj.diagnostics.get("z")},
        "diagnostics": {
            "energy": traj.energy,
            "residual": residual,
            "iterations": iterations,
            "group_defect_max": traj.diagnostics["group_defect_max"],
            **(extra or {}),
        },
    }
    write_json(f"{out}.traj.json", doc)
    write_csv(f"{out}.csv", {"t": traj.times, "gamma": gammas, "alpha": alphas,
                             "energy": traj.energy})


def _base_field(cfg_field: dict | None):
    if cfg_field is None or cfg_field.get("type") == "none":
        return None
    if cfg_field["type"] == "rotation":
        return homogeneous.rotation_field(cfg_field.get("axis", [0.0, 0.0, 1.0]),
                                          cfg_field.get("scale", 1.0))
    return homogeneous.ambient_constant_field(cfg_field["vector"])


def run_sphere_bvp(cfg: dict) -> None:
    sigma = _sigma_from(cfg.get("sigma", [1.0, 1.0]), 2)
    field = _base_field(cfg.get("drift_field"))
    model = homogeneous.sphere_homogeneous_model(sigma=sigma, base_drift=field)
    target_cfg = cfg["target"]
    target = np.asarray(target_cfg.get("ambient", target_cfg.get("chart")),
                        dtype=float)
    t0 = time.perf_counter()
    result, traj = homogeneous.sphere_shoot(
        model, target, cfg.get("horizon", 1.0), cfg.get("steps", 1000),
        ShootingConfig(tol=cfg.get("tol", 1e-8), seed=cfg.get("seed", 0)))
    wall = time.perf_counter() - t0

    quiver = None
    relatedness = None
    if field is not None:
        quiver = _sample_quiver(field)
        lift = model.lift_drift
        rng = np.random.default_rng(0)
        worst = 0.0
        from .linalg import rodrigues
        for _ in range(200):
            g = rodrigues(rng.normal(size=3))
            a = lift(0.0, g)
            push = g @ (model.group.rep_of(model.embed_p(a))
                        @ np.array([1.0, 0.0, 0.0]))
            worst = max(worst, float(np.linalg.norm(
                push - _tangential(field(0.0, g @ np.array([1.0, 0.0, 0.0])),
                                   g @ np.array([1.0, 0.0, 0.0])))))
        relatedness = worst

    gammas = np.array([s.gamma.reshape(-1) for s in traj.states])
    alphas = np.array([s.alpha for s in traj.states])
    target_amb = target if target.shape == (3,) else model.from_chart(target)
    doc = {
        "schema": TRAJ_SCHEMA,
        "command": "sphere-bvp",
        "preset": cfg.get("preset"),
        "config": cfg,
        "t": traj.times,
        "state": {
            "gamma": gammas,
            "alpha": alphas,
            "base_chart": traj.diagnostics["base_chart"],
            "base_ambient": traj.diagnostics["base_ambient"],
        },
        "diagnostics": {
            "energy": traj.energy,
            "residual": result.residual_norm,
            "iterations": result.iterations,
            "alpha0_p": result.unknowns.tolist(),
            "pi_relatedness": relatedness,
            "target_ambient": target_amb,
            "drift_quiver": quiver,
        },
    }
    out = cfg.get("out", "sphere_bvp")
    write_json(f"{out}.traj.json", doc)
    write_csv(f"{out}.csv", {
        "t": traj.times,
        "chart": traj.diagnostics["base_chart"],
        "ambient": traj.diagnostics["base_ambient"],
        "alpha": alphas,
        "energy": traj.energy,
    })
    _summary("sphere-bvp", wall, residual=result.residual_norm,
             energy=float(traj.energy[-1]), iterations=result.iterations)


def _tangential(v, p):
    v = np.asarray(v, dtype=float)
    return v - (v @ p) * p


def _sample_quiver(field, n_theta: int = 8, n_phi: int = 16) -> dict:
    pts, vecs = [], []
    for th in np.linspace(0.35, np.pi - 0.35, n_theta):
        for ph in np.linspace(0.0, 2 * np.pi, n_phi, endpoint=False):
            p = np.array([np.cos(th), np.sin(th) * np.cos(ph),
                          np.sin(th) * np.sin(ph)])
            pts.append(p)
            vecs.append(_tangential(field(0.0, p), p))
    return {"points": np.array(pts), "vectors": np.array(vecs)}


def _landmark_scene(cfg: dict):
    lm_cfg = cfg["landmarks"]
    if "points" in lm_cfg:
        x0 = np.asarray(lm_cfg["points"], dtype=float)
    else:
        c = lm_cfg["circle"]
        ang = np.linspace(0.0, 2 * np.pi, c["n"], endpoint=False)
        center = np.asarray(c.get("center", [0.0, 0.0]), dtype=float)
        x0 = center + c.get("radius", 1.0) * np.stack(
            [np.cos(ang), np.sin(ang)], axis=1)

    tcfg = cfg["targets"] if "targets" in cfg else None
    explicit_targets = None
    if tcfg and "points" in tcfg:
        explicit_targets = np.asarray(tcfg["points"], dtype=float)
    elif tcfg and "transform" in tcfg:
        tr = tcfg["transform"]
        explicit_targets = (x0 * np.asarray(tr.get("scale", [1.0, 1.0]))
                            + np.asarray(tr.get("translate", [0.0, 0.0])))

    fcfg = cfg["fields"]
    if "grid" in fcfg:
        g = fcfg["grid"]
        scene = x0 if explicit_targets is None else np.vstack([x0, explicit_targets])
        fields = landmarks.grid_over_points(scene, g["nx"], g["ny"],
                                            g.get("width", 0.5),
                                            g.get("inflate", 0.25))
    else:
        fields = [landmarks.gaussian_field(f["center"], f["width"], f["direction"])
                  for f in fcfg["gaussians"]]

    drift = DriftModel.constant(cfg["drift"]) if "drift" in cfg \
        else DriftModel.zero(2)
    system = landmarks.LandmarkSystem(
        len(x0), 2, fields, drift=drift,
        horizon=cfg.get("horizon", 1.0), steps=cfg.get("steps", 500))

    targets = explicit_targets
    if tcfg and "forward_lam" in tcfg:
        lam_gen = np.asarray(tcfg["forward_lam"], dtype=float)
        targets = landmarks.integrate_landmarks(system, x0, lam_gen).states[-1].x
    return system, x0, targets


def run_landmarks_bvp(cfg: dict) -> None:
    system, x0, targets = _landmark_scene(cfg)
    if targets is None:
        raise ConfigError("landmarks-bvp needs a targets section")
    t0 = time.perf_counter()
    result, traj = landmarks.landmark_shoot(
        system, x0, targets,
        config=ShootingConfig(tol=cfg.get("tol", 1e-8), seed=cfg.get("seed", 0)))
    wall = time.perf_counter() - t0
    blue = landmarks.drift_flow(system, x0)

    xs = np.array([s.x.reshape(-1) for s in traj.states])
    lams = np.array([s.lam.reshape(-1) for s in traj.states])
    centers = sorted({tuple(f.center) for f in system.fields if f.center is not None})
    doc = {
        "schema": TRAJ_SCHEMA,
        "command": "landmarks-bvp",
        "preset": cfg.get("preset"),
        "config": cfg,
        "t": traj.times,
        "state": {"x": xs, "lam": lams, "c": traj.diagnostics["c"]},
        "diagnostics": {
            "energy": traj.energy,
            "residual": result.residual_norm,
            "iterations": result.iterations,
            "targets": targets,
            "drift_paths": np.array([s.x.reshape(-1) for s in blue.states]),
            "field_centers": np.array([list(c) for c in centers]),
            "n_landmarks": system.n,
            "hamiltonian_drift": traj.diagnostics["hamiltonian_drift"],
        },
    }
    out = cfg.get("out", "landmarks_bvp")
    write_json(f"{out}.traj.json", doc)
    write_csv(f"{out}.csv", {"t": traj.times, "x": xs, "lam": lams,
                             "energy": traj.energy})
    _summary("landmarks-bvp", wall, residual=result.residual_norm,
             energy=float(traj.energy[-1]), iterations=result.iterations)


def run_simulate(cfg: dict) -> None:
    model = presets.flat_model(2) if cfg["model"] == "flat" else presets.sphere_model()
    sigma = _sigma_from(cfg["sigma"], model.sr_rank)
    drift = DriftModel.constant(cfg["drift"]) if "drift" in cfg \
        else DriftModel.zero(model.dim)
    problem = engine.MPPProblem(model, drift, sigma,
                                horizon=cfg.get("horizon", 1.0),
                                steps=cfg.get("steps", 200))
    sim_cfg = simulate.SimConfig(
        paths=cfg.get("paths", 1000), steps=cfg.get("steps", 200),
        seed=cfg.get("seed", 0),
        record_endpoints_only=not cfg.get("record_paths", False))
    t0 = time.perf_counter()
    res = simulate.sample_development(problem, sim_cfg)
    wall = time.perf_counter() - t0
    cov = np.cov(res.endpoints.T) if len(res.endpoints) > 1 else None
    doc = {
        "schema": SAMPLES_SCHEMA,
        "command": "simulate",
        "preset": cfg.get("preset"),
        "config": cfg,
        "endpoints": res.endpoints,
        "discarded": res.discarded,
        "seed": res.seed,
        "mean": res.endpoints.mean(axis=0),
        "covariance": cov,
    }
    if res.paths is not None:
        doc["paths"] = res.paths
    out = cfg.get("out", "samples")
    write_json(f"{out}.samples.json", doc)
    write_csv(f"{out}.csv", {"endpoint": res.endpoints})
    _summary("simulate", wall, paths=len(res.endpoints), discarded=res.discarded)


def _chart_model(name: str, lam0_len: int):
    if name == "flat":
        return presets.flat_model(lam0_len)
    if name == "sphere":
        return presets.sphere_model()
    if name == "martinet":
        return presets.martinet_model()
    return presets.so3_chart_model()


def run_mpp_forward(cfg: dict) -> None:
    lam0 = np.asarray(cfg["lam0"], dtype=float)
    model = _chart_model(cfg["model"], len(lam0))
    sigma = _sigma_from(cfg["sigma"], model.sr_rank)
    drift = DriftModel.constant(cfg["drift"]) if "drift" in cfg \
        else DriftModel.zero(model.dim)
    problem = engine.MPPProblem(model, drift, sigma,
                                horizon=cfg.get("horizon", 1.0),
                                steps=cfg.get("steps", 1000))
    chi0 = np.asarray(cfg["chi0"], dtype=float) if "chi0" in cfg else None
    t0 = time.perf_counter()
    traj = engine.integrate_forward(problem, lam0, chi0)
    wall = time.perf_counter() - t0
    xs = np.array([s.x for s in traj.states])
    lams = np.array([s.lam for s in traj.states])
    chis = np.array([s.chi for s in traj.states])
    doc = {
        "schema": TRAJ_SCHEMA,
        "command": "mpp-forward",
        "preset": cfg.get("preset"),
        "config": cfg,
        "t": traj.times,
        "state": {"x": xs, "lam": lams, "chi": chis},
        "diagnostics": {
            "energy": traj.energy,
            "residual": None,
            "iterations": None,
            "hamiltonian_drift": traj.diagnostics["hamiltonian_drift"],
            "frame_det_min": traj.diagnostics["frame_det_min"],
        },
    }
    out = cfg.get("out", "mpp_forward")
    write_json(f"{out}.traj.json", doc)
    cols = {"t": traj.times, "x": xs, "lam": lams, "energy": traj.energy}
    if chis.shape[1]:
        cols["chi"] = chis
    write_csv(f"{out}.csv", cols)
    _summary("mpp-forward", wall, energy=float(traj.energy[-1]),
             hamiltonian_drift=traj.diagnostics["hamiltonian_drift"])


def run_singular_check(cfg: dict) -> None:
    kind = cfg["kind"]
    steps = cfg.get("steps", 400)
    horizon = cfg.get("horizon", 1.0)
    t0 = time.perf_counter()
    if kind in ("martinet-line", "martinet-generic"):
        model = presets.martinet_model()
        grid = uniform_grid(horizon, steps)
        if kind == "martinet-line":
            path = CurvePath.from_function(
                lambda t: np.array([0.0, t, 0.0]), grid,
                velocity_fn=lambda t: np.array([0.0, 1.0, 0.0]))
        else:
            from .geometry import AntiDevelopmentPath, develop
            om = AntiDevelopmentPath.from_deriv(
                lambda t: np.array([0.8, 0.5 + 0.3 * np.sin(2 * t), 0.0]), grid)
            path = develop(model, om)
        sv, flag = engine.singularity_certificate(model, DriftModel.zero(3), path)
    elif kind in ("heisenberg-zero", "heisenberg-generic"):
        model = liegroup.heisenberg_model()
        if kind == "heisenberg-zero":
            z_fn = lambda t: np.zeros(3)
        else:
            z_fn = lambda t: np.array([1.0, 0.0, 0.0])
        sv, flag = liegroup.lie_singular_check(model, z_fn, horizon, steps)
    else:
        system, x0, _ = _landmark_scene(cfg)
        lam0 = np.asarray(cfg.get("lam0", np.zeros((system.n, 2))), dtype=float)
        traj = landmarks.integrate_landmarks(system, x0, lam0)
        sv, flag = landmarks.landmark_singular_check(system, traj)
    wall = time.perf_counter() - t0
    doc = {
        "schema": CHECK_SCHEMA,
        "command": "singular-check",
        "preset": cfg.get("preset"),
        "config": cfg,
        "min_singular_value": sv,
        "is_singular": bool(flag),
    }
    out = cfg.get("out", "singular_check")
    write_json(f"{out}.check.json", doc)
    _summary("singular-check", wall, kind=kind,
             min_singular_value=float(sv) if np.isfinite(sv) else float("inf"),
             is_singular=bool(flag))


RUNNERS = {
    "so3-ivp": run_so3_ivp,
    "so3-bvp": run_so3_bvp,
    "sphere-bvp": run_sphere_bvp,
    "landmarks-bvp": run_landmarks_bvp,
    "simulate": run_simulate,
    "mpp-forward": run_mpp_forward,
    "singular-check": run_singular_check,
}


def _load_config(command: str, spec: str) -> dict:
    path = Path(spec)
    if path.exists():
        try:
            cfg = read_json(path)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"cannot parse {path}: {exc}") from exc
        return cfg
    preset_command, cfg = configs.load_preset(spec)
    if preset_command != command:
        raise ConfigError(
            f"preset '{spec}' belongs to command '{preset_command}', not '{command}'")
    return cfg


def run(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="mppgeo",
        description="Most probable paths of developed diffusions: forward "
                    "solvers, boundary value problems, samplers.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in RUNNERS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True,
                       help="JSON config file or built-in preset name")
        p.add_argument("--steps", type=int, default=None)
        p.add_argument("--tol", type=float, default=None)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out", type=str, default=None)
    args = parser.parse_args(argv)

    try:
        cfg = _load_config(args.command, args.config)
        for key in ("steps", "tol", "seed", "out"):
            val = getattr(args, key)
            if val is not None:
                cfg[key] = val
        configs.validate(args.command, cfg)
        RUNNERS[args.command](cfg)
        return 0
    except (ConfigError, FileNotFoundError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except NonConvergence as exc:
        print(f"non-convergence: {exc}", file=sys.stderr)
        return 2
    except NUMERICAL_ERRORS as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    except MppgeoError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
