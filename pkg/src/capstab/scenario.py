"""Scenario execution: build geometry, run verification suites, emit reports.

Suites (dependency order): geometry -> comparison / hessians -> spectra ->
reparam -> bounds.  Every pass/fail check cites its tolerance; reports are
reproducible bit-identically at fixed config and seed.
"""

from __future__ import annotations

import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .ambient import make_region
from .bounds import (BoundInputs, TopologySignature, index_bound, maslov_index,
                     normal_extension, sobolev_check, topological_r)
from .charts import make_chart
from .config import ScenarioConfig, canonical_json, config_hash
from .deficit import verify_comparison
from .functionals import FunctionalId, area, dirichlet_energy, first_variation
from .geometry import contact_angle, export_obj, sample_geometry
from .grids import ANNULUS, DISK, build_grid
from .hessians import FORMULAS, constraint_boundary_term, hessian_oracle_check
from .reparam import solve_conformal_reparam
from .spectral import (assemble_Q, assemble_QE, assemble_scalar_robin,
                       counting_check, eigenpairs, eigs, heat_trace,
                       morse_index, spectrum_csv)
from .variations import make_variation

__all__ = ["run_scenario", "sweep"]


class _Checks:
    def __init__(self):
        self.items = []

    def add(self, name: str, value: float, tol: float, ok: bool | None = None,
            kind: str = "leq"):
        if ok is None:
            ok = (value <= tol) if kind == "leq" else (value >= tol)
        self.items.append({"name": name, "value": float(value),
                           "tolerance": float(tol), "kind": kind,
                           "passed": bool(ok)})

    def all_passed(self) -> bool:
        return all(c["passed"] for c in self.items)


def _build_geometry(cfg: ScenarioConfig, n_r: int | None = None,
                    n_phi: int | None = None):
    chart = make_chart(cfg.chart_family, **cfg.chart_params)
    region = make_region(cfg.region_name, **cfg.region_params)
    if chart.topology == DISK:
        grid = build_grid(DISK, n_r or cfg.n_r, n_phi or cfg.n_phi, r0=cfg.r0)
    else:
        grid = build_grid(ANNULUS, n_r or cfg.n_r, n_phi or cfg.n_phi,
                          t_range=cfg.t_range)
    geom = sample_geometry(chart, grid, region,
                           tol_boundary=cfg.tolerances["boundary"],
                           tol_frame=cfg.tolerances["frame"],
                           tol_conformal=cfg.tolerances["conformal"],
                           eps_metric=cfg.tolerances["metric_eps"])
    return geom


def _effective_theta(cfg: ScenarioConfig, geom) -> float:
    if cfg.theta is not None:
        return cfg.theta
    walls = geom.wall_rings()
    if walls:
        return float(np.mean([rd.alpha.mean() for rd in walls]))
    return np.pi / 2.0


def _seeded_fields(cfg: ScenarioConfig, geom, damp: bool):
    fields = []
    for i in range(cfg.n_fields):
        fields.append(make_variation(geom, ("ambient-poly", cfg.field_degree),
                                     seed=cfg.seed + 101 * i,
                                     damp_pole_sigma=damp))
    return fields


def _suite_geometry(cfg, geom, theta, checks: _Checks) -> dict:
    g = geom.grid
    out = {
        "chart": geom.chart.family,
        "region": geom.ambient.name,
        "grid": [g.n_r, g.n_phi],
        "area": area(geom),
        "dirichlet_energy": dirichlet_energy(geom),
        "conformality_residual": geom.conf_residual,
        "H_range": [float(geom.H_sc.min()), float(geom.H_sc.max())],
        "normA2_range": [float(geom.normA2.min()), float(geom.normA2.max())],
        "B": geom.B,
        "J": geom.J,
    }
    ca = contact_angle(geom, theta)
    out["contact_angle"] = {
        "theta_ref": ca["theta_ref"],
        "per_ring_mean": {str(k): float(np.mean(v)) for k, v in ca["rings"].items()},
        "max_dev": ca["max_dev"],
    }
    if geom.conformal:
        checks.add("conformality_residual", geom.conf_residual,
                   cfg.tolerances["conformal"])
    gap = out["dirichlet_energy"] - out["area"]
    out["energy_area_gap"] = gap
    checks.add("energy_minus_area_nonneg", -gap, 1e-10)

    # capillary criticality on a grid ladder
    if cfg.h > 0.0 or cfg.theta is not None:
        F = FunctionalId("AREA_MOD", h=cfg.h, theta=theta)
        ladder_res = []
        for (nr, nphi) in cfg.ladder:
            gg = _build_geometry(cfg, nr, nphi)
            res_fields = []
            for rec in (("translation", 0), ("translation", 1),
                        ("normal", {(0, 0, 0): 1.0, (1, 0, 0): 0.5})):
                v = make_variation(gg, rec, damp_pole_sigma=True)
                val, _ = first_variation(F, gg, v, tangency_tol=1e-6)
                res_fields.append(abs(val))
            ladder_res.append(max(res_fields))
        out["criticality_ladder"] = ladder_res
        sat = cfg.tolerances["criticality_saturation"]
        orders = []
        for a, b in zip(ladder_res, ladder_res[1:]):
            if a > sat and b > sat:
                orders.append(np.log2(a / b))
        out["criticality_orders"] = orders
        ok = all(o >= 2.0 for o in orders) if orders else ladder_res[-1] <= sat
        checks.add("criticality_order", min(orders) if orders else 99.0, 2.0,
                   ok=ok, kind="geq")
        if ca["max_dev"] is not None:
            checks.add("contact_angle_dev", ca["max_dev"],
                       cfg.tolerances["criticality_angle"])
    return out


def _suite_comparison(cfg, geom, checks: _Checks) -> dict:
    fields = _seeded_fields(cfg, geom, damp=False)
    out = {"fields": []}
    for i, vf in enumerate(fields):
        rec = verify_comparison(geom, vf)
        tol = max(cfg.tolerances["comparison_abs"],
                  cfg.tolerances["comparison_rel"] * abs(rec["deficit"]))
        checks.add(f"comparison_residual_field{i}", rec["max_abs_residual"], tol)
        checks.add(f"comparison_profile_spread_field{i}",
                   rec["profile_gap_spread"],
                   max(1e-6, 1e-4 * abs(rec["deficit"])))
        out["fields"].append({
            "seed": vf.recipe.get("seed"),
            "deficit": rec["deficit"],
            "max_abs_residual": rec["max_abs_residual"],
            "profile_gap_spread": rec["profile_gap_spread"],
            "profile_area_spread": rec["profile_area_spread"],
        })
    return out


def _suite_hessians(cfg, geom, theta, checks: _Checks) -> dict:
    fields = _seeded_fields(cfg, geom, damp=True)
    out = {"formulas": {}}
    crit_ok = True
    try:
        hessian_oracle_check("CMC_CAP", geom, fields[0], h=cfg.h, theta=theta)
    except ValueError:
        crit_ok = False
    for formula in FORMULAS:
        if formula == "CMC_CAP" and not crit_ok:
            out["formulas"][formula] = {"skipped": "not capillary-critical"}
            continue
        rows = []
        for i, vf in enumerate(fields):
            r = hessian_oracle_check(formula, geom, vf, h=cfg.h, theta=theta)
            rows.append({"analytic": r["analytic"], "oracle": r["oracle"],
                         "rel_err": r["rel_err"]})
            checks.add(f"hessian_{formula}_field{i}", r["rel_err"],
                       cfg.tolerances["hessian_rel"])
        out["formulas"][formula] = rows
    return out


def _suite_spectra(cfg, geom, theta, checks: _Checks, outdir: Path | None) -> dict:
    out = {"ladder": []}
    indices = []
    for (nr, nphi) in cfg.ladder:
        gg = _build_geometry(cfg, nr, nphi)
        form = assemble_Q(gg, theta=theta)
        mi = morse_index(form, tol_null=cfg.tolerances["null"])
        out["ladder"].append({
            "grid": [nr, nphi],
            "index": mi["index"],
            "nullity": mi["nullity"],
            "low_eigenvalues": [float(x) for x in mi["eigenvalues"]],
            "symmetry_residual": form.symmetry_residual(),
        })
        indices.append(mi["index"])
        checks.add(f"Q_symmetry_{nr}x{nphi}", form.symmetry_residual(), 1e-12)
    stable = len(set(indices[-2:])) == 1 if len(indices) >= 2 else True
    out["index"] = indices[-1]
    out["index_stable"] = stable
    checks.add("Q_index_stable", 0.0 if stable else 1.0, 0.5)

    # energy index on the middle ladder grid (vector problem is larger)
    nr, nphi = cfg.ladder[min(1, len(cfg.ladder) - 1)]
    gg = _build_geometry(cfg, nr, nphi)
    fe = assemble_QE(gg, h=cfg.h, theta=theta)
    mie = morse_index(fe, tol_null=cfg.tolerances["null"])
    out["energy_index"] = mie["index"]
    out["energy_nullity"] = mie["nullity"]
    out["energy_grid"] = [nr, nphi]
    checks.add("QE_symmetry", fe.symmetry_residual(), 1e-12)

    # heat traces: Neumann scalar and the Robin comparison problem
    gg2 = _build_geometry(cfg, *cfg.ladder[0])
    neu = eigs(assemble_Q(gg2, theta=theta, potential="none", robin="none"), k="all")
    rob = eigs(assemble_scalar_robin(gg2, geom.B * np.sin(theta)), k="all")
    c_count = 4 * geom.J**2 + 2 * cfg.h**2 + 2 * geom.B**2
    traces = []
    for t in (0.01, 0.1, 1.0):
        kN = heat_trace(neu, t)
        kR = heat_trace(rob, t)
        cc = counting_check(rob, c_count, t)
        traces.append({"t": t, "k_neumann": kN["trace"],
                       "k_bar_vector": 3.0 * kR["trace"],
                       "ratio_k_over_3kbar": kN["trace"] / (3.0 * kR["trace"]),
                       "counting": cc})
        checks.add(f"counting_inequality_t{t}", 0.0 if cc["holds"] else 1.0, 0.5)
    out["heat_traces"] = traces
    out["eigensolver_residual_max"] = float(max(neu.residuals.max(),
                                                rob.residuals.max()))
    if outdir is not None and cfg.export_csv:
        spectrum_csv(neu, str(outdir / "spectrum_neumann.csv"))
        spectrum_csv(rob, str(outdir / "spectrum_robin.csv"))
    return out


def _suite_reparam(cfg, geom, theta, checks: _Checks, spectra: dict) -> dict:
    form = assemble_Q(geom, theta=theta)
    vals, vecs = eigenpairs(form, k=1)
    f = vecs[:, 0].reshape(geom.grid.shape)
    qff = float(vecs[:, 0] @ (form.S @ vecs[:, 0]))
    sol = solve_conformal_reparam(geom, f, theta)
    out = {"eigenvalue": float(vals[0]), "Q_ff": qff, **sol.record()}
    checks.add("reparam_pde_residual", sol.pde_residual, 1e-6)
    checks.add("reparam_bc_residual", sol.bc_residual, 1e-6)
    fe = assemble_QE(geom, h=cfg.h, theta=theta)
    vfull = f[..., None] * geom.nu + sol.sigma
    qe = float(fe.contract(fe.project_field(vfull)))
    out["QE_contraction"] = qe
    out["QQE_rel_diff"] = abs(qe - qff) / max(abs(qff), 1e-300)
    checks.add("Q_equals_QE_rel", out["QQE_rel_diff"], cfg.tolerances["reparam_rel"])
    # Theorem comparison of indices
    if "index" in spectra and "energy_index" in spectra:
        r_top = topological_r(TopologySignature(*cfg.topology_signature))["r"]
        lhs = spectra["index"]
        rhs = spectra["energy_index"] + r_top
        out["index_inequality"] = {"i_sigma": lhs, "i_energy": spectra["energy_index"],
                                   "r": r_top, "holds": lhs <= rhs}
        checks.add("index_comparison_inequality", 0.0 if lhs <= rhs else 1.0, 0.5)
    return out


def _suite_bounds(cfg, geom, theta, checks: _Checks, spectra: dict) -> dict:
    sig = TopologySignature(*cfg.topology_signature)
    rrec = topological_r(sig)
    rho = geom.ambient.focal_radius
    if not np.isfinite(rho):
        rho = cfg.rho_max * geom.chart.scale
    bi = BoundInputs(theta=min(theta, np.pi / 2), h=cfg.h, J=geom.J, B=geom.B,
                     area=area(geom), rho=rho, r=rrec["r"])
    rec = index_bound(bi, user_constant=cfg.user_constant)
    out = {"topological_r": rrec, "maslov_index": maslov_index(sig),
           "bound_record": rec}
    if rec["f_t0_agreement"] is not None:
        checks.add("bound_minimization_agreement", rec["f_t0_agreement"], 1e-6)
    if "index" in spectra:
        ok = rec["bound"] >= spectra["index"]
        out["bound_vs_index"] = {"bound": rec["bound"], "i_sigma": spectra["index"],
                                 "holds": ok}
        checks.add("explicit_bound_geq_index", 0.0 if ok else 1.0, 0.5)

    rng = np.random.default_rng(cfg.seed + 777)
    worst = np.inf
    for _ in range(cfg.sobolev_fields):
        coeff = rng.standard_normal((3, 3))
        x, y = geom.grid.x, geom.grid.y
        f = sum(coeff[i, j] * x**i * y**j for i in range(3) for j in range(3))
        sc = sobolev_check(geom, f, rho=rho, theta=theta)
        worst = min(worst, sc["margin"])
    out["sobolev_min_margin"] = float(worst)
    checks.add("sobolev_margin_nonneg", -worst, 0.0)

    ne = normal_extension(geom.ambient, cfg.extension_eps, rho_max=cfg.rho_max)
    out["normal_extension"] = ne
    checks.add("extension_sup_X", ne["sup_X"], 1.0 + 1e-9)
    checks.add("extension_sup_grad", ne["sup_grad"],
               ne["grad_target"] * (1.0 + 1e-2))
    return out


def run_scenario(cfg: ScenarioConfig, out_dir: str | None = None) -> dict:
    """Execute the configured suites; returns the full report dict."""
    warnings.filterwarnings("ignore", message="theta = pi/2")
    checks = _Checks()
    outp = Path(out_dir or cfg.out_dir)
    outp.mkdir(parents=True, exist_ok=True)
    geom = _build_geometry(cfg)
    theta = _effective_theta(cfg, geom)
    report = {
        "provenance": {
            "config_hash": config_hash(cfg),
            "seed": cfg.seed,
            "version": __version__,
            "effective_config": cfg.as_dict(),
            "effective_theta": theta,
        },
        "suites": {},
    }
    report["suites"]["geometry"] = _suite_geometry(cfg, geom, theta, checks)
    if cfg.export_obj:
        export_obj(geom, str(outp / f"{cfg.name}.obj"))
    spectra: dict = {}
    for suite in cfg.suites:
        if suite == "geometry":
            continue
        if suite == "comparison":
            report["suites"]["comparison"] = _suite_comparison(cfg, geom, checks)
        elif suite == "hessians":
            report["suites"]["hessians"] = _suite_hessians(cfg, geom, theta, checks)
        elif suite == "spectra":
            spectra = _suite_spectra(cfg, geom, theta, checks,
                                     outp if cfg.export_csv else None)
            report["suites"]["spectra"] = spectra
        elif suite == "reparam":
            report["suites"]["reparam"] = _suite_reparam(cfg, geom, theta,
                                                         checks, spectra)
        elif suite == "bounds":
            report["suites"]["bounds"] = _suite_bounds(cfg, geom, theta,
                                                       checks, spectra)
    report["checks"] = checks.items
    report["all_passed"] = checks.all_passed()
    (outp / f"{cfg.name}.report.json").write_text(
        canonical_json(report) + "\n", encoding="utf-8")
    return report


def sweep(cfg: ScenarioConfig, axis: str, values: list, out_dir: str | None = None,
          workers: int = 1) -> list[dict]:
    """One run_scenario per axis value; deterministic row order."""
    import dataclasses
    from concurrent.futures import ProcessPoolExecutor

    if axis not in ("theta", "h", "grid", "seed"):
        raise ValueError(f"sweep axis must be theta|h|grid|seed, got {axis!r}")
    configs = []
    for val in values:
        if axis == "theta":
            sub = dataclasses.replace(cfg, theta=float(val),
                                      name=f"{cfg.name}_theta{val}")
            if cfg.chart_family == "spherical-cap":
                sub = dataclasses.replace(
                    sub, chart_params={**cfg.chart_params, "theta_c": float(val)})
        elif axis == "h":
            sub = dataclasses.replace(cfg, h=float(val), name=f"{cfg.name}_h{val}")
        elif axis == "grid":
            n_r = int(val)
            sub = dataclasses.replace(cfg, n_r=n_r, n_phi=2 * n_r,
                                      name=f"{cfg.name}_grid{n_r}")
        else:
            sub = dataclasses.replace(cfg, seed=int(val), name=f"{cfg.name}_seed{val}")
        configs.append(sub)

    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_sweep_one, [(c, out_dir) for c in configs]))
    else:
        rows = [_sweep_one((c, out_dir)) for c in configs]
    return rows


def _sweep_one(args) -> dict:
    cfg, out_dir = args
    rep = run_scenario(cfg, out_dir=out_dir)
    row = {"name": cfg.name, "seed": cfg.seed, "all_passed": rep["all_passed"]}
    geo = rep["suites"].get("geometry", {})
    row["area"] = geo.get("area")
    sp = rep["suites"].get("spectra", {})
    row["index"] = sp.get("index")
    row["energy_index"] = sp.get("energy_index")
    bd = rep["suites"].get("bounds", {})
    if "bound_record" in bd:
        row["bound"] = bd["bound_record"]["bound"]
    cmp_ = rep["suites"].get("comparison", {})
    if cmp_.get("fields"):
        row["comparison_max_residual"] = max(f["max_abs_residual"]
                                             for f in cmp_["fields"])
    return row


def sweep_csv(rows: list[dict], path: str) -> None:
    keys = sorted({k for r in rows for k in r})
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(keys) + "\n")
        for r in rows:
            fh.write(",".join("" if r.get(k) is None else repr(r.get(k))
                              for k in keys) + "\n")
