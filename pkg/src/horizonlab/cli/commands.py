"""Command implementations; each returns a dict of artifact name -> bytes."""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from ..analysis import fit_decay, fit_late_constant, fit_power, fit_prony, regularity_predictors
from ..errors import ConfigError, HorizonlabError
from ..spacetime import SpacetimeParams, build_charts, horizon_data
from ..spacetime.params import Family
from ..waves import ExteriorConfig, HorizonData1D, InteriorConfig, exterior_evolve, interior_evolve
from ..waves.io import MAGIC


# formatting -------------------------------------------------------------------
def clean(obj):
    """JSON-safe copy with numpy scalars converted and non-finite floats as strings."""
    if isinstance(obj, dict):
        return {str(k): clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [clean(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return f if math.isfinite(f) else repr(f)
    return obj


def dumps(obj) -> bytes:
    return (json.dumps(clean(obj), sort_keys=True, indent=2) + "\n").encode()


def fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def table(header, rows) -> bytes:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue().encode()


def snapshot_bytes(data, axes, meta) -> bytes:
    data = np.ascontiguousarray(data, dtype="<f8")
    header = {"shape": list(data.shape), "dtype": "<f8",
              "axes": {k: [float(x) for x in np.asarray(v).ravel()] for k, v in axes.items()},
              "meta": clean(meta)}
    return MAGIC + json.dumps(header, sort_keys=True).encode() + b"\n" + data.tobytes()


# shared -------------------------------------------------------------------------
def make_params(sec) -> SpacetimeParams:
    fam = Family(sec.family)
    if fam is Family.RNDS:
        return SpacetimeParams.rnds(sec.lam, sec.mass, sec.charge)
    if fam is Family.KDS:
        return SpacetimeParams.kds(sec.lam, sec.mass, sec.spin)
    if fam is Family.RN_FLAT:
        return SpacetimeParams.rn_flat(sec.mass, sec.charge)
    return SpacetimeParams.de_sitter(sec.lam)


PARAM_COLUMNS = ["family", "lam", "mass", "charge", "spin", "r1", "r2", "r3", "kappa1", "kappa2", "kappa3",
                 "beta1", "beta2", "beta3", "r_P", "nu_min", "gamma0"]


def params_row(params) -> dict:
    d = horizon_data(params).as_dict()
    row = {"family": params.family.value, "lam": params.lam, "mass": params.mass, "charge": params.charge,
           "spin": params.spin}
    for k in PARAM_COLUMNS[5:]:
        row[k] = d.get(k)
    return row


# commands -----------------------------------------------------------------------
def cmd_params(cfg):
    p = make_params(cfg.params)
    row = params_row(p)
    return {"params.csv": table(PARAM_COLUMNS, [[row[k] for k in PARAM_COLUMNS]]),
            "params.json": dumps(horizon_data(p).as_dict())}


def cmd_flow(cfg):
    from ..bflow import BPhasePoint, integrate, linearize_radial, linearize_trapping, measure_beta
    from ..bflow.charts import StarChart, StaticChart, ef_chart
    from ..bflow.phase import KdSChart, solve_xi
    from ..bflow.structure import kds_trapped_datum

    p = make_params(cfg.params)
    f = cfg.flow
    tol = cfg.tolerances
    out = {}
    if f.kind == "kds-trapped":
        if p.family is not Family.KDS:
            raise ConfigError("kds-trapped needs family KdS", path="flow.kind")
        hd = horizon_data(p)
        chart = KdSChart(p, s=-1, r_max=2.0 * hd.r3)
        pt = kds_trapped_datum(chart, hd, f.theta, f.sigma, f.zeta)
        tr = integrate(pt, chart, f.span, rtol=tol.rtol, atol=tol.atol, n_out=f.n_out)
        out["trajectory.csv"] = tr.to_csv().encode()
        out["flow.json"] = dumps(tr.summary())
        return out
    if p.family is Family.KDS:
        raise ConfigError("only kds-trapped flows are available for KdS", path="flow.kind")
    hd = horizon_data(p)
    if f.kind == "trapping":
        res = linearize_trapping(p, sigma=f.sigma, horizons=hd)
        out["flow.json"] = dumps(res)
        return out
    if f.chart == "star":
        chart = StarChart(build_charts(p))
    elif f.chart == "static":
        chart = StaticChart(p)
    else:
        if f.j not in hd.radii:
            raise ConfigError(f"no horizon r_{f.j}", path="flow.j")
        chart = ef_chart(p, hd, f.j)
    if f.kind == "radial":
        out["flow.json"] = dumps(linearize_radial(chart, hd, f.j, f.sign))
        return out
    if f.kind == "beta":
        res = measure_beta(chart, hd, f.j, f.sign)
        tr = res.pop("trajectory")
        out["trajectory.csv"] = tr.to_csv().encode()
        out["flow.json"] = dumps(res)
        return out
    # trajectory
    if f.r is None and hd.trapping is None:
        raise ConfigError("no photon sphere; give flow.r", path="flow.r")
    r0 = f.r if f.r is not None else hd.trapping.r_p
    xi = solve_xi(chart, r0, f.sigma, f.eta, f.xi_branch)
    pt = BPhasePoint(1.0, r0, f.sigma, xi, eta=f.eta)
    tr = integrate(pt, chart, f.span, rtol=tol.rtol, atol=tol.atol, n_out=f.n_out)
    out["trajectory.csv"] = tr.to_csv().encode()
    out["flow.json"] = dumps(tr.summary())
    return out


def _exterior_config(p, charts, sec):
    hd = charts.horizons
    d = charts.delta
    de = sec.delta_exc if sec.delta_exc is not None else d
    if sec.probes is not None:
        probes = tuple(sec.probes)
    elif p.family is Family.DS:
        probes = (0.5 * hd.r3, hd.r3)
    else:
        probes = (hd.r2 - 0.5 * de, hd.r2, 0.5 * (hd.r2 + hd.r3))
    if p.family is Family.DS:
        centre = sec.pulse.center if sec.pulse.center is not None else 0.4 * hd.r3
    else:
        centre = sec.pulse.center if sec.pulse.center is not None else hd.r2 + 0.25 * (hd.r3 - hd.r2)
    return ExteriorConfig(ell=sec.ell, mass2=sec.mass2, n=sec.n, cfl=sec.cfl, ko=sec.ko, t_end=sec.t_end,
                          dt=sec.dt, delta_exc=sec.delta_exc, delta_out=sec.delta_out, pulse_center=centre,
                          pulse_width=sec.pulse.width, pulse_amp=sec.pulse.amp, pulse_kind=sec.pulse.kind,
                          probes=probes, record_dt=sec.record_dt, snapshot_every=sec.snapshot_every)


def run_exterior(p, sec):
    charts = build_charts(p)
    ecfg = _exterior_config(p, charts, sec)
    field, ts = exterior_evolve(charts, ecfg)
    window = tuple(sec.fit_window) if sec.fit_window is not None else (0.5 * sec.t_end, sec.t_end)
    fits = {}
    for k, r in enumerate(ts.radii):
        try:
            res = fit_late_constant(ts.t, ts.column(k), window)
            fits[repr(float(r))] = res.as_dict()
        except HorizonlabError as exc:
            fits[repr(float(r))] = {"error": str(exc)}
    return charts, ecfg, field, ts, fits


def _exterior_artifacts(p, sec, charts, ecfg, field, ts, fits):
    out = {
        "probes.csv": ts.to_csv().encode(),
        "final.snap": snapshot_bytes(np.vstack([field.u, field.pi, field.phi]),
                                              {"r": field.r}, {"rows": ["u", "u_t", "u_r"], "t": field.t}),
        "exterior.json": dumps({"meta": field.meta, "probes": list(ts.radii), "fits": fits,
                                         "pulse_center": ecfg.pulse_center, "delta": charts.delta,
                                         "pulse_amp": ecfg.pulse_amp}),
    }
    if field.snapshots:
        data = np.array([s[1] for s in field.snapshots])
        out["snapshots.snap"] = snapshot_bytes(data, {"t": [s[0] for s in field.snapshots], "r": field.r},
                                                        {"field": "u"})
    return out


def cmd_evolve_exterior(cfg):
    p = make_params(cfg.params)
    charts, ecfg, field, ts, fits = run_exterior(p, cfg.exterior)
    return _exterior_artifacts(p, cfg.exterior, charts, ecfg, field, ts, fits)


def _read_series(path, t_column, column, where):
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise ConfigError(f"cannot read series: {exc}", path=f"{where}.input" if where == "fit" else f"{where}.series_csv") from exc
    if len(rows) < 2:
        raise ConfigError("series CSV has no data rows", path=f"{where}.input" if where == "fit" else f"{where}.series_csv")
    head = rows[0]
    if t_column not in head:
        raise ConfigError(f"column {t_column!r} not in {head}", path=f"{where}.t_column")
    col = column if column is not None else next(h for h in head if h != t_column)
    if col not in head:
        raise ConfigError(f"column {col!r} not in {head}", path=f"{where}.column")
    it, ic = head.index(t_column), head.index(col)
    t = np.array([float(r[it]) for r in rows[1:]])
    y = np.array([float(r[ic]) for r in rows[1:]])
    return t, y, col


def _interior_config(sec, data):
    return InteriorConfig(ell=sec.ell, mass2=sec.mass2, h=sec.h, u_min=sec.u_min, u_max=sec.u_max,
                          v_min=sec.v_min, v_max=sec.v_max, horizon=data, transversal=sec.transversal,
                          pulse_center=sec.pulse_center, pulse_width=sec.pulse_width, pulse_amp=sec.pulse_amp,
                          probe_u=tuple(sec.probe_u), snapshot_shape=tuple(sec.snapshot_shape), scheme=sec.scheme)


def interior_diagnostics(res, window):
    """Per-ray d_v decay fits and transversal exponents in V."""
    out = {}
    for u in sorted(res.rays):
        d = res.dphi_dv(u)
        entry = {}
        try:
            entry["dv_decay"] = fit_decay(res.v, d, window, constant=False).as_dict()
        except HorizonlabError as exc:
            entry["dv_decay"] = {"error": str(exc)}
        try:
            lV = res.log_abs_V()
            lD = res.log_abs_dphi_dV(u)
            m = (res.v >= window[0]) & (res.v <= window[1])
            entry["transversal"] = fit_power(lV[m], lD[m], log_input=True).as_dict()
        except HorizonlabError as exc:
            entry["transversal"] = {"error": str(exc)}
        out[repr(float(u))] = entry
    return out


def _interior_artifacts(res, diag, extra):
    keys = sorted(res.rays)
    header = ["v"]
    cols = []
    for u in keys:
        header += [f"phi@u={u!r}", f"dphi_dv@u={u!r}", f"log_abs_dphi_dV@u={u!r}"]
        cols += [res.rays[u], res.dphi_dv(u), res.log_abs_dphi_dV(u)]
    rows = [[res.v[i]] + [c[i] for c in cols] for i in range(len(res.v))]
    summary = {"meta": res.meta, "sup_abs": res.sup_abs, "overflow": res.overflow, "kappa1": res.kappa1,
               "kappa2": res.kappa2, "predicted_exponent": res.kappa2 / res.kappa1 - 1.0, "rays": diag}
    summary.update(extra)
    return {
        "rays.csv": table(header, rows),
        "interior.snap": snapshot_bytes(res.snapshot, {"u": res.snapshot_u, "v": res.snapshot_v},
                                                 {"field": "phi"}),
        "interior.json": dumps(summary),
    }


def cmd_evolve_interior(cfg):
    p = make_params(cfg.params)
    sec = cfg.interior
    d = sec.data
    if d.kind == "series":
        if d.series_csv is None:
            raise ConfigError("series data need series_csv", path="interior.data.series_csv")
        t, y, _ = _read_series(d.series_csv, d.t_column, d.column, "interior.data")
        data = HorizonData1D(kind="series", t=t, values=y, v_shift=d.v_shift)
    else:
        data = HorizonData1D(kind="model", u0=d.u0, amp=d.amp, rate=d.rate)
    res = interior_evolve(p, _interior_config(sec, data))
    window = tuple(sec.fit_window) if sec.fit_window is not None else (0.5 * sec.v_max, 0.95 * sec.v_max)
    return _interior_artifacts(res, interior_diagnostics(res, window), {"fit_window": list(window)})


def cmd_fit(cfg):
    f = cfg.fit
    if f.input is None:
        raise ConfigError("fit needs an input CSV", path="fit.input")
    t, y, col = _read_series(f.input, f.t_column, f.column, "fit")
    win = tuple(f.window) if f.window is not None else None
    if f.method == "decay":
        res = fit_decay(t, y, win, constant=f.constant)
    elif f.method == "prony":
        res = fit_prony(t, y, win, max_modes=f.max_modes, constant=f.constant)
    elif f.method == "late-constant":
        res = fit_late_constant(t, y, win)
    else:
        res = fit_power(t, y, win, log_input=f.log_input)
    d = res.as_dict()
    d["provenance"]["input"] = {"path": f.input, "column": col}
    return {"fit.json": dumps(d)}


def _scan_point(args):
    cfg_dict, point = args
    from .config import RunConfig

    cfg = RunConfig.model_validate(cfg_dict)
    psec = cfg.params.model_copy(update={k: v for k, v in point.items() if k in ("charge", "spin", "lam")})
    p = make_params(psec)
    row = dict(point)
    try:
        if cfg.scan.task == "params":
            row.update(params_row(p))
        else:
            esec = cfg.exterior.model_copy(update={k: (int(v) if k == "ell" else v) for k, v in point.items()
                                                   if k in ("ell", "mass2")})
            charts, ecfg, field, ts, fits = run_exterior(p, esec)
            k = 0
            fr = fits[repr(float(ts.radii[k]))]
            row.update({"probe": float(ts.radii[k]), "u0": fr.get("u0"), "alpha": fr.get("alpha"),
                        "method": fr.get("method", fr.get("error"))})
        row["status"] = "ok"
    except HorizonlabError as exc:
        row["status"] = f"error: {exc}"
    return row


def cmd_scan(cfg, jobs=1):
    axes = cfg.scan.axes
    if not axes:
        raise ConfigError("scan needs at least one axis", path="scan.axes")
    names = sorted(axes)
    grids = np.meshgrid(*[np.asarray(axes[n], dtype=float) for n in names], indexing="ij")
    points = [{n: float(g.ravel()[i]) for n, g in zip(names, grids)} for i in range(grids[0].size)]
    payload = [(cfg.model_dump(), pt) for pt in points]
    if jobs > 1 and len(points) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            rows = list(ex.map(_scan_point, payload))
    else:
        rows = [_scan_point(a) for a in payload]
    cols = list(names)
    for r in rows:
        for k in r:
            if k not in cols:
                cols.append(k)
    return {"scan.csv": table(cols, [[r.get(c) for c in cols] for r in rows]),
            "scan.json": dumps({"axes": axes, "task": cfg.scan.task, "rows": rows})}


def cmd_pipeline(cfg):
    """Exterior evolution -> near-horizon tail -> interior block -> fits and predictors."""
    p = make_params(cfg.params)
    if p.family is not Family.RNDS or p.charge == 0:
        raise ConfigError("pipeline needs a charged RNdS family", path="params")
    esec = cfg.exterior
    charts, ecfg, field, ts, fits = run_exterior(p, esec)
    out = _exterior_artifacts(p, esec, charts, ecfg, field, ts, fits)
    hd = charts.horizons
    de = esec.delta_exc if esec.delta_exc is not None else charts.delta
    r_tail = hd.r2 - 0.5 * de
    k = int(np.argmin(np.abs(ts.radii - r_tail)))
    t, y = ts.t, ts.column(k)
    out["tail.csv"] = table(["t", "u"], zip(t, y))
    window = tuple(esec.fit_window) if esec.fit_window is not None else (0.5 * esec.t_end, esec.t_end)
    try:
        tail_fit = fit_late_constant(t, y, window).as_dict()
    except HorizonlabError as exc:
        tail_fit = {"error": str(exc)}
    isec = cfg.interior
    v_max = min(isec.v_max, float(t[-1]))
    data = HorizonData1D(kind="series", t=t, values=y, v_shift=isec.data.v_shift)
    icfg = _interior_config(isec, data)
    icfg.v_max = v_max
    res = interior_evolve(p, icfg)
    iwin = tuple(isec.fit_window) if isec.fit_window is not None else (0.5 * v_max, 0.95 * v_max)
    diag = interior_diagnostics(res, iwin)
    alpha = tail_fit.get("alpha")
    preds = regularity_predictors(horizon_data(p), alpha if alpha is not None else 0.0)
    out.update(_interior_artifacts(res, diag, {"fit_window": list(iwin)}))
    out["pipeline.json"] = dumps({"tail_probe": float(ts.radii[k]), "tail_fit": tail_fit, "interior_sup": res.sup_abs,
                                  "interior_rays": diag, "predictors": preds,
                                  "coupling": "pchip resampling of the near-horizon probe onto v = t_* + v_shift"})
    return out


DISPATCH = {
    "params": cmd_params,
    "flow": cmd_flow,
    "evolve-exterior": cmd_evolve_exterior,
    "evolve-interior": cmd_evolve_interior,
    "fit": cmd_fit,
    "pipeline": cmd_pipeline,
}

