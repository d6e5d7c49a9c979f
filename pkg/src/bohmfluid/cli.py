"""Command line: ``bohmfluid run|verify|sweep``.

Exit codes: 0 ok, 1 failed verification, 2 bad config or unknown scenario,
3 numerical abort (``diagnostics.txt`` written to the run directory).
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from . import __version__
from . import covariant as C
from . import madelung as MD
from . import nonlocal_energy as NL
from . import potentials as PT
from . import schrodinger as SC
from ._accel import backend
from .config import config_hash, is_numeric, parse_text, set_value
from .errors import NumericalAbort, ValidationError
from .fields import ComplexField, Grid1D, ScalarField, SpacetimeField
from .params import PhysicalParams

OUT_ENV = "BOHMFLUID_OUT"
FMT = "%.17g"


# ---------------------------------------------------------------- building blocks

def build(cfg):
    g = Grid1D(cfg["grid"]["n"], cfg["grid"]["length"])
    ph = cfg["physics"]
    p = PhysicalParams(hbar=ph["hbar"], mass=ph["mass"], kT=ph["kT"], c=ph["c"], rho_floor=ph["rho_floor"])
    p = p.with_(a=PT.thermal_length(p) if ph["a"] == "thermal" else float(ph["a"]))
    sc = cfg["scenario"]
    V = None
    if sc["potential"] == "harmonic":
        V = ScalarField(g, 0.5 * p.mass * sc["omega"] ** 2 * g.x ** 2)
    return g, p, V


def build_kernel(cfg):
    k = cfg["kernel"]
    kw = dict(family=k["family"], dimension=k["dimension"], scale=k["scale"])
    if k["family"] == "dog":
        kw.update(A=k["A"], sigma1=k["sigma1"], B=k["B"], sigma2=k["sigma2"])
    elif k["family"] == "tabulated":
        kw.update(r_tab=np.array(k["r"]), u_tab=np.array(k["u"]))
    return NL.Kernel(**kw)


def initial_state(cfg, g, p):
    """(rho, S, v) arrays for the configured initial condition."""
    sc = cfg["scenario"]
    x = g.x
    kind = sc["initial"]
    s0 = sc["sigma0"]
    S = p.hbar * 2 * np.pi * sc["winding"] / g.length * (x - x[0])
    v = np.zeros(g.n)
    if kind == "gaussian":
        rho = np.exp(-(x - sc["x0"]) ** 2 / (2 * s0 ** 2)) / (np.sqrt(2 * np.pi) * s0)
    elif kind in ("ground", "coherent"):
        w = p.mass * sc["omega"] / p.hbar
        x0 = sc["x0"] if kind == "coherent" else 0.0
        rho = np.sqrt(w / np.pi) * np.exp(-w * (x - x0) ** 2)
    elif kind == "pulse":
        rho = 1 + sc["amplitude"] * np.exp(-(x - sc["x0"]) ** 2 / s0 ** 2)
        v = sc["v0"] * np.sin(2 * np.pi * x / g.length)
    else:
        from .acceptance import random_log_field
        rho = np.exp(random_log_field(g, np.random.default_rng(sc["seed"])))
    rho = rho + sc["background"]
    return rho, S, v


def step_size(cfg, default):
    dt = cfg["scenario"]["dt"]
    return default if dt == "auto" else float(dt)


# ---------------------------------------------------------------- output helpers

class Writer:
    def __init__(self, outdir):
        self.dir = outdir
        os.makedirs(outdir, exist_ok=True)

    def path(self, name):
        return os.path.join(self.dir, name)

    def csv(self, name, header, columns):
        data = np.column_stack([np.asarray(c, float) for c in columns])
        np.savetxt(self.path(name), data, fmt=FMT, delimiter=",", header=",".join(header), comments="")

    def text(self, name, body):
        with open(self.path(name), "w") as f:
            f.write(body)

    def gnuplot(self, name, datafile, xcol, ycols, xlabel, ylabel, logy=False):
        lines = ["set datafile separator ','", f"set xlabel '{xlabel}'", f"set ylabel '{ylabel}'"]
        if logy:
            lines.append("set logscale y")
        plots = [f"'{datafile}' using {xcol}:{c} skip 1 with lines title '{t}'" for c, t in ycols]
        lines.append("plot " + ", \\\n     ".join(plots))
        self.text(name, "\n".join(lines) + "\n")


def resolve_outdir(cfg, override=None):
    if override:
        return override
    d = cfg["output"]["dir"] or os.path.join("runs", cfg["scenario"]["name"])
    root = os.environ.get(OUT_ENV)
    if root and not os.path.isabs(d):
        d = os.path.join(root, d)
    return d


def write_meta(w: Writer, cfg, dt, metrics, extra=None):
    g = cfg["grid"]
    meta = {
        "config_hash": config_hash(cfg),
        "version": __version__,
        "backend": backend(),
        "scenario": cfg["scenario"]["name"],
        "grid": {"n": g["n"], "length": g["length"], "dx": g["length"] / g["n"]},
        "dt": dt,
        "tolerances": {"rho_floor": cfg["physics"]["rho_floor"], "newton_tol": 1e-12,
                       "newton_maxit": 50, "tail_mass": 1e-12},
        "metrics": metrics,
    }
    if extra:
        meta.update(extra)
    w.text("meta.json", json.dumps(meta, indent=2, sort_keys=True, default=repr) + "\n")


def _l2rel(a, b):
    return float(np.linalg.norm(a - b) / np.linalg.norm(b))


# ---------------------------------------------------------------- scenarios

def _madelung_run(cfg, g, p, V, dt=None):
    rho, S, _ = initial_state(cfg, g, p)
    sc = cfg["scenario"]
    dt = dt or step_size(cfg, MD.default_dt(g, p))
    st = MD.MadelungState.from_arrays(g, rho, S)
    return MD.integrate(st, p, V, sc["t_end"], dt=dt, stride=sc["stride"], method=sc["method"]), dt


def _schrodinger_run(cfg, g, p, V, times):
    rho, S, _ = initial_state(cfg, g, p)
    psi = SC.inverse_madelung(ScalarField(g, rho), ScalarField(g, S), p)
    out = [psi]
    for t0, t1 in zip(times[:-1], times[1:]):
        steps = max(1, int(math.ceil((t1 - t0) / 1e-3 - 1e-9)))
        psi = SC.ssfm_evolve(psi, V, p, (t1 - t0) / steps, steps)
        out.append(psi)
    return out


def _write_madelung(w, cfg, sol, p):
    g = sol[0].grid
    if cfg["output"]["snapshots"]:
        for i, s in enumerate(sol):
            w.csv(f"density_t{i:04d}.csv", ["x", "rho", "S", "v"],
                  [g.x, s.rho.values, s.S.values, s.velocity(p, cfg["scenario"]["method"])])
    m0 = sol[0].mass()
    w.csv("times.csv", ["index", "t", "mass", "mass_drift"],
          [np.arange(len(sol)), [s.time for s in sol], [s.mass() for s in sol],
           [abs(s.mass() - m0) / m0 for s in sol]])
    w.gnuplot("plot_density.gp", f"density_t{len(sol) - 1:04d}.csv", 1, [(2, "rho")], "x", "rho")
    w.gnuplot("plot_mass.gp", "times.csv", 2, [(4, "relative mass drift")], "t", "drift", logy=True)
    return {"mass_drift": max(abs(s.mass() - m0) / m0 for s in sol)}


def scen_madelung(cfg, w):
    g, p, V = build(cfg)
    sol, dt = _madelung_run(cfg, g, p, V)
    metrics = _write_madelung(w, cfg, sol, p)
    ref = cfg["scenario"]["reference"]
    final = sol[-1].rho.values
    if ref == "fine_dt":
        fine, _ = _madelung_run(cfg, g, p, V, dt / cfg["scenario"]["reference_dt_factor"])
        metrics["error"] = _l2rel(final, fine[-1].rho.values)
    elif ref == "closed_form":
        metrics["error"] = _l2rel(final, _closed_form(cfg, g, p, sol[-1].time))
    elif ref == "schrodinger":
        psi = _schrodinger_run(cfg, g, p, V, [sol[0].time, sol[-1].time])[-1]
        metrics["error"] = _l2rel(final, np.abs(psi.values) ** 2)
    return dt, metrics


def _closed_form(cfg, g, p, t):
    sc = cfg["scenario"]
    if sc["initial"] != "gaussian" or sc["potential"] != "none" or sc["background"] != 0:
        raise ValidationError("closed-form reference needs a free Gaussian without background",
                              keys=["scenario.reference"])
    k0 = 2 * np.pi * sc["winding"] / g.length
    return SC.free_gaussian_density(g.x, t, sc["sigma0"], sc["x0"], p.hbar, p.mass, k0)


def scen_schrodinger(cfg, w):
    g, p, V = build(cfg)
    sc = cfg["scenario"]
    dt = step_size(cfg, 1e-3)
    n = int(math.ceil(sc["t_end"] / dt - 1e-9))
    dt = sc["t_end"] / n
    rho, S, _ = initial_state(cfg, g, p)
    psi = SC.inverse_madelung(ScalarField(g, rho), ScalarField(g, S), p)
    snaps, times = [psi], [0.0]
    done = 0
    while done < n:
        k = min(sc["stride"], n - done)
        psi = SC.ssfm_evolve(psi, V, p, dt, k)
        done += k
        snaps.append(psi)
        times.append(done * dt)
    if cfg["output"]["snapshots"]:
        for i, s in enumerate(snaps):
            w.csv(f"density_t{i:04d}.csv", ["x", "rho", "re_psi", "im_psi"],
                  [g.x, np.abs(s.values) ** 2, s.values.real, s.values.imag])
    n0 = snaps[0].norm()
    drift = [abs(s.norm() - n0) / n0 for s in snaps]
    w.csv("times.csv", ["index", "t", "norm", "norm_drift"], [np.arange(len(snaps)), times,
                                                              [s.norm() for s in snaps], drift])
    w.gnuplot("plot_density.gp", f"density_t{len(snaps) - 1:04d}.csv", 1, [(2, "|psi|^2")], "x", "rho")
    metrics = {"norm_drift": max(drift)}
    if sc["reference"] == "closed_form":
        metrics["error"] = _l2rel(np.abs(psi.values) ** 2, _closed_form(cfg, g, p, times[-1]))
    return dt, metrics


def scen_compare(cfg, w):
    g, p, V = build(cfg)
    sol, dt = _madelung_run(cfg, g, p, V)
    metrics = _write_madelung(w, cfg, sol, p)
    times = [s.time for s in sol]
    psis = _schrodinger_run(cfg, g, p, V, times)
    err = [_l2rel(s.rho.values, np.abs(q.values) ** 2) for s, q in zip(sol, psis)]
    cols, head = [times, err], ["t", "l2_madelung_vs_schrodinger"]
    sc = cfg["scenario"]
    if sc["initial"] == "gaussian" and sc["potential"] == "none" and sc["background"] == 0:
        cols.append([_l2rel(s.rho.values, _closed_form(cfg, g, p, s.time)) for s in sol])
        head.append("l2_madelung_vs_closed_form")
    w.csv("error_vs_time.csv", head, cols)
    w.gnuplot("plot_error.gp", "error_vs_time.csv", 1, [(i + 2, h) for i, h in enumerate(head[1:])],
              "t", "relative L2 error", logy=True)
    metrics["error"] = err[-1]
    return dt, metrics


def scen_relativistic(cfg, w):
    g, p, V = build(cfg)
    sc = cfg["scenario"]
    rho, _, v = initial_state(cfg, g, p)
    dt = step_size(cfg, C.default_rel_dt(g, p))
    st = C.RelFluidState.from_arrays(g, rho, v)
    sol = C.integrate_relativistic(st, p, V, sc["t_end"], dt=dt, stride=sc["stride"], sweeps=sc["sweeps"],
                                   h_variant=sc["h_variant"])
    if cfg["output"]["snapshots"]:
        for i, s in enumerate(sol):
            w.csv(f"density_t{i:04d}.csv", ["x", "rho", "v", "E", "M"], [g.x, s.rho.values, s.v.values, s.E, s.M])
    iE = np.array([s.E.sum() * g.dx for s in sol])
    iM = np.array([s.M.sum() * g.dx for s in sol])
    mscale = max(np.abs(sol[0].M).sum() * g.dx, iE[0] / p.c)
    w.csv("times.csv", ["index", "t", "int_E", "int_M"], [np.arange(len(sol)), [s.time for s in sol], iE, iM])
    w.gnuplot("plot_density.gp", f"density_t{len(sol) - 1:04d}.csv", 1, [(2, "rho"), (3, "v")], "x", "")
    metrics = {"energy_drift": float(np.abs(iE - iE[0]).max() / abs(iE[0])),
               "momentum_drift": float(np.abs(iM - iM[0]).max() / mscale)}
    if sc["reference"] == "madelung":
        if np.any(v != 0):
            raise ValidationError("Madelung reference needs v0 = 0", keys=["scenario.reference", "scenario.v0"])
        ref = MD.integrate(MD.MadelungState.from_arrays(g, rho, 0 * rho), p.with_(c=math.inf), V, sc["t_end"],
                           method="spectral", stride=10 ** 9)[-1].rho.values
        base = rho.mean()
        metrics["error"] = float(np.linalg.norm(sol[-1].rho.values - ref) / np.linalg.norm(ref - base))
    return dt, metrics


def scen_nonlocal(cfg, w):
    g, p, _ = build(cfg)
    rho, _, _ = initial_state(cfg, g, p)
    rho = ScalarField(g, rho)
    base = build_kernel(cfg)
    kT = p.kT if p.kT > 0 else 1.0
    scales = cfg["scenario"]["scales"] or [1.0]
    res, lead = [], []
    for s in scales:
        k = base.scaled(s)
        pp = p.with_(kT=kT, a=math.sqrt(NL.kernel_second_moment(k)))
        exact = NL.nonlocal_free_energy(rho, k, None, kT).values
        trunc = NL.truncated_free_energy(rho, pp, None).values
        local = kT * np.log(np.maximum(rho.values, p.rho_floor))
        res.append(float(np.abs(exact - trunc).max()))
        corr = trunc - local
        lead.append(float(np.abs(exact - local - corr).max() / np.abs(corr).max()))
    w.csv("truncation.csv", ["s", "residual", "leading_rel_err"], [scales, res, lead])
    k = base.scaled(scales[-1])
    pp = p.with_(kT=kT, a=math.sqrt(NL.kernel_second_moment(k)))
    w.csv("energy.csv", ["x", "rho", "exact", "truncated"],
          [g.x, rho.values, NL.nonlocal_free_energy(rho, k, None, kT).values,
           NL.truncated_free_energy(rho, pp, None).values])
    w.gnuplot("plot_truncation.gp", "truncation.csv", 1, [(2, "residual")], "s", "max residual", logy=True)
    metrics = {"error": res[-1], "leading_rel_err": lead[-1]}
    if len(scales) > 1:
        metrics["slope"] = float(np.polyfit(np.log(scales), np.log(res), 1)[0])
    return None, metrics


def scen_retarded(cfg, w):
    g, p, _ = build(cfg)
    sc = cfg["scenario"]
    k = build_kernel(cfg)
    kT = p.kT if p.kT > 0 else 1.0
    pp = p.with_(kT=kT, a=math.sqrt(NL.kernel_second_moment(k)))
    rho0, _, _ = initial_state(cfg, g, p)
    ln0 = np.log(rho0)
    lhat = np.fft.rfft(ln0)
    kk = 2 * np.pi * np.fft.rfftfreq(g.n, g.dx)

    def field(x, t):       # ln rho translated at wave_speed (exact spectral shift)
        return np.exp(np.fft.irfft(lhat * np.exp(-1j * kk * sc["wave_speed"] * t), g.n))

    hdt = sc["history_dt"]
    depth = int(math.ceil(0.5 * g.length / p.c / hdt)) + 4
    hist = SpacetimeField.from_function(g, field, 0.0, hdt, 2 * depth + 1)
    ret = NL.retarded_free_energy(hist, k, pp, None, depth, "retarded").values
    sym = NL.retarded_free_energy(hist, k, pp, None, depth, "symmetric").values
    dal = NL.truncated_retarded_correction(hist, pp, depth, "dalembertian").values
    dire = NL.truncated_retarded_correction(hist, pp, depth, "direct").values
    local = kT * np.log(np.maximum(hist.values[depth], p.rho_floor))
    inst = NL.nonlocal_free_energy(hist.snapshot(depth), k, None, kT).values
    w.csv("retarded_energy.csv", ["x", "retarded", "symmetric", "instantaneous", "local_plus_dalembertian",
                                  "local_plus_direct"], [g.x, ret, sym, inst, local + dal, local + dire])
    rep = NL.retarded_comparison_report(hist, pp, depth, kernel=k)
    w.text("report.csv", "quantity,value\n" + "".join(f"{k},{FMT % v}\n" for k, v in rep.items()))
    w.gnuplot("plot_retarded.gp", "retarded_energy.csv", 1,
              [(2, "retarded"), (3, "symmetric"), (5, "D'Alembertian"), (6, "direct")], "x", "energy")
    return hdt, dict(rep)


RUNNERS = {
    "madelung": scen_madelung, "schrodinger": scen_schrodinger, "compare": scen_compare,
    "relativistic": scen_relativistic, "nonlocal-study": scen_nonlocal, "retarded-study": scen_retarded,
}


def run_config(cfg, outdir=None):
    """Run one validated config; returns (outdir, metrics)."""
    w = Writer(resolve_outdir(cfg, outdir))
    try:
        dt, metrics = RUNNERS[cfg["scenario"]["name"]](cfg, w)
    except NumericalAbort as e:
        diag = dict(e.diagnostics or {})
        lines = [f"error: {e}"] + [f"{k}: {v}" for k, v in sorted(diag.items())]
        w.text("diagnostics.txt", "\n".join(lines) + "\n")
        st = e.state
        if st is not None and hasattr(st, "rho"):
            w.csv("last_state.csv", ["x", "rho"], [st.rho.grid.x, st.rho.values])
        raise
    write_meta(w, cfg, dt, metrics)
    return w.dir, metrics


def run_config_text(text, outdir=None):
    return run_config(parse_text(text), outdir)


# ---------------------------------------------------------------- commands

def cmd_run(args):
    with open(args.config) as f:
        text = f.read()
    outdir, metrics = run_config_text(text, args.out)
    print(f"wrote {outdir}")
    for k, v in metrics.items():
        print(f"  {k} = {v:.6g}")
    return 0


def cmd_verify(args):
    from .acceptance import run_suite, summarize
    rows = run_suite(args.suite)
    crit = summarize(rows)
    print()
    for n in sorted(crit):
        print(f"criterion {n:2d}: {'PASS' if crit[n] else 'FAIL'}")
    report = args.report or os.path.join(os.environ.get(OUT_ENV, "runs"), f"verify_{args.suite}.txt")
    os.makedirs(os.path.dirname(report) or ".", exist_ok=True)
    with open(report, "w") as f:
        f.write("\n".join(r.line() for r in rows) + "\n\n")
        f.write("".join(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}\n" for n, ok in sorted(crit.items())))
    print(f"report written to {report}")
    return 0 if all(crit.values()) else 1


def cmd_sweep(args):
    with open(args.config) as f:
        cfg = parse_text(f.read())
    if not is_numeric(args.param):
        raise ValidationError(f"{args.param} is not a numeric config key", keys=[args.param])
    values = [v for v in args.values.split(",") if v.strip()]
    root = resolve_outdir(cfg, args.out)
    rows = []
    for i, raw in enumerate(values):
        c = set_value(cfg, args.param, raw)
        _, metrics = run_config(c, os.path.join(root, f"run_{i:02d}"))
        rows.append((float(raw), metrics))
    keys = sorted({k for _, m in rows for k in m})
    w = Writer(root)
    w.csv("sweep_summary.csv", [args.param] + keys,
          [[v for v, _ in rows]] + [[m.get(k, float("nan")) for _, m in rows] for k in keys])
    print(f"{args.param:>16s}  " + "  ".join(f"{k:>14s}" for k in keys))
    for v, m in rows:
        print(f"{v:16.6g}  " + "  ".join(f"{m.get(k, float('nan')):14.6g}" for k in keys))
    errs = [m.get("error") for _, m in rows]
    if len(rows) > 1 and all(e is not None and e > 0 for e in errs):
        sl = float(np.polyfit(np.log([v for v, _ in rows]), np.log(errs), 1)[0])
        print(f"log-log slope of error vs {args.param}: {sl:.4f}")
        w.text("slope.txt", f"{sl!r}\n")
    return 0


def main(argv=None):
    ap = argparse.ArgumentParser(prog="bohmfluid", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="cmd", required=True)
    r = sub.add_parser("run", help="run a scenario config")
    r.add_argument("config")
    r.add_argument("--out", help="output directory (overrides config and $%s)" % OUT_ENV)
    v = sub.add_parser("verify", help="run an acceptance suite")
    v.add_argument("suite", nargs="?", default="all", choices=["all", "identities", "oracle", "covariant"])
    v.add_argument("--report", help="report file (default: $%s/verify_<suite>.txt, else runs/)" % OUT_ENV)
    s = sub.add_parser("sweep", help="rerun a scenario over values of one numeric key")
    s.add_argument("config")
    s.add_argument("--param", required=True, help="section.key, e.g. scenario.dt")
    s.add_argument("--values", required=True, help="comma separated values")
    s.add_argument("--out")
    args = ap.parse_args(argv)
    try:
        return {"run": cmd_run, "verify": cmd_verify, "sweep": cmd_sweep}[args.cmd](args)
    except ValidationError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except NumericalAbort as e:
        print(f"numerical abort: {e}", file=sys.stderr)
        return 3
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
