"""Command-line pipeline orchestration and table/figure dataset emission.

Exit codes: 0 success, 2 configuration error, 3 no stable region found,
4 numeric failure.  All delimited output uses IEEE-754 round-trip decimal
formatting, so reruns with identical configuration are byte-identical
(wall-clock timings are confined to the summary file).
"""

from __future__ import annotations

import functools
import json
import sys
import time
from pathlib import Path

import click
import numpy as np

from . import cluster, explorer, metrics, robustness, rules, stats
from .explorer import DesignRanges, NoStableRegionError, sample_region
from .metrics import METRIC_NAMES, MetricsError, SimulationConfig
from .pade import OrderOutOfRangeError
from .placement import KpSource, NonDominantPoleType, PidGains
from .plant import BENCHMARKS, BenchmarkNotFoundError, SoptdModel, benchmark
from .polytf import PolytfError

EXIT_CONFIG = 2
EXIT_NO_STABLE_REGION = 3
EXIT_NUMERIC = 4

PTYPE_CHOICES = [p.value for p in NonDominantPoleType]
SRC_CHOICES = [s.name.lower() for s in KpSource]


def handle_errors(fn):
    """Map domain exceptions onto the documented exit codes."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (NoStableRegionError, cluster.NonConvexRegionError) as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(EXIT_NO_STABLE_REGION)
        except (BenchmarkNotFoundError, OrderOutOfRangeError, ValueError,
                KeyError, OSError, json.JSONDecodeError) as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(EXIT_CONFIG)
        except (MetricsError, PolytfError, np.linalg.LinAlgError,
                FloatingPointError, ArithmeticError) as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(EXIT_NUMERIC)

    return wrapper


def _load_model(plant: str):
    """Benchmark id ('G1'..'G9') or path to a plant JSON file."""
    if plant in BENCHMARKS:
        return plant, benchmark(plant)
    path = Path(plant)
    if path.suffix == ".json" or path.exists():
        return path.stem, SoptdModel.from_json(path.read_text())
    raise BenchmarkNotFoundError(
        f"unknown plant {plant!r}; valid benchmark ids: {', '.join(BENCHMARKS)} "
        "(or pass a plant JSON file)"
    )


def _parse_gains(text: str) -> PidGains:
    parts = text.split(",")
    if len(parts) != 3:
        raise ValueError(f"gains must be 'kp,ki,kd', got {text!r}")
    return PidGains(*(float(p) for p in parts))


def _parse_ptype(text: str) -> NonDominantPoleType:
    return NonDominantPoleType(text)


def _parse_src(text: str | None):
    return None if text is None else KpSource[text.upper()]


def _sim_config(model, horizon, dt, npade) -> SimulationConfig:
    base = metrics.default_config(model, npade=npade)
    return SimulationConfig(horizon=horizon or base.horizon,
                            dt=dt or base.dt, npade=npade)


def _emit(ctx, name: str, text: str):
    """Write to the output directory when set, else to stdout."""
    out = ctx.obj["out"]
    if out is None:
        click.echo(text, nl=not text.endswith("\n"))
        return None
    out.mkdir(parents=True, exist_ok=True)
    path = out / name
    path.write_text(text)
    click.echo(f"wrote {path}", err=True)
    return path


def _report_json(report) -> str:
    return report.to_json()


def _report_csv(reports_with_labels) -> str:
    header = "label," + ",".join(METRIC_NAMES)
    lines = [header]
    for label, rep in reports_with_labels:
        cells = [label]
        for n in METRIC_NAMES:
            v = rep.metric(n)
            cells.append("" if v is None else repr(float(v)))
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


@click.group()
@click.option("--seed", type=int, default=0, show_default=True,
              help="Base seed for every random substream.")
@click.option("--out", type=click.Path(path_type=Path), default=None,
              help="Output directory; stdout when omitted.")
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]),
              default="csv", show_default=True)
@click.pass_context
def main(ctx, seed, out, fmt):
    """Robust stable PID design for second-order-plus-delay plants."""
    ctx.obj = {"seed": seed, "out": out, "format": fmt}


@main.group()
def bench():
    """Built-in benchmark plants."""


@bench.command("list")
@click.pass_context
@handle_errors
def bench_list(ctx):
    """List the nine benchmark plants with their class labels."""
    fmt = ctx.obj["format"]
    if fmt == "json":
        data = [{"id": b.id, "K": b.model.K, "L": b.model.L, "T": b.model.T,
                 "zeta_ol": b.model.zeta_ol, "delay_class": b.delay_class,
                 "damping_class": b.damping_class} for b in BENCHMARKS.values()]
        _emit(ctx, "bench.json", json.dumps(data, indent=2))
        return
    lines = ["id,K,L,T,zeta_ol,delay_class,damping_class"]
    for b in BENCHMARKS.values():
        m = b.model
        lines.append(",".join([b.id, repr(m.K), repr(m.L), repr(m.T),
                               repr(m.zeta_ol), b.delay_class, b.damping_class]))
    _emit(ctx, "bench.csv", "\n".join(lines) + "\n")


def _explore(ctx, plant, ptype, samples, ranges=None):
    plant_id, model = _load_model(plant)
    return sample_region(model, _parse_ptype(ptype), ranges=ranges,
                         n_samples=samples, seed=ctx.obj["seed"],
                         plant_id=plant_id)


_plant_opt = click.option("--plant", required=True,
                          help="Benchmark id (G1..G9) or plant JSON file.")
_ptype_opt = click.option("--ptype", type=click.Choice(PTYPE_CHOICES),
                          default="all-real", show_default=True)
_samples_opt = click.option("--samples", type=int, default=100_000, show_default=True)
_gains_opt = click.option("--gains", default=None, help="Fixed gains 'kp,ki,kd'.")
_npade_opt = click.option("--npade", type=int, default=3, show_default=True)


@main.command()
@_plant_opt
@_ptype_opt
@_samples_opt
@click.option("--src", type=click.Choice(SRC_CHOICES), default=None,
              help="Proportional-gain expression; defaults to the one with "
                   "the largest stable count.")
@click.option("--stable-only", is_flag=True, help="Export stable rows only.")
@click.pass_context
@handle_errors
def explore(ctx, plant, ptype, samples, src, stable_only):
    """Sample the design space and export the stability-region dataset."""
    ds = _explore(ctx, plant, ptype, samples)
    which = _parse_src(src) or explorer.best_expression(ds)
    _emit(ctx, "region.csv", explorer.region_csv(ds, which, stable_only=stable_only))


@main.command()
@_plant_opt
@_ptype_opt
@_samples_opt
@click.option("--k", type=int, default=1, show_default=True)
@click.option("--restarts", type=int, default=10, show_default=True)
@click.pass_context
@handle_errors
def centroid(ctx, plant, ptype, samples, k, restarts):
    """Robust stable gains: cluster centroid of the stabilizing region."""
    ds = _explore(ctx, plant, ptype, samples)
    which = explorer.best_expression(ds)
    gains = cluster.robust_gains(ds, which, restarts=restarts, seed=ctx.obj["seed"])
    med = cluster.median_distance(ds.stable_gains(which), gains.as_array())
    payload = {"plant": ds.plant_id, "ptype": ptype, "src": which.name,
               "stable_count": int(ds.stable_counts[explorer.KP_SOURCES.index(which)]),
               "kp": gains.Kp, "ki": gains.Ki, "kd": gains.Kd,
               "median_distance": med, "k": k, "restarts": restarts}
    _emit(ctx, "centroid.json", json.dumps(payload, indent=2))


@main.command("metrics")
@_plant_opt
@click.option("--gains", required=True, help="Controller gains 'kp,ki,kd'.")
@click.option("--horizon", type=float, default=None)
@click.option("--dt", type=float, default=None)
@_npade_opt
@click.pass_context
@handle_errors
def metrics_cmd(ctx, plant, gains, horizon, dt, npade):
    """Eleven-metric performance report for fixed gains."""
    plant_id, model = _load_model(plant)
    g = _parse_gains(gains)
    cfg = _sim_config(model, horizon, dt, npade)
    rep = metrics.performance_report(model, g, cfg)
    if ctx.obj["format"] == "json":
        _emit(ctx, "report.json", _report_json(rep))
    else:
        _emit(ctx, "report.csv", _report_csv([(plant_id, rep)]))


@main.command()
@_plant_opt
@click.option("--gains", required=True, help="Controller gains 'kp,ki,kd'.")
@click.option("--channel", type=click.Choice(["setpoint", "disturbance", "control"]),
              default="setpoint", show_default=True)
@click.option("--horizon", type=float, default=None)
@click.option("--dt", type=float, default=None)
@_npade_opt
@click.pass_context
@handle_errors
def simulate(ctx, plant, gains, channel, horizon, dt, npade):
    """Step-response time series for one loop channel."""
    from .polytf import Polynomial, RationalTF, poly_mul, realize, simulate as sim
    plant_id, model = _load_model(plant)
    g = _parse_gains(gains)
    cfg = _sim_config(model, horizon, dt, npade)
    sens = metrics.sensitivity_set(model, g, cfg.npade)
    if channel == "setpoint":
        t, y = sim(realize(sens.T), "step", cfg.dt, cfg.horizon)
    elif channel == "disturbance":
        t, y = sim(realize(sens.Sd), "step", cfg.dt, cfg.horizon)
    else:
        su_step = RationalTF(sens.Su.num, poly_mul(sens.Su.den, Polynomial([0.0, 1.0])))
        t, y = sim(realize(su_step), "impulse", cfg.dt, cfg.horizon)
    lines = ["t,y"] + [f"{repr(float(a))},{repr(float(b))}" for a, b in zip(t, y)]
    _emit(ctx, f"simulate_{channel}.csv", "\n".join(lines) + "\n")


@main.command()
@_plant_opt
@_ptype_opt
@_samples_opt
@click.option("--restarts", type=int, default=10, show_default=True)
@click.option("--horizon", type=float, default=None)
@click.option("--dt", type=float, default=None)
@_npade_opt
@click.pass_context
@handle_errors
def design(ctx, plant, ptype, samples, restarts, horizon, dt, npade):
    """Full pipeline: explore, cluster, verify, report, render figures."""
    from . import plots
    out = ctx.obj["out"] or Path(".")
    ctx.obj["out"] = out
    timings = {}
    t0 = time.perf_counter()
    ds = _explore(ctx, plant, ptype, samples)
    timings["explore_s"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    which = explorer.best_expression(ds)
    gains = cluster.robust_gains(ds, which, restarts=restarts, seed=ctx.obj["seed"])
    med = cluster.median_distance(ds.stable_gains(which), gains.as_array())
    timings["cluster_s"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    model = ds.model
    cfg = _sim_config(model, horizon, dt, npade)
    rep = metrics.performance_report(model, gains, cfg)
    timings["metrics_s"] = time.perf_counter() - t0

    _emit(ctx, "region.csv", explorer.region_csv(ds, which))
    _emit(ctx, "centroid.json", json.dumps({
        "plant": ds.plant_id, "ptype": ptype, "src": which.name,
        "stable_count": int(ds.stable_counts[explorer.KP_SOURCES.index(which)]),
        "kp": gains.Kp, "ki": gains.Ki, "kd": gains.Kd, "median_distance": med,
    }, indent=2))
    _emit(ctx, "report.json", _report_json(rep))

    t0 = time.perf_counter()
    plots.save_region_figure(ds, which, out / "region.png", centroid=gains)
    plots.save_response_figure(model, gains, out / "response.png", cfg)
    timings["figures_s"] = time.perf_counter() - t0
    _emit(ctx, "summary.json", json.dumps({
        "plant": ds.plant_id, "ptype": ptype, "samples": samples,
        "seed": ctx.obj["seed"], "timings": timings,
    }, indent=2))


@main.command()
@_plant_opt
@click.option("--gains", required=True, help="Controller gains 'kp,ki,kd'.")
@click.option("--pct", type=float, default=0.3, show_default=True)
@_samples_opt
@click.option("--max-search", is_flag=True,
              help="Search the largest all-stable perturbation level instead.")
@click.option("--step", type=float, default=0.05, show_default=True)
@click.pass_context
@handle_errors
def perturb(ctx, plant, gains, pct, samples, max_search, step):
    """Monte Carlo perturbation sweep (or perturbation-limit search)."""
    plant_id, model = _load_model(plant)
    g = _parse_gains(gains)
    if max_search:
        limit = robustness.max_allowable_perturbation(
            model, g, step=step, n_samples=samples, seed=ctx.obj["seed"])
        _emit(ctx, "perturb.json", json.dumps(
            {"plant": plant_id, "max_allowable_pct": limit, "step": step,
             "samples": samples}, indent=2))
        return
    sweep = robustness.perturbation_sweep(model, g, pct, samples,
                                          ctx.obj["seed"], with_reports=False)
    _emit(ctx, "perturb.json", json.dumps(
        {"plant": plant_id, "pct": pct, "samples": samples,
         "unstable": sweep.n_unstable, "all_stable": sweep.all_stable}, indent=2))


@main.group("rules")
def rules_group():
    """Tuning-rule regression over the benchmark suite."""


def _centroid_samples(ctx, ptype, samples):
    """Robust-gain training samples for all nine benchmarks."""
    out = []
    for bid in BENCHMARKS:
        ds = _explore(ctx, bid, ptype, samples)
        gains = cluster.robust_gains(ds, seed=ctx.obj["seed"])
        m = ds.model
        out.append(rules.RuleSample(l_over_t=m.lag_to_delay, zeta_ol=m.zeta_ol,
                                    K=m.K, gains=gains))
    return out


def _samples_from_csv(path: Path):
    out = []
    lines = Path(path).read_text().splitlines()
    header = lines[0].split(",")
    need = {"plant", "kp", "ki", "kd"}
    if not need <= set(header):
        raise ValueError(f"centroid CSV must have columns {sorted(need)}")
    idx = {name: header.index(name) for name in header}
    for ln in lines[1:]:
        if not ln:
            continue
        f = ln.split(",")
        m = benchmark(f[idx["plant"]])
        out.append(rules.RuleSample(
            l_over_t=m.lag_to_delay, zeta_ol=m.zeta_ol, K=m.K,
            gains=PidGains(float(f[idx["kp"]]), float(f[idx["ki"]]), float(f[idx["kd"]]))))
    return out


@rules_group.command("fit")
@click.option("--centroids", type=click.Path(exists=True, path_type=Path),
              default=None, help="CSV with plant,kp,ki,kd rows; recomputed "
                                 "from exploration when omitted.")
@_ptype_opt
@click.option("--samples", type=int, default=100_000, show_default=True)
@click.option("--scale-by-k", is_flag=True,
              help="Regress K*gain instead of the raw gain.")
@click.pass_context
@handle_errors
def rules_fit(ctx, centroids, ptype, samples, scale_by_k):
    """Fit the three tuning rules and export the coefficients."""
    data = (_samples_from_csv(centroids) if centroids
            else _centroid_samples(ctx, ptype, samples))
    fit = rules.fit_tuning_rule(data, scale_by_k=scale_by_k)
    _emit(ctx, "rules.json", fit.to_json())


@rules_group.command("predict")
@click.option("--fit", "fit_path", type=click.Path(exists=True, path_type=Path),
              required=True, help="Fit JSON produced by `rules fit`.")
@click.option("--l-over-t", type=float, required=True)
@click.option("--zeta-ol", type=float, required=True)
@click.option("--gain", "k_value", type=float, default=1.0, show_default=True,
              help="Plant gain K dividing the rule output.")
@click.pass_context
@handle_errors
def rules_predict(ctx, fit_path, l_over_t, zeta_ol, k_value):
    """Evaluate a fitted tuning rule at given plant parameters."""
    fit = rules.TuningRuleFit.from_json(Path(fit_path).read_text())
    g = rules.predict_gains(fit, l_over_t, zeta_ol, k_value)
    _emit(ctx, "predicted.json",
          json.dumps({"kp": g.Kp, "ki": g.Ki, "kd": g.Kd}, indent=2))


@main.group("stats")
def stats_group():
    """Distribution tests over exported datasets."""


@stats_group.command("kruskal")
@click.option("--csv", "csv_path", type=click.Path(exists=True, path_type=Path),
              required=True, help="CSV with a group column and a value column.")
@click.option("--value-col", required=True)
@click.option("--group-col", default="group", show_default=True)
@click.pass_context
@handle_errors
def stats_kruskal(ctx, csv_path, value_col, group_col):
    """Kruskal-Wallis test of a value column grouped by a label column."""
    lines = Path(csv_path).read_text().splitlines()
    header = lines[0].split(",")
    for col in (value_col, group_col):
        if col not in header:
            raise ValueError(f"column {col!r} not in {header}")
    records = [dict(zip(header, ln.split(","))) for ln in lines[1:] if ln]
    groups = stats.groups_from_records(records, value_col, group_col)
    res = stats.kruskal_wallis(list(groups.values()))
    _emit(ctx, "kruskal.json", json.dumps(
        {"H": res.H, "df": res.df, "p_value": res.p_value,
         "p_label": res.p_label, "groups": list(groups)}, indent=2))


STUDIES = ("table1", "table2", "table3", "table4", "invariance", "perturb", "kruskal")


@main.command()
@click.argument("which", type=click.Choice(STUDIES))
@click.option("--plant", default=None, help="Plant selector; defaults to all nine.")
@_ptype_opt
@click.option("--samples", type=int, default=100_000, show_default=True)
@_gains_opt
@click.option("--orders", default="3,5,7,9", show_default=True)
@click.option("--pct", type=float, default=0.3, show_default=True)
@click.option("--horizon", type=float, default=None)
@click.option("--dt", type=float, default=None)
@_npade_opt
@click.pass_context
@handle_errors
def study(ctx, which, plant, ptype, samples, gains, orders, pct, horizon, dt, npade):
    """Reproduce one published-table or robustness study as CSV/JSON."""
    plants = [plant] if plant else list(BENCHMARKS)
    if which == "table1":
        lines = ["plant,ptype,s1,s2,s3,s4,percent_volume_max"]
        for bid in plants:
            for pt in NonDominantPoleType:
                ds = _explore(ctx, bid, pt.value, samples)
                counts = ds.stable_counts
                lines.append(",".join([ds.plant_id, pt.value,
                                       *map(str, map(int, counts)),
                                       repr(float(ds.percent_volume.max()))]))
        _emit(ctx, "table1.csv", "\n".join(lines) + "\n")

    elif which == "table2":
        lines = ["plant,ptype,src,kp,ki,kd,median_distance"]
        for bid in plants:
            for pt in NonDominantPoleType:
                ds = _explore(ctx, bid, pt.value, samples)
                w = explorer.best_expression(ds)
                g = cluster.robust_gains(ds, w, seed=ctx.obj["seed"])
                med = cluster.median_distance(ds.stable_gains(w), g.as_array())
                lines.append(",".join([ds.plant_id, pt.value, w.name,
                                       repr(g.Kp), repr(g.Ki), repr(g.Kd), repr(med)]))
        _emit(ctx, "table2.csv", "\n".join(lines) + "\n")

    elif which == "table3":
        rows = []
        for bid in plants:
            plant_id, model = _load_model(bid)
            if gains:
                g = _parse_gains(gains)
            else:
                ds = _explore(ctx, bid, ptype, samples)
                g = cluster.robust_gains(ds, seed=ctx.obj["seed"])
            cfg = _sim_config(model, horizon, dt, npade)
            rows.append((plant_id, metrics.performance_report(model, g, cfg)))
        _emit(ctx, "table3.csv", _report_csv(rows))

    elif which == "table4":
        data = _centroid_samples(ctx, ptype, samples)
        fit = rules.fit_tuning_rule(data)
        _emit(ctx, "table4.json", fit.to_json())

    elif which == "invariance":
        if not plant:
            raise ValueError("study invariance requires --plant")
        if not gains:
            raise ValueError("study invariance requires --gains")
        plant_id, model = _load_model(plant)
        g = _parse_gains(gains)
        cfg = _sim_config(model, horizon, dt, npade)
        order_list = [int(x) for x in orders.split(",")]
        res = metrics.pade_invariance(model, g, order_list, cfg)
        lines = ["order,stable,setpoint_deviation,disturbance_deviation,"
                 "dominant_pole_re,dominant_pole_im,dominant_damping"]
        for r in order_list:
            resp = res.responses[r]
            p = resp.dominant_pole
            lines.append(",".join([
                str(r), "1" if resp.stable else "0",
                repr(float(res.setpoint_deviation[r])),
                repr(float(res.disturbance_deviation[r])),
                repr(p.real) if p is not None else "",
                repr(p.imag) if p is not None else "",
                repr(float(resp.dominant_damping)) if p is not None else "",
            ]))
        _emit(ctx, "invariance.csv", "\n".join(lines) + "\n")

    elif which == "perturb":
        if not plant or not gains:
            raise ValueError("study perturb requires --plant and --gains")
        plant_id, model = _load_model(plant)
        g = _parse_gains(gains)
        sweep = robustness.perturbation_sweep(model, g, pct, samples,
                                              ctx.obj["seed"], with_reports=False)
        _emit(ctx, "perturb.json", json.dumps(
            {"plant": plant_id, "pct": pct, "samples": samples,
             "unstable": sweep.n_unstable, "all_stable": sweep.all_stable}, indent=2))

    elif which == "kruskal":
        results = {}
        for gain_idx, gain_name in enumerate(("kp", "ki", "kd")):
            groups = []
            labels = []
            for bid in plants:
                for pt in NonDominantPoleType:
                    ds = _explore(ctx, bid, pt.value, samples)
                    w = explorer.best_expression(ds)
                    pts = ds.stable_gains(w)
                    if pts.shape[0]:
                        groups.append(pts[:, gain_idx])
                        labels.append(f"{ds.plant_id}/{pt.value}")
            res = stats.kruskal_wallis(groups)
            results[gain_name] = {"H": res.H, "df": res.df,
                                  "p_value": res.p_value, "p_label": res.p_label,
                                  "groups": labels}
        _emit(ctx, "kruskal.json", json.dumps(results, indent=2))


if __name__ == "__main__":
    main()
