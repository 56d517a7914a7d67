"""Command line front end: seeded verification and simulation runs.

Commands
    verify-identities   exact residuals of the three trace-derivative identities
    stationarity        exact residuals of the stationary flow equations
    moments             closed-form stationary trace moments as CSV
    marginals           dim-2 Monte Carlo marginals vs. closed forms (KS)
    simulate            run one sampler, persist a sample CSV + JSON sidecar
    bernoulli           sign-flip walks, drift-gap scaling, concentration fits
    report              two-sample agreement report for stored sample CSVs

All artifacts are deterministic functions of the run configuration: CSV
bodies are byte-identical across reruns with the same flags, and JSON
summaries carry the tolerance next to every checked number.  Exit codes:
0 all checks passed, 1 a check failed, 2 usage error, 3 numerical abort.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import random
import sys
from dataclasses import dataclass, field, asdict
from fractions import Fraction
from pathlib import Path

import numpy as np
from scipy import stats as sp_stats

from dyson_traces import bernoulli as bn
from dyson_traces import dyson_sim as sim
from dyson_traces import fokker_planck as fp
from dyson_traces import symfun as sf
from dyson_traces.ensembles import EnsembleSpec

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2
EXIT_NUMERICAL = 3

_FLOAT_FMT = "%.17g"


@dataclass(frozen=True)
class RunConfig:
    """Resolved options of one invocation; serialized into every sidecar."""

    command: str
    options: dict

    def as_dict(self) -> dict:
        opts = {k: v for k, v in sorted(self.options.items()) if v is not None}
        return {"command": self.command, "options": opts}

    def digest(self) -> str:
        payload = json.dumps(self.as_dict(), sort_keys=True, default=str)
        return hashlib.sha256(payload.encode()).hexdigest()[:16]


@dataclass
class ReportBundle:
    """Artifacts of one run: summary dict plus emitted files with content hashes."""

    run_config: RunConfig
    out_dir: Path | None
    summary: dict = field(default_factory=dict)
    files: dict = field(default_factory=dict)

    def register(self, path: Path) -> None:
        self.files[path.name] = _sha256_file(path)

    def write_summary(self, name: str = "summary.json") -> Path | None:
        self.summary["run_config"] = self.run_config.as_dict()
        self.summary["run_digest"] = self.run_config.digest()
        if self.files:
            self.summary["files"] = dict(sorted(self.files.items()))
        if self.out_dir is None:
            return None
        path = self.out_dir / name
        path.write_text(json.dumps(self.summary, indent=2, sort_keys=True, default=str) + "\n")
        return path


def _sha256_file(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _fmt_value(x) -> str:
    if isinstance(x, float):
        return _FLOAT_FMT % x
    return str(x)


def _write_csv(path: Path, header: list, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt_value(v) for v in row])


def _frac_str(x) -> str:
    f = Fraction(x)
    return str(f)


def _print_rows(header: list, rows) -> None:
    print(",".join(header))
    for row in rows:
        print(",".join(_fmt_value(v) for v in row))


def _out_dir(args) -> Path | None:
    if getattr(args, "out", None) is None:
        return None
    p = Path(args.out)
    p.mkdir(parents=True, exist_ok=True)
    return p


def _run_config(args) -> RunConfig:
    opts = {k: v for k, v in vars(args).items() if k not in ("command", "config", "func")}
    return RunConfig(command=args.command, options=opts)


# ---------------------------------------------------------------------------
# sample persistence

def write_samples(sample_set: sim.SampleSet, out_dir: Path, stem: str,
                  run_config: RunConfig) -> tuple:
    """Persist a SampleSet as <stem>.csv plus a <stem>.json sidecar."""
    csv_path = out_dir / f"{stem}.csv"
    header = ["time", "trajectory"] + list(sample_set.columns)
    rows = (
        [sample_set.times[i], int(sample_set.trajectory[i])] + list(sample_set.values[i])
        for i in range(sample_set.n_samples)
    )
    _write_csv(csv_path, header, rows)
    sidecar = {
        "kind": "samples",
        "system": sample_set.system,
        "beta": sample_set.spec.beta,
        "dim": sample_set.spec.dim,
        "columns": list(sample_set.columns),
        "n_samples": sample_set.n_samples,
        "sde_config": asdict(sample_set.config),
        "provenance": sample_set.provenance,
        "csv_sha256": _sha256_file(csv_path),
        "run_config": run_config.as_dict(),
    }
    json_path = out_dir / f"{stem}.json"
    json_path.write_text(json.dumps(sidecar, indent=2, sort_keys=True) + "\n")
    return csv_path, json_path


def load_samples(csv_path: str | Path) -> sim.SampleSet:
    """Rebuild a SampleSet from a CSV written by write_samples (sidecar required)."""
    csv_path = Path(csv_path)
    sidecar_path = csv_path.with_suffix(".json")
    if not sidecar_path.exists():
        raise FileNotFoundError(f"missing sidecar {sidecar_path}")
    meta = json.loads(sidecar_path.read_text())
    data = np.loadtxt(csv_path, delimiter=",", skiprows=1, ndmin=2)
    cols = meta["columns"]
    if data.shape[1] != 2 + len(cols):
        raise ValueError(f"{csv_path} has {data.shape[1]} columns, sidecar lists {len(cols)} values")
    cfg = sim.SdeConfig(**meta["sde_config"])
    return sim.SampleSet(
        system=meta["system"],
        spec=EnsembleSpec(beta=meta["beta"], dim=meta["dim"]),
        columns=tuple(cols),
        times=data[:, 0],
        values=data[:, 2:],
        trajectory=data[:, 1].astype(int),
        config=cfg,
        provenance=meta["provenance"],
    )


# ---------------------------------------------------------------------------
# SVG plotting

def _save_svg(fig, path: Path, provenance: dict) -> None:
    """Write a standalone SVG with an embedded provenance comment."""
    import matplotlib

    # fixed hashsalt + no Date: byte-identical SVG across reruns
    matplotlib.rcParams["svg.hashsalt"] = "dyson-traces"
    fig.savefig(path, format="svg", metadata={"Date": None})
    text = path.read_text()
    comment = "<!-- data-provenance: " + json.dumps(provenance, sort_keys=True, default=str) + " -->"
    first_newline = text.index("\n") + 1
    path.write_text(text[:first_newline] + comment + "\n" + text[first_newline:])


def _marginal_figure(values: dict, marginals: dict):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, axes = plt.subplots(1, len(values), figsize=(5 * len(values), 3.6))
    if len(values) == 1:
        axes = [axes]
    for ax, (name, xs) in zip(axes, values.items()):
        marg = marginals[name]
        ax.hist(xs, bins=80, density=True, alpha=0.55, label="sampled")
        grid = np.linspace(np.min(xs), np.max(xs), 400)
        ax.plot(grid, [marg.pdf(g) for g in grid], "k-", lw=1.2, label="closed form")
        ax.set_xlabel(name)
        ax.set_title(marg.name)
        ax.legend(fontsize=8)
    fig.tight_layout()
    return fig


def _scaling_figure(dims, values, fitted_slope, ylabel):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(4.6, 3.6))
    ax.loglog(dims, values, "o-", label="measured")
    anchor = values[0] * (np.asarray(dims, float) / dims[0]) ** fitted_slope
    ax.loglog(dims, anchor, "k--", lw=1.0, label=f"slope {fitted_slope:.2f}")
    ax.set_xlabel("matrix dimension")
    ax.set_ylabel(ylabel)
    ax.legend(fontsize=8)
    fig.tight_layout()
    return fig


# ---------------------------------------------------------------------------
# commands

def cmd_verify_identities(args) -> int:
    bundle = ReportBundle(_run_config(args), _out_dir(args))
    rng = random.Random(args.seed)
    names = ("derivative_pair_sum", "jacobian_pair_sum", "second_derivative_triple_sum")
    funcs = (sf.derivative_sum_identity, sf.discriminant_identity, sf.triple_product_identity)
    tallies = {name: {"checked": 0, "nonzero": 0, "max_abs": Fraction(0)} for name in names}
    for dim in range(1, args.n_max + 1):
        for _ in range(args.tuples):
            nodes = sf.random_rational_nodes(dim, rng)
            basis = sf.lagrange_basis(nodes)
            for n in range(args.deg_max + 1):
                for name, func in zip(names, funcs):
                    res = func(nodes, n, basis=basis)
                    tally = tallies[name]
                    tally["checked"] += 1
                    if res != 0:
                        tally["nonzero"] += 1
                        tally["max_abs"] = max(tally["max_abs"], abs(res))
    ok = all(t["nonzero"] == 0 for t in tallies.values())
    bundle.summary = {
        "identities": {
            name: {
                "checked": t["checked"],
                "nonzero": t["nonzero"],
                "max_abs_residual": _frac_str(t["max_abs"]),
            }
            for name, t in tallies.items()
        },
        "dims": f"1..{args.n_max}",
        "orders": f"0..{args.deg_max}",
        "tuples_per_dim": args.tuples,
        "seed": args.seed,
        "tolerance": "exact zero (rational arithmetic)",
        "pass": ok,
    }
    for name, t in tallies.items():
        status = "ok" if t["nonzero"] == 0 else f"FAILED ({t['nonzero']} nonzero, max {t['max_abs']})"
        print(f"{name}: {t['checked']} residuals, {status}")
    bundle.write_summary("verify_identities.json")
    return EXIT_OK if ok else EXIT_CHECK_FAILED


def cmd_stationarity(args) -> int:
    bundle = ReportBundle(_run_config(args), _out_dir(args))
    spec = EnsembleSpec(beta=args.beta, dim=args.dim)
    rng = random.Random(args.seed)
    checked = nonzero = 0
    max_abs = Fraction(0)
    for _ in range(args.points):
        nodes = sf.random_rational_nodes(args.dim, rng)
        basis = sf.lagrange_basis(nodes)
        for n in range(1, args.dim + 1):
            res = fp.stationarity_residual(nodes, spec, n, basis=basis)
            checked += 1
            if res != 0:
                nonzero += 1
                max_abs = max(max_abs, abs(Fraction(res)))
    ok = nonzero == 0
    bundle.summary = {
        "beta": args.beta,
        "dim": args.dim,
        "points": args.points,
        "equations_checked": checked,
        "nonzero_residuals": nonzero,
        "max_abs_residual": _frac_str(max_abs),
        "seed": args.seed,
        "tolerance": "exact zero (rational arithmetic)",
        "pass": ok,
    }
    print(
        f"stationarity beta={args.beta} dim={args.dim}: {checked} residuals, "
        + ("all exactly zero" if ok else f"{nonzero} NONZERO (max {max_abs})")
    )
    bundle.write_summary("stationarity.json")
    return EXIT_OK if ok else EXIT_CHECK_FAILED


def cmd_moments(args) -> int:
    bundle = ReportBundle(_run_config(args), _out_dir(args))
    taus = fp.stationary_tau_means(args.beta, args.dim, args.order)
    if args.dim is not None:
        spec = EnsembleSpec(beta=args.beta, dim=args.dim)
        ts = fp.stationary_trace_means(spec, args.order)
        header = ["n", "mean_trace", "mean_trace_float", "mean_scaled", "mean_scaled_float"]
        rows = [
            [n, _frac_str(ts[n]), float(ts[n]), _frac_str(taus[n]), float(taus[n])]
            for n in range(args.order + 1)
        ]
    else:
        header = ["n", "mean_scaled", "mean_scaled_float"]
        rows = [[n, _frac_str(taus[n]), float(taus[n])] for n in range(args.order + 1)]
    out = _out_dir(args)
    if out is not None:
        path = out / "moments.csv"
        _write_csv(path, header, rows)
        bundle.register(path)
        bundle.summary = {
            "beta": args.beta,
            "dim": args.dim,
            "order": args.order,
            "scaled_means": [_frac_str(t) for t in taus],
        }
        bundle.write_summary("moments.json")
        print(f"wrote {path}")
    else:
        _print_rows(header, rows)
    return EXIT_OK


def cmd_marginals(args) -> int:
    if args.dim != 2:
        print("marginals: closed forms exist for --dim 2 only", file=sys.stderr)
        return EXIT_USAGE
    bundle = ReportBundle(_run_config(args), _out_dir(args))
    spec = EnsembleSpec(beta=args.beta, dim=2)
    n_traj = min(500, args.samples)
    per = -(-args.samples // n_traj)
    cfg = sim.SdeConfig(
        dt=args.dt,
        burn_in=args.burn_in,
        sample_interval=1.0,
        n_trajectories=n_traj,
        samples_per_trajectory=per,
        seed=args.seed,
        k_max=2,
    )
    samples = sim.simulate_matrix_flow(spec, cfg)
    m_sum = fp.trace_sum_marginal(args.beta)
    m_sq = fp.trace_square_marginal(args.beta)
    t1 = samples.column("t1")
    t2 = samples.column("t2")
    ks1 = float(sp_stats.kstest(t1, np.vectorize(m_sum.cdf)).statistic)
    ks2 = float(sp_stats.kstest(t2, np.vectorize(m_sq.cdf)).statistic)
    ks_tol = 0.01 if args.beta in (1, 2) else 0.015
    mean_t2 = float(t2.mean())
    mean_tol = 0.02
    mean_rel_err = abs(mean_t2 - m_sq.mean) / m_sq.mean
    ok = ks1 < ks_tol and ks2 < ks_tol and mean_rel_err < mean_tol
    bundle.summary = {
        "beta": args.beta,
        "n_samples": samples.n_samples,
        "sde_config": asdict(cfg),
        "checks": {
            "ks_trace_sum": {"value": ks1, "tolerance": ks_tol, "pass": ks1 < ks_tol},
            "ks_trace_square": {"value": ks2, "tolerance": ks_tol, "pass": ks2 < ks_tol},
            "mean_trace_square": {
                "value": mean_t2,
                "expected": m_sq.mean,
                "relative_error": mean_rel_err,
                "tolerance": mean_tol,
                "pass": mean_rel_err < mean_tol,
            },
        },
        "pass": ok,
    }
    print(
        f"marginals beta={args.beta}: KS(t1)={ks1:.4f} KS(t2)={ks2:.4f} (tol {ks_tol}), "
        f"<t2>={mean_t2:.4f} vs {m_sq.mean:.4f} -> {'ok' if ok else 'FAILED'}"
    )
    out = _out_dir(args)
    if out is not None:
        fig = _marginal_figure({"t1": t1, "t2": t2}, {"t1": m_sum, "t2": m_sq})
        svg = out / f"marginals_beta{args.beta}.svg"
        _save_svg(fig, svg, {"run": bundle.run_config.as_dict(), "n_samples": samples.n_samples})
        bundle.register(svg)
        bundle.write_summary("marginals.json")
    return EXIT_OK if ok else EXIT_CHECK_FAILED


def _default_initial(system: str, spec: EnsembleSpec):
    if system == "eigenvalue":
        n = spec.dim
        if n == 1:
            return [0.0]
        return list(np.linspace(-math.sqrt(n), math.sqrt(n), n))
    means = fp.stationary_trace_means(spec, spec.dim)
    return [float(means[k]) for k in range(1, spec.dim + 1)]


def cmd_simulate(args) -> int:
    bundle = ReportBundle(_run_config(args), _out_dir(args))
    system = {"matrix": "matrix", "eigen": "eigenvalue", "trace": "trace"}[args.system]
    spec = EnsembleSpec(beta=args.beta, dim=args.dim)
    cfg = sim.SdeConfig(
        dt=args.dt,
        burn_in=args.burn_in,
        sample_interval=args.interval,
        n_trajectories=args.trajectories,
        samples_per_trajectory=args.samples,
        seed=args.seed,
        k_max=args.k_max,
    )
    if system == "matrix":
        samples = sim.simulate_matrix_flow(spec, cfg)
    else:
        initial = (
            [float(v) for v in args.initial.split(",")]
            if args.initial
            else _default_initial(system, spec)
        )
        if system == "eigenvalue":
            samples = sim.simulate_eigenvalue_sde(spec, cfg, initial)
        else:
            samples = sim.simulate_trace_sde(spec, cfg, initial)
    stats = {
        c: {"mean": float(samples.column(c).mean()), "std": float(samples.column(c).std())}
        for c in samples.columns
    }
    bundle.summary = {
        "system": samples.system,
        "beta": args.beta,
        "dim": args.dim,
        "n_samples": samples.n_samples,
        "sde_config": asdict(cfg),
        "provenance": samples.provenance,
        "column_stats": stats,
    }
    out = _out_dir(args)
    if out is not None:
        stem = f"samples_{samples.system}_beta{args.beta}_dim{args.dim}"
        csv_path, json_path = write_samples(samples, out, stem, bundle.run_config)
        bundle.register(csv_path)
        bundle.register(json_path)
        bundle.write_summary(f"{stem}_summary.json")
        print(f"wrote {csv_path} ({samples.n_samples} rows)")
    else:
        for c, st in stats.items():
            print(f"{c}: mean={st['mean']:.6g} std={st['std']:.6g} n={samples.n_samples}")
    return EXIT_OK


def cmd_bernoulli(args) -> int:
    bundle = ReportBundle(_run_config(args), _out_dir(args))
    observables = args.observable.split(",")
    dims = args.n_list
    out = _out_dir(args)
    walks = {}
    tau2_ok = True
    for dim in dims:
        rng = np.random.default_rng(np.random.SeedSequence((args.seed, dim)))
        rec = bn.walk_and_measure(dim, args.steps, observables, rng, k_refresh=args.k_refresh)
        entry = {
            "steps": rec.steps,
            "ds": rec.ds,
            "max_refresh_error": rec.max_refresh_error,
            "refresh_tolerance": 1e-10,
            "means": {name: float(series.mean()) for name, series in rec.series.items()},
        }
        if "tau2" in rec.series:
            t2 = rec.series["tau2"]
            constant = bool(np.all(t2 == t2[0]))
            entry["tau2_constant"] = constant
            tau2_ok = tau2_ok and constant
        walks[dim] = entry
        if out is not None:
            path = out / f"bernoulli_walk_dim{dim}.csv"
            header = ["step", "s"] + list(observables)
            steps_col = np.arange(rec.steps + 1)
            rows = (
                [int(k), k * rec.ds] + [rec.series[name][k] for name in observables]
                for k in steps_col
            )
            _write_csv(path, header, rows)
            bundle.register(path)
        print(
            f"walk dim={dim}: {args.steps} steps, refresh_err={rec.max_refresh_error:.2e}"
            + (", tau2 constant" if entry.get("tau2_constant") else "")
        )

    # exact neighborhood drift of tau_4 vs the Gaussian beta=1 drift,
    # both per unit walk time (one sweep of d_N flips)
    gap_means = []
    for dim in dims:
        gaps = []
        for rep in range(args.gap_reps):
            rng = np.random.default_rng(np.random.SeedSequence((args.seed, dim, rep)))
            mat = bn.sample_bernoulli(dim, rng)
            fm = bn.exact_first_moment(mat, 4)
            taus = bn.trace_moments(mat, 4)
            drift = bn.gaussian_tau_drift(taus, 4, dim)
            gaps.append(fm.exact / (2.0 / mat.n_pairs) - drift)
        gap_means.append(float(np.mean(gaps)))
    halving = []
    for i in range(len(dims) - 1):
        if dims[i + 1] == 2 * dims[i] and gap_means[i + 1] != 0:
            halving.append(gap_means[i] / gap_means[i + 1])
    halving_ok = all(1.5 < h < 2.5 for h in halving)

    # concentration of the diagonal correlation: E[(tau_3^2 - zeta(3,3))^2]
    mean_sq = []
    for dim in dims:
        rng = np.random.default_rng(np.random.SeedSequence((args.seed, dim, 999)))
        vals = np.empty(args.fit_samples)
        for k in range(args.fit_samples):
            mat = bn.sample_bernoulli(dim, rng)
            tau3 = float(bn.trace_moments(mat, 3)[3])
            vals[k] = tau3 * tau3 - bn.zeta(mat, 3, 3).value
        mean_sq.append(float(np.mean(vals**2)))
    slope = float(np.polyfit(np.log(dims), np.log(mean_sq), 1)[0])
    slope_ok = -2.5 < slope < -1.5

    ok = tau2_ok and halving_ok and slope_ok
    bundle.summary = {
        "dims": list(dims),
        "observables": observables,
        "walks": {str(d): w for d, w in walks.items()},
        "drift_gap": {
            "order": 4,
            "replicates": args.gap_reps,
            "mean_gap_per_dim": dict(zip(map(str, dims), gap_means)),
            "halving_factors": halving,
            "tolerance": "[1.5, 2.5] per doubling",
            "pass": halving_ok,
        },
        "zeta_concentration": {
            "statistic": "E[(tau3^2 - zeta(3,3))^2]",
            "samples_per_dim": args.fit_samples,
            "mean_square_per_dim": dict(zip(map(str, dims), mean_sq)),
            "loglog_slope": slope,
            "tolerance": "[-2.5, -1.5]",
            "pass": slope_ok,
        },
        "tau2_constant": tau2_ok,
        "pass": ok,
    }
    print(f"drift gaps: {['%.5f' % g for g in gap_means]} halving {['%.2f' % h for h in halving]}")
    print(f"zeta(3,3) concentration slope: {slope:.3f} (tol [-2.5,-1.5])")
    if out is not None:
        fig = _scaling_figure(dims, mean_sq, slope, "mean square of tau3^2 - zeta(3,3)")
        svg = out / "bernoulli_scaling.svg"
        _save_svg(fig, svg, {"run": bundle.run_config.as_dict(), "slope": slope})
        bundle.register(svg)
        bundle.write_summary("bernoulli.json")
    return EXIT_OK if ok else EXIT_CHECK_FAILED


def cmd_report(args) -> int:
    bundle = ReportBundle(_run_config(args), _out_dir(args))
    set_a = load_samples(args.inputs[0])
    set_b = load_samples(args.inputs[1])
    if args.statistics:
        names = args.statistics.split(",")
    else:
        names = [c for c in set_a.columns if c in set_b.columns]
    if not names:
        print("report: the two sample sets share no columns", file=sys.stderr)
        return EXIT_USAGE
    rep = sim.compare_samplers(set_a, set_b, {n: n for n in names})
    checks = {}
    ok = True
    for name, r in rep.items():
        passed = r["ks"] < args.ks_tol and abs(r["z_mean"]) < args.z_tol and abs(r["z_var"]) < args.z_tol
        ok = ok and passed
        checks[name] = {**r, "ks_tolerance": args.ks_tol, "z_tolerance": args.z_tol, "pass": passed}
        print(
            f"{name}: ks={r['ks']:.4f} z_mean={r['z_mean']:+.2f} z_var={r['z_var']:+.2f} "
            f"-> {'ok' if passed else 'FAILED'}"
        )
    bundle.summary = {
        "inputs": [str(p) for p in args.inputs],
        "systems": [set_a.system, set_b.system],
        "statistics": checks,
        "pass": ok,
    }
    bundle.write_summary("report.json")
    return EXIT_OK if ok else EXIT_CHECK_FAILED


# ---------------------------------------------------------------------------
# argument parsing

def _int_list(text: str) -> tuple:
    try:
        return tuple(int(v) for v in text.split(","))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def _read_config_file(path: str) -> dict:
    """KEY=VALUE lines, '#' comments; keys use flag spelling without dashes."""
    values = {}
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"bad config line {raw!r} (expected KEY=VALUE)")
        key, val = line.split("=", 1)
        values[key.strip().replace("-", "_")] = val.strip()
    return values


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dyson-traces",
        description="Verification and simulation runs for the matrix/eigenvalue/trace flow.",
    )
    parser.add_argument("--config", help="KEY=VALUE defaults file; explicit flags win")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify-identities", help="exact trace-derivative identity residuals")
    p.add_argument("--n-max", type=int, default=8, help="largest node-tuple size")
    p.add_argument("--deg-max", type=int, default=12, help="largest trace order n")
    p.add_argument("--tuples", type=int, default=20, help="random rational tuples per size")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="output directory for the JSON summary")
    p.set_defaults(func=cmd_verify_identities)

    p = sub.add_parser("stationarity", help="exact stationary-equation residuals")
    p.add_argument("--beta", type=int, choices=(1, 2, 4), required=True)
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--points", type=int, default=10, help="random interior spectra")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_stationarity)

    p = sub.add_parser("moments", help="closed-form stationary trace moments")
    p.add_argument("--beta", type=int, choices=(1, 2, 4), required=True)
    p.add_argument("--dim", type=int, default=None, help="ensemble size (omit for the large-size limit)")
    p.add_argument("--order", type=int, default=12)
    p.add_argument("--out")
    p.set_defaults(func=cmd_moments)

    p = sub.add_parser("marginals", help="dim-2 sampled marginals vs closed forms")
    p.add_argument("--beta", type=int, choices=(1, 2, 4), required=True)
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--dt", type=float, default=2e-3)
    p.add_argument("--burn-in", type=float, default=3.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_marginals)

    p = sub.add_parser("simulate", help="run one sampler and persist samples")
    p.add_argument("--system", choices=("matrix", "eigen", "trace"), required=True)
    p.add_argument("--beta", type=int, choices=(1, 2, 4), required=True)
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--dt", type=float, default=1e-3)
    p.add_argument("--burn-in", type=float, default=10.0)
    p.add_argument("--interval", type=float, default=0.5, help="time between recorded samples")
    p.add_argument("--trajectories", type=int, default=100)
    p.add_argument("--samples", type=int, default=100, help="samples per trajectory")
    p.add_argument("--k-max", type=int, default=None, help="matrix system: record t_1..t_k only")
    p.add_argument("--initial", help="comma-separated start state (eigen/trace systems)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("bernoulli", help="sign-flip walks and scaling fits")
    p.add_argument("--n-list", type=_int_list, default=(16, 32, 64, 128))
    p.add_argument("--observable", default="tau2,tau4,zeta22,zeta33",
                   help="comma list of tauK / zetaRS names")
    p.add_argument("--steps", type=int, default=20_000)
    p.add_argument("--k-refresh", type=int, default=50)
    p.add_argument("--gap-reps", type=int, default=8, help="fresh matrices per drift-gap point")
    p.add_argument("--fit-samples", type=int, default=1000, help="fresh matrices per concentration point")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_bernoulli)

    p = sub.add_parser("report", help="two-sample agreement between stored sample sets")
    p.add_argument("--inputs", nargs=2, required=True, metavar="CSV")
    p.add_argument("--statistics", help="comma list of shared columns (default: all shared)")
    p.add_argument("--ks-tol", type=float, default=0.02)
    p.add_argument("--z-tol", type=float, default=5.0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_report)

    parser.sub_choices = sub.choices
    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    if "--config" in argv:
        idx = argv.index("--config")
        if idx + 1 >= len(argv):
            parser.error("--config needs a file path")
        try:
            defaults = _read_config_file(argv[idx + 1])
        except (OSError, ValueError) as exc:
            print(f"error reading config file: {exc}", file=sys.stderr)
            return EXIT_USAGE
        # argparse re-runs `type` on string defaults, so explicit flags win
        for p in parser.sub_choices.values():
            for action in p._actions:  # noqa: SLF001
                if action.dest in defaults:
                    action.default = defaults[action.dest]
                    action.required = False
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except (sim.StepFloorError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"numerical abort: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
