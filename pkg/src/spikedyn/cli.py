"""Command line entry point: spikedyn <subcommand> [flags] [--config FILE].

Every subcommand writes one CSV per curve family into --output-dir and,
with --emit-svg, a matching static line plot. Exit codes: 0 success,
2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .errors import ConfigError, DivergenceError, DomainError

SUBCOMMANDS = ("theory", "ide", "simulate", "compare", "concentration", "rf", "landscape")

# flag name -> (type, default); a None default means "depends on the subcommand"
OPTIONS = {
    "lambda": (float, 2.0),
    "alpha": (float, 0.1),
    "n": (str, None),
    "runs": (int, None),
    "dt": (float, None),
    "steps": (int, None),
    "tau_max": (float, 10.0),
    "points": (int, 101),
    "seed": (int, 0),
    "ensemble": (str, "gaussian_goe"),
    "rho": (float, 2.5),
    "contour_points": (int, 256),
    "d": (int, 50),
    "psi1": (float, 1.0),
    "psi2": (float, 1.5),
    "ridge": (float, 0.1),
    "activation": (str, "tanh"),
    "output_dir": (str, "."),
    "emit_svg": (bool, False),
    "threads": (int, None),
}

SUBCOMMAND_DEFAULTS = {
    "theory": {},
    "ide": {"dt": 1e-3, "tau_max": 5.0},
    "simulate": {"n": "1000", "runs": 100, "dt": 0.1},
    "compare": {"n": "1000", "runs": 100, "dt": 0.1},
    "concentration": {"n": "100,400,1600", "runs": 20, "contour_points": 64},
    "rf": {"tau_max": 5.0},
    "landscape": {"n": "100", "lambda": 4.0},
}


class NumericalFailure(RuntimeError):
    pass


def _parse_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"cannot read {text!r} as a boolean")


def _convert(key: str, raw):
    kind = OPTIONS[key][0]
    if isinstance(raw, kind) and not (kind is int and isinstance(raw, bool)):
        return raw
    try:
        if kind is bool:
            return _parse_bool(str(raw))
        if kind is int:
            return int(str(raw).strip())
        if kind is float:
            return float(str(raw).strip())
        return str(raw).strip()
    except ValueError:
        raise ConfigError(f"invalid value {raw!r} for {key}") from None


def read_config_file(path: str) -> dict:
    """Flat key=value file, '#' starts a comment, keys use flag spelling."""
    values = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from None
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value")
        key, value = (part.strip() for part in line.split("=", 1))
        norm = key.lstrip("-").replace("-", "_")
        if norm not in OPTIONS:
            raise ConfigError(f"unknown key {key!r} in {path}:{lineno}")
        values[norm] = _convert(norm, value)
    return values


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="spikedyn", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", default=None, help="key=value file; flags take precedence")
        for key, (kind, _) in OPTIONS.items():
            flag = "--" + key.replace("_", "-")
            if kind is bool:
                p.add_argument(flag, dest=key, action="store_const", const=True, default=None)
            else:
                p.add_argument(flag, dest=key, default=None)
    return parser


def resolve(args: argparse.Namespace) -> dict:
    cfg = {key: default for key, (_, default) in OPTIONS.items()}
    cfg.update(SUBCOMMAND_DEFAULTS[args.subcommand])
    if args.config:
        cfg.update(read_config_file(args.config))
    for key in OPTIONS:
        raw = getattr(args, key)
        if raw is not None:
            cfg[key] = _convert(key, raw)
    if cfg["threads"] is None:
        cfg["threads"] = os.cpu_count() or 1
    cfg["subcommand"] = args.subcommand
    validate(cfg)
    return cfg


def _n_list(cfg) -> list[int]:
    try:
        values = [int(part) for part in str(cfg["n"]).split(",") if part.strip()]
    except ValueError:
        raise ConfigError(f"n must be an integer or comma list, got {cfg['n']!r}") from None
    if not values or min(values) < 2:
        raise ConfigError("n must be at least 2")
    return values


def validate(cfg: dict) -> None:
    if not (cfg["lambda"] > 0 and math.isfinite(cfg["lambda"])):
        raise ConfigError("lambda must be positive and finite")
    if not abs(cfg["alpha"]) <= 1:
        raise ConfigError(f"alpha must lie in [-1, 1], got {cfg['alpha']}")
    if not (cfg["tau_max"] > 0 and math.isfinite(cfg["tau_max"])):
        raise ConfigError("tau-max must be positive")
    if cfg["points"] < 2:
        raise ConfigError("points must be at least 2")
    if cfg["threads"] < 1:
        raise ConfigError("threads must be at least 1")
    if cfg["dt"] is not None and not cfg["dt"] > 0:
        raise ConfigError("dt must be positive")
    if cfg["runs"] is not None and cfg["runs"] < 1:
        raise ConfigError("runs must be at least 1")
    if cfg["steps"] is not None and cfg["steps"] < 1:
        raise ConfigError("steps must be at least 1")
    if cfg["ensemble"] not in ("gaussian_goe", "rademacher"):
        raise ConfigError(f"unknown ensemble {cfg['ensemble']!r}")
    if cfg["activation"] not in ("tanh", "relu"):
        raise ConfigError(f"unknown activation {cfg['activation']!r}")
    if cfg["n"] is not None:
        _n_list(cfg)
    sub = cfg["subcommand"]
    if sub == "ide":
        if cfg["dt"] > 1e-2 or cfg["tau_max"] > 100:
            raise ConfigError("ide needs dt <= 1e-2 and tau-max <= 100")
        if cfg["rho"] <= 2.4 or cfg["contour_points"] < 64:
            raise ConfigError("ide needs rho > 2.4 and at least 64 contour points")
    if sub == "compare" and cfg["runs"] < 2:
        raise ConfigError("compare needs at least two runs")
    if sub == "rf" and (cfg["d"] < 4 or cfg["psi1"] <= 0 or cfg["psi2"] <= 0 or cfg["ridge"] < 0):
        raise ConfigError("rf needs d >= 4, psi1, psi2 > 0 and ridge >= 0")
    if sub == "landscape" and _n_list(cfg)[0] > 400:
        raise ConfigError("landscape is limited to n <= 400")


def format_value(x) -> str:
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    return format(float(x), ".17g")


def write_csv(path: Path, header: list[str], columns: list) -> None:
    cols = [np.asarray(c) for c in columns]
    rows = len(cols[0])
    if any(len(c) != rows for c in cols):
        raise ValueError("CSV columns have different lengths")
    for name, c in zip(header, cols):
        if c.dtype.kind == "f" and not np.all(np.isfinite(c)):
            raise NumericalFailure(f"non-finite values in column {name}")
    lines = [",".join(header)]
    for i in range(rows):
        lines.append(",".join(format_value(c[i]) for c in cols))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def write_svg(path: Path, x, series: dict, xlabel: str, ylabel: str, title: str) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "spikedyn"
    fig, ax = plt.subplots(figsize=(6, 4))
    for label, y in series.items():
        style = "--" if label.endswith(("p10", "p90")) else "-"
        ax.plot(x, y, style, label=label)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def _tau_grid(cfg) -> np.ndarray:
    return np.linspace(0.0, cfg["tau_max"], cfg["points"])


def _check_finite(*arrays) -> None:
    for a in arrays:
        if not np.all(np.isfinite(np.asarray(a, dtype=float))):
            raise NumericalFailure("computation produced non-finite values")


def run_theory(cfg, out: Path, pool):
    from .theory import ScenarioParams, bar_q, cost_and_p1

    params = ScenarioParams(cfg["lambda"], cfg["alpha"])
    tau = _tau_grid(cfg)

    def point(t):
        cp = cost_and_p1(params, t)
        return bar_q(params, t), cp.cost, cp.p1_bar

    rows = np.array(list(pool.map(point, tau)))
    _check_finite(rows)
    write_csv(out / "theory.csv", ["tau", "q_bar", "cost", "p1_bar"],
              [tau, rows[:, 0], rows[:, 1], rows[:, 2]])
    if cfg["emit_svg"]:
        write_svg(out / "theory.svg", tau, {"q_bar": rows[:, 0], "cost": rows[:, 1],
                                            "p1_bar": rows[:, 2]},
                  "tau", "value", f"limiting curves, lambda={cfg['lambda']:g}, alpha={cfg['alpha']:g}")


def run_ide(cfg, out: Path, pool):
    from .ide import ContourGrid, ide_curve
    from .theory import ScenarioParams

    params = ScenarioParams(cfg["lambda"], cfg["alpha"])
    grid = ContourGrid(cfg["rho"], min(0.4, 0.5 * (cfg["rho"] - 2.0)), cfg["contour_points"])
    tau, q, p1 = ide_curve(params, _tau_grid(cfg), grid, cfg["dt"])
    _check_finite(q, p1)
    write_csv(out / "ide.csv", ["tau", "q_bar", "p1_bar"], [tau, q, p1])
    if cfg["emit_svg"]:
        write_svg(out / "ide.svg", tau, {"q_bar": q, "p1_bar": p1}, "tau", "value",
                  f"contour solver, lambda={cfg['lambda']:g}, alpha={cfg['alpha']:g}")


def _sim_config(cfg):
    from .simulate import SimConfig

    steps = cfg["steps"] or max(1, int(round(cfg["tau_max"] / cfg["dt"])))
    return SimConfig(n=_n_list(cfg)[0], lam=cfg["lambda"], alpha=cfg["alpha"], dt=cfg["dt"],
                     steps=steps, runs=cfg["runs"], ensemble=cfg["ensemble"],
                     base_seed=cfg["seed"])


def _run_ensemble(sc, pool):
    from .simulate import EnsembleStats, _quantiles, simulate_run

    traces = list(pool.map(lambda i: simulate_run(sc, i), range(sc.runs)))
    q = np.array([t.q for t in traces])
    cost = np.array([t.cost for t in traces])
    p1 = np.array([t.p1 for t in traces])
    return EnsembleStats(traces[0].tau, _quantiles(q), _quantiles(cost), _quantiles(p1))


def run_simulate(cfg, out: Path, pool):
    sc = _sim_config(cfg)
    if sc.runs == 1:
        from .simulate import simulate_run

        tr = simulate_run(sc, 0)
        _check_finite(tr.q, tr.p1, tr.cost)
        write_csv(out / "simulate.csv", ["tau", "q", "cost", "p1"], [tr.tau, tr.q, tr.cost, tr.p1])
        return
    st = _run_ensemble(sc, pool)
    header, cols = ["tau"], [st.tau]
    for name, qs in (("q", st.q_quantiles), ("cost", st.cost_quantiles), ("p1", st.p1_quantiles)):
        for tag, col in zip(("p10", "p50", "p90"), qs):
            header.append(f"{name}_{tag}")
            cols.append(col)
    _check_finite(*cols)
    write_csv(out / "simulate.csv", header, cols)
    if cfg["emit_svg"]:
        write_svg(out / "simulate.svg", st.tau,
                  dict(zip(("q_p10", "q_p50", "q_p90"), st.q_quantiles)), "tau", "overlap q",
                  f"gradient descent, n={sc.n}, {sc.runs} runs")


def run_compare(cfg, out: Path, pool):
    from .theory import ScenarioParams, bar_q

    sc = _sim_config(cfg)
    st = _run_ensemble(sc, pool)
    params = ScenarioParams(cfg["lambda"], cfg["alpha"])
    theory = np.array(list(pool.map(lambda t: bar_q(params, t), st.tau)))
    p10, p50, p90 = st.q_quantiles
    _check_finite(theory, p10, p50, p90)
    write_csv(out / "compare.csv", ["tau", "q_theory", "q_p10", "q_p50", "q_p90"],
              [st.tau, theory, p10, p50, p90])
    if cfg["emit_svg"]:
        write_svg(out / "compare.svg", st.tau,
                  {"theory": theory, "q_p10": p10, "q_p50": p50, "q_p90": p90}, "tau", "overlap q",
                  f"lambda={cfg['lambda']:g}, n={sc.n}, alpha={cfg['alpha']:g}, dt={sc.dt:g}")


def run_concentration(cfg, out: Path, pool):
    from .ide import ContourGrid
    from .matrices import concentration_sweep

    grid = ContourGrid(cfg["rho"], min(0.4, 0.5 * (cfg["rho"] - 2.0)), cfg["contour_points"])
    ns = sorted(_n_list(cfg))
    rep = concentration_sweep(ns, cfg["runs"], grid, ensemble=cfg["ensemble"],
                              seed=cfg["seed"], executor=pool)
    q = np.array(rep.quantiles)
    _check_finite(q)
    write_csv(out / "concentration.csv", ["n", "p10", "p50", "p90"],
              [np.array(ns), q[:, 0], q[:, 1], q[:, 2]])
    if cfg["emit_svg"]:
        write_svg(out / "concentration.svg", ns, {"p10": q[:, 0], "p50": q[:, 1], "p90": q[:, 2]},
                  "n", "sup deviation", "resolvent deviation from the semicircle transform")


def run_rf(cfg, out: Path, pool):
    from .randfeat import RFConfig, build_instance, rf_risk_curve

    rc = RFConfig(d=cfg["d"], psi1=cfg["psi1"], psi2=cfg["psi2"], lam=cfg["ridge"],
                  activation=cfg["activation"], seed=cfg["seed"])
    inst, meas = build_instance(rc)
    curve = rf_risk_curve(inst, meas, rc.lambda_star, _tau_grid(cfg))
    _check_finite(curve.q0, curve.p0, curve.p1, curve.risk)
    write_csv(out / "rf.csv", ["t", "q0", "p0", "p1", "risk"],
              [curve.t, curve.q0, curve.p0, curve.p1, curve.risk])
    if cfg["emit_svg"]:
        write_svg(out / "rf.svg", curve.t, {"risk": curve.risk}, "t", "risk",
                  f"random features, d={rc.d}, psi1={rc.psi1:g}, psi2={rc.psi2:g}")


def run_landscape(cfg, out: Path, pool):
    from .landscape import landscape_check
    from .matrices import sample_wigner
    from .simulate import init_vectors

    n = _n_list(cfg)[0]
    noise = sample_wigner(n, cfg["ensemble"], cfg["seed"])
    _, star = init_vectors(n, cfg["alpha"])
    rep = landscape_check(noise, cfg["lambda"], star)
    role = np.array(["saddle"] * (n - 1) + ["minimum"])
    with open(out / "landscape.csv", "w", encoding="utf-8", newline="\n") as fh:
        fh.write("index,eigenvalue,role\n")
        for i, (ev, r) in enumerate(zip(rep.eigvals, role)):
            fh.write(f"{i},{format_value(ev)},{r}\n")
    print(f"top overlap {rep.top_overlap:.6f}; gradient residual {rep.max_gradient_residual:.2e}; "
          f"saddles {rep.saddle_count}/{n - 1}; strict saddle {rep.strict_saddle}")


RUNNERS = {
    "theory": run_theory,
    "ide": run_ide,
    "simulate": run_simulate,
    "compare": run_compare,
    "concentration": run_concentration,
    "rf": run_rf,
    "landscape": run_landscape,
}


def run(cfg: dict) -> int:
    out = Path(cfg["output_dir"])
    out.mkdir(parents=True, exist_ok=True)
    with ThreadPoolExecutor(cfg["threads"]) as pool:
        RUNNERS[cfg["subcommand"]](cfg, out, pool)
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = resolve(args)
    except (ConfigError, DomainError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        return run(cfg)
    except (ConfigError, DomainError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (DivergenceError, NumericalFailure, ArithmeticError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
