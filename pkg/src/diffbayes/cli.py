"""Command-line front end: scenario parsing, run orchestration, result files.

Subcommands
-----------
run <config> [--out DIR] [--seeds N] [--sequential] [--dump-state]
    Run the configured pipelines for one seed (or a batch of consecutive
    seeds), write per-seed CSV metrics, a learning-curve figure, and a
    standalone plotting script into the output directory.
validate <config>
    Parse and validate the scenario, print a summary.
weights <config>
    Print the materialized incremental (c) and spatial (a) weight tables.

Config files are INI-style: a [scenario] section of key = value lines,
plus an optional [noise_overrides] section mapping node ids to noise
standard deviations. See the README for the full grammar.

Exit codes: 0 success, 2 configuration error, 3 numerical error.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from . import __version__
from .errors import ConfigError, DiffBayesError, NumericalError
from .graph import TopologySpec, parse_edge_list
from .nig import vform_to_text
from .report import render_learning_curve
from .sim import MetricsRow, Scenario, run_scenario, scenario_network, scenario_weights, seed_batch

OUT_DIR_ENV = "DIFFBAYES_OUT"

CSV_HEADER = ["t", "pipeline", "node", "sq_error", "msd", "sigma2_hat"]

_SCENARIO_KEYS = {
    "nodes",
    "theta_true",
    "noise_std",
    "topology",
    "radius",
    "edges",
    "edge_file",
    "steps",
    "seed",
    "c_weights",
    "a_weights",
    "spatial_mode",
    "incremental_mode",
    "form",
    "eps",
    "nu0",
    "regressors",
    "pipelines",
}

_SECTIONS = {"scenario", "noise_overrides"}


@dataclass(frozen=True)
class RunConfig:
    """Resolved run-level options (scenario file plus CLI flags)."""

    scenario_path: Path
    out_dir: Path
    seeds: int = 1
    sequential: bool = False
    dump_state: bool = False

    def __post_init__(self):
        if self.seeds < 1:
            raise ConfigError(f"seed batch size must be >= 1, got {self.seeds}")


def _get(section, key, convert, what):
    raw = section.get(key)
    if raw is None:
        raise ConfigError(f"missing required key {key!r} in [scenario]")
    try:
        return convert(raw)
    except ValueError:
        raise ConfigError(f"key {key!r}: expected {what}, got {raw!r}") from None


def _floats(raw: str) -> tuple:
    return tuple(float(x) for x in raw.split())


def parse_config(text: str) -> Scenario:
    """Parse and validate a scenario config; unknown keys are errors."""
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text)
    except configparser.Error as e:
        raise ConfigError(f"malformed config: {e}") from None

    for section in parser.sections():
        if section not in _SECTIONS:
            raise ConfigError(f"unknown section [{section}]; expected one of {sorted(_SECTIONS)}")
    if not parser.has_section("scenario"):
        raise ConfigError("missing [scenario] section")
    sec = parser["scenario"]
    for key in sec:
        if key not in _SCENARIO_KEYS:
            raise ConfigError(f"unknown key {key!r} in [scenario]")

    nodes = _get(sec, "nodes", int, "an integer")
    theta_true = _get(sec, "theta_true", _floats, "space-separated reals")
    steps = _get(sec, "steps", int, "an integer")
    seed = _get(sec, "seed", int, "an integer")

    noise = _get(sec, "noise_std", _floats, "one real or a list of reals")
    if len(noise) == 1:
        noise = noise * nodes
    if len(noise) != nodes:
        raise ConfigError(f"noise_std needs 1 or {nodes} values, got {len(noise)}")
    noise = list(noise)
    if parser.has_section("noise_overrides"):
        for key, raw in parser["noise_overrides"].items():
            try:
                k = int(key)
                value = float(raw)
            except ValueError:
                raise ConfigError(
                    f"[noise_overrides] entries must be `node = std`, got {key!r} = {raw!r}"
                ) from None
            if not 1 <= k <= nodes:
                raise ConfigError(f"[noise_overrides] node {k} out of range 1..{nodes}")
            noise[k - 1] = value

    kind = _get(sec, "topology", str, "a topology kind")
    radius = None
    edges = None
    if kind == "random-geometric":
        radius = _get(sec, "radius", float, "a real")
    elif kind == "edge-list":
        if "edges" in sec and "edge_file" in sec:
            raise ConfigError("give either `edges` or `edge_file`, not both")
        if "edges" in sec:
            edges = _parse_inline_edges(sec["edges"])
        elif "edge_file" in sec:
            path = Path(sec["edge_file"])
            try:
                edges = parse_edge_list(path.read_text())
            except OSError as e:
                raise ConfigError(f"cannot read edge_file {path}: {e}") from None
        else:
            raise ConfigError("edge-list topology needs `edges` or `edge_file`")
    topology = TopologySpec(kind=kind, radius=radius, edges=edges)

    nu0 = float(sec["nu0"]) if "nu0" in sec else None
    pipelines = tuple(sec["pipelines"].split()) if "pipelines" in sec else ("noncooperative", "diffusion", "centralized")

    return Scenario(
        theta_true=theta_true,
        noise_std=tuple(noise),
        node_count=nodes,
        topology=topology,
        steps=steps,
        seed=seed,
        c_strategy=sec.get("c_weights", "metropolis"),
        a_strategy=sec.get("a_weights", "metropolis"),
        spatial_mode=sec.get("spatial_mode", "estimate-combination"),
        incremental_mode=sec.get("incremental_mode", "neighbourhood"),
        form=sec.get("form", "v"),
        eps=_get(sec, "eps", float, "a real") if "eps" in sec else 1e-3,
        nu0=nu0,
        regressor_kind=sec.get("regressors", "iid-normal"),
        pipelines=pipelines,
    )


def _parse_inline_edges(raw: str) -> tuple:
    pairs = []
    for token in raw.split():
        parts = token.split("-")
        if len(parts) != 2:
            raise ConfigError(f"edges entries must look like `k-l`, got {token!r}")
        try:
            pairs.append((int(parts[0]), int(parts[1])))
        except ValueError:
            raise ConfigError(f"edges entries must be integer pairs, got {token!r}") from None
    return tuple(pairs)


def serialize_config(sc: Scenario) -> str:
    """Canonical config text; parse(serialize_config(sc)) equals sc."""
    lines = ["[scenario]"]
    lines.append(f"nodes = {sc.node_count}")
    lines.append("theta_true = " + " ".join(f"{x:.17g}" for x in sc.theta_true))
    lines.append("noise_std = " + " ".join(f"{x:.17g}" for x in sc.noise_std))
    lines.append(f"topology = {sc.topology.kind}")
    if sc.topology.kind == "random-geometric":
        lines.append(f"radius = {sc.topology.radius:.17g}")
    if sc.topology.kind == "edge-list":
        lines.append("edges = " + " ".join(f"{k}-{l}" for k, l in sorted(sc.topology.edges)))
    lines.append(f"steps = {sc.steps}")
    lines.append(f"seed = {sc.seed}")
    lines.append(f"c_weights = {sc.c_strategy}")
    lines.append(f"a_weights = {sc.a_strategy}")
    lines.append(f"spatial_mode = {sc.spatial_mode}")
    lines.append(f"incremental_mode = {sc.incremental_mode}")
    lines.append(f"form = {sc.form}")
    lines.append(f"eps = {sc.eps:.17g}")
    if sc.nu0 is not None:
        lines.append(f"nu0 = {sc.nu0:.17g}")
    lines.append(f"regressors = {sc.regressor_kind}")
    lines.append("pipelines = " + " ".join(sc.pipelines))
    return "\n".join(lines) + "\n"


def emit_csv(rows, path) -> Path:
    """Write metrics rows as CSV, ordered by (t, pipeline, node), 17 significant digits."""
    path = Path(path)
    expanded = []
    for row in sorted(rows, key=lambda r: (r.t, r.pipeline)):
        for node, (sq, s2) in enumerate(zip(row.sq_errors, row.sigma2_hats), start=1):
            expanded.append((row.t, row.pipeline, node, sq, row.msd, s2))
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for t, pipeline, node, sq, msd, s2 in expanded:
            writer.writerow([t, pipeline, node, f"{sq:.17g}", f"{msd:.17g}", f"{s2:.17g}"])
    return path


def read_csv_rows(path) -> list:
    """Inverse of emit_csv: regroup per-node lines into MetricsRow values."""
    grouped: dict = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != CSV_HEADER:
            raise ConfigError(f"{path}: unexpected CSV header {header!r}")
        for t, pipeline, node, sq, msd, s2 in reader:
            entry = grouped.setdefault((int(t), pipeline), {"msd": float(msd), "nodes": []})
            entry["nodes"].append((int(node), float(sq), float(s2)))
    rows = []
    for (t, pipeline), entry in sorted(grouped.items()):
        nodes = sorted(entry["nodes"])
        rows.append(
            MetricsRow(
                t=t,
                pipeline=pipeline,
                sq_errors=tuple(sq for _, sq, _ in nodes),
                msd=entry["msd"],
                sigma2_hats=tuple(s2 for _, _, s2 in nodes),
            )
        )
    return rows


_PLOT_SCRIPT = '''\
#!/usr/bin/env python3
"""Plot network MSD learning curves from {csv_name} (auto-generated)."""

import csv
from collections import defaultdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

HERE = Path(__file__).resolve().parent
CSV_PATH = HERE / "{csv_name}"
PIPELINES = {pipelines!r}

per_pipeline = defaultdict(dict)
with open(CSV_PATH, newline="") as fh:
    for row in csv.DictReader(fh):
        per_pipeline[row["pipeline"]].setdefault(int(row["t"]), float(row["msd"]))

fig, ax = plt.subplots(figsize=(7.0, 4.5))
for pipeline in PIPELINES:
    ts = sorted(per_pipeline[pipeline])
    ax.semilogy(ts, [per_pipeline[pipeline][t] for t in ts], label=pipeline)
ax.set_xlabel("step")
ax.set_ylabel("network MSD")
ax.legend()
ax.grid(True, which="both", alpha=0.3)
fig.savefig(HERE / "{png_name}", bbox_inches="tight", dpi=120)
print("wrote", HERE / "{png_name}")
'''


def emit_plot_script(csv_path, script_path=None) -> Path:
    """Write a standalone script that charts MSD-vs-step per pipeline from the CSV.

    The script references the CSV by relative path and is never executed by
    this package.
    """
    csv_path = Path(csv_path)
    if script_path is None:
        script_path = csv_path.with_name("plot_metrics.py")
    script_path = Path(script_path)
    pipelines = sorted({row.pipeline for row in read_csv_rows(csv_path)})
    script_path.write_text(
        _PLOT_SCRIPT.format(
            csv_name=csv_path.name,
            pipelines=tuple(pipelines),
            png_name=csv_path.stem + ".png",
        )
    )
    return script_path


def _cmd_run(args) -> int:
    run_cfg = RunConfig(
        scenario_path=Path(args.config),
        out_dir=Path(args.out) if args.out else Path(os.environ.get(OUT_DIR_ENV, "diffbayes-out")),
        seeds=args.seeds,
        sequential=args.sequential,
        dump_state=args.dump_state,
    )
    sc = parse_config(_read_config(run_cfg.scenario_path))
    run_cfg.out_dir.mkdir(parents=True, exist_ok=True)

    batch = seed_batch(sc, run_cfg.seeds)
    state_sink: dict = {}

    def one(scenario, sink=None):
        return run_scenario(scenario, sequential=run_cfg.sequential, state_sink=sink)

    results = []
    if run_cfg.sequential or len(batch) == 1:
        for i, scenario in enumerate(batch):
            results.append(one(scenario, state_sink if i == 0 and run_cfg.dump_state else None))
    else:
        with ThreadPoolExecutor(max_workers=min(4, len(batch))) as pool:
            futures = [
                pool.submit(one, scenario, state_sink if i == 0 and run_cfg.dump_state else None)
                for i, scenario in enumerate(batch)
            ]
            results = [f.result() for f in futures]

    csv_paths = []
    for scenario, rows in zip(batch, results):
        name = "metrics.csv" if len(batch) == 1 else f"metrics_{scenario.seed}.csv"
        csv_paths.append(emit_csv(rows, run_cfg.out_dir / name))

    all_rows = [row for rows in results for row in rows]
    figure_path = run_cfg.out_dir / "learning_curve.png"
    render_learning_curve(all_rows, figure_path)
    script_path = emit_plot_script(csv_paths[0])

    if run_cfg.dump_state:
        _dump_states(state_sink, run_cfg.out_dir)

    print(f"wrote {len(csv_paths)} CSV file(s), {figure_path.name} and {script_path.name} to {run_cfg.out_dir}")
    return 0


def _dump_states(state_sink: dict, out_dir: Path) -> None:
    for pipeline, per_node in sorted(state_sink.items()):
        for node, stat in sorted(per_node.items()):
            name = f"state_{pipeline}.txt" if node == 0 else f"state_{pipeline}_node{node}.txt"
            (out_dir / name).write_text(vform_to_text(stat))


def _cmd_validate(args) -> int:
    sc = parse_config(_read_config(Path(args.config)))
    net = scenario_network(sc)
    print(f"scenario OK: M={sc.node_count} nodes, {len(net.edges)} edges, "
          f"n={sc.n}, T={sc.steps}, seed={sc.seed}")
    print(f"pipelines: {', '.join(sc.pipelines)}; c={sc.c_strategy}, a={sc.a_strategy}, "
          f"spatial={sc.spatial_mode}, incremental={sc.incremental_mode}, form={sc.form}")
    return 0


def _cmd_weights(args) -> int:
    sc = parse_config(_read_config(Path(args.config)))
    net = scenario_network(sc)
    c, a = scenario_weights(sc, net)
    for label, table in (("c", c), ("a", a)):
        strategy = sc.c_strategy if label == "c" else sc.a_strategy
        print(f"# {label} weights ({strategy})")
        for k in net.nodes():
            row = table.row(k)
            entries = " ".join(f"{l}={row[l]:.17g}" for l in sorted(row))
            print(f"{k}: {entries}")
    return 0


def _read_config(path: Path) -> str:
    try:
        return path.read_text()
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from None


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="diffbayes",
        description="Diffusion Bayesian estimation scenarios over ad-hoc networks.",
    )
    parser.add_argument("--version", action="version", version=f"diffbayes {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run pipelines and write metrics/figures")
    p_run.add_argument("config")
    p_run.add_argument("--out", help=f"output directory (default ${OUT_DIR_ENV} or ./diffbayes-out)")
    p_run.add_argument("--seeds", type=int, default=1, help="seed batch size (consecutive seeds)")
    p_run.add_argument("--sequential", action="store_true",
                       help="strictly sequential per-node execution (bit-reproducible)")
    p_run.add_argument("--dump-state", action="store_true",
                       help="dump final statistics of the base seed run")
    p_run.set_defaults(func=_cmd_run)

    p_val = sub.add_parser("validate", help="parse and validate a scenario config")
    p_val.add_argument("config")
    p_val.set_defaults(func=_cmd_validate)

    p_w = sub.add_parser("weights", help="print materialized c/a weight tables")
    p_w.add_argument("config")
    p_w.set_defaults(func=_cmd_weights)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"i/o error: {e}", file=sys.stderr)
        return 2
    except NumericalError as e:
        print(f"numerical error: {e}", file=sys.stderr)
        return 3
    except DiffBayesError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
