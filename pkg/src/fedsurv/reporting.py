"""Delimited outputs of a run and the derived comparison/trend tables.

File schemas (frozen; see README):

* ``metrics.csv`` — round, global_c_index, messages_sent, selected_clients
  (ids joined by ``|``).
* ``reputation.csv`` — round, observer, subject, score (pairwise long form).
* ``node_reputation.csv`` — round, node, score (per-node aggregates).
* ``summary.csv`` (sweeps) — parameter, value, seed, final_c_index,
  mean_c_index, stability, total_messages, run_dir.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np
import pandas as pd

from .config import ExperimentConfig
from .federation import FederationState

METRICS_COLUMNS = ("round", "global_c_index", "messages_sent",
                   "selected_clients")
REPUTATION_COLUMNS = ("round", "observer", "subject", "score")
NODE_REPUTATION_COLUMNS = ("round", "node", "score")
SUMMARY_COLUMNS = ("parameter", "value", "seed", "final_c_index",
                   "mean_c_index", "stability", "total_messages", "run_dir")

METRICS_FILE = "metrics.csv"
REPUTATION_FILE = "reputation.csv"
NODE_REPUTATION_FILE = "node_reputation.csv"
REPORT_FILE = "run_report.txt"
CONFIG_ECHO_FILE = "config.yaml"
SUMMARY_FILE = "summary.csv"

TFFL_DISCLAIMER = (
    "note: tffl_proxy is a simplified server-side stand-in for "
    "reputation-weighted consensus aggregation (beta-opinion per client); "
    "it is not the original system.")


def write_metrics_csv(path: str | Path, state: FederationState) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(METRICS_COLUMNS)
        for m in state.metrics_log:
            writer.writerow([
                m.round,
                repr(float(m.global_c_index)),
                m.messages_sent,
                "|".join(str(c) for c in m.selected_clients),
            ])


def write_reputation_csv(path: str | Path, state: FederationState) -> None:
    n = state.reputation.n_clients
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(REPUTATION_COLUMNS)
        for round_index, values in state.reputation_history:
            for observer in range(n):
                for subject in range(n):
                    if observer == subject:
                        continue
                    writer.writerow([round_index, observer, subject,
                                     repr(float(values[observer, subject]))])


def write_node_reputation_csv(path: str | Path,
                              state: FederationState) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(NODE_REPUTATION_COLUMNS)
        for m in state.metrics_log:
            for node in sorted(m.per_node_reputation):
                writer.writerow([m.round, node,
                                 repr(float(m.per_node_reputation[node]))])


def read_metrics_csv(path: str | Path) -> pd.DataFrame:
    df = pd.read_csv(path)
    if tuple(df.columns) != METRICS_COLUMNS:
        raise ValueError(f"{path}: unexpected metrics schema "
                         f"{tuple(df.columns)}")
    return df


def read_node_reputation_csv(path: str | Path) -> pd.DataFrame:
    df = pd.read_csv(path)
    if tuple(df.columns) != NODE_REPUTATION_COLUMNS:
        raise ValueError(f"{path}: unexpected node reputation schema")
    return df


def read_reputation_csv(path: str | Path) -> pd.DataFrame:
    df = pd.read_csv(path)
    if tuple(df.columns) != REPUTATION_COLUMNS:
        raise ValueError(f"{path}: unexpected reputation schema")
    return df


def summarize_metrics(df: pd.DataFrame) -> dict:
    """Final/mean C-index, final node-score variance and message total."""
    last = df.iloc[-1]
    return {
        "final_c_index": float(last["global_c_index"]),
        "mean_c_index": float(df["global_c_index"].mean()),
        "total_messages": int(df["messages_sent"].sum()),
        "rounds": int(last["round"]),
    }


def stability_from_node_file(df: pd.DataFrame) -> float:
    last_round = df["round"].max()
    scores = df.loc[df["round"] == last_round, "score"].to_numpy()
    return float(np.var(scores))


def write_run_report(path: str | Path, config: ExperimentConfig,
                     state: FederationState) -> None:
    import yaml
    lines = []
    lines.append("run report")
    lines.append("==========")
    lines.append("")
    lines.append(f"method: {config.federation.method}")
    if config.federation.method == "tffl_proxy":
        lines.append(TFFL_DISCLAIMER)
    lines.append(f"rounds completed: {state.round}")
    lines.append(f"privacy: enabled={config.privacy.enabled} "
                 f"clip_norm={config.privacy.params.clip_norm} "
                 f"epsilon={config.privacy.params.epsilon} "
                 f"delta={config.privacy.params.delta}")
    adv = config.adversary_clients()
    lines.append(f"adversarial clients: {list(adv) if adv else 'none'}")
    lines.append("")
    lines.append("cluster assignment (client -> cluster):")
    for cid, cluster in enumerate(state.assignment.assignment):
        lines.append(f"  {cid} -> {cluster}")
    lines.append("")
    lines.append("per-client reputation messages sent:")
    for cid, count in enumerate(state.per_client_messages):
        lines.append(f"  {cid}: {int(count)}")
    lines.append("")
    lines.append("round, global c-index, messages:")
    for m in state.metrics_log:
        lines.append(f"  {m.round:4d}  {m.global_c_index:.6f}  "
                     f"{m.messages_sent}")
    lines.append("")
    final = state.metrics_log[-1]
    lines.append("final per-node reputation:")
    for node in sorted(final.per_node_reputation):
        lines.append(f"  {node}: {final.per_node_reputation[node]:.6f}")
    lines.append("")
    lines.append("configuration echo:")
    echo = yaml.safe_dump(config.to_dict(), sort_keys=True)
    lines.extend("  " + ln for ln in echo.splitlines())
    Path(path).write_text("\n".join(lines) + "\n")


def build_comparison(run_dirs) -> pd.DataFrame:
    """Per-round C-index table with one column per run's method.

    All runs must cover the same rounds; offenders are listed otherwise.
    """
    import yaml
    frames = {}
    rounds_seen = {}
    for run_dir in run_dirs:
        run_dir = Path(run_dir)
        df = read_metrics_csv(run_dir / METRICS_FILE)
        method = _run_method(run_dir)
        name = method
        k = 2
        while name in frames:
            name = f"{method}_{k}"
            k += 1
        frames[name] = df.set_index("round")["global_c_index"]
        rounds_seen[str(run_dir)] = int(df["round"].max())
    if len(set(rounds_seen.values())) > 1:
        detail = ", ".join(f"{d} (rounds={r})"
                           for d, r in sorted(rounds_seen.items()))
        raise ValueError(f"mismatched round counts across inputs: {detail}")
    table = pd.DataFrame(frames)
    table.index.name = "round"
    return table


def _run_method(run_dir: Path) -> str:
    import yaml
    echo = run_dir / CONFIG_ECHO_FILE
    if echo.exists():
        raw = yaml.safe_load(echo.read_text()) or {}
        return str((raw.get("federation") or {}).get("method", "run"))
    return "run"


def comparison_text(table: pd.DataFrame) -> str:
    lines = ["global c-index per round", ""]
    header = ["round"] + list(table.columns)
    lines.append("  ".join(f"{h:>12}" for h in header))
    for rnd, row in table.iterrows():
        cells = [f"{rnd:>12}"] + [f"{v:>12.6f}" for v in row]
        lines.append("  ".join(cells))
    return "\n".join(lines) + "\n"


def write_summary_csv(path: str | Path, rows: list[dict]) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=SUMMARY_COLUMNS)
        writer.writeheader()
        for row in rows:
            writer.writerow(row)


def read_summary_csv(path: str | Path) -> pd.DataFrame:
    df = pd.read_csv(path)
    if tuple(df.columns) != SUMMARY_COLUMNS:
        raise ValueError(f"{path}: unexpected summary schema")
    return df


def aggregate_summary(df: pd.DataFrame) -> pd.DataFrame:
    """Mean and sample standard deviation per sweep value across seeds."""
    grouped = df.groupby("value", sort=True)
    out = grouped.agg(
        final_c_index_mean=("final_c_index", "mean"),
        final_c_index_std=("final_c_index", lambda s: s.std(ddof=1)),
        mean_c_index_mean=("mean_c_index", "mean"),
        stability_mean=("stability", "mean"),
        stability_std=("stability", lambda s: s.std(ddof=1)),
        total_messages_mean=("total_messages", "mean"),
        runs=("seed", "count"),
    ).reset_index()
    out.insert(0, "parameter", df["parameter"].iloc[0])
    return out
