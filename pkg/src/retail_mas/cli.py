"""Command line entry point: ``retail-mas run|compare|validate``."""

from __future__ import annotations

import argparse
import csv
import io
import os
import sys
import tempfile
from pathlib import Path
from typing import Optional, Sequence

from retail_mas.engine import EngineError, SimulationConfig, SimulationResult, run
from retail_mas.market import MODES, Scenario, ScenarioError, format_cents, load_scenario, with_overrides
from retail_mas.metrics import TRADES_HEADER

SUMMARY_HEADER = ("mode", "ticks", "trades", "AIP", "AITT", "ITR")


def write_atomic(path: Path, text: str) -> None:
    """Write via a temp file in the same directory, then rename over ``path``."""
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _csv_text(header: Sequence[str], rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _fmt(value: Optional[float]) -> str:
    return "" if value is None else f"{value:.4f}"


def summary_row(result: SimulationResult) -> list[str]:
    m = result.metrics
    return [result.config.mode, str(result.config.max_ticks), str(m.k), _fmt(m.aip()), _fmt(m.aitt()), _fmt(m.itr())]


def final_state_text(result: SimulationResult) -> str:
    """Per-agent tables in the same layout as the initial-state tables."""
    parts = []
    for sid, pricing in result.sellers.items():
        parts.append(f"# seller {sid}\nitem,price,min_price,max_price\n")
        for rec in pricing.values():
            parts.append(f"{rec.item},{format_cents(rec.price)},{format_cents(rec.min_price)},{format_cents(rec.max_price)}\n")
        parts.append("\n")
    for cid, inventory in result.clients.items():
        parts.append(f"# client {cid}\nitem,stock,min_stock,max_stock,buy_price\n")
        for rec in inventory.values():
            parts.append(f"{rec.item},{rec.stock},{rec.min_stock},{rec.max_stock},{format_cents(rec.buy_price)}\n")
        parts.append("\n")
    return "".join(parts).rstrip("\n") + "\n"


def write_outputs(result: SimulationResult, out_dir: Path, plots: bool = False) -> list[Path]:
    out_dir.mkdir(parents=True, exist_ok=True)
    files = {
        "metrics.csv": _csv_text(result.metrics.header(), result.rows),
        "trades.csv": _csv_text(TRADES_HEADER, (t.row() for t in result.trades)),
        "final_state.txt": final_state_text(result),
    }
    cfg = result.config
    if cfg.trace_messages:
        lines = "".join(line + "\n" for line in result.message_trace)
        files["trace_messages.csv"] = "tick,sender,performative,receivers,fields\n" + lines
    if cfg.trace_intentions:
        lines = "".join(line + "\n" for line in result.intention_trace)
        files["trace_intentions.csv"] = "tick,agent,action,done_condition,event\n" + lines
    if cfg.trace_auctions:
        lines = "".join(line + "\n" for line in result.auction_trace)
        files["trace_auctions.csv"] = "tick,auction_id,item,round,event,agent,price\n" + lines
    written = []
    for name, text in files.items():
        write_atomic(out_dir / name, text)
        written.append(out_dir / name)
    if plots:
        from retail_mas.plotting import render_figures

        written.extend(render_figures(out_dir))
    return written


def _scenario_from_args(args: argparse.Namespace) -> Scenario:
    scenario = load_scenario(args.scenario)
    return with_overrides(
        scenario,
        auction_max_rounds=args.auction_max_rounds,
        sales_max_per_tick=args.sales_max,
    )


def _config(args: argparse.Namespace, scenario: Scenario, mode: Optional[str] = None) -> SimulationConfig:
    return SimulationConfig(
        scenario,
        mode=mode or args.mode,
        seed=args.seed,
        max_ticks=args.ticks,
        trace_messages=args.trace_messages,
        trace_intentions=args.trace_intentions,
        trace_auctions=args.trace_auctions,
    )


def cmd_run(args: argparse.Namespace) -> int:
    try:
        scenario = _scenario_from_args(args)
    except ScenarioError as exc:
        _report(exc)
        return 1
    result = run(_config(args, scenario))
    write_outputs(result, Path(args.out), plots=args.plots)
    print(",".join(summary_row(result)))
    return 0


def compare_runs(config_a: SimulationConfig, config_b: SimulationConfig) -> tuple[SimulationResult, SimulationResult]:
    """Run two configurations that differ only in trading mode."""
    if config_a.scenario != config_b.scenario:
        raise ValueError("compare: both runs must use the same scenario")
    if config_a.seed != config_b.seed or config_a.max_ticks != config_b.max_ticks:
        raise ValueError("compare: both runs must use the same seed and tick count")
    return run(config_a), run(config_b)


def comparison_tables(a: SimulationResult, b: SimulationResult) -> tuple[str, str]:
    summary_header = ("mode", "ticks", "trades", "aip", "aitt", "itr", "internal", "external")
    summary = []
    for r in (a, b):
        m = r.metrics
        summary.append(summary_row(r)[:3] + [_fmt(m.aip()), _fmt(m.aitt()), _fmt(m.itr()), str(m.internal_count), str(m.external_count)])
    items = a.config.scenario.items
    deltas = []
    for item in items:
        pa = a.metrics.latest_price.get(item)
        pb = b.metrics.latest_price.get(item)
        delta = "" if pa is None or pb is None else format_cents(pb - pa)
        deltas.append(
            [item, "" if pa is None else format_cents(pa), "" if pb is None else format_cents(pb), delta]
        )
    delta_header = ("item", f"last_price_{a.config.mode}", f"last_price_{b.config.mode}", "delta")
    return _csv_text(summary_header, summary), _csv_text(delta_header, deltas)


def cmd_compare(args: argparse.Namespace) -> int:
    try:
        scenario = _scenario_from_args(args)
    except ScenarioError as exc:
        _report(exc)
        return 1
    out = Path(args.out)
    a, b = compare_runs(_config(args, scenario, MODES[0]), _config(args, scenario, MODES[1]))
    for r in (a, b):
        write_outputs(r, out / r.config.mode, plots=args.plots)
    summary, deltas = comparison_tables(a, b)
    write_atomic(out / "comparison.csv", summary)
    write_atomic(out / "price_deltas.csv", deltas)
    print(",".join(SUMMARY_HEADER))
    for r in (a, b):
        print(",".join(summary_row(r)))
    return 0


def cmd_validate(args: argparse.Namespace) -> int:
    try:
        scenario = load_scenario(args.scenario)
    except ScenarioError as exc:
        _report(exc)
        return 1
    print(
        f"ok: {len(scenario.items)} items, {len(scenario.client_templates)} client templates, "
        f"{len(scenario.seller_templates)} seller templates, {scenario.clients} clients, {scenario.sellers} sellers"
    )
    return 0


def _report(exc: ScenarioError) -> None:
    for line in exc.diagnostics:
        print(f"error: {line}", file=sys.stderr)


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def _non_negative(text: str) -> int:
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {value}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="retail-mas", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def sim_options(p: argparse.ArgumentParser, with_mode: bool) -> None:
        p.add_argument("--scenario", default="paper-default", help="scenario file or bundled name")
        if with_mode:
            p.add_argument("--mode", choices=MODES)
        p.add_argument("--seed", type=int)
        p.add_argument("--ticks", type=_positive)
        p.add_argument("--auction-max-rounds", type=_positive)
        p.add_argument("--sales-max", type=_non_negative)
        p.add_argument("--out", default="out")
        p.add_argument("--trace-messages", action="store_true")
        p.add_argument("--trace-intentions", action="store_true")
        p.add_argument("--trace-auctions", action="store_true")
        p.add_argument("--plots", action="store_true", help="also render PNG figures")

    p_run = sub.add_parser("run", help="run one simulation")
    sim_options(p_run, with_mode=True)
    p_run.set_defaults(func=cmd_run)

    p_cmp = sub.add_parser("compare", help="run both trading modes on one scenario and seed")
    sim_options(p_cmp, with_mode=False)
    p_cmp.set_defaults(func=cmd_compare, mode=None)

    p_val = sub.add_parser("validate", help="check a scenario file")
    p_val.add_argument("--scenario", default="paper-default")
    p_val.set_defaults(func=cmd_validate)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except EngineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
