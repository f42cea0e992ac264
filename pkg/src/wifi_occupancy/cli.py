"""Command-line entry point: simulate, parse, classify, train, evaluate,
sensor, serve, fetch-oui.

Exit codes: 0 success, 1 operational failure, 2 usage error. Results go
to stdout, diagnostics to stderr.
"""

from __future__ import annotations

import csv
import json
import os
import sys
from pathlib import Path

import click

from . import backend as backend_mod
from . import evaluate as eval_mod
from . import frames, oui, plots, simulate
from .counters import ThresholdGrid
from .model import SearchGrid, TrainingBuffer, TrainingSample, train
from .sensor import SensorConfig, SensorNode

DEFAULT_OUI_URL = "http://standards-oui.ieee.org/oui.txt"
BACKEND_ENV_VAR = "WIFI_OCCUPANCY_BACKEND"


def _fail(message: str) -> "click.exceptions.Exit":
    click.echo(f"error: {message}", err=True)
    return SystemExit(1)


def _load_registry(path: str) -> oui.OuiRegistry:
    try:
        return oui.load_registry(path)
    except OSError as exc:
        raise _fail(f"cannot read OUI registry {path}: {exc}")


def _grid_from_option(spec: str) -> ThresholdGrid:
    """Grid spec "start:step:count" in dBm, or "default"."""
    if spec == "default":
        return ThresholdGrid.default()
    try:
        start, step, count = (int(x) for x in spec.split(":"))
        return ThresholdGrid(tuple(start + step * i for i in range(count)))
    except ValueError as exc:
        raise click.BadParameter(f"grid spec {spec!r}: {exc}")


@click.group()
def main():
    """Occupancy estimation from Wi-Fi probe-request traffic."""


@main.command(name="simulate")
@click.option("--scenario", required=True, type=click.Path(), help="Scenario JSON file.")
@click.option("--out-pcap", required=True, type=click.Path())
@click.option("--out-truth", required=True, type=click.Path())
@click.option("--seed", type=int, default=None, help="Override the scenario seed.")
def simulate_cmd(scenario, out_pcap, out_truth, seed):
    """Generate a synthetic probe trace and its ground-truth series."""
    try:
        sc = simulate.load_scenario(scenario)
    except OSError as exc:
        raise _fail(f"cannot read scenario {scenario}: {exc}")
    if seed is not None:
        sc = simulate.Scenario.from_dict({**sc.to_dict(), "seed": seed})
    records, truth = sc.run()
    frames.write_capture(out_pcap, records)
    simulate.write_truth_file(truth, out_truth)
    click.echo(
        json.dumps(
            {"frames": len(records), "windows": len(truth), "pcap": str(out_pcap)}
        )
    )


@main.command()
@click.option("--pcap", "pcap_path", required=True, type=click.Path())
@click.option("--oui", "oui_path", required=True, type=click.Path())
@click.option("--json", "as_json", is_flag=True, help="Emit one JSON object per record.")
@click.option("--strict", is_flag=True, help="Treat locally-administered MACs as randomized.")
def parse(pcap_path, oui_path, as_json, strict):
    """Decode probe requests from a capture, with MAC classification."""
    registry = _load_registry(oui_path)
    try:
        reader = frames.open_capture(pcap_path)
    except OSError as exc:
        raise _fail(f"cannot read capture {pcap_path}: {exc}")
    except frames.CodecError as exc:
        raise _fail(str(exc))
    count = 0
    for rec in reader:
        mac_class = registry.classify(rec.source_mac, strict=strict)
        if as_json:
            click.echo(
                json.dumps(
                    {
                        "timestamp_us": rec.timestamp_us,
                        "mac": str(rec.source_mac),
                        "class": mac_class.value,
                        "vendor": registry.vendor_of(rec.source_mac),
                        "rss_dbm": rec.rss_dbm,
                        "ssid": rec.ssid.decode("utf-8", "replace") if rec.ssid else None,
                    }
                )
            )
        else:
            rss = f"{rec.rss_dbm:5d}" if rec.rss_dbm is not None else "    -"
            click.echo(
                f"{rec.timestamp_us:>16d} {rec.source_mac} {rss} dBm  {mac_class.value}"
            )
        count += 1
    click.echo(f"records: {count}  skipped: {reader.skipped}  errors: {reader.errors}", err=True)


@main.command()
@click.option("--oui", "oui_path", required=True, type=click.Path())
@click.option("--strict", is_flag=True)
@click.argument("macs", nargs=-1, required=True)
def classify(oui_path, strict, macs):
    """Classify MAC addresses as valid or randomized."""
    registry = _load_registry(oui_path)
    for text in macs:
        try:
            mac = frames.MacAddress.parse(text)
        except ValueError as exc:
            raise _fail(str(exc))
        mac_class = registry.classify(mac, strict=strict)
        vendor = registry.vendor_of(mac) or "-"
        click.echo(f"{mac} {mac_class.value} {vendor}")


@main.command(name="train")
@click.option("--pcap", "pcap_path", required=True, type=click.Path())
@click.option("--truth", "truth_path", required=True, type=click.Path())
@click.option("--oui", "oui_path", required=True, type=click.Path())
@click.option("--grid", default="default", help='Threshold grid "start:step:count" or "default".')
@click.option("--buffer-size", default=40, show_default=True)
def train_cmd(pcap_path, truth_path, oui_path, grid, buffer_size):
    """Calibrate model parameters from a capture plus ground-truth series."""
    registry = _load_registry(oui_path)
    grid_obj = _grid_from_option(grid)
    try:
        records = list(frames.open_capture(pcap_path))
        truth = simulate.read_truth_file(truth_path)
    except OSError as exc:
        raise _fail(str(exc))
    except frames.CodecError as exc:
        raise _fail(str(exc))
    samples = eval_mod.windowize(records, truth, registry, grid_obj)
    if not samples:
        raise _fail("no labeled windows in the input")
    buffer = TrainingBuffer(capacity=buffer_size)
    for s in samples:
        buffer.push(s)
    params = train(buffer)
    click.echo(json.dumps(params.to_dict()))


@main.command()
@click.option("--dataset", type=click.Path(), help="Dataset JSON of labeled snapshots.")
@click.option("--pcap", "pcap_path", type=click.Path())
@click.option("--truth", "truth_path", type=click.Path())
@click.option("--oui", "oui_path", type=click.Path())
@click.option("--grid", default="default")
@click.option("--train-size", default=40, show_default=True)
@click.option("--repeats", default=10, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--mode", type=click.Choice(["monte-carlo", "kfold"]), default="monte-carlo")
@click.option("--seats", default=None, type=int, help="Room capacity for percentage error.")
@click.option("--rounded", is_flag=True, help="Score rounded integer estimates.")
@click.option("--out-dir", type=click.Path(), help="Write JSON/CSV report and figures here.")
def evaluate(dataset, pcap_path, truth_path, oui_path, grid, train_size, repeats,
             seed, mode, seats, rounded, out_dir):
    """Cross-validated RMSE / MAE / percentage-error report."""
    room_info: dict = {}
    if dataset:
        try:
            samples, room_info = eval_mod.load_dataset(dataset)
        except OSError as exc:
            raise _fail(f"cannot read dataset {dataset}: {exc}")
    elif pcap_path and truth_path and oui_path:
        registry = _load_registry(oui_path)
        try:
            records = list(frames.open_capture(pcap_path))
            truth = simulate.read_truth_file(truth_path)
        except OSError as exc:
            raise _fail(str(exc))
        except frames.CodecError as exc:
            raise _fail(str(exc))
        samples = eval_mod.windowize(records, truth, registry, _grid_from_option(grid))
    else:
        raise click.UsageError("provide --dataset or all of --pcap/--truth/--oui")

    seats_val = seats or room_info.get("seats")
    if not seats_val:
        raise click.UsageError("provide --seats (or a dataset with room.seats)")

    spec = eval_mod.SplitSpec(train_size=train_size, repeats=repeats, seed=seed, mode=mode)
    try:
        report = eval_mod.cross_validate(samples, seats_val, spec, rounded=rounded)
    except ValueError as exc:
        raise _fail(str(exc))

    label = room_info.get("room_id", "room")
    click.echo(report.table(label))

    if out_dir:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "report.json", "w") as f:
            json.dump(report.to_dict(), f, indent=2)
        with open(out / "report.csv", "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(["repeat", "alpha", "beta", "theta_dbm", "rmse", "mae", "pct_error"])
            for i, r in enumerate(report.per_repeat, 1):
                writer.writerow(
                    [i, r.params.alpha, r.params.beta, r.params.theta_dbm, r.rmse, r.mae, r.pct_error]
                )
        plots.plot_eval_metrics(report, out / "metrics.png")
        plots.plot_eval_params(report, out / "params.png")
        click.echo(f"report written to {out}", err=True)


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path())
@click.option("--seed", default=0, show_default=True)
def sensor(config_path, seed):
    """Run a sensor node over a capture, publishing to the backend."""
    try:
        with open(config_path) as f:
            cfg = json.load(f)
    except OSError as exc:
        raise _fail(f"cannot read config {config_path}: {exc}")

    registry = _load_registry(cfg["oui"])
    grid = _grid_from_option(cfg.get("grid", "default"))
    config = SensorConfig(
        room_id=cfg["room_id"],
        window_duration_s=cfg.get("window_duration_s", 300.0),
        grid=grid,
        publish_environment=cfg.get("publish_environment", False),
        strict_classification=cfg.get("strict_classification", False),
    )

    backend_addr = cfg.get("backend") or os.environ.get(BACKEND_ENV_VAR)
    if not backend_addr:
        raise _fail(f"no backend address (config 'backend' or ${BACKEND_ENV_VAR})")
    host, port = backend_addr.rsplit(":", 1)
    client = backend_mod.TcpClient(host, int(port))

    try:
        reader = frames.open_capture(cfg["pcap"])
    except (OSError, frames.CodecError) as exc:
        raise _fail(str(exc))
    records = list(reader)
    if not records:
        raise _fail("capture holds no probe requests")

    start = records[0].timestamp_us / 1e6
    end = records[-1].timestamp_us / 1e6
    n_windows = max(1, int((end - start) // config.window_duration_s) + 1)

    # Offline replay: the clock tracks the window under processing.
    window_clock = {"now": start}
    node = SensorNode(config, registry, client, clock=lambda: window_clock["now"], env_seed=seed)
    frames_iter = iter(records)
    for i in range(n_windows):
        window_start = start + i * config.window_duration_s
        window_clock["now"] = window_start + config.window_duration_s
        report = node.run_window(frames_iter, window_start)
        click.echo(json.dumps(report.to_payload()))
    client.close()


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path())
def serve(config_path):
    """Run the backend service (TCP sensor transport + HTTP API)."""
    import uvicorn

    try:
        with open(config_path) as f:
            cfg = json.load(f)
    except OSError as exc:
        raise _fail(f"cannot read config {config_path}: {exc}")

    core = backend_mod.BackendCore(cfg.get("data_dir", "./data"), rooms=cfg.get("rooms", []))
    tcp = backend_mod.TcpBackendServer(
        core, cfg.get("tcp_host", "127.0.0.1"), cfg.get("tcp_port", 7780)
    )
    tcp.serve_background()
    click.echo(f"sensor transport on {tcp.address[0]}:{tcp.address[1]}", err=True)
    app = backend_mod.create_app(core, static_dir=cfg.get("static_dir"))
    uvicorn.run(app, host=cfg.get("http_host", "127.0.0.1"), port=cfg.get("http_port", 8080))


@main.command(name="fetch-oui")
@click.option("--out", required=True, type=click.Path())
@click.option("--url", default=DEFAULT_OUI_URL, show_default=True)
def fetch_oui(out, url):
    """Download the IEEE OUI registry to a local file."""
    import requests

    try:
        resp = requests.get(url, timeout=60)
        resp.raise_for_status()
    except requests.RequestException as exc:
        raise _fail(f"fetch failed: {exc}")
    with open(out, "w", encoding="utf-8") as f:
        f.write(resp.text)
    registry = oui.parse_registry_text(resp.text)
    click.echo(f"wrote {out}: {len(registry)} OUIs")


if __name__ == "__main__":
    main()
