"""Command-line front end: solve, stats, functional, simulate, compare."""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import io
import json
import os
import sys
from dataclasses import asdict, dataclass, replace
from pathlib import Path

from . import __version__, archmodel, optics, sc_core, simengine
from .workload import spec as wspec
from .workload.conv import tensor_stats
from .workload.zoo import BUNDLED, load_bundled

PRESET_DIR_ENV = "SCONNA_PRESET_DIR"
OPTICS_PRESETS = {"table-iii": optics.OpticalLinkParams()}


class CliError(Exception):
    pass


@dataclass
class RunManifest:
    command: str
    inputs: list
    presets: list
    seed: int
    out_dir: str
    version: str = __version__
    timestamp: str = ""

    def hashed(self) -> dict:
        """Manifest content that goes into output files (no timestamp)."""
        d = asdict(self)
        d.pop("timestamp")
        return d


def _jdump(obj) -> str:
    return json.dumps(obj, indent=1, sort_keys=True, allow_nan=False) + "\n"


class Writer:
    def __init__(self, out_dir, manifest: RunManifest):
        self.out = Path(out_dir)
        self.manifest = manifest
        self.paths = []

    def json(self, name, payload):
        body = dict(payload)
        body["manifest"] = self.manifest.hashed()
        return self._write(name, _jdump(body))

    def csv(self, name, text):
        head = "# manifest=" + json.dumps(self.manifest.hashed(), sort_keys=True) + "\n"
        return self._write(name, head + text)

    def _write(self, name, text):
        self.out.mkdir(parents=True, exist_ok=True)
        p = self.out / name
        p.write_text(text)
        self.paths.append(p)
        return p

    def finish(self):
        m = asdict(self.manifest)
        m["timestamp"] = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
        m["outputs"] = [p.name for p in self.paths]
        (self.out / "manifest.json").write_text(_jdump(m))


def read_csv(path) -> list[dict]:
    """Parse an output CSV, skipping the manifest comment line."""
    lines = [l for l in Path(path).read_text().splitlines() if not l.startswith("#")]
    return list(csv.DictReader(io.StringIO("\n".join(lines))))


def _rows_csv(rows, columns) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([repr(r[c]) if isinstance(r[c], float) else r[c] for c in columns])
    return buf.getvalue()


def _preset_dir():
    d = os.environ.get(PRESET_DIR_ENV)
    return Path(d) if d else None


def _load_network(ref: str) -> wspec.NetworkSpec:
    if ref in BUNDLED:
        return load_bundled(ref)
    p = Path(ref)
    if not p.exists():
        raise CliError(f"network {ref!r} is neither a file nor a bundled network "
                       f"({', '.join(BUNDLED)})")
    return wspec.load_network(p)


def _load_accelerator(ref: str) -> archmodel.AcceleratorConfig:
    """Accelerator by file path, preset-directory file, or built-in preset."""
    candidates = [Path(ref)]
    if _preset_dir():
        candidates.append(_preset_dir() / f"{ref}.json")
    for p in candidates:
        if p.suffix == ".json" and p.exists():
            return archmodel.AcceleratorConfig.from_dict(json.loads(p.read_text()))
    if ref in archmodel.PRESETS:
        return archmodel.PRESETS[ref]
    raise CliError(f"unknown accelerator preset {ref!r}; available: "
                   f"{', '.join(archmodel.PRESETS)}")


def _load_optics(args) -> optics.OpticalLinkParams:
    if args.params:
        return optics.load_params(args.params)
    if _preset_dir() and (_preset_dir() / f"{args.preset}.json").exists():
        return optics.load_params(_preset_dir() / f"{args.preset}.json")
    if args.preset not in OPTICS_PRESETS:
        raise CliError(f"unknown optics preset {args.preset!r}; available: "
                       f"{', '.join(OPTICS_PRESETS)}")
    return OPTICS_PRESETS[args.preset]


def _floats(text):
    return [float(t) for t in text.split(",") if t.strip()]


def cmd_solve(args, w: Writer):
    params = _load_optics(args)
    if args.sweep:
        Bs = [int(b) for b in _floats(args.sweep_B)]
        BRs = _floats(args.sweep_BR)
        reports = optics.sweep(Bs, BRs, params, args.dr_interpretation, args.pin_ppd)
        rows = [r.row() for r in reports]
        w.csv("sweep.csv", _rows_csv(rows, optics.SWEEP_COLUMNS))
        for r in rows:
            print(f"B={r['B']} BR={r['BR']:.3g} P_pd={r['P_pd_dbm']:.3f} dBm N_max={r['N_max']}")
        return 0
    cfg = optics.SolveConfig(B=args.B, BR=args.BR, dr_interpretation=args.dr_interpretation)
    try:
        rep = optics.scalability(cfg, params, args.pin_ppd)
    except optics.NoSolutionError as exc:
        raise CliError(f"infeasible: {exc}") from exc
    payload = {"B": rep.B, "BR": rep.BR, "DR": rep.DR, "dr_interpretation": rep.dr_interpretation,
               "P_pd_dbm": rep.p_pd_dbm, "pinned": rep.pinned, "N_max": rep.n_max,
               "N_max_wall_plug": rep.n_max_electrical,
               "P_laser_required_dbm": rep.p_laser_required_dbm, "ledger_db": rep.ledger,
               "params": params.to_dict()}
    if args.format == "csv":
        w.csv("solve.csv", _rows_csv([rep.row()], optics.SWEEP_COLUMNS))
    else:
        w.json("solve.json", payload)
    print(f"P_pd = {rep.p_pd_dbm:.3f} dBm, N_max = {rep.n_max}")
    for k, v in rep.ledger.items():
        print(f"  {k:20s} {v:8.3f} dB")
    if rep.n_max == 0:
        raise CliError("infeasible budget: even N = 1 exceeds the laser power "
                       f"(ledger above, P_laser = {params.P_laser_dbm} dBm)")
    return 0


def cmd_stats(args, w: Writer):
    rows = []
    for ref in args.networks:
        net = _load_network(ref)
        small, large = tensor_stats(net, args.threshold, args.include_fc)
        rows.append({"network": net.name, "threshold": args.threshold,
                     "small": small, "large": large})
        print(f"{net.name}: S<={args.threshold}: {small}  S>{args.threshold}: {large}")
    if args.format == "csv":
        w.csv("stats.csv", _rows_csv(rows, ["network", "threshold", "small", "large"]))
    else:
        w.json("stats.json", {"stats": rows})
    return 0


def cmd_functional(args, w: Writer):
    if args.trials < 1:
        raise CliError("--trials must be >= 1")
    prec = sc_core.PrecisionConfig(args.B)
    adc = sc_core.AdcModel.for_vdpe(args.length, prec)
    st = sc_core.measure_vdp_error(args.trials, args.length, prec, adc, args.seed, args.signed)
    on = args.adc == "on"
    row = {"trials": st.trials, "length": st.length, "B": args.B, "adc": args.adc,
           "mape": st.mape_adc if on else st.mape_rounding,
           "max_abs_error": st.max_abs_adc if on else st.max_abs_rounding,
           "mean_abs_error": st.mae_adc if on else st.mae_rounding,
           "excluded_zero": st.excluded_zero}
    if args.format == "csv":
        w.csv("functional.csv", _rows_csv([row], list(row)))
    else:
        w.json("functional.json", row)
    print(f"MAPE {100 * row['mape']:.3f}%  max |err| {row['max_abs_error']:.3f} counts")
    return 0


def _instances(args):
    out = []
    for ref in args.accelerators:
        cfg = _load_accelerator(ref)
        if cfg.family != "SCONNA" and args.area_scale:
            cfg = replace(cfg, vdpe_count=archmodel.area_proportionate_scale(
                cfg, archmodel.reference_area()))
        out.append(archmodel.build_accelerator(cfg))
    return out


def cmd_simulate(args, w: Writer):
    net = _load_network(args.network)
    (inst,) = _instances(argparse.Namespace(accelerators=[args.accelerator],
                                            area_scale=args.area_scale))
    m = simengine.simulate(net, inst, bit_exact_layers=args.bit_exact_layer or (),
                           seed=args.seed)
    w.csv("layers.csv", m.layer_csv())
    w.json("summary.json", m.summary())
    w.json("costs.json", cost_payload(inst))
    if m.error:
        raise CliError(m.error)
    print(f"{net.name} on {inst.config.name}: {m.fps:.4g} FPS, {m.fps_per_watt:.4g} FPS/W, "
          f"{m.fps_per_watt_per_mm2:.4g} FPS/W/mm2")
    return 0


def cost_payload(inst) -> dict:
    s = archmodel.cost_summary(inst)
    return {"config": inst.config.to_dict(), "cost": s.to_dict(), "inventory": inst.inventory}


def cmd_compare(args, w: Writer):
    nets = [_load_network(n) for n in args.networks]
    insts = _instances(args)
    cmp = simengine.compare(nets, insts)
    w.csv("metrics_long.csv", cmp.long_csv())
    w.csv("ratios.csv", cmp.ratio_csv())
    w.json("ratios.json", cmp.ratio_table())
    for (n, a), m in sorted(cmp.metrics.items()):
        w.csv(f"layers_{n}_{a}.csv", m.layer_csv())
    for a, block in cmp.ratio_table()["ratios"].items():
        print(f"{cmp.reference} / {a}: " + ", ".join(
            f"{k} gmean {v['gmean']:.3g}x" for k, v in block.items()))
    return 0


COMMANDS = {"solve": cmd_solve, "stats": cmd_stats, "functional": cmd_functional,
            "simulate": cmd_simulate, "compare": cmd_compare}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", default="out", help="output directory")
    common.add_argument("--format", choices=("csv", "json"), default="json")

    ap = argparse.ArgumentParser(prog="sconna",
                                 description="Stochastic optical CNN accelerator models")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", parents=[common], help="receiver sensitivity and max N")
    p.add_argument("--params", help="optical parameter JSON (overrides the preset)")
    p.add_argument("--preset", default="table-iii")
    p.add_argument("--B", type=int, default=8)
    p.add_argument("--BR", type=float, default=30e9)
    p.add_argument("--pin-ppd", type=float, default=None, help="fix P_pd in dBm")
    p.add_argument("--dr-interpretation", choices=optics.DR_INTERPRETATIONS,
                   default="br_times_2powB")
    p.add_argument("--sweep", action="store_true")
    p.add_argument("--sweep-B", default="4,6,8")
    p.add_argument("--sweep-BR", default="10e9,20e9,30e9,40e9")

    p = sub.add_parser("stats", parents=[common], help="kernel size statistics")
    p.add_argument("networks", nargs="+", help="network JSON or bundled name")
    p.add_argument("--threshold", type=int, default=44)
    p.add_argument("--include-fc", action="store_true")

    p = sub.add_parser("functional", parents=[common], help="VDPE error study")
    p.add_argument("--length", type=int, default=176)
    p.add_argument("--B", type=int, default=8)
    p.add_argument("--trials", type=int, default=10000)
    p.add_argument("--adc", choices=("on", "off"), default="on")
    p.add_argument("--signed", action="store_true")

    p = sub.add_parser("simulate", parents=[common], help="simulate one network")
    p.add_argument("--network", required=True)
    p.add_argument("--accelerator", default="sconna-paper")
    p.add_argument("--no-area-scale", dest="area_scale", action="store_false",
                   help="use the baseline's preset VDPE count")
    p.add_argument("--bit-exact-layer", action="append",
                   help="cross-check this layer through the bit-level datapath")

    p = sub.add_parser("compare", parents=[common], help="compare accelerators")
    p.add_argument("--network", dest="networks", action="append")
    p.add_argument("--accelerator", dest="accelerators", action="append")
    p.add_argument("--no-area-scale", dest="area_scale", action="store_false")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "compare":
        args.networks = args.networks or list(BUNDLED)
        args.accelerators = args.accelerators or ["sconna-paper", "mam-holylight", "amm-deapcnn"]
    inputs = [str(v) for k in ("network", "networks", "params") for v in
              (getattr(args, k, None) if isinstance(getattr(args, k, None), list)
               else [getattr(args, k, None)]) if v]
    presets = [v for k in ("preset", "accelerator", "accelerators") for v in
               (getattr(args, k, None) if isinstance(getattr(args, k, None), list)
                else [getattr(args, k, None)]) if v]
    manifest = RunManifest(args.command, inputs, presets, args.seed, str(args.out))
    w = Writer(args.out, manifest)
    try:
        rc = COMMANDS[args.command](args, w)
    except (CliError, ValueError, KeyError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"error: {msg}", file=sys.stderr)
        return 2
    finally:
        if w.paths:
            w.finish()
    return rc


if __name__ == "__main__":
    sys.exit(main())
