"""
Command-line front end.

    invforge synth    --name qpe --n-qubits 5 --out qpe.json
    invforge compile  --circuit qpe.json --hidden-inverse=true --out qpe.hi.json
    invforge pulses   --circuit qpe.hi.json --out qpe.sched.json
    invforge simulate --circuit qpe.hi.json --noise default --seed 3
    invforge bench    --suite paper --noise default --draws 10 --seed 1 --out bench.csv

Every command that writes ``--out FILE`` also writes ``FILE.manifest.json``;
``invforge --manifest FILE.manifest.json [--replay-out OTHER]`` replays it.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

from . import __version__
from .circuit import BASIS, Circuit, GateKind
from .decompose import PassConfig, run_pipeline
from .errors import SimulationBoundError, ValidationError
from .noisesim import (CoherentNoiseModel, Report, distribution, fidelity, run_experiment, sample,
                       simulate, simulate_ideal)
from .pulse import (CAL_ENV, circuit_to_schedule, default_calibration_path, load_calibration,
                    schedules_from_json, schedules_to_json)
from .synth import BenchmarkSpec, build_circuit, evaluation_suite

EXIT_OK, EXIT_VALIDATION, EXIT_BOUND, EXIT_IO = 0, 2, 3, 4
CSV_COLUMNS = ("name", "n_qubits", "F_std", "F_hi", "improvement", "seeds")


class Usage(ValidationError):
    pass


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected true or false, got {text!r}")


def _read(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    return Path(path).read_text()


def _load_json(path: str, what: str):
    try:
        return json.loads(_read(path))
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{what} {path} is not valid JSON: {exc}") from exc


def _load_circuit(path: str) -> Circuit:
    return Circuit.from_dict(_load_json(path, "circuit"))


def _cal_path(arg: str | None) -> str:
    return str(arg or os.environ.get(CAL_ENV) or default_calibration_path())


def _noise(arg: str, seed: int | None) -> CoherentNoiseModel:
    if arg == "zero":
        nm = CoherentNoiseModel.zero()
    elif arg == "default":
        nm = CoherentNoiseModel.default(seed or 0)
    else:
        nm = CoherentNoiseModel.from_dict(_load_json(arg, "noise model"))
    return nm if seed is None else nm.reseeded(seed)


def _json(obj) -> str:
    return json.dumps(obj, indent=1, sort_keys=True) + "\n"


# Subcommands --------------------------------------------------------------
# Each returns (text to emit, resolved configuration for the manifest).

def cmd_synth(a) -> tuple[str, dict]:
    if a.spec:
        spec = BenchmarkSpec.from_json(_read(a.spec))
    else:
        if not a.name or a.n_qubits is None:
            raise Usage("synth needs --spec FILE or --name with --n-qubits")
        params = {}
        for item in a.param or []:
            key, sep, value = item.partition("=")
            if not sep:
                raise Usage(f"--param expects key=value, got {item!r}")
            try:
                params[key] = json.loads(value)
            except json.JSONDecodeError:
                params[key] = value
        spec = BenchmarkSpec(a.name, a.n_qubits, params, a.trotter_steps)
    if a.seed is not None and spec.name == "crz-folding":
        spec = replace(spec, params={**spec.params, "seed": a.seed})
    return build_circuit(spec).to_json(indent=1) + "\n", {"benchmark": spec.to_dict()}


def cmd_compile(a) -> tuple[str, dict]:
    cfg = PassConfig(a.hidden_inverse, a.peephole, a.window)
    out = run_pipeline(_load_circuit(a.circuit), cfg)
    return out.to_json(indent=1) + "\n", {"pass_config": vars(cfg)}


def cmd_pulses(a) -> tuple[str, dict]:
    cal_path = _cal_path(a.cal)
    c = _load_circuit(a.circuit)
    text = schedules_to_json(circuit_to_schedule(c, load_calibration(cal_path)), c.n_qubits, indent=1)
    return text + "\n", {"calibration": cal_path}


def cmd_simulate(a) -> tuple[str, dict]:
    if bool(a.circuit) == bool(a.schedules):
        raise Usage("simulate needs exactly one of --circuit or --schedules")
    cal_path = _cal_path(a.cal)
    cal = load_calibration(cal_path)
    nm = _noise(a.noise, a.seed)
    if a.circuit:
        c = _load_circuit(a.circuit)
        ideal = distribution(simulate_ideal(c))
        extra = sorted({g.kind.value for g in c.gates} - {k.value for k in BASIS} - {GateKind.BARRIER.value})
        if extra:
            raise ValidationError(f"circuit has non-basis gates {extra}; run `compile` first")
        program, n = c, c.n_qubits
    else:
        n, program = schedules_from_json(_read(a.schedules))
        ideal = distribution(simulate(program, None, n_qubits=n))
    sv = simulate(program, nm, n_qubits=n, calibration=cal)
    noisy = sample(sv, a.shots, a.seed or 0) if a.shots else distribution(sv)
    result = {"n_qubits": n, "fidelity": fidelity(ideal, noisy), "distribution": noisy, "ideal": ideal}
    if a.format == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["outcome", "ideal", "noisy"])
        for k in sorted(ideal.keys() | noisy.keys()):
            w.writerow([k, repr(ideal.get(k, 0.0)), repr(noisy.get(k, 0.0))])
        text = buf.getvalue()
    else:
        text = _json(result)
    return text, {"calibration": cal_path, "noise_model": nm.to_dict(), "seed": a.seed, "shots": a.shots}


def _bench_one(job) -> Report:
    spec, nm, cfg, cal_path, draws, seed = job
    return run_experiment(spec, nm, cfg, load_calibration(cal_path), draws, seed)


def reports_to_csv(reports) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in reports:
        row = r.row()
        w.writerow([row["name"], row["n_qubits"], repr(row["F_std"]), repr(row["F_hi"]),
                    repr(row["improvement"]), row["seeds"]])
    return buf.getvalue()


def cmd_bench(a) -> tuple[str, dict]:
    if a.seed is None:
        raise Usage("bench requires --seed (suite runs never draw wall-clock entropy)")
    if a.spec:
        specs = [BenchmarkSpec.from_json(_read(p)) for p in a.spec]
    elif a.suite == "paper":
        specs = evaluation_suite()
    else:
        raise Usage(f"unknown suite {a.suite!r}")
    cal_path = _cal_path(a.cal)
    load_calibration(cal_path)  # fail fast on a bad calibration
    nm = _noise(a.noise, a.seed)
    cfg = PassConfig(peephole=a.peephole, max_peephole_window=a.window)
    jobs = [(s, nm, cfg, cal_path, a.draws, a.seed) for s in specs]
    if a.jobs > 1:
        with ProcessPoolExecutor(a.jobs) as pool:
            reports = list(pool.map(_bench_one, jobs))
    else:
        reports = [_bench_one(j) for j in jobs]
    if a.format == "json":
        text = _json({"rows": [r.row() for r in reports]})
    else:
        text = reports_to_csv(reports)
    if a.emit_gnuplot:
        write_gnuplot(a.emit_gnuplot, reports)
    config = {"benchmarks": [s.to_dict() for s in specs], "noise_model": nm.to_dict(),
              "pass_config": vars(cfg), "calibration": cal_path, "draws": a.draws, "seed": a.seed}
    return text, config


def write_gnuplot(prefix: str, reports) -> tuple[Path, Path]:
    """Write PREFIX.dat and PREFIX.gp: clustered bars of F_std and F_hi per benchmark."""
    dat, gp = Path(prefix + ".dat"), Path(prefix + ".gp")
    lines = ["# index name F_std F_hi improvement"]
    lines += [f"{i} {r.name} {r.f_std!r} {r.f_hi!r} {r.improvement!r}" for i, r in enumerate(reports)]
    dat.write_text("\n".join(lines) + "\n")
    gp.write_text(
        "set terminal pngcairo size 1200,500\n"
        f"set output '{Path(prefix).name}.png'\n"
        "set style data histograms\nset style histogram clustered gap 1\n"
        "set style fill solid 0.8 border -1\nset ylabel 'fidelity'\nset yrange [0:1.05]\n"
        "set xtics rotate by -45\nset key top left\n"
        f"plot '{dat.name}' using 3:xtic(2) title 'standard', '' using 4 title 'hidden inverse'\n")
    return dat, gp


COMMANDS = {"synth": cmd_synth, "compile": cmd_compile, "pulses": cmd_pulses,
            "simulate": cmd_simulate, "bench": cmd_bench}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="invforge", description=__doc__.split("\n\n")[0].strip())
    p.add_argument("--version", action="version", version=f"invforge {__version__}")
    p.add_argument("--manifest", help="replay a run manifest")
    p.add_argument("--replay-out", metavar="FILE", help="with --manifest: write here instead")
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--seed", type=int)
    shared.add_argument("--out", help="output file (default: stdout)")
    shared.add_argument("--format", choices=("json", "csv"), default=None)
    sub = p.add_subparsers(dest="command")

    s = sub.add_parser("synth", parents=[shared], help="generate a benchmark circuit")
    s.add_argument("--spec", help="BenchmarkSpec JSON file")
    s.add_argument("--name")
    s.add_argument("--n-qubits", type=int)
    s.add_argument("--trotter-steps", type=int, default=1)
    s.add_argument("--param", action="append", metavar="KEY=JSON")

    c = sub.add_parser("compile", parents=[shared], help="lower to the basis and mark hidden inverses")
    c.add_argument("--circuit", required=True)
    c.add_argument("--hidden-inverse", type=_bool, default=True)
    c.add_argument("--peephole", type=_bool, default=True)
    c.add_argument("--window", type=int, default=PassConfig.max_peephole_window)

    u = sub.add_parser("pulses", parents=[shared], help="lower a basis circuit to pulse schedules")
    u.add_argument("--circuit", required=True)
    u.add_argument("--cal")

    m = sub.add_parser("simulate", parents=[shared], help="noisy simulation and fidelity")
    m.add_argument("--circuit")
    m.add_argument("--schedules")
    m.add_argument("--noise", default="default", help="zero, default, or a noise-model JSON file")
    m.add_argument("--cal")
    m.add_argument("--shots", type=int, default=0, help="0 keeps the exact distribution")

    b = sub.add_parser("bench", parents=[shared], help="standard vs hidden-inverse comparison table")
    b.add_argument("--suite", default="paper")
    b.add_argument("--spec", action="append", help="BenchmarkSpec JSON file (repeatable)")
    b.add_argument("--noise", default="default")
    b.add_argument("--cal")
    b.add_argument("--draws", type=int, default=10)
    b.add_argument("--peephole", type=_bool, default=True)
    b.add_argument("--window", type=int, default=PassConfig.max_peephole_window)
    b.add_argument("--jobs", type=int, default=1)
    b.add_argument("--emit-gnuplot", metavar="PREFIX")
    return p


def _manifest(command: str, args: dict, config: dict, out: str | None, seconds: float) -> dict:
    return {"tool": "invforge", "version": __version__, "subcommand": command, "args": args,
            "config": config, "outputs": [out] if out else [], "wall_clock_seconds": seconds}


def _replay(path: str, out: str | None) -> argparse.Namespace:
    m = _load_json(path, "manifest")
    try:
        ns = argparse.Namespace(**m["args"])
        ns.command = m["subcommand"]
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"malformed manifest {path}: {exc}") from exc
    if out:
        ns.out = out
    ns.manifest = None
    return ns


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    stage, manifest_path = args.command or "invforge", None
    try:
        if args.manifest:
            manifest_path = args.manifest
            args = _replay(args.manifest, args.replay_out)
            stage = args.command
        if args.command not in COMMANDS:
            parser.print_usage(sys.stderr)
            return EXIT_VALIDATION
        if args.format is None:
            args.format = "csv" if args.command == "bench" else "json"
        start = time.perf_counter()
        text, config = COMMANDS[args.command](args)
        elapsed = time.perf_counter() - start
        if args.out:
            Path(args.out).write_text(text)
            manifest_path = args.out + ".manifest.json"
            resolved = {k: v for k, v in vars(args).items() if k not in ("command", "manifest", "replay_out")}
            Path(manifest_path).write_text(_json(_manifest(args.command, resolved, config, args.out, elapsed)))
        else:
            sys.stdout.write(text)
    except SimulationBoundError as exc:
        return _fail(stage, exc, manifest_path, EXIT_BOUND)
    except ValidationError as exc:
        return _fail(stage, exc, manifest_path, EXIT_VALIDATION)
    except OSError as exc:
        return _fail(stage, exc, manifest_path, EXIT_IO)
    return EXIT_OK


def _fail(stage: str, exc: Exception, manifest_path: str | None, code: int) -> int:
    where = f" (manifest: {manifest_path})" if manifest_path else ""
    print(f"invforge {stage}: error: {exc}{where}", file=sys.stderr)
    return code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
