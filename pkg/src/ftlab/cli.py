"""Batch command line: ``ftlab {run,verify-ft,bound,fit,scale,tables}``.

Failures print one JSON line on stderr, ``{"error": kind, "exit": code,
"message": text}``, and exit with the code for that kind (see EXIT_CODES).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Optional, Sequence

EXIT_CODES = {
    "ok": 0,
    "usage": 2,
    "ft_failure": 3,
    "infeasible": 4,
    "invalid_input": 5,
    "io": 6,
    "budget": 7,
    "degenerate_fit": 8,
}

TABLES = ("five_qubit", "steane", "joint", "steane_flag", "joint_flag")


class CliError(Exception):
    def __init__(self, kind: str, message: str):
        super().__init__(message)
        self.kind = kind
        self.code = EXIT_CODES[kind]


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # keep argparse errors on one line
        raise CliError("usage", message)


def _read_json(path: str) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except OSError as e:
        raise CliError("io", f"cannot read {path}: {e.strerror}") from None
    except json.JSONDecodeError as e:
        raise CliError("invalid_input", f"{path} is not valid JSON: {e.msg} at line {e.lineno}") from None


def _emit(text: str, path: Optional[str]) -> None:
    if path is None:
        sys.stdout.write(text)
        return
    try:
        Path(path).write_text(text)
    except OSError as e:
        raise CliError("io", f"cannot write {path}: {e.strerror}") from None


def _dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _csv_list(s: Optional[str]) -> Optional[list[str]]:
    return None if s is None else [x.strip() for x in s.split(",") if x.strip()]


def _floats(s: str) -> list[float]:
    try:
        if ":" in s:
            start, stop, step = (float(v) for v in s.split(":"))
            n = int(round((stop - start) / step)) + 1
            return [round(start + i * step, 12) for i in range(n)]
        return [float(v) for v in s.split(",") if v.strip()]
    except ValueError:
        raise CliError("invalid_input", f"bad number list {s!r}") from None


def _noise(preset_name: Optional[str], noise_file: Optional[str], inline: Optional[dict] = None):
    from ftlab.noise import NoiseError, NoiseModel, preset

    try:
        if noise_file is not None:
            return NoiseModel.from_json(_read_json(noise_file))
        if inline is not None:
            return NoiseModel.from_json(inline)
        if preset_name in (None, "none", "noiseless"):
            return None
        return preset(preset_name)
    except (NoiseError, TypeError) as e:
        raise CliError("invalid_input", str(e)) from None


def _durations(path: Optional[str], inline: Optional[dict] = None):
    from ftlab.noise import DurationModel, NoiseError

    d = _read_json(path) if path is not None else inline
    if d is None:
        return None
    try:
        return DurationModel.from_json(d)
    except (NoiseError, TypeError) as e:
        raise CliError("invalid_input", str(e)) from None


# run -------------------------------------------------------------------------


def cmd_run(a) -> int:
    from ftlab.experiments import LABELS, UnknownExperiment
    from ftlab.runs import BACKENDS, families, rows_to_csv, run_family

    cfg = _read_json(a.config) if a.config else {}
    labels = _csv_list(a.labels) or cfg.get("labels") or list(LABELS)
    shots = a.shots if a.shots is not None else int(cfg.get("shots", 1000))
    seed = a.seed if a.seed is not None else int(cfg.get("seed", 0))
    backend = a.backend or cfg.get("backend", "stabilizer")
    wanted = _csv_list(a.families) or cfg.get("families")
    noise = _noise(a.preset or cfg.get("preset"), a.noise_file, cfg.get("noise"))
    durations = _durations(a.durations_file, cfg.get("durations"))
    if shots <= 0:
        raise CliError("invalid_input", "shot count must be positive")
    if backend not in BACKENDS:
        raise CliError("invalid_input", f"unknown backend {backend!r}")
    rows = []
    try:
        for label in labels:
            for fam in families(label):
                if wanted and fam not in wanted:
                    continue
                rows.append(run_family(label, fam, noise, shots, seed, backend, durations, workers=a.workers))
    except UnknownExperiment as e:
        raise CliError("invalid_input", str(e)) from None
    _emit(rows_to_csv(rows), a.csv or cfg.get("csv"))
    js = a.json or cfg.get("json")
    if js:
        _emit(_dumps([r.to_json() for r in rows]), js)
    return 0


# verify-ft -------------------------------------------------------------------


def cmd_verify_ft(a) -> int:
    from ftlab.experiments import FT_CLAIMED, ExperimentSpec, UnknownExperiment, variants, verify_experiment
    from ftlab.sim.executor import BranchBudgetExceeded

    try:
        ExperimentSpec(a.label)
    except UnknownExperiment as e:
        raise CliError("invalid_input", str(e)) from None
    specs = variants(a.label)
    if a.rows is not None:
        rows = {int(r) for r in _csv_list(a.rows)}
        specs = [s for s in specs if s.row in rows]
    if a.max_branches < 1:
        raise CliError("invalid_input", "--max-branches must be at least 1")
    try:
        rep = verify_experiment(a.label, specs, stop_at_first=a.stop_at_first, max_branches=a.max_branches)
    except BranchBudgetExceeded as e:
        raise CliError("budget", f"{a.label}: fault-free run has {e}") from None
    out = rep.to_json()
    out["ft_claimed"] = a.label in FT_CLAIMED
    _emit(_dumps(out), a.json)
    if out["ft_claimed"] and rep.failures:
        raise CliError("ft_failure", f"{a.label}: {rep.failures} single faults cause logical failure")
    if rep.budget_exceeded:
        raise CliError("budget", f"{a.label}: branch budget exceeded for {rep.budget_exceeded} faults")
    return 0


# bound -------------------------------------------------------------------------


def cmd_bound(a) -> int:
    from ftlab import fidelity as fd

    text_path = a.data
    try:
        text = Path(text_path).read_text()
    except OSError as e:
        raise CliError("io", f"cannot read {text_path}: {e.strerror}") from None
    try:
        data, povm = fd.load_data(text)
        cons = fd.spam_corrected_constraints(povm, data) if povm is not None else fd.constraints_from_data(data)
        b = fd.sdp_bounds(cons)
    except fd.InfeasibleConstraints as e:
        raise CliError("infeasible", str(e)) from None
    except (fd.FidelityError, json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
        raise CliError("invalid_input", f"{type(e).__name__}: {e}") from None
    _emit(b.dumps() + "\n", a.json)
    return 0


# fit ---------------------------------------------------------------------------


def cmd_fit(a) -> int:
    from ftlab.noise import NoiseError, fit_dephasing
    from ftlab.runs import fidelity_simulator

    d = _read_json(a.data)
    if "measured" not in d:
        raise CliError("invalid_input", "fit data needs a 'measured' mapping of 'LABEL:FAMILY' to fidelity")
    base = _noise(d.get("preset", a.preset), None, d.get("noise"))
    if base is None:
        raise CliError("invalid_input", "fitting needs a noise model")
    grid = _floats(a.grid) if a.grid else [float(v) for v in d.get("grid", [])]
    sim = fidelity_simulator(base, a.shots, a.seed, _durations(None, d.get("durations")), a.workers)
    try:
        res = fit_dephasing({k: float(v) for k, v in d["measured"].items()}, sim, grid)
    except NoiseError as e:
        raise CliError("invalid_input", str(e)) from None
    except ValueError as e:
        raise CliError("invalid_input", str(e)) from None
    _emit(_dumps(res.to_json()), a.json)
    if res.degenerate:
        raise CliError("degenerate_fit", "residuals are flat over the grid; nu is not determined")
    return 0


# scale -------------------------------------------------------------------------


def cmd_scale(a) -> int:
    import csv
    import io

    from ftlab.experiments import UnknownExperiment
    from ftlab.noise import NoiseError
    from ftlab.runs import scaling_scan

    labels = _csv_list(a.labels)
    lambdas = sorted(_floats(a.lambdas))
    try:
        rows = scaling_scan(labels, lambdas, a.shots, a.seed, a.family, workers=a.workers)
    except (UnknownExperiment, NoiseError, ValueError) as e:
        raise CliError("invalid_input", str(e)) from None
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["lambda", "label", "basis", "error", "stderr", "shots", "acceptance"])
    for r in rows:
        w.writerow([f"{r.metadata['lambda']:g}", r.label, r.basis, f"{r.error:.6g}", f"{r.stderr:.6g}",
                    r.shots, f"{r.acceptance:.6f}"])
    _emit(buf.getvalue(), a.csv)
    return 0


# tables ------------------------------------------------------------------------


def build_table(name: str):
    from ftlab import color_code, five_qubit
    from ftlab.codes import code_definition
    from ftlab.decoding import build_weight1_table

    if name == "five_qubit":
        code = code_definition("five_qubit")
        return build_weight1_table(code.stabilizers, code.logical_x + code.logical_z)
    if name == "steane":
        return color_code.base_table()
    if name == "joint":
        return five_qubit.joint_base_table()
    if name == "steane_flag":
        return color_code.flag_tables()[0]
    if name == "joint_flag":
        return five_qubit.joint_flag_tables()[0]
    raise CliError("invalid_input", f"unknown table {name!r}; choose from {', '.join(TABLES)}")


def cmd_tables(a) -> int:
    t = build_table(a.name)
    _emit(_dumps(t.to_json()), a.json)
    return 0


# entry point -------------------------------------------------------------------


def make_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="ftlab", description="Logical CNOT experiments on the [[5,1,3]] and [[7,1,3]] codes.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    r = sub.add_parser("run", help="simulate experiments and write a fidelity table")
    r.add_argument("--config", help="JSON run configuration")
    r.add_argument("--labels", help="comma-separated experiment labels (default: all)")
    r.add_argument("--preset", help="H1-1, H1-2 or none")
    r.add_argument("--noise-file", help="NoiseModel JSON")
    r.add_argument("--durations-file", help="DurationModel JSON")
    r.add_argument("--shots", type=int, help="shots per input state")
    r.add_argument("--seed", type=int)
    r.add_argument("--backend", choices=("stabilizer", "statevector"))
    r.add_argument("--families", help="subset of X,Z,Bell")
    r.add_argument("--csv", help="CSV output path (default stdout)")
    r.add_argument("--json", help="JSON output path")
    r.add_argument("--workers", type=int, default=None)
    r.set_defaults(func=cmd_run)

    v = sub.add_parser("verify-ft", help="exhaustive single-fault sweep of one experiment")
    v.add_argument("label")
    v.add_argument("--rows", help="comma-separated input rows to sweep (default: all)")
    v.add_argument("--stop-at-first", action="store_true")
    v.add_argument("--max-branches", type=int, default=1 << 12)
    v.add_argument("--json", help="report path (default stdout)")
    v.set_defaults(func=cmd_verify_ft)

    b = sub.add_parser("bound", help="average-fidelity bounds from state fidelities")
    b.add_argument("data", help="JSON with 'states' or 'per_basis', optional 'povm'")
    b.add_argument("--json", help="output path (default stdout)")
    b.set_defaults(func=cmd_bound)

    f = sub.add_parser("fit", help="fit the dephasing rate on a grid")
    f.add_argument("data", help="JSON with 'measured' and optionally 'preset', 'grid'")
    f.add_argument("--grid", help="start:stop:step or comma list of rates in Hz")
    f.add_argument("--preset", default="H1-2")
    f.add_argument("--shots", type=int, default=500)
    f.add_argument("--seed", type=int, default=0)
    f.add_argument("--workers", type=int, default=None)
    f.add_argument("--json", help="output path (default stdout)")
    f.set_defaults(func=cmd_fit)

    s = sub.add_parser("scale", help="logical error against a common scale factor")
    s.add_argument("--lambdas", required=True, help="comma list or start:stop:step")
    s.add_argument("--labels", default="CNOT1f,CNOT2f,CNOT3f,CNOT1c,CNOT2c,CNOT3c")
    s.add_argument("--family", default="Bell", choices=("X", "Z", "Bell"))
    s.add_argument("--shots", type=int, default=500)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--workers", type=int, default=None)
    s.add_argument("--csv", help="output path (default stdout)")
    s.set_defaults(func=cmd_scale)

    t = sub.add_parser("tables", help="decoder lookup tables as JSON")
    t.add_argument("name", choices=TABLES)
    t.add_argument("--json", help="output path (default stdout)")
    t.set_defaults(func=cmd_tables)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        a = make_parser().parse_args(argv)
        return a.func(a)
    except CliError as e:
        line = json.dumps({"error": e.kind, "exit": e.code, "message": str(e).replace("\n", " ")})
        print(line, file=sys.stderr)
        return e.code


if __name__ == "__main__":
    sys.exit(main())
