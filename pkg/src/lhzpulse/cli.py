"""``lhzpulse`` command line: compile, anneal, sweep, cost, encode, decode.

Exit codes: 0 ok, 1 validation error, 2 runtime error, 3 verification failure.
"""

from __future__ import annotations

import argparse
import math
import re
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import annealing as an
from . import cost_model as cm
from . import lhz_mapping as lm
from . import sequence_compiler as sc
from .pauli_algebra import CapacityError, to_text

EXIT_OK, EXIT_VALIDATION, EXIT_RUNTIME, EXIT_VERIFY = 0, 1, 2, 3


class ConfigError(ValueError):
    pass


class VerificationFailure(RuntimeError):
    pass


# --- value parsing ---------------------------------------------------------------

_PI_RE = re.compile(r"^\s*([-+]?[0-9.]*)\s*\*?\s*pi\s*(?:/\s*([0-9.]+))?\s*$")


def parse_angle(text) -> float:
    """Float, or a multiple of pi such as ``pi/2``, ``11pi/2`` or ``3*pi/4``."""
    if isinstance(text, (int, float)):
        return float(text)
    m = _PI_RE.match(str(text))
    if m:
        num = m.group(1)
        k = 1.0 if num in ("", "+") else -1.0 if num == "-" else float(num)
        den = float(m.group(2)) if m.group(2) else 1.0
        return k * math.pi / den
    try:
        return float(text)
    except ValueError:
        raise ConfigError(f"cannot parse angle {text!r}") from None


def _int_list(text: str) -> list[int]:
    return [int(x) for x in str(text).split(",") if x.strip()]


def _str_list(text: str) -> list[str]:
    return [x.strip() for x in str(text).split(",") if x.strip()]


def _bits(text: str) -> list[int]:
    s = str(text).replace(",", "").replace(" ", "")
    if not s or set(s) - {"0", "1"}:
        raise ConfigError(f"expected a 0/1 bitstring, got {text!r}")
    return [int(c) for c in s]


def _spins(text: str) -> list[int]:
    out = []
    for tok in str(text).replace(" ", "").split(","):
        if tok in ("+1", "1", "+"):
            out.append(1)
        elif tok in ("-1", "-"):
            out.append(-1)
        else:
            raise ConfigError(f"spins must be comma-separated +1/-1, got {tok!r}")
    return out


# --- config files ------------------------------------------------------------------

# key -> converter; keys double as argparse dests
CONVERTERS = {
    "seed": int,
    "seeds": _int_list,
    "n_logical": int,
    "problem": str,
    "schedule": str,
    "schedules": _str_list,
    "N": int,
    "Ns": _int_list,
    "NS": int,
    "jtaum": parse_angle,
    "tau_sq": parse_angle,
    "backend": str,
    "scheme": str,
    "sign": int,
    "workers": int,
    "nb": int,
    "kind": str,
    "out": str,
    "J": str,
    "tau_rot": float,
    "convention": str,
    "rotation_phase": parse_angle,
    "three_body": lambda s: str(s).lower() in ("1", "true", "yes"),
    "spins": str,
    "bits": str,
}


def read_config(path: str | Path) -> dict:
    """Line-oriented ``key = value``; ``#`` starts a comment."""
    cfg = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in CONVERTERS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        try:
            cfg[key] = CONVERTERS[key](value)
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"{path}:{lineno}: bad value for {key}: {exc}") from None
    return cfg


DEFAULTS = {
    "seed": 0,
    "seeds": [0, 1, 2, 3, 4],
    "n_logical": 4,
    "problem": None,
    "schedule": "II",
    "schedules": ["I", "II", "III"],
    "N": 100_000,
    "Ns": [100_000],
    "NS": 50,
    "jtaum": math.pi / 2,
    "tau_sq": math.pi / 200,
    "backend": "exact_split",
    "scheme": "lumped",
    "sign": 1,
    "workers": 1,
    "nb": 3,
    "kind": "four",
    "out": "out",
    "J": "100ueV",
    "tau_rot": 0.0,
    "convention": "h",
    "rotation_phase": 0.0,
    "three_body": False,
    "spins": None,
    "bits": None,
}


# the cost report describes the 100 ueV hardware scenario, whose kick phase is 11pi/2
COMMAND_DEFAULTS = {"cost": {"jtaum": 11 * math.pi / 2}}


def effective_config(args: argparse.Namespace, keys: list[str]) -> dict:
    """defaults < config file < command-line flags."""
    merged = {k: COMMAND_DEFAULTS.get(args.cmd, {}).get(k, DEFAULTS[k]) for k in keys}
    if getattr(args, "config", None):
        from_file = read_config(args.config)
        stray = set(from_file) - set(keys)
        if stray:
            raise ConfigError(f"keys not used by {args.cmd}: {sorted(stray)}")
        merged.update(from_file)
    for k in keys:
        v = getattr(args, k, None)
        if v is not None:
            merged[k] = v
    return merged


# --- argument parser ----------------------------------------------------------------


def _add(p: argparse.ArgumentParser, *names, key: str, help: str = "", **kw):
    p.add_argument(*names, dest=key, type=CONVERTERS[key], default=None, help=help, **kw)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lhzpulse", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="cmd", required=True)

    def command(name, help):
        p = sub.add_parser(name, help=help)
        p.add_argument("--config", help="key=value file; flags override it")
        return p

    p = command("compile", "build and verify a pulse sequence")
    _add(p, "--kind", key="kind", help="four | three | single")
    _add(p, "--nb", key="nb", help="number of blocks (>= 1)")
    _add(p, "--out", key="out", help="output directory")

    def instance_flags(p):
        _add(p, "--n-logical", key="n_logical")
        _add(p, "--problem", key="problem", help="problem file (overrides --seed instance)")

    def run_flags(p):
        _add(p, "--NS", key="NS")
        _add(p, "--jtaum", key="jtaum", help="kick phase J*tau_M, e.g. pi/2")
        _add(p, "--tau-sq", key="tau_sq")
        _add(p, "--backend", key="backend", help="exact_split | chebyshev")
        _add(p, "--scheme", key="scheme", help="lumped | per_step")
        _add(p, "--sign", key="sign", help="+1 rewards even plaquette parity")
        _add(p, "--out", key="out")

    p = command("anneal", "run one annealing trajectory")
    _add(p, "--seed", key="seed")
    _add(p, "--schedule", key="schedule", help="I | II | III")
    _add(p, "--N", key="N")
    instance_flags(p)
    run_flags(p)

    p = command("sweep", "seeds x schedules x N grid in parallel")
    _add(p, "--seeds", key="seeds", help="comma list")
    _add(p, "--schedules", key="schedules", help="comma list")
    _add(p, "--Ns", key="Ns", help="comma list of N values")
    _add(p, "--workers", key="workers")
    _add(p, "--n-logical", key="n_logical")
    run_flags(p)

    p = command("cost", "pulse-count and wall-clock report")
    _add(p, "--J", key="J", help="coupling, e.g. 100ueV or 10.34meV")
    _add(p, "--convention", key="convention", help="h | hbar")
    _add(p, "--tau-rot", key="tau_rot")
    _add(p, "--N", key="N")
    _add(p, "--NS", key="NS")
    _add(p, "--jtaum", key="jtaum")
    _add(p, "--tau-sq", key="tau_sq")
    _add(p, "--rotation-phase", key="rotation_phase")
    _add(p, "--nb", key="nb")
    _add(p, "--out", key="out", help="CSV file or directory")

    p = command("encode", "logical spins -> physical bits, and the encoded Hamiltonian")
    _add(p, "--seed", key="seed")
    instance_flags(p)
    _add(p, "--spins", key="spins", help="comma list of +1/-1")
    p.add_argument("--three-body", dest="three_body", action="store_const", const=True, default=None)
    _add(p, "--out", key="out")

    p = command("decode", "physical bits -> logical spins")
    _add(p, "--n-logical", key="n_logical")
    _add(p, "--bits", key="bits", help="physical bitstring")
    p.add_argument("--three-body", dest="three_body", action="store_const", const=True, default=None)
    return parser


KEYS = {
    "compile": ["kind", "nb", "out"],
    "anneal": ["seed", "schedule", "N", "n_logical", "problem", "NS", "jtaum", "tau_sq", "backend", "scheme", "sign", "out"],
    "sweep": ["seeds", "schedules", "Ns", "workers", "n_logical", "NS", "jtaum", "tau_sq", "backend", "scheme", "sign", "out"],
    "cost": ["J", "convention", "tau_rot", "N", "NS", "jtaum", "tau_sq", "rotation_phase", "nb", "out"],
    "encode": ["seed", "n_logical", "problem", "spins", "three_body", "out"],
    "decode": ["n_logical", "bits", "three_body"],
}


# --- commands ------------------------------------------------------------------------


def cmd_compile(c: dict) -> int:
    kind, nb = c["kind"], c["nb"]
    t0 = time.perf_counter()
    if kind == "single":
        seq = sc.single_plaquette_sequence()
        h_ini, h_tgt = sc.single_plaquette_hamiltonians()
        report = sc.verify(seq, h_ini, h_tgt)
        stem = "single"
    elif kind in ("four", "three"):
        if nb < 1:
            raise ConfigError(f"--nb must be >= 1 for kind {kind}, got {nb}")
        seq, report = (sc.compile_four_body if kind == "four" else sc.compile_three_body)(nb)
        stem = f"{kind}_nb{nb}"
    else:
        raise ConfigError(f"--kind must be four, three or single, got {kind!r}")
    elapsed = time.perf_counter() - t0
    out = Path(c["out"])
    out.mkdir(parents=True, exist_ok=True)
    (out / f"sequence_{stem}.txt").write_text(sc.sequence_to_text(seq))
    (out / f"report_{stem}.txt").write_text(report.render())
    n_rot, n_j = report.duration
    print(f"kind={kind} steps={report.step_count} qubits={seq.nqubits} result={report.final.value}")
    print(f"duration={n_rot}tau_rot+{n_j}tau_J compile_seconds={elapsed:.3f}")
    for lab, v in zip(report.step_labels, report.verified):
        print(f"  {lab}: {'unchecked' if v is None else v.value}")
    if not report.ok:
        for t in report.extra_terms:
            print(f"extra {t}", file=sys.stderr)
        for t in report.missing_terms:
            print(f"missing {t}", file=sys.stderr)
        raise VerificationFailure(f"compiled Hamiltonian does not match target ({report.final.value})")
    return EXIT_OK


def _instance(c: dict, seed: int) -> lm.LogicalProblem:
    if c.get("problem"):
        return lm.read_problem(c["problem"])
    return lm.random_problem(c["n_logical"], seed)


def _run_config(c: dict, seed: int, schedule: str, N: int) -> an.RunConfig:
    return an.RunConfig(
        N=N,
        N_S=c["NS"],
        tau_sq=c["tau_sq"],
        J_tau_M=c["jtaum"],
        seed=seed,
        schedule=schedule,
        backend=c["backend"],
        scheme=c["scheme"],
        constraint_sign=c["sign"],
    )


def _run_and_write(c: dict, seed: int, schedule: str, N: int) -> dict:
    cfg = _run_config(c, seed, schedule, N)
    problem = _instance(c, seed)
    layout, ham = lm.encode(problem)
    traj = an.run_lumped(cfg, ham, problem, layout)
    out = Path(c["out"])
    out.mkdir(parents=True, exist_ok=True)
    stem = f"traj_{schedule}_seed{seed}_N{N}_NS{cfg.N_S}"
    (out / f"{stem}.csv").write_text(an.trajectory_csv(traj))
    extra = {f"effective.{k}": v for k, v in sorted(c.items())}
    (out / f"{stem}.meta.txt").write_text(an.metadata_text(traj, extra))
    (out / f"problem_seed{seed}.txt").write_text(lm.problem_to_text(problem))
    return {"file": f"{stem}.csv", "seed": seed, "schedule": schedule, "N": N, "N_S": cfg.N_S, "final_success": traj.final_success}


def cmd_anneal(c: dict) -> int:
    an.RunConfig(N=c["N"], N_S=c["NS"], schedule=c["schedule"], backend=c["backend"], scheme=c["scheme"], constraint_sign=c["sign"])
    row = _run_and_write(c, c["seed"], c["schedule"], c["N"])
    print(f"wrote {Path(c['out']) / row['file']}")
    print(f"final_success_prob={row['final_success']!r}")
    return EXIT_OK


PLOT_SCRIPT = '''"""Overlay success-probability trajectories written by `lhzpulse sweep`."""
import csv
import sys
from pathlib import Path

import matplotlib.pyplot as plt

here = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).parent
fig, ax = plt.subplots(figsize=(6, 4))
for path in sorted(here.glob("traj_*.csv")):
    with open(path) as fh:
        next(fh)  # schema line
        rows = list(csv.DictReader(fh))
    ax.plot([float(r["t"]) for r in rows], [float(r["success_prob"]) for r in rows], label=path.stem[5:])
ax.set_xlabel("t")
ax.set_ylabel("success probability")
ax.set_ylim(0, 1.02)
ax.legend(fontsize=7)
fig.tight_layout()
fig.savefig(here / "trajectories.png", dpi=150)
'''

SUMMARY_SCHEMA = "lhzpulse.sweep/1"


def cmd_sweep(c: dict) -> int:
    for s in c["schedules"]:
        an.ScheduleSpec(s)
    jobs = [(seed, s, N) for seed in c["seeds"] for s in c["schedules"] for N in c["Ns"]]
    for _, s, N in jobs:
        _run_config(c, 0, s, N)
    if c["workers"] < 1:
        raise ConfigError("--workers must be >= 1")
    if c["workers"] == 1:
        rows = [_run_and_write(c, *j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=c["workers"]) as pool:
            futures = [pool.submit(_run_and_write, c, *j) for j in jobs]
            rows = [f.result() for f in futures]
    out = Path(c["out"])
    lines = [f"# schema={SUMMARY_SCHEMA}", "seed,schedule,N,N_S,final_success,file"]
    lines += [f"{r['seed']},{r['schedule']},{r['N']},{r['N_S']},{r['final_success']!r},{r['file']}" for r in rows]
    (out / "summary.csv").write_text("\n".join(lines) + "\n")
    (out / "plot_trajectories.py").write_text(PLOT_SCRIPT)
    for r in rows:
        print(f"seed={r['seed']} schedule={r['schedule']} N={r['N']} final_success={r['final_success']:.6f}")
    return EXIT_OK


def cmd_cost(c: dict) -> int:
    p = cm.PhysicalParams(
        J=cm.parse_energy(c["J"]),
        tau_rot=c["tau_rot"],
        planck_convention=c["convention"],
        N=c["N"],
        N_S=c["NS"],
        tau_sq=c["tau_sq"],
        J_tau_M=c["jtaum"],
        rotation_phase=c["rotation_phase"],
        nb=c["nb"],
    )
    report = cm.cost_report(p)
    sys.stdout.write(cm.report_text(report))
    path = Path(c["out"])
    if path.suffix != ".csv":
        path = path / "cost_report.csv"
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(cm.report_csv(report))
    return EXIT_OK


def _layout_for(n_logical: int, three_body: bool) -> lm.LhzLayout:
    layout = lm.lhz_layout(n_logical)
    return lm.three_body_replace(layout) if three_body else layout


def cmd_encode(c: dict) -> int:
    problem = _instance(c, c["seed"])
    layout, ham = lm.encode(problem)
    if c["three_body"]:
        layout = lm.three_body_replace(layout)
    out = Path(c["out"])
    out.mkdir(parents=True, exist_ok=True)
    (out / "problem.txt").write_text(lm.problem_to_text(problem))
    (out / "encoded_hamiltonian.txt").write_text(to_text(ham.final_hamiltonian()))
    print(f"n_logical={problem.n_logical} n_physical={layout.n_physical} plaquettes={len(layout.plaquettes)}")
    print("qubits " + " ".join(layout.labels))
    if c["spins"] is not None:
        spins = _spins(c["spins"])
        if len(spins) != problem.n_logical:
            raise ConfigError(f"expected {problem.n_logical} spins, got {len(spins)}")
        if problem.fields is not None:
            spins = spins + [1]
        bits = lm.encode_spins(spins, layout)
        print("bits " + "".join(map(str, bits)))
    return EXIT_OK


def cmd_decode(c: dict) -> int:
    if c["bits"] is None:
        raise ConfigError("--bits is required")
    layout = _layout_for(c["n_logical"], c["three_body"])
    res = lm.decode(_bits(c["bits"]), layout)
    if not res.ok:
        print(f"violated checks: {list(res.violated)}", file=sys.stderr)
        raise VerificationFailure("bitstring violates parity constraints")
    print("spins " + ",".join(f"{s:+d}" for s in res.spins))
    return EXIT_OK


COMMANDS = {
    "compile": cmd_compile,
    "anneal": cmd_anneal,
    "sweep": cmd_sweep,
    "cost": cmd_cost,
    "encode": cmd_encode,
    "decode": cmd_decode,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_VALIDATION
    try:
        conf = effective_config(args, KEYS[args.cmd])
        return COMMANDS[args.cmd](conf)
    except VerificationFailure as exc:
        print(f"verification failed: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    except CapacityError as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except (ConfigError, ValueError, TypeError) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (OSError, RuntimeError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
