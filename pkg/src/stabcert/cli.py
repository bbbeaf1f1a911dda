"""``stabcert`` command line: plan, simulate, estimate, certify, oracle-check, report.

Exit codes: 0 success, 2 input or validation error, 3 verification mismatch.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .certification import (
    CertificationReport,
    Method,
    certify,
    f_min,
    reports_from_json,
    reports_to_json,
)
from .circuits import (
    CircuitError,
    NoiseModel,
    apply_circuit,
    apply_noise,
    builtin_circuit,
    correct_readout,
    counts_from_json,
    counts_to_json,
    load_circuit,
    load_confusion,
    sample_shots,
)
from .estimation import (
    CoverageError,
    estimate_all,
    estimates_from_json,
    estimates_to_json,
    plan_settings,
    settings_to_json,
)
from .oracle import OracleMismatchError, lp_min_fidelity, oracle_sweep
from .stabilizer import GeneratorError, ghz_generators, load_generators

EXIT_OK, EXIT_INPUT, EXIT_MISMATCH = 0, 2, 3
ORACLE_TOL = 1e-7


class UsageError(Exception):
    pass


def _write(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def parse_noise(specs: list[str] | None) -> NoiseModel:
    """``depol:P``, ``readout-eta:ETA`` and ``confusion:PATH``, each at most once."""
    kw: dict = {}
    for spec in specs or []:
        key, sep, value = spec.partition(":")
        if not sep or not value:
            raise UsageError(f"bad noise spec {spec!r}; expected KIND:VALUE")
        try:
            if key == "depol":
                kw["depolarizing_p"] = float(value)
            elif key == "readout-eta":
                kw["readout_bias_eta"] = float(value)
            elif key == "confusion":
                kw["confusion"] = tuple(load_confusion(value))
            else:
                raise UsageError(f"unknown noise kind {key!r}")
        except ValueError as exc:
            raise UsageError(f"bad noise spec {spec!r}: {exc}") from exc
    try:
        return NoiseModel(**kw)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _deltas(text: str) -> list[float]:
    try:
        values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"bad --delta list {text!r}") from None
    if not values or any(not 0 < d < 1 for d in values):
        raise UsageError("--delta values must lie in (0, 1)")
    return values


def _require(args, *names):
    missing = [f"--{n.replace('_', '-')}" for n in names if getattr(args, n) is None]
    if missing:
        raise UsageError(f"{args.command} needs {', '.join(missing)}")


# ---------------------------------------------------------------------------
# plan


def settings_table(g, settings) -> str:
    lines = [f"{'setting':<8} {'bases':<{max(5, g.n)}}  covers"]
    for s in settings:
        cov = ", ".join(f"{l}:{g.generators[l]}" for l in s.covered)
        lines.append(f"{s.id:<8} {s.bases:<{max(5, g.n)}}  {cov}")
    return "\n".join(lines) + "\n"


def cmd_plan(args) -> int:
    _require(args, "generators")
    g = load_generators(args.generators)
    settings = plan_settings(g)
    if args.out:
        _write(settings_to_json(g, settings), args.out)
    if args.format == "json" and not args.out:
        _write(settings_to_json(g, settings), None)
    else:
        sys.stdout.write(settings_table(g, settings))
    return EXIT_OK


# ---------------------------------------------------------------------------
# simulate


def _circuit(name: str):
    path = Path(name)
    if path.suffix == ".json" or path.exists():
        return load_circuit(path)
    return builtin_circuit(name)


def cmd_simulate(args) -> int:
    _require(args, "circuit")
    if args.shots is None or args.shots < 1:
        raise UsageError("--shots must be a positive integer")
    circuit = _circuit(args.circuit)
    if args.generators:
        g = load_generators(args.generators)
    elif args.circuit.startswith("ghz-"):
        g = ghz_generators(circuit.n)
    else:
        raise UsageError("simulate needs --generators for a circuit file")
    if g.n != circuit.n:
        raise UsageError(f"circuit has {circuit.n} qubits, generators {g.n}")
    noise = parse_noise(args.noise)
    state = apply_circuit(circuit)
    if noise.depolarizing_p > 0:
        state = apply_noise(state, noise)
    tables = [sample_shots(state, s, args.shots, args.seed, noise) for s in plan_settings(g)]
    meta = {
        "circuit": args.circuit,
        "generators": g.labels(),
        "noise": sorted(args.noise or []),
        "seed": args.seed,
        "shots": args.shots,
    }
    _write(counts_to_json(tables, circuit.n, meta), args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# estimate / certify


def _estimates(args, g):
    """Estimates from a counts file, or straight from an estimates file."""
    text = Path(args.counts).read_text(encoding="utf-8")
    doc = json.loads(text)
    if isinstance(doc, list) or doc.get("kind") == "estimates":
        return estimates_from_json(text), {}
    n, tables, meta = counts_from_json(text)
    if n != g.n:
        raise UsageError(f"counts are for {n} qubits, generators for {g.n}")
    noise = parse_noise(args.noise)
    if noise.confusion is not None:
        tables = [correct_readout(t, noise.confusion) for t in tables]
    return estimate_all(tables, g, plan_settings(g)), meta


def cmd_estimate(args) -> int:
    _require(args, "generators", "counts")
    g = load_generators(args.generators)
    est, _ = _estimates(args, g)
    if args.format == "text":
        lines = [f"{'l':>2} {'generator':<12} {'mu_tilde':>10} {'m':>8} {'variance':>10}"]
        lines += [
            f"{e.generator_index:>2} {e.generator:<12} {e.mu_tilde:>10.6f} {e.m:>8} {e.empirical_variance:>10.6f}"
            for e in est
        ]
        _write("\n".join(lines) + "\n", args.out)
    else:
        _write(estimates_to_json(est), args.out)
    return EXIT_OK


def table_text(columns: dict[str, list[CertificationReport]]) -> str:
    """Rows are confidence levels, columns are data sources."""
    labels = list(columns)
    deltas = sorted({r.delta for reps in columns.values() for r in reps})
    # the title row needs 20 characters between the bars
    width = max(10, -(-(21 - len(labels)) // len(labels)) - 2, *(len(s) for s in labels))
    head = f"{'p_conf':<8}|" + "|".join(f" {s:^{width}} " for s in labels) + "|"
    rule = "-" * len(head)
    lines = [f"{'':<8}|{'Fidelity lower bound':^{len(head) - 10}}|", rule, head, rule]
    for d in deltas:
        cells = []
        for s in labels:
            r = next((r for r in columns[s] if r.delta == d), None)
            cells.append(f" {'-' if r is None else format(r.lower_bound, '.3f'):^{width}} ")
        lines.append(f"{1 - d:<8.6g}|" + "|".join(cells) + "|")
    lines.append(rule)
    notes = []
    for s, reps in columns.items():
        r = reps[0]
        notes.append(f"{s}: F_min = {r.f_min:.6f}, slack = {r.slack:.6f}, method = {r.method.value}")
        if not r.certifiable:
            notes.append(f"{s}: deviation exceeds 1; data cannot certify any fidelity")
        if any(not x.sufficient for x in reps):
            notes.append(f"{s}: sample counts do not support the requested epsilon")
    return "\n".join(lines + notes) + "\n"


def table_csv(columns: dict[str, list[CertificationReport]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["source", "p_conf", "delta", "method", "f_min", "lower_bound", "upper_bound", "epsilon", "slack"])
    for s, reps in columns.items():
        for r in reps:
            w.writerow([s, repr(r.p_conf), repr(r.delta), r.method.value, repr(r.f_min),
                        repr(r.lower_bound), repr(r.upper_bound), repr(r.epsilon), repr(r.slack)])
    return buf.getvalue()


def _render(columns, fmt, meta=None) -> str:
    if fmt == "text":
        return table_text(columns)
    if fmt == "csv":
        return table_csv(columns)
    if len(columns) == 1:
        return reports_to_json(next(iter(columns.values())), meta)
    docs = {s: json.loads(reports_to_json(r)) for s, r in columns.items()}
    return json.dumps(docs, indent=2, sort_keys=True) + "\n"


def cmd_certify(args) -> int:
    _require(args, "generators", "counts")
    g = load_generators(args.generators)
    est, counts_meta = _estimates(args, g)
    method = Method(args.method)
    reports = [certify(est, d, method, epsilon=args.epsilon, n=g.n) for d in _deltas(args.delta)]
    label = args.label or Path(args.counts).stem
    meta = {"counts": Path(args.counts).name, "generators": g.labels(), "label": label,
            "source_meta": counts_meta}
    _write(_render({label: reports}, args.format, meta), args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# oracle-check / report


def _mu_arg(args):
    if args.mu:
        return [float(v) for v in args.mu.split(",")]
    if args.mu_file:
        text = Path(args.mu_file).read_text(encoding="utf-8").strip()
        try:
            data = json.loads(text)
            return [float(v) for v in (data["mu"] if isinstance(data, dict) else data)]
        except json.JSONDecodeError:
            return [float(v) for v in text.replace(",", " ").split()]
    return None


def cmd_oracle_check(args) -> int:
    formula = (lambda mu: f_min(mu) + args.inject_fault) if args.inject_fault else f_min
    mu = _mu_arg(args)
    if mu is not None:
        got, want = formula(mu), lp_min_fidelity(mu)
        ok = abs(got - want) <= ORACLE_TOL
        print(f"mu = {mu}\nformula = {got!r}\nLP      = {want!r}\n|diff|  = {abs(got - want):.3e}  "
              f"{'PASS' if ok else 'FAIL'}")
        return EXIT_OK if ok else EXIT_MISMATCH
    if not 1 <= args.max_n <= 12:
        raise UsageError("--max-n must lie in [1, 12]")
    records = oracle_sweep(f_min, args.max_n, args.trials, args.seed, fault=args.inject_fault)
    worst = max(records, key=lambda r: r.error)
    bad = [r for r in records if r.error > ORACLE_TOL]
    for n in range(1, args.max_n + 1):
        rs = [r for r in records if r.n == n]
        print(f"n={n}: {len(rs)} vectors, max |formula - LP| = {max(r.error for r in rs):.3e}")
    if bad:
        print(f"FAIL: {len(bad)} mismatches > {ORACLE_TOL:g}; worst at mu={list(worst.mu)}: "
              f"formula={worst.formula!r} LP={worst.oracle!r}")
        return EXIT_MISMATCH
    print(f"PASS: {len(records)} vectors within {ORACLE_TOL:g}")
    return EXIT_OK


def cmd_report(args) -> int:
    if not args.reports:
        raise UsageError("report needs at least one report file")
    columns = {}
    for path in args.reports:
        reports, meta = reports_from_json(Path(path).read_text(encoding="utf-8"))
        columns[meta.get("label") or Path(path).stem] = reports
    _write(_render(columns, args.format), args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="stabcert", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, fmt_default="json"):
        sp.add_argument("--out", metavar="PATH")
        sp.add_argument("--format", choices=("json", "csv", "text"), default=fmt_default)

    sp = sub.add_parser("plan", help="group generators into single-qubit measurement settings")
    sp.add_argument("--generators", metavar="PATH")
    common(sp, "text")
    sp.set_defaults(func=cmd_plan)

    sp = sub.add_parser("simulate", help="sample counts from a simulated preparation circuit")
    sp.add_argument("--circuit", metavar="NAME|PATH", help="ghz-ion-3, ghz-cnot-N or a circuit JSON file")
    sp.add_argument("--generators", metavar="PATH")
    sp.add_argument("--noise", action="append", metavar="SPEC",
                    help="depol:P, readout-eta:ETA or confusion:PATH (repeatable)")
    sp.add_argument("--shots", type=int, default=11000)
    sp.add_argument("--seed", type=int, default=0)
    common(sp)
    sp.set_defaults(func=cmd_simulate)

    for name, func, helptext in (
        ("estimate", cmd_estimate, "generator expectation values from counts"),
        ("certify", cmd_certify, "worst-case fidelity and confidence certificate"),
    ):
        sp = sub.add_parser(name, help=helptext)
        sp.add_argument("--generators", metavar="PATH")
        sp.add_argument("--counts", metavar="PATH", help="counts JSON (or estimates JSON for certify)")
        sp.add_argument("--noise", action="append", metavar="SPEC",
                        help="confusion:PATH corrects readout before estimation")
        if name == "certify":
            sp.add_argument("--epsilon", type=float, default=None,
                            help="fidelity-scale precision; derived from the data when omitted")
            sp.add_argument("--delta", default="0.001,0.01,0.1", metavar="FLOAT[,FLOAT...]")
            sp.add_argument("--method", choices=[m.value for m in Method], default="ebstop")
            sp.add_argument("--label", help="column name in text reports")
        common(sp, "json")
        sp.set_defaults(func=func)

    sp = sub.add_parser("oracle-check", help="compare the closed form against the LP oracle")
    sp.add_argument("--max-n", type=int, default=4)
    sp.add_argument("--trials", type=int, default=200)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--inject-fault", type=float, default=0.0, metavar="DELTA",
                    help="add DELTA to the closed form (harness self-test)")
    sp.add_argument("--mu", help="comma-separated expectation values for a single comparison")
    sp.add_argument("--mu-file", metavar="PATH")
    sp.set_defaults(func=cmd_oracle_check)

    sp = sub.add_parser("report", help="render certification reports as a table")
    sp.add_argument("reports", nargs="*", metavar="REPORT")
    common(sp, "text")
    sp.set_defaults(func=cmd_report)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except OracleMismatchError as exc:
        print(f"stabcert {args.command}: verification mismatch: {exc}", file=sys.stderr)
        return EXIT_MISMATCH
    except (UsageError, GeneratorError, CircuitError, CoverageError, ValueError, KeyError,
            FileNotFoundError, np.linalg.LinAlgError) as exc:
        print(f"stabcert {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
