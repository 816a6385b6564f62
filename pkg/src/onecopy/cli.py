"""Command-line entry point.

Exit codes: 0 success, 1 domain error (validation or precondition failure),
2 I/O or argument error.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from . import analysis, estimator, markov
from .circuit import (
    CapacityError,
    CircuitError,
    LayeredCircuit,
    build_ghz,
    build_product,
    build_random_brickwork,
    validate_circuit,
)
from .lightcone import default_jobs, exact_expectation
from .observable import Observable, ObservableError, mean_z
from .rng import substream
from .simulator import GeometryError, sample

SCHEMA_VERSION = 1


class InputError(Exception):
    """Unreadable or malformed input (exit code 2)."""


DOMAIN_ERRORS = (
    CircuitError,
    ObservableError,
    CapacityError,
    analysis.PreconditionError,
    estimator.BasisMismatch,
    markov.MarkovError,
    GeometryError,
)


def _read(path: str) -> tuple[str, str]:
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise InputError(f"cannot read {path}: {e.strerror or e}") from e
    return text, hashlib.sha256(text.encode()).hexdigest()


def _load_json(path: str, inputs: dict) -> dict:
    text, digest = _read(path)
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        line = text.splitlines()[e.lineno - 1] if text.splitlines() else ""
        raise InputError(f"{path}:{e.lineno}:{e.colno}: {e.msg}\n    {line}") from e
    inputs[path] = digest
    return data


def _structured(loader, path: str, data: dict):
    try:
        return loader(data)
    except (KeyError, TypeError, IndexError) as e:
        raise InputError(f"{path}: missing or malformed field ({e})") from e


def load_circuit(path: str, inputs: dict) -> LayeredCircuit:
    return _structured(LayeredCircuit.from_dict, path, _load_json(path, inputs))


def load_observable(path: str, inputs: dict, renormalize: bool = False) -> Observable:
    return _structured(lambda d: Observable.from_dict(d, renormalize), path, _load_json(path, inputs))


def _provenance(args, inputs: dict) -> dict:
    flags = {k: v for k, v in sorted(vars(args).items()) if k not in ("func",)}
    return {
        "inputs": inputs,
        "flags": flags,
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(),
    }


def _emit(payload: dict, args, inputs: dict) -> None:
    out = {"schema_version": SCHEMA_VERSION, **payload, "provenance": _provenance(args, inputs)}
    print(json.dumps(out, indent=2, default=_json_default))


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not serializable: {type(o)}")


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x]
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e)) from e


def _ints(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x]
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e)) from e


# --- subcommands -----------------------------------------------------------


def cmd_validate(args) -> int:
    c = load_circuit(args.circuit, {})
    report = validate_circuit(c)
    print(report)
    return 0 if report.ok else 1


def _checked(c: LayeredCircuit) -> LayeredCircuit:
    report = validate_circuit(c)
    if not report.ok:
        raise CircuitError(f"invalid circuit:\n{report}")
    return c


def cmd_expect(args) -> int:
    inputs: dict = {}
    c = _checked(load_circuit(args.circuit, inputs))
    o = load_observable(args.observable, inputs, args.renormalize)
    value, a = exact_expectation(c, o, args.input, jobs=args.jobs)
    terms = [{"support": list(t.support), "coeff": t.coeff, "value": float(v)} for t, v in zip(o.terms, a)]
    _emit({"value": value, "terms": terms}, args, inputs)
    return 0


def cmd_estimate(args) -> int:
    inputs: dict = {}
    c = _checked(load_circuit(args.circuit, inputs))
    o = load_observable(args.observable, inputs, args.renormalize)
    if args.trials is not None and args.trials < 1:
        raise argparse.ArgumentTypeError("--trials must be >= 1")
    trials = args.trials or 1
    if trials == 1:
        batch = sample(c, o.basis, args.seed, 1, backend=args.backend, bits=args.input)
        if args.shots_out:
            _write_shots(batch, args.shots_out)
        rep = estimator.single_copy_estimate(batch[0], o, c, args.epsilons, backend=batch.backend)
        _emit({"report": rep.to_dict()}, args, inputs)
        return 0
    res = estimator.trial_harness(c, o, trials, args.seed, args.backend, args.epsilons, bits=args.input)
    if args.json:
        _emit({"harness": res.to_dict()}, args, inputs)
    else:
        sys.stdout.write(estimator.results_to_csv([res]))
    return 0


def _write_shots(batch, prefix: str) -> None:
    try:
        Path(prefix + ".csv").write_text(batch.to_csv())
        Path(prefix + ".json").write_text(batch.sidecar())
    except OSError as e:
        raise InputError(f"cannot write shots to {prefix}: {e}") from e


def cmd_sweep(args) -> int:
    if args.trials < 1:
        raise CircuitError("--trials must be >= 1")
    if not args.ns:
        raise CircuitError("--ns must list at least one qubit count")
    rows = []
    for n in args.ns:
        c = build_random_brickwork(n, args.depth, args.seed)
        rows.append(
            estimator.trial_harness(c, mean_z(n), args.trials, args.seed, args.backend, args.epsilons)
        )
    sys.stdout.write(estimator.results_to_csv(rows))
    return 0


def cmd_discriminate(args) -> int:
    inputs: dict = {}
    cr = _checked(load_circuit(args.rho, inputs))
    cs = _checked(load_circuit(args.sigma, inputs))
    o = load_observable(args.observable, inputs, args.renormalize)
    cert = analysis.trace_distance_lower_bound(cr, cs, o, args.epsilon, refined=not args.generic_bound)
    _emit({"certificate": cert.to_dict()}, args, inputs)
    return 0


def cmd_decide(args) -> int:
    inputs: dict = {}
    c = _checked(load_circuit(args.circuit, inputs))
    if args.truth_table:
        rows = analysis.truth_table(c, args.max_inputs, args.qubit)
        if args.json:
            _emit({"truth_table": [d.to_dict() for d in rows]}, args, inputs)
        else:
            sys.stdout.write(analysis.truth_table_csv(rows))
        return 0
    if args.input is None:
        raise InputError("decide needs --input BITS or --truth-table")
    _emit({"decision": analysis.decide(c, args.input, args.qubit).to_dict()}, args, inputs)
    return 0


def load_process(path: str, inputs: dict) -> markov.MarkovProcess:
    return _structured(markov.MarkovProcess.from_dict, path, _load_json(path, inputs))


def cmd_markov_sample(args) -> int:
    inputs: dict = {}
    m = load_process(args.process, inputs)
    xs = markov.sample_many(m, args.seed, args.samples)
    _emit({"samples": xs.tolist()}, args, inputs)
    return 0


def cmd_markov_expect(args) -> int:
    inputs: dict = {}
    m = load_process(args.process, inputs)
    f = _structured(markov.LinearFunctional.from_dict, args.functional, _load_json(args.functional, inputs))
    exact = markov.exact_functional(m, f)
    xs = markov.sample_many(m, args.seed, args.samples)
    ys = markov.sample_estimates(xs, f, m.alphabets)
    payload = {
        "exact": exact,
        "single_sample_estimate": float(ys[0]),
        "variance_bound": markov.variance_bound(m, f),
        "samples": args.samples,
        "mean": float(ys.mean()),
        "variance": float(ys.var(ddof=1)) if len(ys) > 1 else 0.0,
    }
    _emit(payload, args, inputs)
    return 0


def cmd_make_circuit(args) -> int:
    if args.kind == "brickwork":
        c = build_random_brickwork(args.n, args.depth, args.seed)
    elif args.kind == "ghz":
        c = build_ghz(args.n, args.x)
    else:
        t = args.theta
        c = build_product(args.n, np.array([[np.cos(t), -np.sin(t)], [np.sin(t), np.cos(t)]]))
    print(c.to_json())
    return 0


def cmd_make_observable(args) -> int:
    print(mean_z(args.n, args.basis).to_json())
    return 0


def cmd_make_process(args) -> int:
    m = markov.random_process(args.n, args.depth, args.seed, args.alphabet)
    print(json.dumps(m.to_dict()))
    if args.functional:
        f = markov.random_functional(m.alphabets, args.terms, args.max_length, args.seed)
        Path(args.functional).write_text(f.to_json())
    return 0


# --- parser ----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="onecopy", description=__doc__.splitlines()[0])
    p.add_argument("--jobs", type=int, default=default_jobs(), help="worker cap (env ONECOPY_JOBS)")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("validate", help="check circuit structure")
    s.add_argument("--circuit", required=True)
    s.set_defaults(func=cmd_validate)

    s = sub.add_parser("expect", help="exact expectation by lightcone contraction")
    s.add_argument("--circuit", required=True)
    s.add_argument("--observable", required=True)
    s.add_argument("--input", default=None, help="input bitstring (default all zeros)")
    s.add_argument("--renormalize", action="store_true")
    s.set_defaults(func=cmd_expect)

    s = sub.add_parser("estimate", help="single-copy estimate or trial harness")
    s.add_argument("--circuit", required=True)
    s.add_argument("--observable", required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--backend", choices=("dense", "mps", "auto"), default="auto")
    s.add_argument("--trials", type=int, default=None)
    s.add_argument("--input", default=None)
    s.add_argument("--epsilons", type=_floats, default=list(estimator.DEFAULT_EPSILONS))
    s.add_argument("--json", action="store_true", help="harness output as JSON instead of CSV")
    s.add_argument("--shots-out", default=None, help="write the shot as PREFIX.csv + PREFIX.json")
    s.add_argument("--renormalize", action="store_true")
    s.set_defaults(func=cmd_estimate)

    s = sub.add_parser("sweep", help="confidence-vs-n sweep on random brickwork circuits")
    s.add_argument("--ns", type=_ints, default=[16, 64, 256, 1024])
    s.add_argument("--depth", type=int, default=2)
    s.add_argument("--trials", type=int, default=10000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--backend", choices=("dense", "mps", "auto"), default="mps")
    s.add_argument("--epsilons", type=_floats, default=list(estimator.DEFAULT_EPSILONS))
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("discriminate", help="trace-distance lower bound certificate")
    s.add_argument("--rho", required=True)
    s.add_argument("--sigma", required=True)
    s.add_argument("--observable", required=True)
    s.add_argument("--epsilon", type=float, required=True)
    s.add_argument("--renormalize", action="store_true")
    s.add_argument("--generic-bound", action="store_true", help="use D_t * norm(O) instead of per-term variances")
    s.set_defaults(func=cmd_discriminate)

    s = sub.add_parser("decide", help="classical evaluation of a circuit's output qubit")
    s.add_argument("--circuit", required=True)
    g = s.add_mutually_exclusive_group()
    g.add_argument("--input", default=None)
    g.add_argument("--truth-table", action="store_true")
    s.add_argument("--qubit", type=int, default=0)
    s.add_argument("--max-inputs", type=int, default=analysis.TRUTH_TABLE_CAP)
    s.add_argument("--json", action="store_true", help="truth table as JSON instead of CSV")
    s.set_defaults(func=cmd_decide)

    s = sub.add_parser("markov-sample", help="draw samples from a layered Markov process")
    s.add_argument("--process", required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--samples", type=int, default=1)
    s.set_defaults(func=cmd_markov_sample)

    s = sub.add_parser("markov-expect", help="exact and single-sample estimates of a functional")
    s.add_argument("--process", required=True)
    s.add_argument("--functional", required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--samples", type=int, default=1)
    s.set_defaults(func=cmd_markov_expect)

    s = sub.add_parser("make-circuit", help="write a generated circuit as JSON to stdout")
    s.add_argument("kind", choices=("brickwork", "ghz", "product"))
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--depth", type=int, default=2)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--x", type=float, default=0.6, help="GHZ amplitude")
    s.add_argument("--theta", type=float, default=0.0, help="product-state rotation angle")
    s.set_defaults(func=cmd_make_circuit)

    s = sub.add_parser("make-observable", help="write (1/n) sum Z_j as JSON to stdout")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--basis", default=None)
    s.set_defaults(func=cmd_make_observable)

    s = sub.add_parser("make-process", help="write a random layered Markov process as JSON")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--depth", type=int, default=2)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--alphabet", type=int, default=2)
    s.add_argument("--functional", default=None, help="also write a random functional to this path")
    s.add_argument("--terms", type=int, default=4)
    s.add_argument("--max-length", type=int, default=2)
    s.set_defaults(func=cmd_make_process)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        return args.func(args)
    except InputError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except argparse.ArgumentTypeError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except DOMAIN_ERRORS as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
