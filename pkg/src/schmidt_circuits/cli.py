"""Command-line entry point.

Every output file carries the fully resolved configuration: JSON files under
a ``"config"`` key, CSV files as a leading ``# {...}`` comment line.

Exit codes: 0 success, 1 runtime failure, 2 usage error.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import ansatz, dataio, hybrid, tensornet, training

log = logging.getLogger("schmidt_circuits")

CLASSIFICATION_SETS = ("iris", "wine", "breast_cancer", "ionosphere", "covtype", "digits")


class UsageError(Exception):
    pass


def _load_config_file(path: str) -> dict:
    p = Path(path)
    if p.suffix == ".toml":
        try:
            import tomllib
        except ModuleNotFoundError:  # Python < 3.11
            import tomli as tomllib
        with open(p, "rb") as fh:
            data = tomllib.load(fh)
    else:
        data = json.loads(p.read_text())
    return {k.replace("-", "_"): v for k, v in data.items()}


def _csv_header(fh, config: dict) -> None:
    fh.write("# " + json.dumps(config, sort_keys=True) + "\n")


def _load(name: str) -> dataio.Dataset:
    try:
        return dataio.load_dataset(name)
    except FileNotFoundError as exc:
        if name not in dataio.KNOWN and not name.startswith("random"):
            raise UsageError(str(exc)) from None
        raise


def _resolve_k(args, ds: dataio.Dataset, vectors: np.ndarray) -> int:
    if args.k is not None:
        return args.k
    info = dataio.KNOWN.get(args.data)
    if info is not None:
        return info.k
    return hybrid.select_k(vectors, args.gamma)[0]


def cmd_decompose(args, config: dict) -> None:
    ds = _load(args.data)
    vectors, _ = dataio.to_vectors(ds, scaling=args.scaling)
    rng = np.random.default_rng(args.seed)
    idx = np.sort(rng.choice(len(vectors), size=min(args.sample, len(vectors)), replace=False))
    mean = tensornet.mean_vector(vectors[idx])
    full = tensornet.decompose(mean)
    trunc = tensornet.truncate(full, args.gamma, args.k_max)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "decomposition.json").write_text(tensornet.dumps(trunc, full, config=config))
    with open(out / "coefficients.csv", "w", newline="") as fh:
        _csv_header(fh, config)
        w = csv.writer(fh)
        w.writerow(["rank", "coeff", "probability", "kept"])
        for i, term in enumerate(full.terms):
            w.writerow([i, repr(term.coeff), repr(term.coeff**2), int(i < trunc.k)])
    summary = {"config": config, "n": full.n, "terms": len(full), "k": trunc.k, "delta_psi": trunc.delta_psi}
    (out / "summary.json").write_text(json.dumps(summary, indent=2))
    print(f"{ds.name}: n={full.n} terms={len(full)} k={trunc.k} delta_psi={trunc.delta_psi:.6g}")


def cmd_fit_circuit(args, config: dict) -> None:
    ds = _load(args.data)
    vectors, _ = dataio.to_vectors(ds, scaling=args.scaling)
    k = _resolve_k(args, ds, vectors)
    config = {**config, "k": k}
    reports = training.fit_random_samples(
        vectors,
        k,
        sample_size=args.sample,
        runs=args.runs,
        seed=args.seed,
        single=args.single,
        iters=args.iters,
        lr=args.lr,
        decay=args.decay,
    )
    summary = training.write_reports(reports, args.out, header=config)
    spec = ansatz.build_spec(ds.n, k)
    for rep in reports:
        ansatz.save_checkpoint(
            Path(args.out) / f"run{rep.run}_params.json", spec, rep.best_params, rep.seed, rep.loss_history, config=config
        )
    print(f"{ds.name}: k={k} mean best loss {summary['mean_best']:.6g} over {len(reports)} runs")


def _experiment(args, config: dict, mode: str) -> None:
    ds = _load(args.data)
    cfg = hybrid.ExperimentConfig(
        dataset=args.data,
        mode=mode,
        gamma=args.gamma,
        k=args.k,
        max_samples=args.max_samples,
        folds=args.folds,
        epochs=args.epochs,
        batch_size=args.batch_size,
        seed=args.seed,
        lr=args.lr,
        decay=args.decay,
        freeze_quantum=getattr(args, "freeze_quantum", False),
        scaling=args.scaling,
        data=None if args.data in dataio.KNOWN else ds,
    )
    reports = hybrid.run(cfg)
    summary = hybrid.write_results(reports, cfg, args.out)
    pc = summary["param_counts"]
    print(
        f"{ds.name} {mode}: accuracy {summary['mean_acc']:.3f} ± {summary['std_acc']:.3f} "
        f"params quantum={pc['quantum']} classical={pc['classical']} total={pc['total']}"
    )


def cmd_train_classical(args, config):
    _experiment(args, config, args.mode)


def cmd_train_hybrid(args, config):
    _experiment(args, config, "hybrid")


def cmd_count_params(args, config: dict) -> None:
    names = CLASSIFICATION_SETS if args.data == "all" else (args.data,)
    for name in names:
        if name not in dataio.KNOWN or dataio.KNOWN[name].classes is None:
            raise UsageError(f"unknown classification dataset {name!r}; known: {', '.join(CLASSIFICATION_SETS)}")
    print(f"{'dataset':<15}{'mode':<20}{'quantum':>9}{'classical':>11}{'total':>8}")
    notes = []
    for name in names:
        q, c, t = hybrid.count_parameters(hybrid.ExperimentConfig(name, mode=args.mode, k=args.k))
        print(f"{name:<15}{args.mode:<20}{q:>9}{c:>11}{t:>8}")
        if args.mode != "hybrid":
            qh, _, _ = hybrid.count_parameters(hybrid.ExperimentConfig(name, mode="hybrid"))
            notes.append(f"{name}: published classical-head figure is {c + qh} = {c} + {qh} circuit parameters")
    for note in notes:
        print("note:", note)


def cmd_gen_data(args, config: dict) -> None:
    spec = dataio.SyntheticSpec(
        n=args.n,
        classes=args.classes,
        informative=args.informative,
        separation=args.separation,
        samples=args.samples,
        seed=args.seed,
    )
    ds = dataio.make_classification(spec)
    out = Path(args.out)
    dataio.write_csv(out, ds.features, ds.labels, ds.feature_names)
    text = out.read_text()
    with open(out, "w", newline="") as fh:
        _csv_header(fh, config)
        fh.write(text)
    print(f"wrote {len(ds)} samples x {ds.features.shape[1]} features to {out}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="schmidt-circuits",
        description="Decomposition-guided circuits that compress 2**n-dim data vectors to n qubit marginals.",
    )
    parser.add_argument("--config", help="TOML or JSON file with option defaults (flags win)")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, data=True):
        if data:
            p.add_argument("--data", required=True, help="dataset name, randomN, or CSV path")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", default="out")
        p.add_argument("--scaling", choices=dataio.SCALINGS, default="none", help="per-feature scaling before normalizing")

    p = sub.add_parser("decompose", help="mean-vector decomposition and k selection")
    common(p)
    p.add_argument("--gamma", type=float, default=0.3)
    p.add_argument("--sample", type=int, default=100)
    p.add_argument("--k-max", type=int, default=None)
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("fit-circuit", help="fit the circuit to k-term targets")
    common(p)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--gamma", type=float, default=0.3)
    p.add_argument("--single", action="store_true", help="fit one random vector per run")
    p.add_argument("--sample", type=int, default=training.DEFAULT_SAMPLE_SIZE)
    p.add_argument("--runs", type=int, default=training.DEFAULT_RUNS)
    p.add_argument("--iters", type=int, default=training.DEFAULT_ITERS)
    p.add_argument("--lr", type=float, default=training.DEFAULT_LR)
    p.add_argument("--decay", type=float, default=training.DEFAULT_DECAY)
    p.set_defaults(func=cmd_fit_circuit)

    for name, func in (("train-classical", cmd_train_classical), ("train-hybrid", cmd_train_hybrid)):
        what = "MLP head on original or reduced vectors" if name == "train-classical" else "joint circuit + MLP head"
        p = sub.add_parser(name, help=f"cross-validated classification: {what}")
        common(p)
        if name == "train-classical":
            p.add_argument("--mode", choices=("classical-original", "classical-reduced"), default="classical-original")
        else:
            p.add_argument("--freeze-quantum", action="store_true")
        p.add_argument("--k", type=int, default=None)
        p.add_argument("--gamma", type=float, default=0.3)
        p.add_argument("--folds", type=int, default=5)
        p.add_argument("--max-samples", type=int, default=1000)
        p.add_argument("--epochs", type=int, default=100)
        p.add_argument("--batch-size", type=int, default=32)
        p.add_argument("--lr", type=float, default=training.DEFAULT_LR)
        p.add_argument("--decay", type=float, default=training.DEFAULT_DECAY)
        p.set_defaults(func=func)

    p = sub.add_parser("count-params", help="learnable parameter counts")
    p.add_argument("--data", required=True, help="dataset name or 'all'")
    p.add_argument("--mode", choices=hybrid.MODES, default="hybrid")
    p.add_argument("--k", type=int, default=None)
    p.set_defaults(func=cmd_count_params)

    p = sub.add_parser("gen-data", help="write a synthetic classification CSV")
    common(p, data=False)
    p.add_argument("--n", type=int, required=True, help="qubits; the CSV has 2**n features")
    p.add_argument("--classes", type=int, default=2)
    p.add_argument("--informative", type=int, default=2)
    p.add_argument("--separation", type=float, default=1.0)
    p.add_argument("--samples", type=int, default=1000)
    p.set_defaults(func=cmd_gen_data)
    return parser


def _parse(parser: argparse.ArgumentParser, argv):
    args = parser.parse_args(argv)
    if args.config:
        defaults = _load_config_file(args.config)
        subparser = parser._subparsers._group_actions[0].choices[args.command]
        known = {a.dest for a in subparser._actions}
        subparser.set_defaults(**{k: v for k, v in defaults.items() if k in known})
        args = parser.parse_args(argv)
    return args


def resolved_config(args) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "verbose")}


def main(argv=None) -> int:
    parser = build_parser()
    args = _parse(parser, argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        args.func(args, resolved_config(args))
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:
        if args.verbose:
            log.exception("command failed")
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
