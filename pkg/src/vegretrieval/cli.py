"""Command-line pipeline: simulate, train, evaluate, predict, compare, qc-report.

Every command writes ``<output>.run.json`` next to its main output, recording
the effective options so the artifact can be regenerated.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import VARIABLES, __version__
from .errors import ConfigurationError, DomainError, FormatError, NumericalError
from .products import (GridSpec, intercompare, product_filename, qc_summary, read_input,
                       read_product, retrieve_tile, synthetic_input_tile, write_input,
                       write_product)
from .products.tiles import parse_timeslot
from .regression import (GPRMultiModel, KRRGridConfig, MLPGridConfig, OptimizerConfig,
                         evaluate_model, fit_gpr_multi, fit_krr_multi, fit_mlp_multi,
                         load_model, save_model)
from .rtm_sim import (NoiseSpec, SamplingConfig, build_training_set, load_config,
                      read_training_csv, write_training_csv)
from .uncertainty import InputErrorSpec, QualityClass

logger = logging.getLogger("vegretrieval")

DOMAIN_ERRORS = (ConfigurationError, DomainError, FormatError, NumericalError, OSError,
                 ValueError)


def _write_json(obj, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, allow_nan=False)
        fh.write("\n")


def _echo_config(output, command, options):
    _write_json({"command": command, "version": __version__, "options": options},
                f"{output}.run.json")


def _sampling_and_noise(args):
    if args.config:
        sampling, noise = load_config(args.config)
    else:
        sampling, noise = SamplingConfig(), NoiseSpec()
    overrides = {}
    if args.n is not None:
        overrides["n_samples"] = args.n
    if args.seed is not None:
        overrides["rng_seed"] = args.seed
    if overrides:
        sampling = SamplingConfig(**{**sampling.to_dict(), **overrides})
    if args.sigma is not None:
        noise = NoiseSpec.uniform(args.sigma)
    return sampling, noise


def cmd_simulate(args):
    sampling, noise = _sampling_and_noise(args)
    ts = build_training_set(sampling, noise)
    write_training_csv(ts, args.out)
    _echo_config(args.out, "simulate", {"sampling": sampling.to_dict(),
                                        "noise": noise.as_array().tolist()})


def cmd_synth_tile(args):
    sampling, noise = _sampling_and_noise(args)
    grid = GridSpec(args.rows, args.cols, origin_row=args.rows / 2, origin_col=args.cols / 2)
    timeslot = parse_timeslot(args.timeslot)
    tile, truths = synthetic_input_tile(grid, timeslot, sampling, noise, args.missing_fraction)
    write_input(tile, args.out)
    if args.truth_out:
        _write_json({v: truths[i].tolist() for i, v in enumerate(VARIABLES)}, args.truth_out)
    _echo_config(args.out, "synth-tile", {"grid": grid.to_dict(), "timeslot": args.timeslot,
                                          "sampling": sampling.to_dict(),
                                          "noise": noise.as_array().tolist(),
                                          "missing_fraction": args.missing_fraction})


def cmd_train(args):
    train = read_training_csv(args.train)
    if args.sigma is not None:
        train.noise_spec = NoiseSpec.uniform(args.sigma)
    options = {"method": args.method, "train": str(args.train), "seed": args.seed}
    if args.method == "gpr":
        opt = OptimizerConfig(n_restarts=args.restarts, max_evals=args.max_evals, seed=args.seed,
                              subset_size=args.subset_size or None)
        options["optimizer"] = vars(opt)
        model = fit_gpr_multi(train, opt)
    elif args.method == "krr":
        grid = KRRGridConfig()
        options["grid"] = {"lengthscales": list(grid.lengthscales), "ridges": list(grid.ridges),
                           "n_folds": grid.n_folds}
        model = fit_krr_multi(train, grid)
    else:
        grid = MLPGridConfig(seed=args.seed, epochs=args.epochs)
        options["grid"] = vars(grid)
        model = fit_mlp_multi(train, grid)
    save_model(model, args.out)
    report = evaluate_model(model, train)
    _write_json(report.to_dict(), args.report or f"{args.out}.fit.json")
    _echo_config(args.out, "train", options)


def cmd_evaluate(args):
    model = load_model(args.model)
    report = evaluate_model(model, read_training_csv(args.test))
    _write_json(report.to_dict(), args.out)
    _echo_config(args.out, "evaluate", {"model": str(args.model), "test": str(args.test)})


def cmd_predict(args):
    model = load_model(args.model)
    if not isinstance(model, GPRMultiModel):
        raise ConfigurationError("tile retrieval needs a GPR model (error estimates come from it)")
    tile = read_input(args.input)
    previous = {}
    for path in args.previous or []:
        prev = read_product(path)
        previous[prev.variable] = prev
    errors = InputErrorSpec(*args.sigma_k0) if args.sigma_k0 else None
    timeslot = parse_timeslot(args.timeslot) if args.timeslot else None
    products = retrieve_tile(model, tile, errors, previous, timeslot)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for var, product in products.items():
        path = out_dir / product_filename(var, product.timeslot)
        write_product(product, path)
        written.append(path.name)
    _echo_config(out_dir / "predict", "predict", {
        "model": str(args.model), "input": str(args.input),
        "previous": [str(p) for p in args.previous or []],
        "sigma_k0": list(args.sigma_k0) if args.sigma_k0 else None, "outputs": written})


def cmd_compare(args):
    a, b = read_product(args.a), read_product(args.b)
    report = intercompare(a, b, QualityClass[args.max_class.upper()])
    _write_json(report.to_dict(), args.out)
    _echo_config(args.out, "compare", {"a": str(args.a), "b": str(args.b),
                                       "max_class": args.max_class})


def cmd_qc_report(args):
    tile = read_product(args.product)
    summary = qc_summary(tile)
    _write_json({"variable": tile.variable, "percentages": summary}, args.out)
    if args.plot:
        _plot_summary(tile.variable, summary, args.plot)
    _echo_config(args.out, "qc-report", {"product": str(args.product), "plot": args.plot})


def _plot_summary(variable, summary, path):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(5, 3))
    ax.bar(list(summary), list(summary.values()), color="tab:green")
    ax.set_ylabel("pixels (%)")
    ax.set_ylim(0, 100)
    ax.set_title(f"{variable} quality classes")
    fig.tight_layout()
    fig.savefig(path, metadata={"Software": None})
    plt.close(fig)


def _add_sampling_options(p):
    p.add_argument("--config", help="JSON file with 'sampling' and 'noise' sections")
    p.add_argument("--n", type=int, help="number of samples (overrides config)")
    p.add_argument("--seed", type=int, help="random seed (overrides config)")
    p.add_argument("--sigma", type=float, help="noise std applied to all bands (overrides config)")


def build_parser():
    parser = argparse.ArgumentParser(prog="vegretrieval", description=__doc__.splitlines()[0])
    parser.add_argument("--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="build a simulation database CSV")
    _add_sampling_options(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("synth-tile", help="write a synthetic k0 input tile")
    _add_sampling_options(p)
    p.add_argument("--rows", type=int, default=8)
    p.add_argument("--cols", type=int, default=8)
    p.add_argument("--timeslot", default="20160615")
    p.add_argument("--missing-fraction", type=float, default=0.0)
    p.add_argument("--truth-out")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth_tile)

    p = sub.add_parser("train", help="fit a model on a simulation CSV")
    p.add_argument("--train", required=True)
    p.add_argument("--method", choices=("gpr", "krr", "mlp"), default="gpr")
    p.add_argument("--out", required=True)
    p.add_argument("--report")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sigma", type=float, help="noise std the CSV was simulated with (provenance)")
    p.add_argument("--restarts", type=int, default=5)
    p.add_argument("--max-evals", type=int, default=2000)
    p.add_argument("--subset-size", type=int, default=512, help="0 optimizes on the full set")
    p.add_argument("--epochs", type=int, default=5000)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="score a model on a held-out CSV")
    p.add_argument("--model", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("predict", help="retrieve product tiles from an input tile")
    p.add_argument("--model", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--previous", nargs="*", help="product files from the preceding slot")
    p.add_argument("--sigma-k0", type=float, nargs=3, metavar=("RED", "NIR", "MIR"))
    p.add_argument("--timeslot", help="YYYYMMDD; defaults to the input tile's")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("compare", help="intercompare two products")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--max-class", choices=("good", "medium", "poor", "unreliable"),
                   default="unreliable")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("qc-report", help="quality class percentages of a product")
    p.add_argument("--product", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--plot", help="optional PNG bar chart")
    p.set_defaults(func=cmd_qc_report)
    return parser


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except DOMAIN_ERRORS as exc:
        msg = " ".join(str(exc).split())
        print(f"vegretrieval {args.command}: error: {msg}", file=sys.stderr)
        return 1
    return 0


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
