"""Command-line interface: fit, predict, evaluate, simulate, benchmark.

Every run is deterministic given its seed and configuration: output CSVs
carry a provenance comment and contain no timestamps, so repeating a
command reproduces files byte for byte. Exit codes: 0 ok, 2 usage,
3 data error, 4 numeric error. Failures print a JSON diagnostic line to
stderr.
"""

import argparse
import json
import sys

import numpy as np

from .config import build_run_config, parse_config_file
from .exceptions import (
    ConvergenceError,
    DataSchemaError,
    DegenerateInputError,
    InvalidInputError,
    PipelineStageError,
)
from .io import (
    read_covariates,
    read_dataset,
    read_paired_outcomes,
    load_model,
    save_model,
    write_csv,
)
from .pipeline import fit_linear_rule, fit_rule, predict_cate, predict_rule
from .simulate import (
    FAMILIES,
    FAMILY_EFFECT_SIZES,
    ScenarioOracles,
    ScenarioSpec,
    covariate_balance,
    evaluate_rule,
    gen_dataset,
    paired_outcome_benchmark,
    run_scenarios,
    signal_strength,
    standard_methods,
)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4

DEFAULT_METHODS = "always_treat,linear_cv,linear_cic_logn,additive_cv,additive_cic_logn"


def _add_config_flags(parser):
    parser.add_argument("--config", help="flat key = value configuration file")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--folds", type=int)
    parser.add_argument("--clip-eps", type=float, dest="clip_eps")
    parser.add_argument("--selection", choices=("cv", "cic_logn", "cic_2", "cic_logn_dr", "cic_2_dr"))
    parser.add_argument("--propensity-learner", dest="propensity_learner")
    parser.add_argument("--outcome-learner", dest="outcome_learner")
    parser.add_argument("--n-lambda", type=int, dest="n_lambda")
    parser.add_argument("--lambda-min-ratio", type=float, dest="lambda_min_ratio")
    parser.add_argument("--learner-alpha", type=float, dest="learner_alpha")
    parser.add_argument("--learner-rate", type=float, dest="learner_rate")
    parser.add_argument("--learner-rounds", type=int, dest="learner_rounds")
    parser.add_argument("--learner-depth", type=int, dest="learner_depth")


def _run_config(args):
    file_values = parse_config_file(args.config) if args.config else {}
    override_keys = (
        "seed", "folds", "clip_eps", "selection", "propensity_learner",
        "outcome_learner", "n_lambda", "lambda_min_ratio", "learner_alpha",
        "learner_rate", "learner_rounds", "learner_depth",
    )
    overrides = {k: getattr(args, k, None) for k in override_keys}
    return build_run_config(file_values, overrides)


def _cmd_fit(args):
    run = _run_config(args)
    data, notices = read_dataset(args.data)
    for note in notices:
        print(f"note: {note}", file=sys.stderr)
    fitter = fit_linear_rule if args.linear_only else fit_rule
    model = fitter(data, run.fit_config())
    save_model(model, args.model_out)
    if args.trace_out:
        trace = model.selection_trace
        header = ["lambda"] + [k for k in trace[0] if k != "lambda"]
        rows = [[rec["lambda"]] + [rec[k] for k in header[1:]] for rec in trace]
        write_csv(args.trace_out, header, rows, run.seed, run.echo())
    print(
        f"fit: kind={model.kind} lambda2={model.lambda2!r} "
        f"linear_terms={int(np.count_nonzero(model.beta_lin))} "
        f"nonlinear_terms={model.n_nonlinear_terms}"
    )
    return EXIT_OK


def _cmd_predict(args):
    run = _run_config(args)
    model = load_model(args.model)
    X = read_covariates(args.data, model.column_names)
    scores = predict_cate(model, X)
    labels = predict_rule(model, X)
    rows = [[float(s), int(l)] for s, l in zip(scores, labels)]
    write_csv(args.out, ["cate", "rule"], rows, run.seed, model.config_echo)
    print(f"predict: wrote {len(rows)} rows to {args.out}")
    return EXIT_OK


def _cmd_evaluate(args):
    run = _run_config(args)
    model = load_model(args.model)
    if args.family:
        if args.c is None:
            raise DataSchemaError("oracle evaluation needs --c with --family")
        X = read_covariates(args.data, model.column_names)
        oracles = ScenarioOracles(family=args.family, c=args.c)
        report = evaluate_rule(
            predict_rule(model, X), oracles.main_effect(X), oracles.delta(X)
        )
        rows = [[
            report.value, report.agreement,
            report.optimal_value, report.always_treat_value,
        ]]
        write_csv(
            args.out,
            ["value", "agreement", "optimal_value", "always_treat_value"],
            rows,
            run.seed,
            run.echo(),
        )
    else:
        X, y_pos, y_neg, _ = read_paired_outcomes(args.data)
        ok = np.isfinite(y_pos) & np.isfinite(y_neg)
        if not np.all(ok):
            print(f"note: excluded {int((~ok).sum())} incomplete units", file=sys.stderr)
        X, y_pos, y_neg = X[ok], y_pos[ok], y_neg[ok]
        labels = predict_rule(model, X)
        best = np.where(y_pos >= y_neg, 1.0, -1.0)
        agreement = float(np.mean(labels == best))
        value = float(np.mean(np.where(labels == 1.0, y_pos, y_neg)))
        optimal = float(np.mean(np.maximum(y_pos, y_neg)))
        always = float(np.mean(y_pos))
        write_csv(
            args.out,
            ["value", "agreement", "optimal_value", "always_treat_value"],
            [[value, agreement, optimal, always]],
            run.seed,
            run.echo(),
        )
    print(f"evaluate: wrote {args.out}")
    return EXIT_OK


def _method_map(names, run):
    return standard_methods(
        [m.strip() for m in names.split(",") if m.strip()], run.fit_config()
    )


def _cmd_simulate(args):
    run = _run_config(args)
    if args.table == "signal":
        rows = []
        for family in FAMILIES:
            large_c, small_c = FAMILY_EFFECT_SIZES[family]
            for label, c in (("small", small_c), ("large", large_c)):
                rows.append(
                    [family, label, float(c),
                     signal_strength(family, c, args.mc_n, run.seed)]
                )
        write_csv(
            args.out, ["family", "effect_size", "c", "signal_strength"],
            rows, run.seed, run.echo(),
        )
    elif args.table == "balance":
        rows = []
        streams = np.random.SeedSequence(run.seed).spawn(args.reps)
        smds = []
        props = []
        for stream in streams:
            spec = ScenarioSpec(
                family=args.family, n=args.n, p=args.p, c=args.c,
                seed=int(stream.generate_state(1)[0]),
            )
            data, _ = gen_dataset(spec)
            smd, prop = covariate_balance(data, list(range(5)))
            smds.append(smd)
            props.append(prop)
        smds = np.array(smds)
        for j in range(5):
            rows.append([f"x{j + 1}", float(smds[:, j].mean()), float(smds[:, j].std(ddof=1))])
        props = np.array(props)
        rows.append(["proportion_treated", float(props.mean()), float(props.std(ddof=1))])
        write_csv(args.out, ["quantity", "mean", "sd"], rows, run.seed, run.echo())
    else:
        spec = ScenarioSpec(
            family=args.family, n=args.n, p=args.p, c=args.c, seed=run.seed
        )
        methods = _method_map(args.methods, run)
        rows = run_scenarios(spec, methods, args.reps, test_size=args.test_size)
        write_csv(
            args.out, ["replicate", "method", "metric", "value"],
            [[r, m, k, float(v)] for r, m, k, v in rows],
            run.seed, run.echo(),
        )
    print(f"simulate: wrote {args.out}")
    return EXIT_OK


def _cmd_benchmark(args):
    run = _run_config(args)
    X, y_pos, y_neg, _ = read_paired_outcomes(args.data)
    methods = _method_map(args.methods, run)
    result = paired_outcome_benchmark(
        X, y_pos, y_neg, methods,
        n_reps=args.reps, train_fraction=args.train_fraction, seed=run.seed,
    )
    if result.excluded_units:
        print(f"note: excluded {result.excluded_units} incomplete units", file=sys.stderr)
    write_csv(
        args.out, ["replicate", "method", "metric", "value"],
        [[r, m, k, float(v)] for r, m, k, v in result.per_replicate],
        run.seed, run.echo(),
    )
    for name, metrics in result.summary.items():
        agreement = metrics["agreement"]
        value = metrics["value"]
        print(
            f"{name}: agreement {agreement[0]:.3f} ({agreement[1]:.3f}) "
            f"value {value[0]:.3f} ({value[1]:.3f})"
        )
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="additr",
        description="Sparse additive individualized treatment rules.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_fit = sub.add_parser("fit", help="fit a rule and write the model file")
    p_fit.add_argument("--data", required=True)
    p_fit.add_argument("--model-out", required=True, dest="model_out")
    p_fit.add_argument("--trace-out", dest="trace_out")
    p_fit.add_argument(
        "--linear-only", action="store_true", dest="linear_only",
        help="skip the nonlinear augmentation",
    )
    _add_config_flags(p_fit)
    p_fit.set_defaults(func=_cmd_fit)

    p_pred = sub.add_parser("predict", help="score new rows with a model file")
    p_pred.add_argument("--model", required=True)
    p_pred.add_argument("--data", required=True)
    p_pred.add_argument("--out", required=True)
    _add_config_flags(p_pred)
    p_pred.set_defaults(func=_cmd_predict)

    p_eval = sub.add_parser("evaluate", help="score a model on labeled test data")
    p_eval.add_argument("--model", required=True)
    p_eval.add_argument("--data", required=True)
    p_eval.add_argument("--out", required=True)
    p_eval.add_argument("--family", choices=FAMILIES,
                        help="oracle mode: scenario family of the test data")
    p_eval.add_argument("--c", type=float, help="oracle mode: effect-size constant")
    _add_config_flags(p_eval)
    p_eval.set_defaults(func=_cmd_evaluate)

    p_sim = sub.add_parser("simulate", help="run scenario replicates or tables")
    p_sim.add_argument("--table", choices=("scenarios", "signal", "balance"),
                       default="scenarios")
    p_sim.add_argument("--family", choices=FAMILIES, default="linear")
    p_sim.add_argument("--n", type=int, default=1000)
    p_sim.add_argument("--p", type=int, default=100)
    p_sim.add_argument("--c", type=float, default=0.1)
    p_sim.add_argument("--reps", type=int, default=20)
    p_sim.add_argument("--test-size", type=int, default=10_000, dest="test_size")
    p_sim.add_argument("--mc-n", type=int, default=200_000, dest="mc_n")
    p_sim.add_argument("--methods", default=DEFAULT_METHODS)
    p_sim.add_argument("--out", required=True)
    _add_config_flags(p_sim)
    p_sim.set_defaults(func=_cmd_simulate)

    p_bench = sub.add_parser("benchmark", help="paired-outcome benchmark protocol")
    p_bench.add_argument("--data", required=True)
    p_bench.add_argument("--reps", type=int, default=100)
    p_bench.add_argument("--train-fraction", type=float, default=2.0 / 3.0,
                         dest="train_fraction")
    p_bench.add_argument("--methods", default=DEFAULT_METHODS)
    p_bench.add_argument("--out", required=True)
    _add_config_flags(p_bench)
    p_bench.set_defaults(func=_cmd_benchmark)
    return parser


def _error_json(kind, exc):
    payload = {"error": kind, "message": str(exc)}
    stage = getattr(exc, "stage", None)
    if stage:
        payload["stage"] = stage
    print(json.dumps(payload), file=sys.stderr)


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (DataSchemaError, FileNotFoundError) as exc:
        _error_json("data", exc)
        return EXIT_DATA
    except (InvalidInputError, DegenerateInputError) as exc:
        _error_json("invalid_input", exc)
        return EXIT_DATA
    except (ConvergenceError, np.linalg.LinAlgError) as exc:
        _error_json("numeric", exc)
        return EXIT_NUMERIC
    except PipelineStageError as exc:
        _error_json("pipeline", exc)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
