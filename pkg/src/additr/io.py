"""Dataset CSV reading, result-table writing, and model (de)serialization.

Output CSVs start with a provenance comment line (seed and config hash),
then a header row. Floats are written with repr so identical runs produce
byte-identical files and parsed values round-trip exactly. Models are
stored as versioned JSON; json round-trips Python floats exactly, so a
loaded model predicts bit-for-bit like the in-process one.
"""

import csv
import hashlib
import json

import numpy as np

from .exceptions import DataSchemaError
from .pipeline import Dataset, RuleModel
from .spline import FittedSpline

MODEL_FORMAT_VERSION = 1


def _parse_float(text, row, col):
    try:
        value = float(text)
    except ValueError:
        raise DataSchemaError(f"row {row}: column {col!r} is not numeric: {text!r}")
    if not np.isfinite(value):
        raise DataSchemaError(f"row {row}: column {col!r} is not finite: {text!r}")
    return value


def _read_table(path):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataSchemaError(f"{path}: empty file")
        rows = [row for row in reader if row]
    header = [h.strip() for h in header]
    if not rows:
        raise DataSchemaError(f"{path}: no data rows")
    for i, row in enumerate(rows):
        if len(row) != len(header):
            raise DataSchemaError(
                f"row {i + 1}: expected {len(header)} fields, got {len(row)}"
            )
    return header, rows


def _column(header, rows, name):
    j = header.index(name)
    return np.array(
        [_parse_float(row[j], i + 1, name) for i, row in enumerate(rows)]
    )


def read_dataset(path):
    """Read a dataset CSV with columns y, a, and covariates.

    Treatment may be coded -1/1 or 0/1; the 0/1 coding is remapped to
    -1/+1 and reported in the returned notices. Returns (Dataset, notices).
    """
    header, rows = _read_table(path)
    missing = [c for c in ("y", "a") if c not in header]
    if missing:
        raise DataSchemaError(f"{path}: missing required columns {missing}")
    covariate_cols = [h for h in header if h not in ("y", "a")]
    if not covariate_cols:
        raise DataSchemaError(f"{path}: no covariate columns")
    notices = []
    X = np.column_stack([_column(header, rows, c) for c in covariate_cols])
    y = _column(header, rows, "y")
    a = _column(header, rows, "a")
    values = set(np.unique(a))
    if values <= {-1.0, 1.0}:
        pass
    elif values <= {0.0, 1.0}:
        a = np.where(a == 0.0, -1.0, 1.0)
        notices.append("treatment column coded 0/1; remapped 0 -> -1")
    else:
        bad = sorted(values - {-1.0, 0.0, 1.0})
        row = int(np.nonzero(np.isin(a, bad))[0][0]) + 1
        raise DataSchemaError(
            f"row {row}: treatment value {bad[0]} is not in {{-1, 1}} or {{0, 1}}"
        )
    return Dataset(X=X, y=y, a=a, column_names=covariate_cols), notices


def read_covariates(path, column_names):
    """Read the named covariate columns from a CSV (extra columns ignored)."""
    header, rows = _read_table(path)
    missing = [c for c in column_names if c not in header]
    if missing:
        raise DataSchemaError(f"{path}: missing covariate columns {missing}")
    return np.column_stack([_column(header, rows, c) for c in column_names])


def read_paired_outcomes(path):
    """Read a paired-outcome file: y_pos, y_neg, and covariate columns.

    Missing outcome entries may be coded as empty fields or nan; they are
    returned as nan for the benchmark to exclude.
    """
    header, rows = _read_table(path)
    missing = [c for c in ("y_pos", "y_neg") if c not in header]
    if missing:
        raise DataSchemaError(f"{path}: missing required columns {missing}")
    covariate_cols = [h for h in header if h not in ("y_pos", "y_neg")]
    if not covariate_cols:
        raise DataSchemaError(f"{path}: no covariate columns")

    def outcome(name):
        j = header.index(name)
        vals = np.empty(len(rows))
        for i, row in enumerate(rows):
            text = row[j].strip()
            if text == "" or text.lower() == "nan":
                vals[i] = np.nan
            else:
                vals[i] = _parse_float(text, i + 1, name)
        return vals

    X = np.column_stack([_column(header, rows, c) for c in covariate_cols])
    return X, outcome("y_pos"), outcome("y_neg"), covariate_cols


def config_hash(config_echo):
    text = json.dumps(config_echo, sort_keys=True, default=str)
    return hashlib.sha256(text.encode()).hexdigest()[:12]


def write_csv(path, header, rows, seed, config_echo):
    """Write a result table with a provenance comment line."""
    with open(path, "w", newline="") as fh:
        fh.write(f"# seed={seed} config_sha={config_hash(config_echo)}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            # float() first: numpy scalars pass isinstance(v, float) but
            # their repr is not a bare literal
            writer.writerow(
                [repr(float(v)) if isinstance(v, float) else v for v in row]
            )


def _spline_to_dict(s):
    if s is None:
        return None
    return {
        "knots": s.knots.tolist(),
        "values": s.values.tolist(),
        "second_derivs": s.second_derivs.tolist(),
        "smoothing_parameter": s.smoothing_parameter,
        "effective_df": s.effective_df,
        "domain": list(s.domain),
        "fitted_sd": s.fitted_sd,
    }


def _spline_from_dict(d):
    if d is None:
        return None
    return FittedSpline(
        knots=np.asarray(d["knots"], dtype=np.float64),
        values=np.asarray(d["values"], dtype=np.float64),
        second_derivs=np.asarray(d["second_derivs"], dtype=np.float64),
        smoothing_parameter=d["smoothing_parameter"],
        effective_df=d["effective_df"],
        domain=tuple(d["domain"]),
        fitted_sd=d["fitted_sd"],
    )


def save_model(model: RuleModel, path):
    doc = {
        "format_version": MODEL_FORMAT_VERSION,
        "kind": model.kind,
        "column_names": model.column_names,
        "beta_stage1": model.beta_stage1.tolist(),
        "gamma": model.gamma.tolist(),
        "beta_lin": model.beta_lin.tolist(),
        "beta_non": model.beta_non.tolist(),
        "final_intercept": model.final_intercept,
        "lambda2": model.lambda2,
        "selection_trace": model.selection_trace,
        "standardization": model.standardization,
        "config_echo": model.config_echo,
        "splines": [_spline_to_dict(s) for s in model.splines],
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


def load_model(path):
    with open(path) as fh:
        doc = json.load(fh)
    version = doc.get("format_version")
    if version != MODEL_FORMAT_VERSION:
        raise DataSchemaError(
            f"{path}: unsupported model format version {version!r}"
        )
    return RuleModel(
        kind=doc["kind"],
        column_names=doc["column_names"],
        beta_stage1=np.asarray(doc["beta_stage1"], dtype=np.float64),
        splines=[_spline_from_dict(d) for d in doc["splines"]],
        gamma=np.asarray(doc["gamma"], dtype=np.float64),
        beta_lin=np.asarray(doc["beta_lin"], dtype=np.float64),
        beta_non=np.asarray(doc["beta_non"], dtype=np.float64),
        final_intercept=doc["final_intercept"],
        lambda2=doc["lambda2"],
        selection_trace=doc["selection_trace"],
        standardization=doc["standardization"],
        config_echo=doc["config_echo"],
    )
