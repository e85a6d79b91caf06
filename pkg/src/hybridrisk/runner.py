"""Experiment orchestration: prepare, train, evaluate, external-validate, report.

A bundle directory holds everything a later evaluation needs::

    bundle/
      manifest.json          config echo, versions, data fingerprints
      split.json             seed, fraction, train/test row indices
      pipeline.json          frozen preprocessing + Platt calibration
      models/<name>.json.gz  one record per base learner
      ensembles.json         hybrid members and weights
      reports/<cohort>.json  evaluation reports (+ curves/*.csv, *.svg)

Evaluation only reads the bundle; no parameter is refit.
"""

from __future__ import annotations

import csv
import gzip
import io
import json
import logging
import platform
from dataclasses import dataclass
from pathlib import Path
from types import MappingProxyType

import numpy as np
import scipy

from . import __version__
from .config import ExperimentConfig
from .ensemble import VotingEnsemble, classify
from .errors import ConfigError, DataError, LeakageError, MissingReports
from .learners import (
    CalibratedSvm,
    PlattCalibrator,
    fit_platt,
    model_from_dict,
    train_gbt,
    train_logistic,
    train_random_forest,
    train_svm,
)
from .metrics import (
    ScoredPredictions,
    auprc,
    auroc,
    brier,
    calibration_summary,
    confusion_at_threshold,
    pr_curve,
    roc_curve,
    thresholded_metrics,
)
from .preprocess import (
    Features,
    PreprocessConfig,
    apply_pipeline,
    dumps_pipeline,
    fit_pipeline,
    load_mapping,
    load_pipeline,
    write_atomic,
)
from .smote import SmoteConfig, smote_fold
from .stats import bootstrap_ci, delong_test, mcnemar_test
from .tabular import (
    _allocate,
    class_distribution,
    load_csv,
    load_schema,
    split_from_indices,
    split_train_test,
)

log = logging.getLogger(__name__)

BASE_MODELS = ("logistic", "svm", "random_forest", "gbt")


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, allow_nan=False) + "\n"


def _jsonable(x):
    if isinstance(x, MappingProxyType):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, float)):
        return None if not np.isfinite(x) else float(x)
    if isinstance(x, np.integer):
        return int(x)
    return x


def _write_gz_json(path: Path, obj) -> None:
    raw = json.dumps(obj, separators=(",", ":"), sort_keys=True).encode()
    buf = io.BytesIO()
    with gzip.GzipFile(filename="", mode="wb", fileobj=buf, mtime=0) as gz:
        gz.write(raw)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(f".{path.name}.tmp")
    tmp.write_bytes(buf.getvalue())
    tmp.replace(path)


def _read_gz_json(path: Path):
    with gzip.open(path, "rt", encoding="utf-8") as fh:
        return json.load(fh)


def stratified_subsample(y, size: int, seed: int) -> np.ndarray:
    """Sorted row indices of a label-stratified subsample of ``size`` rows."""
    y = np.asarray(y)
    if size >= len(y):
        return np.arange(len(y))
    rng = np.random.default_rng(seed)
    strata = [np.flatnonzero(y == k) for k in (0, 1)]
    alloc = _allocate([len(s) for s in strata], size / len(y))
    return np.sort(np.concatenate([rng.permutation(s)[:a] for s, a in zip(strata, alloc)]))


def balanced_undersample(features: Features, seed: int) -> Features:
    """Seeded majority undersampling of an evaluation split to a 50/50 mix."""
    y = features.y
    pos, neg = np.flatnonzero(y == 1), np.flatnonzero(y == 0)
    rng = np.random.default_rng(seed)
    if len(pos) < len(neg):
        neg = np.sort(rng.choice(neg, len(pos), replace=False))
    else:
        pos = np.sort(rng.choice(pos, len(neg), replace=False))
    rows = np.sort(np.concatenate([pos, neg]))
    meta = dict(features.meta)
    meta["balanced_from"] = len(y)
    return Features(features.X[rows], y[rows], features.names, features.provenance,
                    features.partition, meta)


def load_primary(cfg: ExperimentConfig):
    schema = load_schema(cfg["primary"]["schema"])
    path = cfg["primary"]["csv"]
    if not Path(path).is_file():
        raise DataError(f"primary dataset not found: {path}")
    return load_csv(path, schema, provenance="primary")


def load_external(cfg: ExperimentConfig):
    schema = load_schema(cfg["external"]["schema"])
    path = cfg["external"]["csv"]
    if not Path(path).is_file():
        raise DataError(f"external dataset not found: {path}")
    return load_csv(path, schema, provenance="external")


def cmd_prepare(cfg: ExperimentConfig, out) -> dict:
    """Split the primary cohort and record class counts."""
    out = Path(out)
    ds = load_primary(cfg)
    sp = split_train_test(ds, cfg["split"]["fraction"], cfg.seed_for("split"),
                          cfg["split"].get("stratified", True))
    summary = {
        "fingerprint": ds.fingerprint(),
        "n": len(ds),
        "class_distribution": dict(zip(("neg", "pos", "prevalence"), class_distribution(ds))),
        "train": dict(zip(("neg", "pos", "prevalence"), class_distribution(sp.train))),
        "test": dict(zip(("neg", "pos", "prevalence"), class_distribution(sp.test))),
    }
    write_atomic(out / "split.json", sp.to_json() + "\n")
    write_atomic(out / "prepare.json", _dump(summary))
    return summary


def _train_learners(cfg: ExperimentConfig, fold: Features):
    lc = cfg["learners"]
    X, y = fold.X, fold.y
    models, info = {}, {}
    p = lc["logistic"]
    log.info("training logistic regression on %d rows", len(y))
    models["logistic"] = train_logistic(X, y, p["l2"], p["tol"], p["max_iter"])

    p = lc["svm"]
    rows = stratified_subsample(y, int(p.get("subsample") or len(y)),
                                cfg.seed_for("svm_subsample"))
    info["svm_subsample"] = {"rows": int(len(rows)), "of": int(len(y)),
                             "seed": cfg.seed_for("svm_subsample")}
    log.info("training SVM on %d of %d rows", len(rows), len(y))
    svm = train_svm(X[rows], y[rows], p["C"], p.get("gamma"), p["tol"], p["max_passes"])
    info["svm_converged"] = svm.converged
    # Platt sigmoid on margins of the whole (resampled) training fold
    platt = fit_platt(svm.decision_function(X), y)
    models["svm"] = svm

    p = lc["random_forest"]
    log.info("training random forest (%d trees)", p["n_trees"])
    models["random_forest"] = train_random_forest(
        X, y, p["n_trees"], p.get("mtry"), cfg.seed_for("random_forest"),
        p.get("max_depth"), p["min_leaf"])

    p = lc["gbt"]
    log.info("training boosted trees (%d rounds)", p["n_rounds"])
    models["gbt"] = train_gbt(X, y, p["n_rounds"], p["learning_rate"], p["max_depth"],
                              p["reg_lambda"], p["gamma"], cfg.seed_for("gbt"),
                              p.get("min_child_weight", 1.0))
    return models, platt, info


def cmd_train(cfg: ExperimentConfig, out) -> Path:
    """split -> fit pipeline -> apply -> SMOTE(train) -> learners -> Platt -> bundle."""
    out = Path(out)
    ds = load_primary(cfg)
    sp = split_train_test(ds, cfg["split"]["fraction"], cfg.seed_for("split"),
                          cfg["split"].get("stratified", True))
    mapping = load_mapping(cfg["mapping"]) if cfg["mapping"] else None
    pipeline = fit_pipeline(sp.train, PreprocessConfig(mapping))
    train_fold = apply_pipeline(pipeline, sp.train)
    sm = cfg["smote"]
    if sm.get("scope", "train") != "train":
        raise LeakageError("SMOTE is restricted to the training fold")
    resampled = smote_fold(train_fold, SmoteConfig(sm["k_neighbors"], sm["target_ratio"],
                                                   cfg.seed_for("smote")))
    models, platt, info = _train_learners(cfg, resampled)
    pipeline = pipeline.with_calibration("svm", platt.to_dict())

    write_atomic(out / "split.json", sp.to_json() + "\n")
    write_atomic(out / "pipeline.json", dumps_pipeline(pipeline))
    for name, m in models.items():
        _write_gz_json(out / "models" / f"{name}.json.gz", m.to_dict())
    # a list keeps the configured order (the first pair member is the reference)
    ens = [{"name": k, "members": v["members"], "weights": v["weights"]}
           for k, v in cfg["ensembles"].items()]
    write_atomic(out / "ensembles.json", _dump(ens))
    manifest = {
        "package": "hybridrisk",
        "version": __version__,
        "versions": {"numpy": np.__version__, "scipy": scipy.__version__,
                     "python": platform.python_version()},
        "config": cfg.to_dict(),
        "data": {"primary_fingerprint": ds.fingerprint(), "n_primary": len(ds)},
        "class_distribution": {
            "train": list(class_distribution(sp.train)),
            "test": list(class_distribution(sp.test)),
            "train_resampled": [int(np.sum(resampled.y == 0)), int(np.sum(resampled.y == 1))],
        },
        "smote": {"n_synthetic": resampled.meta["n_synthetic"], "seed": cfg.seed_for("smote")},
        "training": _jsonable(info),
    }
    write_atomic(out / "manifest.json", _dump(manifest))
    return out


@dataclass(frozen=True)
class Bundle:
    root: Path
    manifest: dict
    pipeline: object
    models: dict
    ensembles: dict

    @property
    def config(self) -> dict:
        return self.manifest["config"]


def load_bundle(path) -> Bundle:
    root = Path(path)
    try:
        manifest = json.loads((root / "manifest.json").read_text(encoding="utf-8"))
        ens_spec = json.loads((root / "ensembles.json").read_text(encoding="utf-8"))
    except OSError as exc:
        raise DataError(f"not a trained bundle: {root} ({exc})") from exc
    pipeline = load_pipeline(root / "pipeline.json")
    models = {}
    for name in BASE_MODELS:
        models[name] = model_from_dict(_read_gz_json(root / "models" / f"{name}.json.gz"))
    if "svm" in pipeline.calibration:
        models["svm"] = CalibratedSvm(models["svm"],
                                      PlattCalibrator.from_dict(pipeline.calibration["svm"]))
    ensembles = {
        spec["name"]: VotingEnsemble(tuple(models[m] for m in spec["members"]),
                                     tuple(spec["weights"]), tuple(spec["members"]))
        for spec in ens_spec
    }
    return Bundle(root, manifest, pipeline, models, ensembles)


def _curve_csv(series) -> str:
    head, rows = series.to_rows()
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(head)
    for r in rows:
        w.writerow([repr(v) for v in r])
    return buf.getvalue()


def evaluate_features(bundle: Bundle, fx: Features, cohort: str, *, tau=0.5, B=1000,
                      seed=0, n_bins=10, eval_mode="natural") -> dict:
    """Score a transformed cohort with every model and assemble the report."""
    y = fx.y
    report = {
        "cohort": cohort,
        "n": int(len(y)),
        "prevalence": float(y.mean()),
        "pr_baseline": float(y.mean()),
        "eval_mode": eval_mode,
        "bootstrap": {"B": B, "seed": seed, "method": "percentile, label-stratified"},
        "preprocessing": _jsonable(fx.meta),
        "models": {},
        "base_models": {},
        "tests": {},
    }
    curves = {}
    for name, m in bundle.models.items():
        sp = ScoredPredictions(m.predict_proba(fx.X), y, cohort)
        report["base_models"][name] = {"auroc": auroc(sp), "auprc": auprc(sp),
                                       "brier": brier(sp)}
    hybrid_scores, hybrid_labels = {}, {}
    for k, (name, ens) in enumerate(bundle.ensembles.items()):
        p = ens.predict_proba(fx.X)
        sp = ScoredPredictions(p, y, cohort)
        roc, pr = roc_curve(sp), pr_curve(sp)
        cal = calibration_summary(sp, n_bins)
        roc_ci = bootstrap_ci(auroc, sp, B, seed + 2 * k)
        pr_ci = bootstrap_ci(auprc, sp, B, seed + 2 * k + 1)
        thr = thresholded_metrics(confusion_at_threshold(sp, tau))
        report["models"][name] = {
            "auroc": auroc(sp),
            "auroc_ci": roc_ci.to_list(),
            "auprc": pr.area,
            "auprc_ci": pr_ci.to_list(),
            "brier": cal.brier,
            "cal_slope": cal.slope,
            "cal_intercept": cal.intercept,
            "thresholded": {"tau": tau, **thr},
            "reliability": cal.bins.to_dict(),
        }
        curves[name] = (roc, pr)
        hybrid_scores[name] = p
        hybrid_labels[name] = classify(p, tau)
    names = list(hybrid_scores)
    if len(names) >= 2:
        a, b = names[0], names[1]
        d = delong_test(hybrid_scores[a], hybrid_scores[b], y)
        mc = mcnemar_test(hybrid_labels[a], hybrid_labels[b], y)
        report["tests"] = {
            "pair": [a, b],
            "delong": {"delta_auc": d.effect["delta_auc"], "p": d.p_value, "z": d.statistic},
            "mcnemar": {"b": mc.effect["b"], "c": mc.effect["c"], "statistic": mc.statistic,
                        "p": mc.p_value, "method": mc.method},
        }
    return _jsonable(report), curves


def _write_report(bundle: Bundle, report: dict, curves: dict) -> Path:
    rdir = bundle.root / "reports"
    cohort = report["cohort"]
    for name, (roc, pr) in curves.items():
        write_atomic(rdir / "curves" / f"{cohort}__{name}__roc.csv", _curve_csv(roc))
        write_atomic(rdir / "curves" / f"{cohort}__{name}__pr.csv", _curve_csv(pr))
    path = rdir / f"{cohort}.json"
    write_atomic(path, _dump(report))
    return path


def _eval_params(bundle: Bundle, cfg: ExperimentConfig | None, tau, B, eval_mode):
    raw = cfg.to_dict() if cfg is not None else bundle.config
    tau = float(raw["tau"] if tau is None else tau)
    B = int(raw["bootstrap"]["B"] if B is None else B)
    eval_mode = eval_mode or raw["eval_mode"]
    seed = int(raw["seed"])
    boot_seed = raw["bootstrap"].get("seed")
    boot_seed = seed + 5 if boot_seed is None else int(boot_seed)
    return raw, tau, B, eval_mode, boot_seed, int(raw.get("n_bins", 10))


def cmd_evaluate(bundle_dir, cfg: ExperimentConfig | None = None, *, tau=None, B=None,
                 eval_mode=None) -> dict:
    """Evaluate the internal test split recorded in the bundle."""
    bundle = load_bundle(bundle_dir)
    raw, tau, B, eval_mode, boot_seed, n_bins = _eval_params(bundle, cfg, tau, B, eval_mode)
    schema = load_schema(bundle.config["primary"]["schema"])
    path = bundle.config["primary"]["csv"]
    if not Path(path).is_file():
        raise DataError(f"primary dataset not found: {path}")
    ds = load_csv(path, schema, provenance="primary")
    if ds.fingerprint() != bundle.manifest["data"]["primary_fingerprint"]:
        raise DataError("primary dataset differs from the one the bundle was trained on")
    record = json.loads((bundle.root / "split.json").read_text(encoding="utf-8"))
    test = split_from_indices(ds, record).test
    fx = apply_pipeline(bundle.pipeline, test)
    if eval_mode == "balanced":
        fx = balanced_undersample(fx, int(raw["seed"]) + 6)
    report, curves = evaluate_features(bundle, fx, "internal", tau=tau, B=B, seed=boot_seed,
                                       n_bins=n_bins, eval_mode=eval_mode)
    _write_report(bundle, report, curves)
    return report


def cmd_external_validate(bundle_dir, cfg: ExperimentConfig | None = None, *, tau=None,
                          B=None, mapping=None) -> dict:
    """Apply the frozen bundle to the external cohort; nothing is refit or resampled."""
    bundle = load_bundle(bundle_dir)
    raw, tau, B, _, boot_seed, n_bins = _eval_params(bundle, cfg, tau, B, "natural")
    ext = raw.get("external") or {}
    if not ext.get("csv"):
        raise ConfigError("no external dataset configured")
    schema = load_schema(ext["schema"])
    if not Path(ext["csv"]).is_file():
        raise DataError(f"external dataset not found: {ext['csv']}")
    ds = load_csv(ext["csv"], schema, provenance="external")
    fmap = load_mapping(mapping) if mapping else None
    fx = apply_pipeline(bundle.pipeline, ds, fmap)
    report, curves = evaluate_features(bundle, fx, "external", tau=tau, B=B, seed=boot_seed,
                                       n_bins=n_bins, eval_mode="natural")
    report["harmonization"] = {
        "mapping": (fmap or bundle.pipeline.mapping).to_dict()
        if (fmap or bundle.pipeline.mapping) else None,
        "fingerprint": ds.fingerprint(),
    }
    _write_report(bundle, report, curves)
    return report


ATTENUATION_METRICS = ("auroc", "auprc", "brier", "cal_slope", "cal_intercept")
THRESHOLD_METRICS = ("accuracy", "precision", "recall", "f1")


def attenuation_table(internal: dict, external: dict) -> dict:
    """External minus internal value, per hybrid and metric."""
    out = {}
    for name in internal["models"]:
        if name not in external["models"]:
            continue
        a, b = internal["models"][name], external["models"][name]
        row = {}
        for k in ATTENUATION_METRICS:
            if a.get(k) is not None and b.get(k) is not None:
                row[k] = b[k] - a[k]
        for k in THRESHOLD_METRICS:
            row[k] = b["thresholded"][k] - a["thresholded"][k]
        out[name] = row
    gaps = {}
    names = list(internal["models"])
    if len(names) == 2:
        x, y = names
        for cohort, rep in (("internal", internal), ("external", external)):
            gaps[cohort] = {k: rep["models"][x][k] - rep["models"][y][k]
                            for k in ("auroc", "auprc")}
    return {"delta": out, "between_model_gap": gaps, "pair": names}


def _read_curve(path: Path):
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))[1:]
    a = np.array([[float(v) for v in r] for r in rows])
    return a[:, 0], a[:, 1]


def cmd_report(bundle_dir) -> str:
    """Render SVG plots and the internal -> external attenuation table."""
    root = Path(bundle_dir)
    rdir = root / "reports"
    reports = {}
    for cohort in ("internal", "external"):
        p = rdir / f"{cohort}.json"
        if p.is_file():
            reports[cohort] = json.loads(p.read_text(encoding="utf-8"))
    if not reports:
        raise MissingReports(f"no evaluation reports under {rdir}; run evaluate first")
    from . import plots

    lines = ["# Evaluation summary", ""]
    for cohort, rep in reports.items():
        roc, pr, rel = {}, {}, {}
        for name, m in rep["models"].items():
            fx, ty = _read_curve(rdir / "curves" / f"{cohort}__{name}__roc.csv")
            rx, py = _read_curve(rdir / "curves" / f"{cohort}__{name}__pr.csv")
            roc[name] = (fx, ty, m["auroc"])
            pr[name] = (np.r_[0.0, rx], np.r_[py[0], py], m["auprc"])
            rel[name] = m["reliability"]
        write_atomic(rdir / f"{cohort}_roc.svg", plots.roc_svg(roc, f"ROC ({cohort})"))
        write_atomic(rdir / f"{cohort}_pr.svg",
                     plots.pr_svg(pr, rep["pr_baseline"], f"Precision-recall ({cohort})"))
        write_atomic(rdir / f"{cohort}_reliability.svg",
                     plots.reliability_svg(rel, f"Reliability ({cohort})"))
        lines += [f"## {cohort} (n={rep['n']}, prevalence={rep['prevalence']:.3f}, "
                  f"PR baseline={rep['pr_baseline']:.3f})", "",
                  "| model | AUROC [95% CI] | AUPRC [95% CI] | Brier | slope | intercept "
                  "| acc | prec | rec | F1 |",
                  "|---|---|---|---|---|---|---|---|---|---|"]
        for name, m in rep["models"].items():
            t = m["thresholded"]
            fmt = lambda v: "n/a" if v is None else f"{v:.3f}"  # noqa: E731
            lines.append(
                f"| {name} | {m['auroc']:.3f} [{m['auroc_ci'][0]:.3f}, {m['auroc_ci'][1]:.3f}] "
                f"| {m['auprc']:.3f} [{m['auprc_ci'][0]:.3f}, {m['auprc_ci'][1]:.3f}] "
                f"| {m['brier']:.3f} | {fmt(m['cal_slope'])} | {fmt(m['cal_intercept'])} "
                f"| {t['accuracy']:.3f} | {t['precision']:.3f} | {t['recall']:.3f} "
                f"| {t['f1']:.3f} |")
        if rep.get("tests"):
            d, mc = rep["tests"]["delong"], rep["tests"]["mcnemar"]
            lines += ["", f"DeLong {' vs '.join(rep['tests']['pair'])}: "
                      f"dAUC={d['delta_auc']:.4f}, p={d['p']:.3g}; "
                      f"McNemar b={mc['b']}, c={mc['c']}, stat={mc['statistic']:.3f}, "
                      f"p={mc['p']:.3g}"]
        lines.append("")
    if len(reports) == 2:
        table = attenuation_table(reports["internal"], reports["external"])
        write_atomic(rdir / "attenuation.json", _dump(_jsonable(table)))
        cols = ATTENUATION_METRICS + THRESHOLD_METRICS
        lines += ["## Attenuation (external - internal)", "",
                  "| model | " + " | ".join(cols) + " |", "|---" * (len(cols) + 1) + "|"]
        for name, row in table["delta"].items():
            lines.append(f"| {name} | " + " | ".join(
                f"{row[c]:+.3f}" if c in row else "n/a" for c in cols) + " |")
        for cohort, g in table["between_model_gap"].items():
            lines.append(f"\nBetween-model gap ({cohort}): "
                         f"AUROC {g['auroc']:+.3f}, AUPRC {g['auprc']:+.3f}")
    else:
        lines.append("Attenuation table omitted: only one cohort has been evaluated.")
    text = "\n".join(lines) + "\n"
    write_atomic(rdir / "summary.md", text)
    return text
