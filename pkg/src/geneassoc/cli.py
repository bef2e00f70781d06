"""Command-line entry point: preprocess, select, analyze, evaluate, synth.

Every command writes deterministic, per-cohort or per-problem files under
``--out`` and prints a JSON summary. The exit code is 0 iff nothing failed.
"""

from __future__ import annotations

import argparse
import glob
import json
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from . import metrics
from .cohort import CohortRecord, csv_header, judge_usability, read_linked_csv, select_cohort, select_pair, write_linked_csv
from .errors import GeneAssocError, InvalidConfig, InvalidInput, NoUsableCohort
from .genes import load_synonym_dict
from .pipeline import CONFIG_NAME, preprocess_cohort
from .scenario import problem_key, write_scenario
from .stats.analysis import AGE_GENDER
from .stats import AnalysisSettings, GTAProblem, RegressionResult, run_gta_analysis
from .stats.lmm import DELTA_GRID
from .stats.tuning import DEFAULT_LAMBDA_GRID

log = logging.getLogger("geneassoc")

SOURCES = ("GEO", "TCGA")


@dataclass
class RunConfig:
    data_root: str = "."
    out: str = "out"
    seed: int = 0
    lambda_grid: tuple = tuple(float(v) for v in DEFAULT_LAMBDA_GRID)
    folds: int = 5
    gap_t: int = 10
    missing_threshold: float = 0.20
    rotate_y: bool = True
    jobs: int = 1

    def __post_init__(self):
        self.lambda_grid = tuple(float(v) for v in self.lambda_grid)
        if self.folds < 2:
            raise InvalidConfig("folds must be at least 2")
        if not self.lambda_grid or any(not math.isfinite(v) or v <= 0 for v in self.lambda_grid):
            raise InvalidConfig("lambda grid must hold positive finite values")
        if not 0 <= self.missing_threshold <= 1:
            raise InvalidConfig("missing threshold must lie in [0, 1]")
        if self.gap_t < 1 or self.jobs < 1:
            raise InvalidConfig("gap-t and jobs must be positive")

    def settings(self) -> AnalysisSettings:
        return AnalysisSettings(
            lambda_grid=self.lambda_grid, delta_grid=DELTA_GRID, folds=self.folds, seed=self.seed,
            gap_t=self.gap_t, rotate_y=self.rotate_y,
        )


def error_json(exc: BaseException, **context) -> dict:
    if isinstance(exc, GeneAssocError):
        d = exc.to_json()
    elif isinstance(exc, OSError):
        d = {"error": "IOError", "message": str(exc)}
    else:
        d = {"error": type(exc).__name__, "message": str(exc)}
    d.update(context)
    return d


def _clean(obj):
    """JSON-safe copy: numpy scalars to Python, NaN/inf to null."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def write_json(path, obj) -> None:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(_clean(obj), fh, indent=2, sort_keys=True, allow_nan=False)
        fh.write("\n")


def read_json(path):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def _map(fn: Callable, items: Sequence, jobs: int) -> list:
    if jobs <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


# preprocess


def find_cohorts(data_root) -> list[tuple[str, str, str]]:
    """(source, trait, cohort dir) for every directory holding a cohort config, sorted."""
    found = []
    for source in SOURCES:
        for cfg in glob.glob(os.path.join(data_root, source, "*", "*", CONFIG_NAME)):
            d = os.path.dirname(cfg)
            found.append((source, os.path.basename(os.path.dirname(d)), d))
    return sorted(found)


def _preprocess_one(args) -> dict:
    cohort_dir, trait, out, synonyms_path, threshold = args
    cid = os.path.basename(cohort_dir)
    synonyms = None
    if synonyms_path:
        try:
            synonyms = load_synonym_dict(synonyms_path)
        except (OSError, GeneAssocError) as exc:
            return {"cohort": f"{trait}/{cid}", "failure": error_json(exc, cohort=f"{trait}/{cid}")}
    res = preprocess_cohort(cohort_dir, synonyms, threshold)
    cid = res.record.id or cid
    key = f"{trait}/{cid}"
    base = os.path.join(out, "preprocessed", trait, cid)
    write_json(base + ".json", res.record.to_json())
    if res.dataset is not None:
        write_linked_csv(base + ".csv", res.dataset)
    failure = None
    if res.error is not None:
        failure = error_json(res.error, cohort=key)
        write_json(base + ".error.json", failure)
    return {"cohort": key, "usable": judge_usability(res.record), "failure": failure}


def cmd_preprocess(cfg: RunConfig) -> tuple[dict, int]:
    syn = os.path.join(cfg.data_root, "synonyms.tsv")
    jobs = [(d, trait, cfg.out, syn if os.path.exists(syn) else None, cfg.missing_threshold)
            for _, trait, d in find_cohorts(cfg.data_root)]
    results = _map(_preprocess_one, jobs, cfg.jobs)
    failures = [r["failure"] for r in results if r["failure"]]
    summary = {
        "command": "preprocess",
        "cohorts": {r["cohort"]: r.get("usable", False) for r in results},
        "failures": failures,
    }
    write_json(os.path.join(cfg.out, "preprocessed", "summary.json"), summary)
    return summary, len(failures)


# problems and selection


def load_problems(cfg: RunConfig, trait: Optional[str], condition: Optional[str]) -> list[GTAProblem]:
    """Explicit --trait/--condition, else problems.json in the data root, else every preprocessed trait."""
    if trait:
        return [GTAProblem(trait, condition)]
    if condition:
        raise InvalidConfig("--condition needs --trait")
    path = os.path.join(cfg.data_root, "problems.json")
    if os.path.exists(path):
        return [GTAProblem(p["trait"], p.get("condition")) for p in read_json(path)]
    traits = sorted(os.path.basename(d) for d in glob.glob(os.path.join(cfg.out, "preprocessed", "*")) if os.path.isdir(d))
    return [GTAProblem(t) for t in traits]


def load_records(out, trait) -> list[CohortRecord]:
    paths = glob.glob(os.path.join(out, "preprocessed", trait, "*.json"))
    return sorted((CohortRecord.load(p) for p in paths if not p.endswith(".error.json")), key=lambda r: r.id)


def _csv_path(out, trait, cid) -> str:
    return os.path.join(out, "preprocessed", trait, f"{cid}.csv")


def _problem_json(problem: GTAProblem) -> dict:
    return {"trait": problem.trait, "condition": problem.condition}


def select_problem(cfg: RunConfig, problem: GTAProblem) -> dict:
    records = load_records(cfg.out, problem.trait)
    usable = {}
    for r in records:
        ok = judge_usability(r)
        if ok and problem.condition in AGE_GENDER:
            ok = problem.condition in csv_header(_csv_path(cfg.out, problem.trait, r.id))
        usable[f"{problem.trait}/{r.id}"] = ok
    trait_ok = [r for r in records if usable[f"{problem.trait}/{r.id}"]]
    out = {"problem": _problem_json(problem), "usable": usable}
    if problem.is_two_step:
        crecs = load_records(cfg.out, problem.condition)
        for r in crecs:
            usable[f"{problem.condition}/{r.id}"] = judge_usability(r)
        t, c = select_pair(trait_ok, [r for r in crecs if judge_usability(r)])
        out["selected"] = {"trait": t.id, "condition": c.id}
    else:
        out["selected"] = {"trait": select_cohort(trait_ok).id, "condition": None}
    return out


def cmd_select(cfg: RunConfig, problems: Iterable[GTAProblem]) -> tuple[dict, int]:
    summary = {"command": "select", "selected": {}, "failures": []}
    for problem in problems:
        path = os.path.join(cfg.out, "selection", f"{problem.key}.json")
        try:
            sel = select_problem(cfg, problem)
        except (GeneAssocError, OSError) as exc:
            err = error_json(exc, problem=_problem_json(problem))
            write_json(path, err)
            summary["failures"].append(err)
            continue
        write_json(path, sel)
        summary["selected"][problem.key] = sel["selected"]
    return summary, len(summary["failures"])


# analyze


def result_json(result: RegressionResult, problem: GTAProblem, selected: dict, seed: int) -> dict:
    sig = []
    for g in result.selected:
        entry = {"symbol": g.symbol, "coefficient": g.coefficient}
        if g.p_value is not None:
            entry.update(p_value=g.p_value, adjusted_p=g.adjusted_p)
        sig.append(entry)
    conds = []
    if result.condition_coefficients is not None:
        conds = [{"name": n, "coefficient": float(c)} for n, c in zip(result.condition_names, result.condition_coefficients)]
    return {
        "problem": _problem_json(problem),
        "model": result.model_kind,
        "best_lambda": result.best_lambda,
        "delta": result.delta,
        "batch_effect": result.batch_effect,
        "rotated": result.rotated,
        "significant_genes": sig,
        "conditions": conds,
        "scores": result.scores(),
        "cv": result.cv,
        "normalization": result.normalization,
        "cohorts": selected,
        "seed": seed,
    }


def _read_gene_list(path) -> list[str]:
    with open(path, encoding="utf-8") as fh:
        return [ln.strip() for ln in fh if ln.strip() and not ln.startswith("#")]


def _analyze_one(args) -> dict:
    cfg, problem = args
    out_path = os.path.join(cfg.out, "output", problem.trait, f"{problem.key}.json")
    try:
        sel_path = os.path.join(cfg.out, "selection", f"{problem.key}.json")
        sel = read_json(sel_path)
        if "error" in sel:
            raise NoUsableCohort(f"selection failed: {sel.get('message', sel['error'])}")
        picked = sel["selected"]
        trait_ds = read_linked_csv(_csv_path(cfg.out, problem.trait, picked["trait"]))
        cond_ds, known = None, None
        if problem.is_two_step:
            cond_ds = read_linked_csv(_csv_path(cfg.out, problem.condition, picked["condition"]))
            known = _read_gene_list(os.path.join(cfg.data_root, "condition_genes", f"{problem.condition}.txt"))
        result = run_gta_analysis(problem, trait_ds, cond_ds, known, cfg.settings())
        doc = result_json(result, problem, picked, cfg.seed)
        write_json(out_path, doc)
        return {"problem": problem.key, "model": doc["model"], "n_significant": len(doc["significant_genes"]), "failure": None}
    except (GeneAssocError, OSError, KeyError, ValueError) as exc:
        err = error_json(exc, problem=_problem_json(problem))
        write_json(out_path, err)
        return {"problem": problem.key, "failure": err}


def cmd_analyze(cfg: RunConfig, problems: Sequence[GTAProblem]) -> tuple[dict, int]:
    results = _map(_analyze_one, [(cfg, p) for p in problems], cfg.jobs)
    summary = {
        "command": "analyze",
        "results": {r["problem"]: {k: r[k] for k in ("model", "n_significant")} for r in results if not r["failure"]},
        "failures": [r["failure"] for r in results if r["failure"]],
    }
    return summary, len(summary["failures"])


# evaluate


def _outputs(root) -> dict[str, dict]:
    docs = {}
    for path in sorted(glob.glob(os.path.join(root, "output", "*", "*.json"))):
        docs[os.path.splitext(os.path.basename(path))[0]] = read_json(path)
    return docs


def _selections(root) -> dict[str, object]:
    sels = {}
    for path in sorted(glob.glob(os.path.join(root, "selection", "*.json"))):
        doc = read_json(path)
        s = doc.get("selected")
        sels[os.path.splitext(os.path.basename(path))[0]] = None if s is None else [s["trait"], s.get("condition")]
    return sels


def _cohort_records(root) -> dict[str, CohortRecord]:
    recs = {}
    for path in sorted(glob.glob(os.path.join(root, "preprocessed", "*", "*.json"))):
        if path.endswith(".error.json"):
            continue
        rec = CohortRecord.load(path)
        recs[f"{os.path.basename(os.path.dirname(path))}/{rec.id}"] = rec
    return recs


def gene_report(pred: dict, ref: dict) -> metrics.EvalReport:
    """Set and ranking metrics for one problem.

    A failed or empty prediction (no scored genes) carries no ranking, so its
    AUROC and enrichment score are 0.
    """
    ref_genes = [g["symbol"] for g in ref.get("significant_genes", [])]
    pred_genes = [g["symbol"] for g in pred.get("significant_genes", [])]
    p, r, f = metrics.set_prf(pred_genes, ref_genes)
    rep = metrics.EvalReport(precision=p, recall=r, f1=f)
    scores = pred.get("scores") or {}
    if not scores:
        if ref_genes:
            rep.auroc, rep.gsea_es = 0.0, 0.0
        return rep
    gl = metrics.GeneScoreList({k: float(v) for k, v in scores.items()}, set(scores) | set(ref_genes))
    try:
        rep.auroc = metrics.auroc(gl, ref_genes)
    except GeneAssocError:
        rep.auroc = None
    try:
        rep.gsea_es = metrics.gsea_es(gl, ref_genes)
    except GeneAssocError:
        rep.gsea_es = None
    return rep


def cohort_report(pred_csv, ref_csv) -> metrics.EvalReport:
    if not (os.path.exists(pred_csv) and os.path.exists(ref_csv)):
        return metrics.EvalReport(attribute_jaccard=0.0, sample_jaccard=0.0, csc=0.0)
    pds, rds = read_linked_csv(pred_csv), read_linked_csv(ref_csv)
    return metrics.EvalReport(
        attribute_jaccard=metrics.jaccard(pds.columns, rds.columns),
        sample_jaccard=metrics.jaccard(pds.sample_ids, rds.sample_ids),
        csc=metrics.csc(pds, rds),
    )


def cmd_evaluate(pred_root, ref_root, out) -> tuple[dict, str]:
    pred_out, ref_out = _outputs(pred_root), _outputs(ref_root)
    if set(pred_out) != set(ref_out):
        raise InvalidInput(f"problem keys differ: {sorted(set(pred_out) ^ set(ref_out))}")
    problems = {k: gene_report(pred_out[k], ref_out[k]) for k in sorted(ref_out)}

    # DF and DS only when the prediction tree has that stage at all
    pred_rec, ref_rec = _cohort_records(pred_root), _cohort_records(ref_root)
    df = metrics.df_f1({k: judge_usability(v) for k, v in pred_rec.items()},
                       {k: judge_usability(v) for k, v in ref_rec.items()}) if ref_rec and pred_rec else None
    cohorts = {}
    for key in sorted(ref_rec):
        if judge_usability(ref_rec[key]):
            trait, cid = key.split("/", 1)
            cohorts[key] = cohort_report(_csv_path(pred_root, trait, cid), _csv_path(ref_root, trait, cid))

    ref_sel, pred_sel = _selections(ref_root), _selections(pred_root)
    ds = metrics.ds_accuracy({k: v for k, v in pred_sel.items() if k in ref_sel}, ref_sel) if ref_sel and pred_sel else None

    summary = metrics.mean_report(list(problems.values()) + list(cohorts.values()))
    summary.df_f1, summary.ds_accuracy = df, ds
    report = {
        "problems": {k: v.to_json() for k, v in problems.items()},
        "cohorts": {k: v.to_json() for k, v in cohorts.items()},
        "summary": summary.to_json(),
    }
    rows = {**problems, **{f"cohort:{k}": v for k, v in cohorts.items()}, "mean": summary}
    table = metrics.format_table(rows)
    write_json(os.path.join(out, "evaluation", "report.json"), report)
    with open(os.path.join(out, "evaluation", "report.txt"), "w", encoding="utf-8") as fh:
        fh.write(table)
    return report, table


# argument handling


def _grid(text: str) -> tuple:
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file with any of the flags below; flags override it")
    common.add_argument("--data-root")
    common.add_argument("--out")
    common.add_argument("--seed", type=int)
    common.add_argument("--lambda-grid", type=_grid, help="comma-separated per-sample penalties")
    common.add_argument("--folds", type=int)
    common.add_argument("--gap-t", type=int)
    common.add_argument("--missing-threshold", type=float)
    common.add_argument("--rotate-y", dest="rotate_y", action=argparse.BooleanOptionalAction, default=None)
    common.add_argument("--jobs", type=int)
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="geneassoc", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("preprocess", parents=[common], help="raw cohorts -> linked CSVs and records")
    for name, text in (("select", "pick cohorts per problem"), ("analyze", "fit one regression per problem")):
        p = sub.add_parser(name, parents=[common], help=text)
        p.add_argument("--trait")
        p.add_argument("--condition")
    p = sub.add_parser("evaluate", parents=[common], help="compare outputs against a reference tree")
    p.add_argument("--reference", required=True, help="reference output root")
    p.add_argument("--predictions", help="prediction output root (default: --out)")
    sub.add_parser("synth", parents=[common], help="write a synthetic data root with reference outputs")
    return parser


def load_config(args: argparse.Namespace) -> RunConfig:
    values = {}
    if args.config:
        raw = read_json(args.config)
        known = {f.name for f in fields(RunConfig)}
        raw = {k.replace("-", "_"): v for k, v in raw.items()}
        unknown = set(raw) - known
        if unknown:
            raise InvalidConfig(f"unknown config keys: {sorted(unknown)}")
        values.update(raw)
    for f in fields(RunConfig):
        v = getattr(args, f.name, None)
        if v is not None:
            values[f.name] = v
    return RunConfig(**values)


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args)
        if args.command == "preprocess":
            summary, failures = cmd_preprocess(cfg)
        elif args.command == "select":
            summary, failures = cmd_select(cfg, load_problems(cfg, args.trait, args.condition))
        elif args.command == "analyze":
            summary, failures = cmd_analyze(cfg, load_problems(cfg, args.trait, args.condition))
        elif args.command == "evaluate":
            report, table = cmd_evaluate(args.predictions or cfg.out, args.reference, cfg.out)
            sys.stdout.write(table)
            return 0
        else:
            problems = write_scenario(cfg.data_root, cfg.seed)
            summary, failures = {"command": "synth", "data_root": cfg.data_root, "problems": problems}, 0
    except (GeneAssocError, OSError) as exc:
        json.dump(error_json(exc, command=args.command), sys.stdout, sort_keys=True)
        sys.stdout.write("\n")
        return 1
    json.dump(_clean(summary), sys.stdout, indent=2, sort_keys=True)
    sys.stdout.write("\n")
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
