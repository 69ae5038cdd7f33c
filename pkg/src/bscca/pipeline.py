"""File-level workflows behind the command line: simulate, fit, evaluate, diagnose."""

from __future__ import annotations

import csv
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .cca import InferenceSummary, Model, PosteriorDraws, align_signs, combined_select, summarize
from .data import DataViews, standardize
from .diagnostics import autocorrelation, effective_sample_size
from .errors import InputError, StorageError
from .gibbs import ChainConfig, run_chain
from .io import read_json, read_matrix_csv, read_views, write_json, write_matrix_csv
from .metrics import Block, BlockLabels, ReplicateResult, label_blocks, rmce, rmse_cc, bias_cc, selection_rates
from .simulate import AR_RHO, PhiKind, build_setting, generate, true_cca

__all__ = [
    "FitResult",
    "simulate_to_dir",
    "fit_views",
    "write_fit",
    "fit_files",
    "fit_replicates",
    "trace_diagnostics",
    "diagnose_file",
    "evaluate_dirs",
    "METRIC_COLUMNS",
    "ESS_TARGET",
]

log = logging.getLogger(__name__)

ESS_TARGET = 1000
MAX_ACF_LAG = 50
METRIC_COLUMNS = [
    "setting",
    "model",
    "rmse_cc1",
    "rmse_cc2",
    "bias_cc1",
    "bias_cc2",
    "rmce_u",
    "rmce_v",
    "sel_block1",
    "sel_block2",
    "sel_block3",
    "overshrink_rate",
]


def _rep_name(r: int) -> str:
    return f"rep_{r + 1:03d}"


def simulate_to_dir(setting_id: int, replicates: int, seed: int, out_dir) -> list[Path]:
    """Write ``replicates`` synthetic data sets plus the truth of one setting.

    Replicate ``r`` (0-based) is generated from seed ``seed + r`` and stored in
    ``out_dir/rep_{r+1:03d}/``. Returns the replicate directories.
    """
    if int(replicates) != replicates or replicates < 1:
        raise InputError("replicates must be a positive integer")
    setting = build_setting(setting_id)
    triples = true_cca(setting, r_max=2)
    blocks_u = label_blocks(setting, triples[0].u, 1)
    blocks_v = label_blocks(setting, triples[0].v, 2)
    truth = {
        "setting": setting.id,
        "n": setting.n,
        "p1": setting.p1,
        "p2": setting.p2,
        "d_true": setting.d_true,
        "phi_kind": setting.phi_kind.value,
        "ar_rho": list(AR_RHO) if setting.phi_kind is PhiKind.AR else None,
        "scale": setting.scale,
        "loading_seed": setting.seed,
        "a1": setting.a1_true,
        "a2": setting.a2_true,
        "rho": [t.rho for t in triples],
        "cca": [{"order": t.order, "rho": t.rho, "u": t.u, "v": t.v} for t in triples],
        "blocks_u": blocks_u.block,
        "blocks_v": blocks_v.block,
        "block_counts": {
            f"view{m}": {b.name.lower(): c for b, c in lab.counts().items()}
            for m, lab in ((1, blocks_u), (2, blocks_v))
        },
        "replicates": int(replicates),
        "seed": int(seed),
    }
    out_dir = Path(out_dir)
    write_json(out_dir / "truth.json", truth)
    names1 = [f"x1_{j + 1}" for j in range(setting.p1)]
    names2 = [f"x2_{j + 1}" for j in range(setting.p2)]
    dirs = []
    for r in range(int(replicates)):
        data = generate(setting, np.random.default_rng(seed + r))
        rep = out_dir / _rep_name(r)
        write_matrix_csv(rep / "x1.csv", data.x1, names1)
        write_matrix_csv(rep / "x2.csv", data.x2, names2)
        write_json(rep / "truth.json", {**truth, "replicate": r + 1, "data_seed": int(seed + r)})
        dirs.append(rep)
    log.info("wrote %d replicates of setting %d to %s", replicates, setting_id, out_dir)
    return dirs


@dataclass
class FitResult:
    requested: str
    summary: InferenceSummary
    draws: PosteriorDraws
    ndfsm_p_overshrink: float | None
    switched: bool
    meta: dict[str, Any] = field(default_factory=dict)


def fit_views(data: DataViews, model: str, config: ChainConfig, standardize_data: bool = True) -> FitResult:
    """Fit one data set with ``model`` in {"ndfsm", "dfsm", "auto"}.

    ``auto`` runs NDFSM first and adds a DFSM run (same seed) only when the
    NDFSM posterior puts more than half its mass on ``rho_1 < 0.2``.
    """
    model = model.lower()
    if model not in ("ndfsm", "dfsm", "auto"):
        raise InputError(f"model must be ndfsm, dfsm or auto, got {model!r}")
    if standardize_data and not data.standardized:
        data = standardize(data)
    if model == "dfsm":
        draws = align_signs(run_chain(data, replace(config, model=Model.DFSM)))
        return FitResult(model, summarize(draws), draws, None, False, dict(draws.meta))
    nd = align_signs(run_chain(data, replace(config, model=Model.NDFSM)))
    nd_sum = summarize(nd)
    if model == "ndfsm":
        return FitResult(model, nd_sum, nd, nd_sum.p_overshrink, False, dict(nd.meta))
    dfsm_draws = None
    chosen = nd_sum
    if nd_sum.p_overshrink > 0.5:
        dfsm_draws = align_signs(run_chain(data, replace(config, model=Model.DFSM)))
        chosen = combined_select(nd_sum, summarize(dfsm_draws))
    switched = chosen.model_used is Model.DFSM
    used = dfsm_draws if switched else nd
    return FitResult(model, chosen, used, nd_sum.p_overshrink, switched, dict(used.meta))


def trace_diagnostics(columns: dict[str, np.ndarray]) -> dict[str, Any]:
    """ESS and autocorrelations for each named trace, plus threshold warnings."""
    out: dict[str, Any] = {"series": {}, "warnings": []}
    for name, values in columns.items():
        values = np.asarray(values, dtype=float)
        try:
            ess = effective_sample_size(values)
        except InputError as exc:
            raise InputError(f"trace {name!r}: {exc}") from None
        lag = min(MAX_ACF_LAG, math.ceil(values.size / 2) - 1)
        out["series"][name] = {
            "n": int(values.size),
            "ess": ess,
            "acf": autocorrelation(values, lag),
        }
    if "rho1" in out["series"] and out["series"]["rho1"]["ess"] < ESS_TARGET:
        msg = f"ESS of rho1 is {out['series']['rho1']['ess']:.1f}, below {ESS_TARGET}"
        out["warnings"].append(msg)
        log.warning(msg)
    return out


def _trace_columns(draws: PosteriorDraws) -> dict[str, np.ndarray]:
    cols = {f"rho{r + 1}": draws.rho[:, r] for r in range(draws.rho.shape[1])}
    cols["loglik"] = draws.loglik
    cols["logdet"] = draws.logdet
    return cols


def write_fit(out_dir, result: FitResult, data: DataViews) -> None:
    out_dir = Path(out_dir)
    draws = result.draws
    traces = _trace_columns(draws)
    names = list(traces) + [f"u_{n}" for n in data.feature_names_1] + [f"v_{n}" for n in data.feature_names_2]
    mat = np.column_stack([*traces.values(), draws.u, draws.v])
    write_matrix_csv(out_dir / "draws.csv", mat, names)
    summary = result.summary.to_dict()
    summary.update(
        requested_model=result.requested,
        ndfsm_p_overshrink=result.ndfsm_p_overshrink,
        switched=result.switched,
        feature_names_1=data.feature_names_1,
        feature_names_2=data.feature_names_2,
        n_draws=draws.n_draws,
        chain=result.meta,
    )
    write_json(out_dir / "summary.json", summary)
    write_json(out_dir / "diagnostics.json", trace_diagnostics(traces))


def fit_files(view1, view2, model: str, config: ChainConfig, out_dir, standardize_data: bool = True) -> FitResult:
    data = read_views(view1, view2)
    result = fit_views(data, model, config, standardize_data)
    write_fit(out_dir, result, data)
    return result


def _fit_task(args):
    rep_dir, model, config, out, std = args
    fit_files(rep_dir / "x1.csv", rep_dir / "x2.csv", model, config, out, std)
    return out


def fit_replicates(
    sim_dir, model: str, config: ChainConfig, out_dir, jobs: int = 1, standardize_data: bool = True
) -> list[Path]:
    """Fit every ``rep_*`` directory of a simulation; replicate ``k`` uses seed ``config.seed + k``."""
    sim_dir, out_dir = Path(sim_dir), Path(out_dir)
    reps = sorted(p for p in sim_dir.glob("rep_*") if p.is_dir())
    if not reps:
        raise StorageError(f"{sim_dir}: no replicate directories found")
    if jobs < 1:
        raise InputError("jobs must be positive")
    tasks = [
        (rep, model, replace(config, seed=config.seed + k), out_dir / rep.name, standardize_data)
        for k, rep in enumerate(reps)
    ]
    if jobs == 1:
        return [_fit_task(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_fit_task, tasks))


def diagnose_file(draws_path, out_path=None) -> dict[str, Any]:
    """Diagnostics of the scalar traces (``rho*``, ``loglik``, ``logdet``) in a draws CSV."""
    mat, header = read_matrix_csv(draws_path)
    cols = {
        name: mat[:, j]
        for j, name in enumerate(header)
        if name.startswith("rho") or name in ("loglik", "logdet")
    }
    if not cols:
        raise InputError(f"{draws_path}: no trace columns (rho*, loglik, logdet) found")
    report = trace_diagnostics(cols)
    if out_path is not None:
        write_json(out_path, report)
    return report


def _expand_fit_dirs(fit_dirs: Sequence) -> list[Path]:
    out = []
    for d in fit_dirs:
        d = Path(d)
        if (d / "summary.json").is_file():
            out.append(d)
            continue
        subs = sorted(p for p in d.iterdir() if (p / "summary.json").is_file()) if d.is_dir() else []
        if not subs:
            raise StorageError(f"{d}: no summary.json found")
        out.extend(subs)
    return out


def evaluate_dirs(truth_dir, fit_dirs: Sequence, out_path=None) -> list[dict[str, Any]]:
    """Aggregate fit summaries against the truth into one metrics row per requested model."""
    truth_path = Path(truth_dir)
    if truth_path.is_dir():
        truth_path = truth_path / "truth.json"
    if not truth_path.is_file():
        raise StorageError(f"{truth_path}: truth file not found")
    truth = read_json(truth_path)
    try:
        rho_true = truth["rho"]
        u_true = np.asarray(truth["cca"][0]["u"], dtype=float)
        v_true = np.asarray(truth["cca"][0]["v"], dtype=float)
        labels_u = BlockLabels(truth["blocks_u"])
        labels_v = BlockLabels(truth["blocks_v"])
    except (KeyError, IndexError, TypeError) as exc:
        raise InputError(f"{truth_path}: malformed truth ({exc})") from None

    groups: dict[str, list[dict]] = {}
    for d in _expand_fit_dirs(fit_dirs):
        summ = read_json(d / "summary.json")
        groups.setdefault(str(summ.get("requested_model", summ.get("model_used", "unknown"))), []).append(summ)

    rows = []
    for model in sorted(groups):
        summs = groups[model]
        results = []
        for s in summs:
            res = ReplicateResult.from_summary(InferenceSummary.from_dict(s))
            if res.u_hat.size != u_true.size or res.v_hat.size != v_true.size:
                raise InputError("fit dimensions do not match the truth")
            results.append(res)
        row: dict[str, Any] = {"setting": truth.get("setting", ""), "model": model}
        for r in (0, 1):
            est = [res.rho_hat[r] for res in results if res.rho_hat.size > r]
            ok = est and r < len(rho_true)
            row[f"rmse_cc{r + 1}"] = rmse_cc(est, rho_true[r]) if ok else float("nan")
            row[f"bias_cc{r + 1}"] = bias_cc(est, rho_true[r]) if ok else float("nan")
        row["rmce_u"] = rmce([res.u_hat for res in results], u_true)
        row["rmce_v"] = rmce([res.v_hat for res in results], v_true)
        rates = selection_rates(results, labels_u, labels_v)
        for b in Block:
            row[f"sel_block{b.value}"] = rates[b]
        p_over = [s["ndfsm_p_overshrink"] for s in summs if s.get("ndfsm_p_overshrink") is not None]
        row["overshrink_rate"] = float(np.mean([p > 0.5 for p in p_over])) if p_over else float("nan")
        rows.append(row)

    if out_path is not None:
        out_path = Path(out_path)
        try:
            out_path.parent.mkdir(parents=True, exist_ok=True)
            with out_path.open("w", newline="", encoding="utf-8") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(METRIC_COLUMNS)
                for row in rows:
                    w.writerow([_cell(row[c]) for c in METRIC_COLUMNS])
        except OSError as exc:
            raise StorageError(f"{out_path}: cannot write ({exc})") from exc
    return rows


def _cell(x) -> str:
    if isinstance(x, float):
        return "nan" if math.isnan(x) else repr(x)
    return str(x)
