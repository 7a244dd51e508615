"""Command-line entry point: ``pitchipw <subcommand> ...``.

Every subcommand accepts ``--config FILE`` (a JSON object of option
values, keyed by the long flag name with dashes or underscores); flags
given on the command line win over the file. Outputs embed a metadata
block and contain nothing time-dependent, so reruns are byte-identical.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
import warnings
from dataclasses import asdict
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd

from . import __version__
from .errors import MissingArtifact, PitchIPWError
from .io import FORMAT_VERSION, make_metadata, read_csv, read_json, write_csv, write_json

log = logging.getLogger("pitchipw")

THREADS_ENV = "PITCHIPW_THREADS"


class InputMissing(PitchIPWError):
    def __init__(self, path):
        super().__init__(f"input file not found: {path}")
        self.path = str(path)


# ---------------------------------------------------------------------------
# option plumbing


class Options:
    """Flag values merged over a JSON config file over built-in defaults."""

    def __init__(self, args: argparse.Namespace, defaults: dict[str, Any]):
        self._args = args
        self._defaults = defaults
        self._file: dict[str, Any] = {}
        if getattr(args, "config", None):
            path = _need(args.config)
            raw = json.loads(Path(path).read_text())
            self._file = {k.replace("-", "_"): v for k, v in raw.items()}
        self.used: dict[str, Any] = {}

    def __getattr__(self, name: str):
        if name.startswith("_"):
            raise AttributeError(name)
        value = getattr(self._args, name, None)
        if value is None:
            value = self._file.get(name, self._defaults.get(name))
        self.used[name] = value
        return value


def _need(path) -> Path:
    p = Path(path)
    if not p.exists():
        raise InputMissing(p)
    return p


def _threads(value) -> int:
    if value is not None:
        return max(1, int(value))
    return max(1, int(os.environ.get(THREADS_ENV, "1")))


def _floats(text) -> list[float]:
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    return [float(v) for v in str(text).split(",") if v.strip()]


def _params(opts: Options, *names: str) -> dict[str, Any]:
    """Parameter subset for the config hash; paths are deliberately left out."""
    out = {}
    for n in names:
        v = getattr(opts, n)
        out[n] = list(v) if isinstance(v, tuple) else v
    return out


def _finite(x: float):
    if isinstance(x, float) and not math.isfinite(x):
        return None if math.isnan(x) else ("inf" if x > 0 else "-inf")
    return x


def _clean(obj):
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating,)):
        return _finite(float(obj))
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, float):
        return _finite(obj)
    return obj


# ---------------------------------------------------------------------------
# subcommands


def cmd_ingest(args) -> None:
    from .ingest import FilterConfig, analysis_mask, events_to_frame, frame_for_output, parse_pitch_csv, player_counts

    opts = Options(args, {"strict": False})
    src = _need(args.input)
    schema = None
    if args.schema:
        schema = json.loads(_need(args.schema).read_text())
    filters = FilterConfig.from_dict(opts.filters or {})
    parsed = parse_pitch_csv(src, schema=schema, strict=bool(opts.strict))
    frame = events_to_frame(parsed.events)
    keep, reason = analysis_mask(frame, filters, player_counts(frame)) if len(frame) else (np.zeros(0, bool), np.zeros(0, object))
    out = frame_for_output(frame)
    out["analysis"] = keep.astype(int)
    out["filter_reason"] = reason
    config = {"filters": filters.to_dict(), "strict": bool(opts.strict), "schema": schema}
    meta = make_metadata(config, None, [src])
    write_csv(args.out, out, meta)
    rejected = pd.DataFrame({"line": [r.line for r in parsed.rejected], "reason": [r.reason for r in parsed.rejected]})
    write_csv(_sibling(args.out, "rejected"), rejected, meta)
    removed = pd.Series(reason[~keep]).value_counts().to_dict() if len(frame) else {}
    summary = {"parsed": len(parsed.events), "rejected": len(parsed.rejected),
               "analysis_set": int(keep.sum()), "removed": {k: int(v) for k, v in removed.items()}}
    write_json(_sibling(args.out, "summary", ".json"), summary, meta)
    _say(f"ingest: {summary['parsed']} events, {summary['rejected']} rejected, {summary['analysis_set']} in analysis set")


def _sibling(path, tag: str, suffix: str = ".csv") -> Path:
    p = Path(path)
    return p.with_name(f"{p.stem}.{tag}{suffix}")


def cmd_build_re(args) -> None:
    from .ingest import read_events
    from .valuation import build_re_table, event_values_from_frame

    opts = Options(args, {"by_count": False, "skip_incomplete": False, "include_runs_on_play": True})
    src = _need(args.events)
    frame = read_events(src)
    if opts.season is not None:
        frame = frame[frame["date"].dt.year == int(opts.season)].reset_index(drop=True)
    table = build_re_table(frame, by_count=bool(opts.by_count), skip_incomplete=bool(opts.skip_incomplete))
    config = _params(opts, "by_count", "skip_incomplete", "season", "include_runs_on_play")
    meta = make_metadata(config, None, [src])
    _write_table(args.out, table.to_frame(), table.to_dict(), meta)
    if args.event_values:
        ev = event_values_from_frame(frame, table, bool(opts.include_runs_on_play), bool(opts.skip_incomplete))
        _write_table(args.event_values, ev.to_frame(), ev.to_dict(), meta)
    _say(f"build-re: {table.n_states} states, RE(0 out, empty) = {table.values[0]:.4f}")


def _write_table(path, frame: pd.DataFrame, payload: dict, meta: dict) -> None:
    if str(path).endswith(".json"):
        write_json(path, payload, meta)
    else:
        write_csv(path, frame, meta)


def _read_re_table(path):
    from .valuation import RunExpectancyTable

    p = _need(path)
    if p.suffix == ".json":
        return RunExpectancyTable.from_dict(read_json(p))
    return RunExpectancyTable.from_frame(read_csv(p))


def cmd_featurize(args) -> None:
    from .features import FeatureConfig, WobaWeights, assemble_features
    from .ingest import read_events
    from .matrix import write_matrix

    opts = Options(args, {})
    src = _need(args.events)
    re_path = _need(args.re_table)
    base = dict(opts._file)
    for key in ("alphas", "index_mode", "lag_scope", "outcome", "strict"):
        v = getattr(args, key, None)
        if v is not None:
            base[key] = _floats(v) if key == "alphas" else v
    cfg = FeatureConfig.from_dict(base)
    weights = WobaWeights.load(_need(args.woba_weights) if args.woba_weights else None)
    inputs = [src, re_path] + ([args.woba_weights] if args.woba_weights else [])
    frame = read_events(src)
    result = assemble_features(frame, _read_re_table(re_path), cfg, weights)
    meta = make_metadata({"features": cfg.to_dict(), "woba": weights.to_dict()}, None, inputs)
    write_matrix(args.out, result.data, meta)
    _say(f"featurize: {len(result.data)} units ({int(result.data.z.sum())} inside), "
         f"{result.missing_aggregate} dropped for missing aggregates, {result.imputed_speed} speeds imputed")


def cmd_fit(args) -> None:
    from .matrix import read_matrix
    from .propensity import ForestHyperparams, save_model, train_forest

    opts = Options(args, {"trees": 130, "depth": 9, "min_leaf": 1, "features_per_split": 5, "seed": None})
    src = _need(args.matrix)
    seed = _seed(opts.seed)
    hp = ForestHyperparams(n_trees=int(opts.trees), max_depth=int(opts.depth), min_leaf=int(opts.min_leaf),
                           features_per_split=int(opts.features_per_split), seed=seed)
    data = read_matrix(src)
    model = train_forest(data.X, data.z, hp, unit_id=data.unit_id, feature_names=data.feature_names,
                         threads=_threads(args.threads))
    meta = make_metadata({"hyperparams": asdict(hp)}, seed, [src])
    save_model(args.out, model, meta)
    _say(f"fit: {hp.n_trees} trees, out-of-bag accuracy {model.oob_accuracy:.4f}")


def _seed(value) -> int:
    if value is not None:
        return int(value)
    seed = int(np.random.SeedSequence().entropy % (2**32))
    _say(f"no --seed given; using generated seed {seed} (recorded in output metadata)")
    return seed


def _load_scored(args, epsilon: float):
    """Matrix with clipped propensities, the model (or None) and the input list."""
    from .matrix import read_matrix
    from .propensity import clip_propensity, count_clipped, load_model

    src = _need(args.matrix)
    data = read_matrix(src)
    inputs = [src]
    model = None
    if getattr(args, "model", None):
        mpath = _need(args.model)
        model = load_model(mpath)
        raw = model.predict(data.X)
        inputs.append(mpath)
    elif getattr(args, "propensities", None):
        ppath = _need(args.propensities)
        table = read_csv(ppath)
        col = "p" if "p" in table.columns else "true_propensity"
        lookup = pd.Series(table[col].to_numpy(float), index=table["unit_id"].to_numpy())
        raw = lookup.reindex(data.unit_id).to_numpy(float)
        if np.isnan(raw).any():
            raise ValueError(f"{ppath} lacks propensities for some units")
        inputs.append(ppath)
    elif data.p is not None:
        raw = data.p
    else:
        raise ValueError("give --model or --propensities (the matrix has no p column)")
    clipped = count_clipped(raw, epsilon)
    return data.with_propensity(clip_propensity(raw, epsilon)), model, inputs, clipped


def cmd_estimate(args) -> None:
    from .estimate import bootstrap_ci, ipw_ate, naive_diff

    opts = Options(args, {"bootstrap": 2000, "level": 0.99, "seed": None, "epsilon": 0.01,
                          "cluster_by": None, "horvitz_thompson": False})
    seed = _seed(opts.seed)
    data, _, inputs, clipped = _load_scored(args, float(opts.epsilon))
    res = bootstrap_ci(data, B=int(opts.bootstrap), level=float(opts.level), seed=seed,
                       cluster_by_game=opts.cluster_by == "game", normalized=not opts.horvitz_thompson)
    naive = naive_diff(data.z, data.y)
    payload = {
        "estimator": "horvitz-thompson" if opts.horvitz_thompson else "hajek",
        "tau": res.tau_hat,
        "outside_minus_inside": -res.tau_hat,
        "ey1": res.ey1_hat,
        "ey0": res.ey0_hat,
        "ci": [res.ci_low, res.ci_high],
        "ci_centered": [res.ci_low_centered, res.ci_high_centered],
        "ci_outside_minus_inside": [-res.ci_high, -res.ci_low],
        "level": res.level,
        "n": {"treated": res.n_treated, "control": res.n_control},
        "ess": {"treated": res.ess_treated, "control": res.ess_control},
        "bootstrap": {"B": res.n_bootstrap, "seed": seed, "mean": res.boot_mean, "sd": res.boot_sd,
                      "redraws": res.redraws, "cluster_by": opts.cluster_by},
        "clipping": {"epsilon": float(opts.epsilon), "clipped_count": clipped},
        "naive": {"inside_minus_outside": naive.inside_minus_outside,
                  "outside_minus_inside": naive.outside_minus_inside,
                  "mean_inside": naive.mean_inside, "mean_outside": naive.mean_outside},
    }
    if args.manifest:
        from .synth import oracle_ate

        truth = oracle_ate(_need(args.manifest))
        payload["oracle"] = {"true_tau": truth, "ipw_error": res.tau_hat - truth,
                             "naive_error": naive.inside_minus_outside - truth}
        inputs.append(args.manifest)
    config = _params(opts, "bootstrap", "level", "epsilon", "cluster_by", "horvitz_thompson")
    write_json(args.out, _clean(payload), make_metadata(config, seed, inputs))
    _say(f"estimate: tau (inside - outside) = {res.tau_hat:.6f}, "
         f"{res.level:.0%} CI [{res.ci_low:.6f}, {res.ci_high:.6f}], naive {naive.inside_minus_outside:.6f}")


def cmd_stratify(args) -> None:
    from .estimate import stratified_ate

    opts = Options(args, {"bootstrap": 2000, "level": 0.99, "seed": None, "epsilon": 0.01, "min_n": 10_000,
                          "cluster_by": None})
    seed = _seed(opts.seed)
    if opts.by is None or opts.edges is None:
        raise ValueError("stratify needs --by and --edges")
    edges = _floats(opts.edges)
    data, _, inputs, clipped = _load_scored(args, float(opts.epsilon))
    results = stratified_ate(data, opts.by, edges, min_n=int(opts.min_n), B=int(opts.bootstrap),
                             level=float(opts.level), seed=seed, cluster_by_game=opts.cluster_by == "game")
    config = _params(opts, "by", "edges", "min_n", "bootstrap", "level", "epsilon", "cluster_by")
    config["edges"] = edges
    meta = make_metadata(config, seed, inputs)
    write_json(args.out, _clean({"strata": [r.to_dict() for r in results], "clipped_count": clipped}), meta)
    rows = []
    for r in results:
        a = r.ate
        rows.append({"feature": r.stratify_feature, "bin_lower": r.bin_lower, "bin_upper": r.bin_upper,
                     "n_units": r.n_units, "included": int(r.included), "reason": r.reason,
                     "tau": a.tau_hat if a else np.nan, "ci_low": a.ci_low if a else np.nan,
                     "ci_high": a.ci_high if a else np.nan})
    write_csv(Path(args.out).with_suffix(".csv"), pd.DataFrame(rows), meta)
    _say(f"stratify: {sum(r.included for r in results)} of {len(results)} bins included")


def cmd_diagnose(args) -> None:
    from .diagnostics import balance_report, importance_frame, overlap_histogram, permutation_importance
    from .plotting import plot_balance, plot_importance, plot_overlap

    opts = Options(args, {"bins": 20, "repeats": 5, "seed": None, "epsilon": 0.01, "threshold": 0.1,
                          "weighted_means_only": False})
    seed = _seed(opts.seed)
    data, model, inputs, _ = _load_scored(args, float(opts.epsilon))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    config = _params(opts, "bins", "repeats", "epsilon", "threshold", "weighted_means_only")
    meta = make_metadata(config, seed, inputs)
    bal = balance_report(data, float(opts.threshold), weighted_variance=not opts.weighted_means_only)
    write_csv(out / "balance.csv", bal.to_frame(), meta)
    plot_balance(bal, out / "balance.svg")
    hist = overlap_histogram(data, int(opts.bins))
    write_csv(out / "overlap.csv", hist.to_frame(), meta)
    plot_overlap(hist, out / "overlap.svg")
    if model is not None:
        imp = permutation_importance(model, data, int(opts.repeats), seed)
        write_csv(out / "importance.csv", importance_frame(imp), meta)
        plot_importance([i.feature for i in imp], [i.importance for i in imp], out / "importance.svg")
    else:
        _say("diagnose: no model given, importance skipped")
    _say(f"diagnose: max ASAM before {bal.max_before():.4f}, after {bal.max_after():.4f}; "
         f"{len(bal.failing())} feature(s) at or above {bal.threshold}")


def cmd_synth(args) -> None:
    from . import synth

    opts = Options(args, {"preset": "confounded-strong", "n": 50_000, "tau": 0.006, "seed": None,
                          "kind": "matrix", "innings": 100_000})
    seed = _seed(opts.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    kind = opts.kind
    if kind == "matrix":
        cfg = synth.preset_config(opts.preset, n_units=int(opts.n), true_tau=float(opts.tau), seed=seed)
        result = synth.generate(cfg)
        meta = make_metadata(_params(opts, "kind", "preset", "n", "tau"), seed)
        synth.write_synth(out, result, meta)
        _say(f"synth: {len(result.data)} units, preset {opts.preset}, true tau {result.manifest['true_tau']}")
    elif kind == "innings":
        frame = synth.generate_innings(synth.CALIBRATED_CHAIN, int(opts.innings), seed)
        meta = make_metadata(_params(opts, "kind", "innings"), seed)
        write_csv(out / "innings.csv", frame.assign(terminal=frame["terminal"].astype(int),
                                                     on_first=frame["on_first"].astype(int),
                                                     on_second=frame["on_second"].astype(int),
                                                     on_third=frame["on_third"].astype(int)), meta)
        _say(f"synth: {int(opts.innings)} half-innings, {len(frame)} pitches")
    elif kind == "season":
        from .ingest import EVENT_COLUMNS, frame_for_output

        frame = synth.simulate_season(synth.SeasonConfig(seed=seed))
        meta = make_metadata(_params(opts, "kind"), seed)
        write_csv(out / "pitches.csv", frame_for_output(frame)[EVENT_COLUMNS], meta)
        _say(f"synth: season of {frame['game_id'].nunique()} games, {len(frame)} pitches")
    else:
        raise ValueError(f"unknown synth kind {kind!r}")


REPORT_REQUIRED = ("estimate.json", "balance.csv", "overlap.csv")


def cmd_report(args) -> None:
    from .diagnostics import BalanceReport, OverlapHistogram
    from .plotting import plot_balance, plot_importance, plot_overlap, plot_strata

    res = Path(args.results)
    if not res.is_dir():
        raise InputMissing(res)
    missing = [name for name in REPORT_REQUIRED if not (res / name).exists()]
    if missing:
        raise MissingArtifact(f"{res} lacks {', '.join(missing)}")
    out = Path(args.out) if args.out else res
    out.mkdir(parents=True, exist_ok=True)
    est = read_json(res / "estimate.json")
    bal = BalanceReport.from_frame(read_csv(res / "balance.csv"))
    hist = OverlapHistogram.from_frame(read_csv(res / "overlap.csv"))
    plot_overlap(hist, out / "overlap.svg")
    plot_balance(bal, out / "balance.svg")
    figures = ["overlap.svg", "balance.svg"]
    if (res / "importance.csv").exists():
        imp = read_csv(res / "importance.csv")
        plot_importance(imp["feature"].tolist(), imp["importance"].tolist(), out / "importance.svg")
        figures.append("importance.svg")
    strata = None
    if (res / "strata.json").exists():
        strata = read_json(res / "strata.json")["strata"]
        inc = [s for s in strata if s["included"]]
        exc = [s for s in strata if not s["included"]]
        note = "; ".join(f"omitted {_bin_label(s)}: {s['reason']}" for s in exc)
        plot_strata([_bin_label(s) for s in inc], [s["ate"]["tau_hat"] for s in inc],
                    [s["ate"]["ci_low"] for s in inc], [s["ate"]["ci_high"] for s in inc],
                    out / "strata.svg", footnote=note)
        figures.append("strata.svg")
    text = render_summary(est, bal, strata, figures)
    (out / "summary.md").write_text(text)
    _say(f"report: wrote summary.md and {len(figures)} figure(s) to {out}")


def _bin_label(s: dict) -> str:
    return f"[{s['bin_lower']}, {s['bin_upper']})"


def _f(x, digits: int = 5) -> str:
    return "n/a" if x is None else f"{x:.{digits}f}"


def render_summary(est: dict, bal, strata, figures) -> str:
    lvl = est.get("level", 0.99)
    lines = ["# Inside vs outside demand: effect summary", ""]
    lines += [
        "## Total effect",
        "",
        f"Estimator: {est.get('estimator', 'hajek')} IPW. Outcome units: runs per pitch.",
        "",
        "| quantity | inside minus outside | outside minus inside |",
        "|---|---|---|",
        f"| IPW estimate | {_f(est['tau'], 6)} | {_f(est['outside_minus_inside'], 6)} |",
        f"| {lvl:.0%} CI | [{_f(est['ci'][0], 6)}, {_f(est['ci'][1], 6)}] | "
        f"[{_f(est['ci_outside_minus_inside'][0], 6)}, {_f(est['ci_outside_minus_inside'][1], 6)}] |",
        f"| naive difference | {_f(est['naive']['inside_minus_outside'], 6)} | "
        f"{_f(est['naive']['outside_minus_inside'], 6)} |",
        "",
        f"Units: {est['n']['treated']} inside, {est['n']['control']} outside. "
        f"Effective sample sizes: {est['ess']['treated']:.0f} inside, {est['ess']['control']:.0f} outside. "
        f"Propensities clipped at {est['clipping']['epsilon']}: {est['clipping']['clipped_count']} unit(s).",
        "",
    ]
    if "oracle" in est:
        o = est["oracle"]
        lines += [f"Ground truth from manifest: {o['true_tau']}; IPW error {_f(o['ipw_error'], 6)}, "
                  f"naive error {_f(o['naive_error'], 6)}.", ""]
    lines += ["## Covariate balance", "", f"Threshold: ASAM < {bal.threshold}.", "",
              "| feature | ASAM before | ASAM after | status |", "|---|---|---|---|"]
    for r in bal.rows:
        if r.degenerate:
            status = "constant feature, not assessed"
        elif r.passed:
            status = "pass"
        else:
            status = f"**FAIL** ({r.asam_after:.3f} vs {bal.threshold})"
        lines.append(f"| {r.name} | {_f(r.asam_before, 4)} | {_f(r.asam_after, 4)} | {status} |")
    failing = bal.failing()
    lines.append("")
    if failing:
        lines.append("Not balanced after weighting: " + ", ".join(f"{r.name} ({r.asam_after:.3f})" for r in failing) + ".")
    else:
        lines.append("All assessed features are balanced after weighting.")
    lines.append("")
    if strata is not None:
        lines += ["## Stratified effects", "", "| bin | n | inside minus outside | CI | note |", "|---|---|---|---|---|"]
        notes = []
        for s in strata:
            if s["included"]:
                a = s["ate"]
                lines.append(f"| {_bin_label(s)} | {s['n_units']} | {_f(a['tau_hat'], 6)} | "
                             f"[{_f(a['ci_low'], 6)}, {_f(a['ci_high'], 6)}] | |")
            else:
                notes.append(s["reason"])
                lines.append(f"| {_bin_label(s)} | {s['n_units']} | | | excluded [{len(notes)}] |")
        lines.append("")
        for k, reason in enumerate(notes, 1):
            lines.append(f"[{k}] {reason}")
        if notes:
            lines.append("")
    lines += ["## Figures", ""] + [f"- {name}" for name in figures] + [""]
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# parser


def _say(msg: str) -> None:
    print(msg, file=sys.stderr)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pitchipw", description="IPW effect of inside vs outside catcher demands.")
    p.add_argument("--version", action="version",
                   version=f"pitchipw {__version__} (file format {FORMAT_VERSION}, model format pitchipw-forest/1)")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, func, help_):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--config", help="JSON file of option values; flags override it")
        sp.set_defaults(func=func)
        return sp

    sp = add("ingest", cmd_ingest, "parse a pitch CSV, classify zones, mark the analysis set")
    sp.add_argument("--input", required=True)
    sp.add_argument("--out", required=True)
    sp.add_argument("--schema", help="JSON map from field name to CSV column")
    sp.add_argument("--strict", action="store_true", default=None)

    sp = add("build-re", cmd_build_re, "run-expectancy table (and optional event values)")
    sp.add_argument("--events", required=True)
    sp.add_argument("--out", required=True, help=".csv or .json")
    sp.add_argument("--event-values", help="also write the per-event value table here")
    sp.add_argument("--by-count", action="store_true", default=None, help="288 base-out-count states")
    sp.add_argument("--season", type=int)
    sp.add_argument("--skip-incomplete", action="store_true", default=None)
    sp.add_argument("--no-runs-on-play", dest="include_runs_on_play", action="store_false", default=None)

    sp = add("featurize", cmd_featurize, "build the 18-feature treatment matrix")
    sp.add_argument("--events", required=True)
    sp.add_argument("--re-table", required=True)
    sp.add_argument("--out", required=True)
    sp.add_argument("--woba-weights")
    sp.add_argument("--alphas", help="fast,slow confidence memory (default 0.6,0.001)")
    sp.add_argument("--confidence-index", dest="index_mode", choices=("literal", "contiguous"))
    sp.add_argument("--lag-scope", choices=("game", "plate_appearance"))
    sp.add_argument("--outcome", choices=("event_value", "occurrence"))
    sp.add_argument("--strict", action="store_true", default=None)

    sp = add("fit", cmd_fit, "train the random-forest propensity model")
    sp.add_argument("--matrix", required=True)
    sp.add_argument("--out", required=True)
    sp.add_argument("--trees", type=int)
    sp.add_argument("--depth", type=int)
    sp.add_argument("--min-leaf", type=int)
    sp.add_argument("--features-per-split", type=int)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--threads", type=int, help=f"default from ${THREADS_ENV} or 1")

    def scored(sp):
        sp.add_argument("--matrix", required=True)
        g = sp.add_mutually_exclusive_group()
        g.add_argument("--model")
        g.add_argument("--propensities", help="CSV with unit_id and p (or true_propensity)")
        sp.add_argument("--epsilon", type=float, help="propensity clipping (default 0.01)")
        sp.add_argument("--seed", type=int)

    sp = add("estimate", cmd_estimate, "IPW effect with bootstrap interval")
    scored(sp)
    sp.add_argument("--out", required=True)
    sp.add_argument("--bootstrap", type=int)
    sp.add_argument("--level", type=float)
    sp.add_argument("--cluster-by", choices=("game",))
    sp.add_argument("--horvitz-thompson", action="store_true", default=None)
    sp.add_argument("--manifest", help="synthetic manifest; adds the error against the true effect")

    sp = add("stratify", cmd_stratify, "IPW effect within bins of one confounder")
    scored(sp)
    sp.add_argument("--out", required=True, help="JSON path; a CSV is written next to it")
    sp.add_argument("--by")
    sp.add_argument("--edges", help="comma-separated bin edges; write --edges=-inf,0.3,0.34,inf when the first edge is negative")
    sp.add_argument("--min-n", type=int)
    sp.add_argument("--bootstrap", type=int)
    sp.add_argument("--level", type=float)
    sp.add_argument("--cluster-by", choices=("game",))

    sp = add("diagnose", cmd_diagnose, "balance, overlap and importance tables plus SVG charts")
    scored(sp)
    sp.add_argument("--out", required=True, help="output directory")
    sp.add_argument("--bins", type=int)
    sp.add_argument("--repeats", type=int)
    sp.add_argument("--threshold", type=float)
    sp.add_argument("--weighted-means-only", action="store_true", default=None)

    sp = add("synth", cmd_synth, "synthetic data with known ground truth")
    sp.add_argument("--out", required=True, help="output directory")
    sp.add_argument("--kind", choices=("matrix", "innings", "season"))
    sp.add_argument("--preset")
    sp.add_argument("--n", type=int)
    sp.add_argument("--tau", type=float)
    sp.add_argument("--innings", type=int)
    sp.add_argument("--seed", type=int)

    sp = add("report", cmd_report, "markdown summary and figures from a results directory")
    sp.add_argument("--results", required=True)
    sp.add_argument("--out", help="defaults to the results directory")
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if not args.verbose:
        warnings.simplefilter("ignore", UserWarning)
    try:
        args.func(args)
    except (PitchIPWError, ValueError, OSError, KeyError) as exc:
        err = {"error": type(exc).__name__, "message": str(exc), "command": args.command}
        path = getattr(exc, "path", None) or getattr(exc, "filename", None)
        if path:
            err["path"] = str(path)
        print(json.dumps(err), file=sys.stderr)
        return 2 if isinstance(exc, (InputMissing, FileNotFoundError)) else 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
