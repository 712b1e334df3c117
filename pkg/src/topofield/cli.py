"""Batch command-line surface.

One executable, subcommand style. Outputs are written only to paths given
by flags; with --json a single JSON result object goes to stdout. Exit
codes: 0 success, 1 domain error (message on stderr), 2 usage error.
"""

from __future__ import annotations

import argparse
import datetime as dt
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import gfs
from .errors import FormatError, TopofieldError
from .field import (
    FieldStack,
    NormStats,
    SplitSpec,
    compute_norm_stats,
    denormalize,
    normalize_stack,
)
from .fusion import LambdaMap, RegWeights, apply_residual, entropy_term, fuse, l_reg, mean_balance, tv
from .losses import GateSchedule, LossWeights, content_loss, hinge_d, hinge_g, loss_report, topo_loss
from .metrics import (
    BinSpec,
    kde_overlap,
    lambda_bin_analysis,
    make_eval_record,
    season_of,
    seasonal_summary,
)
from .persistence import (
    FILTRATION_CONFIG,
    PersistenceDiagram,
    bottleneck_distance,
    filter_by_persistence,
    read_diagram_csv,
    sublevel_persistence,
    write_diagram_csv,
)
from .structural import build_structural_stack
from .synthetic import ClimateSpec, generate_climate
from .temporal import LeadTime, build_sample, manifest_line, sample_lead_times, validate_split

THREADS_ENV = "TOPOFIELD_THREADS"


# ---------------------------------------------------------------------------
# Helpers


def _json_safe(obj):
    """Make a result object strictly JSON-serializable (finite numbers only)."""
    if isinstance(obj, dict):
        return {str(k): _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, float):
        if math.isnan(obj):
            return "nan"
        if math.isinf(obj):
            return "inf" if obj > 0 else "-inf"
        return obj
    if isinstance(obj, (np.floating, np.integer)):
        return _json_safe(obj.item())
    if isinstance(obj, dt.date):
        return obj.isoformat()
    return obj


def _emit(result: dict, args, human: str) -> None:
    if args.json:
        print(json.dumps(_json_safe(result), sort_keys=True))
    elif human:
        print(human)


def _parse_years(spec: str) -> frozenset[int]:
    """Year sets like "2010-2019" or "2010,2012,2014" (mixable)."""
    years: set[int] = set()
    for part in spec.split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part:
            lo, hi = part.split("-", 1)
            years.update(range(int(lo), int(hi) + 1))
        else:
            years.add(int(part))
    if not years:
        raise FormatError(f"no years in {spec!r}")
    return frozenset(years)


def _parse_date(s: str) -> dt.date:
    return dt.date.fromisoformat(s)


def _resolve_threads(args) -> int:
    if getattr(args, "threads", None):
        return args.threads
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            n = int(env)
        except ValueError as exc:
            raise FormatError(f"{THREADS_ENV} must be an integer, got {env!r}") from exc
        if n < 1:
            raise FormatError(f"{THREADS_ENV} must be at least 1, got {n}")
        return n
    return os.cpu_count() or 1


def _load_stats(path) -> NormStats:
    d = json.loads(Path(path).read_text())
    return NormStats(float(d["p1"]), float(d["p99"]))


def _single_channel(stack: FieldStack, what: str) -> FieldStack:
    if stack.channels != 1:
        raise FormatError(f"{what} must be a 1-channel stack, got {stack.channels} channels")
    return stack


def _pick_date(stack: FieldStack, date: dt.date | None, what: str) -> int:
    if date is None:
        if len(stack) != 1:
            raise FormatError(f"{what} holds {len(stack)} dates; pick one with --date")
        return 0
    idx = stack.index_of(date)
    if idx is None:
        raise FormatError(f"{what} has no field for {date.isoformat()}")
    return idx


def _scores_from_json(path) -> np.ndarray:
    data = json.loads(Path(path).read_text())
    return np.asarray(data, dtype=np.float64)


# ---------------------------------------------------------------------------
# Commands


def _cmd_stats(args) -> dict:
    stack = gfs.read_stack(args.input)
    split = SplitSpec(_parse_years(args.train_years), frozenset())
    stats = compute_norm_stats(stack, split)
    result = {"p1": stats.p1, "p99": stats.p99}
    if args.output:
        Path(args.output).write_text(json.dumps(result, sort_keys=True) + "\n")
    return result


def _cmd_normalize(args) -> dict:
    stack = gfs.read_stack(args.input)
    stats = _load_stats(args.stats)
    if args.invert:
        fields = [denormalize(stack.field(i, c), stats).values
                  for i in range(len(stack)) for c in range(stack.channels)]
        arr = np.stack(fields).reshape(stack.values.shape)
        out = FieldStack(stack.dates, arr)
    else:
        out = normalize_stack(stack, stats)
    gfs.write_stack(out, args.output)
    return {"n_fields": len(out), "output": str(args.output), "inverted": bool(args.invert)}


def _cmd_channels(args) -> dict:
    stack = _single_channel(gfs.read_stack(args.input), "channel input")
    if args.stats:
        stack = normalize_stack(stack, _load_stats(args.stats))
    out = build_structural_stack(stack, threads=_resolve_threads(args))
    gfs.write_stack(out, args.output)
    return {"n_fields": len(out), "channels": 4, "output": str(args.output)}


def _cmd_persistence(args) -> dict:
    stack = gfs.read_stack(args.input)
    if args.stats:
        stack = normalize_stack(stack, _load_stats(args.stats))
    idx = _pick_date(stack, args.date, "input stack")
    field = stack.field(idx, 0)
    dims = [args.dim] if args.dim is not None else [0, 1]
    diagrams = [sublevel_persistence(field, d) for d in dims]
    if args.min_persistence > 0:
        diagrams = [filter_by_persistence(pd, args.min_persistence) for pd in diagrams]
    if args.output:
        write_diagram_csv(args.output, diagrams)
    result = {
        "date": stack.dates[idx],
        "filtration": FILTRATION_CONFIG,
        "n_pairs": {str(pd.dim): len(pd) for pd in diagrams},
    }
    if args.output:
        result["output"] = str(args.output)
    return result


def _cmd_bottleneck(args) -> dict:
    da = read_diagram_csv(args.diagram_a)
    db = read_diagram_csv(args.diagram_b)
    dim = args.dim
    pa = da.get(dim, PersistenceDiagram(dim, ()))
    pb = db.get(dim, PersistenceDiagram(dim, ()))
    return {"dim": dim, "distance": bottleneck_distance(pa, pb)}


def _cmd_sample(args) -> dict:
    stack = gfs.read_stack(args.input)
    split = None
    if args.train_years:
        split = SplitSpec(
            _parse_years(args.train_years),
            _parse_years(args.test_years) if args.test_years else frozenset(),
        )
    lines = []
    records = []
    if args.count:
        rng = np.random.default_rng(args.seed)
        taus = sample_lead_times(args.count, args.seed + 1 if args.seed is not None else 1)
        dates = list(stack.dates)
        made = 0
        attempts = 0
        while made < args.count and attempts < args.count * 200:
            attempts += 1
            t = dates[int(rng.integers(0, len(dates)))]
            tau = taus[made]
            try:
                sample = build_sample(stack, t, tau)
            except TopofieldError:
                continue
            if split and args.role and not validate_split(sample, split, args.role):
                continue
            lines.append(manifest_line(sample))
            records.append({"target_date": t, "tau": tau.tau})
            made += 1
        if made < args.count:
            raise FormatError(f"only {made} of {args.count} samples constructible from this stack")
    else:
        if args.date is None or args.tau is None:
            raise FormatError("provide --date and --tau, or --count for batch sampling")
        sample = build_sample(stack, args.date, LeadTime(args.tau))
        if split and args.role and not validate_split(sample, split, args.role):
            raise FormatError("sample fails split validation for role " + args.role)
        lines.append(manifest_line(sample))
        records.append({"target_date": args.date, "tau": args.tau,
                        "inter_dates": list(sample.inter_dates),
                        "intra_dates": list(sample.intra_dates)})
    if args.output:
        Path(args.output).write_text("".join(line + "\n" for line in lines))
    return {"n_samples": len(lines), "samples": records}


def _cmd_fuse(args) -> dict:
    inter = _single_channel(gfs.read_stack(args.inter), "--inter")
    intra = _single_channel(gfs.read_stack(args.intra), "--intra")
    lam_stack = _single_channel(gfs.read_stack(args.lam), "--lambda")
    residual = _single_channel(gfs.read_stack(args.residual), "--residual") if args.residual else None
    if inter.dates != intra.dates:
        raise FormatError("--inter and --intra stacks cover different dates")
    out_fields = []
    for i, date in enumerate(inter.dates):
        li = lam_stack.index_of(date) if len(lam_stack) > 1 else 0
        if li is None:
            raise FormatError(f"--lambda has no map for {date.isoformat()}")
        fused = fuse(inter.field(i), intra.field(i), LambdaMap.of(lam_stack.field(li)))
        if residual is not None:
            ri = residual.index_of(date) if len(residual) > 1 else 0
            if ri is None:
                raise FormatError(f"--residual has no field for {date.isoformat()}")
            fused = apply_residual(fused, residual.field(ri))
        vals = np.clip(fused.values, 0.0, 1.0) if args.clamp else fused.values
        out_fields.append(vals)
    out = FieldStack(inter.dates, np.stack(out_fields)[:, None, :, :])
    gfs.write_stack(out, args.output)
    return {"n_fields": len(out), "clamped": bool(args.clamp), "output": str(args.output)}


def _cmd_regularize(args) -> dict:
    lam_stack = _single_channel(gfs.read_stack(args.lam), "--lambda")
    weights = RegWeights(args.eta1, args.eta2, args.eta3, args.target)
    per_date = []
    for i, date in enumerate(lam_stack.dates):
        lam = LambdaMap.of(lam_stack.field(i))
        per_date.append(
            {
                "date": date,
                "tv": tv(lam.level1),
                "entropy": entropy_term(lam.level1),
                "mean_balance": mean_balance(lam.level1, args.target),
                "l_reg": l_reg(lam, weights),
            }
        )
    return {
        "eta": [args.eta1, args.eta2, args.eta3],
        "lambda_target": args.target,
        "maps": per_date,
    }


def _cmd_losses(args) -> dict:
    pred = _single_channel(gfs.read_stack(args.pred), "--pred")
    truth = _single_channel(gfs.read_stack(args.truth), "--truth")
    pi = _pick_date(pred, args.date, "--pred")
    ti = _pick_date(truth, args.date, "--truth")
    p, t = pred.field(pi), truth.field(ti)
    content = content_loss(p, t)
    topo = topo_loss(t, p)
    adv = hinge_g(_scores_from_json(args.fake_scores)) if args.fake_scores else 0.0
    reg = 0.0
    if args.lam:
        lam_stack = _single_channel(gfs.read_stack(args.lam), "--lambda")
        li = _pick_date(lam_stack, args.date, "--lambda")
        reg = l_reg(LambdaMap.of(lam_stack.field(li)), RegWeights(args.eta1, args.eta2, args.eta3, args.target))
    weights = LossWeights(args.alpha, args.beta, args.gamma, args.delta)
    gate = GateSchedule(args.warmup, args.every)
    report = loss_report(content, adv, reg, topo, weights, args.step, gate)
    if args.real_scores and args.fake_scores:
        report["hinge_d"] = hinge_d(_scores_from_json(args.real_scores), _scores_from_json(args.fake_scores))
    return report


def _cmd_evaluate(args) -> dict:
    pred = _single_channel(gfs.read_stack(args.pred), "--pred")
    truth = _single_channel(gfs.read_stack(args.truth), "--truth")
    clim = _single_channel(gfs.read_stack(args.clim), "--clim")
    stats = _load_stats(args.stats)
    if pred.dates != truth.dates:
        raise FormatError("--pred and --truth stacks cover different dates")

    def clim_index(date: dt.date) -> int:
        if len(clim) == 1:
            return 0
        ci = clim.index_of(date)
        if ci is None:
            raise FormatError(f"--clim has no field for {date.isoformat()}")
        return ci

    def one(i: int):
        date = pred.dates[i]
        return make_eval_record(
            pred.field(i), truth.field(i), clim.field(clim_index(date)),
            stats, date, args.tau, with_overlap=args.overlap,
        )

    threads = _resolve_threads(args)
    indices = range(len(pred))
    if threads > 1 and len(pred) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            records = list(pool.map(one, indices))
    else:
        records = [one(i) for i in indices]
    records.sort(key=lambda r: (r.target_date, r.tau))

    rows = [
        {
            "target_date": r.target_date,
            "tau": r.tau,
            "season": r.season,
            "rmse": r.rmse,
            "psnr": r.psnr,
            "ssim": r.ssim,
            "acc": r.acc,
            "overlap": r.overlap,
        }
        for r in records
    ]
    if args.output:
        header = "target_date,tau,season,rmse,psnr,ssim,acc,overlap"
        lines = [header]
        for r in rows:
            lines.append(
                ",".join(
                    [
                        r["target_date"].isoformat(),
                        str(r["tau"]),
                        r["season"],
                        _csv_num(r["rmse"]),
                        _csv_num(r["psnr"]),
                        _csv_num(r["ssim"]),
                        _csv_num(r["acc"]),
                        "" if r["overlap"] is None else _csv_num(r["overlap"]),
                    ]
                )
            )
        Path(args.output).write_text("\n".join(lines) + "\n")
    result: dict = {"n_records": len(rows), "records": rows}
    if args.summary:
        summary = seasonal_summary(records)
        # season-level overlap pools every grid cell of the season's dates
        pools: dict[str, tuple[list, list]] = {}
        for i, date in enumerate(pred.dates):
            pool = pools.setdefault(season_of(date), ([], []))
            pool[0].append(denormalize(pred.field(i), stats).values.ravel())
            pool[1].append(denormalize(truth.field(i), stats).values.ravel())
        for season, (pk, tk) in pools.items():
            if season in summary:
                summary[season]["overlap"] = kde_overlap(np.concatenate(pk), np.concatenate(tk))
        result["seasonal_summary"] = summary
        _write_summary_csv(args.summary, summary)
    return result


def _csv_num(x: float) -> str:
    return format(float(x), ".17g")


def _write_summary_csv(path, summary: dict) -> None:
    lines = ["season,n,mean_rmse,std_rmse,mean_acc,overlap"]
    for season, row in summary.items():
        overlap = row.get("overlap", row["mean_overlap"])
        lines.append(
            ",".join(
                [
                    season,
                    str(row["n"]),
                    _csv_num(row["mean_rmse"]),
                    _csv_num(row["std_rmse"]),
                    _csv_num(row["mean_acc"]),
                    _csv_num(overlap) if not math.isnan(overlap) else "",
                ]
            )
        )
    Path(path).write_text("\n".join(lines) + "\n")


def _cmd_stratify(args) -> dict:
    lam_stack = _single_channel(gfs.read_stack(args.lam), "--lambda")
    rmse_stack = _single_channel(gfs.read_stack(args.rmse), "--rmse")
    li = _pick_date(lam_stack, args.date, "--lambda")
    ri = _pick_date(rmse_stack, args.date, "--rmse")
    bins = BinSpec(tuple(float(e) for e in args.bins.split(",")))
    row = lambda_bin_analysis(lam_stack.field(li), rmse_stack.field(ri), bins, season=args.season)
    labels = bins.labels
    if args.output:
        header = "season," + ",".join(f"median_{l}" for l in labels) + ",delta," + ",".join(
            f"n_{l}" for l in labels
        )
        med = ",".join("" if m is None else _csv_num(m) for m in row.medians)
        cnt = ",".join(str(c) for c in row.counts)
        Path(args.output).write_text(
            header + "\n" + f"{row.season or ''},{med},{_csv_num(row.delta)},{cnt}\n"
        )
    return {
        "season": row.season,
        "bins": list(labels),
        "medians": list(row.medians),
        "counts": list(row.counts),
        "delta": row.delta,
    }


def _cmd_synth(args) -> dict:
    spec_dict = json.loads(Path(args.spec).read_text())
    if args.seed is not None:
        spec_dict["seed"] = args.seed
    spec = ClimateSpec.from_dict(spec_dict)
    stack = generate_climate(spec)
    gfs.write_stack(stack, args.output)
    return {
        "n_fields": len(stack),
        "height": stack.height,
        "width": stack.width,
        "seed": spec.seed,
        "output": str(args.output),
    }


# ---------------------------------------------------------------------------
# Parser


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="topofield", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--json", action="store_true", help="print a single JSON result object")
        p.add_argument("--threads", type=int, default=None,
                       help=f"worker threads (default: {THREADS_ENV} or all cores)")
        p.add_argument("--config", metavar="PATH",
                       help="JSON file of flag defaults; explicit flags win")

    p = sub.add_parser("stats", help="compute normalization percentiles from training years")
    p.add_argument("--input", required=True)
    p.add_argument("--train-years", required=True, help='e.g. "2010-2019"')
    p.add_argument("--output", help="write {p1, p99} JSON here")
    common(p)

    p = sub.add_parser("normalize", help="apply (or invert) percentile normalization")
    p.add_argument("--input", required=True)
    p.add_argument("--stats", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--invert", action="store_true", help="map [0,1] back to kelvin")
    common(p)

    p = sub.add_parser("channels", help="build the 4-channel structural stack")
    p.add_argument("--input", required=True)
    p.add_argument("--stats", help="normalize first with these percentiles")
    p.add_argument("--output", required=True)
    common(p)

    p = sub.add_parser("persistence", help="sublevel persistence diagrams to CSV")
    p.add_argument("--input", required=True)
    p.add_argument("--stats", help="normalize with these percentiles before filtering")
    p.add_argument("--date", type=_parse_date)
    p.add_argument("--dim", type=int, choices=(0, 1), default=None, help="restrict to one dimension")
    p.add_argument("--min-persistence", type=float, default=0.0)
    p.add_argument("--output")
    common(p)

    p = sub.add_parser("bottleneck", help="bottleneck distance between two diagram CSVs")
    p.add_argument("diagram_a")
    p.add_argument("diagram_b")
    p.add_argument("--dim", type=int, choices=(0, 1), default=1)
    common(p)

    p = sub.add_parser("sample", help="construct dual-trend sample manifests")
    p.add_argument("--input", required=True)
    p.add_argument("--date", type=_parse_date)
    p.add_argument("--tau", type=int)
    p.add_argument("--count", type=int, help="draw this many (date, tau) samples")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--train-years")
    p.add_argument("--test-years")
    p.add_argument("--role", choices=("train", "test"))
    p.add_argument("--output", help="manifest path")
    common(p)

    p = sub.add_parser("fuse", help="blend two predictions with a lambda map")
    p.add_argument("--inter", required=True)
    p.add_argument("--intra", required=True)
    p.add_argument("--lambda", dest="lam", required=True)
    p.add_argument("--residual")
    p.add_argument("--clamp", action="store_true", help="clip the output to [0, 1]")
    p.add_argument("--output", required=True)
    common(p)

    p = sub.add_parser("regularize", help="fusion-weight regularizer terms")
    p.add_argument("--lambda", dest="lam", required=True)
    p.add_argument("--eta1", type=float, default=0.0)
    p.add_argument("--eta2", type=float, default=0.0)
    p.add_argument("--eta3", type=float, default=0.0)
    p.add_argument("--target", type=float, default=0.5)
    common(p)

    p = sub.add_parser("losses", help="evaluate the training-loss kernels")
    p.add_argument("--pred", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--date", type=_parse_date)
    p.add_argument("--real-scores", help="JSON array of discriminator scores")
    p.add_argument("--fake-scores", help="JSON array of discriminator scores")
    p.add_argument("--lambda", dest="lam", help="lambda map stack for the regularizer")
    p.add_argument("--eta1", type=float, default=0.0)
    p.add_argument("--eta2", type=float, default=0.0)
    p.add_argument("--eta3", type=float, default=0.0)
    p.add_argument("--target", type=float, default=0.5)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--beta", type=float, default=0.0)
    p.add_argument("--gamma", type=float, default=0.0)
    p.add_argument("--delta", type=float, default=0.0)
    p.add_argument("--step", type=int, default=0)
    p.add_argument("--warmup", type=int, default=0)
    p.add_argument("--every", type=int, default=5)
    common(p)

    p = sub.add_parser("evaluate", help="verification metrics per date")
    p.add_argument("--pred", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--clim", required=True)
    p.add_argument("--stats", required=True)
    p.add_argument("--tau", type=int, default=0, help="lead time recorded with each row")
    p.add_argument("--overlap", action="store_true", help="add per-date KDE overlap")
    p.add_argument("--output", help="records CSV")
    p.add_argument("--summary", help="per-season summary CSV")
    common(p)

    p = sub.add_parser("stratify", help="median lambda per error bin")
    p.add_argument("--lambda", dest="lam", required=True)
    p.add_argument("--rmse", required=True)
    p.add_argument("--date", type=_parse_date)
    p.add_argument("--bins", default="3,4,5")
    p.add_argument("--season", choices=("DJF", "MAM", "JJA", "SON"))
    p.add_argument("--output", help="stratification CSV")
    common(p)

    p = sub.add_parser("synth", help="generate a synthetic climate stack")
    p.add_argument("--spec", required=True, help="climate-spec JSON")
    p.add_argument("--seed", type=int, default=None, help="override the spec seed")
    p.add_argument("--output", required=True)
    common(p)

    return parser


_COMMANDS = {
    "stats": _cmd_stats,
    "normalize": _cmd_normalize,
    "channels": _cmd_channels,
    "persistence": _cmd_persistence,
    "bottleneck": _cmd_bottleneck,
    "sample": _cmd_sample,
    "fuse": _cmd_fuse,
    "regularize": _cmd_regularize,
    "losses": _cmd_losses,
    "evaluate": _cmd_evaluate,
    "stratify": _cmd_stratify,
    "synth": _cmd_synth,
}


def _human(result: dict, indent: int = 0) -> str:
    pad = "  " * indent
    lines = []
    for key in result:
        val = result[key]
        if isinstance(val, dict):
            lines.append(f"{pad}{key}:")
            lines.append(_human(val, indent + 1))
        elif isinstance(val, (list, tuple)) and val and isinstance(val[0], dict):
            lines.append(f"{pad}{key}:")
            for item in val:
                lines.append(_human(item, indent + 1))
                lines.append(pad + "  -")
            lines.pop()
        else:
            lines.append(f"{pad}{key}: {_json_safe(val)}")
    return "\n".join(lines)


def _pop_config(argv: list[str]) -> dict:
    """Remove --config [PATH] from argv and load the JSON it names."""
    config: dict = {}
    i = 0
    while i < len(argv):
        token = argv[i]
        if token == "--config":
            if i + 1 >= len(argv):
                raise FormatError("--config needs a path")
            path = argv[i + 1]
            del argv[i : i + 2]
        elif token.startswith("--config="):
            path = token.split("=", 1)[1]
            del argv[i]
        else:
            i += 1
            continue
        loaded = json.loads(Path(path).read_text())
        if not isinstance(loaded, dict):
            raise FormatError("config file must hold a JSON object")
        config.update(loaded)
    return config


def _subparsers(parser: argparse.ArgumentParser):
    for action in parser._actions:  # noqa: SLF001 - argparse offers no public walk
        if isinstance(action, argparse._SubParsersAction):
            yield from action.choices.values()


def _known_dests(parser: argparse.ArgumentParser) -> set[str]:
    dests: set[str] = set()
    for sub in _subparsers(parser):
        dests |= {a.dest for a in sub._actions if a.dest != "help"}
    return dests


def _apply_config(parser: argparse.ArgumentParser, config: dict) -> None:
    """Config values become defaults; flags they cover stop being required."""
    parser.set_defaults(**config)
    for sub in _subparsers(parser):
        sub.set_defaults(**{k: v for k, v in config.items()
                            if k in {a.dest for a in sub._actions}})
        for action in sub._actions:
            if action.dest in config and action.required:
                action.required = False


def run(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = _build_parser()
    try:
        config = _pop_config(argv)
    except (TopofieldError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"error [config]: {exc}", file=sys.stderr)
        return 1
    if config:
        unknown = sorted(set(config) - _known_dests(parser))
        if unknown:
            print(f"error [config]: unknown config keys: {unknown}", file=sys.stderr)
            return 2
        _apply_config(parser, config)
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if isinstance(getattr(args, "date", None), str):
        args.date = _parse_date(args.date)
    try:
        result = _COMMANDS[args.command](args)
    except TopofieldError as exc:
        print(f"error [{exc.code}]: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error [missing_file]: {exc}", file=sys.stderr)
        return 1
    _emit(result, args, _human(result))
    return 0


def main() -> None:
    sys.exit(run())
