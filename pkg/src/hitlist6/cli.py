"""Command-line entry point: ``hitlist6 <command> ...``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import backscan, classify, eui64, geolink, store, synth, tracking
from .errors import ConfigError, HitlistError
from .observations import read_log
from .pipeline import PipelineConfig, read_address_list, run_pipeline
from .prefixmap import ingest_prefix_file


def _table(path, kind):
    return ingest_prefix_file(path, kind) if path else None


def _dump(obj) -> None:
    print(json.dumps(obj, indent=2, sort_keys=True, default=str))


def _wired_macs(args) -> list[int]:
    if args.macs:
        return list(eui64.read_mac_report(args.macs))
    return list(eui64.mac_counts(store.CorpusStore(args.store).addresses()))


def _addresses(args):
    if getattr(args, "store", None):
        return store.CorpusStore(args.store).addresses()
    if getattr(args, "addresses", None):
        return read_address_list(args.addresses)
    raise ConfigError("give --store or --addresses")


# ---------------------------------------------------------------- commands


def cmd_ingest(args) -> None:
    st = store.ingest(args.log, args.store, chunk_size=args.chunk_size,
                      asmap=_table(args.asn, "asn"), countrymap=_table(args.country, "country"))
    _dump(vars(st.counters))


def cmd_summarize(args) -> None:
    comparisons = {}
    for item in args.compare or []:
        name, _, path = item.partition("=")
        if not path:
            raise ConfigError(f"--compare expects NAME=PATH, got {item!r}")
        comparisons[name] = read_address_list(path)
    report = store.summarize(store.CorpusStore(args.store), _table(args.asn, "asn"),
                             _table(args.country, "country"), comparisons, args.top)
    if args.csv:
        report.write_csv(args.csv, args.name)
    _dump(report.to_dict())


def cmd_classify(args) -> None:
    asmap = _table(args.asn, "asn")
    c = classify.classify_addresses(_addresses(args), asmap, args.threshold_count, args.threshold_frac)
    prof = classify.profile_distribution(c.categories, c.asn, c.entropy)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    classify.write_category_report(out / "categories.csv", {args.name: prof})
    classify.write_as_category_report(out / "as_categories.csv", prof)
    classify.write_entropy_cdf(out / "entropy_cdf_global.csv", prof.overall)
    for asn in classify.top_ases(prof):
        classify.write_entropy_cdf(out / f"entropy_cdf_AS{asn}.csv", prof.per_as[asn])
    _dump({"addresses": prof.overall.total,
           "categories": {k.value: v for k, v in prof.overall.counts.items()},
           "ipv4_accepted_ases": sorted(c.accepted_ases)})


def cmd_eui64(args) -> None:
    db = eui64.OuiDatabase.from_csv(args.oui) if args.oui else eui64.OuiDatabase()
    addrs = list(_addresses(args))
    counts = eui64.mac_counts(addrs)
    eui64.write_mac_report(args.out, counts, db)
    _dump({"unique_addresses": len(addrs), "unique_macs": len(counts),
           "expected_random_apparent": eui64.expected_random_apparent(len(addrs))})


def cmd_track(args) -> None:
    obs = read_log(args.log)
    tl = tracking.build_timelines(obs, _table(args.asn, "asn"), _table(args.country, "country"))
    classes = tracking.write_tracking_report(args.out, tl)
    if args.lifetime_ccdf:
        lt = tracking.lifetimes(obs, args.lifetime_key)
        tracking.write_ccdf(args.lifetime_ccdf, tracking.lifetime_ccdf(lt))
    _dump({k.value: v for k, v in tracking.class_counts(classes.values()).items()})


def cmd_alias_plan(args) -> None:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    plans = backscan.plan_intervals(read_log(args.log), args.seed, args.interval_seconds)
    for plan in plans:
        backscan.write_plan(out / f"plan_{plan.interval_start}.csv", plan)
    _dump({"intervals": len(plans), "targets": sum(len(p.targets) for p in plans)})


def _plans(plans_dir: Path):
    for path in sorted(plans_dir.glob("plan_*.csv"), key=lambda p: int(p.stem.split("_")[1])):
        start = int(path.stem.split("_")[1])
        yield start, backscan.read_plan(path, start)


def cmd_alias_respond(args) -> None:
    """Mock responder: answer every plan in a directory."""
    prober = backscan.MockResponder(ingest_prefix_file(args.aliased, "alias"), args.client_rate,
                                    args.random_rate, args.seed)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    n = 0
    for start, plan in _plans(Path(args.plans_dir)):
        backscan.write_responses(out / f"responses_{start}.csv", prober.probe(plan))
        n += 1
    _dump({"intervals": n})


def cmd_alias_infer(args) -> None:
    parts = []
    for start, plan in _plans(Path(args.plans_dir)):
        resp = backscan.read_responses(Path(args.responses_dir) / f"responses_{start}.csv")
        parts.append(backscan.infer_aliased(plan, resp))
    inf = backscan.merge_inferences(parts)
    backscan.write_verdicts(args.out, inf.verdicts)
    summary = backscan.summary_dict(inf)
    if args.summary:
        backscan.write_summary(args.summary, inf)
    _dump(summary)


def cmd_alias_compare(args) -> None:
    cmp = backscan.compare_alias_lists(backscan.read_verdicts(args.verdicts),
                                       ingest_prefix_file(args.aliases, "alias"))
    if args.new_out:
        with open(args.new_out, "w") as fh:
            fh.writelines(f"{p}\n" for p in cmp.new_prefixes)
    _dump({"known": cmp.known, "new": cmp.new})


def cmd_geolink_tally(args) -> None:
    geolink.write_tallies(args.out, _wired_macs(args), geolink.read_geo_corpus(args.geo), args.top)


def cmd_geolink_infer(args) -> None:
    models = geolink.infer_models(_wired_macs(args), geolink.read_geo_corpus(args.geo), args.min_pairs)
    geolink.write_models(args.out, models)
    _dump({str(m.oui): m.offset for m in models.values()})


def cmd_geolink_apply(args) -> None:
    grid = geolink.CountryGrid.from_csv(args.grid) if args.grid else None
    res = geolink.geolocate_corpus(_wired_macs(args), geolink.read_geo_corpus(args.geo),
                                   geolink.read_models(args.models), grid)
    geolink.write_results(args.out, res.results)
    _dump({"geolocated": len(res.results), "per_country": dict(res.per_country)})


def cmd_synth(args) -> None:
    spec = synth.ScenarioSpec.load(args.scenario)
    if args.seed is not None:
        spec.seed = args.seed
    corpus = synth.generate_corpus(spec, args.threshold_count, args.threshold_frac)
    paths = synth.write_corpus(corpus, args.out_dir)
    _dump({"observations": len(corpus.observations), "unique_addresses": corpus.truth.unique_addresses,
           "files": {k: str(v) for k, v in paths.items()}})


def cmd_release(args) -> None:
    lines = store.export_release(store.CorpusStore(args.store), args.out)
    _dump({"slash48s": len(lines), "out": args.out})


def cmd_pipeline(args) -> None:
    # only flags given on the command line override the config file
    overrides = {k: getattr(args, k) for k in _DEFAULTS if k in args.explicit}
    cfg = PipelineConfig.load(args.config, **overrides)
    res = run_pipeline(cfg)
    _dump({k: str(v) for k, v in sorted(res.outputs.items())})


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    # per-run overrides are accepted before or after the subcommand
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    common.add_argument("--interval-seconds", type=int, default=argparse.SUPPRESS)
    common.add_argument("--min-pairs", type=int, default=argparse.SUPPRESS)
    common.add_argument("--threshold-count", type=int, default=argparse.SUPPRESS)
    common.add_argument("--threshold-frac", type=float, default=argparse.SUPPRESS)
    common.add_argument("--chunk-size", type=int, default=argparse.SUPPRESS)

    p = argparse.ArgumentParser(prog="hitlist6", parents=[common],
                                description="Passive IPv6 hitlist analysis toolkit.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, fn, parent=sub, **kw):
        sp = parent.add_parser(name, parents=[common], **kw)
        sp.set_defaults(func=fn)
        return sp

    def source(sp, macs=False):
        g = sp.add_mutually_exclusive_group(required=True)
        g.add_argument("--store", help="store directory from `ingest`")
        if macs:
            g.add_argument("--macs", help="MAC report CSV from `eui64`")
        else:
            g.add_argument("--addresses", help="address list or observation log")

    sp = add("ingest", cmd_ingest, help="stream an observation log into a deduplicated store")
    sp.add_argument("log")
    sp.add_argument("--store", required=True)
    sp.add_argument("--asn")
    sp.add_argument("--country")

    sp = add("summarize", cmd_summarize, help="dataset totals and overlaps")
    sp.add_argument("--store", required=True)
    sp.add_argument("--asn")
    sp.add_argument("--country")
    sp.add_argument("--compare", action="append", metavar="NAME=PATH")
    sp.add_argument("--top", type=int, default=10)
    sp.add_argument("--csv")
    sp.add_argument("--name", default="main")

    sp = add("classify", cmd_classify, help="seven-way address categorization")
    source(sp)
    sp.add_argument("--asn", required=True)
    sp.add_argument("--out-dir", required=True)
    sp.add_argument("--name", default="corpus")

    sp = add("eui64", cmd_eui64, help="extract embedded MACs and vendors")
    source(sp)
    sp.add_argument("--oui")
    sp.add_argument("--out", required=True)

    sp = add("track", cmd_track, help="classify per-MAC trackability")
    sp.add_argument("log")
    sp.add_argument("--asn", required=True)
    sp.add_argument("--country", required=True)
    sp.add_argument("--out", required=True)
    sp.add_argument("--lifetime-ccdf")
    sp.add_argument("--lifetime-key", choices=("address", "iid", "mac"), default="address")

    alias = sub.add_parser("alias", help="backscan planning and alias inference")
    asub = alias.add_subparsers(dest="alias_command", required=True)
    sp = add("plan", cmd_alias_plan, asub)
    sp.add_argument("log")
    sp.add_argument("--out-dir", required=True)
    sp = add("respond", cmd_alias_respond, asub, help="mock responder for offline runs")
    sp.add_argument("--plans-dir", required=True)
    sp.add_argument("--aliased", required=True)
    sp.add_argument("--client-rate", type=float, default=1.0)
    sp.add_argument("--random-rate", type=float, default=0.0)
    sp.add_argument("--out-dir", required=True)
    sp = add("infer", cmd_alias_infer, asub)
    sp.add_argument("--plans-dir", required=True)
    sp.add_argument("--responses-dir", required=True)
    sp.add_argument("--out", required=True)
    sp.add_argument("--summary")
    sp = add("compare", cmd_alias_compare, asub)
    sp.add_argument("verdicts")
    sp.add_argument("--aliases", required=True)
    sp.add_argument("--new-out")

    geo = sub.add_parser("geolink", help="wired-MAC to BSSID offset inference")
    gsub = geo.add_subparsers(dest="geolink_command", required=True)
    for name, fn in (("tally", cmd_geolink_tally), ("infer", cmd_geolink_infer), ("apply", cmd_geolink_apply)):
        sp = add(name, fn, gsub)
        source(sp, macs=True)
        sp.add_argument("--geo", required=True)
        sp.add_argument("--out", required=True)
        if name == "tally":
            sp.add_argument("--top", type=int, default=0)
        if name == "apply":
            sp.add_argument("--models", required=True)
            sp.add_argument("--grid")

    sp = add("synth", cmd_synth, help="generate a synthetic corpus with ground truth")
    sp.add_argument("scenario")
    sp.add_argument("--out-dir", required=True)

    sp = add("release", cmd_release, help="export the /48 release list")
    sp.add_argument("--store", required=True)
    sp.add_argument("--out", required=True)

    sp = add("pipeline", cmd_pipeline, help="run every enabled stage from a JSON config")
    sp.add_argument("config")
    return p


_DEFAULTS = {"seed": None, "interval_seconds": backscan.DEFAULT_INTERVAL, "min_pairs": geolink.DEFAULT_MIN_PAIRS,
             "threshold_count": 100, "threshold_frac": 0.10, "chunk_size": store.DEFAULT_CHUNK}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    given = set(vars(args))
    args.explicit = given & set(_DEFAULTS)
    for k, v in _DEFAULTS.items():
        if k not in given:
            setattr(args, k, v)
    if args.command not in ("pipeline", "synth") and args.seed is None:
        args.seed = 0
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except HitlistError as exc:
        print(json.dumps(exc.to_dict()), file=sys.stderr)
        return 2
    except (OSError, ValueError, KeyError) as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
