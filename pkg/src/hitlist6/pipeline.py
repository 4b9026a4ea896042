"""End-to-end pipeline: ingest, classify, EUI-64, tracking, backscan, geolink, summary, release."""
from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from . import backscan, classify, eui64, geolink, store, tracking
from .addr import parse_ipv6_int
from .errors import ConfigError
from .observations import read_log
from .prefixmap import PrefixTable, ingest_prefix_file

log = logging.getLogger(__name__)

STAGES = ("classify", "eui64", "track", "alias", "geolink", "summarize", "release", "figures")

DEFAULTS: dict[str, Any] = {
    "seed": 0,
    "interval_seconds": backscan.DEFAULT_INTERVAL,
    "min_pairs": geolink.DEFAULT_MIN_PAIRS,
    "threshold_count": 100,
    "threshold_frac": 0.10,
    "chunk_size": store.DEFAULT_CHUNK,
}

# stage -> input keys it cannot run without
REQUIRED = {
    "classify": ("asn",),
    "track": ("asn", "country"),
    "geolink": ("geo",),
}


@dataclass
class PipelineConfig:
    output_dir: Path
    inputs: dict[str, Any]
    stages: dict[str, bool]
    backscan: dict[str, Any] = field(default_factory=dict)
    seed: int = DEFAULTS["seed"]
    interval_seconds: int = DEFAULTS["interval_seconds"]
    min_pairs: int = DEFAULTS["min_pairs"]
    threshold_count: int = DEFAULTS["threshold_count"]
    threshold_frac: float = DEFAULTS["threshold_frac"]
    chunk_size: int = DEFAULTS["chunk_size"]

    @classmethod
    def from_dict(cls, raw: dict, base_dir: str | Path = ".", **overrides) -> "PipelineConfig":
        base = Path(base_dir)

        def resolve(p):
            return None if p is None else (base / p if not Path(p).is_absolute() else Path(p))

        inputs = dict(raw.get("inputs", {}))
        for k, v in list(inputs.items()):
            if k == "comparisons":
                inputs[k] = {name: resolve(p) for name, p in (v or {}).items()}
            else:
                inputs[k] = resolve(v)
        stages = {s: True for s in STAGES if s != "figures"}
        stages["figures"] = False
        unknown = set(raw.get("stages", {})) - set(STAGES)
        if unknown:
            raise ConfigError(f"unknown stage(s): {sorted(unknown)}")
        stages.update(raw.get("stages", {}))
        bs = dict(raw.get("backscan", {}))
        for k in ("aliased", "responses_dir"):
            if bs.get(k):
                bs[k] = resolve(bs[k])
        params = {k: raw.get(k, v) for k, v in DEFAULTS.items()}
        params.update({k: v for k, v in overrides.items() if v is not None})
        if "output_dir" not in raw:
            raise ConfigError("config needs an output_dir")
        return cls(resolve(raw["output_dir"]), inputs, stages, bs, **params)

    @classmethod
    def load(cls, path: str | Path, **overrides) -> "PipelineConfig":
        path = Path(path)
        try:
            raw = json.loads(path.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        return cls.from_dict(raw, path.parent, **overrides)

    def validate(self) -> None:
        """Fail before any work when an enabled stage lacks an input."""
        missing = []

        def need(key: str, why: str):
            p = self.inputs.get(key)
            if p is None:
                missing.append(f"{why}: input '{key}' not configured")
            elif not Path(p).exists():
                missing.append(f"{why}: {p} does not exist")

        need("observations", "ingest")
        for stage, keys in REQUIRED.items():
            if self.stages.get(stage):
                for k in keys:
                    need(k, stage)
        for k in ("oui", "grid", "alias", "country"):
            p = self.inputs.get(k)
            if p is not None and not Path(p).exists():
                missing.append(f"optional input '{k}': {p} does not exist")
        for name, p in self.inputs.get("comparisons", {}).items():
            if not Path(p).exists():
                missing.append(f"comparison '{name}': {p} does not exist")
        if self.stages.get("alias"):
            mode = self.backscan.get("responder", "mock")
            if mode == "mock":
                p = self.backscan.get("aliased")
                if p is not None and not Path(p).exists():
                    missing.append(f"alias: mock aliased-prefix file {p} does not exist")
            elif mode == "file":
                p = self.backscan.get("responses_dir")
                if p is None or not Path(p).is_dir():
                    missing.append("alias: file responder needs an existing responses_dir")
            else:
                missing.append(f"alias: unknown responder {mode!r}")
        if missing:
            raise ConfigError("; ".join(missing))


@dataclass
class PipelineResult:
    outputs: dict[str, Path] = field(default_factory=dict)
    store: store.CorpusStore | None = None
    classification: classify.Classification | None = None
    profile: classify.DistributionProfile | None = None
    mac_counts: dict | None = None
    timelines: tracking.Timelines | None = None
    track_classes: dict | None = None
    alias: backscan.AliasInference | None = None
    alias_comparison: backscan.AliasComparison | None = None
    models: dict | None = None
    geolocation: geolink.Geolocation | None = None
    summary: store.SummaryReport | None = None
    release: list[str] | None = None


def read_address_list(path: str | Path) -> set[int]:
    """Addresses from a one-per-line list or an observation log."""
    out = set()
    with open(path) as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if not line or line.startswith("unix_seconds"):
                continue
            text = line.split(",")[1] if "," in line else line
            out.add(parse_ipv6_int(text.strip()))
    return out


def _table(path, kind) -> PrefixTable | None:
    return ingest_prefix_file(path, kind) if path is not None else None


def run_pipeline(config: PipelineConfig | dict | str | Path) -> PipelineResult:
    if isinstance(config, (str, Path)):
        config = PipelineConfig.load(config)
    elif isinstance(config, dict):
        config = PipelineConfig.from_dict(config)
    config.validate()
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    res = PipelineResult()
    on = config.stages
    inp = config.inputs

    asmap = _table(inp.get("asn"), "asn")
    countrymap = _table(inp.get("country"), "country")
    comparisons = {name: read_address_list(p) for name, p in inp.get("comparisons", {}).items()}

    res.store = store.ingest(inp["observations"], out / "store", chunk_size=config.chunk_size,
                             asmap=asmap, countrymap=countrymap)
    observations = None

    def obs():
        nonlocal observations
        if observations is None:
            observations = read_log(inp["observations"])
        return observations

    if on.get("classify"):
        res.classification = classify.classify_addresses(
            res.store.addresses(), asmap, config.threshold_count, config.threshold_frac)
        res.profile = classify.profile_distribution(
            res.classification.categories, res.classification.asn, res.classification.entropy)
        profiles = {"corpus": res.profile}
        for name, addrs in comparisons.items():
            c = classify.classify_addresses(addrs, asmap, config.threshold_count, config.threshold_frac)
            if c.categories:
                profiles[name] = classify.profile_distribution(c.categories, c.asn, c.entropy)
        p = res.outputs["categories"] = out / "categories.csv"
        classify.write_category_report(p, profiles)
        p = res.outputs["as_categories"] = out / "as_categories.csv"
        classify.write_as_category_report(p, res.profile)
        p = res.outputs["entropy_cdf_global"] = out / "entropy_cdf_global.csv"
        classify.write_entropy_cdf(p, res.profile.overall)
        for asn in classify.top_ases(res.profile):
            p = res.outputs[f"entropy_cdf_AS{asn}"] = out / f"entropy_cdf_AS{asn}.csv"
            classify.write_entropy_cdf(p, res.profile.per_as[asn])
        if on.get("figures"):
            from . import plotting

            curves = {"all": res.profile.overall}
            curves.update({f"AS{a}": res.profile.per_as[a] for a in classify.top_ases(res.profile)})
            res.outputs["fig_entropy"] = plotting.entropy_cdfs(curves, out / "figures" / "entropy_cdf.png")
            res.outputs["fig_categories"] = plotting.category_fractions(
                profiles, out / "figures" / "categories.png")

    if on.get("eui64") or on.get("geolink"):
        res.mac_counts = eui64.mac_counts(res.store.addresses())
    if on.get("eui64"):
        db = eui64.OuiDatabase.from_csv(inp["oui"]) if inp.get("oui") else eui64.OuiDatabase()
        p = res.outputs["mac_report"] = out / "mac_report.csv"
        eui64.write_mac_report(p, res.mac_counts, db)
        p = res.outputs["vendor_report"] = out / "vendor_report.csv"
        vendors = eui64.vendor_counts(res.mac_counts, db)
        with open(p, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["vendor", "macs"])
            w.writerows(sorted(vendors.items(), key=lambda kv: (-kv[1], kv[0])))
        n = len(res.store)
        res.outputs["eui64_baseline"] = p = out / "eui64_baseline.json"
        p.write_text(json.dumps({
            "unique_addresses": n,
            "apparent_eui64_addresses": sum(res.mac_counts.values()),
            "unique_macs": len(res.mac_counts),
            "expected_random_apparent": eui64.expected_random_apparent(n),
        }, indent=2) + "\n")

    if on.get("track"):
        res.timelines = tracking.build_timelines(obs(), asmap, countrymap)
        p = res.outputs["tracking"] = out / "tracking.csv"
        res.track_classes = tracking.write_tracking_report(p, res.timelines)
        lt = tracking.lifetimes(obs(), "address")
        p = res.outputs["lifetime_ccdf"] = out / "lifetime_ccdf.csv"
        lt_points = tracking.lifetime_ccdf(lt) if lt else []
        tracking.write_ccdf(p, lt_points)
        spread_points = []
        if res.timelines:
            spread = tracking.prefix_spread(res.timelines)
            spread_points = spread.ccdf
        p = res.outputs["prefix_spread_ccdf"] = out / "prefix_spread_ccdf.csv"
        tracking.write_ccdf(p, spread_points)
        if on.get("figures"):
            from . import plotting

            if lt_points:
                res.outputs["fig_lifetime"] = plotting.ccdf(
                    lt_points, out / "figures" / "lifetime_ccdf.png", "address lifetime (s)")
            if spread_points:
                res.outputs["fig_prefix_spread"] = plotting.ccdf(
                    spread_points, out / "figures" / "prefix_spread_ccdf.png", "/64s per EUI-64 IID")

    if on.get("alias"):
        _run_alias(config, obs(), asmap, res, out)

    if on.get("geolink"):
        geo = geolink.read_geo_corpus(inp["geo"])
        res.models = geolink.infer_models(res.mac_counts, geo, config.min_pairs)
        grid = geolink.CountryGrid.from_csv(inp["grid"]) if inp.get("grid") else None
        res.geolocation = geolink.geolocate_corpus(res.mac_counts, geo, res.models, grid)
        p = res.outputs["geo_models"] = out / "geo_models.csv"
        geolink.write_models(p, res.models)
        p = res.outputs["geo_results"] = out / "geo_results.csv"
        geolink.write_results(p, res.geolocation.results)
        p = res.outputs["geo_countries"] = out / "geo_countries.csv"
        with open(p, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["country", "macs"])
            w.writerows(sorted(res.geolocation.per_country.items(), key=lambda kv: (-kv[1], kv[0])))

    if on.get("summarize"):
        res.summary = store.summarize(res.store, asmap, countrymap, comparisons)
        p = res.outputs["summary_json"] = out / "summary.json"
        p.write_text(json.dumps(res.summary.to_dict(), indent=2) + "\n")
        p = res.outputs["summary_csv"] = out / "summary.csv"
        res.summary.write_csv(p, "corpus")

    if on.get("release"):
        p = res.outputs["release"] = out / "release_48.txt"
        res.release = store.export_release(res.store, p)

    manifest = out / "manifest.json"
    manifest.write_text(json.dumps({k: str(v.relative_to(out)) for k, v in sorted(res.outputs.items())},
                                   indent=2) + "\n")
    res.outputs["manifest"] = manifest
    return res


def _run_alias(config: PipelineConfig, observations, asmap, res: PipelineResult, out: Path) -> None:
    bs = config.backscan
    plans = backscan.plan_intervals(observations, config.seed, config.interval_seconds)
    bdir = out / "backscan"
    bdir.mkdir(exist_ok=True)
    mode = bs.get("responder", "mock")
    if mode == "mock":
        aliased = _table(bs.get("aliased"), "alias") or PrefixTable().freeze()
        prober = backscan.MockResponder(aliased, bs.get("client_rate", 1.0), bs.get("random_rate", 0.0),
                                        config.seed)
    parts = []
    for plan in plans:
        plan_path = bdir / f"plan_{plan.interval_start}.csv"
        resp_path = bdir / f"responses_{plan.interval_start}.csv"
        if mode == "mock":
            backscan.write_plan(plan_path, plan)
            responses = prober.probe(plan)
            backscan.write_responses(resp_path, responses)
        else:
            responses = backscan.FileProber(plan_path, Path(bs["responses_dir"]) / resp_path.name).probe(plan)
        parts.append(backscan.infer_aliased(plan, responses))
    res.alias = backscan.merge_inferences(parts)
    external = config.inputs.get("alias")
    if external is not None:
        res.alias_comparison = backscan.compare_alias_lists(res.alias.verdicts, ingest_prefix_file(external, "alias"))
    p = res.outputs["alias_verdicts"] = out / "alias_verdicts.csv"
    backscan.write_verdicts(p, res.alias.verdicts)
    total, per_as = backscan.clients_in_aliased({o.addr for o in observations}, res.alias.verdicts, asmap)
    summary = backscan.summary_dict(res.alias, res.alias_comparison)
    summary["clients_in_aliased"] = total
    summary["clients_in_aliased_per_as"] = {str(k): v for k, v in sorted(per_as.items(), key=lambda kv: str(kv[0]))}
    p = res.outputs["alias_summary"] = out / "alias_summary.json"
    p.write_text(json.dumps(summary, indent=2) + "\n")
