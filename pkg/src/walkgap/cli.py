"""Command line entry point: ``walkgap {ingest,grid,analyze,regress,export,demo}``.

Exit codes: 0 success, 1 routing backend failure (transport, API status or
undecodable response), 2 input/schema problem, 3 configuration problem,
4 statistical degeneracy.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
from pathlib import Path
from typing import List, Optional

import numpy as np

from walkgap import analysis, export, stats
from walkgap.config import Config, load_config
from walkgap.errors import (
    ConfigurationError,
    DegenerateDesignError,
    InvalidInputError,
    NoCoverageError,
    ParseError,
    RoutingError,
    StatisticsError,
    WalkgapError,
)
from walkgap.geo import BoundingBox, bounding_box, haversine_distance
from walkgap.grid import GridSpec, clip_to_polygon, generate_grid, load_boundary_geojson, read_grid_csv
from walkgap.ingest import parse_address_csv, parse_daft_csv, parse_kml_addresses, parse_nace_csv
from walkgap.routing import HttpDirectionsBackend, RateLimiter, ResponseCache, StreetGraph, SyntheticBackend

logger = logging.getLogger("walkgap")

EXIT_OK, EXIT_BACKEND, EXIT_INPUT, EXIT_CONFIG, EXIT_DEGENERATE = 0, 1, 2, 3, 4


class InputFileError(WalkgapError):
    pass


def _write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(text.encode("utf-8"))


def _render(writer, *args) -> str:
    buf = io.StringIO()
    writer(*args, buf)
    return buf.getvalue()


def _dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=False) + "\n"


def _require(path) -> str:
    if path is None or not os.path.isfile(path):
        raise InputFileError(f"required input file not found: {path}")
    return str(path)


def _read(path) -> str:
    with open(_require(path), "rb") as fh:
        return fh.read().decode("utf-8-sig")


# --- backends ---------------------------------------------------------------

def build_backend(name: str, cfg: Config, env=os.environ):
    if name == "synthetic":
        from walkgap.demo import demo_path

        graph_file = cfg.graph or demo_path("graph.json")
        return SyntheticBackend(StreetGraph.load(_require(graph_file)))
    if name == "http":
        key = cfg.resolve_api_key(env)
        if not key:
            raise ConfigurationError(f"http backend needs an API key in ${cfg.api_key_env} or the config file")
        return HttpDirectionsBackend(key, cfg.api_base_url, cache=ResponseCache(cfg.cache_dir),
                                     rate_limiter=RateLimiter(cfg.rate_limit_per_s))
    raise ConfigurationError(f"unknown backend {name!r}")


# --- commands ---------------------------------------------------------------

def cmd_ingest(args, cfg: Config) -> int:
    if not (args.kml or args.nace or args.daft):
        raise InputFileError("ingest needs at least one of --kml, --nace, --daft")
    out = Path(args.out_dir)
    report = {}
    jobs = [
        ("kml", args.kml, parse_kml_addresses, export.write_addresses_csv, "addresses.csv"),
        ("nace", args.nace, parse_nace_csv, export.write_amenities_csv, "amenities.csv"),
        ("daft", args.daft, parse_daft_csv, export.write_houses_csv, "houses.csv"),
    ]
    for name, path, parse, write, target in jobs:
        if not path:
            continue
        with open(_require(path), "rb") as fh:
            try:
                records = parse(fh)
            except ParseError as exc:
                raise ParseError(f"{path}: {exc}") from exc
        _write_text(out / target, _render(write, records))
        report[name] = {"input": os.path.basename(path), **records.report(), "output": target}
        for reason in records.reasons:
            logger.info("%s: dropped %s", path, reason)
    _write_text(out / "ingest_report.json", _dump_json(report))
    print(json.dumps(report, sort_keys=True))
    return EXIT_OK


def cmd_grid(args, cfg: Config) -> int:
    if args.bbox:
        min_lat, max_lat, min_lon, max_lon = args.bbox
        box = BoundingBox(min_lat, max_lat, min_lon, max_lon)
    elif args.from_addresses:
        box = bounding_box(a.point for a in parse_address_csv(_read(args.from_addresses).encode()))
    else:
        raise InputFileError("grid needs --bbox or --from-addresses")
    grid = generate_grid(GridSpec(box, args.lat_step, args.lon_step), jitter=args.jitter, seed=args.seed)
    if args.boundary:
        grid = clip_to_polygon(grid, load_boundary_geojson(_require(args.boundary)))
    _write_text(Path(args.out), _render(export.write_grid_csv, grid))
    print(json.dumps({"points": len(grid)}))
    return EXIT_OK


def _params(cfg: Config) -> analysis.AnalysisParams:
    return analysis.AnalysisParams(cfg.annulus_min_km, cfg.annulus_max_km, cfg.top_k, cfg.walkability_radius_km)


def cmd_analyze(args, cfg: Config) -> int:
    backend = build_backend(args.backend, cfg, args.env)  # fail on configuration before touching inputs
    origins = parse_nace_csv(_read(args.origins).encode())
    if args.grid:
        grid = read_grid_csv(_read(args.grid))
    elif args.bbox:
        grid = generate_grid(GridSpec(BoundingBox(*args.bbox), args.lat_step, args.lon_step))
    else:
        raise InputFileError("analyze needs --grid FILE or --bbox with --lat-step/--lon-step")
    if not grid:
        logger.warning("empty destination grid; writing empty outputs")

    params = _params(cfg)
    out = Path(args.out_dir)
    pairs = analysis.pair_candidates(origins, grid, params)
    result = analysis.compute_discrepancies(pairs, backend, origins, grid, parallelism=cfg.parallelism)
    top = analysis.top_k_per_origin(result.routed, params.top_k)

    _write_text(out / "amenities.csv", _render(export.write_amenities_csv, origins))
    _write_text(out / "grid.csv", _render(export.write_grid_csv, grid))
    _write_text(out / "candidates.csv", _render(analysis.write_candidates_csv, pairs, origins, grid))
    _write_text(out / "routed.csv", _render(analysis.write_routed_csv, result.routed, origins, grid))
    _write_text(out / "unrouted.csv", _render(analysis.write_unrouted_csv, result.unrouted))
    _write_text(out / "topk.csv", _render(analysis.write_routed_csv, top, origins, grid))
    summary = {
        "origins": len(origins),
        "destinations": len(grid),
        "candidate_pairs": len(pairs),
        "routed_pairs": len(result.routed),
        "unrouted_pairs": len(result.unrouted),
        "top_k_pairs": len(top),
        "max_discrepancy_km": round(max((r.discrepancy_km for r in result.routed), default=0.0), 6),
    }
    _write_text(out / "summary.json", _dump_json(summary))
    print(json.dumps(summary, sort_keys=True))
    return EXIT_OK


def _regression_dataset(houses, origins, backend, cfg: Config):
    params = _params(cfg)
    centre = cfg.centre_point
    rows, dropped = [], 0
    for h in houses:
        try:
            u = analysis.unwalkability_score(h.point, origins, backend, params, cfg.aggregation)
        except NoCoverageError:
            dropped += 1
            continue
        rows.append((h, haversine_distance(h.point, centre), u))
    return rows, dropped


def cmd_regress(args, cfg: Config) -> int:
    backend = build_backend(args.backend, cfg, args.env)
    houses = parse_daft_csv(_read(args.houses).encode())
    origins = parse_nace_csv(_read(args.amenities).encode())
    rows, dropped = _regression_dataset(houses, origins, backend, cfg)
    out = Path(args.out_dir)

    buf = io.StringIO()
    buf.write("Latitude,Longitude,Address,Type,Price,DistCityCentre_km,Unwalkability_km,aggregation\n")
    w = csv.writer(buf, lineterminator="\n")
    for h, dist, u in rows:
        w.writerow([repr(h.point.lat), repr(h.point.lon), h.address, h.dwelling_type, repr(h.price_eur),
                    f"{dist:.6f}", f"{u:.6f}", cfg.aggregation])
    _write_text(out / "regression_dataset.csv", buf.getvalue())

    obs = [stats.Observation(h.price_eur, h.dwelling_type, dist, u) for h, dist, u in rows]
    spec = stats.ModelSpec(type_coding=cfg.type_coding)
    X, y = stats.build_design_matrix(obs, spec)
    ols = stats.ols_fit(X, y)
    white = stats.white_test(ols)
    vif = stats.vif(X)
    weights = np.ones(len(y)) if args.unit_weights else stats.estimate_weights(ols)
    wls = stats.wls_fit(X, y, weights)

    report = {
        "houses_parsed": len(houses),
        "houses_dropped_no_coverage": dropped,
        "aggregation": cfg.aggregation,
        "type_coding": cfg.type_coding,
        "city_centre": list(cfg.city_centre),
        "ols": stats.fit_to_dict(ols, white, vif),
        "wls": stats.fit_to_dict(wls, stats.white_test(wls)),
    }
    _write_text(out / "regression_report.json", _dump_json(report))
    _write_text(out / "regression_report.txt",
                stats.format_table(ols, white, vif) + "\n" + stats.format_table(wls))
    print(json.dumps({"nobs": len(y), "dropped_no_coverage": dropped,
                      "wls_r_squared": round(wls.r_squared, 6)}))
    return EXIT_OK


def cmd_export(args, cfg: Config) -> int:
    src = Path(args.analysis_dir)
    formats = [f.strip() for f in args.formats.split(",") if f.strip()]
    unknown = set(formats) - {"csv", "geojson"}
    if unknown or not formats:
        raise InputFileError(f"unknown export formats {sorted(unknown)}; choose from csv, geojson")
    origins = parse_nace_csv(_read(src / "amenities.csv").encode())
    grid = read_grid_csv(_read(src / "grid.csv"))
    routed = analysis.read_routed_csv(_read(src / args.routed))
    circle = export.CircleParams(cfg.circle_scale, cfg.circle_step_deg, cfg.circle_sizing)
    out = Path(args.out_dir)
    written = []
    if "csv" in formats:
        _write_text(out / "viz.csv", _render(export.write_viz_csv, origins, grid, routed, circle))
        written.append(str(out / "viz.csv"))
    if "geojson" in formats:
        circles = export.origin_circles(origins, routed, circle)
        _write_text(out / "walkgap.geojson", _render(export.write_geojson, routed, origins, circles))
        written.append(str(out / "walkgap.geojson"))
    print(json.dumps({"files": written}))
    return EXIT_OK


def cmd_demo(args, cfg: Config) -> int:
    from walkgap.demo import write_demo

    files = write_demo(args.out_dir)
    print(json.dumps({"files": [str(f) for f in files]}))
    return EXIT_OK


# --- parser -----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="walkgap", description=__doc__.splitlines()[0])
    p.add_argument("--config", help="TOML config file")
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)

    def analysis_opts(sp):
        sp.add_argument("--backend", choices=("http", "synthetic"), default="synthetic")
        sp.add_argument("--graph", help="street graph JSON for the synthetic backend")
        sp.add_argument("--cache-dir")
        sp.add_argument("--annulus-min-km", type=float)
        sp.add_argument("--annulus-max-km", type=float)
        sp.add_argument("--walkability-radius-km", type=float)
        sp.add_argument("--parallelism", type=int)

    sp = sub.add_parser("ingest", help="parse KML / NACE / Daft inputs into normalized CSV")
    sp.add_argument("--kml")
    sp.add_argument("--nace")
    sp.add_argument("--daft")
    sp.add_argument("--out-dir", required=True)
    sp.set_defaults(func=cmd_ingest)

    sp = sub.add_parser("grid", help="generate the destination grid")
    sp.add_argument("--bbox", nargs=4, type=float, metavar=("MIN_LAT", "MAX_LAT", "MIN_LON", "MAX_LON"))
    sp.add_argument("--from-addresses", help="normalized addresses CSV; its bounding box is used")
    sp.add_argument("--lat-step", type=float, required=True)
    sp.add_argument("--lon-step", type=float, required=True)
    sp.add_argument("--boundary", help="GeoJSON polygon to clip the grid to")
    sp.add_argument("--jitter", type=float, default=0.0)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_grid)

    sp = sub.add_parser("analyze", help="pair, route and rank origin/destination pairs")
    sp.add_argument("--origins", required=True, help="amenities CSV")
    sp.add_argument("--grid", help="grid CSV")
    sp.add_argument("--bbox", nargs=4, type=float, metavar=("MIN_LAT", "MAX_LAT", "MIN_LON", "MAX_LON"))
    sp.add_argument("--lat-step", type=float)
    sp.add_argument("--lon-step", type=float)
    sp.add_argument("--top-k", type=int)
    analysis_opts(sp)
    sp.add_argument("--out-dir", required=True)
    sp.set_defaults(func=cmd_analyze)

    sp = sub.add_parser("regress", help="fit the log-price model with diagnostics")
    sp.add_argument("--houses", required=True)
    sp.add_argument("--amenities", required=True)
    sp.add_argument("--city-centre", nargs=2, type=float, metavar=("LAT", "LON"))
    sp.add_argument("--aggregation", choices=analysis.AGGREGATIONS)
    sp.add_argument("--type-coding", choices=stats.design.CODINGS)
    sp.add_argument("--unit-weights", action="store_true", help="force all WLS weights to 1")
    analysis_opts(sp)
    sp.add_argument("--out-dir", required=True)
    sp.set_defaults(func=cmd_regress)

    sp = sub.add_parser("export", help="write viz CSV and/or GeoJSON from analysis outputs")
    sp.add_argument("--analysis-dir", required=True)
    sp.add_argument("--routed", default="topk.csv", help="routed-pairs file inside the analysis dir")
    sp.add_argument("--formats", default="csv,geojson")
    sp.add_argument("--circle-scale", type=float)
    sp.add_argument("--circle-step-deg", type=float)
    sp.add_argument("--circle-sizing", choices=("discrepancy", "importance"))
    sp.add_argument("--out-dir", required=True)
    sp.set_defaults(func=cmd_export)

    sp = sub.add_parser("demo", help="write the bundled synthetic fixture")
    sp.add_argument("--out-dir", required=True)
    sp.set_defaults(func=cmd_demo)
    return p


_OVERRIDE_FLAGS = ("graph", "cache_dir", "annulus_min_km", "annulus_max_km", "walkability_radius_km",
                   "parallelism", "top_k", "city_centre", "aggregation", "type_coding",
                   "circle_scale", "circle_step_deg", "circle_sizing")


def main(argv: Optional[List[str]] = None, env=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    env = os.environ if env is None else env
    args.env = env
    try:
        overrides = {k: getattr(args, k) for k in _OVERRIDE_FLAGS if getattr(args, k, None) is not None}
        cfg = load_config(args.config, env, overrides)
        return args.func(args, cfg)
    except ConfigurationError as exc:
        print(f"walkgap: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DegenerateDesignError as exc:
        print(f"walkgap: degenerate design: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except StatisticsError as exc:
        print(f"walkgap: statistics error: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except (ParseError, InputFileError, InvalidInputError, OSError) as exc:
        print(f"walkgap: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except RoutingError as exc:
        print(f"walkgap: routing backend error: {exc}", file=sys.stderr)
        return EXIT_BACKEND


if __name__ == "__main__":
    sys.exit(main())
