import csv
import hashlib
import json
import logging
import socket
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from walkgap import analysis
from walkgap.cli import main
from walkgap.config import Config, load_config
from walkgap.demo import demo_graph, demo_houses, demo_origins, demo_path, write_demo
from walkgap.errors import ConfigurationError
from walkgap.export import viz_row_count
from walkgap.geo import haversine_distance
from walkgap.routing import SyntheticBackend

GOLDEN = Path(__file__).parent / "golden"
DEMO = {name: demo_path(name) for name in ("amenities.csv", "grid.csv", "houses.csv", "graph.json")}


def digest(directory):
    return {p.name: hashlib.sha256(p.read_bytes()).hexdigest() for p in sorted(Path(directory).iterdir())}


def run(*argv, env=None):
    return main([str(a) for a in argv], env={} if env is None else env)


@pytest.fixture
def no_network(monkeypatch):
    def refuse(*a, **k):
        raise AssertionError("network access attempted")
    monkeypatch.setattr(socket.socket, "connect", refuse)
    monkeypatch.setattr(socket, "create_connection", refuse)


# --- demo fixture -------------------------------------------------------------

def test_bundled_demo_matches_generator(tmp_path):
    write_demo(tmp_path)
    for name, path in DEMO.items():
        assert (tmp_path / name).read_bytes() == Path(path).read_bytes(), name


def test_demo_fixture_shape():
    g = demo_graph()
    assert len(demo_origins()) == 8 and len(g.nodes) == 225 and len(g.removed) == 12
    assert len({o.category for o in demo_origins()}) == 8


# --- ingest -------------------------------------------------------------------

def _kml(n):
    marks = "".join(f"<Placemark><name>a{i}</name><Point><coordinates>{-6.3 + i / 1000},{53.3 + i / 1000},0"
                    f"</coordinates></Point></Placemark>" for i in range(n))
    return f'<kml xmlns="http://www.opengis.net/kml/2.2"><Document>{marks}</Document></kml>'


def test_ingest_reports_and_is_deterministic(tmp_path, capsys):
    (tmp_path / "a.kml").write_text(_kml(10))
    nace = "Name,Latitude,Longitude,Commercial-Delivery-Points,Section\n" + "".join(
        f"n{i},53.3,-6.2,{i + 1},P85.20\n" for i in range(5)) + "bad,153.3,-6.2,1,P85.20\n"
    (tmp_path / "n.csv").write_text(nace)
    (tmp_path / "d.csv").write_text('Latitude,Longitude,Address,Type,Price\n53.3,-6.2,"1, Main St",New,"€1,000"\n')
    args = ["ingest", "--kml", tmp_path / "a.kml", "--nace", tmp_path / "n.csv", "--daft", tmp_path / "d.csv"]
    assert run(*args, "--out-dir", tmp_path / "o1") == 0
    report = json.loads((tmp_path / "o1" / "ingest_report.json").read_text())
    assert report["kml"]["parsed"] == 10 and report["kml"]["dropped"] == 0
    assert (report["nace"]["parsed"], report["nace"]["dropped"]) == (5, 1)
    assert report["daft"]["parsed"] == 1
    assert run(*args, "--out-dir", tmp_path / "o2") == 0
    assert digest(tmp_path / "o1") == digest(tmp_path / "o2")


def test_ingest_errors_exit_2(tmp_path, capsys):
    assert run("ingest", "--out-dir", tmp_path) == 2
    (tmp_path / "n.csv").write_text("Name,Latitude\nx,1\n")
    assert run("ingest", "--nace", tmp_path / "n.csv", "--out-dir", tmp_path / "o") == 2
    err = capsys.readouterr().err
    assert "n.csv" in err and "Longitude" in err
    (tmp_path / "b.kml").write_text("<kml><Placemark>\n<oops></kml>")
    assert run("ingest", "--kml", tmp_path / "b.kml", "--out-dir", tmp_path / "o") == 2
    assert "line 2" in capsys.readouterr().err
    assert run("ingest", "--kml", tmp_path / "missing.kml", "--out-dir", tmp_path / "o") == 2


# --- grid ---------------------------------------------------------------------

def test_grid_command(tmp_path, capsys):
    assert run("grid", "--bbox", 0, 1, 0, 1, "--lat-step", 0.5, "--lon-step", 0.5, "--out", tmp_path / "g.csv") == 0
    assert (tmp_path / "g.csv").read_text() == "id,Latitude,Longitude\n0,0.0,0.0\n1,0.0,0.5\n2,0.5,0.0\n3,0.5,0.5\n"
    (tmp_path / "b.geojson").write_text(json.dumps(
        {"type": "Polygon", "coordinates": [[[-0.1, -0.1], [0.3, -0.1], [0.3, 0.3], [-0.1, 0.3], [-0.1, -0.1]]]}))
    assert run("grid", "--bbox", 0, 1, 0, 1, "--lat-step", 0.5, "--lon-step", 0.5, "--boundary",
               tmp_path / "b.geojson", "--out", tmp_path / "c.csv") == 0
    assert (tmp_path / "c.csv").read_text().splitlines()[1:] == ["0,0.0,0.0"]


# --- analyze ------------------------------------------------------------------

def analyze(out, *extra, env=None):
    return run("analyze", "--origins", DEMO["amenities.csv"], "--grid", DEMO["grid.csv"],
               "--backend", "synthetic", "--out-dir", out, *extra, env=env)


def test_analyze_demo_golden_and_stable(tmp_path, capsys, no_network):
    assert analyze(tmp_path / "a") == 0
    assert analyze(tmp_path / "b", "--parallelism", 1) == 0
    assert digest(tmp_path / "a") == digest(tmp_path / "b")
    assert (tmp_path / "a" / "topk.csv").read_bytes() == (GOLDEN / "demo_topk.csv").read_bytes()
    summary = json.loads((tmp_path / "a" / "summary.json").read_text())
    assert summary["origins"] == 8 and summary["destinations"] == 100
    assert summary["top_k_pairs"] <= 5 * 8
    for r in analysis.read_routed_csv((tmp_path / "a" / "routed.csv").read_text()):
        assert r.discrepancy_km >= -1e-6


def test_analyze_empty_grid(tmp_path, caplog):
    (tmp_path / "g.csv").write_text("id,Latitude,Longitude\n")
    with caplog.at_level(logging.WARNING, logger="walkgap"):
        code = run("analyze", "--origins", DEMO["amenities.csv"], "--grid", tmp_path / "g.csv",
                   "--out-dir", tmp_path / "o")
    assert code == 0
    assert any("empty" in r.getMessage() for r in caplog.records)
    assert (tmp_path / "o" / "topk.csv").read_text() == ",".join(analysis.ROUTED_HEADER) + "\n"


def test_http_without_key_exits_3_before_network(tmp_path, capsys, no_network):
    assert analyze(tmp_path / "o", "--backend", "http") == 3
    assert "WALKGAP_API_KEY" in capsys.readouterr().err
    assert not (tmp_path / "o").exists()


def _http_env(stub, tmp_path):
    return {"WALKGAP_API_KEY": "k", "WALKGAP_API_BASE_URL": stub.url,
            "WALKGAP_CACHE_DIR": str(tmp_path / "cache"), "WALKGAP_RATE_LIMIT_PER_S": "10000"}


def _fetched_keys(caplog):
    return [r.getMessage().split()[1] for r in caplog.records if r.getMessage().startswith("fetch ")]


def test_interrupted_run_resumes_from_cache(tmp_path, stub_server, caplog):
    env = _http_env(stub_server, tmp_path)
    stub_server.script = ["ok"] * 50 + [403] * 1000  # upstream starts refusing half way through
    with caplog.at_level(logging.INFO, logger="walkgap"):
        assert analyze(tmp_path / "o", "--backend", "http", "--parallelism", 1, env=env) == 1
    first = _fetched_keys(caplog)
    done_first = set(first[:50])
    assert len(done_first) == 50
    caplog.clear()
    stub_server.script = []
    with caplog.at_level(logging.INFO, logger="walkgap"):
        assert analyze(tmp_path / "o", "--backend", "http", env=env) == 0
    second = _fetched_keys(caplog)
    assert len(second) == len(set(second))  # no duplicate fetch lines
    assert not done_first & set(second)  # nothing cached is fetched again
    summary = json.loads((tmp_path / "o" / "summary.json").read_text())
    assert len(done_first) + len(second) == summary["candidate_pairs"]
    caplog.clear()
    with caplog.at_level(logging.INFO, logger="walkgap"):
        assert analyze(tmp_path / "o2", "--backend", "http", env=env) == 0
    assert _fetched_keys(caplog) == []
    for name in ("candidates.csv", "routed.csv", "topk.csv"):
        assert (tmp_path / "o" / name).read_bytes() == (tmp_path / "o2" / name).read_bytes()


# --- export -------------------------------------------------------------------

def test_export_counts_formats_and_determinism(tmp_path, capsys):
    assert analyze(tmp_path / "a") == 0
    assert run("export", "--analysis-dir", tmp_path / "a", "--out-dir", tmp_path / "x") == 0
    top = analysis.read_routed_csv((tmp_path / "a" / "topk.csv").read_text())
    rows = (tmp_path / "x" / "viz.csv").read_text().splitlines()
    assert len(rows) - 1 == viz_row_count(8, 24, 100, [len(r.waypoints) for r in top])
    doc = json.loads((tmp_path / "x" / "walkgap.geojson").read_text())
    kinds = [f["geometry"]["type"] for f in doc["features"]]
    assert kinds.count("Point") == 8 and kinds.count("Polygon") == 8 and kinds.count("LineString") == len(top)
    assert run("export", "--analysis-dir", tmp_path / "a", "--out-dir", tmp_path / "y") == 0
    assert digest(tmp_path / "x") == digest(tmp_path / "y")
    assert run("export", "--analysis-dir", tmp_path / "a", "--formats", "geojson", "--out-dir", tmp_path / "z") == 0
    assert [p.name for p in (tmp_path / "z").iterdir()] == ["walkgap.geojson"]


def test_export_missing_upstream_exit_2(tmp_path, capsys):
    assert run("export", "--analysis-dir", tmp_path, "--out-dir", tmp_path / "x") == 2
    assert "amenities.csv" in capsys.readouterr().err
    assert run("export", "--analysis-dir", tmp_path, "--formats", "png", "--out-dir", tmp_path / "x") == 2


# --- regress ------------------------------------------------------------------

def regress(tmp_path, houses, *extra, out="r"):
    return run("regress", "--houses", houses, "--amenities", DEMO["amenities.csv"],
               "--out-dir", tmp_path / out, *extra)


def test_regress_demo(tmp_path, capsys, no_network):
    assert regress(tmp_path, DEMO["houses.csv"]) == 0
    rep = json.loads((tmp_path / "r" / "regression_report.json").read_text())
    assert rep["houses_parsed"] == 240 and rep["houses_dropped_no_coverage"] >= 0
    assert rep["ols"]["nobs"] + rep["houses_dropped_no_coverage"] == 240
    assert {"white_test", "vif"} <= set(rep["ols"])
    assert 0 <= rep["wls"]["r_squared"] <= 1
    text = (tmp_path / "r" / "regression_report.txt").read_text()
    assert "OLS regression results" in text and "WLS regression results" in text
    with open(tmp_path / "r" / "regression_dataset.csv") as fh:
        assert len(list(csv.DictReader(fh))) == rep["ols"]["nobs"]
    assert regress(tmp_path, DEMO["houses.csv"], out="r2") == 0
    assert digest(tmp_path / "r") == digest(tmp_path / "r2")


def test_regress_unit_weights_equal_ols(tmp_path, capsys):
    assert regress(tmp_path, DEMO["houses.csv"], "--unit-weights") == 0
    rep = json.loads((tmp_path / "r" / "regression_report.json").read_text())
    o, w = dict(rep["ols"]), dict(rep["wls"])
    for d in (o, w):
        d.pop("method"), d.pop("white_test", None), d.pop("vif", None), d.pop("vif_note", None)
    for a, b in zip(o.pop("coefficients"), w.pop("coefficients")):
        assert a.keys() == b.keys()
        for k in a:
            assert a[k] == b[k] if k == "term" else a[k] == pytest.approx(b[k], rel=1e-10, abs=1e-12)
    assert o.keys() == w.keys()
    for k in o:
        assert o[k] == pytest.approx(w[k], rel=1e-10, abs=1e-12)


def _houses_csv(path, houses):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["Latitude", "Longitude", "Address", "Type", "Price"])
        for lat, lon, t, price in houses:
            w.writerow([lat, lon, "x", "New" if t else "SecondHand", repr(price)])


def test_regress_all_secondhand_exit_4(tmp_path, capsys):
    hs = [(h.point.lat, h.point.lon, 0, h.price_eur) for h in demo_houses()]
    _houses_csv(tmp_path / "h.csv", hs)
    assert regress(tmp_path, tmp_path / "h.csv") == 4
    assert "Unwalkability:New" in capsys.readouterr().err


def test_regress_per_level_coding_is_singular_exit_4(tmp_path, capsys):
    assert regress(tmp_path, DEMO["houses.csv"], "--type-coding", "per_level") == 4
    assert "Unwalkability:SecondHand" in capsys.readouterr().err


def test_regress_equal_prices(tmp_path, capsys):
    hs = [(h.point.lat, h.point.lon, h.dwelling_type, 250000.0) for h in demo_houses()]
    _houses_csv(tmp_path / "h.csv", hs)
    assert regress(tmp_path, tmp_path / "h.csv") == 0
    rep = json.loads((tmp_path / "r" / "regression_report.json").read_text())
    assert rep["ols"]["r_squared"] == pytest.approx(0, abs=1e-9)
    for row in rep["ols"]["coefficients"][1:]:
        assert row["coef"] == pytest.approx(0, abs=1e-9)


def test_regress_recovers_generating_coefficients(tmp_path, capsys):
    """End-to-end: prices generated from the computed predictors, then recovered by the CLI."""
    cfg = Config()
    backend = SyntheticBackend(demo_graph())
    rng = np.random.default_rng(12)
    truth = {"const": 12.0, "Type": 0.3, "DistCityCentre": -0.05, "Unwalkability": -0.4,
             "Unwalkability:New": 0.5, "Unwalkability:DistCityCentre": -0.1}
    rows = []
    for h in demo_houses(400):
        try:
            u = analysis.unwalkability_score(h.point, demo_origins(), backend)
        except Exception:
            continue
        d = haversine_distance(h.point, cfg.centre_point)
        t = h.dwelling_type
        mu = (truth["const"] + truth["Type"] * t + truth["DistCityCentre"] * d + truth["Unwalkability"] * u
              + truth["Unwalkability:New"] * u * t + truth["Unwalkability:DistCityCentre"] * u * d)
        rows.append((h.point.lat, h.point.lon, t, float(np.exp(mu + rng.normal(0, 0.02)))))
    _houses_csv(tmp_path / "h.csv", rows)
    assert regress(tmp_path, tmp_path / "h.csv", "--type-coding", "reference") == 0
    rep = json.loads((tmp_path / "r" / "regression_report.json").read_text())
    for row in rep["wls"]["coefficients"]:
        assert abs(row["coef"] - truth[row["term"]]) <= 3 * row["std_err"] + 1e-6, row


# --- configuration --------------------------------------------------------------

def test_config_precedence(tmp_path):
    p = tmp_path / "c.toml"
    p.write_text('top_k = 3\nparallelism = 2\ncircle_scale = 0.5\ncity_centre = [53.0, -6.0]\n')
    assert load_config(str(p)).top_k == 3
    cfg = load_config(str(p), env={"WALKGAP_TOP_K": "4", "WALKGAP_PARALLELISM": "6"}, overrides={"top_k": 7})
    assert (cfg.top_k, cfg.parallelism, cfg.circle_scale, cfg.city_centre) == (7, 6, 0.5, (53.0, -6.0))
    assert load_config(env={"WALKGAP_CITY_CENTRE": "1.5,2.5"}).city_centre == (1.5, 2.5)
    assert load_config().annulus_min_km == 1.5


@pytest.mark.parametrize("text", ["nope = 1\n", "top_k = 0\n", "parallelism = 0\n", "annulus_min_km = 3.0\n",
                                  "city_centre = [95.0, 0.0]\n", "top_k = [\n"])
def test_config_errors(tmp_path, text):
    p = tmp_path / "c.toml"
    p.write_text(text)
    with pytest.raises(ConfigurationError):
        load_config(str(p))


def test_bad_config_exit_3(tmp_path, capsys):
    p = tmp_path / "c.toml"
    p.write_text("bogus = 1\n")
    assert run("--config", p, "demo", "--out-dir", tmp_path) == 3
    assert run("--config", tmp_path / "missing.toml", "demo", "--out-dir", tmp_path) == 3


def test_api_key_from_env_or_file():
    assert Config(api_key="file").resolve_api_key({}) == "file"
    assert Config(api_key="file").resolve_api_key({"WALKGAP_API_KEY": "env"}) == "env"


def test_console_script_help():
    out = subprocess.run([sys.executable, "-m", "walkgap.cli", "--help"], capture_output=True, text=True)
    assert out.returncode == 0
    for cmd in ("ingest", "grid", "analyze", "regress", "export"):
        assert cmd in out.stdout
