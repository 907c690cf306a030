import io
import warnings

import pytest
from hypothesis import given, settings, strategies as st

from walkgap.errors import ParseError, SchemaError
from walkgap.export import write_addresses_csv, write_amenities_csv, write_houses_csv
from walkgap.geo import GeoPoint
from walkgap.ingest import (
    SECTION_CODES, AddressPoint, AmenityOrigin, Category, HouseRecord, parse_address_csv,
    parse_daft_csv, parse_kml_addresses, parse_nace_csv, parse_price,
)

KML_HEAD = b'<?xml version="1.0" encoding="UTF-8"?>\n<kml xmlns="http://www.opengis.net/kml/2.2"><Document>'
KML_TAIL = b"</Document></kml>"


def kml(placemarks):
    body = "".join(
        f"<Placemark><name>{name}</name><Point><coordinates>{coords}</coordinates></Point></Placemark>"
        for name, coords in placemarks)
    return KML_HEAD + body.encode() + KML_TAIL


def test_kml_single_placemark_swaps_lon_lat():
    out = parse_kml_addresses(kml([("a", "-6.26,53.35,0")]))
    assert out == [AddressPoint("a", GeoPoint(53.35, -6.26))]
    assert out.dropped == 0


def test_kml_empty_document_warns():
    with pytest.warns(RuntimeWarning):
        out = parse_kml_addresses(KML_HEAD + KML_TAIL)
    assert out == [] and out.dropped == 0


def test_kml_thousand_placemarks_three_bad():
    marks = [(f"p{i}", f"{-6.3 + i * 1e-4},{53.3 + i * 1e-4},0") for i in range(1000)]
    for i in (5, 500, 999):
        marks[i] = (f"p{i}", "-6.3,999,0")
    out = parse_kml_addresses(kml(marks))
    assert len(out) == 997 and out.dropped == 3
    assert out.total == 1000


def test_kml_placemark_without_coordinates_is_counted():
    data = KML_HEAD + b"<Placemark><name>x</name></Placemark>" + kml([("a", "1,2")])[len(KML_HEAD):]
    out = parse_kml_addresses(data)
    assert len(out) == 1 and out.dropped == 1


def test_kml_malformed_reports_position():
    with pytest.raises(ParseError) as ei:
        parse_kml_addresses(b"<kml><Document><Placemark>\n<oops></Document></kml>")
    assert ei.value.line == 2 and ei.value.column is not None


def test_kml_without_altitude_and_extra_whitespace():
    out = parse_kml_addresses(kml([("a", "\n   -6.1,53.2  \n")]))
    assert out[0].point == GeoPoint(53.2, -6.1)


NACE_HEADER = "Name,Latitude,Longitude,Commercial-Delivery-Points,Section\n"


def test_nace_direct_mapping():
    out = parse_nace_csv((NACE_HEADER + "Trinity College,53.344,-6.259,9,P85.42\n").encode())
    (o,) = out
    assert o.category is Category.University
    assert o.importance_weight == 9.0 and o.delivery_points == 9
    assert o.point == GeoPoint(53.344, -6.259)


@pytest.mark.parametrize("raw", ["", "n/a", "  "])
def test_nace_blank_delivery_points_default_to_one(raw):
    out = parse_nace_csv((NACE_HEADER + f"X,53.3,-6.2,{raw},G47.11\n").encode())
    assert out[0].importance_weight == 1.0


def test_nace_all_eight_categories():
    rows = "".join(f"n{i},53.3,-6.2,{i + 1},{code}\n" for i, code in enumerate(SECTION_CODES.values()))
    out = parse_nace_csv((NACE_HEADER + rows).encode())
    assert len(out) == 8
    assert {o.category for o in out} == set(Category)


def test_nace_missing_column_names_it():
    with pytest.raises(SchemaError) as ei:
        parse_nace_csv(b"Name,Latitude,Longitude,Section\nx,1,2,P85.20\n")
    assert ei.value.missing_column == "Commercial-Delivery-Points"
    assert "Commercial-Delivery-Points" in str(ei.value)


def test_nace_bad_coordinate_and_unknown_code_dropped():
    rows = "a,53.3,-6.2,1,P85.20\nb,253.3,-6.2,1,P85.20\nc,53.3,-6.2,1,Z99.99\nd,53.3,-6.2,inf,P85.20\n"
    out = parse_nace_csv((NACE_HEADER + rows).encode())
    assert [o.name for o in out] == ["a", "d"] and out.dropped == 2
    assert out[1].delivery_points == 1


def test_nace_bom_and_aliases():
    data = "﻿Business Name,Lat,Lng,Delivery Points,NACE Code\nx,53.3,-6.2,3,q.86.90\n".encode("utf-8")
    (o,) = parse_nace_csv(data)
    assert o.category is Category.Medical and o.delivery_points == 3


def test_nace_custom_category_map():
    out = parse_nace_csv((NACE_HEADER + "x,53.3,-6.2,3,ZZ1\n").encode(), category_map={"ZZ1": Category.Garda})
    assert out[0].category is Category.Garda


DAFT_HEADER = "Latitude,Longitude,Address,Type,Price\n"


def test_daft_field_mapping_and_currency():
    (h,) = parse_daft_csv((DAFT_HEADER + '53.34,-6.27,12 X Street,New,"€350,000"\n').encode())
    assert h == HouseRecord(GeoPoint(53.34, -6.27), "12 X Street", 1, 350000.0)


@pytest.mark.parametrize("price", ["abc", "0", "-5", "inf", ""])
def test_daft_bad_price_dropped(price):
    out = parse_daft_csv((DAFT_HEADER + f"53.34,-6.27,a,New,{price}\n").encode())
    assert out == [] and out.dropped == 1


def test_daft_unknown_type_dropped():
    out = parse_daft_csv((DAFT_HEADER + "53.34,-6.27,a,Castle,100\n").encode())
    assert out.dropped == 1


def test_daft_fixture_type_sum():
    rows = "".join(f"53.3,-6.2,{i} Road,{'New' if i % 5 in (0, 1) else 'Second-Hand Dwelling'},{100000 + i}\n"
                   for i in range(20))
    out = parse_daft_csv((DAFT_HEADER + rows).encode())
    assert len(out) == 20
    assert sum(h.dwelling_type for h in out) == 8


def test_daft_missing_header():
    with pytest.raises(SchemaError):
        parse_daft_csv(b"")
    with pytest.raises(SchemaError):
        parse_daft_csv(b"Latitude,Longitude,Price\n1,2,3\n")


@pytest.mark.parametrize("text,value", [("€1,234", 1234.0), ("EUR 99", 99.0), ("$5", 5.0), ("1e3", 1000.0)])
def test_parse_price(text, value):
    assert parse_price(text) == value


def test_non_utf8_is_parse_error():
    with pytest.raises(ParseError):
        parse_daft_csv(DAFT_HEADER.encode() + b"\xff\xfe,1\n")


def test_sources_path_and_stream(tmp_path):
    p = tmp_path / "n.csv"
    p.write_bytes((NACE_HEADER + "x,53.3,-6.2,3,P85.20\n").encode())
    assert parse_nace_csv(str(p)) == parse_nace_csv(io.BytesIO(p.read_bytes()))


# --- round trips through the normalized writers -----------------------------

lat = st.floats(-90, 90, allow_nan=False)
lon = st.floats(-180, 180, allow_nan=False)
text = st.text(st.characters(blacklist_categories=("Cs", "Cc")), min_size=1, max_size=20).map(str.strip).filter(bool)


def _xml_safe(s):
    return "".join(c for c in s if c not in "<>&")


@settings(max_examples=60)
@given(st.lists(st.tuples(lat, lon), max_size=30))
def test_kml_to_csv_round_trip(coords):
    marks = [(f"id{i}", f"{lo!r},{la!r},0") for i, (la, lo) in enumerate(coords)]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        recs = parse_kml_addresses(kml(marks))
    buf = io.StringIO()
    write_addresses_csv(recs, buf)
    again = parse_address_csv(buf.getvalue().encode())
    assert list(again) == list(recs)
    assert len(recs) + recs.dropped == len(coords)


@settings(max_examples=60)
@given(st.lists(st.tuples(text, st.sampled_from(list(Category)), lat, lon, st.integers(1, 17)), max_size=20))
def test_amenity_round_trip(rows):
    recs = [AmenityOrigin(i, n, c, GeoPoint(a, b), d) for i, (n, c, a, b, d) in enumerate(rows)]
    buf = io.StringIO()
    write_amenities_csv(recs, buf)
    assert list(parse_nace_csv(buf.getvalue().encode())) == recs


@settings(max_examples=60)
@given(st.lists(st.tuples(lat, lon, text, st.integers(0, 1), st.floats(1, 1e9)), max_size=20))
def test_house_round_trip(rows):
    recs = [HouseRecord(GeoPoint(a, b), addr, t, p) for a, b, addr, t, p in rows]
    buf = io.StringIO()
    write_houses_csv(recs, buf)
    assert list(parse_daft_csv(buf.getvalue().encode())) == recs


@settings(max_examples=60)
@given(st.lists(st.one_of(st.tuples(lat, lon), st.tuples(st.floats(91, 1e3), lon)), max_size=40))
def test_drop_accounting(coords):
    body = "".join(f"x,{a!r},{b!r},1,P85.20\n" for a, b in coords)
    out = parse_nace_csv((NACE_HEADER + body).encode())
    assert len(out) + out.dropped == len(coords)
    assert all(-90 <= o.point.lat <= 90 for o in out)
