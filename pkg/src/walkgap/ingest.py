"""Parsers for the three source datasets.

* KML address points (``Placemark/Point/coordinates`` with ``lon,lat[,alt]``)
* NACE amenity CSV (name, coordinates, commercial delivery points, section code)
* Daft house price CSV (coordinates, address, dwelling type, price)

Every parser returns a :class:`ParseResult`, a plain list of records that also
carries how many input rows were dropped and why.
"""

from __future__ import annotations

import csv
import enum
import io
import logging
import math
import re
import warnings
import xml.etree.ElementTree as ET
from dataclasses import dataclass
from typing import BinaryIO, Dict, Iterable, List, Mapping, Optional, Sequence, Union

from walkgap.errors import InvalidInputError, ParseError, SchemaError
from walkgap.geo import GeoPoint

logger = logging.getLogger(__name__)

Source = Union[bytes, str, BinaryIO]


class Category(str, enum.Enum):
    PrimarySchool = "PrimarySchool"
    SecondarySchool = "SecondarySchool"
    University = "University"
    Religious = "Religious"
    Medical = "Medical"
    Retail = "Retail"
    SportsClub = "SportsClub"
    Garda = "Garda"


# Canonical NACE section code for each amenity category.
SECTION_CODES: Dict[Category, str] = {
    Category.PrimarySchool: "P85.20",
    Category.SecondarySchool: "P85.30",
    Category.University: "P85.42",
    Category.Religious: "S94.91",
    Category.Medical: "Q86.90",
    Category.Retail: "G47.11",
    Category.SportsClub: "QR93.12",
    Category.Garda: "O84.23",
}


def normalize_section_code(code: str) -> str:
    """``"Q.86.90"`` and ``"q86.90"`` both become ``"Q8690"``."""
    return re.sub(r"[^0-9A-Za-z]", "", code or "").upper()


DEFAULT_CATEGORY_MAP: Dict[str, Category] = {
    normalize_section_code(code): cat for cat, code in SECTION_CODES.items()
}


@dataclass(frozen=True)
class AddressPoint:
    id: str
    point: GeoPoint


@dataclass(frozen=True)
class AmenityOrigin:
    id: int
    name: str
    category: Category
    point: GeoPoint
    delivery_points: int = 1

    def __post_init__(self):
        if self.delivery_points < 1:
            raise InvalidInputError(f"delivery points must be >= 1, got {self.delivery_points}")

    @property
    def importance_weight(self) -> float:
        return float(importance_weight(self.delivery_points))

    @property
    def section_code(self) -> str:
        return SECTION_CODES[self.category]


@dataclass(frozen=True)
class HouseRecord:
    point: GeoPoint
    address: str
    dwelling_type: int  # 1 = New, 0 = SecondHand
    price_eur: float

    def __post_init__(self):
        if self.dwelling_type not in (0, 1):
            raise InvalidInputError(f"dwelling type must be 0 or 1, got {self.dwelling_type}")
        if not self.price_eur > 0:
            raise InvalidInputError(f"price must be positive, got {self.price_eur}")


def importance_weight(delivery_points: int) -> int:
    # Identity mapping; the observed range in the Dublin data is 1..17.
    return max(1, int(delivery_points))


class ParseResult(list):
    """List of parsed records plus drop accounting."""

    def __init__(self, records: Iterable = (), dropped: int = 0, reasons: Optional[List[str]] = None):
        super().__init__(records)
        self.dropped = dropped
        self.reasons = reasons if reasons is not None else []

    def drop(self, reason: str) -> None:
        self.dropped += 1
        self.reasons.append(reason)

    @property
    def total(self) -> int:
        return len(self) + self.dropped

    def report(self) -> dict:
        return {"parsed": len(self), "dropped": self.dropped}


# --- helpers ----------------------------------------------------------------

def _read_bytes(source: Source) -> bytes:
    if isinstance(source, bytes):
        return source
    if isinstance(source, str):
        with open(source, "rb") as fh:
            return fh.read()
    return source.read()


def _read_text(source: Source) -> str:
    data = _read_bytes(source)
    try:
        return data.decode("utf-8-sig")
    except UnicodeDecodeError as exc:
        raise ParseError(f"input is not valid UTF-8 ({exc.reason} at byte {exc.start})") from exc


def _key(name: str) -> str:
    return re.sub(r"[^0-9a-z]", "", name.lower())


def _resolve_columns(header: Sequence[str], aliases: Mapping[str, Sequence[str]],
                     required: Sequence[str]) -> Dict[str, int]:
    lookup = {_key(h): i for i, h in enumerate(header)}
    found: Dict[str, int] = {}
    for field, names in aliases.items():
        for name in names:
            idx = lookup.get(_key(name))
            if idx is not None:
                found[field] = idx
                break
    for field in required:
        if field not in found:
            wanted = aliases[field][0]
            raise SchemaError(f"missing required column {wanted!r} (accepted: {list(aliases[field])})",
                              column=wanted)
    return found


def _csv_rows(source: Source, aliases, required):
    text = _read_text(source)
    reader = csv.reader(io.StringIO(text, newline=""))
    try:
        header = next(reader)
    except StopIteration:
        raise SchemaError("empty CSV: header row required") from None
    cols = _resolve_columns(header, aliases, required)
    for row in reader:
        if not row or all(not c.strip() for c in row):
            continue
        yield reader.line_num, cols, row


def _cell(row: List[str], cols: Dict[str, int], field: str) -> str:
    idx = cols.get(field)
    if idx is None or idx >= len(row):
        return ""
    return row[idx].strip()


# --- KML --------------------------------------------------------------------

def _local(tag: str) -> str:
    return tag.rsplit("}", 1)[-1]


def parse_kml_addresses(source: Source) -> ParseResult:
    """Address points from a KML document, one per Placemark with coordinates."""
    out = ParseResult()
    data = _read_bytes(source)
    index = 0
    try:
        for _event, elem in ET.iterparse(io.BytesIO(data), events=("end",)):
            if _local(elem.tag) != "Placemark":
                continue
            index += 1
            coords = None
            name = None
            for child in elem.iter():
                tag = _local(child.tag)
                if tag == "coordinates" and coords is None:
                    coords = (child.text or "").strip()
                elif tag == "name" and name is None:
                    name = (child.text or "").strip()
            pid = elem.get("id") or name or str(index - 1)
            elem.clear()
            if not coords:
                out.drop(f"placemark {pid}: no coordinates")
                continue
            first = coords.split()[0]
            parts = first.split(",")
            try:
                lon, lat = float(parts[0]), float(parts[1])
                out.append(AddressPoint(pid, GeoPoint(lat, lon)))
            except (ValueError, IndexError, InvalidInputError) as exc:
                out.drop(f"placemark {pid}: {exc}")
    except ET.ParseError as exc:
        line, col = exc.position
        raise ParseError(f"malformed KML: {exc}", line=line, column=col) from exc
    if not out:
        warnings.warn("KML input contained no valid placemarks", RuntimeWarning, stacklevel=2)
    logger.info("KML: %d address points, %d dropped", len(out), out.dropped)
    return out


# --- NACE -------------------------------------------------------------------

NACE_ALIASES: Dict[str, Sequence[str]] = {
    "name": ("Name", "Property Name", "Business Name"),
    "lat": ("Latitude", "Lat"),
    "lon": ("Longitude", "Lon", "Lng", "Long"),
    "delivery": ("Commercial-Delivery-Points", "Commercial Delivery Points", "Delivery Points",
                 "delivery_points"),
    "section": ("Section", "Section Code", "NACE", "NACE Code", "section_code"),
}
NACE_REQUIRED = ("name", "lat", "lon", "delivery", "section")


def parse_nace_csv(source: Source, category_map: Optional[Mapping[str, Category]] = None,
                   aliases: Optional[Mapping[str, Sequence[str]]] = None) -> ParseResult:
    cmap = {normalize_section_code(k): Category(v)
            for k, v in (category_map or DEFAULT_CATEGORY_MAP).items()}
    out = ParseResult()
    for line, cols, row in _csv_rows(source, {**NACE_ALIASES, **(aliases or {})}, NACE_REQUIRED):
        code = _cell(row, cols, "section")
        cat = cmap.get(normalize_section_code(code))
        if cat is None:
            out.drop(f"line {line}: unknown section code {code!r}")
            continue
        try:
            point = GeoPoint(float(_cell(row, cols, "lat")), float(_cell(row, cols, "lon")))
        except (ValueError, InvalidInputError) as exc:
            out.drop(f"line {line}: bad coordinates ({exc})")
            continue
        raw = _cell(row, cols, "delivery")
        try:
            dp = int(float(raw))
        except (ValueError, OverflowError):
            dp = 1
        out.append(AmenityOrigin(len(out), _cell(row, cols, "name"), cat, point, max(dp, 1)))
    logger.info("NACE: %d amenities, %d dropped", len(out), out.dropped)
    return out


# --- Daft -------------------------------------------------------------------

DAFT_ALIASES: Dict[str, Sequence[str]] = {
    "lat": ("Latitude", "Lat"),
    "lon": ("Longitude", "Lon", "Lng", "Long"),
    "address": ("Address",),
    "type": ("Type", "Dwelling Type", "Description of Property", "Usage"),
    "price": ("Price", "Price (€)", "Price EUR"),
}
DAFT_REQUIRED = ("lat", "lon", "type", "price")

_CURRENCY = re.compile(r"[€$£,\s]|EUR", re.IGNORECASE)


def parse_price(text: str) -> float:
    value = float(_CURRENCY.sub("", text))
    if not (math.isfinite(value) and value > 0):
        raise ValueError(f"price must be positive and finite, got {text!r}")
    return value


def parse_dwelling_type(text: str) -> int:
    """Map a dwelling-type label to 1 (New) or 0 (SecondHand)."""
    key = _key(text)
    if key in ("1", "new") or key.startswith("new"):
        return 1
    if key in ("0",) or key.startswith("secondhand"):
        return 0
    raise ValueError(f"unknown dwelling type {text!r}")


def parse_daft_csv(source: Source, aliases: Optional[Mapping[str, Sequence[str]]] = None) -> ParseResult:
    out = ParseResult()
    for line, cols, row in _csv_rows(source, {**DAFT_ALIASES, **(aliases or {})}, DAFT_REQUIRED):
        try:
            point = GeoPoint(float(_cell(row, cols, "lat")), float(_cell(row, cols, "lon")))
            dtype = parse_dwelling_type(_cell(row, cols, "type"))
            price = parse_price(_cell(row, cols, "price"))
        except (ValueError, InvalidInputError) as exc:
            out.drop(f"line {line}: {exc}")
            continue
        out.append(HouseRecord(point, _cell(row, cols, "address"), dtype, price))
    logger.info("Daft: %d houses, %d dropped", len(out), out.dropped)
    return out


# --- normalized address CSV (written by walkgap.export.write_addresses_csv) --

ADDRESS_ALIASES: Dict[str, Sequence[str]] = {
    "id": ("Id", "PointID"),
    "lat": ("Latitude",),
    "lon": ("Longitude",),
}


def parse_address_csv(source: Source) -> ParseResult:
    out = ParseResult()
    for line, cols, row in _csv_rows(source, ADDRESS_ALIASES, ("id", "lat", "lon")):
        try:
            point = GeoPoint(float(_cell(row, cols, "lat")), float(_cell(row, cols, "lon")))
        except (ValueError, InvalidInputError) as exc:
            out.drop(f"line {line}: {exc}")
            continue
        out.append(AddressPoint(_cell(row, cols, "id"), point))
    return out
