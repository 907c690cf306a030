import json
import math
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import parse_qs, urlparse

import pytest

ACCEPTANCE_LINES = []


def record_criterion(name, passed, detail=""):
    ACCEPTANCE_LINES.append((name, passed, detail))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for name, passed, detail in ACCEPTANCE_LINES:
        terminalreporter.write_line(f"[{'PASS' if passed else 'FAIL'}] {name}" + (f" -- {detail}" if detail else ""))


def _hav_km(lat1, lon1, lat2, lon2, r=6371.0):
    p1, p2 = math.radians(lat1), math.radians(lat2)
    h = math.sin((p2 - p1) / 2) ** 2 + math.cos(p1) * math.cos(p2) * math.sin(math.radians(lon2 - lon1) / 2) ** 2
    return 2 * r * math.atan2(math.sqrt(h), math.sqrt(1 - h))


def directions_body(origin, destination, status="OK", detour=1.3):
    """Directions-style response: start, midpoint, end; length = detour * great circle."""
    if status != "OK":
        return json.dumps({"status": status, "routes": []}).encode()
    (la1, lo1), (la2, lo2) = origin, destination
    mid = ((la1 + la2) / 2, lo1)
    metres = round(detour * _hav_km(la1, lo1, la2, lo2) * 1000)
    doc = {
        "status": "OK",
        "routes": [{"legs": [{
            "distance": {"text": f"{metres / 1000:.1f} km", "value": metres},
            "start_location": {"lat": la1, "lng": lo1},
            "end_location": {"lat": la2, "lng": lo2},
            "steps": [
                {"end_location": {"lat": mid[0], "lng": mid[1]}},
                {"end_location": {"lat": la2, "lng": lo2}},
            ],
        }]}],
    }
    return json.dumps(doc).encode()


class StubDirections:
    """Local HTTP server imitating a directions API.

    ``script`` is a list of actions consumed one per request; once empty every
    request gets an OK route. Actions: "ok", "drop" (close the socket without
    replying), "garbage" (200 with a non-JSON body), an int HTTP status, or
    "status:<NAME>".
    """

    def __init__(self):
        self.requests = []
        self.script = []
        self.lock = threading.Lock()
        stub = self

        class Handler(BaseHTTPRequestHandler):
            def log_message(self, *a):
                pass

            def do_GET(self):
                q = {k: v[0] for k, v in parse_qs(urlparse(self.path).query).items()}
                with stub.lock:
                    stub.requests.append(q)
                    action = stub.script.pop(0) if stub.script else "ok"
                if action == "drop":
                    self.close_connection = True
                    self.connection.shutdown(2)
                    return
                if isinstance(action, int):
                    self.send_response(action)
                    self.end_headers()
                    return
                if action == "garbage":
                    body = b"{not json"
                else:
                    status = action.split(":", 1)[1] if action.startswith("status:") else "OK"
                    o = tuple(float(x) for x in q["origin"].split(","))
                    d = tuple(float(x) for x in q["destination"].split(","))
                    body = directions_body(o, d, status)
                self.send_response(200)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(body)))
                self.end_headers()
                self.wfile.write(body)

        self.server = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
        self.url = f"http://127.0.0.1:{self.server.server_address[1]}/directions/json"
        self.thread = threading.Thread(target=self.server.serve_forever, kwargs={"poll_interval": 0.01},
                                       daemon=True)

    def __enter__(self):
        self.thread.start()
        return self

    def __exit__(self, *exc):
        self.server.shutdown()
        self.server.server_close()


@pytest.fixture
def stub_server():
    with StubDirections() as s:
        yield s
