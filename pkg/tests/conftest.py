import json
import threading
from contextlib import contextmanager
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

import pytest

from pdnrg.corpus import load_dialogues, load_reading_sets

FIXTURES = Path(__file__).parent / "fixtures"
CORPUS = FIXTURES / "corpus.json"
READING_SETS = FIXTURES / "reading_sets.json"


@pytest.fixture
def corpus_path():
    return CORPUS


@pytest.fixture
def reading_sets_path():
    return READING_SETS


@pytest.fixture
def dialogues():
    return load_dialogues(CORPUS)


@pytest.fixture
def reading_sets():
    return load_reading_sets(READING_SETS)


class StubServer:
    """Records every request body; ``respond(payload, n)`` returns ``(status, body)``."""

    def __init__(self, respond):
        self.respond = respond
        self.requests = []
        self.raw = []
        stub = self

        class Handler(BaseHTTPRequestHandler):
            def do_POST(self):
                length = int(self.headers.get("Content-Length", 0))
                body = self.rfile.read(length)
                stub.raw.append(body)
                payload = json.loads(body)
                stub.requests.append(payload)
                status, out = stub.respond(payload, len(stub.requests))
                data = out if isinstance(out, bytes) else json.dumps(out).encode()
                self.send_response(status)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(data)))
                self.end_headers()
                self.wfile.write(data)

            def log_message(self, *args):
                pass

        self.httpd = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
        self.url = f"http://127.0.0.1:{self.httpd.server_port}/"

    def __enter__(self):
        self.thread = threading.Thread(target=self.httpd.serve_forever, daemon=True)
        self.thread.start()
        return self

    def __exit__(self, *exc):
        self.httpd.shutdown()
        self.httpd.server_close()


@contextmanager
def stub_server(respond):
    with StubServer(respond) as s:
        yield s


@pytest.fixture
def stub():
    return stub_server


# one line per acceptance criterion, repeated at the end of the run
ACCEPTANCE_LINES: dict[int, str] = {}


def record_acceptance(number: int, ok: bool, title: str, detail: str = "") -> None:
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {title}" + (f"  ({detail})" if detail else "")
    ACCEPTANCE_LINES[number] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[n])
