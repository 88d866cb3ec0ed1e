"""Remote-executor wire protocol: HTTP service over the simulator, plus the
matching client, so a pipeline can exercise the same JSON path it would use
against an external browser-automation adapter.

Protocol: POST /execute with {"action": "navigate"|"fill"|"submit"|"page",
"target": ..., "value": ...} returning {"html": ..., "url": ...}.
"""

from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from .errors import ExecutorFailure
from .simulator import SimulatedFormSpec
from .submission import PageState, SimulatorExecutor


class RemoteExecutor:
    """Executor client speaking the JSON protocol against a remote session."""

    def __init__(self, endpoint: str, timeout: float = 30.0):
        self.endpoint = endpoint.rstrip("/")
        self.timeout = timeout

    def _call(self, action: str, target: str = "", value: str = "") -> PageState:
        import requests

        try:
            response = requests.post(
                f"{self.endpoint}/execute",
                json={"action": action, "target": target, "value": value},
                timeout=self.timeout,
            )
            response.raise_for_status()
            data = response.json()
        except Exception as exc:  # noqa: BLE001 - transport errors vary
            raise ExecutorFailure(f"executor call {action!r} failed: {exc}") from exc
        if "error" in data:
            raise ExecutorFailure(data["error"])
        return PageState(html=data["html"], url=data["url"])

    def navigate(self, url: str) -> None:
        self._call("navigate", target=url)

    def fill(self, target: str, value: str) -> None:
        self._call("fill", target=target, value=value)

    def submit(self) -> None:
        self._call("submit")

    def page(self) -> PageState:
        return self._call("page")


class _Handler(BaseHTTPRequestHandler):
    executor: SimulatorExecutor
    lock: threading.Lock

    def log_message(self, *args):  # quiet test runs
        pass

    def do_POST(self):
        if self.path != "/execute":
            self.send_error(404)
            return
        length = int(self.headers.get("Content-Length", 0))
        try:
            request = json.loads(self.rfile.read(length) or b"{}")
        except json.JSONDecodeError:
            self._reply(400, {"error": "bad json"})
            return
        action = request.get("action")
        with self.lock:
            try:
                if action == "navigate":
                    self.executor.navigate(request.get("target", ""))
                elif action == "fill":
                    self.executor.fill(request.get("target", ""), request.get("value", ""))
                elif action == "submit":
                    self.executor.submit()
                elif action != "page":
                    self._reply(400, {"error": f"unknown action {action!r}"})
                    return
                state = self.executor.page()
                self._reply(200, {"html": state.html, "url": state.url})
            except ExecutorFailure as exc:
                self._reply(200, {"error": str(exc)})

    def _reply(self, status: int, payload: dict):
        body = json.dumps(payload).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)


def make_server(spec: SimulatedFormSpec, host: str = "127.0.0.1", port: int = 0):
    """Build (but do not start) an HTTP server for the spec. Port 0 picks a
    free port; read it back from server.server_address."""
    handler = type(
        "SimHandler",
        (_Handler,),
        {"executor": SimulatorExecutor(spec), "lock": threading.Lock()},
    )
    return ThreadingHTTPServer((host, port), handler)


def serve_forever(spec: SimulatedFormSpec, host: str, port: int) -> None:
    server = make_server(spec, host, port)
    address = server.server_address
    print(f"serving {spec.form_id} executor protocol on http://{address[0]}:{address[1]}/execute")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        server.shutdown()
