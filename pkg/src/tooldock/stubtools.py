"""Bundled stub HTTP server for exercising api tools and the chat backend.

Routes are configurable at runtime: canned bodies, status codes, delays, and
per-route hit counting.  Binds an ephemeral localhost port.
"""

from __future__ import annotations

import json
import threading
import time
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer


@dataclass
class StubRoute:
    status: int = 200
    body: str = ""
    content_type: str = "text/plain; charset=utf-8"
    delay_ms: int = 0
    hits: int = 0


def chat_completion_body(content: str, tool_call: dict | None = None) -> str:
    """Canned OpenAI-style completion body for the chat-completions route."""
    message: dict = {"role": "assistant", "content": content}
    if tool_call is not None:
        message["tool_calls"] = [
            {
                "id": "call_0",
                "type": "function",
                "function": {
                    "name": tool_call["tool_name"],
                    "arguments": json.dumps(tool_call.get("arguments", {})),
                },
            }
        ]
    return json.dumps(
        {
            "id": "cmpl-stub",
            "object": "chat.completion",
            "choices": [{"index": 0, "message": message, "finish_reason": "stop"}],
            "usage": {"prompt_tokens": 7, "completion_tokens": 5, "total_tokens": 12},
        }
    )


class StubToolServer:
    """Threaded HTTP server with a mutable route table.

    Lookup is exact (METHOD, path) first, then longest matching
    (METHOD, path-prefix) among routes registered with `prefix=True`.
    """

    def __init__(self):
        self._routes: dict[tuple[str, str], StubRoute] = {}
        self._prefix_routes: dict[tuple[str, str], StubRoute] = {}
        self._lock = threading.Lock()
        self.requests: list[dict] = []
        self._server: ThreadingHTTPServer | None = None
        self._thread: threading.Thread | None = None

    @property
    def base_url(self) -> str:
        assert self._server is not None, "server not started"
        host, port = self._server.server_address[:2]
        return f"http://{host}:{port}"

    def set_route(
        self,
        method: str,
        path: str,
        *,
        status: int = 200,
        body: str = "",
        content_type: str = "text/plain; charset=utf-8",
        delay_ms: int = 0,
        prefix: bool = False,
    ) -> StubRoute:
        route = StubRoute(status=status, body=body, content_type=content_type, delay_ms=delay_ms)
        key = (method.upper(), path)
        with self._lock:
            if prefix:
                self._prefix_routes[key] = route
            else:
                self._routes[key] = route
        return route

    def set_json_route(self, method: str, path: str, document, **kwargs) -> StubRoute:
        return self.set_route(
            method, path, body=json.dumps(document), content_type="application/json", **kwargs
        )

    def set_chat_completion(self, content: str, tool_call: dict | None = None) -> StubRoute:
        return self.set_route(
            "POST",
            "/chat/completions",
            body=chat_completion_body(content, tool_call),
            content_type="application/json",
        )

    def clear_routes(self) -> None:
        with self._lock:
            self._routes.clear()
            self._prefix_routes.clear()
            self.requests.clear()

    def _resolve(self, method: str, path: str) -> StubRoute | None:
        with self._lock:
            route = self._routes.get((method, path))
            if route is not None:
                return route
            best: StubRoute | None = None
            best_len = -1
            for (m, p), candidate in self._prefix_routes.items():
                if m == method and path.startswith(p) and len(p) > best_len:
                    best, best_len = candidate, len(p)
            return best

    def start(self) -> "StubToolServer":
        outer = self

        class Handler(BaseHTTPRequestHandler):
            def log_message(self, *args):  # keep test output quiet
                pass

            def _serve(self):
                try:
                    self._serve_inner()
                except (BrokenPipeError, ConnectionResetError):
                    pass  # client gave up (e.g. timeout while we slept)

            def _serve_inner(self):
                length = int(self.headers.get("Content-Length") or 0)
                body = self.rfile.read(length).decode("utf-8") if length else ""
                route = outer._resolve(self.command, self.path.split("?")[0])
                with outer._lock:
                    outer.requests.append(
                        {"method": self.command, "path": self.path, "body": body, "headers": dict(self.headers)}
                    )
                if route is None:
                    self.send_response(404)
                    self.send_header("Content-Type", "text/plain")
                    self.end_headers()
                    self.wfile.write(b"no such route")
                    return
                with outer._lock:
                    route.hits += 1
                if route.delay_ms:
                    time.sleep(route.delay_ms / 1000.0)
                payload = route.body.encode("utf-8")
                self.send_response(route.status)
                self.send_header("Content-Type", route.content_type)
                self.send_header("Content-Length", str(len(payload)))
                self.end_headers()
                self.wfile.write(payload)

            do_GET = _serve
            do_POST = _serve
            do_PUT = _serve
            do_DELETE = _serve

        self._server = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)
        self._thread.start()
        return self

    def stop(self) -> None:
        if self._server is not None:
            self._server.shutdown()
            self._server.server_close()
            self._server = None

    def __enter__(self) -> "StubToolServer":
        return self.start()

    def __exit__(self, *exc):
        self.stop()
