"""Minimal HTTP service exposing a tournament to the annotation UI.

Endpoints:
  GET  /api/tournament  full bracket state
  GET  /api/pairing     the open pairing (or the champion once complete)
  POST /api/verdict     {"pairing_id", "verdict", "rater"?} -> new state,
                        409 when the pairing is stale for that rater
  GET  /api/agreement   {"kappa": float|null, ...}
  GET  /assets/<name>   registered SVG assets only
  GET  /<path>          static files from the UI directory, if configured

Served with the stdlib threading server; verdict handling is serialised under
a lock so concurrent raters cannot double-resolve a pairing.
"""

from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

from .exceptions import ServiceError, StalePairingError
from .tournament import Tournament

_CONTENT_TYPES = {
    ".html": "text/html; charset=utf-8",
    ".css": "text/css; charset=utf-8",
    ".js": "application/javascript; charset=utf-8",
    ".mjs": "application/javascript; charset=utf-8",
    ".json": "application/json",
    ".svg": "image/svg+xml",
}


def _pairing_payload(tournament: Tournament) -> dict:
    pairing = tournament.next_pairing()
    if pairing is None:
        return {
            "complete": True,
            "pairing": None,
            "champion": tournament.champion.to_json(),
            "resolved": tournament.total_pairings,
            "total_pairings": tournament.total_pairings,
        }
    return {
        "complete": False,
        "pairing": pairing.to_json(),
        "champion": None,
        "resolved": sum(1 for p in tournament.pairings if p.resolved),
        "total_pairings": tournament.total_pairings,
    }


class _Handler(BaseHTTPRequestHandler):
    server_version = "beamlat"
    tournament: Tournament
    assets: dict[str, Path]
    ui_dir: Path | None
    lock: threading.Lock

    def log_message(self, format, *args):  # noqa: A002 - stdlib signature
        pass

    def _send_json(self, payload: dict, status: int = 200) -> None:
        body = json.dumps(payload, sort_keys=True).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.end_headers()
        self.wfile.write(body)

    def _send_file(self, path: Path) -> None:
        body = path.read_bytes()
        self.send_response(200)
        self.send_header(
            "Content-Type", _CONTENT_TYPES.get(path.suffix, "application/octet-stream")
        )
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def do_GET(self):  # noqa: N802 - stdlib naming
        route = self.path.split("?", 1)[0]
        with self.lock:
            if route == "/api/tournament":
                # materialise the open pairing first, so the bracket state
                # always vouches for whatever /api/pairing hands out
                self.tournament.next_pairing()
                return self._send_json(self.tournament.to_json())
            if route == "/api/pairing":
                return self._send_json(_pairing_payload(self.tournament))
            if route == "/api/agreement":
                return self._send_json(self.tournament.agreement())
        if route.startswith("/assets/"):
            name = route[len("/assets/") :]
            asset = self.assets.get(name)
            if asset is None or not asset.is_file():
                return self._send_json({"error": f"unknown asset {name!r}"}, status=404)
            return self._send_file(asset)
        if self.ui_dir is not None:
            rel = route.lstrip("/") or "index.html"
            target = (self.ui_dir / rel).resolve()
            if str(target).startswith(str(self.ui_dir.resolve())) and target.is_file():
                return self._send_file(target)
        return self._send_json({"error": f"no route for {route!r}"}, status=404)

    def do_POST(self):  # noqa: N802 - stdlib naming
        route = self.path.split("?", 1)[0]
        if route != "/api/verdict":
            return self._send_json({"error": f"no route for {route!r}"}, status=404)
        try:
            length = int(self.headers.get("Content-Length", "0"))
            payload = json.loads(self.rfile.read(length).decode("utf-8") or "{}")
            pairing_id = payload["pairing_id"]
            verdict = payload["verdict"]
            rater = payload.get("rater", "anonymous")
        except (ValueError, KeyError) as exc:
            return self._send_json({"error": f"bad verdict payload: {exc}"}, status=400)
        with self.lock:
            try:
                state = self.tournament.record_verdict(pairing_id, verdict, rater=rater)
            except StalePairingError as exc:
                return self._send_json({"error": str(exc)}, status=409)
            except ValueError as exc:
                return self._send_json({"error": str(exc)}, status=400)
        return self._send_json(state)


class TournamentServer:
    """Owns the HTTP server plus the shared verdict lock.  port=0 binds an
    ephemeral port, exposed via .port once constructed."""

    def __init__(
        self,
        tournament: Tournament,
        assets: dict[str, str | Path] | None = None,
        ui_dir: str | Path | None = None,
        host: str = "127.0.0.1",
        port: int = 0,
    ):
        handler = type(
            "BoundHandler",
            (_Handler,),
            {
                "tournament": tournament,
                "assets": {k: Path(v) for k, v in (assets or {}).items()},
                "ui_dir": Path(ui_dir) if ui_dir is not None else None,
                "lock": threading.Lock(),
            },
        )
        try:
            self._httpd = ThreadingHTTPServer((host, port), handler)
        except OSError as exc:
            raise ServiceError(f"cannot bind {host}:{port}: {exc}") from exc
        self._thread: threading.Thread | None = None

    @property
    def port(self) -> int:
        return self._httpd.server_address[1]

    @property
    def url(self) -> str:
        host, port = self._httpd.server_address[:2]
        return f"http://{host}:{port}"

    def serve_forever(self) -> None:
        self._httpd.serve_forever()

    def start(self) -> None:
        self._thread = threading.Thread(target=self._httpd.serve_forever, daemon=True)
        self._thread.start()

    def shutdown(self) -> None:
        self._httpd.shutdown()
        self._httpd.server_close()
        if self._thread is not None:
            self._thread.join(timeout=5)
            self._thread = None
