"""HTTP transport with rate limiting and a recorded-response replay mode.

Every outbound request in the package goes through a Transport, so the whole
pipeline can run offline against response fixtures recorded on disk.
"""

from __future__ import annotations

import json
import logging
import threading
import time
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping, Protocol

import requests

from .errors import ApiThrottled, NetworkError

logger = logging.getLogger(__name__)


@dataclass
class TransportResponse:
    status: int
    body: bytes
    headers: dict[str, str] = field(default_factory=dict)

    @property
    def text(self) -> str:
        return self.body.decode("utf-8", errors="replace")


class Transport(Protocol):
    def get(self, url: str, params: Mapping[str, str]) -> TransportResponse: ...


class RateLimiter:
    """Sliding-window limiter: at most `max_per_second` acquisitions in any 1 s window.

    Thread-safe (one limiter is shared across concurrent fetch workers).
    Clock and sleep are injectable so the window invariant is testable with a
    fake clock.
    """

    def __init__(
        self,
        max_per_second: int,
        clock: Callable[[], float] = time.monotonic,
        sleep: Callable[[float], None] = time.sleep,
    ):
        if max_per_second < 1:
            raise ValueError("max_per_second must be >= 1")
        self.max_per_second = max_per_second
        self._clock = clock
        self._sleep = sleep
        self._window: deque[float] = deque()
        self._lock = threading.Lock()

    def acquire(self) -> None:
        while True:
            with self._lock:
                now = self._clock()
                while self._window and now - self._window[0] >= 1.0:
                    self._window.popleft()
                if len(self._window) < self.max_per_second:
                    self._window.append(now)
                    return
                wait = self._window[0] + 1.0 - now
            self._sleep(wait)


def request_key(url: str, params: Mapping[str, str]) -> str:
    """Canonical identity of a GET request, used to match recorded responses."""
    return json.dumps({"url": url, "params": {k: str(v) for k, v in sorted(params.items())}},
                      sort_keys=True, separators=(",", ":"))


class RequestsTransport:
    """Live transport over `requests`, funneled through one rate limiter."""

    def __init__(self, rate_limiter: RateLimiter | None = None, timeout: float = 30.0):
        self._session = requests.Session()
        self._limiter = rate_limiter
        self._timeout = timeout
        self._count_lock = threading.Lock()
        self.request_count = 0

    def get(self, url: str, params: Mapping[str, str]) -> TransportResponse:
        if self._limiter is not None:
            self._limiter.acquire()
        with self._count_lock:
            self.request_count += 1
        try:
            resp = self._session.get(url, params=dict(params), timeout=self._timeout)
        except requests.RequestException as exc:
            raise NetworkError(f"GET {url} failed: {exc}") from exc
        return TransportResponse(
            status=resp.status_code,
            body=resp.content,
            headers={k.lower(): v for k, v in resp.headers.items()},
        )


class RecordedTransport:
    """Replays responses recorded under a fixture directory.

    Layout: `<dir>/routes.json` maps requests to body files:

        {"routes": [{"url": ..., "params": {...}, "body": "file.xml", "status": 200}]}

    Requests are matched on exact url + params. A request with no recorded
    response raises NetworkError: replay mode never touches the network.
    """

    def __init__(self, fixture_dir: str | Path):
        self._dir = Path(fixture_dir)
        self.request_count = 0
        self._routes: dict[str, tuple[Path, int, dict[str, str]]] = {}
        manifest = json.loads((self._dir / "routes.json").read_text())
        for route in manifest["routes"]:
            key = request_key(route["url"], route.get("params", {}))
            self._routes[key] = (
                self._dir / route["body"],
                int(route.get("status", 200)),
                {k.lower(): str(v) for k, v in route.get("headers", {}).items()},
            )

    def get(self, url: str, params: Mapping[str, str]) -> TransportResponse:
        self.request_count += 1
        key = request_key(url, params)
        if key not in self._routes:
            raise NetworkError(f"no recorded response for {url} with params {dict(params)}")
        body_path, status, headers = self._routes[key]
        return TransportResponse(status=status, body=body_path.read_bytes(), headers=headers)


class RecordingTransport:
    """Wraps a live transport and writes every exchange into a fixture directory,
    in the layout RecordedTransport replays. Useful for refreshing fixtures."""

    def __init__(self, inner: Transport, fixture_dir: str | Path):
        self._inner = inner
        self._dir = Path(fixture_dir)
        self._dir.mkdir(parents=True, exist_ok=True)
        self._routes_path = self._dir / "routes.json"
        if self._routes_path.exists():
            self._manifest = json.loads(self._routes_path.read_text())
        else:
            self._manifest = {"routes": []}

    def get(self, url: str, params: Mapping[str, str]) -> TransportResponse:
        resp = self._inner.get(url, params)
        body_name = f"response_{len(self._manifest['routes']):04d}.bin"
        (self._dir / body_name).write_bytes(resp.body)
        self._manifest["routes"].append(
            {"url": url, "params": {k: str(v) for k, v in params.items()},
             "body": body_name, "status": resp.status}
        )
        self._routes_path.write_text(json.dumps(self._manifest, indent=2))
        return resp


def get_with_retries(
    transport: Transport,
    url: str,
    params: Mapping[str, str],
    max_attempts: int = 4,
    backoff_base: float = 0.5,
    sleep: Callable[[float], None] = time.sleep,
) -> TransportResponse:
    """GET with bounded retries and exponential backoff.

    Retries transient failures (network errors, 5xx). HTTP 429 surfaces as
    ApiThrottled with the server's retry-after, without burning retries.
    """
    last_error: Exception | None = None
    for attempt in range(max_attempts):
        try:
            resp = transport.get(url, params)
        except ApiThrottled:
            raise
        except NetworkError as exc:
            last_error = exc
            if attempt + 1 < max_attempts:
                sleep(backoff_base * (2 ** attempt))
            continue
        if resp.status == 429:
            retry_after = None
            raw = resp.headers.get("retry-after")
            if raw is not None:
                try:
                    retry_after = float(raw)
                except ValueError:
                    pass
            raise ApiThrottled(f"GET {url}: throttled by server", retry_after=retry_after)
        if resp.status >= 500:
            last_error = NetworkError(f"GET {url}: server error {resp.status}")
            if attempt + 1 < max_attempts:
                sleep(backoff_base * (2 ** attempt))
            continue
        if resp.status >= 400:
            raise NetworkError(f"GET {url}: HTTP {resp.status}")
        return resp
    raise NetworkError(f"GET {url}: giving up after {max_attempts} attempts") from last_error
