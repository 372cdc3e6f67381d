"""Subprocess predictor speaking line-delimited JSON.

The child process receives one JSON object per line on stdin and answers
one JSON object per line on stdout:

  handshake   -> {"type": "info"}
  reply       <- {"type": "info", "n_classes": C, "n_members": E,
                  "modality": "image" | "text"}
  prediction  -> {"type": "predict", "id": I, "member": e | null,
                  "instances": [...]}
  reply       <- {"type": "result", "id": I, "probabilities": [[...], ...]}

An image instance is encoded as {"width": w, "height": h, "channels": c,
"pixels": [row-major floats in 0..1]}; a text instance is a JSON string.
``member: null`` requests the ensemble mean. Any {"type": "error", ...}
reply aborts the run with its message.
"""

from __future__ import annotations

import json
import queue
import shlex
import subprocess
import threading
from collections import deque
from dataclasses import dataclass

import numpy as np

from .errors import InputError, ProtocolError
from .predictors import Predictor

_STDERR_TAIL = 40  # lines of child stderr kept for diagnostics
_NEXT_ID = object()  # sentinel: allocate the request id under the wire lock


@dataclass(frozen=True)
class ExternalConfig:
    handshake_timeout: float = 10.0
    request_timeout: float = 60.0
    chunk_size: int = 256


def encode_instance(instance) -> dict | str:
    """Encode one instance for the wire."""
    if isinstance(instance, str):
        return instance
    arr = np.asarray(instance)
    if arr.ndim != 3 or arr.dtype != np.uint8:
        raise InputError("image instances must be uint8 arrays of shape (h, w, c)")
    h, w, c = arr.shape
    pixels = (arr.astype(np.float64) / 255.0).ravel(order="C").tolist()
    return {"width": w, "height": h, "channels": c, "pixels": pixels}


class ExternalPredictor(Predictor):
    """Client for an out-of-process model speaking the JSON line protocol.

    Wire access is serialised with a lock, so the predictor is safe to use
    from multiple worker threads.
    """

    def __init__(self, command: str | list[str], config: ExternalConfig | None = None):
        self.config = config or ExternalConfig()
        self.command = shlex.split(command) if isinstance(command, str) else list(command)
        self._lock = threading.Lock()
        self._next_id = 0
        self._stderr_tail: deque[str] = deque(maxlen=_STDERR_TAIL)
        self._lines: queue.Queue[str | None] = queue.Queue()
        try:
            self._proc = subprocess.Popen(
                self.command,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                stderr=subprocess.PIPE,
                text=True,
                bufsize=1,
            )
        except OSError as exc:
            raise ProtocolError(f"cannot start predictor {self.command!r}: {exc}") from exc
        threading.Thread(target=self._drain_stdout, daemon=True).start()
        threading.Thread(target=self._drain_stderr, daemon=True).start()
        info = self._roundtrip({"type": "info"}, self.config.handshake_timeout)
        if info.get("type") != "info":
            raise self._die(f"handshake replied with type {info.get('type')!r}")
        try:
            self.n_classes = int(info["n_classes"])
            self.n_members = int(info["n_members"])
            self.modality = str(info["modality"])
        except (KeyError, TypeError, ValueError) as exc:
            raise self._die(f"handshake reply missing fields: {info!r}") from exc
        if self.n_classes < 2 or self.n_members < 1 or self.modality not in ("image", "text"):
            raise self._die(f"handshake reply is inconsistent: {info!r}")

    def _drain_stdout(self):
        for line in self._proc.stdout:
            self._lines.put(line)
        self._lines.put(None)

    def _drain_stderr(self):
        for line in self._proc.stderr:
            self._stderr_tail.append(line.rstrip("\n"))

    def _diagnostics(self) -> str:
        code = self._proc.poll()
        parts = []
        if code is not None:
            parts.append(f"exit code {code}")
        if self._stderr_tail:
            parts.append("stderr tail:\n  " + "\n  ".join(self._stderr_tail))
        return ("; " + "; ".join(parts)) if parts else ""

    def _die(self, message: str) -> ProtocolError:
        err = ProtocolError(f"external predictor: {message}{self._diagnostics()}")
        self.close()
        return err

    def _roundtrip(self, request: dict, timeout: float) -> dict:
        with self._lock:
            if request.get("id") is _NEXT_ID:
                request["id"] = self._next_id
                self._next_id += 1
            try:
                self._proc.stdin.write(json.dumps(request) + "\n")
                self._proc.stdin.flush()
            except (BrokenPipeError, OSError):
                raise self._die("child closed its stdin pipe") from None
            try:
                line = self._lines.get(timeout=timeout)
            except queue.Empty:
                raise self._die(f"no reply within {timeout:g}s") from None
            if line is None:
                raise self._die("child exited before replying")
            try:
                reply = json.loads(line)
            except json.JSONDecodeError:
                raise self._die(f"malformed reply line {line!r:.200}") from None
        if not isinstance(reply, dict):
            raise self._die(f"reply is not an object: {reply!r:.200}")
        if reply.get("type") == "error":
            raise self._die(f"child reported: {reply.get('message')}")
        return reply

    def _predict(self, instances, member: int | None) -> np.ndarray:
        rows: list[list[float]] = []
        chunk = max(1, self.config.chunk_size)
        for start in range(0, len(instances), chunk):
            batch = instances[start:start + chunk]
            request = {
                "type": "predict",
                "id": _NEXT_ID,
                "member": member,
                "instances": [encode_instance(x) for x in batch],
            }
            reply = self._roundtrip(request, self.config.request_timeout)
            if reply.get("type") != "result":
                raise self._die(f"expected a result, got type {reply.get('type')!r}")
            if reply.get("id") != request["id"]:
                raise self._die(
                    f"reply id {reply.get('id')} does not match request {request['id']}"
                )
            probs = reply.get("probabilities")
            if not isinstance(probs, list) or len(probs) != len(batch):
                raise self._die(
                    f"result holds {len(probs) if isinstance(probs, list) else '?'} "
                    f"rows for {len(batch)} instances"
                )
            rows.extend(probs)
        try:
            return np.array(rows, dtype=np.float64).reshape(len(instances), self.n_classes)
        except ValueError:
            raise self._die("result rows are not uniform probability vectors") from None

    def predict_member(self, instances, member: int) -> np.ndarray:
        if not 0 <= member < self.n_members:
            raise InputError(f"member {member} out of range")
        return self._predict(list(instances), member)

    def predict_mean(self, instances) -> np.ndarray:
        return self._predict(list(instances), None)

    def close(self):
        proc = getattr(self, "_proc", None)
        if proc is None or proc.poll() is not None:
            return
        try:
            if proc.stdin and not proc.stdin.closed:
                proc.stdin.close()
        except OSError:
            pass
        try:
            proc.wait(timeout=2.0)
        except subprocess.TimeoutExpired:
            proc.terminate()
            try:
                proc.wait(timeout=2.0)
            except subprocess.TimeoutExpired:
                proc.kill()
                proc.wait()

    def __enter__(self):
        return self

    def __exit__(self, *exc_info):
        self.close()

    def __del__(self):
        try:
            self.close()
        except Exception:
            pass


def external_predictor(
    command: str | list[str], config: ExternalConfig | None = None
) -> ExternalPredictor:
    """Spawn an external model process and complete the handshake."""
    return ExternalPredictor(command, config)
