"""Telemetry wire protocol and network service.

Messages are newline-delimited JSON objects with exactly the keys
{"type","seq","t_sim","data"}.  seq increases per connection with no gaps;
every float on the wire is normalized to at most 9 significant digits, and
TelemetryMessage applies the same normalization on construction so that
decode(encode(m)) == m holds exactly.

Two listeners speak the same schema: plain TCP (one JSON object per LF
line) and a minimal RFC 6455 WebSocket endpoint for browsers (one JSON
object per text frame; frames self-delimit, so no trailing LF).  Inbound
lines are operator commands; malformed ones are answered with a
command_error event on the offending connection only, and the connection
stays open.

Publishing happens on the simulation thread: the service's on_tick hook
derives the per-tick message batch from an immutable tick record, so two
clients connected for the same span receive identical (type, t_sim, data)
streams.  A slow client is disconnected once its outbound queue fills.
"""

from __future__ import annotations

import base64
import hashlib
import json
import logging
import math
import queue
import socket
import struct
import threading
from dataclasses import dataclass, field

from .arena import CircleObstacle, RectObstacle, ValidationError
from .controller import SetTask, Stop

__all__ = [
    "TelemetryMessage",
    "PlaceObstacle",
    "SetRate",
    "FrameError",
    "SchemaError",
    "BindError",
    "CadenceConfig",
    "TelemetryService",
    "limit_digits",
    "normalize_floats",
    "encode",
    "decode",
    "parse_command",
]

log = logging.getLogger("arachne.telemetry")

TELEMETRY_TYPES = ("temperature", "smoke", "direction", "pose", "joints", "event")
EVENT_NAMES = ("collision", "reached", "task_accepted", "task_rejected", "command_error")
DIRECTIONS = ("forward", "left", "right", "backward", "halt")
COMMAND_TYPES = ("set_task", "stop", "place_obstacle", "set_rate")

DEFAULT_TCP_PORT = 7411
DEFAULT_WS_PORT = 7412

_WS_GUID = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11"


class FrameError(Exception):
    """Inbound line is not a JSON object."""


class SchemaError(Exception):
    """JSON is well-formed but violates the message schema."""


class BindError(Exception):
    """A listener socket could not be bound."""


def limit_digits(value: float) -> float:
    """Nearest float with a decimal form of at most 9 significant digits."""
    if value != value or math.isinf(value):
        raise ValueError(f"non-finite value {value!r} not representable on the wire")
    return float(f"{value:.9g}")


def normalize_floats(obj):
    """Recursively apply limit_digits to every float in a JSON-ish tree."""
    if isinstance(obj, bool):
        return obj
    if isinstance(obj, float):
        return limit_digits(obj)
    if isinstance(obj, dict):
        return {k: normalize_floats(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [normalize_floats(v) for v in obj]
    return obj


def _validate_payload(msg_type: str, data: dict) -> None:
    def need(key, kinds, desc):
        if key not in data:
            raise SchemaError(f"{msg_type} payload missing '{key}'")
        if not isinstance(data[key], kinds) or isinstance(data[key], bool) and kinds != bool:
            raise SchemaError(f"{msg_type} payload '{key}' must be {desc}")

    number = (int, float)
    if msg_type == "temperature":
        need("celsius", number, "a number")
    elif msg_type == "smoke":
        if not isinstance(data.get("detected"), bool):
            raise SchemaError("smoke payload 'detected' must be a boolean")
    elif msg_type == "direction":
        if data.get("direction") not in DIRECTIONS:
            raise SchemaError(f"direction must be one of {DIRECTIONS}")
    elif msg_type == "pose":
        for key in ("x", "y", "heading_deg"):
            need(key, number, "a number")
    elif msg_type == "joints":
        angles = data.get("angles_deg")
        if not isinstance(angles, list) or len(angles) != 12 or not all(
                isinstance(a, number) and not isinstance(a, bool) for a in angles):
            raise SchemaError("joints payload 'angles_deg' must be 12 numbers")
    elif msg_type == "event":
        if data.get("name") not in EVENT_NAMES:
            raise SchemaError(f"event name must be one of {EVENT_NAMES}")
    else:
        raise SchemaError(f"unknown telemetry type {msg_type!r}")


@dataclass(frozen=True)
class TelemetryMessage:
    """One wire message; floats are normalized on construction."""

    type: str
    seq: int
    t_sim: float
    data: dict

    def __post_init__(self):
        if self.type not in TELEMETRY_TYPES:
            raise SchemaError(f"unknown telemetry type {self.type!r}")
        if not isinstance(self.seq, int) or isinstance(self.seq, bool) or self.seq < 0:
            raise SchemaError("seq must be a non-negative integer")
        if not isinstance(self.t_sim, (int, float)) or not math.isfinite(self.t_sim):
            raise SchemaError("t_sim must be finite")
        if not isinstance(self.data, dict):
            raise SchemaError("data must be an object")
        object.__setattr__(self, "t_sim", limit_digits(float(self.t_sim)))
        object.__setattr__(self, "data", normalize_floats(self.data))
        _validate_payload(self.type, self.data)


@dataclass(frozen=True)
class PlaceObstacle:
    obstacle: RectObstacle | CircleObstacle


@dataclass(frozen=True)
class SetRate:
    """Per-connection decimation of the high-rate streams (0 disables)."""

    pose_decimation: int | None = None
    joints_decimation: int | None = None


def encode(msg: TelemetryMessage) -> bytes:
    """One UTF-8 JSON line, LF-terminated, fixed key order."""
    doc = {"type": msg.type, "seq": msg.seq, "t_sim": msg.t_sim, "data": msg.data}
    return (json.dumps(doc, separators=(",", ":"), ensure_ascii=True) + "\n").encode()


def _reject_constant(name):
    raise FrameError(f"non-finite JSON constant {name!r}")


def _parse_json_object(text: str) -> dict:
    try:
        obj = json.loads(text, parse_constant=_reject_constant)
    except FrameError:
        raise
    except json.JSONDecodeError as e:
        raise FrameError(f"invalid JSON: {e.msg}") from e
    if not isinstance(obj, dict):
        raise FrameError("expected a JSON object")
    return obj


def _get_number(data: dict, key: str, where: str, required: bool = True):
    if key not in data:
        if required:
            raise SchemaError(f"{where}: missing '{key}'")
        return None
    v = data[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise SchemaError(f"{where}: '{key}' must be a number")
    return float(v)


def parse_command(obj: dict):
    """Wire command object -> typed command."""
    kind = obj.get("type")
    data = obj.get("data", {})
    if not isinstance(data, dict):
        raise SchemaError(f"{kind}: data must be an object")
    if kind == "stop":
        return Stop()
    if kind == "set_task":
        x = _get_number(data, "x", "set_task")
        y = _get_number(data, "y", "set_task")
        radius = _get_number(data, "radius", "set_task", required=False)
        return SetTask(x, y, radius)
    if kind == "place_obstacle":
        shape = data.get("shape")
        if not isinstance(shape, dict):
            raise SchemaError("place_obstacle: missing shape object")
        try:
            if shape.get("type") == "rect":
                obs = RectObstacle(
                    x_min=_get_number(shape, "x_min", "shape"),
                    y_min=_get_number(shape, "y_min", "shape"),
                    x_max=_get_number(shape, "x_max", "shape"),
                    y_max=_get_number(shape, "y_max", "shape"),
                )
            elif shape.get("type") == "circle":
                obs = CircleObstacle(
                    cx=_get_number(shape, "cx", "shape"),
                    cy=_get_number(shape, "cy", "shape"),
                    radius=_get_number(shape, "radius", "shape"),
                )
            else:
                raise SchemaError(f"place_obstacle: unknown shape type {shape.get('type')!r}")
        except ValidationError as e:
            raise SchemaError(f"place_obstacle: {e}") from e
        return PlaceObstacle(obs)
    if kind == "set_rate":
        pose_dec = data.get("pose_decimation")
        joint_dec = data.get("joints_decimation")
        for name, v in (("pose_decimation", pose_dec), ("joints_decimation", joint_dec)):
            if v is not None and (isinstance(v, bool) or not isinstance(v, int) or v < 0):
                raise SchemaError(f"set_rate: '{name}' must be an integer >= 0")
        return SetRate(pose_dec, joint_dec)
    raise SchemaError(f"unknown command type {kind!r}")


def decode(line: bytes | str):
    """One LF-terminated line -> TelemetryMessage or a command."""
    text = line.decode() if isinstance(line, (bytes, bytearray)) else line
    obj = _parse_json_object(text.rstrip("\n"))
    kind = obj.get("type")
    if kind in COMMAND_TYPES:
        return parse_command(obj)
    if kind in TELEMETRY_TYPES:
        if set(obj.keys()) != {"type", "seq", "t_sim", "data"}:
            raise SchemaError("telemetry message keys must be exactly type/seq/t_sim/data")
        return TelemetryMessage(type=kind, seq=obj["seq"], t_sim=obj["t_sim"],
                                data=obj["data"])
    raise SchemaError(f"unknown type {kind!r}")


# --- WebSocket framing (RFC 6455, no extensions, no fragmentation) ----------


def _ws_accept_value(key: str) -> str:
    digest = hashlib.sha1((key + _WS_GUID).encode()).digest()
    return base64.b64encode(digest).decode()


def _ws_handshake(conn: socket.socket) -> bool:
    """Read the HTTP upgrade request and answer 101; False on a bad request."""
    data = b""
    while b"\r\n\r\n" not in data:
        chunk = conn.recv(4096)
        if not chunk:
            return False
        data += chunk
        if len(data) > 65536:
            return False
    head = data.split(b"\r\n\r\n", 1)[0].decode("latin-1")
    key = None
    for line in head.split("\r\n")[1:]:
        name, _, value = line.partition(":")
        if name.strip().lower() == "sec-websocket-key":
            key = value.strip()
    if key is None:
        conn.sendall(b"HTTP/1.1 400 Bad Request\r\n\r\n")
        return False
    response = (
        "HTTP/1.1 101 Switching Protocols\r\n"
        "Upgrade: websocket\r\n"
        "Connection: Upgrade\r\n"
        f"Sec-WebSocket-Accept: {_ws_accept_value(key)}\r\n"
        "\r\n"
    )
    conn.sendall(response.encode("latin-1"))
    return True


def _recv_exact(conn: socket.socket, n: int) -> bytes:
    buf = b""
    while len(buf) < n:
        chunk = conn.recv(n - len(buf))
        if not chunk:
            raise ConnectionError("peer closed")
        buf += chunk
    return buf


def _ws_read_frame(conn: socket.socket) -> tuple[int, bytes]:
    b0, b1 = _recv_exact(conn, 2)
    opcode = b0 & 0x0F
    masked = bool(b1 & 0x80)
    length = b1 & 0x7F
    if length == 126:
        (length,) = struct.unpack(">H", _recv_exact(conn, 2))
    elif length == 127:
        (length,) = struct.unpack(">Q", _recv_exact(conn, 8))
    mask = _recv_exact(conn, 4) if masked else b""
    payload = _recv_exact(conn, length) if length else b""
    if masked:
        payload = bytes(b ^ mask[i % 4] for i, b in enumerate(payload))
    return opcode, payload


def _ws_frame(payload: bytes, opcode: int = 0x1) -> bytes:
    header = bytes([0x80 | opcode])
    n = len(payload)
    if n < 126:
        header += bytes([n])
    elif n < 65536:
        header += bytes([126]) + struct.pack(">H", n)
    else:
        header += bytes([127]) + struct.pack(">Q", n)
    return header + payload


# --- service ----------------------------------------------------------------


@dataclass(frozen=True)
class CadenceConfig:
    """Publishing cadences, all in simulated time or tick counts."""

    temperature_period_s: float = 0.5
    smoke_heartbeat_s: float = 0.5
    pose_decimation: int = 1
    joints_decimation: int = 1

    def __post_init__(self):
        if not self.temperature_period_s > 0 or not self.smoke_heartbeat_s > 0:
            raise ValueError("cadence periods must be positive")
        if self.pose_decimation < 0 or self.joints_decimation < 0:
            raise ValueError("decimations must be >= 0")


class _Session:
    """One subscriber connection (TCP or WebSocket)."""

    _ids = 0
    _ids_lock = threading.Lock()

    def __init__(self, conn: socket.socket, kind: str, service: "TelemetryService"):
        with _Session._ids_lock:
            _Session._ids += 1
            self.sid = _Session._ids
        self.conn = conn
        self.kind = kind  # "tcp" | "ws"
        self.service = service
        self.outbound: queue.Queue[bytes | None] = queue.Queue(maxsize=service.queue_bound)
        self.lock = threading.Lock()  # guards seq + counters
        self.seq = 0
        self.pose_seen = 0
        self.joints_seen = 0
        self.pose_decimation = service.cadence.pose_decimation
        self.joints_decimation = service.cadence.joints_decimation
        self.alive = True

    def offer(self, msg_type: str, t_sim: float, data: dict) -> None:
        """Enqueue one message, honoring this session's decimation."""
        overflow = False
        with self.lock:
            if not self.alive:
                return
            if msg_type == "pose":
                keep = self.pose_decimation > 0 and self.pose_seen % self.pose_decimation == 0
                self.pose_seen += 1
                if not keep:
                    return
            elif msg_type == "joints":
                keep = self.joints_decimation > 0 and self.joints_seen % self.joints_decimation == 0
                self.joints_seen += 1
                if not keep:
                    return
            self.seq += 1
            msg = TelemetryMessage(type=msg_type, seq=self.seq, t_sim=t_sim, data=data)
            payload = encode(msg)
            if self.kind == "ws":
                payload = _ws_frame(payload.rstrip(b"\n"))
            # enqueue under the lock so wire order matches seq order
            try:
                self.outbound.put_nowait(payload)
            except queue.Full:
                overflow = True
        if overflow:
            log.warning("session %d: outbound queue full, disconnecting", self.sid)
            self.close(force=True)

    def apply_rate(self, cmd: SetRate) -> None:
        with self.lock:
            if cmd.pose_decimation is not None:
                self.pose_decimation = cmd.pose_decimation
            if cmd.joints_decimation is not None:
                self.joints_decimation = cmd.joints_decimation

    def close(self, force: bool = False) -> None:
        with self.lock:
            first = self.alive
            self.alive = False
        if first:
            # Wake the writer with a sentinel; if the queue is full we are
            # abandoning this client anyway, so dropping one item is fine.
            while True:
                try:
                    self.outbound.put_nowait(None)
                    break
                except queue.Full:
                    try:
                        self.outbound.get_nowait()
                    except queue.Empty:
                        continue
            self.service._drop_session(self)
        if force:
            try:
                self.conn.shutdown(socket.SHUT_RDWR)  # unblock a stalled sendall
            except OSError:
                pass

    def writer_loop(self) -> None:
        try:
            while True:
                item = self.outbound.get()
                if item is None:
                    break
                self.conn.sendall(item)
        except OSError:
            pass
        finally:
            self.close()
            self.conn.close()

    def reader_loop(self) -> None:
        try:
            if self.kind == "tcp":
                buf = b""
                while self.alive:
                    chunk = self.conn.recv(4096)
                    if not chunk:
                        break
                    buf += chunk
                    while b"\n" in buf:
                        line, buf = buf.split(b"\n", 1)
                        if line.strip():
                            self._handle_line(line)
            else:
                while self.alive:
                    opcode, payload = _ws_read_frame(self.conn)
                    if opcode == 0x8:  # close
                        break
                    if opcode == 0x9:  # ping -> pong
                        try:
                            self.conn.sendall(_ws_frame(payload, opcode=0xA))
                        except OSError:
                            break
                        continue
                    if opcode == 0x1 and payload.strip():
                        self._handle_line(payload)
        except (ConnectionError, OSError):
            pass
        finally:
            self.close()

    def _handle_line(self, line: bytes) -> None:
        try:
            cmd = decode(line)
        except (FrameError, SchemaError) as e:
            self.offer("event", self.service.time_fn(),
                       {"name": "command_error", "detail": str(e)})
            return
        if isinstance(cmd, TelemetryMessage):
            self.offer("event", self.service.time_fn(),
                       {"name": "command_error",
                        "detail": "telemetry messages are not accepted as commands"})
            return
        if isinstance(cmd, SetRate):
            self.apply_rate(cmd)
            return
        self.service.inbound.put(cmd)


class TelemetryService:
    """Listeners + fan-out, driven by the simulation loop via on_tick.

    The sim thread calls drain_commands() at tick boundaries and on_tick()
    after every tick with an immutable record; readers only enqueue into
    the inbound queue, so the simulation stays the sole owner of state.
    """

    def __init__(self, tcp_port: int = DEFAULT_TCP_PORT, ws_port: int = DEFAULT_WS_PORT,
                 cadence: CadenceConfig | None = None, dt: float = 0.02,
                 queue_bound: int = 4096, time_fn=None):
        self.cadence = cadence if cadence is not None else CadenceConfig()
        self.queue_bound = queue_bound
        self.dt = dt
        self.temperature_every = self._ticks_of(self.cadence.temperature_period_s, dt)
        self.smoke_heartbeat_every = self._ticks_of(self.cadence.smoke_heartbeat_s, dt)
        self.inbound: queue.Queue = queue.Queue()
        self._sessions: list[_Session] = []
        self._sessions_lock = threading.Lock()
        self._listeners: list[socket.socket] = []
        self._threads: list[threading.Thread] = []
        self._closing = False
        self._sim_time = 0.0
        self._last_direction: str | None = None
        self._last_smoke: bool | None = None
        self.time_fn = time_fn if time_fn is not None else (lambda: self._sim_time)
        self._requested_ports = (tcp_port, ws_port)
        self.tcp_port: int | None = None
        self.ws_port: int | None = None

    @staticmethod
    def _ticks_of(period_s: float, dt: float) -> int:
        ticks = period_s / dt
        if abs(ticks - round(ticks)) > 1e-9 or round(ticks) < 1:
            raise ValueError(f"period {period_s}s is not a whole number of {dt}s ticks")
        return round(ticks)

    # -- lifecycle

    def start(self) -> None:
        tcp_port, ws_port = self._requested_ports
        tcp = None
        try:
            tcp = self._listen(tcp_port)
            ws = self._listen(ws_port)
        except OSError as e:
            if tcp is not None:
                tcp.close()
            raise BindError(f"cannot bind telemetry ports {tcp_port}/{ws_port}: {e}") from e
        self._listeners = [tcp, ws]
        self.tcp_port = tcp.getsockname()[1]
        self.ws_port = ws.getsockname()[1]
        for sock, kind in ((tcp, "tcp"), (ws, "ws")):
            t = threading.Thread(target=self._accept_loop, args=(sock, kind),
                                 name=f"telemetry-accept-{kind}", daemon=True)
            t.start()
            self._threads.append(t)

    @staticmethod
    def _listen(port: int) -> socket.socket:
        sock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        sock.bind(("127.0.0.1", port))
        sock.listen(16)
        # short accept timeout so close() never waits on a blocked accept
        sock.settimeout(0.25)
        return sock

    def _accept_loop(self, listener: socket.socket, kind: str) -> None:
        while not self._closing:
            try:
                conn, _ = listener.accept()
            except TimeoutError:
                continue
            except OSError:
                break
            conn.settimeout(None)  # accepted sockets inherit the listener's
            if kind == "ws" and not _ws_handshake(conn):
                conn.close()
                continue
            conn.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
            session = _Session(conn, kind, self)
            with self._sessions_lock:
                self._sessions.append(session)
            for target, name in ((session.writer_loop, "writer"), (session.reader_loop, "reader")):
                t = threading.Thread(target=target, name=f"telemetry-{name}-{session.sid}",
                                     daemon=True)
                t.start()
                self._threads.append(t)

    def _drop_session(self, session: _Session) -> None:
        with self._sessions_lock:
            if session in self._sessions:
                self._sessions.remove(session)

    def close(self) -> None:
        self._closing = True
        for sock in self._listeners:
            try:
                sock.close()
            except OSError:
                pass
        with self._sessions_lock:
            sessions = list(self._sessions)
        for s in sessions:
            s.close(force=True)
        for t in list(self._threads):
            t.join(timeout=2.0)

    @property
    def session_count(self) -> int:
        with self._sessions_lock:
            return len(self._sessions)

    # -- publishing

    def publish(self, msg_type: str, t_sim: float, data: dict) -> None:
        with self._sessions_lock:
            sessions = list(self._sessions)
        for s in sessions:
            s.offer(msg_type, t_sim, data)

    def on_tick(self, record) -> None:
        """Publish the batch for one completed tick.

        `record` needs: tick_index (1-based, post-tick), t_sim, direction
        (wire string), smoke (bool), temperature_c, pose (x, y, heading_deg
        tuple), joints_deg (12 floats), events (list of dicts with 'name').
        """
        self._sim_time = record.t_sim
        t = record.t_sim
        for event in record.events:
            self.publish("event", t, dict(event))
        if record.direction != self._last_direction:
            self.publish("direction", t, {"direction": record.direction})
            self._last_direction = record.direction
        heartbeat = record.tick_index % self.smoke_heartbeat_every == 0
        if record.smoke != self._last_smoke or heartbeat:
            self.publish("smoke", t, {"detected": record.smoke})
            self._last_smoke = record.smoke
        if record.tick_index % self.temperature_every == 0:
            self.publish("temperature", t, {"celsius": record.temperature_c})
        x, y, heading_deg = record.pose
        self.publish("pose", t, {"x": x, "y": y, "heading_deg": heading_deg})
        self.publish("joints", t, {"angles_deg": list(record.joints_deg)})

    # -- inbound

    def drain_commands(self) -> list:
        out = []
        while True:
            try:
                out.append(self.inbound.get_nowait())
            except queue.Empty:
                return out
