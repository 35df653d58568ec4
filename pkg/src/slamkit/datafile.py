"""Codec for the unified binary dataset container (`.slam` files).

Layout, all little-endian, in this exact order:

    header:   u32 version (= 2), u32 sensor_count
    sensors:  one descriptor per sensor (see descriptor classes)
    frames:   all ground-truth frames, then all input frames, each
              u32 seconds, u32 nanoseconds, u32 sensor_index, payload

A frame belongs to the ground-truth section iff its sensor is a
ground-truth sensor; timestamps are non-decreasing within each section.
Payload layouts are fixed by the sensor descriptor except for point clouds,
which are self-delimited by a u32 count prefix.
"""

from __future__ import annotations

import io
import struct
from dataclasses import dataclass, field
from enum import IntEnum
from pathlib import Path
from typing import BinaryIO, Iterator, Union

import numpy as np

from slamkit.geometry import Timestamp

DATAFILE_VERSION = 2
FILE_EXTENSION = ".slam"

_HEADER = struct.Struct("<II")
_FRAME_HEAD = struct.Struct("<III")
_U32 = struct.Struct("<I")
_CAMERA_PARAMS = struct.Struct("<IIIfffffffffff")  # after the type word
_IMU_PARAMS = struct.Struct("<fff")

IMU_PAYLOAD_SIZE = 24  # 6 float32: gyro xyz (rad/s), accel xyz (m/s^2)
GT_POSE_PAYLOAD_SIZE = 64  # 16 float32, row-major 4x4, world-from-body


class SensorType(IntEnum):
    CAMERA_RGB = 0
    CAMERA_GREY = 1
    CAMERA_DEPTH = 2
    IMU = 3
    GT_POSE = 4
    GT_POINT_CLOUD = 5
    PIXEL_EVENT = 6  # id reserved, no payload codec

    @property
    def is_ground_truth(self) -> bool:
        return self in (SensorType.GT_POSE, SensorType.GT_POINT_CLOUD)


class PixelFormat(IntEnum):
    RGB8 = 0  # 3 B/px, row-major, top-left origin
    GREY8 = 1  # 1 B/px
    DEPTH16 = 2  # 2 B/px unsigned, meters = raw * depth_scale


_BYTES_PER_PIXEL = {PixelFormat.RGB8: 3, PixelFormat.GREY8: 1, PixelFormat.DEPTH16: 2}
_FORMAT_FOR_CAMERA = {
    SensorType.CAMERA_RGB: PixelFormat.RGB8,
    SensorType.CAMERA_GREY: PixelFormat.GREY8,
    SensorType.CAMERA_DEPTH: PixelFormat.DEPTH16,
}


class DatafileError(Exception):
    """Base class for codec failures; carries the byte offset when known."""

    def __init__(self, message: str, offset: int | None = None):
        if offset is not None:
            message = f"{message} (byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class BadMagicOrVersion(DatafileError):
    pass


class TruncatedFile(DatafileError):
    pass


class InvariantViolation(DatafileError):
    pass


class UnsupportedSensor(DatafileError):
    pass


class UnsortedFrames(DatafileError):
    pass


class PayloadSizeMismatch(DatafileError):
    pass


class BadSensorIndex(DatafileError):
    pass


class IoFailure(DatafileError):
    pass


@dataclass(frozen=True)
class CameraDescriptor:
    """Pinhole camera with OpenCV-style radial/tangential distortion."""

    sensor_type: SensorType
    width: int
    height: int
    pixel_format: PixelFormat
    rate_hz: float = 0.0
    fx: float = 1.0
    fy: float = 1.0
    cx: float = 0.0
    cy: float = 0.0
    distortion: tuple[float, float, float, float, float] = (0.0, 0.0, 0.0, 0.0, 0.0)
    depth_scale: float = 0.0  # meters per raw unit; > 0 for depth cameras

    def __post_init__(self) -> None:
        if self.sensor_type not in _FORMAT_FOR_CAMERA:
            raise ValueError(f"not a camera type: {self.sensor_type}")
        if self.width < 1 or self.height < 1:
            raise ValueError(f"bad image size {self.width}x{self.height}")
        if _FORMAT_FOR_CAMERA[self.sensor_type] != self.pixel_format:
            raise ValueError(
                f"pixel format {self.pixel_format.name} inconsistent with {self.sensor_type.name}"
            )
        if not (self.fx > 0 and self.fy > 0):
            raise ValueError("focal lengths must be positive")
        if not (0 <= self.cx < self.width and 0 <= self.cy < self.height):
            raise ValueError("principal point outside the image")
        if len(self.distortion) != 5:
            raise ValueError("expected 5 distortion coefficients")
        if self.sensor_type == SensorType.CAMERA_DEPTH and not self.depth_scale > 0:
            raise ValueError("depth cameras require depth_scale > 0")

    def payload_size(self) -> int:
        return self.width * self.height * _BYTES_PER_PIXEL[self.pixel_format]


@dataclass(frozen=True)
class ImuDescriptor:
    sensor_type: SensorType = SensorType.IMU
    rate_hz: float = 0.0
    gyro_noise: float = 0.0  # noise densities; 0 when unknown
    accel_noise: float = 0.0

    def __post_init__(self) -> None:
        if self.sensor_type != SensorType.IMU:
            raise ValueError(f"not an IMU type: {self.sensor_type}")

    def payload_size(self) -> int:
        return IMU_PAYLOAD_SIZE


@dataclass(frozen=True)
class GroundTruthDescriptor:
    sensor_type: SensorType

    def __post_init__(self) -> None:
        if not self.sensor_type.is_ground_truth:
            raise ValueError(f"not a ground-truth type: {self.sensor_type}")

    def payload_size(self) -> int | None:
        if self.sensor_type == SensorType.GT_POSE:
            return GT_POSE_PAYLOAD_SIZE
        return None  # point clouds are self-delimited


SensorDescriptor = Union[CameraDescriptor, ImuDescriptor, GroundTruthDescriptor]


@dataclass(frozen=True)
class FrameRecord:
    timestamp: Timestamp
    sensor_index: int
    payload: bytes


@dataclass(frozen=True)
class DatafileHeader:
    version: int
    sensor_count: int


def encode_gt_pose(matrix: np.ndarray) -> bytes:
    """Row-major 4x4 world-from-body float32 payload."""
    m = np.asarray(matrix, dtype=np.float32)
    if m.shape != (4, 4):
        raise ValueError(f"expected 4x4 matrix, got {m.shape}")
    return m.tobytes(order="C")


def decode_gt_pose(payload: bytes) -> np.ndarray:
    if len(payload) != GT_POSE_PAYLOAD_SIZE:
        raise ValueError(f"bad GT pose payload size {len(payload)}")
    return np.frombuffer(payload, dtype="<f4").reshape(4, 4).astype(np.float64)


def encode_point_cloud(points: np.ndarray) -> bytes:
    pts = np.asarray(points, dtype=np.float32).reshape(-1, 3)
    return _U32.pack(pts.shape[0]) + pts.tobytes(order="C")


def decode_point_cloud(payload: bytes) -> np.ndarray:
    if len(payload) < 4:
        raise ValueError("point cloud payload shorter than its count prefix")
    (count,) = _U32.unpack_from(payload)
    if len(payload) != 4 + 12 * count:
        raise ValueError(f"point cloud payload size {len(payload)} != 4 + 12*{count}")
    return np.frombuffer(payload, dtype="<f4", offset=4).reshape(count, 3).astype(np.float64)


def encode_imu_sample(gyro: np.ndarray, accel: np.ndarray) -> bytes:
    data = np.concatenate([np.asarray(gyro), np.asarray(accel)]).astype(np.float32)
    if data.shape != (6,):
        raise ValueError("IMU sample needs 3 gyro + 3 accel values")
    return data.tobytes()


def decode_imu_sample(payload: bytes) -> tuple[np.ndarray, np.ndarray]:
    if len(payload) != IMU_PAYLOAD_SIZE:
        raise ValueError(f"bad IMU payload size {len(payload)}")
    vals = np.frombuffer(payload, dtype="<f4").astype(np.float64)
    return vals[:3], vals[3:]


def decode_image(payload: bytes, sensor: CameraDescriptor) -> np.ndarray:
    if len(payload) != sensor.payload_size():
        raise ValueError(f"bad image payload size {len(payload)}")
    if sensor.pixel_format == PixelFormat.RGB8:
        return np.frombuffer(payload, dtype=np.uint8).reshape(sensor.height, sensor.width, 3)
    if sensor.pixel_format == PixelFormat.GREY8:
        return np.frombuffer(payload, dtype=np.uint8).reshape(sensor.height, sensor.width)
    return np.frombuffer(payload, dtype="<u2").reshape(sensor.height, sensor.width)


def _encode_sensor(sensor: SensorDescriptor) -> bytes:
    if isinstance(sensor, CameraDescriptor):
        return _U32.pack(sensor.sensor_type) + _CAMERA_PARAMS.pack(
            sensor.width,
            sensor.height,
            sensor.pixel_format,
            sensor.rate_hz,
            sensor.fx,
            sensor.fy,
            sensor.cx,
            sensor.cy,
            *sensor.distortion,
            sensor.depth_scale,
        )
    if isinstance(sensor, ImuDescriptor):
        return _U32.pack(sensor.sensor_type) + _IMU_PARAMS.pack(
            sensor.rate_hz, sensor.gyro_noise, sensor.accel_noise
        )
    if isinstance(sensor, GroundTruthDescriptor):
        return _U32.pack(sensor.sensor_type)
    raise TypeError(f"unknown sensor descriptor {type(sensor)!r}")


def _expected_payload_size(sensor: SensorDescriptor) -> int | None:
    size = sensor.payload_size()
    return size


def write_datafile(
    path_or_file: Union[str, Path, BinaryIO],
    sensors: list[SensorDescriptor],
    gt_frames: list[FrameRecord] = (),
    in_frames: list[FrameRecord] = (),
) -> None:
    """Serialize a datafile; the result parses back bit-exactly.

    Frames must already be sorted by timestamp within each section, reference
    a valid sensor of the right kind (ground truth vs input), and carry
    payloads of the size fixed by their sensor.
    """
    if not sensors:
        raise BadSensorIndex("at least one sensor is required")
    for sensor in sensors:
        if getattr(sensor, "sensor_type", None) == SensorType.PIXEL_EVENT:
            raise UnsupportedSensor("pixel-event sensors are reserved and cannot be written")

    def emit(out: BinaryIO) -> None:
        out.write(_HEADER.pack(DATAFILE_VERSION, len(sensors)))
        for sensor in sensors:
            out.write(_encode_sensor(sensor))
        for section, frames, want_gt in (("gt", gt_frames, True), ("input", in_frames, False)):
            last: Timestamp | None = None
            for n, frame in enumerate(frames):
                if not 0 <= frame.sensor_index < len(sensors):
                    raise BadSensorIndex(
                        f"{section} frame {n}: sensor index {frame.sensor_index} out of range"
                    )
                sensor = sensors[frame.sensor_index]
                if sensor.sensor_type.is_ground_truth != want_gt:
                    raise BadSensorIndex(
                        f"{section} frame {n}: sensor {frame.sensor_index} "
                        f"({sensor.sensor_type.name}) belongs to the other section"
                    )
                if last is not None and frame.timestamp < last:
                    raise UnsortedFrames(f"{section} frame {n} is out of order")
                last = frame.timestamp
                expected = _expected_payload_size(sensor)
                if expected is not None and len(frame.payload) != expected:
                    raise PayloadSizeMismatch(
                        f"{section} frame {n}: payload {len(frame.payload)} B, expected {expected} B"
                    )
                if expected is None:  # self-delimited point cloud
                    try:
                        decode_point_cloud(frame.payload)
                    except ValueError as exc:
                        raise PayloadSizeMismatch(f"{section} frame {n}: {exc}") from exc
                out.write(_FRAME_HEAD.pack(frame.timestamp.seconds, frame.timestamp.nanoseconds,
                                           frame.sensor_index))
                out.write(frame.payload)

    if hasattr(path_or_file, "write"):
        emit(path_or_file)
        return
    try:
        with open(path_or_file, "wb") as out:
            emit(out)
    except OSError as exc:
        raise IoFailure(f"cannot write {path_or_file}: {exc}") from exc


class DatafileReader:
    """Streaming reader over a datafile.

    The header and sensor table are validated eagerly on open; frames are
    validated lazily as streamed, never holding more than one frame payload.
    Ground-truth and input frames are exposed through independent cursors;
    iterating the reader itself walks the input section.
    """

    def __init__(self, path_or_file: Union[str, Path, BinaryIO]):
        self._path: Path | None = None
        self._buffer: bytes | None = None
        if hasattr(path_or_file, "read"):
            # In-memory source: retained so cursors can reopen independent views.
            path_or_file.seek(0)
            self._buffer = path_or_file.read()
            stream: BinaryIO = io.BytesIO(self._buffer)
        else:
            self._path = Path(path_or_file)
            if not self._path.exists():
                raise IoFailure(f"no such file: {self._path}")
            stream = open(self._path, "rb")
        try:
            self.header, self.sensors, self._frames_offset = _read_sensor_table(stream)
        finally:
            stream.close()

    def _open(self) -> BinaryIO:
        if self._buffer is not None:
            return io.BytesIO(self._buffer)
        return open(self._path, "rb")  # type: ignore[arg-type]

    def gt_frames(self) -> Iterator[FrameRecord]:
        """Ground-truth section cursor, independent of the input cursor."""
        stream = self._open()
        try:
            stream.seek(self._frames_offset)
            yield from _stream_section(stream, self.sensors, self._frames_offset, want_gt=True)
        finally:
            stream.close()

    def input_frames(self) -> Iterator[FrameRecord]:
        """Input section cursor; skips over the ground-truth section."""
        stream = self._open()
        try:
            stream.seek(self._frames_offset)
            yield from _stream_section(stream, self.sensors, self._frames_offset, want_gt=False)
        finally:
            stream.close()

    def __iter__(self) -> Iterator[FrameRecord]:
        return self.input_frames()


def open_datafile(path_or_file: Union[str, Path, BinaryIO]) -> DatafileReader:
    return DatafileReader(path_or_file)


def _read_exact(stream: BinaryIO, size: int, what: str) -> bytes:
    offset = stream.tell()
    data = stream.read(size)
    if len(data) != size:
        raise TruncatedFile(f"unexpected end of file in {what}", offset=offset)
    return data


def _read_sensor_table(stream: BinaryIO) -> tuple[DatafileHeader, tuple[SensorDescriptor, ...], int]:
    raw = stream.read(_HEADER.size)
    if len(raw) != _HEADER.size:
        raise TruncatedFile("file shorter than the header", offset=0)
    version, sensor_count = _HEADER.unpack(raw)
    if version != DATAFILE_VERSION:
        raise BadMagicOrVersion(f"unsupported datafile version {version}", offset=0)
    if sensor_count < 1:
        raise InvariantViolation("sensor count must be >= 1", offset=4)

    sensors: list[SensorDescriptor] = []
    for n in range(sensor_count):
        offset = stream.tell()
        (type_word,) = _U32.unpack(_read_exact(stream, 4, f"sensor {n} type"))
        if type_word == SensorType.PIXEL_EVENT:
            raise UnsupportedSensor("pixel-event sensors are reserved", offset=offset)
        try:
            sensor_type = SensorType(type_word)
        except ValueError:
            raise InvariantViolation(f"unknown sensor type {type_word}", offset=offset) from None
        if sensor_type in _FORMAT_FOR_CAMERA:
            params = _CAMERA_PARAMS.unpack(
                _read_exact(stream, _CAMERA_PARAMS.size, f"sensor {n} parameters")
            )
            width, height, fmt_word = params[0], params[1], params[2]
            try:
                fmt = PixelFormat(fmt_word)
            except ValueError:
                raise InvariantViolation(f"unknown pixel format {fmt_word}", offset=offset) from None
            try:
                sensors.append(
                    CameraDescriptor(
                        sensor_type,
                        width,
                        height,
                        fmt,
                        rate_hz=params[3],
                        fx=params[4],
                        fy=params[5],
                        cx=params[6],
                        cy=params[7],
                        distortion=tuple(params[8:13]),
                        depth_scale=params[13],
                    )
                )
            except ValueError as exc:
                raise InvariantViolation(f"sensor {n}: {exc}", offset=offset) from None
        elif sensor_type == SensorType.IMU:
            rate, gyro, accel = _IMU_PARAMS.unpack(
                _read_exact(stream, _IMU_PARAMS.size, f"sensor {n} parameters")
            )
            sensors.append(ImuDescriptor(rate_hz=rate, gyro_noise=gyro, accel_noise=accel))
        else:
            sensors.append(GroundTruthDescriptor(sensor_type))
    return DatafileHeader(version, sensor_count), tuple(sensors), stream.tell()


def _read_frame(
    stream: BinaryIO, sensors: tuple[SensorDescriptor, ...]
) -> tuple[FrameRecord, int, bool] | None:
    """One frame plus its start offset and GT-section membership; None at EOF."""
    offset = stream.tell()
    head = stream.read(_FRAME_HEAD.size)
    if not head:
        return None
    if len(head) != _FRAME_HEAD.size:
        raise TruncatedFile("unexpected end of file in frame header", offset=offset)
    seconds, nanoseconds, sensor_index = _FRAME_HEAD.unpack(head)
    try:
        timestamp = Timestamp(seconds, nanoseconds)
    except ValueError as exc:
        raise InvariantViolation(str(exc), offset=offset) from None
    if sensor_index >= len(sensors):
        raise InvariantViolation(f"sensor index {sensor_index} out of range", offset=offset)
    sensor = sensors[sensor_index]
    expected = sensor.payload_size()
    if expected is None:
        (count,) = _U32.unpack(_read_exact(stream, 4, "point cloud count"))
        payload = _U32.pack(count) + _read_exact(stream, 12 * count, "point cloud payload")
    else:
        payload = _read_exact(stream, expected, "frame payload")
    record = FrameRecord(timestamp, sensor_index, payload)
    return record, offset, sensor.sensor_type.is_ground_truth


def _stream_section(
    stream: BinaryIO,
    sensors: tuple[SensorDescriptor, ...],
    frames_offset: int,
    want_gt: bool,
) -> Iterator[FrameRecord]:
    in_gt_section = True
    last_ts: Timestamp | None = None
    while True:
        item = _read_frame(stream, sensors)
        if item is None:
            return
        record, offset, is_gt = item
        if is_gt and not in_gt_section:
            raise InvariantViolation(
                "ground-truth frame after the input section began", offset=offset
            )
        if not is_gt and in_gt_section:
            if want_gt:
                return  # GT section over; nothing more to yield
            in_gt_section = False
            last_ts = None  # sections are ordered independently
        if last_ts is not None and record.timestamp < last_ts:
            raise InvariantViolation("frame timestamps not non-decreasing", offset=offset)
        last_ts = record.timestamp
        if is_gt == want_gt:
            yield record


@dataclass
class DatafileSummary:
    path: str
    sensors: list[str]
    gt_frame_count: int
    input_frame_count: int
    duration_seconds: float  # last - first input timestamp
    frame_counts: dict[int, int] = field(default_factory=dict)


def summarize_datafile(path: Union[str, Path]) -> DatafileSummary:
    """Single-pass scan: per-sensor frame counts and the input-stream duration."""
    reader = open_datafile(path)
    counts: dict[int, int] = {i: 0 for i in range(len(reader.sensors))}
    gt_count = 0
    first_ts: Timestamp | None = None
    last_ts: Timestamp | None = None
    for frame in reader.gt_frames():
        counts[frame.sensor_index] += 1
        gt_count += 1
    in_count = 0
    for frame in reader.input_frames():
        counts[frame.sensor_index] += 1
        in_count += 1
        if first_ts is None:
            first_ts = frame.timestamp
        last_ts = frame.timestamp
    duration = 0.0
    if first_ts is not None and last_ts is not None:
        duration = (last_ts.total_nanoseconds() - first_ts.total_nanoseconds()) * 1e-9
    return DatafileSummary(
        path=str(path),
        sensors=[s.sensor_type.name for s in reader.sensors],
        gt_frame_count=gt_count,
        input_frame_count=in_count,
        duration_seconds=duration,
        frame_counts=counts,
    )
