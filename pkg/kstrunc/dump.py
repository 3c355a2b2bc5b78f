# SPDX-License-Identifier: MIT

"""Binary trajectory dumps.

A dump is one message::

    header   "<iiii"  length, version, stamps, opcode
    payload  "<I"     flags (DumpFlags)
             "<B" 0   body section: one BSON document with the metadata
             "<B" 1   frame sequence: "<I" size, b"frames\\x00", one BSON
                      document per stamp

A compressed dump has opcode ``COMPRESSED`` and prefixes the compressed
payload with ``"<iiB"`` (original opcode, raw payload length, compressor id).
"""

from __future__ import annotations

import io
import logging
import struct
from pathlib import Path
from typing import TYPE_CHECKING, Any, BinaryIO

import bson
import numpy as np

from .coefficients import CoefficientField
from .core.compressors import compressor_lookup, compressor_registry
from .core.errors import DumpFormatError
from .core.models import DumpFlags, DumpHeader, DumpItem, StepInfo
from .core.typings import DumpOpCode, SectionKind
from .grid import ScalarField, SpaceGrid
from .stepper import Trajectory

if TYPE_CHECKING:
    from .core.typings import Document

logger = logging.getLogger(__name__)

DUMP_VERSION = 1
HEADER_SIZE = 16
ENVELOPE = struct.Struct("<iiB")
FRAME_KEY = "frames"


def bson_dumps(data: Any) -> bytes:
    """Encode data as BSON.

    Args:
        data (Any): The data to encode.

    Returns:
        bytes: The encoded data.
    """
    return bson.encode(data)


def bson_loads(data: bytes) -> Any:
    """Decode BSON data.

    Args:
        data (bytes): The data to decode.

    Returns:
        Any: The decoded data.
    """
    return bson.decode(data)  # type: ignore


def _body(traj: Trajectory) -> Document:
    return {
        "version": DUMP_VERSION,
        "dim": traj.grid.dim,
        "cells": traj.grid.cells_per_axis,
        "dt": traj.dt,
        "theta": traj.theta,
        "n_trunc": traj.n_trunc,
        "A": traj.A.to_document(),
        "M": traj.M.to_document(),
        "steps": [info._asdict() for info in traj.steps],
    }


def _frame(traj: Trajectory, index: int, flags: DumpFlags) -> Document:
    # BSON arrays of doubles, row-major
    frame: Document = {"u": traj.u[index].values.ravel().tolist()}
    if flags & DumpFlags.has_psi:
        frame["psi"] = traj.psi[index].values.ravel().tolist()
    if flags & DumpFlags.has_sources:
        frame["f"] = traj.sources[index].values.ravel().tolist()
    return frame


def make_data(traj: Trajectory, *, flags: DumpFlags = DumpFlags.all) -> io.BytesIO:
    """Make the payload of a dump.

    Args:
        traj (Trajectory): The trajectory.
        flags (DumpFlags, optional): What to include. Defaults to DumpFlags.all.

    Returns:
        io.BytesIO: The encoded payload.
    """
    flags = DumpFlags(flags).verify()
    body = _body(traj)
    if not flags & DumpFlags.has_steps:
        body["steps"] = []

    data_bytes = io.BytesIO()
    data_bytes.write(struct.pack("<I", flags))

    data_bytes.write(struct.pack("<B", SectionKind.BODY))
    data_bytes.write(bson_dumps(body))

    section_writer = io.BytesIO()
    section_writer.write(FRAME_KEY.encode("utf-8"))
    section_writer.write(b"\x00")
    for index in range(len(traj)):
        section_writer.write(bson_dumps(_frame(traj, index, flags)))

    data_bytes.write(struct.pack("<B", SectionKind.FRAME_SEQUENCE))
    data_bytes.write(struct.pack("<I", section_writer.tell() + 4))
    data_bytes.write(section_writer.getvalue())
    return data_bytes


def encode_trajectory(traj: Trajectory, *, compressor: str = "noop") -> bytes:
    """Encode a trajectory as a complete dump.

    Args:
        traj (Trajectory): The trajectory.
        compressor (str, optional): Compressor name. Defaults to "noop".

    Raises:
        DumpFormatError: If the compressor is unknown or unavailable.

    Returns:
        bytes: The dump.
    """
    payload = make_data(traj)
    opcode = DumpOpCode.RAW

    compressor_class = compressor_registry.get(compressor)
    if compressor_class is None or not compressor_class.available():
        msg = f"Compressor {compressor!r} is not available"
        raise DumpFormatError(msg)

    if compressor_class.id != 0:
        raw = payload.getvalue()
        payload = io.BytesIO()
        payload.write(ENVELOPE.pack(DumpOpCode.RAW, len(raw), compressor_class.id))
        payload.write(compressor_class().compress(raw))
        opcode = DumpOpCode.COMPRESSED
        logger.debug("  compressing with %s", compressor_class.name)

    header = DumpHeader(
        length=HEADER_SIZE + payload.tell(),
        version=DUMP_VERSION,
        stamps=len(traj),
        opcode=opcode,
    )
    logger.debug("> %s", header)
    return struct.pack("<iiii", *header) + payload.getvalue()


def write_trajectory(
    traj: Trajectory, path: str | Path, *, compressor: str = "noop"
) -> Path:
    """Write a trajectory dump to ``path``.

    Args:
        traj (Trajectory): The trajectory.
        path (str | Path): The file.
        compressor (str, optional): Compressor name. Defaults to "noop".

    Returns:
        Path: The written file.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(encode_trajectory(traj, compressor=compressor))
    return path


def parse_header(reader: BinaryIO) -> DumpItem:
    """Parse a dump header and load the payload.

    Args:
        reader (BinaryIO): The reader to read from.

    Raises:
        DumpFormatError: If the input ends early.

    Returns:
        DumpItem: The parsed header and payload.
    """
    header_data = reader.read(HEADER_SIZE)
    if len(header_data) != HEADER_SIZE:
        msg = "Dump ends inside the header"
        raise DumpFormatError(msg)
    header = DumpHeader(*struct.unpack("<iiii", header_data))
    length = header.length - HEADER_SIZE
    data = reader.read(length)
    if len(data) != length:
        msg = f"Dump announces {length} payload bytes, found {len(data)}"
        raise DumpFormatError(msg)
    return DumpItem(header, data)


def parse_data(  # noqa: C901
    item: DumpItem,
) -> tuple[Document, DumpFlags, list[Document]]:
    """Decode the payload of a dump.

    Args:
        item (DumpItem): The header and payload.

    Raises:
        DumpFormatError: On an unknown version, opcode, compressor or section.

    Returns:
        tuple[Document, DumpFlags, list[Document]]: The body, the flags and
            one frame per stamp.
    """
    logger.debug("< %s", item.header)
    if item.header.version != DUMP_VERSION:
        msg = f"Unsupported dump version {item.header.version}"
        raise DumpFormatError(msg)

    if item.header.opcode == DumpOpCode.COMPRESSED:
        original_opcode, raw_length, compressor_id = ENVELOPE.unpack(
            item.data[: ENVELOPE.size]
        )
        compressor = compressor_lookup.get(compressor_id)
        if compressor is None or not compressor.available():
            msg = f"Dump uses unavailable compressor id {compressor_id}"
            raise DumpFormatError(msg)

        logger.debug("  decompressing with %s", compressor.name)
        raw = compressor().decompress(item.data[ENVELOPE.size :])
        if len(raw) != raw_length:
            msg = "Decompressed data is not the expected length"
            raise DumpFormatError(msg)
        item = DumpItem(item.header._replace(opcode=original_opcode), raw)

    if item.header.opcode != DumpOpCode.RAW:
        msg = f"Unknown dump opcode {item.header.opcode}"
        raise DumpFormatError(msg)

    (flags_bits,) = struct.unpack("<I", item.data[:4])
    try:
        flags = DumpFlags(flags_bits).verify()
    except ValueError as e:
        raise DumpFormatError(str(e)) from e

    body: Document | None = None
    frames: list[Document] = []
    reader = io.BytesIO(item.data[4:])
    end = len(item.data) - 4

    while reader.tell() < end:
        (kind,) = struct.unpack("<B", reader.read(1))

        if kind == SectionKind.BODY:
            if body is not None:
                msg = "Expected only one body section, but found multiple"
                raise DumpFormatError(msg)
            # the BSON length prefix includes itself
            (length,) = struct.unpack("<i", reader.read(4))
            reader.seek(-4, io.SEEK_CUR)
            body = bson_loads(reader.read(length))

        elif kind == SectionKind.FRAME_SEQUENCE:
            if body is None:
                msg = "Body section must come before the frame sequence"
                raise DumpFormatError(msg)

            (size,) = struct.unpack("<I", reader.read(4))
            string_bytes = bytearray()
            while (byte := reader.read(1)) != b"\x00":
                if not byte:
                    msg = "Unterminated section name"
                    raise DumpFormatError(msg)
                string_bytes += byte
            if string_bytes.decode("utf-8") != FRAME_KEY:
                msg = f"Unknown sequence {string_bytes.decode('utf-8')!r}"
                raise DumpFormatError(msg)

            frames.extend(
                bson.decode_all(  # type: ignore
                    reader.read(size - 4 - len(string_bytes) - 1)
                )
            )

        else:
            msg = f"Unknown section kind {kind}"
            raise DumpFormatError(msg)

    if body is None:
        msg = "Dump has no body section"
        raise DumpFormatError(msg)
    if len(frames) != item.header.stamps:
        msg = f"Header announces {item.header.stamps} stamps, found {len(frames)}"
        raise DumpFormatError(msg)
    return body, flags, frames


def decode_trajectory(data: bytes) -> Trajectory:
    """Rebuild a trajectory from dump bytes.

    Args:
        data (bytes): The dump.

    Raises:
        DumpFormatError: If the dump is malformed.

    Returns:
        Trajectory: The trajectory, with zero psi and sources where the dump
            omitted them.
    """
    body, flags, frames = parse_data(parse_header(io.BytesIO(data)))
    grid = SpaceGrid(int(body["dim"]), int(body["cells"]))

    def load(frame: Document, key: str) -> ScalarField:
        if key not in frame:
            return ScalarField.zeros(grid)
        values = np.asarray(frame[key], dtype=np.float64)
        return ScalarField(grid, values.reshape(grid.shape))

    return Trajectory(
        grid,
        float(body["dt"]),
        tuple(load(frame, "u") for frame in frames),
        tuple(load(frame, "psi") for frame in frames),
        tuple(load(frame, "f") for frame in frames),
        A=CoefficientField.from_document(body["A"]),
        M=CoefficientField.from_document(body["M"]),
        theta=float(body["theta"]),
        n_trunc=float(body["n_trunc"]),
        steps=tuple(StepInfo(**info) for info in body["steps"])
        if flags & DumpFlags.has_steps
        else (),
    )


def read_trajectory(path: str | Path) -> Trajectory:
    """Read a trajectory dump written by :func:`write_trajectory`.

    Args:
        path (str | Path): The file.

    Returns:
        Trajectory: The trajectory.
    """
    with Path(path).open("rb") as reader:
        return decode_trajectory(reader.read())
