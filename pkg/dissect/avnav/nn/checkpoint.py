from __future__ import annotations

import logging
from pathlib import Path
from typing import BinaryIO

import numpy as np

from dissect.avnav.c_avnav import c_avnav
from dissect.avnav.exception import CheckpointError, InvalidSignatureError

log = logging.getLogger(__name__)

Params = dict[str, np.ndarray]


def save_checkpoint(params: Params, fh: BinaryIO) -> None:
    """Write ``params`` in the DAVN format, records in name order."""
    header = c_avnav.CheckpointHeader(
        magic=c_avnav.DAVN_MAGIC, version=c_avnav.DAVN_VERSION, num_records=len(params)
    )
    fh.write(header.dumps())

    for name in sorted(params):
        value = np.asarray(params[name], dtype=np.float64)
        encoded = name.encode("utf-8")
        record = c_avnav.ParamRecord(
            name_length=len(encoded), name=encoded, ndim=value.ndim, shape=list(value.shape)
        )
        fh.write(record.dumps())
        fh.write(np.ascontiguousarray(value, dtype="<f8").tobytes())


def load_checkpoint(fh: BinaryIO) -> Params:
    offset = fh.tell()
    magic = fh.read(4)
    fh.seek(offset)
    if magic != c_avnav.DAVN_MAGIC:
        raise InvalidSignatureError("Invalid checkpoint magic")

    try:
        header = c_avnav.CheckpointHeader(fh)
    except EOFError:
        raise CheckpointError("Truncated checkpoint header")
    if header.version != c_avnav.DAVN_VERSION:
        raise CheckpointError(f"Unsupported checkpoint version: {header.version}")

    params = {}
    for _ in range(header.num_records):
        try:
            record = c_avnav.ParamRecord(fh)
        except EOFError:
            raise CheckpointError("Truncated parameter record")

        shape = tuple(record.shape)
        size = 8 * int(np.prod(shape, dtype=np.int64))
        data = fh.read(size)
        if len(data) != size:
            raise CheckpointError(f"Truncated data of parameter {record.name!r}")

        name = record.name.decode("utf-8")
        params[name] = np.frombuffer(data, dtype="<f8").reshape(shape).astype(np.float64)

    return params


def write_checkpoint(params: Params, path: Path) -> None:
    with Path(path).open("wb") as fh:
        save_checkpoint(params, fh)
    log.info("Wrote checkpoint with %d tensors to %s", len(params), path)


def read_checkpoint(path: Path) -> Params:
    path = Path(path)
    if not path.is_file():
        raise CheckpointError(f"No checkpoint at {path}")
    with path.open("rb") as fh:
        return load_checkpoint(fh)
