"""Binary parameter files.

Layout, little-endian: the magic ``GMDL1`` followed by one record per parameter
until end of file: ``u32`` name length, UTF-8 name, ``u32`` rank, ``rank`` x
``u32`` dims, float64 payload.
"""

from pathlib import Path
from typing import Mapping, Union

import numpy as np

from gazemodal.errors import DatasetLoadError
from gazemodal.ml.params import Params
from gazemodal.numeric.tensor import DifferentiableValue, parameter

MAGIC = b"GMDL1"
_U32 = np.dtype("<u4")
_F64 = np.dtype("<f8")


def save_params(params: Mapping[str, DifferentiableValue], path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    chunks = [MAGIC]
    for name, param in params.items():
        encoded = name.encode("utf-8")
        chunks.append(np.array([len(encoded)], dtype=_U32).tobytes())
        chunks.append(encoded)
        chunks.append(np.array([param.ndim, *param.shape], dtype=_U32).tobytes())
        chunks.append(np.ascontiguousarray(param.value, dtype=_F64).tobytes())
    path.write_bytes(b"".join(chunks))
    return path


def load_params(path: Union[str, Path]) -> Params:
    path = Path(path)
    try:
        data = path.read_bytes()
    except FileNotFoundError:
        raise DatasetLoadError("missing parameter file", path=path) from None
    if not data.startswith(MAGIC):
        raise DatasetLoadError("not a GMDL1 parameter file", path=path)

    def read_u32(offset: int, count: int = 1) -> np.ndarray:
        end = offset + 4 * count
        if end > len(data):
            raise DatasetLoadError("truncated parameter file", path=path)
        return np.frombuffer(data, dtype=_U32, count=count, offset=offset)

    params: Params = {}
    pos = len(MAGIC)
    while pos < len(data):
        name_len = int(read_u32(pos)[0])
        pos += 4
        name = data[pos : pos + name_len].decode("utf-8")
        pos += name_len
        rank = int(read_u32(pos)[0])
        pos += 4
        shape = tuple(int(d) for d in read_u32(pos, rank))
        pos += 4 * rank
        size = int(np.prod(shape, dtype=np.int64))
        if pos + 8 * size > len(data):
            raise DatasetLoadError(f"truncated payload for {name}", path=path)
        value = np.frombuffer(data, dtype=_F64, count=size, offset=pos).reshape(shape)
        pos += 8 * size
        params[name] = parameter(value.copy(), name=name)
    return params
