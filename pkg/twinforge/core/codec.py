"""
msgspec encoders and decoders that understand numpy arrays.

JSON carries arrays as nested lists. MessagePack carries them as
`{dtype, shape, data}` maps so that round trips are bit exact.
"""

from __future__ import annotations

__all__ = [
    "to_builtins",
    "encode_json",
    "decode_json",
    "encode_msgpack",
    "decode_msgpack",
    "read_json",
    "write_json",
]

import pathlib
import typing as t

import msgspec
import numpy as np

from .errors import FileFormatError

T = t.TypeVar("T")


def _json_enc_hook(obj: t.Any) -> t.Any:
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    raise NotImplementedError(f"cannot encode {type(obj).__name__}")


def _json_dec_hook(kind: t.Type, obj: t.Any) -> t.Any:
    if kind is np.ndarray:
        return np.asarray(obj, dtype=np.float64)
    raise NotImplementedError(f"cannot decode {kind}")


def _msgpack_enc_hook(obj: t.Any) -> t.Any:
    if isinstance(obj, np.ndarray):
        array = np.ascontiguousarray(obj)
        return {"dtype": array.dtype.str, "shape": list(array.shape), "data": array.tobytes()}
    if isinstance(obj, np.generic):
        return obj.item()
    raise NotImplementedError(f"cannot encode {type(obj).__name__}")


def _msgpack_dec_hook(kind: t.Type, obj: t.Any) -> t.Any:
    if kind is np.ndarray:
        array = np.frombuffer(obj["data"], dtype=np.dtype(obj["dtype"]))
        return array.reshape(obj["shape"]).copy()
    raise NotImplementedError(f"cannot decode {kind}")


_json_encoder = msgspec.json.Encoder(enc_hook=_json_enc_hook)
_msgpack_encoder = msgspec.msgpack.Encoder(enc_hook=_msgpack_enc_hook)


def to_builtins(obj: t.Any) -> t.Any:
    """
    Converts structs and arrays into plain Python containers.
    """
    return msgspec.to_builtins(obj, enc_hook=_json_enc_hook)


def encode_json(obj: t.Any) -> bytes:
    return _json_encoder.encode(obj)


def decode_json(data: t.Union[bytes, str], kind: t.Type[T]) -> T:
    """
    Decodes JSON into `kind`, turning schema mismatches into `FileFormatError`.
    """
    try:
        return msgspec.json.decode(data, type=kind, dec_hook=_json_dec_hook)
    except (msgspec.ValidationError, msgspec.DecodeError) as exc:
        raise FileFormatError(str(exc)) from exc


def encode_msgpack(obj: t.Any) -> bytes:
    return _msgpack_encoder.encode(obj)


def decode_msgpack(data: bytes, kind: t.Type[T]) -> T:
    return msgspec.msgpack.decode(data, type=kind, dec_hook=_msgpack_dec_hook)


def read_json(path: t.Union[str, pathlib.Path], kind: t.Type[T]) -> T:
    try:
        data = pathlib.Path(path).read_bytes()
    except OSError as exc:
        raise FileFormatError(f"{path}: {exc.strerror}") from exc
    try:
        return decode_json(data, kind)
    except FileFormatError as exc:
        raise FileFormatError(f"{path}: {exc}") from exc


def write_json(path: t.Union[str, pathlib.Path], obj: t.Any) -> None:
    """
    Writes `obj` as indented JSON with a trailing newline.
    """
    text = msgspec.json.format(encode_json(obj), indent=2)
    pathlib.Path(path).write_bytes(text + b"\n")
