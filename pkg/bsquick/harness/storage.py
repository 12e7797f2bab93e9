"""
Сохранение сертификатов и отчетов.

Контейнер сертификата: `b"BSQC"`, длина заголовка (uint32 LE),
JSON заголовок и сырые массивы. Все массивы -- little-endian
float64 в row-major порядке, комплексные поля разбиты на
`<name>.re` и `<name>.im`. Контрольная сумма sha256 покрывает
канонический заголовок (без самой суммы) и все байты массивов
"""
from __future__ import annotations

import csv
import hashlib
import io
import os
import pathlib
import struct
import tempfile
import typing as ty

import numpy as np
from loguru import logger

from bsquick.exceptions import StorageError
from bsquick.forge import Certificate
from bsquick.grid import Field, FourierGrid
from bsquick.json_parsers import BuiltinJsonParser, json_parser_policy
from bsquick.region import RegionSpec
from bsquick.symbols import TabulatedSymbol, symbol_from_descriptor

MAGIC = b"BSQC"
FORMAT_VERSION = 1
LAYOUT = (
    "row-major; little-endian float64; "
    "complex fields split into <name>.re and <name>.im"
)
_PREFIX = struct.Struct("<4sI")
_FLOAT = np.dtype("<f8")
_FIELDS = ("phi", "psi", "potential")


def atomic_write(path: ty.Union[str, pathlib.Path], data: bytes) -> None:
    """
    Пишет байты во временный файл рядом с `path` и переименовывает
    его в `path`, так что читатель видит либо старый, либо новый файл
    """
    path = pathlib.Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    descriptor, temporary = tempfile.mkstemp(
        dir=path.parent, prefix=f".{path.name}.", suffix=".tmp"
    )
    try:
        with os.fdopen(descriptor, "wb") as file:
            file.write(data)
            file.flush()
            os.fsync(file.fileno())
        os.replace(temporary, path)
    except BaseException:
        _unlink_quietly(temporary)
        raise
    logger.debug("Wrote {size} bytes to {path}", size=len(data), path=path)


def _unlink_quietly(path: str) -> None:
    try:
        os.unlink(path)
    except OSError:  # pragma: no cover
        pass


def _checksum(header: ty.Dict[str, ty.Any], payload: bytes) -> str:
    digest = hashlib.sha256()
    digest.update(BuiltinJsonParser.dumps(header, canonical=True))
    digest.update(payload)
    return digest.hexdigest()


def _certificate_arrays(
    certificate: Certificate,
) -> ty.List[ty.Tuple[str, np.ndarray]]:
    arrays = []
    for name in _FIELDS:
        values = getattr(certificate, name).values
        arrays.append((f"{name}.re", values.real))
        arrays.append((f"{name}.im", values.imag))
    if isinstance(certificate.symbol, TabulatedSymbol):
        arrays.append(("symbol.table", certificate.symbol.values))
    return arrays


def dump_certificate(certificate: Certificate) -> bytes:
    """Сериализует сертификат в байты контейнера"""
    chunks, entries, offset = [], [], 0
    for name, array in _certificate_arrays(certificate):
        raw = np.ascontiguousarray(array, dtype=_FLOAT).tobytes(order="C")
        entries.append(
            {
                "name": name,
                "shape": list(array.shape),
                "offset": offset,
                "nbytes": len(raw),
            }
        )
        chunks.append(raw)
        offset += len(raw)
    payload = b"".join(chunks)
    header = {
        "format": "bsquick-certificate",
        "version": FORMAT_VERSION,
        "layout": LAYOUT,
        "dtype": _FLOAT.str,
        "grid": certificate.grid.describe(),
        "symbol": certificate.symbol.descriptor(),
        "region": certificate.region.describe(),
        "lambda": certificate.energy,
        "epsilon": certificate.epsilon,
        "mu": certificate.mu,
        "residual": certificate.residual,
        "nodal_fraction": certificate.nodal_fraction,
        "nodal_threshold": certificate.nodal_threshold,
        "eigen_residual": certificate.eigen_residual,
        "q_norms": [[q, norm] for q, norm in certificate.q_norms.items()],
        "arrays": entries,
    }
    header["sha256"] = _checksum(header, payload)
    encoded = json_parser_policy.dumps(header)
    return _PREFIX.pack(MAGIC, len(encoded)) + encoded + payload


def parse_certificate(data: bytes) -> Certificate:
    """
    Восстанавливает сертификат из байтов контейнера

    Raises:
        StorageError: Не контейнер, другая версия, обрезанный
            файл или несовпадение контрольной суммы
    """
    if len(data) < _PREFIX.size:
        raise StorageError("certificate file is truncated (no header)")
    magic, header_size = _PREFIX.unpack_from(data)
    if magic != MAGIC:
        raise StorageError("not a bsquick certificate container")
    header_end = _PREFIX.size + header_size
    if len(data) < header_end:
        raise StorageError("certificate file is truncated (header)")
    try:
        header = json_parser_policy.loads(data[_PREFIX.size:header_end])
    except ValueError as error:
        raise StorageError(
            f"certificate header is not JSON: {error}"
        ) from error
    version = header.get("version")
    if version != FORMAT_VERSION:
        raise StorageError(
            f"unsupported certificate version {version!r}, "
            f"this build reads version {FORMAT_VERSION}"
        )
    payload = data[header_end:]
    expected = sum(entry["nbytes"] for entry in header["arrays"])
    if len(payload) != expected:
        raise StorageError(
            f"certificate payload has {len(payload)} bytes, "
            f"header describes {expected} (truncated or padded file)"
        )
    stored_checksum = header.pop("sha256", None)
    if stored_checksum != _checksum(header, payload):
        raise StorageError("certificate checksum mismatch")

    arrays = {}
    for entry in header["arrays"]:
        start = entry["offset"]
        raw = payload[start:start + entry["nbytes"]]
        arrays[entry["name"]] = np.frombuffer(raw, dtype=_FLOAT).reshape(
            entry["shape"]
        )
    grid = FourierGrid(
        box_lengths=tuple(header["grid"]["box_lengths"]),
        sizes=tuple(header["grid"]["sizes"]),
    )
    fields = {
        name: Field(grid, arrays[f"{name}.re"] + 1j * arrays[f"{name}.im"])
        for name in _FIELDS
    }
    symbol = symbol_from_descriptor(
        header["symbol"], table=arrays.get("symbol.table"), grid=grid
    )
    return Certificate(
        symbol=symbol,
        energy=header["lambda"],
        epsilon=header["epsilon"],
        region=RegionSpec.from_description(header["region"]),
        mu=header["mu"],
        phi=fields["phi"],
        psi=fields["psi"],
        potential=fields["potential"],
        residual=header["residual"],
        nodal_fraction=header["nodal_fraction"],
        q_norms={float(q): float(norm) for q, norm in header["q_norms"]},
        nodal_threshold=header["nodal_threshold"],
        eigen_residual=header["eigen_residual"],
    )


def save_certificate(
    certificate: Certificate, path: ty.Union[str, pathlib.Path]
) -> pathlib.Path:
    path = pathlib.Path(path)
    atomic_write(path, dump_certificate(certificate))
    logger.info(
        "Saved certificate z={z} to {path}", z=certificate.z, path=path
    )
    return path


def load_certificate(path: ty.Union[str, pathlib.Path]) -> Certificate:
    """
    Raises:
        StorageError: Файл не читается или поврежден
    """
    path = pathlib.Path(path)
    try:
        data = path.read_bytes()
    except OSError as error:
        raise StorageError(f"can't read {path}: {error}") from error
    return parse_certificate(data)


def save_report(
    report: ty.Any, path: ty.Union[str, pathlib.Path]
) -> pathlib.Path:
    """Сохраняет JSON отчет (ключи отсортированы)"""
    path = pathlib.Path(path)
    atomic_write(path, json_parser_policy.dumps(report, canonical=True))
    return path


def load_report(path: ty.Union[str, pathlib.Path]) -> ty.Any:
    path = pathlib.Path(path)
    try:
        return json_parser_policy.loads(path.read_bytes())
    except (OSError, ValueError) as error:
        raise StorageError(f"can't read report {path}: {error}") from error


def format_value(value: ty.Any) -> str:
    """
    Значение ячейки CSV: числа -- в научной записи с 12 значащими
    цифрами, `None` -- пустая ячейка
    """
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, (int, float, np.floating, np.integer)):
        return f"{float(value):.11e}"
    return str(value)


def write_csv(
    path: ty.Union[str, pathlib.Path],
    columns: ty.Sequence[str],
    records: ty.Iterable[ty.Dict[str, ty.Any]],
) -> pathlib.Path:
    """Атомарно пишет CSV с заголовком `columns`"""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(columns)
    for record in records:
        writer.writerow(
            [format_value(record.get(column)) for column in columns]
        )
    path = pathlib.Path(path)
    atomic_write(path, buffer.getvalue().encode("utf-8"))
    logger.info("Wrote table {path}", path=path)
    return path


def read_csv(path: ty.Union[str, pathlib.Path]) -> ty.List[ty.Dict[str, str]]:
    with open(path, newline="", encoding="utf-8") as file:
        return list(csv.DictReader(file))
