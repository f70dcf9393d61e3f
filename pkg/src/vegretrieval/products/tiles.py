"""Product and input tiles and their binary container.

Container layout (all little-endian)::

    magic      4 bytes   b"VGT1"
    hlen       uint32    length of the JSON header in bytes
    header     hlen      UTF-8 JSON, keys sorted, no whitespace
    planes               row-major, in header["planes"] order

Each header plane entry carries ``name``, ``dtype`` (``int16`` or
``uint8``) and, where meaningful, ``scale``, ``offset`` and ``fill``.
"""

from __future__ import annotations

import datetime as dt
import json
import struct
from dataclasses import dataclass

import numpy as np

from .. import VARIABLES
from ..errors import ConfigurationError, FormatError
from ..uncertainty import QualityClass
from .encoding import FILL_INT16, K0_SCALE, SCALES, decode_plane
from .grid import GridSpec

MAGIC = b"VGT1"
VERSION = 1
AGE_FILL = 255
AGE_MAX = 250
AGE_STEP = 10

QC_CLASS_MASK = 0b0000_0011
QC_CARRIED = 1 << 2
QC_UNPROCESSED = 1 << 3
QC_CLIPPED = 1 << 4
QC_RESERVED = 0b1110_0000

_DTYPES = {"int16": np.dtype("<i2"), "uint8": np.dtype("u1")}


def format_timeslot(day: dt.date) -> str:
    return day.strftime("%Y%m%d")


def parse_timeslot(text) -> dt.date:
    try:
        return dt.datetime.strptime(str(text), "%Y%m%d").date()
    except ValueError as exc:
        raise ConfigurationError(f"timeslot must be YYYYMMDD, got {text!r}") from exc


def product_filename(variable, timeslot: dt.date) -> str:
    return f"{variable}_{format_timeslot(timeslot)}.vgt"


@dataclass(eq=False)
class ProductTile:
    grid: GridSpec
    variable: str
    timeslot: dt.date
    value: np.ndarray  # int16
    error: np.ndarray  # int16
    qc: np.ndarray  # uint8
    age: np.ndarray  # uint8

    def __post_init__(self):
        if self.variable not in VARIABLES:
            raise ConfigurationError(f"unknown variable {self.variable!r}")
        self.value = np.asarray(self.value, dtype=np.int16)
        self.error = np.asarray(self.error, dtype=np.int16)
        self.qc = np.asarray(self.qc, dtype=np.uint8)
        self.age = np.asarray(self.age, dtype=np.uint8)
        for name in ("value", "error", "qc", "age"):
            if getattr(self, name).shape != self.grid.shape:
                raise ConfigurationError(f"{name} plane shape {getattr(self, name).shape} "
                                         f"does not match grid {self.grid.shape}")

    @property
    def scale(self):
        return SCALES[self.variable]

    def values(self):
        return decode_plane(self.value, self.scale)

    def errors(self):
        return decode_plane(self.error, self.scale)

    @property
    def unprocessed(self):
        return (self.qc & QC_UNPROCESSED) != 0

    @property
    def carried(self):
        return (self.qc & QC_CARRIED) != 0

    def quality(self):
        """Per-pixel :class:`QualityClass` codes, UNPROCESSED included."""
        codes = (self.qc & QC_CLASS_MASK).astype(np.uint8)
        codes[self.unprocessed] = QualityClass.UNPROCESSED
        return codes

    def check(self):
        """Raise ``ConfigurationError`` if the plane invariants are violated."""
        fill = self.value == FILL_INT16
        unproc = self.unprocessed
        if np.any(fill != unproc) or np.any(unproc != (self.age == AGE_FILL)):
            raise ConfigurationError("fill value, unprocessed bit and age 255 disagree")
        if np.any(unproc & self.carried):
            raise ConfigurationError("pixel marked both carried and unprocessed")
        if np.any(self.qc & QC_RESERVED):
            raise ConfigurationError("reserved QC bits set")

    def __eq__(self, other):
        if not isinstance(other, ProductTile):
            return NotImplemented
        return (self.grid == other.grid and self.variable == other.variable
                and self.timeslot == other.timeslot
                and all(np.array_equal(getattr(self, p), getattr(other, p))
                        for p in ("value", "error", "qc", "age")))

    @classmethod
    def empty(cls, grid, variable, timeslot):
        shape = grid.shape
        return cls(grid, variable, timeslot, np.full(shape, FILL_INT16, np.int16),
                   np.full(shape, FILL_INT16, np.int16), np.full(shape, QC_UNPROCESSED, np.uint8),
                   np.full(shape, AGE_FILL, np.uint8))


@dataclass(eq=False)
class InputTile:
    """k0 reflectances for C1/C2/C3, quantized int16 at 1e-4, plus optional sigma planes."""

    grid: GridSpec
    timeslot: dt.date
    k0: np.ndarray  # (3, rows, cols) int16
    sigma_k0: np.ndarray | None = None  # (3, rows, cols) int16

    def __post_init__(self):
        self.k0 = np.asarray(self.k0, dtype=np.int16)
        if self.k0.shape != (3, *self.grid.shape):
            raise ConfigurationError(f"k0 planes must have shape (3, {self.grid.rows}, {self.grid.cols})")
        if self.sigma_k0 is not None:
            self.sigma_k0 = np.asarray(self.sigma_k0, dtype=np.int16)
            if self.sigma_k0.shape != self.k0.shape:
                raise ConfigurationError("sigma_k0 planes must match k0 planes")

    def reflectances(self):
        return decode_plane(self.k0, K0_SCALE)

    def sigmas(self):
        return None if self.sigma_k0 is None else decode_plane(self.sigma_k0, K0_SCALE)

    def __eq__(self, other):
        if not isinstance(other, InputTile):
            return NotImplemented
        same_sigma = (self.sigma_k0 is None and other.sigma_k0 is None) or (
            self.sigma_k0 is not None and other.sigma_k0 is not None
            and np.array_equal(self.sigma_k0, other.sigma_k0))
        return (self.grid == other.grid and self.timeslot == other.timeslot
                and np.array_equal(self.k0, other.k0) and same_sigma)


def _int16_plane(name, scale):
    return {"name": name, "dtype": "int16", "scale": scale, "offset": 0.0, "fill": FILL_INT16}


def _pack(header, planes):
    text = json.dumps(header, sort_keys=True, separators=(",", ":"), allow_nan=False).encode("utf-8")
    chunks = [MAGIC, struct.pack("<I", len(text)), text]
    for desc, arr in zip(header["planes"], planes):
        chunks.append(np.ascontiguousarray(arr, dtype=_DTYPES[desc["dtype"]]).tobytes())
    return b"".join(chunks)


def _unpack(data: bytes):
    if len(data) < 8:
        raise FormatError("file shorter than the fixed preamble", offset=len(data))
    if data[:4] != MAGIC:
        raise FormatError(f"bad magic {data[:4]!r}", offset=0)
    (hlen,) = struct.unpack("<I", data[4:8])
    if 8 + hlen > len(data):
        raise FormatError(f"header length {hlen} exceeds file size {len(data)}", offset=4)
    try:
        header = json.loads(data[8:8 + hlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FormatError(f"unreadable JSON header: {exc}", offset=8) from exc
    if header.get("version") != VERSION:
        raise FormatError(f"unknown container version {header.get('version')!r}", offset=8)
    try:
        grid = GridSpec.from_dict(header["grid"])
        descs = header["planes"]
    except (KeyError, TypeError, ConfigurationError) as exc:
        raise FormatError(f"invalid header: {exc}", offset=8) from exc
    planes = {}
    pos = 8 + hlen
    for desc in descs:
        dtype = _DTYPES.get(desc.get("dtype"))
        if dtype is None:
            raise FormatError(f"plane {desc.get('name')!r} has unknown dtype {desc.get('dtype')!r}", offset=8)
        size = grid.rows * grid.cols * dtype.itemsize
        if pos + size > len(data):
            raise FormatError(f"plane {desc['name']!r} truncated: need {size} bytes, "
                              f"{len(data) - pos} available", offset=pos)
        planes[desc["name"]] = np.frombuffer(data, dtype, grid.rows * grid.cols, pos).reshape(grid.shape).copy()
        pos += size
    if pos != len(data):
        raise FormatError(f"{len(data) - pos} trailing bytes after the last plane", offset=pos)
    return header, grid, planes


def product_to_bytes(tile: ProductTile) -> bytes:
    scale = tile.scale
    header = {
        "version": VERSION,
        "kind": "product",
        "variable": tile.variable,
        "timeslot": format_timeslot(tile.timeslot),
        "grid": tile.grid.to_dict(),
        "planes": [
            _int16_plane("value", scale),
            _int16_plane("error", scale),
            {"name": "qc", "dtype": "uint8"},
            {"name": "age", "dtype": "uint8", "fill": AGE_FILL},
        ],
    }
    return _pack(header, [tile.value, tile.error, tile.qc, tile.age])


def product_from_bytes(data: bytes) -> ProductTile:
    header, grid, planes = _unpack(data)
    if header.get("kind") != "product":
        raise FormatError(f"expected a product container, found kind {header.get('kind')!r}", offset=8)
    names = [p["name"] for p in header["planes"]]
    if names != ["value", "error", "qc", "age"]:
        raise FormatError(f"product planes must be value, error, qc, age; got {names}", offset=8)
    variable = header.get("variable")
    if variable not in VARIABLES:
        raise FormatError(f"unknown variable {variable!r}", offset=8)
    for desc in header["planes"][:2]:
        if desc.get("scale") != SCALES[variable] or desc.get("offset") != 0.0 or desc.get("fill") != FILL_INT16:
            raise FormatError(f"unexpected encoding for plane {desc['name']!r}", offset=8)
    try:
        timeslot = parse_timeslot(header.get("timeslot"))
    except ConfigurationError as exc:
        raise FormatError(str(exc), offset=8) from exc
    return ProductTile(grid, variable, timeslot, planes["value"], planes["error"],
                       planes["qc"], planes["age"])


def input_to_bytes(tile: InputTile) -> bytes:
    names = ["k0_c1", "k0_c2", "k0_c3"]
    arrays = list(tile.k0)
    if tile.sigma_k0 is not None:
        names += ["sigma_k0_c1", "sigma_k0_c2", "sigma_k0_c3"]
        arrays += list(tile.sigma_k0)
    header = {
        "version": VERSION,
        "kind": "input",
        "timeslot": format_timeslot(tile.timeslot),
        "grid": tile.grid.to_dict(),
        "planes": [_int16_plane(n, K0_SCALE) for n in names],
    }
    return _pack(header, arrays)


def input_from_bytes(data: bytes) -> InputTile:
    header, grid, planes = _unpack(data)
    if header.get("kind") != "input":
        raise FormatError(f"expected an input container, found kind {header.get('kind')!r}", offset=8)
    try:
        k0 = np.stack([planes[f"k0_c{b}"] for b in (1, 2, 3)])
    except KeyError as exc:
        raise FormatError(f"missing plane {exc}", offset=8) from exc
    sigma = None
    if "sigma_k0_c1" in planes:
        sigma = np.stack([planes[f"sigma_k0_c{b}"] for b in (1, 2, 3)])
    try:
        timeslot = parse_timeslot(header.get("timeslot"))
    except ConfigurationError as exc:
        raise FormatError(str(exc), offset=8) from exc
    return InputTile(grid, timeslot, k0, sigma)


def write_product(tile: ProductTile, path):
    with open(path, "wb") as fh:
        fh.write(product_to_bytes(tile))


def read_product(path) -> ProductTile:
    with open(path, "rb") as fh:
        return product_from_bytes(fh.read())


def write_input(tile: InputTile, path):
    with open(path, "wb") as fh:
        fh.write(input_to_bytes(tile))


def read_input(path) -> InputTile:
    with open(path, "rb") as fh:
        return input_from_bytes(fh.read())
