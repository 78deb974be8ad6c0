"""Binary containers for volumes/images/signals and the run-config document.

All payloads are little-endian float64.  Headers are UTF-8 ``key=value``
lines after a magic string, terminated by one blank line, so files stay
inspectable with a hex dump or ``head``.
"""

from dataclasses import dataclass, fields as dc_fields, replace
import numpy as np

from .forward import SignalRecord
from .geometry import ScanGeometry, default_angles
from .grids import Grid2D, Grid3D, Image2D, Volume3D, make_grid
from .recon import ReconConfig

VOLUME_MAGIC = b"FFLV1\n"
IMAGE_MAGIC = b"FFLI1\n"
SIGNAL_MAGIC = b"FFLS1\n"


class FileFormatError(ValueError):
    """Bad magic, malformed header or inconsistent dimensions."""


class TruncatedFileError(FileFormatError):
    """Payload shorter than the header promises."""


def _fmt_floats(values):
    return ",".join(repr(float(v)) for v in values)


def _write_container(path, magic, header, payload):
    with open(path, "wb") as f:
        f.write(magic)
        for key, value in header.items():
            f.write(f"{key}={value}\n".encode())
        f.write(b"\n")
        f.write(payload.astype("<f8").tobytes())


def _read_container(path, magic, expected_keys):
    with open(path, "rb") as f:
        got = f.read(len(magic))
        if got != magic:
            raise FileFormatError(f"{path}: bad magic {got!r}, expected {magic!r}")
        header = {}
        while True:
            line = b""
            while not line.endswith(b"\n"):
                c = f.read(1)
                if not c:
                    raise FileFormatError(f"{path}: unterminated header")
                line += c
            line = line[:-1].decode()
            if not line:
                break
            if "=" not in line:
                raise FileFormatError(f"{path}: malformed header line {line!r}")
            key, value = line.split("=", 1)
            header[key] = value
        missing = expected_keys - header.keys()
        unknown = header.keys() - expected_keys
        if missing or unknown:
            raise FileFormatError(f"{path}: missing keys {sorted(missing)}, unknown keys {sorted(unknown)}")
        payload = f.read()
    return header, payload


def _payload_array(path, payload, count):
    expected = count * 8
    if len(payload) != expected:
        kind = TruncatedFileError if len(payload) < expected else FileFormatError
        raise kind(f"{path}: payload is {len(payload)} bytes, expected {expected}")
    return np.frombuffer(payload, dtype="<f8").astype(float)


def write_volume(path, vol):
    header = {
        "dims": ",".join(str(n) for n in vol.grid.dims),
        "extents": _fmt_floats(v for pair in vol.grid.extents for v in pair),
        "order": "x-fastest",
        "dtype": "f8-le",
    }
    _write_container(path, VOLUME_MAGIC, header, vol.values.ravel(order="F"))


def read_volume(path):
    header, payload = _read_container(path, VOLUME_MAGIC, {"dims", "extents", "order", "dtype"})
    dims = tuple(int(s) for s in header["dims"].split(","))
    ext = [float(s) for s in header["extents"].split(",")]
    if len(dims) != 3 or len(ext) != 6:
        raise FileFormatError(f"{path}: bad dims/extents")
    grid = make_grid(((ext[0], ext[1]), (ext[2], ext[3]), (ext[4], ext[5])), dims)
    data = _payload_array(path, payload, dims[0] * dims[1] * dims[2])
    return Volume3D(grid, data.reshape(dims, order="F"))


def write_image(path, img):
    header = {
        "dims": ",".join(str(n) for n in img.grid.dims),
        "extents": _fmt_floats(v for pair in img.grid.extents for v in pair),
        "order": "xi-fastest",
        "dtype": "f8-le",
    }
    _write_container(path, IMAGE_MAGIC, header, img.values.ravel(order="F"))


def read_image(path):
    header, payload = _read_container(path, IMAGE_MAGIC, {"dims", "extents", "order", "dtype"})
    dims = tuple(int(s) for s in header["dims"].split(","))
    ext = [float(s) for s in header["extents"].split(",")]
    if len(dims) != 2 or len(ext) != 4:
        raise FileFormatError(f"{path}: bad dims/extents")
    grid = Grid2D(((ext[0], ext[1]), (ext[2], ext[3])), dims)
    data = _payload_array(path, payload, dims[0] * dims[1])
    return Image2D(grid, data.reshape(dims, order="F"))


def write_signals(path, rec):
    header = {
        "theta": repr(float(rec.theta)),
        "count": str(rec.times.size),
        "layout": "t,sx,sy,sz",
        "dtype": "f8-le",
    }
    payload = np.column_stack([rec.times, rec.values])
    _write_container(path, SIGNAL_MAGIC, header, payload.ravel(order="C"))


def read_signals(path):
    header, payload = _read_container(path, SIGNAL_MAGIC, {"theta", "count", "layout", "dtype"})
    count = int(header["count"])
    data = _payload_array(path, payload, count * 4).reshape(count, 4)
    return SignalRecord(theta=float(header["theta"]), times=data[:, 0], values=data[:, 1:])


_CONFIG_FLOATS = {
    "gradient", "amplitude1", "amplitude2", "phase1", "phase2", "period",
    "h", "mu0", "moment", "lam", "cg_tol", "cutoff", "threshold", "noise_level",
}
_CONFIG_INTS = {"n_angles", "freq1", "freq2", "samples_per_angle", "cg_max_iter", "seed"}
_CONFIG_BOOLS = {"inpaint", "recenter"}


@dataclass
class RunConfig:
    """Full experiment description, serialized as ``key = value`` lines."""

    grid_dims: tuple = (200, 200, 200)
    grid_extents: tuple = (-1.0, 1.0, -1.0, 1.0, -1.0, 1.0)
    n_angles: int = 200
    gradient: float = 1.0
    amplitude1: float = 1.0
    amplitude2: float = 1.0
    freq1: int = 201
    freq2: int = 202
    phase1: float = np.pi / 2
    phase2: float = np.pi / 2
    period: float = 1.0
    samples_per_angle: int = 400_000
    h: float = 1e-2
    mu0: float = 1.25663706212e-6
    moment: float = 1.0
    sensitivity: tuple = (1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0)
    lam: float = 5e-4
    cg_tol: float = 1e-10
    cg_max_iter: int = 1000
    window: str = "rect"
    cutoff: float = 0.5
    threshold: float = 0.05
    inpaint: bool = False
    recenter: bool = True
    truncation_radius: float = None
    noise_level: float = 0.0
    seed: int = 0

    def geometry(self):
        P = np.asarray(self.sensitivity, dtype=float).reshape(3, 3)
        return ScanGeometry(
            angles=default_angles(self.n_angles),
            gradient=self.gradient,
            amplitude1=self.amplitude1,
            amplitude2=self.amplitude2,
            freq1=self.freq1,
            freq2=self.freq2,
            phase1=self.phase1,
            phase2=self.phase2,
            period=self.period,
            samples_per_angle=self.samples_per_angle,
            h=self.h,
            mu0=self.mu0,
            moment=self.moment,
            sensitivity=P,
        )

    def grid(self):
        e = self.grid_extents
        return make_grid(((e[0], e[1]), (e[2], e[3]), (e[4], e[5])), self.grid_dims)

    def recon_config(self):
        return ReconConfig(
            lam=self.lam,
            cg_tol=self.cg_tol,
            cg_max_iter=self.cg_max_iter,
            window=self.window,
            cutoff=self.cutoff,
            threshold=self.threshold,
            inpaint=self.inpaint,
            recenter=self.recenter,
            truncation_radius=self.truncation_radius,
        )


def paper_default_config():
    """The published experiment's parameters, verbatim."""
    return RunConfig()


def save_config(path, cfg):
    with open(path, "w", encoding="utf-8") as f:
        f.write(config_document(cfg))


def config_document(cfg):
    lines = []
    for f in dc_fields(RunConfig):
        value = getattr(cfg, f.name)
        if f.name in ("grid_dims",):
            text = ",".join(str(int(v)) for v in value)
        elif f.name in ("grid_extents", "sensitivity"):
            text = _fmt_floats(value)
        elif f.name in _CONFIG_FLOATS:
            text = repr(float(value))
        elif f.name in _CONFIG_INTS:
            text = str(int(value))
        elif f.name in _CONFIG_BOOLS:
            text = "true" if value else "false"
        elif f.name == "truncation_radius":
            text = "none" if value is None else repr(float(value))
        else:
            text = str(value)
        lines.append(f"{f.name} = {text}")
    return "\n".join(lines) + "\n"


def load_config(path):
    known = {f.name for f in dc_fields(RunConfig)}
    values = {}
    with open(path, encoding="utf-8") as f:
        for lineno, raw in enumerate(f, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected 'key = value'")
            key, text = (part.strip() for part in line.split("=", 1))
            if key not in known:
                raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
            values[key] = _parse_config_value(key, text)
    return replace(RunConfig(), **values)


def _parse_config_value(key, text):
    if key == "grid_dims":
        return tuple(int(s) for s in text.split(","))
    if key in ("grid_extents", "sensitivity"):
        return tuple(float(s) for s in text.split(","))
    if key in _CONFIG_FLOATS:
        return float(text)
    if key in _CONFIG_INTS:
        return int(text)
    if key in _CONFIG_BOOLS:
        if text.lower() not in ("true", "false"):
            raise ValueError(f"{key}: expected true/false, got {text!r}")
        return text.lower() == "true"
    if key == "truncation_radius":
        return None if text.lower() == "none" else float(text)
    return text
