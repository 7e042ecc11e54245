"""Scenario configuration: JSON document plus command-line overrides.

Complex numbers are written as a plain number, a ``[re, im]`` pair, or a
string such as ``"1-0.5j"``.  Unknown keys are rejected.
"""

from dataclasses import dataclass, field, replace
import json
import math

import numpy as np

from ..errors import ParseError, ValidationError
from .instances import RandomSpec

MODES = ("decompose", "evolve", "suppress", "historian", "lattice", "sweep")
FORMATS = ("csv", "json")

_TOP_KEYS = {"mode", "hamiltonian", "initial_state", "observable", "times", "hbar", "seed",
             "tolerances", "output", "sweep", "strict"}
_HAM_KEYS = {"matrix", "random", "lattice"}
_RANDOM_KEYS = {"dim", "seed", "re_range", "im_range", "min_separation", "kappa_cap"}
_LATTICE_KEYS = {"n_sites", "spacing", "mass", "v_real", "v_imag", "boundary", "packet"}
_PACKET_KEYS = {"center", "width", "k0"}
_TIME_KEYS = {"t_span", "dt", "stride", "t1", "t", "t_values"}
_TOL_KEYS = {"eps_a", "tol_eig", "kappa_max"}
_OUT_KEYS = {"format", "path"}
_SWEEP_KEYS = {"count", "dim_min", "dim_max", "re_range", "im_range", "min_separation"}


@dataclass(frozen=True)
class Times:
    t_span: float = 10.0
    dt: float = 1e-3
    stride: int = 100
    t1: float = 1.0
    t: float = 10.0
    t_values: tuple = ()


@dataclass(frozen=True)
class Tolerances:
    eps_a: float = None
    tol_eig: float = 1e-10
    kappa_max: float = 1e8


@dataclass(frozen=True)
class LatticeSpec:
    n_sites: int = 64
    spacing: float = 1.0
    mass: float = 1.0
    v_real: object = 0.0
    v_imag: object = 0.0
    boundary: str = "dirichlet"
    packet_center: float | None = None
    packet_width: float | None = None
    packet_k0: float = 0.0


@dataclass(frozen=True)
class SweepSpec:
    count: int = 20
    dim_min: int = 2
    dim_max: int = 8
    re_range: tuple = (-1.0, 1.0)
    im_range: tuple = (-1.0, 1.0)
    min_separation: float = 0.1


@dataclass(frozen=True)
class ScenarioConfig:
    mode: str
    matrix: np.ndarray | None = None
    random: RandomSpec | None = None
    lattice: LatticeSpec | None = None
    initial_state: np.ndarray | None = None
    observable: np.ndarray | None = None
    times: Times = field(default_factory=Times)
    hbar: float = 1.0
    seed: int = 0
    tolerances: Tolerances = field(default_factory=Tolerances)
    format: str = "json"
    path: str | None = None
    sweep: SweepSpec = field(default_factory=SweepSpec)
    strict: bool = False

    def echo(self):
        """JSON-ready mirror of the configuration."""
        out = {"mode": self.mode, "hbar": self.hbar, "seed": self.seed,
               "times": _plain(self.times.__dict__),
               "tolerances": _plain(self.tolerances.__dict__),
               "output": {"format": self.format, "path": self.path},
               "strict": self.strict}
        if self.matrix is not None:
            out["hamiltonian"] = {"matrix": encode_matrix(self.matrix)}
        elif self.random is not None:
            out["hamiltonian"] = {"random": _plain(self.random.__dict__)}
        elif self.lattice is not None:
            out["hamiltonian"] = {"lattice": _plain(self.lattice.__dict__)}
        if self.initial_state is not None:
            out["initial_state"] = [encode_complex(z) for z in self.initial_state]
        if self.observable is not None:
            out["observable"] = encode_matrix(self.observable)
        if self.mode == "sweep":
            out["sweep"] = _plain(self.sweep.__dict__)
        return out


def _plain(d):
    out = {}
    for k, v in d.items():
        if isinstance(v, tuple):
            v = list(v)
        elif isinstance(v, np.ndarray):
            v = v.tolist()
        out[k] = v
    return out


def encode_complex(z):
    z = complex(z)
    return [z.real, z.imag]


def encode_matrix(m):
    return [[encode_complex(z) for z in row] for row in np.asarray(m)]


def _complex(value, name):
    try:
        if isinstance(value, bool):
            raise TypeError
        if isinstance(value, (int, float)):
            z = complex(value)
        elif isinstance(value, str):
            z = complex(value.replace(" ", ""))
        elif isinstance(value, (list, tuple)) and len(value) == 2:
            z = complex(float(value[0]), float(value[1]))
        else:
            raise TypeError
    except (TypeError, ValueError):
        raise ValidationError(name, f"not a complex number: {value!r}") from None
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise ValidationError(name, "must be finite")
    return z


def _vector(values, name):
    if not isinstance(values, list) or not values:
        raise ValidationError(name, "must be a non-empty list")
    return np.array([_complex(v, f"{name}[{i}]") for i, v in enumerate(values)])


def _matrix(rows, name):
    if not isinstance(rows, list) or not rows or not all(isinstance(r, list) for r in rows):
        raise ValidationError(name, "must be a list of rows")
    n = len(rows)
    if any(len(r) != n for r in rows):
        raise ValidationError(name, "must be square")
    return np.array([[_complex(v, f"{name}[{i}][{j}]") for j, v in enumerate(r)]
                     for i, r in enumerate(rows)])


def _float(value, name, positive=False, allow_none=False):
    if value is None and allow_none:
        return None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValidationError(name, f"must be a number, got {value!r}")
    value = float(value)
    if not math.isfinite(value):
        raise ValidationError(name, "must be finite")
    if positive and value <= 0:
        raise ValidationError(name, "must be positive")
    return value


def _int(value, name, minimum=None):
    if isinstance(value, bool) or not isinstance(value, int):
        raise ValidationError(name, f"must be an integer, got {value!r}")
    if minimum is not None and value < minimum:
        raise ValidationError(name, f"must be >= {minimum}")
    return value


def _range(value, name):
    if not isinstance(value, list) or len(value) != 2:
        raise ValidationError(name, "must be [lo, hi]")
    lo = _float(value[0], f"{name}[0]")
    hi = _float(value[1], f"{name}[1]")
    if lo > hi:
        raise ValidationError(name, "lo must not exceed hi")
    return (lo, hi)


def _section(doc, key, allowed, prefix=""):
    sect = doc.get(key, {})
    if sect is None:
        sect = {}
    if not isinstance(sect, dict):
        raise ParseError("expected an object", field=prefix + key)
    unknown = sorted(set(sect) - allowed)
    if unknown:
        raise ParseError(f"unknown key(s): {', '.join(unknown)}", field=prefix + key)
    return sect


def _load(text):
    try:
        doc = json.loads(text) if text.strip() else {}
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, line=exc.lineno) from None
    if not isinstance(doc, dict):
        raise ParseError("top level must be a JSON object", line=1)
    unknown = sorted(set(doc) - _TOP_KEYS)
    if unknown:
        raise ParseError(f"unknown key(s): {', '.join(unknown)}")
    return doc


def parse_config(text="", overrides=None):
    """Build a validated :class:`ScenarioConfig`.

    ``overrides`` holds command-line values (``mode``, ``seed``, ``hbar``,
    ``path``, ``format``, ``strict``); any that are not ``None`` replace the
    document's values.
    """
    doc = _load(text)
    overrides = {k: v for k, v in (overrides or {}).items() if v is not None}

    mode = overrides.get("mode", doc.get("mode"))
    if mode not in MODES:
        raise ValidationError("mode", f"must be one of {', '.join(MODES)}")

    seed = _int(overrides.get("seed", doc.get("seed", 0)), "seed", minimum=0)
    hbar = _float(overrides.get("hbar", doc.get("hbar", 1.0)), "hbar", positive=True)

    t = _section(doc, "times", _TIME_KEYS)
    times = Times(
        t_span=_float(t.get("t_span", 10.0), "times.t_span", positive=True),
        dt=_float(t.get("dt", 1e-3), "times.dt", positive=True),
        stride=_int(t.get("stride", 100), "times.stride", minimum=1),
        t1=_float(t.get("t1", 1.0), "times.t1"),
        t=_float(t.get("t", 10.0), "times.t"),
        t_values=tuple(_float(v, f"times.t_values[{i}]") for i, v in enumerate(t.get("t_values", []))),
    )
    if times.t1 < 0:
        raise ValidationError("times.t1", "must be >= 0")
    if times.t < times.t1:
        raise ValidationError("times.t", "must be >= times.t1")
    if any(v < times.t1 for v in times.t_values):
        raise ValidationError("times.t_values", "every value must be >= times.t1")

    tl = _section(doc, "tolerances", _TOL_KEYS)
    tolerances = Tolerances(
        eps_a=_float(tl.get("eps_a"), "tolerances.eps_a", positive=True, allow_none=True),
        tol_eig=_float(tl.get("tol_eig", 1e-10), "tolerances.tol_eig", positive=True),
        kappa_max=_float(tl.get("kappa_max", 1e8), "tolerances.kappa_max", positive=True),
    )

    out = _section(doc, "output", _OUT_KEYS)
    fmt = overrides.get("format", out.get("format", "json"))
    if fmt not in FORMATS:
        raise ValidationError("output.format", "must be 'csv' or 'json'")
    path = overrides.get("path", out.get("path"))
    if path is not None and not isinstance(path, str):
        raise ValidationError("output.path", "must be a string")

    strict = overrides.get("strict", doc.get("strict", False))
    if not isinstance(strict, bool):
        raise ValidationError("strict", "must be true or false")

    ham = _section(doc, "hamiltonian", _HAM_KEYS)
    sources = [k for k in ("matrix", "random", "lattice") if k in ham]
    if len(sources) > 1:
        raise ValidationError("hamiltonian", "give exactly one of matrix, random, lattice")
    matrix = random = lattice = None
    if "matrix" in ham:
        matrix = _matrix(ham["matrix"], "hamiltonian.matrix")
    elif "random" in ham:
        r = _section(ham, "random", _RANDOM_KEYS, "hamiltonian.")
        random = RandomSpec(
            dim=_int(r.get("dim", 4), "hamiltonian.random.dim", minimum=1),
            seed=_int(r.get("seed", seed), "hamiltonian.random.seed", minimum=0),
            re_range=_range(r.get("re_range", [-1.0, 1.0]), "hamiltonian.random.re_range"),
            im_range=_range(r.get("im_range", [-1.0, 1.0]), "hamiltonian.random.im_range"),
            min_separation=_float(r.get("min_separation", 0.1), "hamiltonian.random.min_separation"),
            kappa_cap=_float(r.get("kappa_cap", 1e4), "hamiltonian.random.kappa_cap", positive=True),
        ).validate()
        if "seed" in overrides and "seed" in r:
            random = replace(random, seed=seed)
    elif "lattice" in ham:
        lattice = _lattice(_section(ham, "lattice", _LATTICE_KEYS, "hamiltonian."))

    if mode == "sweep":
        sw = _section(doc, "sweep", _SWEEP_KEYS)
        sweep = SweepSpec(
            count=_int(sw.get("count", 20), "sweep.count", minimum=1),
            dim_min=_int(sw.get("dim_min", 2), "sweep.dim_min", minimum=1),
            dim_max=_int(sw.get("dim_max", 8), "sweep.dim_max", minimum=1),
            re_range=_range(sw.get("re_range", [-1.0, 1.0]), "sweep.re_range"),
            im_range=_range(sw.get("im_range", [-1.0, 1.0]), "sweep.im_range"),
            min_separation=_float(sw.get("min_separation", 0.1), "sweep.min_separation"),
        )
        if sweep.dim_max < sweep.dim_min:
            raise ValidationError("sweep.dim_max", "must be >= sweep.dim_min")
    else:
        sweep = SweepSpec()
        if not sources:
            raise ValidationError("hamiltonian", f"mode {mode!r} needs a matrix, random or lattice source")
        if mode == "lattice" and lattice is None:
            raise ValidationError("hamiltonian.lattice", "lattice mode needs a lattice source")

    initial = None
    if "initial_state" in doc and doc["initial_state"] is not None:
        initial = _vector(doc["initial_state"], "initial_state")
    observable = None
    if "observable" in doc and doc["observable"] is not None:
        observable = _matrix(doc["observable"], "observable")

    cfg = ScenarioConfig(mode=mode, matrix=matrix, random=random, lattice=lattice,
                         initial_state=initial, observable=observable, times=times, hbar=hbar,
                         seed=seed, tolerances=tolerances, format=fmt, path=path, sweep=sweep,
                         strict=strict)
    dim = _dim(cfg)
    if dim is not None:
        if initial is not None and initial.shape[0] != dim:
            raise ValidationError("initial_state", f"needs {dim} entries")
        if observable is not None and observable.shape[0] != dim:
            raise ValidationError("observable", f"must be {dim}x{dim}")
    return cfg


def _dim(cfg):
    if cfg.matrix is not None:
        return cfg.matrix.shape[0]
    if cfg.random is not None:
        return cfg.random.dim
    if cfg.lattice is not None:
        return cfg.lattice.n_sites
    return None


def _potential(value, name):
    if isinstance(value, list):
        return tuple(_float(v, f"{name}[{i}]") for i, v in enumerate(value))
    return _float(value, name)


def _lattice(sect):
    packet = _section(sect, "packet", _PACKET_KEYS, "hamiltonian.lattice.")
    pre = "hamiltonian.lattice"
    spec = LatticeSpec(
        n_sites=_int(sect.get("n_sites", 64), f"{pre}.n_sites", minimum=3),
        spacing=_float(sect.get("spacing", 1.0), f"{pre}.spacing", positive=True),
        mass=_float(sect.get("mass", 1.0), f"{pre}.mass", positive=True),
        v_real=_potential(sect.get("v_real", 0.0), f"{pre}.v_real"),
        v_imag=_potential(sect.get("v_imag", 0.0), f"{pre}.v_imag"),
        boundary=sect.get("boundary", "dirichlet"),
        packet_center=_float(packet.get("center"), f"{pre}.packet.center", allow_none=True),
        packet_width=_float(packet.get("width"), f"{pre}.packet.width", positive=True, allow_none=True)
        if packet.get("width") is not None else None,
        packet_k0=_float(packet.get("k0", 0.0), f"{pre}.packet.k0"),
    )
    if spec.boundary not in ("dirichlet", "periodic"):
        raise ValidationError(f"{pre}.boundary", "must be 'dirichlet' or 'periodic'")
    for name in ("v_real", "v_imag"):
        v = getattr(spec, name)
        if isinstance(v, tuple) and len(v) != spec.n_sites:
            raise ValidationError(f"{pre}.{name}", f"needs {spec.n_sites} values")
    return spec
