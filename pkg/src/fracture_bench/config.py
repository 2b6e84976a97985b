"""Run parameters: material constants, problem geometry, study settings.

Everything is validated once at load time and immutable afterwards, so the
objects can be shared freely between worker threads.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from pathlib import Path


class ConfigError(ValueError):
    """Raised for malformed config files or invalid parameter values."""


# ---------------------------------------------------------------------------
# Parameter containers
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MaterialParams:
    """Isotropic linear-elastic material with a fracture toughness.

    ``lam`` and ``mu`` are the plane-strain Lame moduli derived from
    (E, nu); they are exposed as properties so they can never drift out of
    sync with the primary constants.
    """

    E: float
    nu: float
    Gc: float

    def __post_init__(self):
        if not self.E > 0:
            raise ConfigError(f"material.E must be positive, got {self.E}")
        if not 0.0 < self.nu < 0.5:
            raise ConfigError(f"material.nu out of range (0, 0.5): {self.nu}")
        if not self.Gc > 0:
            raise ConfigError(f"material.Gc must be positive, got {self.Gc}")

    @property
    def lam(self) -> float:
        return self.E * self.nu / ((1.0 + self.nu) * (1.0 - 2.0 * self.nu))

    @property
    def mu(self) -> float:
        return self.E / (2.0 * (1.0 + self.nu))


@dataclass(frozen=True)
class ProblemParams:
    """Center-crack panel under remote equibiaxial tension.

    ``a`` is the crack half-length; the square domain has side ``D``.
    """

    sigma0: float
    a: float
    D: float
    material: MaterialParams

    def __post_init__(self):
        if not self.sigma0 > 0:
            raise ConfigError(f"load.sigma0 must be positive, got {self.sigma0}")
        if self.a < 0:
            raise ConfigError(f"crack half-length must be >= 0, got {self.a}")
        if not self.D > 0:
            raise ConfigError(f"geometry.D must be positive, got {self.D}")
        if 2.0 * self.a >= self.D:
            raise ConfigError(
                f"crack exceeds domain: crack_length={2 * self.a} >= D={self.D}"
            )
        if self.a > 0 and self.D < 5.0 * 2.0 * self.a:
            warnings.warn(
                f"domain D={self.D} is less than 5x the crack length "
                f"{2 * self.a}; finite-size effects may be significant",
                stacklevel=2,
            )


# ---------------------------------------------------------------------------
# Criticality condition
# ---------------------------------------------------------------------------

def critical_Gc(sigma0: float, a: float, E: float, nu: float) -> float:
    """Fracture toughness at which the crack is critically loaded.

    Returns (1 - nu^2)/E * K_I^2 with K_I = sigma0 * sqrt(pi * a).
    """
    if sigma0 < 0 or a < 0:
        raise ConfigError("sigma0 and a must be non-negative")
    if not E > 0:
        raise ConfigError(f"E must be positive, got {E}")
    if not 0.0 < nu < 0.5:
        raise ConfigError(f"nu out of range (0, 0.5): {nu}")
    K_I_sq = sigma0 * sigma0 * math.pi * a
    return (1.0 - nu * nu) / E * K_I_sq


@dataclass(frozen=True)
class CriticalityReport:
    Gc: float
    Gc_critical: float
    mismatch: float
    tol: float
    passed: bool


def check_criticality(params: ProblemParams, tol: float = 1e-4) -> CriticalityReport:
    """Relative mismatch between the configured Gc and the critical one."""
    m = params.material
    gc_crit = critical_Gc(params.sigma0, params.a, m.E, m.nu)
    mismatch = abs(m.Gc - gc_crit) / m.Gc
    return CriticalityReport(
        Gc=m.Gc, Gc_critical=gc_crit, mismatch=mismatch, tol=tol,
        passed=mismatch <= tol,
    )


# ---------------------------------------------------------------------------
# Study configuration and file parsing
# ---------------------------------------------------------------------------

#: Mesh sequence of the reference study (h normalized by the domain side).
#: The finest level is expensive and excluded from default runs.
STUDY_H_OVER_D = (0.02, 0.01, 0.005, 0.0025, 0.00125)
DEFAULT_H_OVER_D = STUDY_H_OVER_D[:4]

ALL_METHODS = ("ee", "ee-re", "pf")


@dataclass(frozen=True)
class StudyConfig:
    """Validated problem parameters plus all study knobs."""

    problem: ProblemParams
    h_over_D: tuple[float, ...] = DEFAULT_H_OVER_D
    methods: tuple[str, ...] = ALL_METHODS
    ee_epsilon: float | None = None        # None = optimal closed form
    ee_residual: float = 0.0               # stiffness left in eroded elements
    pf_epsilon_list: tuple[float, ...] | None = None   # None = auto bracket
    pf_eta: float | None = None            # None = (epsilon/D)^2
    pf_tol: float = 1e-10
    pf_max_iters: int = 200
    pf_pin_crack_nodes: bool = False
    quadrature: str = "reference"          # "reference" | "fast"
    output_dir: Path = Path("results")
    criticality_tol: float = 1e-4

    def __post_init__(self):
        if self.quadrature not in ("reference", "fast"):
            raise ConfigError(
                f"quadrature.mode must be 'reference' or 'fast', got "
                f"{self.quadrature!r}"
            )
        for m in self.methods:
            if m not in ALL_METHODS:
                raise ConfigError(f"unknown method {m!r}")
        if self.pf_tol <= 0:
            raise ConfigError(f"pf.tol must be positive, got {self.pf_tol}")
        if self.pf_max_iters < 1:
            raise ConfigError(f"pf.max_iters must be >= 1, got {self.pf_max_iters}")
        if self.ee_epsilon is not None and self.ee_epsilon <= 0:
            raise ConfigError(f"ee.epsilon must be positive, got {self.ee_epsilon}")
        if self.ee_residual < 0:
            raise ConfigError(f"ee.residual must be >= 0, got {self.ee_residual}")


_KNOWN_KEYS = {
    "material.E", "material.nu", "material.Gc", "material.derive_critical",
    "load.sigma0", "geometry.D", "geometry.crack_length",
    "mesh.h_over_D", "ee.epsilon", "ee.residual",
    "pf.epsilon_list", "pf.eta", "pf.tol", "pf.max_iters",
    "pf.pin_crack_nodes", "quadrature.mode", "output.dir",
    "study.methods", "criticality.tol",
}

_MANDATORY_KEYS = (
    "material.E", "material.nu", "load.sigma0", "geometry.D",
    "geometry.crack_length",
)


def _parse_float(key: str, raw: str) -> float:
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"non-numeric value for {key}: {raw!r}") from None


def _parse_bool(key: str, raw: str) -> bool:
    low = raw.strip().lower()
    if low in ("true", "false"):
        return low == "true"
    raise ConfigError(f"expected true/false for {key}, got {raw!r}")


def _parse_float_list(key: str, raw: str) -> tuple[float, ...]:
    items = [s for s in (t.strip() for t in raw.split(",")) if s]
    if not items:
        raise ConfigError(f"empty list for {key}")
    return tuple(_parse_float(key, s) for s in items)


def parse_config_text(text: str, source: str = "<string>") -> StudyConfig:
    """Parse the plain ``key = value`` config format into a StudyConfig."""
    raw: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {line!r}")
        key, value = (s.strip() for s in stripped.split("=", 1))
        if key not in _KNOWN_KEYS:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        if key in raw:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        raw[key] = value

    for key in _MANDATORY_KEYS:
        if key not in raw:
            raise ConfigError(f"{source}: missing mandatory key {key!r}")

    E = _parse_float("material.E", raw["material.E"])
    nu = _parse_float("material.nu", raw["material.nu"])
    sigma0 = _parse_float("load.sigma0", raw["load.sigma0"])
    D = _parse_float("geometry.D", raw["geometry.D"])
    crack_length = _parse_float("geometry.crack_length", raw["geometry.crack_length"])
    a = 0.5 * crack_length

    derive = ("material.derive_critical" in raw
              and _parse_bool("material.derive_critical", raw["material.derive_critical"]))
    if derive and "material.Gc" in raw:
        raise ConfigError(
            "give either material.Gc or material.derive_critical = true, not both"
        )
    if "material.Gc" in raw:
        Gc = _parse_float("material.Gc", raw["material.Gc"])
    else:
        # Default: derive Gc so the criticality condition holds exactly.
        Gc = critical_Gc(sigma0, a, E, nu)
        if Gc <= 0:
            raise ConfigError("derived Gc is zero; give material.Gc explicitly")

    material = MaterialParams(E=E, nu=nu, Gc=Gc)
    problem = ProblemParams(sigma0=sigma0, a=a, D=D, material=material)

    kwargs: dict = {}
    if "mesh.h_over_D" in raw:
        kwargs["h_over_D"] = _parse_float_list("mesh.h_over_D", raw["mesh.h_over_D"])
    if "ee.epsilon" in raw and raw["ee.epsilon"].strip().lower() != "auto":
        kwargs["ee_epsilon"] = _parse_float("ee.epsilon", raw["ee.epsilon"])
    if "ee.residual" in raw:
        kwargs["ee_residual"] = _parse_float("ee.residual", raw["ee.residual"])
    if "pf.epsilon_list" in raw and raw["pf.epsilon_list"].strip().lower() != "auto":
        kwargs["pf_epsilon_list"] = _parse_float_list(
            "pf.epsilon_list", raw["pf.epsilon_list"])
    if "pf.eta" in raw and raw["pf.eta"].strip().lower() != "auto":
        kwargs["pf_eta"] = _parse_float("pf.eta", raw["pf.eta"])
    if "pf.tol" in raw:
        kwargs["pf_tol"] = _parse_float("pf.tol", raw["pf.tol"])
    if "pf.max_iters" in raw:
        kwargs["pf_max_iters"] = int(_parse_float("pf.max_iters", raw["pf.max_iters"]))
    if "pf.pin_crack_nodes" in raw:
        kwargs["pf_pin_crack_nodes"] = _parse_bool(
            "pf.pin_crack_nodes", raw["pf.pin_crack_nodes"])
    if "quadrature.mode" in raw:
        kwargs["quadrature"] = raw["quadrature.mode"].strip()
    if "output.dir" in raw:
        kwargs["output_dir"] = Path(raw["output.dir"].strip())
    if "study.methods" in raw:
        kwargs["methods"] = tuple(
            s for s in (t.strip() for t in raw["study.methods"].split(",")) if s)
    if "criticality.tol" in raw:
        kwargs["criticality_tol"] = _parse_float(
            "criticality.tol", raw["criticality.tol"])

    return StudyConfig(problem=problem, **kwargs)


def load_config(path: str | Path) -> StudyConfig:
    """Load and validate a config file; see the README for the key list."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    return parse_config_text(text, source=str(path))


def table1_config(**overrides) -> StudyConfig:
    """The reference parameter set (unit-free), with Gc derived critically."""
    E, nu, sigma0, D, crack = 1e6, 0.25, 10.0, 5.0, 0.403125
    a = 0.5 * crack
    material = MaterialParams(E=E, nu=nu, Gc=critical_Gc(sigma0, a, E, nu))
    problem = ProblemParams(sigma0=sigma0, a=a, D=D, material=material)
    return StudyConfig(problem=problem, **overrides)
