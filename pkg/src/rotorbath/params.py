"""Validated parameter containers shared by every other module.

Three small groups: rotor (kick strength and effective Planck constant),
bath (coupling strength, spectral cutoff, inverse temperature, coupling
derivative), and numerics (basis/grid sizes and tolerances).  They are
bundled into an immutable :class:`ValidatedConfig` which downstream code
accepts without re-checking physical ranges.

Time is dimensionless with the kick period equal to 1, so every bath
kernel is evaluated at t = 1 once per kick.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Mapping, Optional

from .errors import ConfigError

# Paper-style operating point used throughout the figures: hbar held at
# 0.46, cutoff at 5/hbar and inverse temperature 0.1 (beta*hbar*omega_c < 1).
DEFAULT_K = 3.5
DEFAULT_HBAR = 0.46
DEFAULT_ETA = 1.0
DEFAULT_BETA = 0.1
DEFAULT_PHI_PRIME = 1.0
DEFAULT_KICKS = 100


@dataclass(frozen=True)
class RotorParams:
    """Kicked-rotor constants: kinetic term p^2/2 plus kicks of strength K cos q."""

    K: float = DEFAULT_K
    hbar: float = DEFAULT_HBAR


@dataclass(frozen=True)
class BathParams:
    """Ohmic bath constants.

    eta is the overall coupling strength (eta = 0 turns every bath effect
    into the identity), omega_c the exponential spectral cutoff, beta the
    inverse temperature, and phi_prime the derivative of the (linear)
    coupling function of momentum, kept as a scalar with default 1.
    """

    eta: float = DEFAULT_ETA
    omega_c: float = 5.0 / DEFAULT_HBAR
    beta: float = DEFAULT_BETA
    phi_prime: float = DEFAULT_PHI_PRIME


@dataclass(frozen=True)
class NumericsParams:
    """Discretisation sizes and tolerances.

    l_max is the momentum-basis half-width (basis spans l in [-l_max, l_max]);
    nq / np_grid are the angle / momentum grid sizes of the classical solver;
    p_extent is the momentum half-width of that grid.  l_max and p_extent
    default to None, meaning "size automatically from K, hbar and the number
    of kicks" (see quantum.auto_l_max and phase_space.auto_p_extent).
    """

    l_max: Optional[int] = None
    nq: int = 512
    np_grid: int = 4096
    p_extent: Optional[float] = None
    band_tol: float = 1e-14
    eig_floor: float = 1e-14
    product_tol: float = 1e-12


@dataclass(frozen=True)
class ValidatedConfig:
    """Immutable, fully validated bundle accepted by every runner.

    Safe to share across concurrent workers; `flags` records advisory
    conditions (e.g. "bath disabled" when eta = 0).
    """

    rotor: RotorParams = field(default_factory=RotorParams)
    bath: BathParams = field(default_factory=BathParams)
    numerics: NumericsParams = field(default_factory=NumericsParams)
    kicks: int = DEFAULT_KICKS
    seed: int = 0
    flags: tuple[str, ...] = ()


def _check(rotor: RotorParams, bath: BathParams, num: NumericsParams,
           kicks: int, seed: int) -> list[str]:
    bad: list[str] = []
    # K = 0 (no kicks at all) stays legal so the decoupled limits can run.
    if not (isinstance(rotor.K, (int, float)) and math.isfinite(rotor.K)) or rotor.K < 0:
        bad.append("K must be positive")
    if not math.isfinite(rotor.hbar) or rotor.hbar <= 0:
        bad.append("hbar must be positive")
    if not math.isfinite(bath.eta) or bath.eta < 0:
        bad.append("eta must be non-negative")
    if not math.isfinite(bath.omega_c) or bath.omega_c <= 0:
        bad.append("omega_c must be positive")
    if not math.isfinite(bath.beta) or bath.beta <= 0:
        bad.append("beta must be positive")
    if not math.isfinite(bath.phi_prime):
        bad.append("phi_prime must be finite")
    if num.l_max is not None and num.l_max < 1:
        bad.append("l_max must be at least 1")
    if num.nq < 8:
        bad.append("nq must be at least 8")
    if num.np_grid < 8:
        bad.append("np_grid must be at least 8")
    if num.p_extent is not None and not num.p_extent > 0:
        bad.append("p_extent must be positive")
    for name in ("band_tol", "eig_floor", "product_tol"):
        v = getattr(num, name)
        if not (0.0 < v < 1.0):
            bad.append(f"{name} must lie in (0, 1)")
    if kicks < 0:
        bad.append("kicks must be non-negative")
    if not isinstance(seed, int):
        bad.append("seed must be an integer")
    return bad


def validate(rotor: RotorParams | ValidatedConfig = None,
             bath: BathParams = None,
             num: NumericsParams = None,
             kicks: int = DEFAULT_KICKS,
             seed: int = 0) -> ValidatedConfig:
    """Validate parameters and return an immutable config.

    Accepts either the three parameter groups or an existing
    ValidatedConfig (validate is idempotent on the accepted set).
    Raises ConfigError carrying every violated invariant by name.
    """
    if isinstance(rotor, ValidatedConfig):
        cfg = rotor
        rotor, bath, num = cfg.rotor, cfg.bath, cfg.numerics
        kicks, seed = cfg.kicks, cfg.seed
    rotor = rotor if rotor is not None else RotorParams()
    bath = bath if bath is not None else BathParams()
    num = num if num is not None else NumericsParams()

    violations = _check(rotor, bath, num, kicks, seed)
    if violations:
        raise ConfigError(violations)

    flags: tuple[str, ...] = ()
    if bath.eta == 0.0:
        flags = ("bath disabled",)
    return ValidatedConfig(rotor=rotor, bath=bath, numerics=num,
                           kicks=kicks, seed=seed, flags=flags)


# ---------------------------------------------------------------------------
# Configuration file handling (flat TOML-style "key = value" text)
# ---------------------------------------------------------------------------

_ROTOR_KEYS = {"K", "hbar"}
_BATH_KEYS = {"eta", "omega_c", "beta", "phi_prime"}
_NUM_KEYS = {"l_max", "nq", "np_grid", "p_extent", "band_tol", "eig_floor",
             "product_tol"}
_RUN_KEYS = {"kicks", "seed"}
KNOWN_KEYS = _ROTOR_KEYS | _BATH_KEYS | _NUM_KEYS | _RUN_KEYS

_INT_KEYS = {"l_max", "nq", "np_grid", "kicks", "seed"}


def _parse_value(key: str, raw: str):
    raw = raw.strip().strip('"').strip("'")
    try:
        if key in _INT_KEYS:
            return int(raw)
        return float(raw)
    except ValueError:
        raise ConfigError([f"could not parse value for '{key}': {raw!r}"])


def load_config_file(path) -> dict:
    """Parse a flat key = value config file into a plain dict.

    Blank lines and '#' comments are ignored; every key is optional.
    Unknown keys are rejected so typos do not silently fall back to
    defaults.
    """
    values: dict = {}
    bad: list[str] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                bad.append(f"line {lineno}: expected 'key = value', got {line!r}")
                continue
            key, raw = (part.strip() for part in line.split("=", 1))
            if key not in KNOWN_KEYS:
                bad.append(f"line {lineno}: unknown key '{key}'")
                continue
            values[key] = _parse_value(key, raw)
    if bad:
        raise ConfigError(bad)
    return values


def config_from_mapping(values: Mapping | None = None, **overrides) -> ValidatedConfig:
    """Build a ValidatedConfig from a flat mapping plus keyword overrides.

    Overrides (typically CLI flags) win over file values, which win over
    the defaults.  omega_c, when not given, follows hbar as 5/hbar.
    """
    merged = dict(values or {})
    for key, val in overrides.items():
        if val is not None:
            merged[key] = val
    unknown = set(merged) - KNOWN_KEYS
    if unknown:
        raise ConfigError([f"unknown key '{k}'" for k in sorted(unknown)])

    hbar = merged.get("hbar", DEFAULT_HBAR)
    rotor = RotorParams(K=merged.get("K", DEFAULT_K), hbar=hbar)
    omega_c = merged.get("omega_c")
    if omega_c is None:
        omega_c = 5.0 / hbar if hbar > 0 else 1.0
    bath = BathParams(eta=merged.get("eta", DEFAULT_ETA), omega_c=omega_c,
                      beta=merged.get("beta", DEFAULT_BETA),
                      phi_prime=merged.get("phi_prime", DEFAULT_PHI_PRIME))
    num = NumericsParams(
        l_max=merged.get("l_max"),
        nq=merged.get("nq", NumericsParams.nq),
        np_grid=merged.get("np_grid", NumericsParams.np_grid),
        p_extent=merged.get("p_extent"),
        band_tol=merged.get("band_tol", NumericsParams.band_tol),
        eig_floor=merged.get("eig_floor", NumericsParams.eig_floor),
        product_tol=merged.get("product_tol", NumericsParams.product_tol),
    )
    return validate(rotor, bath, num, kicks=merged.get("kicks", DEFAULT_KICKS),
                    seed=merged.get("seed", 0))


def config_to_mapping(cfg: ValidatedConfig) -> dict:
    """Flat dict snapshot of a config (inverse of config_from_mapping)."""
    return {
        "K": cfg.rotor.K, "hbar": cfg.rotor.hbar,
        "eta": cfg.bath.eta, "omega_c": cfg.bath.omega_c,
        "beta": cfg.bath.beta, "phi_prime": cfg.bath.phi_prime,
        "l_max": cfg.numerics.l_max, "nq": cfg.numerics.nq,
        "np_grid": cfg.numerics.np_grid, "p_extent": cfg.numerics.p_extent,
        "band_tol": cfg.numerics.band_tol, "eig_floor": cfg.numerics.eig_floor,
        "product_tol": cfg.numerics.product_tol,
        "kicks": cfg.kicks, "seed": cfg.seed,
    }


def with_updates(cfg: ValidatedConfig, **updates) -> ValidatedConfig:
    """Return a revalidated copy of cfg with selected flat keys replaced."""
    mapping = config_to_mapping(cfg)
    mapping = {k: v for k, v in mapping.items() if v is not None}
    mapping.update(updates)
    return config_from_mapping(mapping)
