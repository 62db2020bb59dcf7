"""Run configuration: one JSON document, CLI flags override individual keys."""
import hashlib
import json
from dataclasses import asdict, dataclass, field, fields
from importlib import resources

from ..errors import ConfigValidationError

SCHEMES = ("polynomial", "piecewise")
TIERS = ("4L", "4L-detuned", "6L", "grid")


def default_values():
    return json.loads(resources.files(__package__).joinpath("defaults.json").read_text())


@dataclass
class RunConfig:
    schemes: list
    T: float
    T_values: list
    t_S_fraction: float
    V0: float
    V0_values: list
    detuning: float
    detuning_values: list
    tiers: list
    grid: int
    multi_well_grid: int
    wells: int
    dt: float
    n_samples: int
    C1: float
    C2: float
    out: str
    workers: int = 1
    render: bool = True

    def __post_init__(self):
        self.validate()

    def validate(self):
        for name in ("schemes", "T_values", "V0_values", "detuning_values", "tiers"):
            if not getattr(self, name):
                raise ConfigValidationError(f"{name} must not be empty")
        bad = [s for s in self.schemes if s not in SCHEMES]
        if bad:
            raise ConfigValidationError(f"unknown scheme(s) {bad}; choose from {SCHEMES}")
        bad = [t for t in self.tiers if t not in TIERS]
        if bad:
            raise ConfigValidationError(f"unknown tier(s) {bad}; choose from {TIERS}")
        if not 0 < self.t_S_fraction < 1:
            raise ConfigValidationError("t_S_fraction must lie in (0, 1)")
        for name in ("T", "V0", "dt", "grid", "multi_well_grid", "n_samples", "workers"):
            if getattr(self, name) <= 0:
                raise ConfigValidationError(f"{name} must be positive")
        if any(v <= 0 for v in list(self.T_values) + list(self.V0_values)):
            raise ConfigValidationError("sweep values of T and V0 must be positive")
        if self.wells % 2 == 0:
            raise ConfigValidationError("wells must be odd")

    def as_dict(self):
        return asdict(self)

    def physics_dict(self):
        """Everything that influences numerical results (not paths or worker counts)."""
        d = self.as_dict()
        for key in ("out", "workers", "render"):
            d.pop(key)
        return d

    def hash(self):
        blob = json.dumps(self.physics_dict(), sort_keys=True, separators=(",", ":")).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def load_config(path=None, **overrides):
    """Defaults, then the JSON file at ``path``, then non-None ``overrides``."""
    data = default_values()
    if path is not None:
        with open(path) as fh:
            user = json.load(fh)
        unknown = set(user) - {f.name for f in fields(RunConfig)}
        if unknown:
            raise ConfigValidationError(f"unknown config keys: {sorted(unknown)}")
        data.update(user)
    data.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return RunConfig(**data)
    except TypeError as exc:
        raise ConfigValidationError(str(exc)) from exc
