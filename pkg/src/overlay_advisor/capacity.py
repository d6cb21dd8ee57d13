"""Device capacity profiles and the fit / no-fit gate.

Only logic cells, flip-flops and distributed memory are gated.  Fan-out and
wire counts have no device-level capacity; the overlay model flags bus
overflow separately.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from .errors import ParseError, ValidationError
from .overlay import ResourceEstimate, parse_key_values

# gate order doubles as the tie-break order for the limiting resource
RESOURCES = (
    ("logic_cells", "luts"),
    ("flip_flops", "ffs"),
    ("dist_mem_bits", "mem_bits"),
)


@dataclass(frozen=True)
class DeviceProfile:
    name: str
    logic_cells: int
    flip_flops: int
    dist_mem_bits: int

    def __post_init__(self) -> None:
        for cap, _ in RESOURCES:
            if getattr(self, cap) <= 0:
                raise ValidationError(f"{self.name}: {cap} must be > 0")


BUILTIN_PROFILES = {
    # Zynq UltraScale+ ZCU104: 504K LCs, 461K FFs, 6.2 Mb distributed RAM
    # (megabits read as 10**6 bits)
    "zcu104": DeviceProfile("zcu104", logic_cells=504_000, flip_flops=461_000,
                            dist_mem_bits=6_200_000),
}


@dataclass(frozen=True)
class ResourceUsage:
    required: int
    available: int
    utilization_percent: float


@dataclass(frozen=True)
class Verdict:
    fits: bool
    usage: dict[str, ResourceUsage]
    limiting_resource: str
    ceiling_percent: float = 100.0

    def to_dict(self) -> dict:
        return {
            "fits": self.fits,
            "ceiling_percent": self.ceiling_percent,
            "limiting_resource": self.limiting_resource,
            "usage": {
                k: {"required": u.required, "available": u.available,
                    "utilization_percent": u.utilization_percent}
                for k, u in self.usage.items()
            },
        }


def builtin_profile(name: str) -> DeviceProfile:
    try:
        return BUILTIN_PROFILES[name.lower()]
    except KeyError:
        known = ", ".join(sorted(BUILTIN_PROFILES))
        raise ValidationError(f"unknown device profile {name!r}; known profiles: {known}") from None


def parse_profile(text: str) -> DeviceProfile:
    kv = parse_key_values(text)
    expected = {"name", "logic_cells", "flip_flops", "dist_mem_bits"}
    missing = sorted(expected - set(kv))
    if missing:
        raise ParseError(f"profile is missing: {', '.join(missing)}")
    extra = sorted(set(kv) - expected)
    if extra:
        raise ParseError(f"unknown profile key(s): {', '.join(extra)}")
    caps = {}
    for key in ("logic_cells", "flip_flops", "dist_mem_bits"):
        try:
            caps[key] = int(kv[key].replace("_", ""))
        except ValueError:
            raise ParseError(f"{key}: not an integer: {kv[key]!r}") from None
    return DeviceProfile(name=kv["name"], **caps)


def load_profile(name_or_path: str) -> DeviceProfile:
    """A builtin profile name, or a path to a key-value profile file."""
    if name_or_path.lower() in BUILTIN_PROFILES:
        return builtin_profile(name_or_path)
    path = Path(name_or_path)
    if path.is_file():
        return parse_profile(path.read_text(encoding="utf-8"))
    return builtin_profile(name_or_path)


def gate(est: ResourceEstimate, profile: DeviceProfile, ceiling_percent: float = 100.0) -> Verdict:
    ceiling = Fraction(repr(float(ceiling_percent)))
    if not 0 < ceiling <= 100:
        raise ValidationError(f"ceiling_percent must lie in (0, 100], got {ceiling_percent}")
    usage = {}
    ratios = []
    fits = True
    for cap, field in RESOURCES:
        required = getattr(est, field)
        available = getattr(profile, cap)
        util = Fraction(100 * required, available)
        fits &= util <= ceiling
        ratios.append(util)
        usage[cap] = ResourceUsage(required, available, float(util))
    # max() keeps the first of equal maxima, so ties follow RESOURCES order
    limiting = max(range(len(RESOURCES)), key=lambda i: ratios[i])
    return Verdict(fits=fits, usage=usage, limiting_resource=RESOURCES[limiting][0],
                   ceiling_percent=float(ceiling_percent))
