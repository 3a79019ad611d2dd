"""Parameterized grasp-type models.

A model is a set of finger contact vectors (closing travel with a scored
positive segment and a penalized overshoot segment), an optional palm
vector, constraint blocks guaranteeing a straight collision-free approach,
and an approach axis. Contacts are expressed in the gripper frame {g}:
closing along x, approach along +z, palm plane at z = PALM_Z.

The built-in power model is a declared stand-in: four pads enclosing the
grasped volume at ±30° either side of the closing axis, pinned by a shipped
golden model file.
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources

import numpy as np

from .errors import ModelFormatError

# fingers open at radius 0.075 so the 0.045 m positive travel bottoms out
# at radius 0.03: the smallest graspable object is 0.06 m in diameter, and
# the 0.12 m wrist width caps the largest
OPEN_RADIUS = 0.075
POSITIVE_TRAVEL = 0.045
CONSTRAINT_TRAVEL = 0.015
# the whole model, wrist corners included, must stay inside a 0.15 m ball
# so the default 0.30 m gripper grid holds it at every swept rotation;
# fingertips 0.03 m ahead of the grid center and a 0.06 m finger standoff
# keep the deepest wrist corner at 0.1463 m while letting the palm clear
# the largest graspable object when the pads close on its full diameter
FINGERTIP_Z = 0.03
PALM_Z = FINGERTIP_Z - 0.06
WRIST_WIDTH = 0.12
WRIST_THICKNESS = 0.06
WRIST_LENGTH = 0.10

BUILTIN_NAMES = ("lateral", "tripodal", "power")


def _unit(v) -> np.ndarray:
    v = np.asarray(v, dtype=float).reshape(3)
    length = float(np.linalg.norm(v))
    if abs(length - 1.0) > 1e-6:
        raise ValueError(f"expected unit vector, |v| = {length:g}")
    return v / length


@dataclass(frozen=True, eq=False)
class ContactVector:
    """A finger pad's closing travel.

    Points along the positive segment (origin moving with `direction`)
    score object overlap; the negative segment extends behind the origin
    and penalizes overlap, keeping the pad itself out of the object.
    """

    origin: np.ndarray
    direction: np.ndarray
    positive_length: float
    negative_length: float
    contact_normal: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "origin", np.asarray(self.origin, dtype=float).reshape(3))
        object.__setattr__(self, "direction", _unit(self.direction))
        object.__setattr__(self, "contact_normal", _unit(self.contact_normal))
        if self.positive_length <= 0.0:
            raise ValueError("positive_length must be > 0")
        if self.negative_length < 0.0:
            raise ValueError("negative_length must be >= 0")

    def positive_samples(self, res: float) -> np.ndarray:
        """Sample the positive segment at step res/2, phased to half-step
        midpoints so segment endpoints never sit on cell boundaries."""
        t = np.arange(res / 4.0, self.positive_length, res / 2.0)
        return self.origin + t[:, None] * self.direction

    def negative_samples(self, res: float) -> np.ndarray:
        t = np.arange(res / 4.0, self.negative_length, res / 2.0)
        return self.origin - t[:, None] * self.direction


@dataclass(frozen=True, eq=False)
class ConstraintBlock:
    """Axis-aligned box in {g} rasterized as constraint cells."""

    center: np.ndarray
    half_extents: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float).reshape(3))
        object.__setattr__(
            self, "half_extents", np.asarray(self.half_extents, dtype=float).reshape(3)
        )
        if np.any(self.half_extents <= 0.0):
            raise ValueError("half_extents must be positive")


@dataclass(frozen=True, eq=False)
class GraspTypeModel:
    """Named grasp type; finger_contacts are the N counted contacts."""

    name: str
    finger_contacts: tuple
    palm_vector: ContactVector | None
    constraint_blocks: tuple
    approach_axis: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "finger_contacts", tuple(self.finger_contacts))
        object.__setattr__(self, "constraint_blocks", tuple(self.constraint_blocks))
        object.__setattr__(self, "approach_axis", _unit(self.approach_axis))
        if not self.finger_contacts:
            raise ValueError("model needs at least one finger contact")

    @property
    def n_contacts(self) -> int:
        return len(self.finger_contacts)

    @property
    def contact_normals(self) -> np.ndarray:
        return np.array([c.contact_normal for c in self.finger_contacts])

    def all_contacts(self) -> tuple:
        """Counted contacts plus the uncounted palm vector, if any."""
        if self.palm_vector is None:
            return self.finger_contacts
        return self.finger_contacts + (self.palm_vector,)


# ---------------------------------------------------------------------------
# Built-in models


def _pinch_contact(azimuth: float, radius: float, positive: float, negative: float) -> ContactVector:
    outward = np.array([np.cos(azimuth), np.sin(azimuth), 0.0])
    return ContactVector(
        origin=radius * outward + [0.0, 0.0, FINGERTIP_Z],
        direction=-outward,
        positive_length=positive,
        negative_length=negative,
        contact_normal=-outward,
    )


def _palm(positive: float, negative: float) -> ContactVector:
    return ContactVector(
        origin=(0.0, 0.0, PALM_Z),
        direction=(0.0, 0.0, 1.0),
        positive_length=positive,
        negative_length=negative,
        contact_normal=(0.0, 0.0, 1.0),
    )


def _wrist_block() -> ConstraintBlock:
    # swept volume of the palm body over the straight approach segment
    return ConstraintBlock(
        center=(0.0, 0.0, PALM_Z - WRIST_LENGTH / 2.0),
        half_extents=(WRIST_WIDTH / 2.0, WRIST_THICKNESS / 2.0, WRIST_LENGTH / 2.0),
    )


def _concentric_model(
    name: str,
    azimuths,
    radius: float,
    positive: float,
    negative: float,
    with_palm: bool,
) -> GraspTypeModel:
    contacts = tuple(_pinch_contact(a, radius, positive, negative) for a in azimuths)
    return GraspTypeModel(
        name=name,
        finger_contacts=contacts,
        palm_vector=_palm(positive, negative) if with_palm else None,
        constraint_blocks=(_wrist_block(),),
        approach_axis=(0.0, 0.0, 1.0),
    )


def lateral_model(
    open_radius: float = OPEN_RADIUS,
    positive: float = POSITIVE_TRAVEL,
    negative: float = CONSTRAINT_TRAVEL,
) -> GraspTypeModel:
    """Two opposing pads pinching along the x axis."""
    return _concentric_model(
        "lateral", (0.0, np.pi), open_radius, positive, negative, with_palm=True
    )


def tripodal_model(
    azimuths=(0.0, 3 * np.pi / 4, 3 * np.pi / 2),
    open_radius: float = OPEN_RADIUS,
    positive: float = POSITIVE_TRAVEL,
    negative: float = CONSTRAINT_TRAVEL,
) -> GraspTypeModel:
    """Three fingertips closing on the grasp axis, gaps 135°/135°/90°
    (two rotatable fingers opposing a fixed thumb)."""
    return _concentric_model(
        "tripodal", azimuths, open_radius, positive, negative, with_palm=True
    )


def power_model(
    pad_azimuths=(np.pi / 6, 5 * np.pi / 6, 7 * np.pi / 6, 11 * np.pi / 6),
    open_radius: float = OPEN_RADIUS,
    positive: float = POSITIVE_TRAVEL,
    negative: float = CONSTRAINT_TRAVEL,
) -> GraspTypeModel:
    """Four pads enclosing the grasped volume, two per finger side, canted
    30° either side of the closing axis. No palm vector: most of the object
    must be observed before an enclosing grasp is proposed."""
    return _concentric_model(
        "power", pad_azimuths, open_radius, positive, negative, with_palm=False
    )


_BUILDERS = {
    "lateral": lateral_model,
    "tripodal": tripodal_model,
    "power": power_model,
}


def builtin_model(name: str) -> GraspTypeModel:
    try:
        return _BUILDERS[name]()
    except KeyError:
        raise ModelFormatError(
            f"unknown built-in model {name!r}; choose from {BUILTIN_NAMES}"
        ) from None


# ---------------------------------------------------------------------------
# Declarative text format


def _fmt_vec(v) -> str:
    return " ".join(repr(float(x)) for x in v)


def _contact_line(kind: str, c: ContactVector) -> str:
    return (
        f"{kind} {_fmt_vec(c.origin)} {_fmt_vec(c.direction)}"
        f" {c.positive_length!r} {c.negative_length!r} {_fmt_vec(c.contact_normal)}"
    )


def save_model(model: GraspTypeModel) -> str:
    """Serialize to the line-based text format (full float precision)."""
    lines = [
        "# grasp type model: contact ox oy oz dx dy dz pos neg nx ny nz",
        f"name {model.name}",
        f"approach {_fmt_vec(model.approach_axis)}",
    ]
    lines += [_contact_line("contact", c) for c in model.finger_contacts]
    if model.palm_vector is not None:
        lines.append(_contact_line("palm", model.palm_vector))
    lines += [
        f"block {_fmt_vec(b.center)} {_fmt_vec(b.half_extents)}"
        for b in model.constraint_blocks
    ]
    return "\n".join(lines) + "\n"


def _parse_contact(tokens: list[str], line_no: int) -> ContactVector:
    if len(tokens) != 11:
        raise ModelFormatError(f"line {line_no}: contact needs 11 values")
    v = [float(t) for t in tokens]
    return ContactVector(v[0:3], v[3:6], v[6], v[7], v[8:11])


def parse_model(text: str) -> GraspTypeModel:
    name = None
    approach = None
    contacts: list[ContactVector] = []
    palm = None
    blocks: list[ConstraintBlock] = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, *tokens = line.split()
        try:
            if key == "name":
                name = " ".join(tokens)
            elif key == "approach":
                approach = [float(t) for t in tokens]
            elif key == "contact":
                contacts.append(_parse_contact(tokens, line_no))
            elif key == "palm":
                palm = _parse_contact(tokens, line_no)
            elif key == "block":
                if len(tokens) != 6:
                    raise ModelFormatError(f"line {line_no}: block needs 6 values")
                v = [float(t) for t in tokens]
                blocks.append(ConstraintBlock(v[0:3], v[3:6]))
            else:
                raise ModelFormatError(f"line {line_no}: unknown key {key!r}")
        except (ValueError, IndexError) as exc:
            raise ModelFormatError(f"line {line_no}: {exc}") from exc
    if name is None or approach is None or not contacts:
        raise ModelFormatError("model needs name, approach, and >= 1 contact")
    return GraspTypeModel(name, tuple(contacts), palm, tuple(blocks), approach)


def load_model(path) -> GraspTypeModel:
    with open(path, "r", encoding="ascii") as fh:
        return parse_model(fh.read())


def load_shipped_model(name: str) -> GraspTypeModel:
    """Load one of the shipped default model files."""
    if name not in BUILTIN_NAMES:
        raise ModelFormatError(f"no shipped model named {name!r}")
    text = resources.files("graspmatch").joinpath(f"data/{name}.model").read_text()
    return parse_model(text)
