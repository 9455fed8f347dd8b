"""Deterministic synthetic microscopy scenes with exact box and track ground truth.

Objects are rendered as low-contrast Gaussian blobs on a near-black
background: moving cells as anisotropic ellipses with a faint trailing
smear, distractors as isotropic blobs of matched intensity. Every object is
annotated on every frame, and every track carries analytic VSL/VCL/VAP
computed from its generating equations (adaptive quadrature for arc
lengths), which is what the tracking/motility acceptance checks against.

Rendering is hard-windowed to each object's annotation box; the Gaussian
tails outside are below quantization anyway, so boxes contain the rendered
support by construction.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
from dataclasses import dataclass
from pathlib import Path

import cv2
import numpy as np
from scipy.integrate import quad

from .boxes import Annotation, Box
from .ingest.frames import Frame
from .ingest.voc import write_voc_annotations

BACKGROUND_LEVEL = 6
VAP_WINDOW = 5
QUAD_TOL = 1e-9
BLUR_SIGMA = 12.0

KIN_LINEAR = "linear"
KIN_CURVILINEAR = "curvilinear"
KIN_STATIONARY = "stationary"


@dataclass(frozen=True)
class SceneConfig:
    width: int = 192
    height: int = 192
    fps: float = 25.0
    duration_s: float = 2.0
    n_sperm: int = 8
    n_impurity: int = 3
    speed_range: tuple[float, float] = (1.0, 4.0)   # px/frame
    size_range: tuple[float, float] = (20.0, 200.0)  # object area, px^2
    noise_sigma: float = 2.0
    seed: int = 0
    um_per_px: float = 0.5
    source_id: str = ""

    def __post_init__(self):
        if self.n_sperm < 0 or self.n_impurity < 0:
            raise ValueError("object counts must be >= 0")
        if self.speed_range[0] > self.speed_range[1] or self.size_range[0] > self.size_range[1]:
            raise ValueError("ranges must be (lo, hi) with lo <= hi")
        if self.width <= 0 or self.height <= 0 or self.fps <= 0 or self.duration_s <= 0:
            raise ValueError("width, height, fps, duration must be positive")

    @property
    def n_frames(self) -> int:
        return max(2, round(self.fps * self.duration_s))

    @property
    def name(self) -> str:
        return self.source_id or f"synth{self.seed:04d}"


@dataclass(frozen=True)
class ObjectSpec:
    """Generating equation of one object, in frame-index time units."""

    object_id: int
    class_id: int               # 0 moving cell, 1 impurity
    kinematics: str
    start: tuple[float, float]
    direction: tuple[float, float] = (1.0, 0.0)  # unit drift direction
    speed: float = 0.0          # px/frame
    osc_amplitude: float = 0.0  # transverse sinusoid, px
    osc_period: float = 30.0    # frames
    osc_phase: float = 0.0
    amplitude: float = 90.0     # peak brightness above background
    radii: tuple[float, float] = (3.0, 2.0)  # ellipse support radii (along, across)
    orientation: float = 0.0    # radians, fixed per object

    def position(self, t: float) -> tuple[float, float]:
        """Unfolded center at frame-time t (no boundary reflection)."""
        x, y = self.start
        if self.kinematics == KIN_STATIONARY:
            return x, y
        dx, dy = self.direction
        x += self.speed * t * dx
        y += self.speed * t * dy
        if self.kinematics == KIN_CURVILINEAR:
            s = self.osc_amplitude * math.sin(2.0 * math.pi * t / self.osc_period + self.osc_phase)
            x += -dy * s
            y += dx * s
        return x, y

    def speed_at(self, t: float) -> float:
        if self.kinematics == KIN_STATIONARY:
            return 0.0
        if self.kinematics == KIN_LINEAR:
            return self.speed
        omega = 2.0 * math.pi / self.osc_period
        transverse = self.osc_amplitude * omega * math.cos(omega * t + self.osc_phase)
        return math.hypot(self.speed, transverse)

    def box_half_extents(self) -> tuple[float, float]:
        """Axis-aligned half extents covering head plus trailing smear."""
        ru, rv = self.radii
        cos_t, sin_t = abs(math.cos(self.orientation)), abs(math.sin(self.orientation))
        # head ellipse extent
        hx = math.hypot(ru * cos_t, rv * sin_t)
        hy = math.hypot(ru * sin_t, rv * cos_t)
        if self.class_id == 0:
            # tail: offset 0.8*ru behind the head, radii (1.2 ru, 0.5 rv)
            tx = math.hypot(1.2 * ru * cos_t, 0.5 * rv * sin_t) + 0.8 * ru * cos_t
            ty = math.hypot(1.2 * ru * sin_t, 0.5 * rv * cos_t) + 0.8 * ru * sin_t
            return max(hx, tx), max(hy, ty)
        return hx, hy


@dataclass
class GroundTruthTrack:
    object_id: int
    class_id: int
    kinematics: str
    samples: list[tuple[int, float, float]]      # (frame, cx, cy), folded
    boxes: list[Box]
    vsl: float                                   # analytic, px/s
    vcl: float
    vap: float
    vap_window: int = VAP_WINDOW
    reflected: bool = False


def _fold(value: float, lo: float, hi: float) -> float:
    """Reflect into [lo, hi] (triangle-wave map); identity inside."""
    if hi <= lo:
        return (lo + hi) / 2.0
    span = hi - lo
    v = (value - lo) % (2.0 * span)
    return lo + (v if v <= span else 2.0 * span - v)


def _dirichlet_gain(window: int, period: float) -> float:
    """Amplitude factor of a centered w-point moving average on a sinusoid."""
    omega = 2.0 * math.pi / period
    s = math.sin(omega / 2.0)
    if abs(s) < 1e-12:
        return 1.0
    return math.sin(window * omega / 2.0) / (window * s)


def analytic_velocities(
    spec: ObjectSpec,
    n_frames: int,
    fps: float,
    bounds: tuple[float, float, float, float],
    vap_window: int = VAP_WINDOW,
) -> tuple[float, float, float, bool]:
    """VSL/VCL/VAP in px/s from the generating equations, plus a fold flag.

    VCL integrates |dp/dt| by adaptive quadrature; VAP integrates the
    moving-average-attenuated curve over the span covered by complete
    averaging windows. VSL uses the (folded) endpoint positions.
    """
    t_last = n_frames - 1
    lo_x, hi_x, lo_y, hi_y = bounds
    folded = lambda t: (
        _fold(spec.position(t)[0], lo_x, hi_x),
        _fold(spec.position(t)[1], lo_y, hi_y),
    )
    reflected = any(
        abs(spec.position(t)[i] - folded(t)[i]) > 1e-9
        for t in range(n_frames)
        for i in (0, 1)
    )

    if spec.kinematics == KIN_STATIONARY or spec.speed == 0.0 and spec.osc_amplitude == 0.0:
        return 0.0, 0.0, 0.0, reflected

    (x0, y0), (x1, y1) = folded(0), folded(t_last)
    elapsed = t_last / fps
    vsl = math.hypot(x1 - x0, y1 - y0) / elapsed

    arc, _ = quad(spec.speed_at, 0.0, t_last, epsabs=QUAD_TOL, epsrel=QUAD_TOL, limit=400)
    vcl = arc / elapsed

    if spec.kinematics == KIN_CURVILINEAR:
        gain = _dirichlet_gain(vap_window, spec.osc_period)
        smooth = dataclasses.replace(spec, osc_amplitude=spec.osc_amplitude * gain)
    else:
        smooth = spec
    half = (vap_window - 1) / 2.0
    span = (half, t_last - half)
    if span[1] <= span[0]:
        vap = vcl
    else:
        arc_s, _ = quad(smooth.speed_at, span[0], span[1], epsabs=QUAD_TOL, epsrel=QUAD_TOL, limit=400)
        vap = arc_s / ((span[1] - span[0]) / fps)
    return vsl, vcl, vap, reflected


def _sample_specs(config: SceneConfig, rng: np.random.Generator) -> list[ObjectSpec]:
    specs: list[ObjectSpec] = []
    n_frames = config.n_frames
    for i in range(config.n_sperm + config.n_impurity):
        is_sperm = i < config.n_sperm
        if is_sperm:
            kinematics = KIN_LINEAR if rng.uniform() < 0.5 else KIN_CURVILINEAR
            speed = float(rng.uniform(*config.speed_range))
        else:
            kinematics = KIN_STATIONARY
            speed = 0.0
        area = float(rng.uniform(*config.size_range))
        aspect = float(rng.uniform(1.6, 2.6)) if is_sperm else 1.0
        ru = math.sqrt(area * aspect / math.pi)
        rv = math.sqrt(area / (aspect * math.pi))
        angle = float(rng.uniform(0.0, 2.0 * math.pi))
        direction = (math.cos(angle), math.sin(angle))
        amp = float(rng.uniform(1.5, 4.0)) if kinematics == KIN_CURVILINEAR else 0.0
        period = float(rng.uniform(22.0, 40.0))
        phase = float(rng.uniform(0.0, 2.0 * math.pi))
        spec = ObjectSpec(
            object_id=i,
            class_id=0 if is_sperm else 1,
            kinematics=kinematics,
            start=(0.0, 0.0),
            direction=direction,
            speed=speed,
            osc_amplitude=amp,
            osc_period=period,
            osc_phase=phase,
            amplitude=float(rng.uniform(60.0, 130.0)),
            radii=(ru, rv),
            orientation=angle if is_sperm else 0.0,
        )
        rx, ry = spec.box_half_extents()
        start = _feasible_start(config, spec, rx, ry, n_frames, rng)
        specs.append(dataclasses.replace(spec, start=start))
    return specs


def _feasible_start(config, spec, rx, ry, n_frames, rng) -> tuple[float, float]:
    """Pick a start so the whole unfolded path stays in-frame when possible."""
    t_last = n_frames - 1
    drift_x = spec.speed * t_last * spec.direction[0]
    drift_y = spec.speed * t_last * spec.direction[1]
    osc = spec.osc_amplitude
    lo_x = rx + osc + max(0.0, -drift_x)
    hi_x = config.width - 1 - rx - osc - max(0.0, drift_x)
    lo_y = ry + osc + max(0.0, -drift_y)
    hi_y = config.height - 1 - ry - osc - max(0.0, drift_y)
    if lo_x < hi_x and lo_y < hi_y:
        return float(rng.uniform(lo_x, hi_x)), float(rng.uniform(lo_y, hi_y))
    # path cannot fit; fall back to any in-frame start (track will reflect)
    return (
        float(rng.uniform(rx, config.width - 1 - rx)),
        float(rng.uniform(ry, config.height - 1 - ry)),
    )


def _render_blob(canvas, cx, cy, ru, rv, orientation, amplitude, window) -> None:
    """Add a rotated Gaussian (sigma = r/3) inside the given pixel window."""
    x0, x1, y0, y1 = window
    if x1 < x0 or y1 < y0:
        return
    xs = np.arange(x0, x1 + 1, dtype=np.float64)
    ys = np.arange(y0, y1 + 1, dtype=np.float64)
    dx = xs[None, :] - cx
    dy = ys[:, None] - cy
    cos_t, sin_t = math.cos(orientation), math.sin(orientation)
    u = dx * cos_t + dy * sin_t
    v = -dx * sin_t + dy * cos_t
    su, sv = ru / 3.0, rv / 3.0
    canvas[y0 : y1 + 1, x0 : x1 + 1] += amplitude * np.exp(
        -0.5 * ((u / su) ** 2 + (v / sv) ** 2)
    )


def generate_scene_from_specs(
    config: SceneConfig, specs: list[ObjectSpec]
) -> tuple[list[Frame], list[Annotation], list[GroundTruthTrack]]:
    n_frames = config.n_frames
    w, h = config.width, config.height
    name = config.name

    # per-track folded sample positions and bounds
    tracks: list[GroundTruthTrack] = []
    centers: dict[int, list[tuple[float, float]]] = {}
    extents: dict[int, tuple[float, float]] = {}
    for spec in specs:
        rx, ry = spec.box_half_extents()
        extents[spec.object_id] = (rx, ry)
        bounds = (rx, w - 1 - rx, ry, h - 1 - ry)
        pts = []
        for t in range(n_frames):
            x, y = spec.position(t)
            pts.append((_fold(x, *bounds[:2]), _fold(y, *bounds[2:])))
        centers[spec.object_id] = pts
        vsl, vcl, vap, reflected = analytic_velocities(spec, n_frames, config.fps, bounds)
        tracks.append(
            GroundTruthTrack(
                object_id=spec.object_id,
                class_id=spec.class_id,
                kinematics=spec.kinematics,
                samples=[(t, px, py) for t, (px, py) in enumerate(pts)],
                boxes=[Box(px - rx, py - ry, px + rx, py + ry) for px, py in pts],
                vsl=vsl,
                vcl=vcl,
                vap=vap,
                reflected=reflected,
            )
        )

    noise_seeds = np.random.SeedSequence(config.seed).spawn(n_frames)
    frames: list[Frame] = []
    annotations: list[Annotation] = []
    for t in range(n_frames):
        canvas = np.full((h, w), float(BACKGROUND_LEVEL), dtype=np.float64)
        for spec in specs:
            cx, cy = centers[spec.object_id][t]
            rx, ry = extents[spec.object_id]
            window = (
                max(0, math.ceil(cx - rx)),
                min(w - 1, math.floor(cx + rx)),
                max(0, math.ceil(cy - ry)),
                min(h - 1, math.floor(cy + ry)),
            )
            ru, rv = spec.radii
            _render_blob(canvas, cx, cy, ru, rv, spec.orientation, spec.amplitude, window)
            if spec.class_id == 0:
                # faint trailing smear behind the head
                tail_cx = cx - 0.8 * ru * spec.direction[0]
                tail_cy = cy - 0.8 * ru * spec.direction[1]
                _render_blob(
                    canvas, tail_cx, tail_cy, 1.2 * ru, 0.5 * rv,
                    spec.orientation, 0.3 * spec.amplitude, window,
                )
            annotations.append(
                Annotation(
                    box=Box(cx - rx, cy - ry, cx + rx, cy + ry),
                    class_id=spec.class_id,
                    source_id=name,
                    frame_index=t,
                )
            )
        if config.noise_sigma > 0:
            rng_t = np.random.default_rng(noise_seeds[t])
            canvas += rng_t.normal(0.0, config.noise_sigma, size=canvas.shape)
        mono = np.clip(np.rint(canvas), 0, 255).astype(np.uint8)
        image = np.repeat(mono[:, :, None], 3, axis=2)
        frames.append(Frame(index=t, image=image, source_id=name, timestamp_s=t / config.fps))
    return frames, annotations, tracks


def generate_scene(config: SceneConfig):
    """Sample object population from the seed and render the full scene."""
    rng = np.random.default_rng(np.random.SeedSequence((config.seed, 0x5CE4E)))
    specs = _sample_specs(config, rng)
    return generate_scene_from_specs(config, specs)


def render_degradations(
    frames: list[Frame],
    blur_frames: set[int] | frozenset[int] = frozenset(),
    fringe_amplitude: float = 0.0,
) -> list[Frame]:
    """Blur the listed frames into blur-filter range; overlay fringes on all.

    With an empty index set and zero amplitude this is the identity
    (byte-for-byte).
    """
    if blur_frames and (min(blur_frames) < 0 or max(blur_frames) >= len(frames)):
        raise IndexError("blur frame index out of range")
    out: list[Frame] = []
    fringe = None
    for f in frames:
        image = f.image
        if fringe_amplitude != 0.0:
            if fringe is None:
                h, w = image.shape[:2]
                ys, xs = np.mgrid[0:h, 0:w].astype(np.float64)
                fringe = fringe_amplitude * np.sin(2.0 * np.pi * (0.92 * xs + 0.39 * ys) / 9.0)
            image = np.clip(image.astype(np.float64) + fringe[..., None], 0, 255).astype(np.uint8)
        if f.index in blur_frames:
            image = cv2.GaussianBlur(image, (0, 0), BLUR_SIGMA)
        out.append(Frame(index=f.index, image=image, source_id=f.source_id, timestamp_s=f.timestamp_s))
    return out


def scene_digest(frames: list[Frame]) -> str:
    """SHA-256 over the raster stream; pins bit-identical regeneration."""
    digest = hashlib.sha256()
    for f in frames:
        digest.update(f.image.tobytes())
    return digest.hexdigest()


def tracks_to_json(tracks: list[GroundTruthTrack], fps: float, um_per_px: float) -> dict:
    return {
        "fps": fps,
        "um_per_px": um_per_px,
        "vap_window": VAP_WINDOW,
        "tracks": [
            {
                "object_id": t.object_id,
                "class_id": t.class_id,
                "kinematics": t.kinematics,
                "reflected": t.reflected,
                "vsl": t.vsl,
                "vcl": t.vcl,
                "vap": t.vap,
                "samples": [[f, x, y] for f, x, y in t.samples],
            }
            for t in tracks
        ],
    }


def write_scene(
    out_dir: str | Path,
    config: SceneConfig,
    frames: list[Frame],
    annotations: list[Annotation],
    tracks: list[GroundTruthTrack],
) -> dict:
    """Write frames/*.png, voc/*.xml, tracks.json and scene.json; returns an index."""
    out = Path(out_dir)
    (out / "frames").mkdir(parents=True, exist_ok=True)
    (out / "voc").mkdir(parents=True, exist_ok=True)
    name = config.name
    by_frame: dict[int, list[Annotation]] = {}
    for ann in annotations:
        by_frame.setdefault(ann.frame_index, []).append(ann)
    frame_files = []
    for f in frames:
        png = out / "frames" / f"{name}_{f.index:04d}.png"
        cv2.imwrite(str(png), f.image)
        xml = out / "voc" / f"{name}_{f.index:04d}.xml"
        write_voc_annotations(
            xml, by_frame.get(f.index, []), width=config.width, height=config.height,
            filename=png.name,
        )
        frame_files.append(str(png))
    (out / "tracks.json").write_text(
        json.dumps(tracks_to_json(tracks, config.fps, config.um_per_px), indent=2)
    )
    index = {
        "source_id": name,
        "width": config.width,
        "height": config.height,
        "fps": config.fps,
        "n_frames": len(frames),
        "seed": config.seed,
        "digest": scene_digest(frames),
        "frames": frame_files,
    }
    (out / "scene.json").write_text(json.dumps(index, indent=2))
    return index
