"""Deterministic synthetic crowd scenes with ground-truth labels.

Textured discs ("agents") move over a static textured background and bounce
off the frame borders.  During the anomaly span agents switch to their panic
velocity (the dispersal preset sends them radially outward at 4x speed).
Rendering is byte-reproducible for a given (script, seed).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .errors import ParameterError
from .framesource import write_pgm
from .imageops import smooth5

SCENE_WIDTH = 320
SCENE_HEIGHT = 240
SCENE_FRAMES = 300
DISPERSAL_SPAN = (200, 299)

AGENT_NOISE = 10       # per-pixel texture amplitude, intensity levels
WALK_SPEED = 1.0       # px/frame
PANIC_SPEED = 4.0      # px/frame during dispersal
MANIFEST_NAME = "scene.manifest"


@dataclass(frozen=True)
class AgentSpec:
    x: float
    y: float
    vx: float
    vy: float
    panic_vx: float
    panic_vy: float
    radius: int
    intensity: int


@dataclass(frozen=True)
class SceneScript:
    width: int
    height: int
    n_frames: int
    agents: tuple[AgentSpec, ...]
    anomaly_span: tuple[int, int] | None
    seed: int
    name: str = "scene"

    def __post_init__(self):
        if self.width < 16 or self.height < 16:
            raise ParameterError("scene must be at least 16x16")
        if self.n_frames < 1:
            raise ParameterError("scene needs at least one frame")
        if self.anomaly_span is not None:
            a0, a1 = self.anomaly_span
            if not (0 <= a0 <= a1 < self.n_frames):
                raise ParameterError(f"anomaly span {self.anomaly_span} outside 0..{self.n_frames - 1}")


def _radial_panic(x: float, y: float, cx: float, cy: float, speed: float) -> tuple[float, float]:
    dx, dy = x - cx, y - cy
    norm = math.hypot(dx, dy)
    if norm == 0.0:
        return speed, 0.0
    return speed * dx / norm, speed * dy / norm


def _lane_agents(width: int, height: int, n_lanes: int, panic: bool) -> tuple[AgentSpec, ...]:
    # horizontal lanes, alternating direction; lane spacing keeps the discs'
    # corner footprints in disjoint patch rows so normal motion stays coherent
    spacing = height // n_lanes
    agents = []
    for k in range(n_lanes):
        y = spacing // 2 + spacing * k
        radius = 8 + (k % 2)
        intensity = (190, 205, 220)[k % 3]
        direction = 1.0 if k % 2 == 0 else -1.0
        x = 30.0 + (37 * k) % (width - 60)
        vx, vy = direction * WALK_SPEED, 0.0
        if panic:
            pvx, pvy = _radial_panic(x, y, width / 2.0, height / 2.0, PANIC_SPEED)
        else:
            pvx, pvy = vx, vy
        agents.append(AgentSpec(x, float(y), vx, vy, pvx, pvy, radius, intensity))
    return tuple(agents)


def preset(name: str) -> SceneScript:
    """Fixed 320x240, 300-frame scenes: walk, dispersal (anomaly 200..299), counterflow."""
    if name == "walk":
        return SceneScript(
            SCENE_WIDTH, SCENE_HEIGHT, SCENE_FRAMES,
            _lane_agents(SCENE_WIDTH, SCENE_HEIGHT, 10, panic=False),
            None, seed=7, name="walk",
        )
    if name == "dispersal":
        return SceneScript(
            SCENE_WIDTH, SCENE_HEIGHT, SCENE_FRAMES,
            _lane_agents(SCENE_WIDTH, SCENE_HEIGHT, 10, panic=True),
            DISPERSAL_SPAN, seed=7, name="dispersal",
        )
    if name == "counterflow":
        lanes = _lane_agents(SCENE_WIDTH, SCENE_HEIGHT, 10, panic=False)
        agents = tuple(
            replace(a, vx=WALK_SPEED if a.y < SCENE_HEIGHT / 2 else -WALK_SPEED,
                    panic_vx=WALK_SPEED if a.y < SCENE_HEIGHT / 2 else -WALK_SPEED)
            for a in lanes
        )
        return SceneScript(
            SCENE_WIDTH, SCENE_HEIGHT, SCENE_FRAMES, agents, None, seed=7, name="counterflow",
        )
    raise ParameterError(f"unknown preset {name!r} (walk, dispersal, counterflow)")


def _textured_background(rng: np.random.Generator, height: int, width: int) -> np.ndarray:
    noise = rng.standard_normal((height, width))
    textured = 120.0 + 40.0 * smooth5(smooth5(noise))
    return np.clip(np.rint(textured), 0, 255).astype(np.uint8)


def _agent_texture(rng: np.random.Generator, agent: AgentSpec) -> tuple[np.ndarray, np.ndarray]:
    d = 2 * agent.radius + 1
    tex = np.clip(
        agent.intensity + rng.integers(-AGENT_NOISE, AGENT_NOISE + 1, size=(d, d)),
        0, 255,
    ).astype(np.uint8)
    yy, xx = np.mgrid[-agent.radius : agent.radius + 1, -agent.radius : agent.radius + 1]
    disc = (xx * xx + yy * yy) <= agent.radius * agent.radius
    return tex, disc


def _paste(canvas: np.ndarray, tex: np.ndarray, disc: np.ndarray, cx: int, cy: int) -> None:
    h, w = canvas.shape
    r = tex.shape[0] // 2
    x0, x1 = max(0, cx - r), min(w, cx + r + 1)
    y0, y1 = max(0, cy - r), min(h, cy + r + 1)
    if x0 >= x1 or y0 >= y1:
        return
    sx0, sy0 = x0 - (cx - r), y0 - (cy - r)
    sub = disc[sy0 : sy0 + (y1 - y0), sx0 : sx0 + (x1 - x0)]
    canvas[y0:y1, x0:x1][sub] = tex[sy0 : sy0 + (y1 - y0), sx0 : sx0 + (x1 - x0)][sub]


def render(script: SceneScript, out_dir) -> Path:
    """Render the scene into out_dir as PGM frames plus a labeled manifest.

    Returns the manifest path.  Identical (script, seed) produce byte-identical
    files.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(script.seed)
    background = _textured_background(rng, script.height, script.width)
    sprites = [_agent_texture(rng, a) for a in script.agents]

    xs = [a.x for a in script.agents]
    ys = [a.y for a in script.agents]
    sx = [1.0] * len(script.agents)
    sy = [1.0] * len(script.agents)

    for f in range(script.n_frames):
        canvas = background.copy()
        for i, agent in enumerate(script.agents):
            tex, disc = sprites[i]
            _paste(canvas, tex, disc, int(round(xs[i])), int(round(ys[i])))
        write_pgm(out / f"frame_{f:06d}.pgm", canvas)

        # advance into frame f+1; its phase decides which velocity applies
        nxt = f + 1
        panic = script.anomaly_span is not None and script.anomaly_span[0] <= nxt <= script.anomaly_span[1]
        for i, agent in enumerate(script.agents):
            vx = agent.panic_vx if panic else agent.vx
            vy = agent.panic_vy if panic else agent.vy
            r = agent.radius
            nx = xs[i] + sx[i] * vx
            if nx - r < 0 or nx + r > script.width - 1:
                sx[i] = -sx[i]
                nx = xs[i] + sx[i] * vx
            ny = ys[i] + sy[i] * vy
            if ny - r < 0 or ny + r > script.height - 1:
                sy[i] = -sy[i]
                ny = ys[i] + sy[i] * vy
            xs[i] = min(max(nx, r), script.width - 1 - r)
            ys[i] = min(max(ny, r), script.height - 1 - r)

    manifest_path = out / MANIFEST_NAME
    lines = [
        f"# synthetic scene '{script.name}' (seed {script.seed})",
        "frames frame_*.pgm",
        "fps 30",
    ]
    for start, end, label in _label_spans(script):
        lines.append(f"label {start} {end} {label}")
    manifest_path.write_text("\n".join(lines) + "\n")
    return manifest_path


def _label_spans(script: SceneScript) -> list[tuple[int, int, str]]:
    last = script.n_frames - 1
    if script.anomaly_span is None:
        return [(0, last, "normal")]
    a0, a1 = script.anomaly_span
    spans = []
    if a0 > 0:
        spans.append((0, a0 - 1, "normal"))
    spans.append((a0, a1, "abnormal"))
    if a1 < last:
        spans.append((a1 + 1, last, "normal"))
    return spans
