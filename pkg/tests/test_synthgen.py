import dataclasses
import hashlib

import numpy as np
import pytest

from crowdwatch import klt
from crowdwatch.errors import ParameterError
from crowdwatch.framesource import open_sequence, to_grayscale_f32
from crowdwatch.synthgen import SceneScript, _lane_agents, preset, render


def scene_digest(directory):
    h = hashlib.sha256()
    for p in sorted(directory.iterdir()):
        if p.is_file():
            h.update(p.name.encode())
            h.update(p.read_bytes())
    return h.hexdigest()


class TestPresets:
    def test_walk_has_no_anomaly(self):
        script = preset("walk")
        assert script.anomaly_span is None
        assert (script.width, script.height, script.n_frames) == (320, 240, 300)
        assert all(abs(a.vx) + abs(a.vy) == 1.0 for a in script.agents)

    def test_dispersal_span_and_speed(self):
        script = preset("dispersal")
        assert script.anomaly_span == (200, 299)
        for a in script.agents:
            assert abs(np.hypot(a.panic_vx, a.panic_vy) - 4.0) < 1e-9

    def test_counterflow_two_opposed_groups(self):
        script = preset("counterflow")
        directions = {1.0 if a.vx > 0 else -1.0 for a in script.agents}
        assert directions == {1.0, -1.0}
        top = [a for a in script.agents if a.y < script.height / 2]
        bottom = [a for a in script.agents if a.y >= script.height / 2]
        assert all(a.vx > 0 for a in top)
        assert all(a.vx < 0 for a in bottom)

    def test_unknown_preset(self):
        with pytest.raises(ParameterError, match="unknown preset"):
            preset("riot")

    def test_agent_radii_in_documented_range(self):
        for name in ("walk", "dispersal", "counterflow"):
            for a in preset(name).agents:
                assert 8 <= a.radius <= 12


class TestRender:
    def small_script(self, seed=3, agents=4, n_frames=40, anomaly=None):
        return SceneScript(160, 120, n_frames, _lane_agents(160, 120, agents, panic=True),
                           anomaly, seed=seed, name="mini")

    def test_deterministic_bytes(self, tmp_path):
        script = self.small_script()
        render(script, tmp_path / "a")
        render(script, tmp_path / "b")
        assert scene_digest(tmp_path / "a") == scene_digest(tmp_path / "b")

    def test_seed_changes_output(self, tmp_path):
        render(self.small_script(seed=3), tmp_path / "a")
        render(dataclasses.replace(self.small_script(), seed=4), tmp_path / "b")
        assert scene_digest(tmp_path / "a") != scene_digest(tmp_path / "b")

    def test_manifest_labels_match_script(self, tmp_path):
        script = self.small_script(n_frames=60, anomaly=(40, 59))
        manifest = render(script, tmp_path / "s")
        _, track = open_sequence(manifest)
        assert [(s.start, s.end, s.label) for s in track.spans] == [
            (0, 39, "normal"),
            (40, 59, "abnormal"),
        ]

    def test_no_agents_is_static(self, tmp_path):
        script = SceneScript(64, 64, 10, (), None, seed=1, name="empty")
        manifest = render(script, tmp_path / "s")
        frames, _ = open_sequence(manifest)
        pixels = [f.pixels for f in frames]
        assert len(pixels) == 10
        for p in pixels[1:]:
            assert np.array_equal(p, pixels[0])

    def test_frame_count_and_geometry(self, tmp_path):
        script = self.small_script(n_frames=25)
        manifest = render(script, tmp_path / "s")
        frames, _ = open_sequence(manifest)
        shapes = {f.pixels.shape for f in frames}
        assert shapes == {(120, 160)}

    def test_anomaly_outside_range_rejected(self):
        with pytest.raises(ParameterError, match="anomaly"):
            self.small_script(n_frames=30, anomaly=(20, 40))


class TestScriptedMotion:
    def measure_flow(self, manifest, first, last):
        """Mean tracked flow magnitude per frame over [first, last].

        Corners are restricted to regions that changed between the frames
        (the moving agents), so the static background does not dilute the
        scripted ground-truth velocity.
        """
        from crowdwatch.imageops import max3_filter

        frames, _ = open_sequence(manifest)
        magnitudes = []
        prev_gray = prev_pyr = None
        for frame in frames:
            gray = to_grayscale_f32(frame).astype(np.float64)
            pyr = klt.build_pyramid(gray, 3)
            if prev_pyr is not None and first <= frame.index <= last:
                moving = np.abs(gray - prev_gray) > 0.02
                for _ in range(4):
                    moving = max3_filter(moving)
                corners = klt.detect_corners(prev_gray, max_corners=150, quality=0.05,
                                             min_distance=4, mask=moving)
                vectors = [v for v in klt.track(prev_pyr, pyr, corners) if v is not None]
                if vectors:
                    magnitudes.append(float(np.mean([v.magnitude for v in vectors])))
            prev_gray, prev_pyr = gray, pyr
            if frame.index > last:
                break
        return magnitudes

    def test_walk_flow_magnitude_matches_script(self, tmp_path):
        # agents move 1 px/frame; tracked flow must agree within 20 percent
        script = SceneScript(160, 120, 30, _lane_agents(160, 120, 5, panic=False),
                             None, seed=11, name="walkmini")
        manifest = render(script, tmp_path / "s")
        magnitudes = self.measure_flow(manifest, 5, 29)
        assert magnitudes
        mean = float(np.mean(magnitudes))
        assert abs(mean - 1.0) <= 0.2

    def test_dispersal_flow_exceeds_walk_flow(self, tmp_path):
        script = SceneScript(160, 120, 60, _lane_agents(160, 120, 5, panic=True),
                             (40, 59), seed=12, name="dispmini")
        manifest = render(script, tmp_path / "s")
        normal = self.measure_flow(manifest, 5, 39)
        panic = self.measure_flow(manifest, 41, 59)
        assert normal and panic
        assert float(np.mean(panic)) >= 3.0 * float(np.mean(normal))
