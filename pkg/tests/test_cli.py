import numpy as np
import pytest

from crowdwatch.cli import main
from crowdwatch.framesource import write_pgm
from crowdwatch.pipeline import read_scores_csv
from crowdwatch.synthgen import SceneScript, _lane_agents, render


@pytest.fixture(scope="module")
def scene(tmp_path_factory):
    out = tmp_path_factory.mktemp("cli_scene")
    script = SceneScript(160, 120, 90, _lane_agents(160, 120, 5, panic=True),
                         (60, 89), seed=9, name="cliscene")
    return render(script, out)


class TestSynthCommand:
    def test_walk_render_and_labels(self, tmp_path, capsys):
        rc = main(["synth", "walk", "--seed", "5", "--out-dir", str(tmp_path / "w")])
        assert rc == 0
        manifest = (tmp_path / "w" / "scene.manifest").read_text()
        assert "label 0 299 normal" in manifest
        assert "abnormal" not in manifest
        assert len(list((tmp_path / "w").glob("*.pgm"))) == 300

    def test_same_seed_identical_files(self, tmp_path):
        main(["synth", "counterflow", "--seed", "2", "--out-dir", str(tmp_path / "a")])
        main(["synth", "counterflow", "--seed", "2", "--out-dir", str(tmp_path / "b")])
        for pa in sorted((tmp_path / "a").iterdir()):
            pb = tmp_path / "b" / pa.name
            assert pa.read_bytes() == pb.read_bytes()

    def test_unknown_preset_exit_code(self, tmp_path, capsys):
        rc = main(["synth", "stampede", "--out-dir", str(tmp_path / "x")])
        assert rc == 2
        assert "unknown preset" in capsys.readouterr().err


class TestDetectCommand:
    def test_scores_one_row_per_frame(self, scene, tmp_path, capsys):
        out = tmp_path / "scores.csv"
        rc = main(["detect", str(scene), "--out", str(out), "--set", "training_cap=40"])
        assert rc == 0
        scores, labels = read_scores_csv(out)
        assert len(scores) == 90
        assert set(np.unique(labels)) == {0, 1}
        assert "90 frames" in capsys.readouterr().out

    def test_rerun_identical_bytes(self, scene, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        main(["detect", str(scene), "--out", str(a), "--set", "training_cap=40"])
        main(["detect", str(scene), "--out", str(b), "--set", "training_cap=40"])
        assert a.read_bytes() == b.read_bytes()

    def test_missing_manifest_exit_code(self, tmp_path, capsys):
        rc = main(["detect", str(tmp_path / "none.manifest"), "--out", str(tmp_path / "s.csv")])
        assert rc == 3

    def test_bad_config_key_exit_code(self, scene, tmp_path, capsys):
        rc = main(["detect", str(scene), "--out", str(tmp_path / "s.csv"),
                   "--set", "bogus_key=1"])
        assert rc == 2
        assert "bogus_key" in capsys.readouterr().err

    def test_config_file_and_dump_round_trip(self, scene, tmp_path):
        cfg_path = tmp_path / "cfg.txt"
        cfg_path.write_text("training_cap = 40\nsmoothing = false\n")
        dump_path = tmp_path / "effective.txt"
        a = tmp_path / "a.csv"
        rc = main(["detect", str(scene), "--config", str(cfg_path), "--out", str(a),
                   "--dump-config", str(dump_path)])
        assert rc == 0
        b = tmp_path / "b.csv"
        rc = main(["detect", str(scene), "--config", str(dump_path), "--out", str(b)])
        assert rc == 0
        assert a.read_bytes() == b.read_bytes()

    def test_corrupt_frame_exit_code(self, tmp_path, capsys):
        seq = tmp_path / "seq"
        seq.mkdir()
        write_pgm(seq / "f0.pgm", np.zeros((64, 64), np.uint8))
        (seq / "f1.pgm").write_bytes(b"P5\n64 64\n255\n" + bytes(10))
        manifest = tmp_path / "m.txt"
        manifest.write_text("frames seq/f*.pgm\nlabel 0 1 normal\n")
        rc = main(["detect", str(manifest), "--out", str(tmp_path / "s.csv")])
        assert rc == 4


class TestEvalCommand:
    def test_roc_outputs_and_auc_print(self, scene, tmp_path, capsys):
        scores = tmp_path / "s.csv"
        main(["detect", str(scene), "--out", str(scores), "--set", "training_cap=40"])
        capsys.readouterr()
        rc = main(["eval", f"mini={scores}", "--out-csv", str(tmp_path / "roc.csv"),
                   "--out-svg", str(tmp_path / "roc.svg")])
        assert rc == 0
        out = capsys.readouterr().out
        assert "AUC mini:" in out
        assert (tmp_path / "roc.csv").read_text().startswith("name,threshold,fpr,tpr")
        assert "<svg" in (tmp_path / "roc.svg").read_text()

    def test_perfect_separation_prints_auc_one(self, tmp_path, capsys):
        scores = tmp_path / "s.csv"
        lines = ["frame,score,label"]
        for i in range(10):
            lines.append(f"{i},{1.0 if i >= 5 else 0.0},{1 if i >= 5 else 0}")
        scores.write_text("\n".join(lines) + "\n")
        rc = main(["eval", str(scores), "--out-csv", str(tmp_path / "r.csv"),
                   "--out-svg", str(tmp_path / "r.svg")])
        assert rc == 0
        assert "AUC s: 1.0000" in capsys.readouterr().out

    def test_single_class_exit_code(self, tmp_path, capsys):
        scores = tmp_path / "s.csv"
        scores.write_text("frame,score,label\n0,0.1,0\n1,0.2,0\n")
        rc = main(["eval", str(scores), "--out-csv", str(tmp_path / "r.csv"),
                   "--out-svg", str(tmp_path / "r.svg")])
        assert rc == 5

    def test_malformed_row_exit_code_names_line(self, tmp_path, capsys):
        scores = tmp_path / "s.csv"
        scores.write_text("frame,score,label\n0,0.1,0\nbroken\n")
        rc = main(["eval", str(scores), "--out-csv", str(tmp_path / "r.csv"),
                   "--out-svg", str(tmp_path / "r.svg")])
        assert rc == 4
        assert "line 3" in capsys.readouterr().err

    def test_unlabeled_rows_excluded(self, tmp_path):
        scores = tmp_path / "s.csv"
        rows = ["frame,score,label", "0,0.0,0", "1,1.0,1", "2,9.9,-1", "3,0.1,0"]
        scores.write_text("\n".join(rows) + "\n")
        rc = main(["eval", str(scores), "--out-csv", str(tmp_path / "r.csv"),
                   "--out-svg", str(tmp_path / "r.svg")])
        assert rc == 0
        body = (tmp_path / "r.csv").read_text()
        assert "9.9" not in body


class TestFeaturesCommand:
    def test_dumps_written(self, scene, tmp_path, capsys):
        out_dir = tmp_path / "dumps"
        rc = main(["features", str(scene), "--out-dir", str(out_dir),
                   "--set", "training_cap=40", "--masks"])
        assert rc == 0
        vectors = (out_dir / "vectors.csv").read_text().splitlines()
        assert vectors[0] == "frame,x,y,magnitude,direction"
        assert len(vectors) > 100
        descriptors = (out_dir / "descriptors.csv").read_text().splitlines()
        assert descriptors[0].startswith("frame,patch_row,patch_col,b0")
        texture = (out_dir / "texture.csv").read_text().splitlines()
        assert texture[0] == "frame,patch_row,patch_col,contrast,correlation,energy,homogeneity"
        masks = list((out_dir / "masks").glob("mask_*.pgm"))
        assert len(masks) == 90
