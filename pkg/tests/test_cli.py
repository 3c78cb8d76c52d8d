import json

import numpy as np
import pytest

from tricert import cli, geometry

from helpers import counterexample_cameras, counterexample_obs, scene


def write_scene(tmp_path, cams, obs=None, truth=None, name="scene.txt"):
    p = tmp_path / name
    p.write_text(cli.format_scene(cams, obs, truth))
    return str(p)


def test_triangulate_noiseless(tmp_path, rng, capsys):
    cams, X, obs = scene(rng, 3)
    path = write_scene(tmp_path, cams, obs, X)
    assert cli.main(["triangulate", "--cameras", path, "--json"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["schema"] == 1
    assert out["status"] == "OPTIMAL"
    assert out["recon_error"] <= 1e-5
    for key in ("X", "objective", "dual_bound", "certificate_min_eig"):
        assert key in out


def test_triangulate_separate_obs_file(tmp_path, rng, capsys):
    cams, _, obs = scene(rng, 2)
    path = write_scene(tmp_path, cams)
    obs_path = tmp_path / "obs.txt"
    obs_path.write_text("\n".join(f"{u:.17g} {v:.17g}" for u, v in obs.reshape(-1, 2)) + "\n")
    assert cli.main(["triangulate", "--cameras", path, "--obs", str(obs_path)]) == 0
    assert "OPTIMAL" in capsys.readouterr().out


def test_triangulate_counterexample(tmp_path, capsys):
    path = write_scene(tmp_path, counterexample_cameras(), counterexample_obs(0.1))
    assert cli.main(["triangulate", "--cameras", path, "--json"]) == 2
    out = json.loads(capsys.readouterr().out)
    assert out["status"] == "SUBOPTIMAL"
    assert out["objective"] == pytest.approx(0.01, abs=1e-6)


def test_json_scene(tmp_path, rng, capsys):
    cams, X, obs = scene(rng, 2)
    p = tmp_path / "scene.json"
    p.write_text(json.dumps({"cameras": [P.tolist() for P in cams], "obs": obs.tolist()}))
    assert cli.main(["triangulate", "--cameras", str(p), "--json-scene"]) == 0


def test_truncated_camera(tmp_path, capsys):
    p = tmp_path / "bad.txt"
    p.write_text("2\n1 0 0 0\n0 1 0 0\n0 0 1\n")
    assert cli.main(["triangulate", "--cameras", str(p)]) == 1
    assert "bad.txt:4" in capsys.readouterr().err


def test_parse_errors_carry_line_numbers():
    with pytest.raises(cli.SceneParseError) as exc:
        cli.parse_scene("2\n# comment\n1 0 0 0\n0 1 0 x\n", "s")
    assert exc.value.lineno == 4
    with pytest.raises(cli.SceneParseError):
        cli.parse_scene("1\n1 0 0 0\n0 1 0 0\n0 0 1 0\n", "s")


def test_scene_round_trip(rng):
    cams, X, obs = scene(rng, 3, sigma=0.1)
    s = cli.parse_scene(cli.format_scene(cams, obs, X))
    for P, Q in zip(cams, s.cameras):
        np.testing.assert_array_equal(P, Q)
    np.testing.assert_array_equal(s.obs, obs)
    np.testing.assert_array_equal(s.truth, X)


def test_missing_observations(tmp_path, rng):
    cams, _, _ = scene(rng, 2)
    assert cli.main(["triangulate", "--cameras", write_scene(tmp_path, cams)]) == 1


def test_missing_file_and_bad_flags(tmp_path):
    assert cli.main(["triangulate", "--cameras", str(tmp_path / "nope.txt")]) == 1
    with pytest.raises(SystemExit) as exc:
        cli.main(["triangulate"])
    assert exc.value.code == 1


def test_sigma_grid():
    assert cli.parse_sigma_grid("0:0.05:0.2") == [0.0, 0.05, 0.1, 0.15, 0.2]
    assert cli.parse_sigma_grid("0.1,0.2") == [0.1, 0.2]


def test_synth_records_and_determinism(tmp_path):
    args = ["synth", "--geometry", "sphere", "--cameras", "2", "--sigma-grid", "0:0.05:0.2",
            "--trials", "50", "--seed", "7"]
    a, b, s = tmp_path / "a.csv", tmp_path / "b.csv", tmp_path / "s.csv"
    assert cli.main(args + ["--out", str(a), "--summary", str(s)]) == 0
    assert cli.main(args + ["--out", str(b)]) == 0
    assert len(a.read_text().splitlines()) == 251
    assert a.read_bytes() == b.read_bytes()
    assert len(s.read_text().splitlines()) == 6


def test_synth_line_distances(tmp_path, monkeypatch):
    seen = []
    orig = cli.harness.generate_instance

    def spy(*a, **k):
        out = orig(*a, **k)
        seen.append([geometry.camera_center(P)[0] for P in out[0]])
        return out
    monkeypatch.setattr(cli.harness, "generate_instance", spy)
    out = tmp_path / "line.csv"
    assert cli.main(["synth", "--geometry", "line", "--cameras", "3", "--sigma-grid", "0.1",
                     "--trials", "2", "--out", str(out)]) == 0
    np.testing.assert_allclose(seen, [[3, 5, 7]] * 2, atol=1e-12)


def test_synth_unwritable(tmp_path):
    bad = tmp_path / "missing" / "out.csv"
    assert cli.main(["synth", "--geometry", "sphere", "--cameras", "2", "--sigma-grid", "0.1",
                     "--trials", "1", "--out", str(bad)]) == 1


def read_matrix(text):
    return np.array([[float(v) for v in line.split()] for line in text.strip().splitlines()])


def test_fmatrix_counterexample(tmp_path, capsys):
    path = write_scene(tmp_path, counterexample_cameras())
    assert cli.main(["fmatrix", "--cameras", path, "--pair", "1", "2"]) == 0
    F = read_matrix(capsys.readouterr().out)
    s = np.linalg.svd(F, compute_uv=False)
    assert s[0] == pytest.approx(1.0, abs=1e-12) and s[2] <= 1e-12
    np.testing.assert_allclose(F, [[0, 1, 0], [-1, 0, 0], [0, 0, 0]], atol=1e-12)


def test_fmatrix_swapped_pair_is_transpose(tmp_path, rng, capsys):
    cams, _, _ = scene(rng, 3)
    path = write_scene(tmp_path, cams)
    cli.main(["fmatrix", "--cameras", path, "--pair", "1", "3"])
    F13 = read_matrix(capsys.readouterr().out)
    cli.main(["fmatrix", "--cameras", path, "--pair", "3", "1"])
    F31 = read_matrix(capsys.readouterr().out)
    # equal up to the sign fixed by the normalization convention
    assert min(np.abs(F13 - F31.T).max(), np.abs(F13 + F31.T).max()) <= 1e-10


def test_fmatrix_bad_pairs(tmp_path):
    path = write_scene(tmp_path, counterexample_cameras())
    assert cli.main(["fmatrix", "--cameras", path, "--pair", "1", "1"]) == 1
    assert cli.main(["fmatrix", "--cameras", path, "--pair", "1", "3"]) == 1
