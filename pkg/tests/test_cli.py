import json
import subprocess
import sys

import numpy as np
import pytest

from panogabor.cli import main
from panogabor.formats import load_tensor, read_pfm, save_tensor, write_pfm
from panogabor.fusion import load_weights
from panogabor.gabor import gabor_kernel, orientations
from panogabor.synthetic import smooth_sphere_image, synthetic_room_depth


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def depth(tmp_path):
    path = tmp_path / "gt.pfm"
    write_pfm(path, synthetic_room_depth(16, 32))
    return path


def test_bank_single_row(tmp_path, capsys):
    code, out, _ = run(capsys, "bank", "--height", 1, "--out", tmp_path / "b")
    assert code == 0
    info = json.loads(out)
    f = np.pi / 2
    assert info["coefficient"] == [0.0]
    assert info["frequency"][0] == pytest.approx(f, rel=1e-15)
    assert info["sigma"][0] == pytest.approx(np.pi / (f + 0.1), rel=1e-15)
    kernels = load_tensor(tmp_path / "b" / "bank_kernels.pgt")
    assert kernels.shape == (1, 8, 3, 3)
    expected = gabor_kernel(f, orientations(), 0.0, np.pi / (f + 0.1))
    np.testing.assert_allclose(kernels[0], expected, rtol=1e-6, atol=1e-8)
    for name in ("bank_gallery.png", "bank_params.csv", "distortion_profile.png", "bank_equator.png"):
        assert (tmp_path / "b" / name).exists()


def test_bank_params_csv(tmp_path, capsys):
    run(capsys, "bank", "--height", 4, "--out", tmp_path, "--no-figures", "--mode", "cosine")
    lines = (tmp_path / "bank_params.csv").read_text().splitlines()
    assert lines[0] == "row,latitude,coefficient,frequency,sigma,psi"
    assert len(lines) == 5
    assert not (tmp_path / "distortion_profile.png").exists()


def test_project_round_trip(tmp_path, capsys):
    save_tensor(tmp_path / "erp.pgt", smooth_sphere_image(32, 64)[None])
    code, out, _ = run(capsys, "project", tmp_path / "erp.pgt", tmp_path / "cube.pgt", "--to", "cube", "--preview", tmp_path / "p.png")
    assert code == 0 and json.loads(out)["faces"] == [6, 1, 16, 16]
    assert (tmp_path / "p.png").exists()
    code, out, _ = run(capsys, "project", tmp_path / "cube.pgt", tmp_path / "back.pgt", "--to", "erp")
    assert code == 0 and load_tensor(tmp_path / "back.pgt").shape == (1, 32, 64)


def test_convolve_row_and_channel(tmp_path, capsys):
    save_tensor(tmp_path / "x.pgt", np.ones((2, 8, 16)))
    code, out, _ = run(capsys, "convolve", tmp_path / "x.pgt", tmp_path / "y.pgt")
    assert code == 0 and json.loads(out)["banks_indexed_by"] == "row"
    save_tensor(tmp_path / "x8.pgt", np.ones((8, 8, 16)))
    code, out, _ = run(capsys, "convolve", tmp_path / "x8.pgt", tmp_path / "y8.png")
    assert code == 0 and json.loads(out)["banks_indexed_by"] == "channel"


def test_gradient(tmp_path, capsys, depth):
    code, out, _ = run(capsys, "gradient", depth, "--out", tmp_path / "g")
    assert code == 0
    assert set(json.loads(out)["outputs"]) == {"gx.pfm", "gy.pfm", "gx.png", "gy.png", "gradient.png"}
    assert read_pfm(tmp_path / "g" / "gx.pfm").shape == (16, 32)


def test_fuse_and_weights(tmp_path, capsys, rng):
    save_tensor(tmp_path / "a.pgt", rng.normal(size=(2, 8, 16)))
    save_tensor(tmp_path / "b.pgt", rng.normal(size=(2, 8, 16)))
    args = [tmp_path / "a.pgt", tmp_path / "b.pgt"]
    code, out, _ = run(capsys, "fuse", *args, tmp_path / "y.pgt", "--c-out", 4, "--save-weights", tmp_path / "w.pgfw")
    assert code == 0 and json.loads(out)["shape"] == [4, 8, 16]
    assert load_weights(tmp_path / "w.pgfw").c_out == 4
    run(capsys, "fuse", *args, tmp_path / "y2.pgt", "--weights", tmp_path / "w.pgfw")
    assert (tmp_path / "y.pgt").read_bytes() == (tmp_path / "y2.pgt").read_bytes()


def test_loss_and_eval_identical(tmp_path, capsys, depth):
    code, out, _ = run(capsys, "loss", depth, depth)
    assert code == 0
    r = json.loads(out)
    assert r["total"] == 0.0 and r["eta"] == 0.5
    code, out, _ = run(capsys, "eval", depth, depth)
    r = json.loads(out)
    assert r["delta1"] == 100.0 and r["rmse"] == 0.0


def test_fit(tmp_path, capsys, depth):
    code, out, _ = run(capsys, "fit", depth, tmp_path / "fit.pfm", "--steps", 5)
    assert code == 0
    r = json.loads(out)
    assert r["final_loss"] < r["initial_loss"]
    lines = (tmp_path / "fit.csv").read_text().splitlines()
    assert lines[0] == "step,loss" and len(lines) == 7
    assert (tmp_path / "fit.png").exists()


def test_gradcheck(capsys):
    code, out, _ = run(capsys, "gradcheck")
    assert code == 0 and json.loads(out)["passed"] is True


def test_error_exit_one(tmp_path, capsys):
    (tmp_path / "bad.pgt").write_bytes(b"junk")
    code, out, err = run(capsys, "eval", tmp_path / "bad.pgt", tmp_path / "bad.pgt")
    assert code == 1 and out == ""
    payload = json.loads(err)
    assert payload["section"] == "magic"


def test_missing_file_exit_one(tmp_path, capsys):
    code, _, err = run(capsys, "loss", tmp_path / "no.pfm", tmp_path / "no.pfm")
    assert code == 1 and json.loads(err)["error"] == "FileNotFoundError"


def test_usage_exit_two(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["project", "a", "b"])
    assert exc.value.code == 2


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "panogabor", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0 and "gradcheck" in proc.stdout
