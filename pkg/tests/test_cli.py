import math

import numpy as np
import pytest

from mdcs.cli import main
from mdcs.lfio import read_tensor, write_tensor
from mdcs.metrics import psnr


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def test_full_cycle_at_full_snapshots(tmp_path, capsys):
    f, b, r = tmp_path / "f.tns", tmp_path / "bundle", tmp_path / "r.tns"
    assert run(capsys, "synth", "--dims", "10,10,4,4,13", "--seed", 3, "--out", f)[0] == 0
    assert run(capsys, "sense", "--input", f, "--K", 13, "--out", b)[0] == 0
    assert (b / "manifest.txt").exists() and (b / "run.txt").exists()
    assert run(capsys, "reconstruct", "--bundle", b, "--out", r)[0] == 0
    code, out, _ = run(capsys, "metrics", "--ref", f, "--est", r, "--png", tmp_path / "v.png")
    assert code == 0
    value = float(out.split("psnr_db=")[1].split()[0])
    assert value >= 80 or math.isinf(value)
    assert (tmp_path / "v.png").exists()
    stanza = (tmp_path / "r.tns.run.txt").read_text()
    assert "config_hash = " in stanza and "version = " in stanza and "seed = " in stanza


def test_reconstruct_modes_agree(tmp_path, capsys):
    f, b = tmp_path / "f.tns", tmp_path / "bundle"
    run(capsys, "synth", "--dims", "6,6,2,2,5", "--seed", 1, "--out", f)
    run(capsys, "sense", "--input", f, "--patch", "3,3,2,2,5", "--K", 2, "--out", b)
    assert run(capsys, "reconstruct", "--bundle", b, "--mode", "nd", "--out", tmp_path / "n.tns")[0] == 0
    assert run(capsys, "reconstruct", "--bundle", b, "--mode", "1d", "--out", tmp_path / "o.tns")[0] == 0
    L = read_tensor(f)
    assert abs(psnr(L, read_tensor(tmp_path / "n.tns")) - psnr(L, read_tensor(tmp_path / "o.tns"))) <= 1e-4


def test_bench_ratio(capsys):
    code, out, _ = run(capsys, "bench")
    assert code == 0
    assert "107,729.08" in out


def test_bench_empty_csv(tmp_path, capsys):
    assert run(capsys, "bench", "--csv", tmp_path / "b.csv")[0] == 0
    assert (tmp_path / "b.csv").read_text().startswith("scene,basis,mode,K,psnr_db")


def test_exit_codes(tmp_path, capsys):
    code, _, err = run(capsys, "reconstruct", "--bundle", tmp_path / "missing", "--out", tmp_path / "x.tns")
    assert code == 2 and "error" in err
    f = tmp_path / "f.tns"
    write_tensor(f, np.zeros((5, 5, 4, 4, 13)))
    assert run(capsys, "sense", "--input", f, "--K", 20, "--out", tmp_path / "b")[0] == 1
    (tmp_path / "bad.tns").write_bytes(b"nope")
    assert run(capsys, "metrics", "--ref", tmp_path / "bad.tns", "--est", f)[0] == 2
    assert run(capsys, "sweep", "--input", f, "--K-list", "0")[0] == 1


def test_config_file_and_override(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# synthetic field\ndims = 5,5,4,4,13\nprimitives = 2\nseed = 4\n")
    assert run(capsys, "synth", "--config", cfg, "--out", tmp_path / "a.tns")[0] == 0
    assert read_tensor(tmp_path / "a.tns").shape == (5, 5, 4, 4, 13)
    assert run(capsys, "synth", "--config", cfg, "--dims", "10,5,4,4,13", "--out", tmp_path / "b.tns")[0] == 0
    assert read_tensor(tmp_path / "b.tns").shape == (10, 5, 4, 4, 13)
    assert "seed = 4" in (tmp_path / "b.tns.run.txt").read_text()
    assert run(capsys, "synth", "--config", tmp_path / "nope.cfg", "--out", tmp_path / "c.tns")[0] == 2


def test_mask_and_train_dict(tmp_path, capsys):
    assert run(capsys, "mask", "--field", "10,10,4,4,13", "--patch", "5,5,4,4,13", "--K", 2,
               "--out", tmp_path / "m.txt")[0] == 0
    lines = (tmp_path / "m.txt").read_text().splitlines()
    assert lines[0].startswith("#") and len(lines) == 1 + 4 * 2
    f = tmp_path / "f.tns"
    run(capsys, "synth", "--dims", "10,10,4,4,13", "--out", f)
    assert run(capsys, "train-dict", "--inputs", f, "--out", tmp_path / "d.dict")[0] == 0
    code, out, _ = run(capsys, "sweep", "--input", f, "--basis", "learned", "--dict", tmp_path / "d.dict",
                       "--K-list", "1,13", "--csv", tmp_path / "s.csv")
    assert code == 0 and "K=13" in out
    assert len((tmp_path / "s.csv").read_text().splitlines()) == 3


def test_bench_with_field(tmp_path, capsys):
    f = tmp_path / "f.tns"
    run(capsys, "synth", "--dims", "6,6,2,2,5", "--out", f)
    code, out, _ = run(capsys, "bench", "--patch", "3,3,2,2,5", "--field", f, "--repeats", 1,
                       "--csv", tmp_path / "b.csv")
    assert code == 0 and "speedup 1d/nd" in out
    assert len((tmp_path / "b.csv").read_text().splitlines()) == 3


def test_help_exits_cleanly(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--help"])
    assert exc.value.code == 0
