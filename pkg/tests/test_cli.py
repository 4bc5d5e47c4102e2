import hashlib
import json

import numpy as np
import pytest
from PIL import Image

from causaug import PipelineConfig, canonical_json, save_npy, ImageTensor, VolumeFile
from causaug.cli import main


def make_slice(path, seed=0, h=24, w=24):
    rng = np.random.default_rng(seed)
    save_npy(ImageTensor(rng.standard_normal((1, h, w)).astype(np.float32)), path)


def read_all_bytes(d):
    return {p.name: p.read_bytes() for p in sorted(d.iterdir())}


class TestAugment:
    def test_pair_counting(self, tmp_path):
        inp = tmp_path / "in"
        out = tmp_path / "out"
        inp.mkdir()
        make_slice(inp / "a.npy")
        rc = main(["augment", "--input", str(inp), "--out", str(out),
                   "--pairs", "2", "--seed", "1"])
        assert rc == 0
        npys = sorted(p.name for p in out.glob("*.npy"))
        sidecars = sorted(p.name for p in out.glob("*.json"))
        assert len(npys) == 4
        assert len(sidecars) == 2
        assert npys == ["a_p00_t1.npy", "a_p00_t2.npy", "a_p01_t1.npy", "a_p01_t2.npy"]

    def test_same_seed_byte_identical(self, tmp_path):
        inp = tmp_path / "in"
        inp.mkdir()
        make_slice(inp / "a.npy")
        make_slice(inp / "b.npy", seed=3)
        outs = []
        for name in ("o1", "o2"):
            out = tmp_path / name
            assert main(["augment", "--input", str(inp), "--out", str(out),
                         "--pairs", "2", "--seed", "11"]) == 0
            outs.append(read_all_bytes(out))
        assert outs[0] == outs[1]

    def test_different_seed_differs(self, tmp_path):
        inp = tmp_path / "in"
        inp.mkdir()
        make_slice(inp / "a.npy")
        o1, o2 = tmp_path / "o1", tmp_path / "o2"
        main(["augment", "--input", str(inp), "--out", str(o1), "--seed", "1"])
        main(["augment", "--input", str(inp), "--out", str(o2), "--seed", "2"])
        a = (o1 / "a_p00_t1.npy").read_bytes()
        b = (o2 / "a_p00_t1.npy").read_bytes()
        assert a != b

    def test_thread_count_does_not_change_bytes(self, tmp_path, monkeypatch):
        inp = tmp_path / "in"
        inp.mkdir()
        for i in range(5):
            make_slice(inp / f"s{i}.npy", seed=i)
        results = []
        for threads in ("1", "8"):
            monkeypatch.setenv("CAUSAUG_THREADS", threads)
            out = tmp_path / f"t{threads}"
            assert main(["augment", "--input", str(inp), "--out", str(out),
                         "--pairs", "2", "--seed", "5"]) == 0
            results.append(read_all_bytes(out))
        assert results[0] == results[1]

    def test_volume_input_expands_slices(self, tmp_path):
        inp = tmp_path / "vol.npy"
        rng = np.random.default_rng(0)
        save_npy(VolumeFile(scan=rng.standard_normal((3, 16, 16)).astype(np.float32)), inp)
        out = tmp_path / "out"
        assert main(["augment", "--input", str(inp), "--out", str(out), "--seed", "0"]) == 0
        assert len(list(out.glob("*_t1.npy"))) == 3
        assert (out / "vol_z000_p00_t1.npy").exists()

    def test_sidecar_hash_matches_canonical_digest(self, tmp_path):
        inp = tmp_path / "in"
        inp.mkdir()
        make_slice(inp / "a.npy")
        out = tmp_path / "out"
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps({"seed": 4, "gin": {"n_layers": 2}}))
        assert main(["augment", "--input", str(inp), "--out", str(out),
                     "--config", str(cfg_path)]) == 0
        sidecar = json.loads((out / "a_p00.json").read_text())
        from causaug import load_config

        cfg = load_config(cfg_path)
        want = hashlib.sha256(canonical_json(cfg).encode()).hexdigest()
        assert sidecar["config_hash"] == want
        # a tampered config no longer matches the recorded hash
        tampered = json.loads(cfg_path.read_text())
        tampered["gin"]["n_layers"] = 3
        cfg_path.write_text(json.dumps(tampered))
        cfg2 = load_config(cfg_path)
        assert hashlib.sha256(canonical_json(cfg2).encode()).hexdigest() != sidecar["config_hash"]

    def test_emit_maps_flag(self, tmp_path):
        inp = tmp_path / "in"
        inp.mkdir()
        make_slice(inp / "a.npy")
        out = tmp_path / "out"
        assert main(["augment", "--input", str(inp), "--out", str(out),
                     "--emit-maps", "--seed", "0"]) == 0
        assert (out / "a_p00_map.npy").exists()

    def test_unreadable_input_fails_with_diagnostics(self, tmp_path, capsys):
        inp = tmp_path / "in"
        inp.mkdir()
        (inp / "bad.npy").write_bytes(b"not an npy file")
        make_slice(inp / "good.npy")
        out = tmp_path / "out"
        rc = main(["augment", "--input", str(inp), "--out", str(out), "--seed", "0"])
        assert rc == 1
        err = capsys.readouterr().err
        assert "bad.npy" in err
        # the good file still went through
        assert (out / "good_p00_t1.npy").exists()

    def test_missing_input_fails(self, tmp_path):
        assert main(["augment", "--input", str(tmp_path / "nope.npy"),
                     "--out", str(tmp_path / "o")]) == 1


class TestOtherCommands:
    def test_help_exits_zero(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["--help"])
        assert exc.value.code == 0

    def test_invalid_flag_exits_two(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["augment", "--frobnicate"])
        assert exc.value.code == 2

    def test_preview_tiles_four_planes(self, tmp_path):
        inp = tmp_path / "a.npy"
        make_slice(inp, h=20, w=20)
        out = tmp_path / "p.png"
        assert main(["preview", "--input", str(inp), "--out", str(out), "--seed", "0"]) == 0
        img = np.asarray(Image.open(out))
        assert img.shape == (20, 80)

    def test_gen_maps_bspline(self, tmp_path):
        out = tmp_path / "maps"
        assert main(["gen-maps", "--kind", "bspline", "--size", "32x32",
                     "--count", "3", "--out", str(out), "--seed", "2"]) == 0
        assert len(list(out.glob("map_*.npy"))) == 3

    def test_gen_maps_superpixel_needs_input(self, tmp_path):
        assert main(["gen-maps", "--kind", "superpixel", "--out", str(tmp_path / "m"),
                     "--seed", "0"]) == 1

    def test_gen_maps_superpixel(self, tmp_path):
        inp = tmp_path / "a.npy"
        make_slice(inp, h=16, w=16)
        out = tmp_path / "maps"
        assert main(["gen-maps", "--kind", "superpixel", "--input", str(inp),
                     "--count", "1", "--out", str(out), "--seed", "0"]) == 0
        assert (out / "map_000.npy").exists()

    def test_bench_runs_and_enforces_floor(self, tmp_path):
        assert main(["bench", "--size", "32x32", "--batch", "4", "--floor", "0.001"]) == 0
        assert main(["bench", "--size", "32x32", "--batch", "4", "--floor", "1e9"]) == 1

    def test_toy_demo_writes_report(self, tmp_path):
        out = tmp_path / "report.json"
        trace = tmp_path / "trace.jsonl"
        rc = main(["toy-demo", "--mode", "none", "--iters", "5",
                   "--seed", "0", "--out", str(out), "--trace", str(trace)])
        assert rc == 0
        report = json.loads(out.read_text())
        assert "none" in report["modes"]
        lines = trace.read_text().strip().splitlines()
        assert len(lines) == 5
        row = json.loads(lines[0])
        assert set(row) == {"total", "seg1", "seg2", "kl", "div_weight"}


class TestPreprocessFlag:
    def test_preprocess_resizes_and_normalizes(self, tmp_path):
        rng = np.random.default_rng(2)
        vol = VolumeFile(scan=(rng.standard_normal((3, 40, 30)) * 90 + 10).astype(np.float32))
        inp = tmp_path / "scan.npy"
        save_npy(vol, inp)
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({
            "preprocessing": {"window": None, "clip_top_percent": 0.005,
                              "normalize": True, "target_size": [48, 48]},
            "seed": 3,
        }))
        out = tmp_path / "out"
        assert main(["augment", "--input", str(inp), "--out", str(out),
                     "--config", str(cfg), "--preprocess"]) == 0
        from causaug import load_npy

        t1 = load_npy(out / "scan_z001_p00_t1.npy")
        assert t1.shape == (1, 48, 48)

    def test_without_flag_slices_pass_through_raw(self, tmp_path):
        make_slice(tmp_path / "a.npy", h=20, w=20)
        out = tmp_path / "out"
        assert main(["augment", "--input", str(tmp_path / "a.npy"), "--out", str(out),
                     "--seed", "0"]) == 0
        from causaug import load_npy

        assert load_npy(out / "a_p00_t1.npy").shape == (1, 20, 20)
