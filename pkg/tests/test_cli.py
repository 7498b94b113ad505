from __future__ import annotations

import json
import re

import numpy as np
import pytest

from isomarch.cli import dumps17, main
from isomarch.meshio import read_ply


@pytest.fixture()
def volume(tmp_path):
    out = tmp_path / "vol.f32"
    assert main(["synth", "tangle", "20", "--out", str(out)]) == 0
    return out


def test_synth_writes_raw_and_sidecar(volume):
    assert volume.exists()
    side = json.loads((volume.parent / "vol.f32.json").read_text())
    assert side["kind"] == "tangle"
    assert side["dims"] == [20, 20, 20]
    assert side["value_type"] == "f32le"
    assert volume.stat().st_size == 20**3 * 4


def test_synth_rejects_tiny_dims(tmp_path, capsys):
    assert main(["synth", "tangle", "1", "--out", str(tmp_path / "x.f32")]) == 1


def test_synth_domain_and_params(tmp_path):
    out = tmp_path / "s.f32"
    code = main(
        ["synth", "sphere", "8", "--domain", "-2", "2", "--param", "r=0.9", "--out", str(out)]
    )
    assert code == 0
    side = json.loads((tmp_path / "s.f32.json").read_text())
    assert side["domain"] == [[-2.0] * 3, [2.0] * 3]
    assert side["params"]["r"] == 0.9


def test_extract_writes_mesh_and_summary(volume, tmp_path):
    stem = tmp_path / "out"
    code = main(["extract", str(volume), "-k", "0.1", "--error", "--out", str(stem)])
    assert code == 0
    mesh = read_ply(stem.with_suffix(".ply"))
    assert mesh.triangle_count > 0
    assert "approx_error" in mesh.channels
    summary = json.loads(stem.with_suffix(".json").read_text())
    assert summary["vertex_count"] == mesh.vertex_count
    assert "approx_error" in summary["channels"]
    assert summary["topology"]["components"] >= 1


def test_extract_empty_mesh_exits_2(volume, tmp_path):
    stem = tmp_path / "empty"
    code = main(["extract", str(volume), "-k", "50.0", "--out", str(stem)])
    assert code == 2
    assert read_ply(stem.with_suffix(".ply")).triangle_count == 0


def test_extract_reruns_byte_identical(volume, tmp_path):
    stem = tmp_path / "same"
    args = ["extract", str(volume), "-k", "0.1", "--error", "--out", str(stem)]
    assert main(args) == 0
    first_ply = stem.with_suffix(".ply").read_bytes()
    first_json = stem.with_suffix(".json").read_bytes()
    assert main(args) == 0
    assert stem.with_suffix(".ply").read_bytes() == first_ply
    assert stem.with_suffix(".json").read_bytes() == first_json


def test_extract_missing_sidecar_errors(tmp_path):
    raw = tmp_path / "naked.f32"
    raw.write_bytes(np.zeros(4**3, dtype="<f4").tobytes())
    assert main(["extract", str(raw), "-k", "0.0", "--out", str(tmp_path / "o")]) == 1
    # explicit dims rescue the sidecar-less volume (flat field -> empty mesh)
    assert (
        main(["extract", str(raw), "-k", "0.5", "--dims", "4", "--out", str(tmp_path / "o")])
        == 2
    )


def test_extract_obj_format(volume, tmp_path):
    stem = tmp_path / "objout"
    code = main(
        ["extract", str(volume), "-k", "0.1", "--error", "--format", "obj", "--out", str(stem)]
    )
    assert code == 0
    text = stem.with_suffix(".obj").read_text()
    assert text.count("\nv ") > 0 and "\nf " in text
    assert (tmp_path / "objout.approx_error.txt").exists()


def test_config_preseeds_and_flags_win(volume, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("method = 'cubic'\nerror = True\n# comment\n")
    stem1 = tmp_path / "bycfg"
    assert main(["extract", str(volume), "-k", "0.1", "--config", str(cfg), "--out", str(stem1)]) == 0
    s1 = json.loads(stem1.with_suffix(".json").read_text())
    assert s1["method"] == "cubic"
    assert "approx_error" in s1["channels"]
    # an explicit flag overrides the config value
    stem2 = tmp_path / "byflag"
    assert (
        main(
            [
                "extract",
                str(volume),
                "-k",
                "0.1",
                "--config",
                str(cfg),
                "--method",
                "weno",
                "--out",
                str(stem2),
            ]
        )
        == 0
    )
    assert json.loads(stem2.with_suffix(".json").read_text())["method"] == "weno"


def test_compare_channels_in_summary(volume, tmp_path):
    stem = tmp_path / "cmp"
    code = main(
        ["extract", str(volume), "-k", "0.1", "--compare", "linear,cubic,weno", "--out", str(stem)]
    )
    assert code == 0
    summary = json.loads(stem.with_suffix(".json").read_text())
    assert "variation_max" in summary["channels"]
    assert summary["compare"] == ["linear", "cubic", "weno"]


def test_recover_writes_second_mesh(tmp_path):
    vol = tmp_path / "td.f32"
    assert main(["synth", "teardrop", "24", "--out", str(vol)]) == 0
    stem = tmp_path / "td"
    code = main(["extract", str(vol), "-k", "-0.001", "--recover", "--out", str(stem)])
    assert code == 0
    assert (tmp_path / "td_recovered.ply").exists()
    summary = json.loads(stem.with_suffix(".json").read_text())
    assert "recovery" in summary
    assert summary["recovery"]["patch_failures"] == 0


def test_validate_reports_all_stats(tmp_path):
    coarse_vol = tmp_path / "c.f32"
    fine_vol = tmp_path / "f.f32"
    assert main(["synth", "tangle", "16", "--out", str(coarse_vol)]) == 0
    assert main(["synth", "tangle", "40", "--out", str(fine_vol)]) == 0
    cstem, fstem = tmp_path / "c", tmp_path / "f"
    assert main(["extract", str(coarse_vol), "-k", "0.1", "--error", "--out", str(cstem)]) == 0
    assert main(["extract", str(fine_vol), "-k", "0.1", "--out", str(fstem)]) == 0
    out = tmp_path / "report.json"
    code = main(
        ["validate", str(cstem) + ".ply", str(fstem) + ".ply", "--out", str(out)]
    )
    assert code == 0
    report = json.loads(out.read_text())
    assert set(report) == {"rms_measured", "rms_approx", "rms_bound", "spearman"}
    assert report["rms_measured"] > 0
    assert -1.0 <= report["spearman"] <= 1.0


def test_validate_missing_channel_is_usage_error(tmp_path):
    vol = tmp_path / "v.f32"
    assert main(["synth", "tangle", "16", "--out", str(vol)]) == 0
    stem = tmp_path / "m"
    assert main(["extract", str(vol), "-k", "0.1", "--out", str(stem)]) == 0  # no --error
    code = main(["validate", str(stem) + ".ply", str(stem) + ".ply"])
    assert code == 1


def test_help_exits_zero(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--help"])
    assert exc.value.code == 0


def test_usage_error_exits_one(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["synth"])  # missing required arguments
    assert exc.value.code == 1


def test_dumps17_float_precision():
    text = dumps17({"x": 1.0 / 3.0, "nested": [0.1, 2.0]})
    assert "0.33333333333333331" in text
    assert "0.10000000000000001" in text
    # ints stay ints, floats always carry a decimal point or exponent
    assert re.search(r'"nested": \[\n\s+0\.1', text)
    parsed = json.loads(text)
    assert parsed["x"] == 1.0 / 3.0  # round-trip exact


def test_dumps17_rejects_unknown_types():
    with pytest.raises(TypeError):
        dumps17({"x": {1, 2}})
