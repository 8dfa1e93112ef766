import json

import pytest

from brepgraph import shapes
from brepgraph.cli import main


@pytest.fixture()
def cube_file(tmp_path):
    path = tmp_path / "cube.brep.json"
    path.write_text(shapes.as_document(shapes.unit_cube()))
    return str(path)


def lines_to_dict(line: str) -> dict:
    return dict(pair.split("=", 1) for pair in line.split())


class TestParseValidate:
    def test_parse_summary(self, cube_file, capsys):
        assert main(["parse", cube_file]) == 0
        out = lines_to_dict(capsys.readouterr().out.strip())
        assert out["faces"] == "6"
        assert out["edges"] == "12"

    def test_parse_failure_exit_code(self, tmp_path, capsys):
        bad = tmp_path / "bad.brep.json"
        bad.write_text("{not json")
        assert main(["parse", str(bad)]) == 1
        assert "error" in capsys.readouterr().err

    def test_validate_clean(self, cube_file, capsys):
        assert main(["validate", cube_file]) == 0
        assert "errors=0" in capsys.readouterr().out

    def test_validate_seam_warning_still_ok(self, tmp_path, capsys):
        path = tmp_path / "cyl.brep.json"
        path.write_text(shapes.as_document(shapes.closed_cylinder()))
        assert main(["validate", str(path)]) == 0
        out = capsys.readouterr().out
        assert "warnings=1" in out

    def test_usage_error_exit_code(self):
        with pytest.raises(SystemExit) as err:
            main(["frobnicate"])
        assert err.value.code == 2


class TestPipelineCommands:
    def test_sample_writes_dataset(self, cube_file, tmp_path, capsys):
        out_dir = tmp_path / "out"
        assert main(["sample", cube_file, "-o", str(out_dir)]) == 0
        output = capsys.readouterr().out
        assert "face=0 resolution=32" in output
        assert (out_dir / "manifest.json").exists()
        assert (out_dir / "data.shard").exists()
        manifest = json.loads((out_dir / "manifest.json").read_text())
        assert manifest["items"][0]["node_count"] == 6

    def test_graph_stats(self, cube_file, capsys):
        assert main(["graph", cube_file]) == 0
        out = lines_to_dict(capsys.readouterr().out.strip())
        assert out["nodes"] == "6"
        assert out["arcs"] == "12"
        assert out["degrees"] == "4:6"

    def test_encode_then_stats(self, cube_file, tmp_path, capsys):
        out_dir = tmp_path / "enc"
        assert main(["encode", cube_file, "-o", str(out_dir), "--seed", "3"]) == 0
        first = capsys.readouterr().out
        assert "valid_length=6" in first
        assert main(["stats", str(out_dir)]) == 0
        out = capsys.readouterr().out
        assert "nodes=6" in out
        assert "tokens=yes" in out

    def test_custom_resolution_flags(self, cube_file, tmp_path, capsys):
        out_dir = tmp_path / "coarse"
        assert main(["sample", cube_file, "-o", str(out_dir),
                     "--nmin", "16", "--nmax", "16", "--mmin", "16",
                     "--mmax", "16"]) == 0
        assert "face=0 resolution=16" in capsys.readouterr().out


class TestNumericCommands:
    def test_check_grad_passes(self, capsys):
        assert main(["check-grad", "--n", "4", "--d", "8", "--tau", "0.5",
                     "--seed", "7"]) == 0
        out = capsys.readouterr().out
        assert out.startswith("grad_err=")
        assert float(out.split("=")[1]) <= 1e-5

    def test_loss_random_batch(self, capsys):
        assert main(["loss", "--n", "3", "--d", "6", "--tau", "0.4",
                     "--seed", "11"]) == 0
        out = lines_to_dict(capsys.readouterr().out.strip())
        assert float(out["loss"]) >= 0.0
        assert float(out["grad_err"]) <= 1e-5

    def test_loss_container_round_trip(self, tmp_path, capsys):
        container = tmp_path / "batch.bin"
        assert main(["loss", "--n", "3", "--d", "6", "--seed", "2",
                     "-o", str(container)]) == 0
        first = capsys.readouterr().out
        assert main(["loss", str(container)]) == 0
        assert capsys.readouterr().out == first

    def test_mqe_check_all_pass(self, capsys):
        assert main(["mqe-check", "--seed", "5"]) == 0
        out = capsys.readouterr().out
        assert "residual_identity=pass" in out
        assert "sparsity=pass" in out
        assert "fail" not in out
