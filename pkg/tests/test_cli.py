import numpy as np
import pytest

from bsquick import DecayProfile
from bsquick.harness.cli import EXIT_FAILED, EXIT_OK, EXIT_USAGE, main
from bsquick.harness.storage import read_csv
from bsquick.json_parsers import json_parser_policy

from .conftest import TUBE_EPSILON

EPS = str(TUBE_EPSILON)


def test_sweep_writes_tables(tmp_path):
    code = main(
        ["sweep", "--eps", EPS, "--L", "1", "4", "--out", str(tmp_path)]
    )
    assert code == EXIT_OK
    (record,) = read_csv(tmp_path / "sweep.csv")
    assert record["status"] == "certified"
    assert float(record["epsilon"]) == TUBE_EPSILON
    report = json_parser_policy.loads((tmp_path / "sweep.json").read_bytes())
    assert report["rows"][0]["status"] == "certified"
    assert "dn_slopes" in report


def test_forge_then_verify(tmp_path):
    assert main(["forge", "--eps", EPS, "--out", str(tmp_path)]) == EXIT_OK
    path = tmp_path / "certificate_eps0.25.bsq"
    assert path.exists()
    assert (tmp_path / "certificate_eps0.25.json").exists()
    assert main(["verify", str(path)]) == EXIT_OK


def test_verify_rejects_corrupted_file(tmp_path):
    main(["forge", "--eps", EPS, "--out", str(tmp_path)])
    path = tmp_path / "certificate_eps0.25.bsq"
    data = bytearray(path.read_bytes())
    data[-3] ^= 0xFF
    path.write_bytes(bytes(data))
    assert main(["verify", str(path)]) == EXIT_USAGE


def test_invalid_eps_is_a_usage_error(tmp_path):
    code = main(["sweep", "--eps", "0.9", "--out", str(tmp_path)])
    assert code == EXIT_USAGE


def test_unknown_command_exits():
    with pytest.raises(SystemExit) as error:
        main(["spam"])
    assert error.value.code == 2


def test_knapp_table(tmp_path):
    code = main(
        ["knapp", "--eps", EPS, "--M", "1", "2", "--out", str(tmp_path)]
    )
    assert code == EXIT_OK
    rows = read_csv(tmp_path / "knapp.csv")
    assert [float(row["M"]) for row in rows] == [1.0, 2.0]
    assert all(0 < float(row["bound"]) <= 1 for row in rows)


def test_knapp_delta_widens_the_cap(tmp_path):
    code = main(
        ["knapp", "--eps", EPS, "--M", "1", "4", "--delta", "0.5"]
        + ["--out", str(tmp_path)]
    )
    assert code == EXIT_OK
    rows = read_csv(tmp_path / "knapp.csv")
    assert [float(row["c0"]) for row in rows] == pytest.approx([1.0, 0.5])


def test_knapp_delta_out_of_range(tmp_path):
    code = main(
        ["knapp", "--eps", EPS, "--M", "2", "--delta", "1.5"]
        + ["--out", str(tmp_path)]
    )
    assert code == EXIT_USAGE


def test_kernel_profile_report(tmp_path):
    code = main(["kernel", "--eps", "0.02", "--out", str(tmp_path)])
    assert code == EXIT_OK
    report = json_parser_policy.loads((tmp_path / "kernel.json").read_bytes())
    assert report["0.02"]["passed"] is True
    assert read_csv(tmp_path / "kernel_eps0.02.csv")


def test_kernel_profile_off_its_exponent_fails(tmp_path, mocker):
    flat = DecayProfile(
        radii=np.array([10.0, 25.0, 100.0]),
        envelope=np.array([1.0, 1.0, 0.24]),
        fitted_exponent=0.0,
        fit_range=(5.0, 25.0),
        r_squared=1.0,
        decay_rate=0.01,
        suppression_ratio=0.24,
        expected_exponent=-0.5,
        expected_suppression=0.236,
    )
    mocker.patch(
        "bsquick.harness.cli.kernel_decay_profile", return_value=flat
    )
    code = main(["kernel", "--eps", "0.02", "--out", str(tmp_path)])
    assert code == EXIT_FAILED
    report = json_parser_policy.loads((tmp_path / "kernel.json").read_bytes())
    assert report["0.02"]["passed"] is False
