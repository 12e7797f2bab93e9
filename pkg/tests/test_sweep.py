import pytest

from bsquick import CertificateError
from bsquick.bases.middleware import SweepMiddleware
from bsquick.harness import (
    CertificationFailed,
    Certified,
    RowStatus,
    SweepRunner,
    UnexpectedErrorOccurred,
    run_sweep,
    sweep_columns,
    write_csv,
)
from bsquick.harness.sweep import (
    expected_dn_slope,
    fit_dn_slope,
    fit_norm_exponent,
)

from .conftest import TUBE_EPSILON


@pytest.fixture(scope="module")
def small_config(tube_config):
    return tube_config.replace(
        epsilons=[0.3, TUBE_EPSILON], l_values=[1.0, 4.0]
    )


@pytest.fixture(scope="module")
def rows(small_config):
    return run_sweep(small_config, keep_certificates=True)


class RecordingMiddleware(SweepMiddleware):
    def __init__(self, name, journal):
        self.name = name
        self.journal = journal

    async def foreword(self, rpctx):
        self.journal.append((self.name, "foreword", rpctx.epsilon))

    async def afterword(self, rpctx):
        self.journal.append((self.name, "afterword", rpctx.status))


def test_rows_are_certified_in_config_order(rows, small_config):
    assert [row.epsilon for row in rows] == small_config.epsilons
    for row in rows:
        assert row.passed, row.reason
        assert row.reason == ""
        assert 0 < row.eps_mu <= 1
        assert row.residual <= small_config.certification_tol
        assert row.wall_ms is None
        assert row.certificate is not None
        assert set(row.norms) == set(small_config.q_values)


def test_quotients_are_filled(rows):
    row = rows[0]
    assert row.ls[2.0] > 0
    assert row.frank[1.5] > 0
    assert row.dn[4.0] >= row.dn[1.0]
    assert fit_dn_slope(row).slope <= 0
    assert set(row.dn_uniform_F) == set(row.dn_F)
    # |V| <= 1/mu на носителе
    for L, value in row.dn_F.items():
        ceiling = row.mu ** -1.5 * row.dn_uniform_F[L]
        assert value <= ceiling * (1 + 1e-9)
    assert expected_dn_slope(row).slope < 0


def test_norm_exponent_fit(rows):
    fit = fit_norm_exponent(rows, 2.0)
    assert fit.r_squared == pytest.approx(1.0)


def test_record_matches_columns(rows, small_config):
    columns = sweep_columns(small_config)
    record = rows[0].to_record()
    assert set(record) == set(columns)
    assert columns[:7] == [
        "epsilon", "M", "c0", "mu", "eps_mu", "residual", "nodal_fraction",
    ]
    assert columns[-2:] == ["status", "reason"]
    assert record["status"] == "certified"


def test_fractional_columns(small_config):
    config = small_config.replace(symbol="fractional", exponent_s=1.0)
    columns = sweep_columns(config)
    assert "fractional_iii_2" in columns
    assert "fractional_i_1.5" in columns


def test_sweep_is_deterministic(small_config, tmp_path):
    config = small_config.replace(epsilons=[TUBE_EPSILON])
    columns = sweep_columns(config)
    paths = []
    for attempt in range(2):
        records = [row.to_record() for row in run_sweep(config)]
        path = tmp_path / f"run{attempt}.csv"
        paths.append(write_csv(path, columns, records))
    assert paths[0].read_bytes() == paths[1].read_bytes()


def test_workers_do_not_change_results(small_config):
    serial = run_sweep(small_config)
    parallel = run_sweep(small_config.replace(workers=2))
    assert [row.to_record() for row in serial] == [
        row.to_record() for row in parallel
    ]


def test_certification_failure_is_recorded(small_config, mocker):
    mocker.patch(
        "bsquick.harness.sweep.forge_potential",
        side_effect=CertificateError("residual <= tol", "forced"),
    )
    journal = []
    runner = SweepRunner(
        small_config.replace(epsilons=[TUBE_EPSILON]),
        middlewares=[RecordingMiddleware("a", journal)],
    )
    (row,) = runner.run()
    assert row.status is RowStatus.CERTIFICATION_FAILED
    assert row.reason.startswith("CertificateError")
    assert row.mu is None
    assert journal[-1] == ("a", "afterword", RowStatus.CERTIFICATION_FAILED)


def test_unexpected_error_is_recorded(small_config, mocker):
    mocker.patch(
        "bsquick.harness.sweep.forge_potential",
        side_effect=RuntimeError("boom"),
    )
    payloads = []

    class Spy(SweepMiddleware):
        async def afterword(self, rpctx):
            payloads.append(rpctx.payload)

    (row,) = run_sweep(
        small_config.replace(epsilons=[TUBE_EPSILON]), middlewares=[Spy()]
    )
    assert row.status is RowStatus.UNEXPECTED_ERROR_OCCURRED
    assert row.reason == "RuntimeError: boom"
    assert isinstance(payloads[0], UnexpectedErrorOccurred)


def test_middlewares_wrap_each_row(small_config):
    journal = []
    runner = SweepRunner(
        small_config.replace(epsilons=[TUBE_EPSILON]), middlewares=[]
    )
    runner.add_middleware(RecordingMiddleware("outer", journal))
    runner.add_middleware(RecordingMiddleware("inner", journal))
    runner.run()
    assert journal == [
        ("outer", "foreword", TUBE_EPSILON),
        ("inner", "foreword", TUBE_EPSILON),
        ("inner", "afterword", RowStatus.CERTIFIED),
        ("outer", "afterword", RowStatus.CERTIFIED),
    ]


def test_certified_payload_carries_report(small_config):
    payloads = []

    class Spy(SweepMiddleware):
        async def afterword(self, rpctx):
            payloads.append(rpctx.payload)

    single = small_config.replace(epsilons=[TUBE_EPSILON])
    run_sweep(single, middlewares=[Spy()])
    (payload,) = payloads
    assert isinstance(payload, Certified)
    assert payload.report.passed
    assert not isinstance(payload, CertificationFailed)
