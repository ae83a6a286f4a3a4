"""The calibration report must run clean and cover every frozen constant."""

from bureslab import calibrate


def test_report_runs_and_names_each_constant(capsys):
    assert calibrate.main() == 0
    out = capsys.readouterr().out
    for name in ("CONF_SCALE", "BIT_BATCHES_SCALE", "K_ACC", "QUBIT_SCALE",
                 "K_PLAN", "C_LEARN_CLASSICAL", "PEARSON_MARGIN"):
        assert name in out
    assert "EXCEEDS" not in out
