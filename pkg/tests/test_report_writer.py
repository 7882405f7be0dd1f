import json
import math

import numpy as np
import pytest

from app.dependencies.config_loader import load_config
from app.services.experiment_service import ExperimentService
from app.services.report_writer import ReportWriter, _json_safe


@pytest.fixture
def hexagon_config():
    return load_config(None, {
        "model.name": "cournot",
        "model.intercept": 12,
        "approx": "regular:6",
        "solver.beta1": 1.0,
        "solver.max_steps": 3,
    })


def test_provenance_columns_for_approx_run(hexagon_config):
    _, report = ExperimentService.run_single(hexagon_config)
    columns = ReportWriter.provenance_columns(report)
    assert columns["beta1_ok"] is True and columns["beta2_ok"] is True
    assert columns["lambda"] == pytest.approx(1.0)
    values = [float(v) for v in columns["hausdorff"].split(";")]
    assert len(values) == 4
    assert values == pytest.approx([h.value for h in report.hausdorff], rel=1e-10)
    direction = [float(c) for c in columns["hausdorff_direction"].split(";")]
    assert len(direction) == 2
    assert math.hypot(*direction) == pytest.approx(1.0, abs=1e-9)


def test_provenance_columns_without_certificate(hexagon_config):
    _, report = ExperimentService.run_single(hexagon_config)
    columns = ReportWriter.provenance_columns(report.model_copy(update={"certificate": None, "hausdorff": None}))
    assert columns["beta1_ok"] is None and columns["beta2_lower"] is None
    assert columns["hausdorff"] == "" and columns["hausdorff_direction"] == ""


def test_json_safe_replaces_non_finite():
    payload = {"bound": math.inf, "values": np.array([1.0, np.nan]), "nested": [(np.float64(2.5), -math.inf)]}
    safe = _json_safe(payload)
    assert safe == {"bound": None, "values": [1.0, None], "nested": [[2.5, None]]}
    json.dumps(safe, allow_nan=False)
