import json
import logging
import math
import os
import tempfile
from pathlib import Path
from typing import Any, Dict, Iterable, Optional

import numpy as np
import pandas as pd

from app.schemas.run_schema import RunReport, Trajectory

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.17g"
TRAJECTORY_COLUMNS = ["t", "player", "component", "x", "zeta"]
PROVENANCE_COLUMNS = ["beta1_ok", "beta2_ok", "lambda", "beta2_lower", "hausdorff", "hausdorff_direction"]
EPSILON_COLUMNS = [
    "polygon", "s", "h_max", "delta_H", "epsilon_hat", "ne_distance", "steps", "wall_time_s",
    *PROVENANCE_COLUMNS,
]


def _json_safe(value: Any) -> Any:
    # JSON has no inf/nan; an unbounded gain limit is written as null
    if isinstance(value, dict):
        return {key: _json_safe(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_safe(item) for item in value]
    if isinstance(value, np.ndarray):
        return _json_safe(value.tolist())
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def _atomic_write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except Exception:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


class ReportWriter:

    @staticmethod
    def trajectory_frame(trajectory: Trajectory) -> pd.DataFrame:
        """Long format: one row per sample, player and component (1-based)"""
        K, N, n = trajectory.x.shape
        M = trajectory.zeta.shape[2]
        width = max(n, M)
        x = np.full((K, N, width), np.nan)
        zeta = np.full((K, N, width), np.nan)
        x[:, :, :n] = trajectory.x
        zeta[:, :, :M] = trajectory.zeta
        return pd.DataFrame({
            "t": np.repeat(trajectory.times, N * width),
            "player": np.tile(np.repeat(np.arange(1, N + 1), width), K),
            "component": np.tile(np.arange(1, width + 1), K * N),
            "x": x.ravel(),
            "zeta": zeta.ravel(),
        }, columns=TRAJECTORY_COLUMNS)

    @staticmethod
    def write_frame(frame: pd.DataFrame, path, footer: Iterable[str] = ()) -> Path:
        """CSV at 17 significant digits, replaced atomically; footer lines are written as # comments"""
        path = Path(path)
        text = frame.to_csv(index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
        text += "".join(f"# {line}\n" for line in footer)
        _atomic_write(path, text)
        logger.info(f"Wrote {len(frame)} rows to {path}")
        return path

    @staticmethod
    def write_trajectory(trajectory: Trajectory, path) -> Path:
        return ReportWriter.write_frame(ReportWriter.trajectory_frame(trajectory), path)

    @staticmethod
    def report_dict(report: RunReport, extra: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
        summary = {
            "mode": report.mode,
            "integrator": report.integrator,
            "converged": report.converged,
            "steps": report.steps,
            "wall_time_s": report.wall_time,
            "projection_time_s": report.projection_time,
            "qp_iterations_total": report.qp_iterations_total,
            "terminal_residuals": list(report.terminal_residuals),
            "x_final": report.x_final.tolist(),
            "zeta_final": report.zeta_final.tolist(),
            "seed": report.seed,
            "gain_certificate": report.certificate.model_dump(by_alias=True) if report.certificate else None,
            "hausdorff": [h.model_dump() for h in report.hausdorff] if report.hausdorff else None,
        }
        summary.update(extra or {})
        return summary

    @staticmethod
    def provenance_columns(report: RunReport) -> Dict[str, Any]:
        '''
        Gain certificate and Hausdorff columns shared by the tabular reports.

        hausdorff lists every player's estimate separated by ';', and
        hausdorff_direction is the maximizing direction of the worst player.
        Exact runs leave both empty.
        '''
        certificate = report.certificate
        columns: Dict[str, Any] = {
            "beta1_ok": certificate.beta1_ok if certificate else None,
            "beta2_ok": certificate.beta2_ok if certificate else None,
            "lambda": certificate.lam if certificate else None,
            "beta2_lower": certificate.beta2_lower if certificate else None,
            "hausdorff": "",
            "hausdorff_direction": "",
        }
        if report.hausdorff:
            worst = max(report.hausdorff, key=lambda h: h.value)
            columns["hausdorff"] = ";".join(f"{h.value:.12g}" for h in report.hausdorff)
            columns["hausdorff_direction"] = ";".join(f"{c:.12g}" for c in worst.direction)
        return columns

    @staticmethod
    def write_report(report: RunReport, path, extra: Optional[Dict[str, Any]] = None) -> Path:
        path = Path(path)
        payload = _json_safe(ReportWriter.report_dict(report, extra))
        _atomic_write(path, json.dumps(payload, indent=2, allow_nan=False) + "\n")
        logger.info(f"Wrote run report to {path}")
        return path
