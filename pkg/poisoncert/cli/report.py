"""
poisoncert/cli/report.py
Run reports: pydantic schema, config hashing and the per-run output directory.
"""

import hashlib
import json
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np
import pandas as pd
from pydantic import BaseModel, Field, model_validator

from poisoncert.__version__ import __version__

TABLE_COLUMNS = ["epsilon", "eta", "sigma", "certificate", "attack_mean", "attack_stderr", "policy"]
REPORT_FILE = "report.json"
TABLE_FILE = "table.csv"
CONFIG_FILE = "config.txt"
SCHEMA_FILE = "schema.json"


class AttackRecord(BaseModel):
    policy: str
    mean: float
    stderr: float = Field(ge=0.0)
    seeds: int = Field(ge=1)
    avg_benign_loss: Optional[float] = None


class InstanceRecord(BaseModel):
    """One certified (or only simulated) instance."""

    kind: str
    epsilon: float = Field(ge=0.0, le=1.0)
    eta: float
    sigma: Optional[float] = None
    r: Optional[float] = None
    s_digest: Optional[str] = None
    certificate_solver: Optional[float] = None
    certificate_verified: Optional[float] = None
    solver_status: Optional[str] = None
    verification_converged: Optional[bool] = None
    attack_results: List[AttackRecord] = Field(default_factory=list)
    violation: bool = False
    wall_time: float = 0.0
    extra: Dict[str, Any] = Field(default_factory=dict)

    @model_validator(mode="after")
    def _verified_with_solver(self) -> "InstanceRecord":
        if self.certificate_solver is not None and self.certificate_verified is None:
            raise ValueError("a solver certificate needs its verified counterpart")
        return self

    def check_dominance(self, sigmas: float) -> bool:
        """Flag the record when an attack mean exceeds the verified bound by more than `sigmas` stderr."""
        if self.certificate_verified is None:
            return False
        self.violation = any(a.mean > self.certificate_verified + sigmas * a.stderr + 1e-9
                             for a in self.attack_results)
        return self.violation


class RunReport(BaseModel):
    command: str
    config_hash: str
    seed: int
    version: str = __version__
    records: List[InstanceRecord] = Field(default_factory=list)
    notes: Dict[str, Any] = Field(default_factory=dict)

    @property
    def violations(self) -> List[InstanceRecord]:
        return [record for record in self.records if record.violation]


def config_hash(config: Dict[str, Any]) -> str:
    """SHA-256 over the canonical JSON of every semantically meaningful setting and flag."""
    canonical = json.dumps(config, sort_keys=True, default=_plain, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def matrix_digest(matrix) -> str:
    data = np.ascontiguousarray(np.round(np.asarray(matrix, dtype=float), 12))
    return hashlib.sha256(data.tobytes()).hexdigest()[:16]


def _plain(value):
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (set, tuple)):
        return list(value)
    return str(value)


def report_table(report: RunReport) -> pd.DataFrame:
    """Plot-ready rows: one per (record, attack), or one per record without attacks."""
    rows = []
    for record in report.records:
        certificate = record.certificate_verified
        attacks = record.attack_results or [None]
        for attack in attacks:
            rows.append({
                "epsilon": record.epsilon,
                "eta": record.eta,
                "sigma": record.sigma,
                "certificate": certificate,
                "attack_mean": None if attack is None else attack.mean,
                "attack_stderr": None if attack is None else attack.stderr,
                "policy": None if attack is None else attack.policy,
            })
    return pd.DataFrame(rows, columns=TABLE_COLUMNS)


def write_run(report: RunReport, out_dir: Path, config: Dict[str, Any]) -> Path:
    """Write report.json, table.csv, config.txt and schema.json into `out_dir`."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / REPORT_FILE).write_text(report.model_dump_json(indent=2), encoding="utf-8")
    report_table(report).to_csv(out_dir / TABLE_FILE, index=False)
    lines = [f"{key} = {json.dumps(config[key], default=_plain)}" for key in sorted(config)]
    lines.append(f"config_hash = {report.config_hash}")
    (out_dir / CONFIG_FILE).write_text("\n".join(lines) + "\n", encoding="utf-8")
    (out_dir / SCHEMA_FILE).write_text(json.dumps(RunReport.model_json_schema(), indent=2), encoding="utf-8")
    return out_dir


def load_report(run_dir: Path) -> RunReport:
    return RunReport.model_validate_json((Path(run_dir) / REPORT_FILE).read_text(encoding="utf-8"))


def _read_table(run_dir: Path) -> pd.DataFrame:
    frame = pd.read_csv(Path(run_dir) / TABLE_FILE)
    frame.insert(0, "run", Path(run_dir).name)
    return frame


def merge_tables(run_dirs: List[Path], threads: int = 0) -> pd.DataFrame:
    """Concatenate table.csv of several runs with a leading `run` column, in the given order."""
    if not run_dirs:
        return pd.DataFrame(columns=["run"] + TABLE_COLUMNS)
    with ThreadPoolExecutor(max_workers=threads or None) as pool:
        frames = list(pool.map(_read_table, run_dirs))
    return pd.concat(frames, ignore_index=True)
