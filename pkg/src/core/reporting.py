#!/usr/bin/env python3
"""
Redescribe Reporting
Run reports, resource accounting and report comparison

report.csv holds one deterministic row per (run, output set). Wall time and
memory go to resources.csv so that repeated runs reproduce report.csv byte
for byte. summary.csv aggregates every score as mean and standard deviation
over the runs.
"""

import hashlib
import logging
import math
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Optional, Sequence

import numpy as np
import pandas as pd
import psutil
import yaml
from scipy.stats import wilcoxon

from engine.metrics import SetScores

SCORE_COLUMNS = (
    'j_sc', 'a_p_sc', 'aaj_sc', 'aej_sc', 'comp_sc', 'total_sc',
    'u_j_sc', 'u_a_p_sc', 'u_aaj_sc', 'u_aej_sc', 'u_comp_sc', 'u_total_sc',
    'avg_jaccard', 'u_avg_jaccard', 'entity_coverage', 'attribute_coverage',
)
HIGHER_IS_BETTER = ('avg_jaccard', 'u_avg_jaccard', 'entity_coverage', 'attribute_coverage')
FLOAT_FORMAT = '%.12g'

logger = logging.getLogger(__name__)


class ReportError(ValueError):
    """Raised for reports that cannot be read or compared."""


class ResourceMonitor:
    """Wall clock and peak resident memory of the current process.

    Instances are callable so that they can be handed to a redescription
    store as its monitor; every call samples memory and tracks the store size.
    """

    def __init__(self):
        self.process = psutil.Process()
        self.started = time.perf_counter()
        self.peak_rss = self.process.memory_info().rss
        self.peak_store = 0
        self.samples = 1

    def sample(self) -> int:
        rss = self.process.memory_info().rss
        self.peak_rss = max(self.peak_rss, rss)
        self.samples += 1
        return rss

    def __call__(self, event: str, size: int):
        self.peak_store = max(self.peak_store, size)
        self.sample()

    def stop(self) -> Dict[str, float]:
        self.sample()
        return {
            'wall_time_s': time.perf_counter() - self.started,
            'peak_rss_mb': self.peak_rss / (1024 * 1024),
            'samples': self.samples,
        }


@dataclass
class RunRecord:
    """Scores of one output set of one run."""
    command: str
    run: int
    seed: int
    set_index: int
    store_peak: int
    scores: SetScores
    config_digest: str = ''
    master_seed: int = 0

    def row(self) -> Dict[str, Any]:
        row: Dict[str, Any] = {
            'command': self.command,
            'run': self.run,
            'master_seed': self.master_seed,
            'seed': self.seed,
            'set': self.set_index,
            'size': self.scores.size,
            'store_peak': self.store_peak,
            'config_digest': self.config_digest,
        }
        values = self.scores.as_dict()
        row.update({name: values[name] for name in SCORE_COLUMNS})
        return row


def config_digest(data: Dict[str, Any]) -> str:
    """Short stable digest of a configuration mapping."""
    text = yaml.safe_dump(data, sort_keys=True)
    return hashlib.sha256(text.encode('utf-8')).hexdigest()[:12]


def report_frame(records: Sequence[RunRecord]) -> pd.DataFrame:
    return pd.DataFrame([r.row() for r in records])


def summarize(report: pd.DataFrame) -> pd.DataFrame:
    """Mean and standard deviation of every score per output set, over runs."""
    rows = []
    for set_index, group in report.groupby('set', sort=True):
        row: Dict[str, Any] = {'set': set_index, 'runs': len(group)}
        for column in ('size', 'store_peak') + SCORE_COLUMNS:
            values = group[column].astype(float)
            row[f"{column}_mean"] = values.mean()
            row[f"{column}_std"] = values.std(ddof=0)
        rows.append(row)
    return pd.DataFrame(rows)


def write_report(
    out_dir: Path,
    records: Sequence[RunRecord],
    resources: Sequence[Dict[str, Any]],
) -> Dict[str, Path]:
    """Write report.csv, summary.csv and resources.csv into ``out_dir``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {
        'report': out_dir / 'report.csv',
        'summary': out_dir / 'summary.csv',
        'resources': out_dir / 'resources.csv',
    }
    report = report_frame(records)
    report.to_csv(paths['report'], index=False, float_format=FLOAT_FORMAT,
                  lineterminator='\n')
    summarize(report).to_csv(paths['summary'], index=False,
                             float_format=FLOAT_FORMAT, lineterminator='\n')
    pd.DataFrame(list(resources)).to_csv(
        paths['resources'], index=False, float_format=FLOAT_FORMAT, lineterminator='\n'
    )
    return paths


def read_report(path: Path) -> pd.DataFrame:
    path = Path(path)
    if path.is_dir():
        path = path / 'report.csv'
    if not path.exists():
        raise ReportError(f"Report not found: {path}")
    report = pd.read_csv(path)
    missing = {'run', 'set'} - set(report.columns)
    if missing:
        raise ReportError(f"{path} is not a run report (missing {sorted(missing)})")
    return report


def signed_rank_pvalue(differences: np.ndarray) -> Optional[float]:
    """One-sided exact signed-rank p-value that the differences are positive.

    None when there are fewer than two paired runs.
    """
    differences = np.asarray(differences, dtype=float)
    differences = differences[~np.isnan(differences)]
    if len(differences) < 2:
        return None
    if np.all(differences == 0):
        return 1.0
    result = wilcoxon(differences, alternative='greater', method='exact')
    return float(result.pvalue)


def compare_reports(report_a: pd.DataFrame, report_b: pd.DataFrame) -> pd.DataFrame:
    """Per-measure mean deltas (B - A) and the p-value that A is better than B."""
    runs_a = report_a.groupby('set')['run'].nunique().to_dict()
    runs_b = report_b.groupby('set')['run'].nunique().to_dict()
    if runs_a != runs_b:
        raise ReportError(
            f"Reports have different run counts per set: {runs_a} vs {runs_b}"
        )
    merged = report_a.merge(report_b, on=['set', 'run'], suffixes=('_a', '_b'))
    rows = []
    for set_index, group in merged.groupby('set', sort=True):
        n_runs = len(group)
        for column in SCORE_COLUMNS:
            a = group[f"{column}_a"].astype(float).to_numpy()
            b = group[f"{column}_b"].astype(float).to_numpy()
            # Positive differences favour A
            advantage = a - b if column in HIGHER_IS_BETTER else b - a
            pvalue = signed_rank_pvalue(advantage)
            note = ''
            if pvalue is None:
                note = 'skipped: fewer than 2 runs'
            rows.append({
                'set': set_index,
                'measure': column,
                'better': 'higher' if column in HIGHER_IS_BETTER else 'lower',
                'mean_a': float(np.nanmean(a)) if n_runs else math.nan,
                'mean_b': float(np.nanmean(b)) if n_runs else math.nan,
                'mean_delta': float(np.nanmean(b - a)) if n_runs else math.nan,
                'runs': n_runs,
                'pvalue_a_better': math.nan if pvalue is None else pvalue,
                'note': note,
            })
    if rows and all(r['note'] for r in rows):
        logger.warning("Significance test skipped: a single run per report")
    return pd.DataFrame(rows)


def write_comparison(comparison: pd.DataFrame, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    comparison.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator='\n')
    return path


def resources_row(command: str, run: int, seed: int, usage: Dict[str, float],
                  store_peak: int) -> Dict[str, Any]:
    row: Dict[str, Any] = {'command': command, 'run': run, 'seed': seed}
    row.update(usage)
    row['store_peak'] = store_peak
    return row
