"""
Campaign runner: one row per (scheme, sweep value, seed), streamed to CSV.
"""
import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import asdict, dataclass
from typing import Iterable, List, Optional, Tuple

import numpy as np
import pandas as pd

from src.channel import generate_realization
from src.config import RESULT_COLUMNS, TIMING_COLUMNS, WORKERS
from src.metrics import BeamformingState, Protocol
from src.optimizer import InfeasibleInstanceError, ao_run, oma_baseline, ts_two_layer
from .config_loader import ExperimentConfig, split_scheme

logger = logging.getLogger(__name__)

RESULTS_FILE = 'results.csv'
TIMINGS_FILE = 'timings.csv'
SORT_KEYS = ['scheme', 'value', 'seed']


@dataclass
class ResultRow:
    scheme: str
    sweep: str
    value: float
    seed: int
    see: float
    ssr: float
    power: float
    iterations: int
    converged: bool
    status: str
    mean_beta_r: float
    mean_beta_t: float
    beta_r: str
    beta_t: str
    wall_ms: float = 0.0

    def record(self) -> dict:
        data = asdict(self)
        return {c: data[c] for c in RESULT_COLUMNS}

    @property
    def key(self) -> Tuple[str, str, int]:
        return row_key(self.scheme, self.value, self.seed)

    @classmethod
    def from_record(cls, record: dict) -> "ResultRow":
        values = {c: record[c] for c in RESULT_COLUMNS}
        values['beta_r'] = '' if pd.isna(values['beta_r']) else str(values['beta_r'])
        values['beta_t'] = '' if pd.isna(values['beta_t']) else str(values['beta_t'])
        values['seed'] = int(values['seed'])
        values['iterations'] = int(values['iterations'])
        values['converged'] = bool(values['converged'])
        return cls(**values)


def row_key(scheme: str, value: Optional[float], seed: int) -> Tuple[str, str, int]:
    if value is None or (isinstance(value, float) and math.isnan(value)):
        text = ''
    else:
        text = f"{float(value):.12g}"
    return scheme, text, int(seed)


def _amplitudes(states: List[BeamformingState]) -> Tuple[np.ndarray, np.ndarray]:
    if not states:
        return np.zeros(0), np.zeros(0)
    beta_r = np.mean([s.beta[0] for s in states], axis=0)
    beta_t = np.mean([s.beta[1] for s in states], axis=0)
    return beta_r, beta_t


def _fmt(values: np.ndarray) -> str:
    return ' '.join(f"{v:.4f}" for v in values)


def run_point(config: ExperimentConfig, scheme: str, value: Optional[float], seed: int) -> ResultRow:
    """
    One scheme on one realization.

    Infeasible instances and unexpected failures are recorded as
    non-converged rows with zero secrecy rate.
    """
    params, geometry, uncertainty = config.at(value)
    cfg = config.optimizer.model_copy(update={'seed': seed})
    access, protocol = split_scheme(scheme)
    sweep = config.campaign.sweep
    value = float('nan') if value is None else float(value)
    start = time.perf_counter()
    states: List[BeamformingState] = []
    try:
        channels = generate_realization(params, geometry, uncertainty, seed)
        if access == 'OMA':
            oma = oma_baseline(protocol, channels, params, cfg)
            ssr, power, see = oma.ssr, oma.power, oma.see
            iterations, converged = oma.iterations, oma.converged
            states = [s.result.state for s in oma.slots if s.ok]
            status = 'ok' if all(s.ok for s in oma.slots) else 'slot_infeasible'
        else:
            if protocol is Protocol.TS:
                result = ts_two_layer(channels, params, cfg).result
            else:
                result = ao_run(protocol, channels, params, cfg)
            ssr, power, see = result.report.ssr, result.report.power, result.report.see
            iterations, converged = result.iterations, result.converged
            states = [result.state]
            status = 'ok'
    except InfeasibleInstanceError as e:
        logger.warning(f"{scheme} value={value} seed={seed}: {e}")
        ssr, power, see, iterations, converged, status = 0.0, params.static_power, 0.0, 0, False, 'infeasible'
    except Exception as e:
        logger.exception(f"{scheme} value={value} seed={seed} failed: {e}")
        ssr, power, see, iterations, converged, status = 0.0, params.static_power, 0.0, 0, False, 'error'
    beta_r, beta_t = _amplitudes(states)
    return ResultRow(
        scheme=scheme, sweep=sweep, value=value, seed=seed, see=see, ssr=ssr, power=power,
        iterations=iterations, converged=converged, status=status,
        mean_beta_r=float(np.mean(beta_r)) if beta_r.size else float('nan'),
        mean_beta_t=float(np.mean(beta_t)) if beta_t.size else float('nan'),
        beta_r=_fmt(beta_r), beta_t=_fmt(beta_t),
        wall_ms=1e3 * (time.perf_counter() - start),
    )


def _completed(path: str) -> set:
    if not os.path.exists(path):
        return set()
    df = pd.read_csv(path)
    return {row_key(r.scheme, r.value, r.seed) for r in df.itertuples()}


def _append(path: str, records: List[dict], columns: List[str]) -> None:
    try:
        pd.DataFrame(records, columns=columns).to_csv(path, mode='a', header=not os.path.exists(path), index=False)
    except OSError as e:
        logger.error(f"Failed to write {path}: {e}")
        raise


def _sort_file(path: str, dtype: Optional[dict] = None) -> pd.DataFrame:
    df = pd.read_csv(path, dtype=dtype)
    df = df.sort_values(SORT_KEYS, kind='mergesort').reset_index(drop=True)
    df.to_csv(path, index=False)
    return df


def campaign_tasks(config: ExperimentConfig) -> Iterable[Tuple[str, Optional[float], int]]:
    for value in config.campaign.points:
        for seed in config.campaign.seed_list:
            for scheme in config.campaign.schemes:
                yield scheme, value, seed


def run_campaign(config: ExperimentConfig, workers: Optional[int] = None) -> List[ResultRow]:
    """
    Run every (scheme, value, seed) of a config and stream rows to results.csv.

    Rows already present in the output directory are skipped, so an
    interrupted campaign resumes where it stopped. The file is sorted by
    key once all runs are done.

    Args:
        config: validated experiment configuration
        workers: process count; 1 runs inline

    Returns:
        Every row of the final results.csv
    """
    out_dir = config.output_dir
    os.makedirs(out_dir, exist_ok=True)
    results_path = os.path.join(out_dir, RESULTS_FILE)
    timings_path = os.path.join(out_dir, TIMINGS_FILE)
    done = _completed(results_path)
    pending = [t for t in campaign_tasks(config) if row_key(*t) not in done]
    workers = max(1, workers or WORKERS)
    logger.info(f"Campaign: {len(pending)} runs pending, {len(done)} already done, {workers} workers")

    def write(row: ResultRow) -> None:
        _append(results_path, [row.record()], RESULT_COLUMNS)
        _append(timings_path, [{'scheme': row.scheme, 'value': row.value, 'seed': row.seed,
                                'wall_ms': round(row.wall_ms, 1)}], TIMING_COLUMNS)
        logger.info(f"{row.scheme} value={row.value:g} seed={row.seed}: SEE {row.see:.6g} ({row.status})")

    if workers == 1:
        for task in pending:
            write(run_point(config, *task))
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(run_point, config, *task) for task in pending]
            for future in as_completed(futures):
                write(future.result())

    if not os.path.exists(results_path):
        return []
    df = _sort_file(results_path, {'beta_r': str, 'beta_t': str})
    if os.path.exists(timings_path):
        _sort_file(timings_path)
    return [ResultRow.from_record(r) for r in df.to_dict('records')]
