"""
Summaries and static plots of campaign results.
"""
import logging
import os
from typing import Iterable, Optional, Union

import matplotlib

matplotlib.use('Agg')
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
import pandas as pd  # noqa: E402
import seaborn as sns  # noqa: E402

from src.channel import to_db  # noqa: E402
from .campaign import ResultRow  # noqa: E402

logger = logging.getLogger(__name__)

AXIS_LABELS = {
    'p_max': 'P_max (dBm)',
    'M': 'STAR-RIS elements M',
    'N': 'BS antennas N',
    'kappa_g': 'cascaded error bound κ',
    'ris_x': 'STAR-RIS x-coordinate (m)',
    'none': '',
}
METRICS = ('see', 'ssr', 'power')


def _frame(rows: Union[pd.DataFrame, Iterable[ResultRow]]) -> pd.DataFrame:
    if isinstance(rows, pd.DataFrame):
        return rows.copy()
    return pd.DataFrame([r.record() for r in rows])


def summary_table(rows) -> pd.DataFrame:
    """
    Mean and standard error per (scheme, value).

    Returns:
        One row per group with <metric>_mean, <metric>_sem and the seed count
    """
    df = _frame(rows)
    if df.empty:
        raise ValueError("summary needs at least one result row")
    grouped = df.groupby(['scheme', 'value'], dropna=False, sort=True)
    out = grouped[list(METRICS)].agg(['mean', 'sem'])
    out.columns = [f"{metric}_{stat}" for metric, stat in out.columns]
    for metric in METRICS:
        out[f"{metric}_sem"] = out[f"{metric}_sem"].fillna(0.0)
    out['seeds'] = grouped.size()
    out['converged'] = grouped['converged'].mean()
    return out.reset_index()


def amplitude_table(rows) -> pd.DataFrame:
    """Element-wise mean β^r and β^t over converged runs, per scheme."""
    df = _frame(rows)
    df = df[(df['converged'].astype(bool)) & (df['status'] == 'ok')]
    records = []
    for scheme, group in df.groupby('scheme', sort=True):
        parsed = [(np.array(r.split(), dtype=float), np.array(t.split(), dtype=float))
                  for r, t in zip(group['beta_r'].fillna(''), group['beta_t'].fillna('')) if r and t]
        sizes = {b.size for pair in parsed for b in pair}
        if not parsed or len(sizes) != 1:
            continue
        beta_r = np.mean([p[0] for p in parsed], axis=0)
        beta_t = np.mean([p[1] for p in parsed], axis=0)
        for m, (br, bt) in enumerate(zip(beta_r, beta_t)):
            records.append({'scheme': scheme, 'element': m + 1, 'beta_r': br, 'beta_t': bt})
    return pd.DataFrame(records, columns=['scheme', 'element', 'beta_r', 'beta_t'])


def plot_see(summary: pd.DataFrame, axis: str, path: str) -> None:
    sns.set_theme(style='whitegrid')
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for scheme, group in summary.groupby('scheme', sort=True):
        x = group['value'].to_numpy(dtype=float)
        if axis == 'p_max':
            x = np.array([to_db(v) + 30 for v in x])
        if axis == 'none':
            x = np.zeros(len(group))
        ax.errorbar(x, group['see_mean'], yerr=group['see_sem'], marker='o', capsize=3, label=scheme)
    ax.set_xlabel(AXIS_LABELS.get(axis, axis))
    ax.set_ylabel('SEE (bits/s/Hz/W)')
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, format='svg')
    plt.close(fig)


def plot_amplitudes(amplitudes: pd.DataFrame, path: str) -> None:
    long = amplitudes.melt(id_vars=['scheme', 'element'], value_vars=['beta_r', 'beta_t'],
                           var_name='space', value_name='amplitude')
    sns.set_theme(style='whitegrid')
    grid = sns.catplot(data=long, x='element', y='amplitude', hue='space', col='scheme', kind='bar',
                       height=3.5, aspect=1.4)
    grid.set_axis_labels('element', 'β')
    grid.savefig(path, format='svg')
    plt.close(grid.figure)


def summarize(rows, out_dir: Optional[str] = None, axis: Optional[str] = None) -> pd.DataFrame:
    """
    Write summary.csv, the SEE plot and the amplitude report.

    Args:
        rows: ResultRows, a DataFrame, or the path of a results.csv
        out_dir: destination, defaults to the csv's directory
        axis: sweep axis, read from the rows when omitted

    Returns:
        The summary table
    """
    if isinstance(rows, str):
        out_dir = out_dir or os.path.dirname(os.path.abspath(rows))
        rows = pd.read_csv(rows, dtype={'beta_r': str, 'beta_t': str})
    df = _frame(rows)
    summary = summary_table(df)
    out_dir = out_dir or '.'
    os.makedirs(out_dir, exist_ok=True)
    axis = axis or str(df['sweep'].iloc[0])
    summary.to_csv(os.path.join(out_dir, 'summary.csv'), index=False)
    plot_see(summary, axis, os.path.join(out_dir, f'see_vs_{axis}.svg'))
    amplitudes = amplitude_table(df)
    amplitudes.to_csv(os.path.join(out_dir, 'amplitudes.csv'), index=False)
    if amplitudes.empty:
        logger.info("No converged runs with amplitudes, skipping amplitudes.svg")
    else:
        plot_amplitudes(amplitudes, os.path.join(out_dir, 'amplitudes.svg'))
    logger.info(f"Summary of {len(df)} rows written to {out_dir}")
    return summary
