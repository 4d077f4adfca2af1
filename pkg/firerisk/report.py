"""Report rendering

`evaluate` persists everything it measured in one JSON document
(`evaluation/metrics.json`); `render` turns that document into the report
files without recomputing anything:

* `<model>.json` / `<model>.txt`: per-class precision, recall, F1, support
* `<model>_confusion.csv`: raw confusion counts
* `confusion_all.csv` / `.txt`: row-normalized matrices of every model
* `roc_<model>.csv`, `roc.svg`: ROC points (binary runs)
* `threshold_curve.csv`, `threshold.svg`: F1 over the threshold grid
* `vif.csv`, `correlation.csv`, `correlation.svg`: feature diagnostics
* `monthly_counts.csv/.svg`, `frp_by_prcp.csv/.svg`: fused-data summaries

SVG files carry no creation date and a fixed hash salt, so equal inputs give
byte-identical files.
"""
import json
import logging
import os

import matplotlib
matplotlib.use('Agg')
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
import pandas as pd  # noqa: E402

from .ingest import write_frame  # noqa: E402
from .metrics import ClassificationReport  # noqa: E402

logger = logging.getLogger(__name__)

# lower edges of the daily precipitation bins, millimetres
PRCP_EDGES = (0.0, 0.1, 1.0, 5.0, 10.0, 25.0)

MONTHS = ('Jan', 'Feb', 'Mar', 'Apr', 'May', 'Jun', 'Jul', 'Aug', 'Sep',
          'Oct', 'Nov', 'Dec')

_SVG_STYLE = {'svg.hashsalt': 'firerisk', 'svg.fonttype': 'path'}


def monthly_counts(records):
    """Fire detections and mean FRP per calendar month

    Returns
    -------
    list(dict) with one row per month, months without detections included
    """
    months = np.array([r.event.timestamp.month for r in records], dtype=int)
    frp = np.array([r.event.frp for r in records], dtype=float)
    rows = []
    for m in range(1, 13):
        members = frp[months == m]
        rows.append({'month': m, 'name': MONTHS[m - 1],
                     'count': int(len(members)),
                     'mean_frp': float(members.mean()) if len(members)
                     else None})
    return rows


def prcp_bin_labels(edges=PRCP_EDGES):
    labels = [f'{lo:g}-{hi:g}' for lo, hi in zip(edges, edges[1:])]
    return labels + [f'>={edges[-1]:g}']


def frp_by_precipitation(records, edges=PRCP_EDGES):
    """FRP summary per daily precipitation bin

    A row falls in bin i when edges[i] <= prcp < edges[i + 1]; the last bin
    is open-ended.
    """
    prcp = np.array([r.weather.prcp for r in records], dtype=float)
    frp = np.array([r.event.frp for r in records], dtype=float)
    bins = np.searchsorted(np.asarray(edges), prcp, side='right') - 1
    rows = []
    for i, name in enumerate(prcp_bin_labels(edges)):
        members = frp[bins == i]
        empty = len(members) == 0
        rows.append({'prcp_bin': name, 'count': int(len(members)),
                     'mean_frp': None if empty else float(members.mean()),
                     'median_frp': None if empty
                     else float(np.median(members)),
                     'p90_frp': None if empty
                     else float(np.quantile(members, 0.9))})
    return rows


def dump_json(data, path):
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, 'w') as f:
        f.write(json.dumps(data, sort_keys=True, indent=1) + '\n')


def load_json(path):
    if not os.path.exists(path):
        raise FileNotFoundError(path)
    with open(path) as f:
        return json.load(f)


def _write_text(text, path):
    with open(path, 'w') as f:
        f.write(text)


def combined_confusion(reports):
    """Row-normalized confusion matrices of several models in one frame

    Parameters
    ----------
    reports: list of (model name, ClassificationReport)
    """
    rows = []
    for name, result in reports:
        percent = result.normalized
        for i, true_name in enumerate(result.class_names):
            row = {'model': name, 'true': true_name}
            for j, predicted in enumerate(result.class_names):
                row[f'pred_{predicted}'] = float(percent[i, j])
            rows.append(row)
    return pd.DataFrame(rows)


def combined_confusion_text(reports):
    lines = []
    for name, result in reports:
        width = max(len(n) for n in result.class_names + ['true'])
        lines.append(f'{name} (row %)')
        lines.append(f'{"true":>{width}}  ' + '  '.join(
            f'{n:>9}' for n in result.class_names))
        for i, true_name in enumerate(result.class_names):
            lines.append(f'{true_name:>{width}}  ' + '  '.join(
                f'{v:9.2f}' for v in result.normalized[i]))
        lines.append('')
    return '\n'.join(lines)


def _confusion_frame(result):
    frame = pd.DataFrame(result.matrix, columns=[f'pred_{n}' for n in
                                                 result.class_names])
    frame.insert(0, 'true', result.class_names)
    return frame


def _save(fig, path):
    fig.savefig(path, format='svg', metadata={'Date': None})
    plt.close(fig)


def plot_roc(curves, path):
    """curves: list of (model name, auc, fpr, tpr)"""
    with plt.rc_context(_SVG_STYLE):
        fig, ax = plt.subplots(figsize=(6, 5))
        ax.plot([0, 1], [0, 1], color='grey', linestyle='--', linewidth=0.8)
        for name, auc, fpr, tpr in curves:
            ax.plot(fpr, tpr, label=f'{name} (AUC {auc:.3f})')
        ax.set_xlabel('False positive rate')
        ax.set_ylabel('True positive rate')
        ax.set_xlim(0, 1)
        ax.set_ylim(0, 1)
        ax.legend(loc='lower right', fontsize='small')
        _save(fig, path)


def plot_threshold(curve, chosen, path):
    thresholds, scores = zip(*curve)
    with plt.rc_context(_SVG_STYLE):
        fig, ax = plt.subplots(figsize=(6, 4))
        ax.plot(thresholds, scores)
        ax.axvline(chosen, color='red', linestyle='--', linewidth=0.8)
        ax.set_xlabel('Decision threshold')
        ax.set_ylabel('F1 (high class)')
        _save(fig, path)


def plot_correlation(matrix, names, path):
    with plt.rc_context(_SVG_STYLE):
        fig, ax = plt.subplots(figsize=(8, 7))
        image = ax.imshow(np.asarray(matrix), cmap='RdBu_r', vmin=-1, vmax=1,
                          interpolation='nearest')
        ax.set_xticks(range(len(names)))
        ax.set_xticklabels(names, rotation=90, fontsize='small')
        ax.set_yticks(range(len(names)))
        ax.set_yticklabels(names, fontsize='small')
        fig.colorbar(image, ax=ax)
        fig.tight_layout()
        _save(fig, path)


def plot_bars(labels, values, xlabel, ylabel, path):
    with plt.rc_context(_SVG_STYLE):
        fig, ax = plt.subplots(figsize=(7, 4))
        ax.bar(range(len(labels)), values)
        ax.set_xticks(range(len(labels)))
        ax.set_xticklabels(labels)
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        fig.tight_layout()
        _save(fig, path)


def render(evaluation, directory):
    """Write every report file for a persisted evaluation

    Parameters
    ----------
    evaluation: dict
        Contents of `evaluation/metrics.json`
    directory: str
        Destination, created when missing

    Returns
    -------
    Sorted list of the files written
    """
    os.makedirs(directory, exist_ok=True)
    written = []

    def path_of(name):
        path = os.path.join(directory, name)
        written.append(path)
        return path

    reports, curves = [], []
    summary = []
    for name in evaluation['order']:
        entry = evaluation['models'][name]
        result = ClassificationReport.from_dict(entry['report'])
        reports.append((name, result))
        dump_json(entry['report'], path_of(f'{name}.json'))
        text = result.to_text(title=name)
        if entry.get('threshold') is not None:
            text += f'decision threshold {entry["threshold"]:.2f}\n'
        if entry.get('auc') is not None:
            text += f'ROC AUC {entry["auc"]:.4f}\n'
        _write_text(text, path_of(f'{name}.txt'))
        summary.append(text)
        write_frame(_confusion_frame(result),
                    path_of(f'{name}_confusion.csv'))
        roc = entry.get('roc')
        if roc is not None:
            write_frame(pd.DataFrame(roc, columns=['fpr', 'tpr',
                                                   'threshold']),
                        path_of(f'roc_{name}.csv'))
            curves.append((name, entry['auc'], roc['fpr'], roc['tpr']))
    _write_text('\n'.join(summary), path_of('summary.txt'))
    write_frame(combined_confusion(reports), path_of('confusion_all.csv'))
    _write_text(combined_confusion_text(reports),
                path_of('confusion_all.txt'))
    if curves:
        plot_roc(curves, path_of('roc.svg'))

    threshold = evaluation.get('threshold')
    if threshold is not None:
        write_frame(pd.DataFrame(threshold['curve'],
                                 columns=['threshold', 'f1']),
                    path_of('threshold_curve.csv'))
        plot_threshold(threshold['curve'], threshold['threshold'],
                       path_of('threshold.svg'))

    if evaluation.get('vif') is not None:
        write_frame(pd.DataFrame(evaluation['vif'],
                                 columns=['feature', 'vif']),
                    path_of('vif.csv'))
    correlation = evaluation.get('correlation')
    if correlation is not None:
        names = correlation['features']
        frame = pd.DataFrame(correlation['matrix'], columns=names)
        frame.insert(0, 'feature', names)
        write_frame(frame, path_of('correlation.csv'))
        plot_correlation(correlation['matrix'], names,
                         path_of('correlation.svg'))

    eda = evaluation.get('eda')
    if eda is not None:
        monthly = pd.DataFrame(eda['monthly'])
        write_frame(monthly, path_of('monthly_counts.csv'))
        plot_bars(list(monthly['name']), list(monthly['count']), 'Month',
                  'Fire detections', path_of('monthly_counts.svg'))
        prcp = pd.DataFrame(eda['frp_by_prcp'])
        write_frame(prcp, path_of('frp_by_prcp.csv'))
        plot_bars(list(prcp['prcp_bin']),
                  [0.0 if v is None or np.isnan(v) else v
                   for v in prcp['mean_frp']],
                  'Daily precipitation (mm)', 'Mean FRP (MW)',
                  path_of('frp_by_prcp.svg'))
    logger.info('rendered %d report files into %s', len(written), directory)
    return sorted(written)
