"""
Management command that renders a plain-text report of the evaluation and ranking.
"""

import json

import pandas as pd

from sensing.exceptions import MissingFile

from ..base import PipelineCommand


def classifier_table(metrics):
    rows = []
    for label, entry in metrics['ratios'].items():
        row = {'split': label, 'accuracy': entry['classifier']['accuracy']}
        for context in entry['classifier']['contexts']:
            row[f'tpr_{context}'] = entry['classifier']['per_class'][context]['tpr']
        rows.append(row)
    return pd.DataFrame(rows)


def confusion_table(metrics, label):
    entry = metrics['ratios'][label]['classifier']
    contexts = entry['contexts']
    return pd.DataFrame(entry['confusion'], index=contexts, columns=contexts)


def mae_table(metrics):
    rows = []
    for label, entry in metrics['ratios'].items():
        for target, kinds in entry['targets'].items():
            for kind, m in kinds.items():
                rows.append({
                    'split': label,
                    'target': target,
                    'model': kind,
                    'mae': m['mae'],
                    'mae_agnostic': m.get('mae_agnostic'),
                    **{f'mae_{c}': m['mae_per_context'][c] for c in m['contexts']},
                })
    return pd.DataFrame(rows)


class Command(PipelineCommand):
    help = 'Summarize metrics.json and relevance.csv as text tables'
    command_name = 'report'

    def run(self, config, out, options):
        metrics_path = out / 'metrics.json'
        if not metrics_path.is_file():
            raise MissingFile(f"No metrics at {metrics_path}; run the eval command first")
        metrics = json.loads(metrics_path.read_text(encoding='utf-8'))

        sections = [
            ('Context classification', classifier_table(metrics)),
        ]
        first = next(iter(metrics['ratios']))
        sections.append((f'Confusion matrix ({first}, rows true)', confusion_table(metrics, first)))
        sections.append(('Inference MAE, contextual vs context-agnostic', mae_table(metrics)))

        relevance_path = out / 'relevance.csv'
        if relevance_path.is_file():
            sections.append(('Biomarker relevance (%)', pd.read_csv(relevance_path)))

        text = '\n\n'.join(
            f"{title}\n{'=' * len(title)}\n{table.to_string(float_format=lambda v: f'{v:.4f}')}"
            for title, table in sections
        ) + '\n'
        (out / 'report.txt').write_text(text, encoding='utf-8')
        self.stdout.write(text)
        return f"Report written to {out / 'report.txt'}"
