"""
Management command that evaluates the pipeline over hold-out splits.
"""

import pandas as pd

from sensing.features import write_frame

from ..base import PipelineCommand, write_json
from ...pipeline import ratio_label, run_sweep


class Command(PipelineCommand):
    help = 'Hold-out evaluation of context classification and contextual inference'
    command_name = 'eval'

    def add_command_arguments(self, parser):
        self.add_target_argument(parser)
        self.add_model_argument(parser)
        split = parser.add_mutually_exclusive_group()
        split.add_argument(
            '--ratio',
            type=float,
            default=None,
            help='Training share of the hold-out split, 0.2 to 0.8'
        )
        split.add_argument(
            '--sweep',
            action='store_true',
            help='Evaluate every ratio from 80/20 down to 20/80'
        )
        parser.add_argument(
            '--tau',
            type=float,
            default=None,
            help='Posterior threshold for selecting a single bank'
        )
        parser.add_argument(
            '--split',
            choices=['instance', 'block'],
            default=None,
            help='Stratified per-instance split or temporal blocks'
        )
        parser.add_argument(
            '--no-agnostic',
            action='store_true',
            help='Skip the context-agnostic comparison models'
        )

    def run(self, config, out, options):
        instances = self.read_instances(out)
        ratios = config.sweep_ratios if options.get('sweep') else (config.train_ratio,)
        targets, kinds = self.targets(options), self.model_kinds(options)

        metrics = {'split_mode': config.split_mode, 'tau': config.tau, 'ratios': {}}
        prediction_rows, confusion_rows = [], []
        results = run_sweep(instances, kinds, targets, config, ratios, with_agnostic=not options.get('no_agnostic'))
        for result in results:
            label = ratio_label(result.ratio)
            metrics['ratios'][label] = {'classifier': result.classifier, 'targets': result.metrics}
            self.stdout.write(f"{label}: context accuracy {result.classifier['accuracy']:.4f}")

            for m, context in enumerate(config.contexts):
                confusion_rows.append({
                    'ratio': label,
                    'true_context': context,
                    **dict(zip(config.contexts, result.classifier['confusion'][m])),
                })
            for (target, kind), records in result.records.items():
                for r in records:
                    prediction_rows.append({
                        'ratio': label,
                        'target': target,
                        'model': kind,
                        'subject_id': r.subject_id,
                        't_center_ms': r.t_center_ms,
                        'true_context': r.context,
                        'predicted_context': r.predicted_context,
                        'truth': r.truth,
                        'prediction': r.prediction,
                        **{f'p_{c}': p for c, p in zip(config.contexts, r.posterior)},
                        **{f'bank_{c}': b for c, b in zip(config.contexts, r.bank_predictions)},
                    })

        write_json(out / 'metrics.json', metrics)
        write_frame(pd.DataFrame(prediction_rows), out / 'predictions.csv')
        write_frame(pd.DataFrame(confusion_rows, columns=['ratio', 'true_context', *config.contexts]), out / 'confusion.csv')
        return f"Evaluated {len(ratios)} split(s); metrics in {out / 'metrics.json'}"
