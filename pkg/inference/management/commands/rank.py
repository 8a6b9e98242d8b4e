"""
Management command that ranks the five ECG biomarkers per target and context.
"""

from sensing.features import write_frame

from ..base import BUNDLE_FILE, MODELS_DIR, PipelineCommand
from ...biomarker import rank_groups, relevance_frame
from ...bundle import load_bundle


class Command(PipelineCommand):
    help = 'Biomarker relevance per target and context from the trained banks'
    command_name = 'rank'

    def add_command_arguments(self, parser):
        self.add_target_argument(parser)
        self.add_model_argument(parser)

    def run(self, config, out, options):
        bundle = load_bundle(out / MODELS_DIR / BUNDLE_FILE)
        targets, kinds = self.targets(options), self.model_kinds(options)
        groups = [g for (t, k), g in sorted(bundle.groups.items()) if t in targets and k in kinds]
        relevances = rank_groups(groups, config.clusters)

        order = {c: i for i, c in enumerate(config.contexts)}
        relevances.sort(key=lambda r: (r.target, order.get(r.context, len(order))))
        frame = relevance_frame(relevances, config.clusters)
        write_frame(frame, out / 'relevance.csv')
        for r in relevances:
            top = max(r.rel, key=r.rel.get)
            self.stdout.write(f"{r.target}/{r.context}: {top} {r.rel[top]:.1f}%")
        return f"Ranked {len(relevances)} bank(s); relevance in {out / 'relevance.csv'}"
