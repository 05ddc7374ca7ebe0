"""
python manage.py lab <command> [--config PATH] [--output DIR] [--seed N] ...
"""
import logging
from pathlib import Path

from django.core.management.base import BaseCommand, CommandError

from runs.config import config_to_dict, parse_config
from runs.dispatch import run
from runs.serializers import COMMANDS
from runs.storage import RunArtifacts
from utils.errors import LabError, LabIoError, exit_code_for
from utils.logger import log_run

logger = logging.getLogger(__name__)


class Command(BaseCommand):
    help = 'Run one lab experiment and write its artifacts'

    def add_arguments(self, parser):
        parser.add_argument('command', choices=COMMANDS, help='Experiment to run')
        parser.add_argument('--config', help='Key-value configuration document')
        parser.add_argument('--output', help='Artifact directory (default under LAB_OUTPUT_DIR)')
        parser.add_argument('--seed', help='Random-field seed, 0 to 2^64-1')
        parser.add_argument('--grid-points', dest='grid_points', help='Points per axis')
        parser.add_argument('--extent', help='Domain length L')
        parser.add_argument(
            '--set', dest='assignments', action='append', default=[], metavar='KEY=VALUE',
            help='Override any configuration key; may be repeated',
        )

    def _overrides(self, options) -> dict:
        overrides = {'command': options['command']}
        for assignment in options['assignments']:
            key, separator, value = assignment.partition('=')
            if not separator:
                raise CommandError(f"--set expects KEY=VALUE, got '{assignment}'", returncode=2)
            overrides[key.strip()] = value
        flags = {
            'output': 'output_dir',
            'seed': 'rng_seed',
            'grid_points': 'grid.points',
            'extent': 'grid.extent',
        }
        for option, key in flags.items():
            if options.get(option) is not None:
                overrides[key] = options[option]
        return overrides

    def _load(self, options):
        text = ''
        if options.get('config'):
            try:
                text = Path(options['config']).read_text(encoding='utf-8')
            except OSError as e:
                raise LabIoError(f"Error reading {options['config']}: {str(e)}") from e
        return parse_config(text, self._overrides(options))

    def handle(self, *args, **options):
        try:
            cfg = self._load(options)
        except LabError as e:
            code = exit_code_for(e)
            if options.get('output'):
                RunArtifacts(options['output']).write_error(e)
            log_run(options['command'], code, 0.0, options.get('output') or '', {}, options.get('seed') or 0, error=e)
            raise CommandError(str(e), returncode=code)

        try:
            outcome = run(cfg)
        except LabError as e:
            # the output directory itself could not be written
            code = exit_code_for(e)
            log_run(cfg.command, code, 0.0, cfg.output_dir or '', config_to_dict(cfg), cfg.rng_seed, error=e)
            raise CommandError(str(e), returncode=code)

        log_run(
            cfg.command,
            outcome.exit_code,
            outcome.wall_time,
            str(outcome.output_dir),
            config_to_dict(cfg),
            cfg.rng_seed,
            error=outcome.error,
        )

        if outcome.exit_code != 0:
            raise CommandError(
                f"{cfg.command} failed ({outcome.error}); details in {outcome.output_dir}",
                returncode=outcome.exit_code,
            )

        self.stdout.write(self.style.SUCCESS(
            f"{cfg.command} finished in {outcome.wall_time:.2f}s; artifacts in {outcome.output_dir}"
        ))
        for key, value in outcome.report.items():
            self.stdout.write(f"  {key}: {value}")
