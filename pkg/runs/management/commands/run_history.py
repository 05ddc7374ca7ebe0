from django.core.management.base import BaseCommand

from runs.serializers import COMMANDS
from utils.logger import get_recent_runs, get_run_stats


class Command(BaseCommand):
    help = 'List recent lab runs from the ledger'

    def add_arguments(self, parser):
        parser.add_argument('--limit', type=int, default=10)
        parser.add_argument('--command', dest='only', choices=COMMANDS)

    def handle(self, *args, **options):
        stats = get_run_stats()
        self.stdout.write(
            f"{stats['total_runs']} runs, {stats['failed_runs']} failed, "
            f"average wall time {stats['average_wall_time']:.2f}s"
        )
        for command, count in stats['by_command'].items():
            self.stdout.write(f"  {command}: {count}")

        for entry in get_recent_runs(options['limit'], options.get('only')):
            line = (
                f"{entry.created_at:%Y-%m-%d %H:%M:%S}  {entry.command:<17} exit {entry.exit_code}  "
                f"{entry.wall_time:8.2f}s  seed {entry.rng_seed}  {entry.output_dir}"
            )
            if entry.error_category:
                line += f"  [{entry.error_category}] {entry.error_message}"
            self.stdout.write(line)
