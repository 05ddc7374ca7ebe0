"""
Run ledger utilities
"""
import logging
from typing import Dict, Optional

from django.db import DatabaseError
from django.db.models import Avg, Count

from runs.models import Run

logger = logging.getLogger(__name__)


def log_run(
    command: str,
    exit_code: int,
    wall_time: float,
    output_dir: str,
    config: Dict,
    rng_seed: int,
    error: Optional[BaseException] = None,
) -> Optional[Run]:
    """
    Record a run in the database

    Args:
        command: Subcommand name
        exit_code: Process exit status
        wall_time: Seconds spent in the command
        output_dir: Artifact directory
        config: Validated configuration echo
        rng_seed: Random-field seed
        error: Exception that ended the run, if any

    Returns:
        Created Run object, or None when the ledger is unavailable
    """
    try:
        return Run.objects.create(
            command=command,
            status='succeeded' if exit_code == 0 else 'failed',
            exit_code=exit_code,
            error_category=getattr(error, 'category', type(error).__name__) if error else '',
            error_message=str(error) if error else '',
            wall_time=wall_time,
            output_dir=str(output_dir),
            config=config,
            rng_seed=str(rng_seed),
        )
    except DatabaseError as e:
        logger.warning("Run ledger unavailable (%s); run %s not recorded", e, command)
        return None


def get_recent_runs(limit: int = 10, command: Optional[str] = None) -> list:
    """
    Get recent runs

    Args:
        limit: Number of runs to retrieve
        command: Restrict to one subcommand

    Returns:
        List of Run objects
    """
    runs = Run.objects.all()
    if command:
        runs = runs.filter(command=command)
    return list(runs[:limit])


def get_run_stats() -> Dict:
    """
    Get statistics about runs

    Returns:
        Dictionary with run statistics
    """
    total_runs = Run.objects.count()

    if total_runs == 0:
        return {
            'total_runs': 0,
            'failed_runs': 0,
            'average_wall_time': 0,
            'by_command': {},
        }

    avg_wall_time = Run.objects.aggregate(avg_time=Avg('wall_time'))['avg_time']
    by_command = {
        row['command']: row['count']
        for row in Run.objects.values('command').annotate(count=Count('id')).order_by('command')
    }

    return {
        'total_runs': total_runs,
        'failed_runs': Run.objects.filter(status='failed').count(),
        'average_wall_time': avg_wall_time or 0,
        'by_command': by_command,
    }
