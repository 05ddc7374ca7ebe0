from django.db import models


class Run(models.Model):
    """Ledger entry for one command-line run"""

    STATUS_CHOICES = [
        ('succeeded', 'Succeeded'),
        ('failed', 'Failed'),
    ]

    command = models.CharField(max_length=32)
    status = models.CharField(max_length=16, choices=STATUS_CHOICES)
    exit_code = models.IntegerField(default=0)
    error_category = models.CharField(max_length=32, blank=True)
    error_message = models.TextField(blank=True)
    wall_time = models.FloatField(help_text="Wall time in seconds")
    output_dir = models.CharField(max_length=1024)
    config = models.JSONField(default=dict, help_text="Validated configuration echo")
    rng_seed = models.CharField(max_length=20, default='0')
    created_at = models.DateTimeField(auto_now_add=True)

    class Meta:
        ordering = ['-created_at']

    def __str__(self):
        return f"{self.command} ({self.status}, exit {self.exit_code})"
