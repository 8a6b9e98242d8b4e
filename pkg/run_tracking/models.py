from django.db import models
import uuid


class CommandRun(models.Model):
    """
    One invocation of a pipeline management command.
    """

    STATUS_RUNNING = 'running'
    STATUS_SUCCEEDED = 'succeeded'
    STATUS_FAILED = 'failed'
    STATUS_CHOICES = [
        (STATUS_RUNNING, 'Running'),
        (STATUS_SUCCEEDED, 'Succeeded'),
        (STATUS_FAILED, 'Failed'),
    ]

    run_id = models.CharField(max_length=32, unique=True, db_index=True, default='')

    # Invocation
    command = models.CharField(max_length=32)
    seed = models.BigIntegerField(null=True, blank=True)
    config_hash = models.CharField(max_length=64, blank=True)
    options = models.JSONField(default=dict, blank=True)
    output_dir = models.CharField(max_length=500, blank=True)

    # Outcome
    status = models.CharField(max_length=16, choices=STATUS_CHOICES, default=STATUS_RUNNING)
    duration_ms = models.FloatField(null=True, blank=True)
    error_type = models.CharField(max_length=64, blank=True)
    error_message = models.TextField(blank=True)

    timestamp = models.DateTimeField(auto_now_add=True)

    class Meta:
        ordering = ['-timestamp']
        verbose_name = 'Command Run'
        verbose_name_plural = 'Command Runs'
        indexes = [
            models.Index(fields=['command', 'timestamp'], name='run_track_command_ts_idx'),
            models.Index(fields=['status', 'timestamp'], name='run_track_status_ts_idx'),
        ]

    def save(self, *args, **kwargs):
        if not self.run_id:
            self.run_id = uuid.uuid4().hex
        super().save(*args, **kwargs)

    def __str__(self):
        return f"{self.command} ({self.status}) - {self.timestamp}"

    @property
    def succeeded(self):
        return self.status == self.STATUS_SUCCEEDED
