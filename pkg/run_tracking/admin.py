from django.contrib import admin
from django.utils.html import format_html

from .models import CommandRun


@admin.register(CommandRun)
class CommandRunAdmin(admin.ModelAdmin):
    """
    Admin interface for the command run ledger.
    """

    list_display = [
        'timestamp', 'command', 'status_colored', 'seed', 'short_hash',
        'duration_ms', 'error_type', 'output_dir'
    ]
    list_filter = ['command', 'status', 'timestamp']
    search_fields = ['run_id', 'command', 'config_hash', 'error_message']
    readonly_fields = [
        'run_id', 'command', 'seed', 'config_hash', 'options', 'output_dir',
        'status', 'duration_ms', 'error_type', 'error_message', 'timestamp'
    ]

    date_hierarchy = 'timestamp'
    ordering = ['-timestamp']

    def status_colored(self, obj):
        """Display run status with color coding."""
        color = {'succeeded': 'green', 'failed': 'red'}.get(obj.status, 'orange')
        return format_html('<span style="color: {};">{}</span>', color, obj.get_status_display())
    status_colored.short_description = "Status"
    status_colored.admin_order_field = 'status'

    def short_hash(self, obj):
        return obj.config_hash[:12]
    short_hash.short_description = "Config"

    def has_add_permission(self, request):
        """Disable manual addition of run records."""
        return False

    def has_change_permission(self, request, obj=None):
        """Make run records read-only."""
        return False
