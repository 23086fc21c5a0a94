from django.contrib import admin
from django.utils.html import format_html, mark_safe
import json
from .models import VerificationRun


@admin.register(VerificationRun)
class VerificationRunAdmin(admin.ModelAdmin):
    list_display = [
        "id",
        "command",
        "status",
        "passed_badge",
        "seed",
        "threads",
        "created_at",
        "completed_at",
    ]
    list_filter = ["status", "command", "passed", "created_at"]
    search_fields = ["id", "command", "report_path", "error_message"]
    readonly_fields = [
        "id",
        "passed_badge",
        "config_display",
        "report_display",
        "report_path",
        "created_at",
        "completed_at",
    ]

    fieldsets = (
        (None, {
            "fields": ("id", "command", "seed", "tolerance", "threads")
        }),
        ("Status", {
            "fields": ("status", "passed_badge", "passed", "error_message")
        }),
        ("Configuration", {
            "fields": ("config_display",),
            "classes": ("wide", "collapse"),
        }),
        ("Results", {
            "fields": ("report_path", "report_display"),
            "classes": ("wide", "collapse"),
        }),
        ("Raw Data (JSON)", {
            "fields": ("config", "report"),
            "classes": ("collapse",),
        }),
        ("Timestamps", {
            "fields": ("created_at", "completed_at")
        }),
    )

    def passed_badge(self, obj):
        """Display the verdict as a colored badge."""
        if obj.passed is None:
            return mark_safe('<span style="color: gray;">No verdict</span>')
        color, label = ("#28a745", "Passed") if obj.passed else ("#dc3545", "Failed")
        return format_html(
            '<span style="background-color: {}; color: white; padding: 3px 8px; border-radius: 4px; font-weight: bold;">{}</span>',
            color, label
        )
    passed_badge.short_description = "Verdict"
    passed_badge.admin_order_field = "passed"

    def config_display(self, obj):
        return format_html("<pre>{}</pre>", json.dumps(obj.config, indent=2, sort_keys=True))
    config_display.short_description = "Configuration"

    def report_display(self, obj):
        return format_html("<pre>{}</pre>", json.dumps(obj.report, indent=2, sort_keys=True))
    report_display.short_description = "Results"

    def has_add_permission(self, request):
        """Runs are created by the corners command."""
        return False
