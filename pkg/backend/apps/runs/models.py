import uuid
from django.db import models


class VerificationRun(models.Model):
    """
    One invocation of a lab command: the validated parameters, the outcome
    and the report it produced.
    """

    class Status(models.TextChoices):
        PENDING = "pending", "Pending"
        PROCESSING = "processing", "Processing"
        COMPLETED = "completed", "Completed"
        FAILED = "failed", "Failed"

    class Command(models.TextChoices):
        ENUMERATE = "enumerate", "Enumerate"
        MEASURE = "measure", "Measure"
        VERIFY_NEKRASOV = "verify-nekrasov", "Verify Nekrasov"
        VERIFY_BIJECTION = "verify-bijection", "Verify Bijection"
        VERIFY_JACK = "verify-jack", "Verify Jack"
        VERIFY_DISCRETE_LOOP = "verify-discrete-loop", "Verify Discrete Loop"
        SAMPLE_CONTINUOUS = "sample-continuous", "Sample Continuous"
        VERIFY_CONTINUOUS_LOOP = "verify-continuous-loop", "Verify Continuous Loop"
        DIFFUSE_LIMIT = "diffuse-limit", "Diffuse Limit"
        VERIFY_CUMULANTS = "verify-cumulants", "Verify Cumulants"

    id = models.UUIDField(primary_key=True, default=uuid.uuid4, editable=False)
    command = models.CharField(max_length=40, choices=Command.choices)

    # Processing status
    status = models.CharField(
        max_length=20,
        choices=Status.choices,
        default=Status.PENDING
    )
    passed = models.BooleanField(
        blank=True,
        null=True,
        help_text="Whether every check was within tolerance"
    )
    error_message = models.TextField(blank=True, null=True)

    # Run parameters
    seed = models.DecimalField(
        max_digits=20,
        decimal_places=0,
        blank=True,
        null=True,
        help_text="Unsigned 64-bit seed"
    )
    tolerance = models.FloatField(blank=True, null=True)
    threads = models.PositiveIntegerField(default=1)
    config = models.JSONField(
        default=dict,
        help_text="Validated configuration sections"
    )

    # Output
    report = models.JSONField(
        default=dict,
        help_text="Results section of the JSON report"
    )
    report_path = models.CharField(max_length=500, blank=True)

    # Timestamps
    created_at = models.DateTimeField(auto_now_add=True)
    completed_at = models.DateTimeField(blank=True, null=True)

    class Meta:
        ordering = ["-created_at"]
        indexes = [
            models.Index(fields=["status"]),
            models.Index(fields=["command"]),
            models.Index(fields=["created_at"]),
        ]

    def __str__(self):
        outcome = {True: "passed", False: "failed"}.get(self.passed, self.status)
        return f"{self.command} ({outcome})"
