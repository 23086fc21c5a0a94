# Generated by Django 6.0.1 on 2026-10-17 09:12

import uuid
from django.db import migrations, models


class Migration(migrations.Migration):

    initial = True

    dependencies = [
    ]

    operations = [
        migrations.CreateModel(
            name='VerificationRun',
            fields=[
                ('id', models.UUIDField(default=uuid.uuid4, editable=False, primary_key=True, serialize=False)),
                ('command', models.CharField(choices=[('enumerate', 'Enumerate'), ('measure', 'Measure'), ('verify-nekrasov', 'Verify Nekrasov'), ('verify-bijection', 'Verify Bijection'), ('verify-jack', 'Verify Jack'), ('verify-discrete-loop', 'Verify Discrete Loop'), ('sample-continuous', 'Sample Continuous'), ('verify-continuous-loop', 'Verify Continuous Loop'), ('diffuse-limit', 'Diffuse Limit'), ('verify-cumulants', 'Verify Cumulants')], max_length=40)),
                ('status', models.CharField(choices=[('pending', 'Pending'), ('processing', 'Processing'), ('completed', 'Completed'), ('failed', 'Failed')], default='pending', max_length=20)),
                ('passed', models.BooleanField(blank=True, help_text='Whether every check was within tolerance', null=True)),
                ('error_message', models.TextField(blank=True, null=True)),
                ('seed', models.DecimalField(blank=True, decimal_places=0, help_text='Unsigned 64-bit seed', max_digits=20, null=True)),
                ('tolerance', models.FloatField(blank=True, null=True)),
                ('threads', models.PositiveIntegerField(default=1)),
                ('config', models.JSONField(default=dict, help_text='Validated configuration sections')),
                ('report', models.JSONField(default=dict, help_text='Results section of the JSON report')),
                ('report_path', models.CharField(blank=True, max_length=500)),
                ('created_at', models.DateTimeField(auto_now_add=True)),
                ('completed_at', models.DateTimeField(blank=True, null=True)),
            ],
            options={
                'ordering': ['-created_at'],
                'indexes': [models.Index(fields=['status'], name='runs_verifi_status_6693e8_idx'), models.Index(fields=['command'], name='runs_verifi_command_7324f4_idx'), models.Index(fields=['created_at'], name='runs_verifi_created_fd6449_idx')],
            },
        ),
    ]
