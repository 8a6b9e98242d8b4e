# Generated by Django 5.0.1 on 2026-10-18 09:12

from django.db import migrations, models


class Migration(migrations.Migration):

    initial = True

    dependencies = [
    ]

    operations = [
        migrations.CreateModel(
            name='CommandRun',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('run_id', models.CharField(db_index=True, default='', max_length=32, unique=True)),
                ('command', models.CharField(max_length=32)),
                ('seed', models.BigIntegerField(blank=True, null=True)),
                ('config_hash', models.CharField(blank=True, max_length=64)),
                ('options', models.JSONField(blank=True, default=dict)),
                ('output_dir', models.CharField(blank=True, max_length=500)),
                ('status', models.CharField(choices=[('running', 'Running'), ('succeeded', 'Succeeded'), ('failed', 'Failed')], default='running', max_length=16)),
                ('duration_ms', models.FloatField(blank=True, null=True)),
                ('error_type', models.CharField(blank=True, max_length=64)),
                ('error_message', models.TextField(blank=True)),
                ('timestamp', models.DateTimeField(auto_now_add=True)),
            ],
            options={
                'verbose_name': 'Command Run',
                'verbose_name_plural': 'Command Runs',
                'ordering': ['-timestamp'],
                'indexes': [models.Index(fields=['command', 'timestamp'], name='run_track_command_ts_idx'), models.Index(fields=['status', 'timestamp'], name='run_track_status_ts_idx')],
            },
        ),
    ]
