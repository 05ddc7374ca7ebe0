from django.db import migrations, models


class Migration(migrations.Migration):

    initial = True

    dependencies = [
    ]

    operations = [
        migrations.CreateModel(
            name='Run',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('command', models.CharField(max_length=32)),
                ('status', models.CharField(choices=[('succeeded', 'Succeeded'), ('failed', 'Failed')], max_length=16)),
                ('exit_code', models.IntegerField(default=0)),
                ('error_category', models.CharField(blank=True, max_length=32)),
                ('error_message', models.TextField(blank=True)),
                ('wall_time', models.FloatField(help_text='Wall time in seconds')),
                ('output_dir', models.CharField(max_length=1024)),
                ('config', models.JSONField(default=dict, help_text='Validated configuration echo')),
                ('rng_seed', models.CharField(default='0', max_length=20)),
                ('created_at', models.DateTimeField(auto_now_add=True)),
            ],
            options={
                'ordering': ['-created_at'],
            },
        ),
    ]
