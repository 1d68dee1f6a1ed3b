# Generated by Django 5.2.4 on 2026-10-17 09:12

import smsfp.models
from django.db import migrations, models


class Migration(migrations.Migration):

    initial = True

    dependencies = []

    operations = [
        migrations.CreateModel(
            name="ReconstructionRun",
            fields=[
                (
                    "id",
                    models.BigAutoField(
                        auto_created=True,
                        primary_key=True,
                        serialize=False,
                        verbose_name="ID",
                    ),
                ),
                ("name", models.CharField(max_length=255)),
                ("notes", models.TextField(blank=True, null=True)),
                (
                    "scene_kind",
                    models.CharField(
                        choices=[
                            ("hemisphere", "Hemisphere"),
                            ("paraboloid", "Paraboloid"),
                            ("two-bump", "Two bumps"),
                            ("plane-ramp", "Plane ramp"),
                        ],
                        default="hemisphere",
                        max_length=32,
                    ),
                ),
                ("grid", models.PositiveIntegerField(default=64)),
                ("seed", models.PositiveBigIntegerField(default=0)),
                ("noise_sigma", models.FloatField(default=0.0)),
                ("eta", models.FloatField(default=1.5)),
                ("albedo", models.FloatField(default=0.8)),
                ("light", models.JSONField(default=smsfp.models.default_light)),
                ("config", models.JSONField(blank=True, default=dict)),
                ("segmentation_enabled", models.BooleanField(default=True)),
                ("region_count", models.PositiveIntegerField(blank=True, null=True)),
                ("converged", models.BooleanField(blank=True, null=True)),
                ("mae_deg", models.FloatField(blank=True, null=True)),
                ("rmse_deg", models.FloatField(blank=True, null=True)),
                ("acc_11_25", models.FloatField(blank=True, null=True)),
                ("acc_22_5", models.FloatField(blank=True, null=True)),
                ("acc_30", models.FloatField(blank=True, null=True)),
                ("n_pixels", models.PositiveIntegerField(blank=True, null=True)),
                ("created_at", models.DateTimeField(auto_now_add=True)),
                ("updated_at", models.DateTimeField(auto_now=True)),
            ],
            options={
                "ordering": ["-created_at", "-id"],
            },
        ),
    ]
