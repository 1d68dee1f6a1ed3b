from django.db import models


def default_light():
    return [0.0, 0.0, 1.0]


class ReconstructionRun(models.Model):
    """
    One benchmark run: a rendered synthetic scene, the reconstruction
    configuration it was solved with, and the resulting angular errors.
    """

    class SceneKind(models.TextChoices):
        HEMISPHERE = "hemisphere", "Hemisphere"
        PARABOLOID = "paraboloid", "Paraboloid"
        TWO_BUMP = "two-bump", "Two bumps"
        PLANE_RAMP = "plane-ramp", "Plane ramp"

    name = models.CharField(max_length=255)
    notes = models.TextField(blank=True, null=True)

    # Scene and rendering parameters
    scene_kind = models.CharField(
        max_length=32, choices=SceneKind.choices, default=SceneKind.HEMISPHERE
    )
    grid = models.PositiveIntegerField(default=64)
    seed = models.PositiveBigIntegerField(default=0)
    noise_sigma = models.FloatField(default=0.0)
    eta = models.FloatField(default=1.5)
    albedo = models.FloatField(default=0.8)
    light = models.JSONField(default=default_light)

    # Overrides applied on top of settings.SMSFP["RECONSTRUCTION"]
    config = models.JSONField(default=dict, blank=True)
    segmentation_enabled = models.BooleanField(default=True)

    # Outcome, filled in when the run executes
    region_count = models.PositiveIntegerField(null=True, blank=True)
    converged = models.BooleanField(null=True, blank=True)
    mae_deg = models.FloatField(null=True, blank=True)
    rmse_deg = models.FloatField(null=True, blank=True)
    acc_11_25 = models.FloatField(null=True, blank=True)
    acc_22_5 = models.FloatField(null=True, blank=True)
    acc_30 = models.FloatField(null=True, blank=True)
    n_pixels = models.PositiveIntegerField(null=True, blank=True)

    created_at = models.DateTimeField(auto_now_add=True)
    updated_at = models.DateTimeField(auto_now=True)

    METRIC_FIELDS = (
        "region_count",
        "converged",
        "mae_deg",
        "rmse_deg",
        "acc_11_25",
        "acc_22_5",
        "acc_30",
        "n_pixels",
    )

    def __str__(self):
        return self.name

    def benchmark_parameters(self):
        overrides = dict(self.config or {})
        overrides["segmentation"] = self.segmentation_enabled
        return {
            "scene_kind": self.scene_kind,
            "grid": self.grid,
            "seed": self.seed,
            "noise_sigma": self.noise_sigma,
            "eta": self.eta,
            "albedo": self.albedo,
            "light": self.light,
            "overrides": overrides,
        }

    def metrics(self):
        return {field: getattr(self, field) for field in self.METRIC_FIELDS}

    class Meta:
        ordering = ["-created_at", "-id"]
