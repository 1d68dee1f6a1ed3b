from django.conf import settings
from rest_framework import serializers

from .domain import ReconstructionConfig
from .exceptions import InvalidInputError
from .models import ReconstructionRun


class StrictSerializer(serializers.Serializer):
    """Rejects keys the serializer does not declare instead of dropping them."""

    def to_internal_value(self, data):
        if isinstance(data, dict):
            unknown = sorted(set(data) - set(self.fields))
            if unknown:
                raise serializers.ValidationError(
                    {key: ["Unknown configuration key."] for key in unknown}
                )
        return super().to_internal_value(data)


class SegConfigSerializer(StrictSerializer):
    tau = serializers.FloatField(min_value=0.0)
    lambda_rho = serializers.FloatField(min_value=0.0)
    lambda_phi = serializers.FloatField(min_value=0.0)
    window = serializers.IntegerField(min_value=3)
    min_region_px = serializers.IntegerField(min_value=1)
    seed_grid_stride = serializers.IntegerField(min_value=1)
    connectivity = serializers.ChoiceField(choices=[4, 8])
    seed_update = serializers.ChoiceField(choices=["mean", "fixed"])
    merge_tol = serializers.FloatField(min_value=0.0)
    smoothing_sigma = serializers.FloatField(min_value=0.0)
    crease_closing = serializers.IntegerField(min_value=0)

    def validate_tau(self, value):
        if value <= 0:
            raise serializers.ValidationError("tau must be positive.")
        return value

    def validate_window(self, value):
        if value % 2 == 0:
            raise serializers.ValidationError("window must be odd.")
        return value


class ScaleSetSerializer(StrictSerializer):
    block_sizes = serializers.ListField(
        child=serializers.IntegerField(min_value=2), min_length=1
    )
    gamma = serializers.FloatField(min_value=0.0, max_value=1.0)
    fuse = serializers.ChoiceField(choices=["mapped", "implicit"])
    variance_source = serializers.ChoiceField(choices=["azimuth", "implicit"])

    def validate_block_sizes(self, value):
        if any(b >= c for b, c in zip(value, value[1:])):
            raise serializers.ValidationError("block sizes must be strictly increasing.")
        return value


class SolverWeightsSerializer(StrictSerializer):
    azimuth = serializers.FloatField(min_value=0.0)
    intensity = serializers.FloatField(min_value=0.0)
    mfcp = serializers.FloatField(min_value=0.0)
    laplacian = serializers.FloatField(min_value=0.0)


class ReconstructionConfigSerializer(StrictSerializer):
    """
    Validates a complete reconstruction configuration and builds the
    ``ReconstructionConfig`` value it describes.
    """

    albedo0 = serializers.FloatField()
    eta0 = serializers.FloatField()
    view = serializers.ListField(child=serializers.FloatField(), min_length=3, max_length=3)
    light = serializers.ListField(
        child=serializers.FloatField(), min_length=3, max_length=3, allow_null=True
    )
    seg = SegConfigSerializer()
    scales = ScaleSetSerializer()
    weights = SolverWeightsSerializer()
    segmentation = serializers.BooleanField()
    prior_mask = serializers.ChoiceField(choices=["region", "global"])
    azimuth_form = serializers.ChoiceField(choices=["geometric", "printed"])
    use_intensity_rows = serializers.BooleanField()
    refit_material = serializers.BooleanField()
    gradient_sigma = serializers.FloatField(min_value=0.0)
    mask_sigma = serializers.FloatField(min_value=0.0)
    decay_rate = serializers.FloatField(min_value=0.0)
    max_iterations = serializers.IntegerField(min_value=1)
    tolerance = serializers.FloatField(min_value=0.0)
    guided_radius = serializers.IntegerField(min_value=1)
    guided_eps = serializers.FloatField(min_value=0.0)
    max_workers = serializers.IntegerField(min_value=1)

    def validate(self, attrs):
        try:
            self.config = ReconstructionConfig.from_dict(attrs)
        except InvalidInputError as exc:
            raise serializers.ValidationError(str(exc)) from exc
        return attrs


class ReconstructionRunSerializer(serializers.ModelSerializer):
    class Meta:
        model = ReconstructionRun
        fields = "__all__"
        read_only_fields = ["created_at", "updated_at", *ReconstructionRun.METRIC_FIELDS]
        extra_kwargs = {
            "name": {"help_text": "A short label for the run."},
            "scene_kind": {"help_text": "The synthetic scene to render."},
            "grid": {"help_text": "Edge length of the square render grid in pixels."},
            "seed": {"help_text": "Seed of the noise generator."},
            "noise_sigma": {
                "help_text": "Gaussian noise level as a fraction of the peak intensity."
            },
            "eta": {"help_text": "Refractive index the scene is rendered with."},
            "albedo": {"help_text": "Albedo the scene is rendered with."},
            "light": {"help_text": "Light direction [lx, ly, lz] in camera coordinates."},
            "config": {
                "help_text": "Reconstruction settings overriding the server defaults."
            },
        }

    def validate_grid(self, value):
        limit = settings.SMSFP["API"]["MAX_GRID"]
        if not 16 <= value <= limit:
            raise serializers.ValidationError(f"grid must lie between 16 and {limit}.")
        return value

    def validate_noise_sigma(self, value):
        if value < 0:
            raise serializers.ValidationError("noise_sigma must be non-negative.")
        return value

    def validate_light(self, value):
        if (
            not isinstance(value, list)
            or len(value) != 3
            or not all(isinstance(c, (int, float)) for c in value)
        ):
            raise serializers.ValidationError("light must be a list of three numbers.")
        return [float(c) for c in value]

    def validate_config(self, value):
        # conf imports this module.
        from .conf import build_config

        if not isinstance(value, dict):
            raise serializers.ValidationError("config must be an object.")
        try:
            build_config(value)
        except InvalidInputError as exc:
            raise serializers.ValidationError(str(exc)) from exc
        return value


class ReconstructionRunUpdateSerializer(serializers.ModelSerializer):
    """Only the descriptive fields of a stored run can change."""

    class Meta:
        model = ReconstructionRun
        fields = ["id", "name", "notes"]
        read_only_fields = ["id"]
