import django_filters
from django.conf import settings

from .models import ReconstructionRun


class ReconstructionRunFilter(django_filters.FilterSet):
    # Filter by scene kind (exact match)
    scene_kind = django_filters.ChoiceFilter(choices=ReconstructionRun.SceneKind.choices)

    # Filter by MAE range in degrees
    min_mae = django_filters.NumberFilter(field_name="mae_deg", lookup_expr="gte")
    max_mae = django_filters.NumberFilter(field_name="mae_deg", lookup_expr="lte")

    # Minimum fraction of pixels under 11.25 degrees
    min_accuracy = django_filters.NumberFilter(field_name="acc_11_25", lookup_expr="gte")

    segmentation_enabled = django_filters.BooleanFilter(field_name="segmentation_enabled")
    converged = django_filters.BooleanFilter(field_name="converged")

    # Runs whose MAE beats SMSFP["API"]["ACCURATE_MAE_DEG"]
    accurate = django_filters.BooleanFilter(method="filter_accurate")

    class Meta:
        model = ReconstructionRun
        fields = [
            "scene_kind",
            "min_mae",
            "max_mae",
            "min_accuracy",
            "segmentation_enabled",
            "converged",
            "accurate",
        ]

    def filter_accurate(self, queryset, name, value):
        """
        True keeps runs with an MAE below the accuracy threshold; False keeps
        the evaluated runs at or above it.
        """
        threshold = settings.SMSFP["API"]["ACCURATE_MAE_DEG"]
        if value:
            return queryset.filter(mae_deg__lt=threshold)
        return queryset.filter(mae_deg__gte=threshold)
