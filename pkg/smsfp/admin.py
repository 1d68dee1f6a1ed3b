from django.contrib import admin

from .models import ReconstructionRun


@admin.register(ReconstructionRun)
class ReconstructionRunAdmin(admin.ModelAdmin):
    list_display = ("name", "scene_kind", "grid", "segmentation_enabled", "mae_deg", "created_at")
    list_filter = ("scene_kind", "segmentation_enabled", "converged")
    search_fields = ("name", "notes")
    readonly_fields = ReconstructionRun.METRIC_FIELDS + ("created_at", "updated_at")
