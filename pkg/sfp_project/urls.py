"""
URL configuration for the sfp_project project.

``api/`` serves the reconstruction-run registry; ``swagger/`` and ``redoc/``
serve its generated documentation.
"""
from django.contrib import admin
from django.urls import path, include, re_path
from django.conf import settings

from rest_framework import permissions
from drf_yasg.views import get_schema_view
from drf_yasg import openapi

schema_view = get_schema_view(
    openapi.Info(
        title=settings.SWAGGER_INFO["title"],
        default_version=settings.SWAGGER_INFO["default_version"],
        description=settings.SWAGGER_INFO["description"],
        terms_of_service=settings.SWAGGER_INFO.get("terms_of_service", ""),
        contact=openapi.Contact(**settings.SWAGGER_INFO["contact"]),
        license=openapi.License(**settings.SWAGGER_INFO["license"]),
    ),
    public=True,
    permission_classes=(permissions.AllowAny,),  # Docs are public
)

urlpatterns = [
    path("admin/", admin.site.urls),
    path("api/", include("smsfp.urls")),
    re_path(
        r"^swagger(?P<format>\.json|\.yaml)$",
        schema_view.without_ui(cache_timeout=0),
        name="schema-json",
    ),
    path("swagger/", schema_view.with_ui("swagger", cache_timeout=0), name="schema-swagger-ui"),
    path("redoc/", schema_view.with_ui("redoc", cache_timeout=0), name="schema-redoc"),
]
