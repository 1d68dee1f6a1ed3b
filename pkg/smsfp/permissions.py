# smsfp/permissions.py

from django.conf import settings
from rest_framework import permissions
from rest_framework_api_key.permissions import HasAPIKey


class HasAPIKeyForWriteOperations(permissions.BasePermission):
    """
    Read operations (GET, HEAD, OPTIONS) are open. Write operations need a
    valid API key and are refused outright while the registry is read-only.
    """

    message = "Write operations require a valid API key."

    def has_permission(self, request, view):
        if request.method in permissions.SAFE_METHODS:
            return True

        if settings.SMSFP["API"]["READ_ONLY"]:
            self.message = "The run registry is read-only."
            return False

        return HasAPIKey().has_permission(request, view)
