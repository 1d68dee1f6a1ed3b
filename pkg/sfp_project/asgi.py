"""
ASGI config for the sfp_project project.

Exposes the ASGI callable serving the reconstruction-run registry API as a
module-level variable named ``application``.
"""

import os

from django.core.asgi import get_asgi_application

os.environ.setdefault("DJANGO_SETTINGS_MODULE", "sfp_project.settings")

application = get_asgi_application()
