"""
WSGI config for the sfp_project project.

Exposes the WSGI callable serving the reconstruction-run registry API as a
module-level variable named ``application``.
"""

import os

from django.core.wsgi import get_wsgi_application

os.environ.setdefault("DJANGO_SETTINGS_MODULE", "sfp_project.settings")

application = get_wsgi_application()
