"""
WSGI config for cornerslab project.

Only the admin is served; verification runs are launched through
``manage.py corners``.
"""

import os

from django.core.wsgi import get_wsgi_application

os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'cornerslab.settings')

application = get_wsgi_application()
