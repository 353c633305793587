import os

import django

os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'delayrep_project.settings')
django.setup()
