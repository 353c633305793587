"""
Django settings for delayrep_project project.
"""

import os
from pathlib import Path

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent


# No web surface is served; the key only satisfies Django's startup checks.
SECRET_KEY = 'django-insecure-delayrep-local-only'

DEBUG = False

ALLOWED_HOSTS = []


# Application definition

INSTALLED_APPS = [
    'delayrep',
]


# Specs and trajectories are file based, nothing is persisted.
DATABASES = {}


# Internationalization

LANGUAGE_CODE = 'en-us'

TIME_ZONE = 'UTC'

USE_I18N = False

USE_TZ = True


# Numerical defaults for the delayrep app. Read through delayrep.conf.get_setting.
DELAYREP = {
    'MAX_KERNEL_DEGREE': 8,
    'SEWING_TOLERANCE': 1e-9,
    'COND_BOUND': 1e12,
    'RANK_TOL': 1e-10,
    'DEFAULT_DT': 1e-3,
    'DEFAULT_ORDER': 16,
    'QUADRATURE_PANEL_NODES': None,
    'CSV_DIGITS': 17,
}


# Logging
# DELAYREP_LOG selects the verbosity of the delayrep logger: error, info or debug.

_LOG_LEVELS = {'error': 'ERROR', 'info': 'INFO', 'debug': 'DEBUG'}
DELAYREP_LOG_LEVEL = _LOG_LEVELS.get(
    os.environ.get('DELAYREP_LOG', 'error').strip().lower(), 'ERROR'
)

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'line': {
            'format': '%(levelname)s %(name)s: %(message)s',
        },
    },
    'handlers': {
        'stderr': {
            'class': 'logging.StreamHandler',
            'stream': 'ext://sys.stderr',
            'formatter': 'line',
        },
    },
    'loggers': {
        'delayrep': {
            'handlers': ['stderr'],
            'level': DELAYREP_LOG_LEVEL,
            'propagate': False,
        },
    },
}
