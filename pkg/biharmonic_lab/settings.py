"""
Django settings for biharmonic_lab project.

The project has no web surface: Django provides configuration, the run
ledger database and the ``manage.py`` command line.

For the full list of settings and their values, see
https://docs.djangoproject.com/en/5.0/ref/settings/
"""

from pathlib import Path
import os
from dotenv import load_dotenv

# Load environment variables
load_dotenv()

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent


# SECURITY WARNING: keep the secret key used in production secret!
SECRET_KEY = os.getenv('DJANGO_SECRET_KEY', 'django-insecure-lab-3q!x7k2v$u9m@c0r1b8h5e#w4t6y')

DEBUG = os.getenv('DEBUG', 'True') == 'True'

ALLOWED_HOSTS = os.getenv('ALLOWED_HOSTS', 'localhost,127.0.0.1').split(',')


# Application definition

INSTALLED_APPS = [
    'django.contrib.contenttypes',
    'django.contrib.auth',
    # Third-party apps
    'rest_framework',
    # Local apps
    'runs',
]


# Database
# https://docs.djangoproject.com/en/5.0/ref/settings/#databases

DATABASES = {
    'default': {
        'ENGINE': 'django.db.backends.sqlite3',
        'NAME': BASE_DIR / 'db.sqlite3',
    }
}


# Internationalization

LANGUAGE_CODE = 'en-us'

TIME_ZONE = 'UTC'

USE_I18N = True

USE_TZ = True

DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'


# Logging

LAB_LOG_LEVEL = os.getenv('LAB_LOG_LEVEL', 'INFO')

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'lab': {
            'format': '%(asctime)s [%(levelname)s] %(name)s: %(message)s',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'lab',
        },
    },
    'root': {
        'handlers': ['console'],
        'level': LAB_LOG_LEVEL,
    },
}


# Biharmonic Lab Configuration
BINLS_THREADS = int(os.getenv('BINLS_THREADS', '1'))
LAB_OUTPUT_DIR = Path(os.getenv('LAB_OUTPUT_DIR', str(BASE_DIR / 'data' / 'runs')))

DEFAULT_GAMMA = float(os.getenv('DEFAULT_GAMMA', '1.0'))
DEFAULT_EXTENT_1D = float(os.getenv('DEFAULT_EXTENT_1D', '32.0'))
DEFAULT_EXTENT_2D = float(os.getenv('DEFAULT_EXTENT_2D', '25.6'))
DEFAULT_POINTS_1D = int(os.getenv('DEFAULT_POINTS_1D', '512'))
DEFAULT_POINTS_2D = int(os.getenv('DEFAULT_POINTS_2D', '256'))

SOLVER_MAX_ITERATIONS = int(os.getenv('SOLVER_MAX_ITERATIONS', '5000'))
SOLVER_RESIDUAL_TOLERANCE = float(os.getenv('SOLVER_RESIDUAL_TOLERANCE', '1e-10'))
ALPHA_BRACKET_MIN = float(os.getenv('ALPHA_BRACKET_MIN', '0.05'))
ALPHA_BRACKET_MAX = float(os.getenv('ALPHA_BRACKET_MAX', '50.0'))
ALPHA_SCAN_POINTS = int(os.getenv('ALPHA_SCAN_POINTS', '13'))

BLOWUP_GROWTH_FACTOR = float(os.getenv('BLOWUP_GROWTH_FACTOR', '50.0'))
RESOLUTION_TAIL_FRACTION = float(os.getenv('RESOLUTION_TAIL_FRACTION', '1e-4'))

# Generator seed for random certification fields
RANDOM_FIELD_SEED = int(os.getenv('RANDOM_FIELD_SEED', '20170607'))
