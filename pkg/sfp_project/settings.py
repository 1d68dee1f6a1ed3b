"""
Django settings for the sfp_project project.

Hosts the ``smsfp`` shape-from-polarization toolkit: its management commands
(render, decompose, segment, reconstruct, evaluate, sweep) and the
reconstruction-run registry API.

For the full list of settings and their values, see
https://docs.djangoproject.com/en/5.2/ref/settings/
"""

import os
from pathlib import Path

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent


# SECURITY WARNING: keep the secret key used in production secret!
SECRET_KEY = os.environ.get(
    "DJANGO_SECRET_KEY",
    "django-insecure-r7m!b0q$3c9x_sfp-wz2l@k8d1t#v5n^h6y+e4u*j0p-a(s)f",
)

# SECURITY WARNING: don't run with debug turned on in production!
DEBUG = os.environ.get("DJANGO_DEBUG", "1") == "1"

ALLOWED_HOSTS = []


# Application definition

INSTALLED_APPS = [
    "django.contrib.admin",
    "django.contrib.auth",
    "django.contrib.contenttypes",
    "django.contrib.sessions",
    "django.contrib.messages",
    "django.contrib.staticfiles",
    "rest_framework",  # Django REST Framework for the run registry API
    "django_filters",
    "drf_yasg",
    "corsheaders",
    "rest_framework_api_key",
    "smsfp",
]

MIDDLEWARE = [
    "corsheaders.middleware.CorsMiddleware",
    "django.middleware.security.SecurityMiddleware",
    "django.contrib.sessions.middleware.SessionMiddleware",
    "django.middleware.common.CommonMiddleware",
    "django.middleware.csrf.CsrfViewMiddleware",
    "django.contrib.auth.middleware.AuthenticationMiddleware",
    "django.contrib.messages.middleware.MessageMiddleware",
    "django.middleware.clickjacking.XFrameOptionsMiddleware",
]

ROOT_URLCONF = "sfp_project.urls"

TEMPLATES = [
    {
        "BACKEND": "django.template.backends.django.DjangoTemplates",
        "DIRS": [],
        "APP_DIRS": True,
        "OPTIONS": {
            "context_processors": [
                "django.template.context_processors.request",
                "django.contrib.auth.context_processors.auth",
                "django.contrib.messages.context_processors.messages",
            ],
        },
    },
]

WSGI_APPLICATION = "sfp_project.wsgi.application"


# Database
# https://docs.djangoproject.com/en/5.2/ref/settings/#databases

DATABASES = {
    "default": {
        "ENGINE": "django.db.backends.sqlite3",
        "NAME": BASE_DIR / "db.sqlite3",
    }
}


AUTH_PASSWORD_VALIDATORS = [
    {
        "NAME": "django.contrib.auth.password_validation.UserAttributeSimilarityValidator",
    },
    {
        "NAME": "django.contrib.auth.password_validation.MinimumLengthValidator",
    },
    {
        "NAME": "django.contrib.auth.password_validation.CommonPasswordValidator",
    },
    {
        "NAME": "django.contrib.auth.password_validation.NumericPasswordValidator",
    },
]


LANGUAGE_CODE = "en-us"

TIME_ZONE = "UTC"

USE_I18N = True

USE_TZ = True


STATIC_URL = "static/"

DEFAULT_AUTO_FIELD = "django.db.models.BigAutoField"

REST_FRAMEWORK = {
    "DEFAULT_FILTER_BACKENDS": [
        "django_filters.rest_framework.DjangoFilterBackend",
        "rest_framework.filters.OrderingFilter",
    ],
    "DEFAULT_AUTHENTICATION_CLASSES": [
        "rest_framework.authentication.SessionAuthentication",  # For browsable API
    ],
}

# drf-yasg settings for API documentation
SWAGGER_SETTINGS = {
    "SECURITY_DEFINITIONS": {
        "Api-Key": {
            "type": "apiKey",
            "name": "Authorization",
            "in": "header",
            "description": 'API key header. Example: "Authorization: Api-Key {key}"',
        }
    },
    "USE_SESSION_AUTH": False,
    "DOC_EXPANSION": "none",
    "APIS_SORTER": "alpha",
    "OPERATIONS_SORTER": "alpha",
}

SWAGGER_INFO = {
    "title": "SMSfP Reconstruction API",
    "default_version": "v1",
    "description": (
        "Registry of shape-from-polarization benchmark runs on synthetic "
        "scenes, with filtering and sorting on the reported angular errors."
    ),
    "contact": {
        "name": "SMSfP maintainers",
    },
    "license": {
        "name": "MIT License",
    },
}

CORS_ALLOWED_ORIGINS = [
    "http://localhost:5173",
    "http://127.0.0.1:5173",
]


# Reconstruction toolkit defaults.
# RECONSTRUCTION mirrors smsfp.domain.ReconstructionConfig field for field;
# a --config JSON file (or an API request body) overlays these values.
SMSFP = {
    "RECONSTRUCTION": {
        "albedo0": 0.8,
        "eta0": 1.15,
        "view": [0.0, 0.0, 1.0],
        "light": None,
        "seg": {
            "tau": 0.35,
            "lambda_rho": 2.0,
            "lambda_phi": 2.0,
            "window": 5,
            "min_region_px": 400,
            "seed_grid_stride": 32,
            "connectivity": 4,
            "seed_update": "mean",
            "merge_tol": 1e-6,
            "smoothing_sigma": 1.0,
            "crease_closing": 2,
        },
        "scales": {
            "block_sizes": [8, 16, 32],
            "gamma": 0.5,
            "fuse": "mapped",
            "variance_source": "azimuth",
        },
        "weights": {
            "azimuth": 1.0,
            "intensity": 0.5,
            "mfcp": 1.0,
            "laplacian": 0.1,
        },
        "segmentation": True,
        "prior_mask": "region",
        "azimuth_form": "geometric",
        "use_intensity_rows": True,
        "refit_material": True,
        "gradient_sigma": 0.5,
        "mask_sigma": 2.0,
        "decay_rate": 0.15,
        "max_iterations": 10,
        "tolerance": 1e-4,
        "guided_radius": 8,
        "guided_eps": 1e-3,
        "max_workers": 1,
    },
    "CLI": {
        "SEED": 0,
        "OUT_DIR": "out",
    },
    "API": {
        # Refuse every write, API key or not.
        "READ_ONLY": False,
        # Largest synthetic grid a POST may request.
        "MAX_GRID": 128,
        # Runs below this MAE (degrees) count as accurate for ?accurate=true.
        "ACCURATE_MAE_DEG": 15.0,
    },
}


LOGGING = {
    "version": 1,
    "disable_existing_loggers": False,
    "formatters": {
        "verbose": {
            "format": "{asctime} {levelname} {name}: {message}",
            "style": "{",
        },
        "bare": {
            "format": "{message}",
            "style": "{",
        },
    },
    "handlers": {
        "console": {
            "class": "logging.StreamHandler",
            "formatter": "verbose",
        },
        "iterations": {
            "class": "logging.StreamHandler",
            "formatter": "bare",
        },
    },
    "loggers": {
        "django": {
            "handlers": ["console"],
            "level": "WARNING",
        },
        "smsfp": {
            "handlers": ["console"],
            "level": os.environ.get("SMSFP_LOG_LEVEL", "INFO"),
            "propagate": False,
        },
        # JSON-lines per-iteration solver diagnostics, enabled by --verbose.
        "smsfp.solver.iterations": {
            "handlers": ["iterations"],
            "level": "WARNING",
            "propagate": False,
        },
    },
}
