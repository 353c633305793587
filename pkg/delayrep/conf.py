"""
Access to the DELAYREP settings dict with built-in defaults.
"""
from django.conf import settings

DEFAULTS = {
    'MAX_KERNEL_DEGREE': 8,
    'SEWING_TOLERANCE': 1e-9,
    'COND_BOUND': 1e12,
    'RANK_TOL': 1e-10,
    'DEFAULT_DT': 1e-3,
    'DEFAULT_ORDER': 16,
    'QUADRATURE_PANEL_NODES': None,
    'CSV_DIGITS': 17,
}


def get_setting(name):
    """Return settings.DELAYREP[name], or the default when unset or unconfigured."""
    if name not in DEFAULTS:
        raise KeyError(f'Unknown delayrep setting: {name}')
    if settings.configured:
        overrides = getattr(settings, 'DELAYREP', None) or {}
        if name in overrides:
            return overrides[name]
    return DEFAULTS[name]


def resolve(value, name):
    """Use an explicit argument when given, else the named setting."""
    return get_setting(name) if value is None else value
