from dj_control_room_base.core import PanelConfig

panel_config = PanelConfig(
    settings_key="DJ_DISRUPTION_RECOVERY_SETTINGS",
    defaults={
        "DEFAULT_MARGIN": 0.05,
        "ECE_BINS": 10,
        "BOOTSTRAP_ITERATIONS": 10000,
        "CONFIDENCE_LEVEL": 0.95,
        "N_JOBS": 1,
        "SCORE_EPSILON": 1e-6,
        "MIN_PILOT_TASKS": 10,
        "PILOT_WARNING_TASKS": 50,
        "TRAJECTORY_SCORE": "max",
        "POWER_SIMULATIONS": 2000,
        "POWER_BOOTSTRAP_ITERATIONS": 1000,
    },
)


def get_setting(key, value=None):
    """
    Resolve an optional keyword argument against DJ_DISRUPTION_RECOVERY_SETTINGS.

    Library functions accept ``None`` for tunables; this returns the explicit
    value when one was passed and the configured (or default) setting otherwise.
    """
    if value is not None:
        return value
    return panel_config.get_settings(key)
