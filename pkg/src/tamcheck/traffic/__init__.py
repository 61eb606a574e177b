"""Decentralized self-adaptive traffic monitoring case study."""

from .config import (
    ConfigError, Scenario, TrafficConfig, load_scenario_file,
    parse_scenario_text, preset_config, scenario_presets,
)
from .model import OC_TRANSITIONAL, R_FAILED, R_MASTER, R_MWS, R_SLAVE, build_model
from .properties import (
    NamedProperty, PropertyVerdict, check_all, check_property, standard_properties,
)
from .zones import Zone, ZoneClassifier, classify_zone
