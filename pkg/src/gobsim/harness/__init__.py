from .campaign import CampaignResult, CellStats, cell_keys, run_campaign, run_drop
from .config import POLICIES, ScenarioConfig, load_config, parse_config_text
from .report import render_figures
from .results import CSV_COLUMNS, emit_results, load_results

__all__ = [
    "CampaignResult",
    "CellStats",
    "CSV_COLUMNS",
    "POLICIES",
    "ScenarioConfig",
    "cell_keys",
    "emit_results",
    "load_config",
    "load_results",
    "parse_config_text",
    "render_figures",
    "run_campaign",
    "run_drop",
]
