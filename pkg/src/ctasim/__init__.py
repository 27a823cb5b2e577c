"""Agent-based simulator of epidemic spread on a multi-layer social network,
with digital contact tracing, capacity-limited testing, and isolation
compliance."""

__version__ = "0.1.0"

from .errors import ConfigurationError
from .synthpop import PopulationSpec, Population, SocialNetwork, generate_population
from .contacts import (ContactPolicy, ContactEvent, KernelModel,
                       business_as_usual, baseline_distancing, POLICY_PRESETS,
                       agent_daily_contacts, contact_distribution_report)
from .disease import DiseaseParams, TransmissionRates, CourseTable, effective_beta
from .mitigation import (TestingSystem, CtaLog, IsolationState, ComplianceModel,
                         IliModel, POLICY_PRIORITY, POLICY_FIRST_COME)
from .transmission import DayLedger, resolve_candidates, seed_epidemic, step_day
from .engine import (ScenarioConfig, World, RunResult, run, sweep,
                     aggregate_sweep, experiment_grid, sensitivity_scenarios,
                     calibration_report, estimate_r0, peak_reduction)
from . import backend

__all__ = [
    "ConfigurationError",
    "PopulationSpec", "Population", "SocialNetwork", "generate_population",
    "ContactPolicy", "ContactEvent", "KernelModel",
    "business_as_usual", "baseline_distancing", "POLICY_PRESETS",
    "agent_daily_contacts", "contact_distribution_report",
    "DiseaseParams", "TransmissionRates", "CourseTable", "effective_beta",
    "TestingSystem", "CtaLog", "IsolationState", "ComplianceModel", "IliModel",
    "POLICY_PRIORITY", "POLICY_FIRST_COME",
    "DayLedger", "resolve_candidates", "seed_epidemic", "step_day",
    "ScenarioConfig", "World", "RunResult", "run", "sweep", "aggregate_sweep",
    "experiment_grid", "sensitivity_scenarios", "calibration_report",
    "estimate_r0", "peak_reduction",
    "backend",
]
