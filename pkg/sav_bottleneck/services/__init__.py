from .scenario_service import ScenarioService, scenario_service
from .oracle_suite import OracleSuite, run_oracle_suite
