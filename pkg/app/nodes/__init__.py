from app.nodes.config_parser import parse_config
from app.nodes.priors_table import build_priors_table, build_partitions_table
from app.nodes.risk_report import compute_risk, compute_asympt
from app.nodes.region_scanner import scan_region, estimate_v_region
from app.nodes.mc_runner import run_monte_carlo, draw_samples
from app.nodes.reporter import emit_artifact, report_failure
