"""Sparse-graph diffusion solvers: global baselines and their localized
counterparts, with dynamic maintenance and operation-count instrumentation."""

from .graph import (CsrGraph, EdgeEvent, apply_event, apply_events,
                    load_edge_list, spectral_norm_estimate, volume)
from .systems import (DiffusionSystem, OperatorQ, dense_solve,
                      make_hk_system, make_katz_system, make_ppr_system,
                      series_oracle)
from .global_solvers import (GlobalConfig, chebyshev, gauss_seidel,
                             gradient_descent, hk_taylor_global, sor)
from .local_solvers import (local_ch, local_gd, local_gs, local_hk,
                            local_sor, optimal_omega)
from .dynamic import (PprPair, beta_push, event_adjust, make_pair,
                      parse_events, repair, run_snapshots)
from .metrics import (BenchRecord, error_norms, evaluate_bounds,
                      participation_ratio, sample_sources, speedup_ratio)

__version__ = "0.1.0"
