"""Diffusion source estimation on regular trees.

Simulate uniform-boundary diffusions on regular (or bridge-glued) hosts,
score candidate sources, build fixed-size confidence sets, evaluate the
matching closed-form error bounds, and drive seeded Monte Carlo campaigns
that compare the two.
"""

from ._rng import derive_seed
from .campaign import (Campaign, CampaignResult, MethodRow, MethodSpec, emit,
                       prop1_experiment, prop2_experiment, run_campaign,
                       wilson_interval)
from .confidence import (BoundReport, ConfidenceSet, SizeSearchResult,
                         ball_size_bound, confset_glued, confset_phi,
                         confset_psi, glued_union_error_bound,
                         optimize_psi_topk_bound, phi_ball_error_bound,
                         phi_displacement_bound, psi_topk_error_bound,
                         required_radius, required_topk)
from .diffusion import (GluedSplit, SimConfig, SourcePlacement, simulate,
                        simulate_stream, split_glued, trial_config)
from .estimators import (ScoreTable, brute_force_orderings, centroid,
                         max_ordering_nodes, monotonicity_violations,
                         ordering_count_from_scores, rumor_centers, score_all)
from .trees import (GraphSpec, InfectionTree, TreeDocumentError, ball,
                    deserialize, distance, load_tree, save_tree, serialize,
                    subtree_sizes)
from .urnlab import (LimitCheckReport, PolyaUrn, coupled_dominance_check,
                     dirichlet_moment_check, dirichlet_params,
                     host_slot_chain, path_beta_check, path_beta_sampler,
                     product_tail_check, product_tail_sampler,
                     sample_proportions, subtree_proportions)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
