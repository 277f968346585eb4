"""Reputation-weighted federated survival analysis simulator."""

from .adversary import AdversaryProfile, assign_directions, noise_scale, perturb
from .clustering import (ClientSummary, ClusterAssignment, cluster_clients,
                         objective_value)
from .concordance import concordance_index, count_concordant_pairs
from .config import (AdversarySpec, ConfigError, ExperimentConfig,
                     config_from_dict, load_config)
from .cox import (CoxModel, FitConfig, breslow_baseline, fit_coxph,
                  neg_log_partial_likelihood, partial_likelihood_gradient,
                  risk_scores)
from .datasets import ClientDataset, make_dataset, mean_impute, read_csv, write_csv
from .federation import (FederationSettings, FederationState, PrivacySettings,
                         RoundMetrics, aggregate_weighted, message_overhead,
                         run_fedavg_baseline, run_round, run_simulation,
                         run_tffl_proxy)
from .privacy import (BoundInputs, DpParams, clip, feedback_error_bound,
                      gaussian_sigma, loss_increase_bound, privatize,
                      reputation_error_bound, selection_error_bound)
from .reputation import (Feedback, ReputationMatrix, compute_feedback,
                         selection_probabilities, simulate_lemma, stability,
                         update_scores)
from .synthetic import (GenerationConfig, apply_missingness,
                        completeness_vector, generate_centers,
                        generate_outcomes, generate_universe)

__version__ = "0.1.0"
