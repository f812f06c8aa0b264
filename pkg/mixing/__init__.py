from mixing.errors import (
    CapacityError, ConfigError, DomainError, InvalidCertificateError, MixingError, ModelError,
)
from mixing.poset import FinitePoset, OrderKind, best_up_set, compare, enumerate_up_sets, is_up_set, leq
from mixing.finite_core import (
    CoupledKernel, FiniteDist, FiniteKernel,
    alpha, alpha_lp, iterate_dist, kappa, kernel_is_increasing,
    maximal_coupling_kernel, stoch_dominates, strassen_gap, total_variation,
)
from mixing.drift import (
    DriftCertificate, Interval, fit_drift, initial_mass, small_set, verify_coupled_drift, verify_drift,
)
from mixing.bounds import (
    BoundReport, EpsilonSource,
    bound_table, epsilon_exact, lemma_ggc_bound, minorization_constant, optimize_bound, search_d, theorem_bound,
)
from mixing.srs import (
    SRSModel,
    builtin_half_bernoulli, builtin_tcp, builtin_wealth,
    estimate_e, exact_e, monotonicity_test, simulate_path, step, verify_drift_on_grid,
)
from mixing.empirics import (
    ComparisonTable,
    coupled_simulate_finite, coupled_simulate_srs, empirical_kappa_vs_bound, empirical_kolmogorov,
    exact_Nt_tail, exact_tau_split, exact_tau_tail, supermartingale_check,
)
