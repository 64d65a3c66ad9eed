"""Monte Carlo laboratory for the integrated density of states of lattice Anderson models."""

__version__ = "0.1.0"

from .lattice import (  # noqa: E402
    DisorderSpec, HamiltonianSample, LatticeSpec, ModelSpec, PeriodicPotential,
    assemble, build_h0, sample_disorder,
)
from .spectral import (  # noqa: E402
    CountResult, count_below, count_below_grid, dense_eigenvalues, distance_to_spectrum,
    resolvent_element,
)
from .free_ids import FreeIDSTable, free_ids_table, measure_q1, n0_exact_1d, n0_quadrature  # noqa: E402
from .estimator import estimate_ids, estimate_surface, wegner_probability  # noqa: E402
from .analysis import (  # noqa: E402
    combes_thomas_fit, compute_guaranteed_exponents, fit_power_law, holder_in_disorder,
    holder_in_energy, weak_disorder_table,
)
from .dos_series import convergence_check, dos_series_run, series_term  # noqa: E402
