"""Effective continuum energy densities of discrete random polymer-chain networks."""

from polyhom._core import (  # noqa: F401
    Graph,
    GeneralPositionViolated,
    OutOfRange,
    __version__,
    fit_scaling,
    free_energy_ti,
    gaussian_free_energy,
    generate_graph,
    hamiltonian,
    inverse_langevin,
    kuhn_grun,
    langevin,
    lattice_fixture,
    load_graph,
    minimize_cell,
    run_study,
    save_graph,
    validate_graph,
)
