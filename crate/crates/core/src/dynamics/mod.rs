//! Time evolution, signal diagnostics and mean-field trajectories.

pub mod analysis;
pub mod evolution;
pub mod meanfield;

pub use analysis::{
    detect_collapse_revival, incommensurability_measure, CollapseRevivalReport, DetectorSettings,
    IncommensurabilityReport,
};
pub use evolution::{
    evolve_block, observable_n3, rabi_signal, uniform_grid, BlockEvolution, RabiSignal, Signal,
};
pub use meanfield::{
    meanfield_energy, meanfield_trajectory, MeanFieldHamiltonian, MeanFieldState, MeanFieldTrajectory,
};
