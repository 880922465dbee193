//! Open-system dynamics of the cooling cycle.

pub mod branching;
pub mod generator;
pub mod integrate;
pub mod lifetime;
pub mod lindblad;
pub mod model;
pub mod rate_eq;
pub mod scan;

pub use branching::{clebsch_gordan, BranchingTable};
pub use generator::LiouvilleGenerator;
pub use integrate::{
    evolve_flow, CoolingTrajectory, EvolveDiagnostics, EvolveOptions, Integrator, LinearFlow,
    POSITIVITY_TOLERANCE, TRACE_DRIFT_PER_MS, TRUNCATION_LIMIT,
};
pub use lifetime::{survival_lifetime, Lifetime};
pub use lindblad::{
    final_density, lindblad_evolve, steady_state, SteadyState, SteadyStateMethod, SteadyStateOptions,
};
pub use model::{AxisModel, Boundary, DissipatorSet, ModelOptions, OpenSystem};
pub use rate_eq::{rate_equation_evolve, rate_equation_steady_state, RateModel, RatePopulations};
pub use scan::{find_resonances, scan_offset_field, Resonance, ResonanceSource, ScanOptions, ScanPoint};
