//! Multinomial models whose probabilities are restricted to the set
//! attainable by a symmetrically distorted trine measurement.

pub mod geometry;
pub mod physical;
pub mod posterior;
pub mod sampling;
pub mod scores;

pub use geometry::{constraint_satisfied, theta_from_disk, TrineGeometry};
pub use physical::{
    h_integrals, physical_check, physical_power_study, physical_score, HIntegrals, PhysicalOptions, PhysicalScorer,
};
pub use posterior::{posterior_mean_log_theta, LogThetaGrid, LogThetaMoments, PosteriorMethod};
pub use sampling::{sample_constrained_dirichlet, ConstrainedDirichlet};
pub use scores::{family_checks, g1_g2_power_study, score_g1, score_g2, ExpansionFamily, ExpansionKind};
