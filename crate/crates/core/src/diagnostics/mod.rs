//! Regularity diagnostics around the free boundary.
//!
//! Every function here is a pure function of a solution and its atlas.
//! Constants such as `C0..C4` and `Ñ` are reported as measured values; none
//! is compared against a prescribed magnitude.

mod growth;
mod kernel;
mod profile;
mod signs;

pub(crate) use growth::stride_subset;
pub use growth::{
    eligible_centers, gradient_growth, quadratic_growth, radius_ladder, spread, GrowthReport,
    GrowthSample,
};
pub use kernel::{
    acf_phi, cutoff, heat_kernel, probe_directions, weighted_energies, weighted_energy_i, PhiTable,
};
pub use profile::{
    mean_square_gradient_bound, regularity_profile, ProfileBand, ProfileOptions, ProfileSample,
    RegularityProfile,
};
pub use signs::{
    normal_from_derivatives, normal_probe, normal_vector, sign_conditions, SignCheck, SignReport,
};
