//! The Euler-Alignment form of the flow and its reduction for slab data in
//! two dimensions.

pub mod alignment;
pub mod slab;

pub use alignment::{alignment_force, run_alignment, AlignmentRecord, AlignmentRun, AlignmentState};
pub use slab::{c_prime, slab_check_2d, spectral_gap_2d, Field2, SlabReport};
