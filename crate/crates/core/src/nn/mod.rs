//! Dense-network substrate: matrices, MLPs, the adaptive-moment optimizer and
//! finite-difference gradient verification.

mod adam;
mod gradcheck;
mod matrix;
mod mlp;

use alloc::vec::Vec;

pub use adam::{adam_step, AdamState};
pub use gradcheck::{finite_diff_check, Coordinates};
pub use matrix::Matrix;
pub use mlp::{Activation, Dense, DenseGrad, Mlp, MlpGrads};

/// A collection of parameter (or gradient) buffers with a fixed layout.
///
/// Two values with the same type and shape return slices of equal lengths
/// in the same order, which is what the optimizer and gradient checker rely on.
pub trait ParamSet {
    fn slices(&self) -> Vec<&[f64]>;
    fn slices_mut(&mut self) -> Vec<&mut [f64]>;

    fn num_params(&self) -> usize {
        self.slices().iter().map(|s| s.len()).sum()
    }
}

/// FNV-1a over the bit patterns of every parameter, in layout order.
pub fn fingerprint<P: ParamSet + ?Sized>(params: &P) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for slice in params.slices() {
        for v in slice {
            for byte in v.to_bits().to_le_bytes() {
                hash ^= u64::from(byte);
                hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
            }
        }
    }
    hash
}
