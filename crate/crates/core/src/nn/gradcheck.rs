use alloc::vec::Vec;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::ParamSet;
use crate::error::{Error, Result};

/// Which parameter coordinates a gradient check perturbs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Coordinates {
    All,
    /// `count` distinct coordinates drawn with a seeded generator.
    Sample { count: usize, seed: u64 },
}

/// Largest relative disagreement between `analytic` and central differences
/// of `loss` around `params`, measured as
/// `|analytic − cd| / max(|analytic|, |cd|, 1e-12)`.
pub fn finite_diff_check<P, G, F>(
    mut loss: F,
    params: &P,
    analytic: &G,
    h: f64,
    coords: Coordinates,
) -> Result<f64>
where
    P: ParamSet + Clone,
    G: ParamSet + ?Sized,
    F: FnMut(&P) -> Result<f64>,
{
    if !(1e-8..=1e-4).contains(&h) {
        return Err(Error::Config(alloc::format!(
            "finite-difference step {h} outside [1e-8, 1e-4]"
        )));
    }
    let grad_flat: Vec<f64> = analytic.slices().concat();
    let total = params.num_params();
    if grad_flat.len() != total {
        return Err(Error::dim("analytic gradient", total, grad_flat.len()));
    }

    let indices: Vec<usize> = match coords {
        Coordinates::All => (0..total).collect(),
        Coordinates::Sample { count, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut idx = sample(&mut rng, total, count.min(total)).into_vec();
            idx.sort_unstable();
            idx
        }
    };

    let mut probe = params.clone();
    let mut eval = |p: &P, coord: usize| -> Result<f64> {
        let v = loss(p)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Numeric {
                context: "finite-difference loss".into(),
                index: Some(coord),
            })
        }
    };

    let mut worst: f64 = 0.0;
    for &coord in &indices {
        let original = read(params, coord);
        write(&mut probe, coord, original + h);
        let plus = eval(&probe, coord)?;
        write(&mut probe, coord, original - h);
        let minus = eval(&probe, coord)?;
        write(&mut probe, coord, original);

        let cd = (plus - minus) / (2.0 * h);
        let a = grad_flat[coord];
        let rel = (a - cd).abs() / a.abs().max(cd.abs()).max(1e-12);
        worst = worst.max(rel);
    }
    Ok(worst)
}

fn read<P: ParamSet + ?Sized>(params: &P, mut coord: usize) -> f64 {
    for s in params.slices() {
        if coord < s.len() {
            return s[coord];
        }
        coord -= s.len();
    }
    unreachable!("coordinate within num_params")
}

fn write<P: ParamSet + ?Sized>(params: &mut P, mut coord: usize, value: f64) {
    for s in params.slices_mut() {
        if coord < s.len() {
            s[coord] = value;
            return;
        }
        coord -= s.len();
    }
    unreachable!("coordinate within num_params")
}
