#![allow(dead_code)]

use abq_core::nn::{Activation, Mlp};
use abq_core::qnet::NetWidths;
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Straight-line `x·W + b` chain over one input row, written with plain loops.
pub fn naive_forward(mlp: &Mlp, input: &[f64]) -> Vec<f64> {
    let mut x = input.to_vec();
    for layer in mlp.layers() {
        let w = &layer.weights;
        let mut y = layer.bias.clone();
        for (o, yo) in y.iter_mut().enumerate() {
            for (i, xi) in x.iter().enumerate() {
                *yo += xi * w.get(i, o);
            }
            if layer.activation == Activation::Relu && *yo < 0.0 {
                *yo = 0.0;
            }
        }
        x = y;
    }
    x
}

pub fn small_widths() -> NetWidths {
    NetWidths {
        trunk_hidden: 12,
        features: 8,
        head_hidden: 6,
    }
}

/// Upper tail probability of Pearson's statistic for `counts` against a
/// uniform distribution.
pub fn uniform_chi_square_p(counts: &[u64]) -> f64 {
    let total: u64 = counts.iter().sum();
    let expected = total as f64 / counts.len() as f64;
    let stat: f64 = counts
        .iter()
        .map(|&c| (c as f64 - expected).powi(2) / expected)
        .sum();
    let dist = ChiSquared::new((counts.len() - 1) as f64).unwrap();
    1.0 - dist.cdf(stat)
}
