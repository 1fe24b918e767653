//! Stratified jittered sampling of cubes and balls.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::function::gamma::ln_gamma;

use crate::sphere::norm;

/// Volume of the unit ball in ℝⁿ.
pub(crate) fn unit_ball_volume(n: usize) -> f64 {
    let nf = n as f64;
    (0.5 * nf * std::f64::consts::PI.ln() - ln_gamma(0.5 * nf + 1.0)).exp()
}

/// Cells per axis so that about `count` jittered cube samples land in the
/// inscribed ball.
pub(crate) fn per_axis_for(n: usize, count: usize) -> usize {
    let fraction = unit_ball_volume(n) / 2f64.powi(n as i32);
    ((count as f64 / fraction).powf(1.0 / n as f64)).ceil().max(1.0) as usize
}

/// One uniform point in each of the `per_axisⁿ` cells of the cube
/// `center + [−half, half]ⁿ`, in lexicographic cell order.
pub(crate) fn jittered_cube(center: &[f64], half: f64, per_axis: usize, seed: u64, mut visit: impl FnMut(&[f64])) {
    let n = center.len();
    let h = 2.0 * half / per_axis as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx = vec![0usize; n];
    let mut x = vec![0.0; n];
    loop {
        for i in 0..n {
            x[i] = center[i] - half + h * (idx[i] as f64 + rng.random::<f64>());
        }
        visit(&x);
        let mut d = 0;
        while d < n {
            idx[d] += 1;
            if idx[d] < per_axis {
                break;
            }
            idx[d] = 0;
            d += 1;
        }
        if d == n {
            break;
        }
    }
}

/// Stratified jittered samples of `B(center, radius)`, about `count` of them.
pub(crate) fn ball_samples(center: &[f64], radius: f64, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let per_axis = per_axis_for(center.len(), count);
    let mut out = Vec::with_capacity(count + count / 4);
    jittered_cube(center, radius, per_axis, seed, |x| {
        let u: Vec<f64> = x.iter().zip(center).map(|(a, c)| a - c).collect();
        if norm(&u) < radius {
            out.push(x.to_vec());
        }
    });
    out
}
