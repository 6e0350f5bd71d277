//! Central-difference gradient checking.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Tensor, TensorError};

pub const GRAD_CHECK_STEP: f64 = 1e-5;

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / (analytic.abs() + numeric.abs()).max(1e-8)
}

/// Compares analytic gradients against central differences on `samples`
/// randomly chosen coordinates (all of them if there are fewer) and returns
/// the largest relative error. `f` maps parameter values to the loss and
/// its gradient with respect to each parameter.
pub fn grad_check<F>(params: &[Tensor], samples: usize, seed: u64, mut f: F) -> Result<f64, TensorError>
where
    F: FnMut(&[Tensor]) -> Result<(f64, Vec<Tensor>), TensorError>,
{
    let (_, grads) = f(params)?;
    let coords: Vec<(usize, usize)> = params.iter().enumerate().flat_map(|(p, t)| (0..t.len()).map(move |i| (p, i))).collect();
    if coords.is_empty() {
        return Ok(0.0);
    }
    let chosen: Vec<(usize, usize)> = if samples >= coords.len() {
        coords
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..samples).map(|_| coords[rng.random_range(0..coords.len())]).collect()
    };
    let mut work = params.to_vec();
    let mut worst = 0.0f64;
    for (p, i) in chosen {
        let orig = work[p].data()[i];
        work[p].data_mut()[i] = orig + GRAD_CHECK_STEP;
        let (up, _) = f(&work)?;
        work[p].data_mut()[i] = orig - GRAD_CHECK_STEP;
        let (down, _) = f(&work)?;
        work[p].data_mut()[i] = orig;
        let numeric = (up - down) / (2.0 * GRAD_CHECK_STEP);
        worst = worst.max(relative_error(grads[p].data()[i], numeric));
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::Tape;

    #[test]
    fn linear_function_is_exact() {
        let w = Tensor::row_vector(vec![0.3, -1.2, 2.0]);
        let x = Tensor::from_vec(3, 1, vec![1.5, 0.25, -2.0]).unwrap();
        let err = grad_check(&[w], 100, 0, |p| {
            let mut tape = Tape::new();
            let wv = tape.leaf(p[0].clone());
            let xv = tape.leaf(x.clone());
            let y = tape.matmul(wv, xv)?;
            let g = tape.backward(y)?;
            Ok((tape.value(y).item()?, vec![g.get(wv)]))
        })
        .unwrap();
        assert!(err <= 1e-9, "{err}");
    }

    #[test]
    fn relative_error_formula() {
        assert_eq!(relative_error(1.0, 1.0), 0.0);
        assert_eq!(relative_error(1.0, -1.0), 1.0);
        assert_eq!(relative_error(0.0, 1e-9), 0.1);
    }
}
