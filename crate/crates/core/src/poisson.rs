/// Truncated Poisson(λ) weights, renormalized, with discarded mass at most `tol`.
/// `weights[i]` is the weight of k = `left + i`.
#[derive(Clone, Debug)]
pub struct PoissonWeights {
    pub left: usize,
    pub weights: Vec<f64>,
}

impl PoissonWeights {
    pub fn right(&self) -> usize {
        self.left + self.weights.len() - 1
    }
}

pub fn poisson_weights(lambda: f64, tol: f64) -> PoissonWeights {
    assert!(lambda >= 0.0 && lambda.is_finite(), "bad Poisson parameter {lambda}");
    if lambda == 0.0 {
        return PoissonWeights { left: 0, weights: vec![1.0] };
    }
    // Work outward from the mode in linear scale so nothing underflows before truncation.
    let mode = lambda.floor() as usize;
    let mut right = vec![1.0f64];
    let mut total = 1.0;
    let mut k = mode;
    loop {
        let w = right.last().unwrap() * lambda / (k + 1) as f64;
        k += 1;
        right.push(w);
        total += w;
        let ratio = lambda / (k + 1) as f64;
        if ratio < 1.0 && w / (1.0 - ratio) <= 0.5 * tol * total {
            break;
        }
    }
    let mut left_part: Vec<f64> = Vec::new();
    let mut k = mode;
    let mut w = 1.0;
    while k > 0 {
        w = w * k as f64 / lambda;
        k -= 1;
        left_part.push(w);
        total += w;
        let ratio = k as f64 / lambda;
        if ratio < 1.0 && w * ratio / (1.0 - ratio) <= 0.5 * tol * total {
            break;
        }
    }
    let left = mode - left_part.len();
    let mut weights: Vec<f64> = left_part.into_iter().rev().collect();
    weights.extend(right);
    let s: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= s);
    PoissonWeights { left, weights }
}
