use crate::knn::sq_dist;

/// Gaussian kernel `exp(-gamma * |a - b|^2)`.
pub fn rbf_kernel(a: &[f64], b: &[f64], gamma: f64) -> f64 {
    (-gamma * sq_dist(a, b)).exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn values() {
        assert_eq!(rbf_kernel(&[0.3, 0.1], &[0.3, 0.1], 5.0), 1.0);
        assert!((rbf_kernel(&[0.0], &[1.0], 1.0) - (-1.0f64).exp()).abs() < 1e-16);
        let far = rbf_kernel(&[0.0], &[1.0], 1e4);
        assert!(far >= 0.0 && far < 1e-300);
    }
}
