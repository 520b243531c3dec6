//! Small numerical helpers shared by the estimators.

/// Neumaier-compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub(crate) fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub(crate) fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub(crate) fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// `(2u)^{1/β} Δ^{-1/β}`, evaluated in log space so tiny meshes do not overflow.
#[inline]
pub(crate) fn rlt_scale(arg: f64, beta: f64, delta_n: f64) -> f64 {
    if arg <= 0.0 {
        return 0.0;
    }
    ((arg.ln() - delta_n.ln()) / beta).exp()
}

pub(crate) fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mut acc = KahanSum::new();
    xs.iter().for_each(|&x| acc.add(x));
    let mean = acc.value() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let mut ss = KahanSum::new();
    xs.iter().for_each(|&x| ss.add((x - mean) * (x - mean)));
    (mean, (ss.value() / (n - 1) as f64).sqrt())
}

/// Trapezoid weights for (possibly non-uniform) ascending nodes.
pub(crate) fn trapezoid_weights(nodes: &[f64]) -> Vec<f64> {
    let n = nodes.len();
    let mut w = vec![0.0; n];
    for k in 1..n {
        let h = nodes[k] - nodes[k - 1];
        w[k - 1] += 0.5 * h;
        w[k] += 0.5 * h;
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_beats_naive() {
        let mut acc = KahanSum::new();
        let mut naive = 0.0;
        for _ in 0..10_000_000 {
            acc.add(0.1);
            naive += 0.1;
        }
        assert!((acc.value() - 1_000_000.0).abs() < 1e-6);
        assert!((naive - 1_000_000.0f64).abs() > (acc.value() - 1_000_000.0).abs());
    }

    #[test]
    fn trapezoid_integrates_linear_exactly() {
        let nodes = [0.0, 0.5, 1.5, 2.0];
        let w = trapezoid_weights(&nodes);
        let integral: f64 = nodes.iter().zip(&w).map(|(x, w)| w * (3.0 * x + 1.0)).sum();
        assert!((integral - 8.0).abs() < 1e-14);
    }

    #[test]
    fn scale_matches_direct_power() {
        let direct = (2.0f64 * 0.5).powf(1.0 / 1.7) * (1.0f64 / 78.0).powf(-1.0 / 1.7);
        assert!((rlt_scale(1.0, 1.7, 1.0 / 78.0) - direct).abs() < 1e-12 * direct);
        assert!(rlt_scale(1e3, 1.2, 1e-300).is_finite());
    }
}
