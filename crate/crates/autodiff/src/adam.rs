use crate::error::{AutodiffError, Result};
use crate::params::ParamStore;
use crate::tensor::Tensor;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamConfig {
    pub fn with_lr(lr: f64) -> Self {
        Self {
            lr,
            ..Self::default()
        }
    }
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Moment estimates for one set of parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    t: u64,
}

impl AdamState {
    /// Zero moments sized for the given per-parameter lengths.
    pub fn new(config: AdamConfig, sizes: &[usize]) -> Result<Self> {
        if !(config.lr > 0.0) {
            return Err(AutodiffError::InvalidArgument {
                op: "adam",
                msg: format!("learning rate must be positive, got {}", config.lr),
            });
        }
        Ok(Self {
            config,
            m: sizes.iter().map(|n| vec![0.0; *n]).collect(),
            v: sizes.iter().map(|n| vec![0.0; *n]).collect(),
            t: 0,
        })
    }

    pub fn for_store(config: AdamConfig, store: &ParamStore) -> Result<Self> {
        let sizes: Vec<usize> = store.iter().map(|p| p.value.len()).collect();
        Self::new(config, &sizes)
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    pub fn first_moment(&self, idx: usize) -> &[f64] {
        &self.m[idx]
    }

    pub fn second_moment(&self, idx: usize) -> &[f64] {
        &self.v[idx]
    }

    /// One Adam update over raw slices. `names` is only used for errors.
    /// Nothing is modified if any gradient entry is non-finite.
    pub fn step_slices(
        &mut self,
        params: &mut [&mut [f64]],
        grads: &[&[f64]],
        names: &[&str],
    ) -> Result<()> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(AutodiffError::InvalidArgument {
                op: "adam",
                msg: format!(
                    "state tracks {} parameters, got {} values and {} gradients",
                    self.m.len(),
                    params.len(),
                    grads.len()
                ),
            });
        }
        for (i, (p, g)) in params.iter().zip(grads).enumerate() {
            if p.len() != self.m[i].len() || g.len() != p.len() {
                return Err(AutodiffError::ShapeMismatch {
                    op: "adam",
                    lhs: vec![p.len()],
                    rhs: vec![g.len()],
                });
            }
            if !g.iter().all(|v| v.is_finite()) {
                let name = names.get(i).map_or_else(|| format!("#{i}"), |s| s.to_string());
                return Err(AutodiffError::NonFiniteGradient(name));
            }
        }
        self.t += 1;
        let AdamConfig {
            lr,
            beta1,
            beta2,
            eps,
        } = self.config;
        let c1 = 1.0 - beta1.powf(self.t as f64);
        let c2 = 1.0 - beta2.powf(self.t as f64);
        for (i, (p, g)) in params.iter_mut().zip(grads).enumerate() {
            let (m, v) = (&mut self.m[i], &mut self.v[i]);
            for j in 0..p.len() {
                m[j] = beta1 * m[j] + (1.0 - beta1) * g[j];
                v[j] = beta2 * v[j] + (1.0 - beta2) * g[j] * g[j];
                let m_hat = m[j] / c1;
                let v_hat = v[j] / c2;
                p[j] -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
        Ok(())
    }

    pub fn step(&mut self, store: &mut ParamStore, grads: &[Tensor]) -> Result<()> {
        let names: Vec<String> = store.iter().map(|p| p.name.clone()).collect();
        let names: Vec<&str> = names.iter().map(String::as_str).collect();
        let mut slices: Vec<&mut [f64]> = store.iter_mut().map(|p| p.value.data_mut()).collect();
        let grads: Vec<&[f64]> = grads.iter().map(Tensor::data).collect();
        self.step_slices(&mut slices, &grads, &names)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_with_unit_gradient() {
        let mut state = AdamState::new(AdamConfig::with_lr(0.1), &[3]).unwrap();
        let mut p = vec![1.0, 2.0, 3.0];
        let g = vec![1.0; 3];
        state.step_slices(&mut [&mut p], &[&g], &["w"]).unwrap();
        // m_hat = 1, v_hat = 1 at t = 1
        let delta = 0.1 * (1.0 / (1.0 + 1e-8));
        for (after, before) in p.iter().zip([1.0, 2.0, 3.0]) {
            assert!((after - (before - delta)).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_gradient_leaves_params() {
        let mut state = AdamState::new(AdamConfig::default(), &[2]).unwrap();
        let mut p = vec![0.25, -4.0];
        state.step_slices(&mut [&mut p], &[&[0.0, 0.0]], &["w"]).unwrap();
        assert_eq!(p, vec![0.25, -4.0]);
    }

    #[test]
    fn constant_gradient_decreases_monotonically() {
        let mut state = AdamState::new(AdamConfig::with_lr(0.01), &[1]).unwrap();
        let mut p = vec![0.0];
        let mut prev = p[0];
        for _ in 0..100 {
            state.step_slices(&mut [&mut p], &[&[0.7]], &["x"]).unwrap();
            assert!(p[0] < prev);
            prev = p[0];
        }
        assert!(state.second_moment(0)[0] >= 0.0);
        assert_eq!(state.steps(), 100);
    }

    #[test]
    fn non_finite_gradient_is_named() {
        let mut state = AdamState::new(AdamConfig::default(), &[1, 2]).unwrap();
        let mut a = vec![0.0];
        let mut b = vec![0.0, 0.0];
        let err = state
            .step_slices(&mut [&mut a, &mut b], &[&[1.0], &[0.0, f64::NAN]], &["a", "bias"])
            .unwrap_err();
        assert_eq!(err, AutodiffError::NonFiniteGradient("bias".into()));
        assert_eq!(state.steps(), 0);
        assert_eq!(a, vec![0.0]);
    }

    #[test]
    fn rejects_non_positive_rate() {
        assert!(AdamState::new(AdamConfig::with_lr(0.0), &[1]).is_err());
    }
}
