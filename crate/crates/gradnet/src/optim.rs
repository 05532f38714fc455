use crate::error::GradnetError;
use crate::io::ParamSet;
use crate::tensor::Tensor;
use crate::GradVec;

#[derive(Debug, Clone, Copy)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig { lr: 1e-4, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

/// Adam optimizer state (first/second moments per parameter tensor).
pub struct Adam {
    cfg: AdamConfig,
    m: Vec<Tensor>,
    v: Vec<Tensor>,
    t: u64,
}

impl Adam {
    pub fn new(cfg: AdamConfig, params: &ParamSet) -> Self {
        let m = (0..params.len()).map(|i| Tensor::zeros(params.by_id(i).shape())).collect();
        let v = (0..params.len()).map(|i| Tensor::zeros(params.by_id(i).shape())).collect();
        Adam { cfg, m, v, t: 0 }
    }

    pub fn config(&self) -> AdamConfig {
        self.cfg
    }

    pub fn set_lr(&mut self, lr: f64) {
        self.cfg.lr = lr;
    }

    /// One Adam update with bias correction. Parameters without a gradient
    /// entry (`None`) are left untouched, as are their moments.
    pub fn step(&mut self, params: &mut ParamSet, grads: &GradVec) -> Result<(), GradnetError> {
        if grads.len() != params.len() {
            return Err(GradnetError::ShapeMismatch {
                op: "adam_step",
                detail: format!("{} grads for {} params", grads.len(), params.len()),
            });
        }
        self.t += 1;
        let bc1 = 1.0 - self.cfg.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.cfg.beta2.powi(self.t as i32);
        for (i, grad) in grads.iter().enumerate() {
            let g = match grad {
                Some(g) => g,
                None => continue,
            };
            let p = params.by_id_mut(i);
            if g.shape() != p.shape() {
                return Err(GradnetError::ShapeMismatch {
                    op: "adam_step",
                    detail: format!("param {} is {:?}, grad {:?}", i, p.shape(), g.shape()),
                });
            }
            let (m, v) = (self.m[i].data_mut(), self.v[i].data_mut());
            for (j, (&gj, pj)) in g.data().iter().zip(p.data_mut()).enumerate() {
                m[j] = self.cfg.beta1 * m[j] + (1.0 - self.cfg.beta1) * gj;
                v[j] = self.cfg.beta2 * v[j] + (1.0 - self.cfg.beta2) * gj * gj;
                let m_hat = m[j] / bc1;
                let v_hat = v[j] / bc2;
                *pj -= self.cfg.lr * m_hat / (v_hat.sqrt() + self.cfg.eps);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_param(value: f64) -> ParamSet {
        let mut set = ParamSet::new();
        set.insert("w", Tensor::scalar(value)).unwrap();
        set
    }

    #[test]
    fn zero_gradient_leaves_params() {
        let mut params = one_param(1.25);
        let mut opt = Adam::new(AdamConfig::default(), &params);
        let grads = vec![Some(Tensor::scalar(0.0))];
        opt.step(&mut params, &grads).unwrap();
        assert_eq!(params.by_id(0).item(), 1.25);
    }

    #[test]
    fn first_step_is_signed_lr() {
        // With bias correction the first update is exactly -lr * g/(|g| + eps').
        let cfg = AdamConfig { lr: 0.01, ..AdamConfig::default() };
        for g0 in [3.0, -0.2, 1e-3] {
            let mut params = one_param(0.0);
            let mut opt = Adam::new(cfg, &params);
            opt.step(&mut params, &vec![Some(Tensor::scalar(g0))]).unwrap();
            let expect = -cfg.lr * g0.signum();
            assert!(
                (params.by_id(0).item() - expect).abs() < 1e-6,
                "g0={} got {}",
                g0,
                params.by_id(0).item()
            );
        }
    }

    #[test]
    fn quadratic_converges_and_matches_recurrence() {
        // Minimize f(w) = (w-3)^2 from w=0 with lr 0.1 while mirroring the
        // exact scalar Adam recurrence alongside.
        let cfg = AdamConfig { lr: 0.1, ..AdamConfig::default() };
        let mut params = one_param(0.0);
        let mut opt = Adam::new(cfg, &params);

        let (mut w_ref, mut m_ref, mut v_ref) = (0.0f64, 0.0f64, 0.0f64);
        for t in 1..=100u64 {
            let w = params.by_id(0).item();
            let g = 2.0 * (w - 3.0);
            opt.step(&mut params, &vec![Some(Tensor::scalar(g))]).unwrap();

            let g_ref = 2.0 * (w_ref - 3.0);
            m_ref = cfg.beta1 * m_ref + (1.0 - cfg.beta1) * g_ref;
            v_ref = cfg.beta2 * v_ref + (1.0 - cfg.beta2) * g_ref * g_ref;
            let m_hat = m_ref / (1.0 - cfg.beta1.powi(t as i32));
            let v_hat = v_ref / (1.0 - cfg.beta2.powi(t as i32));
            w_ref -= cfg.lr * m_hat / (v_hat.sqrt() + cfg.eps);
            assert_eq!(params.by_id(0).item(), w_ref, "diverged from recurrence at t={}", t);
        }
        assert!((params.by_id(0).item() - 3.0).abs() < 0.1);
    }

    #[test]
    fn missing_grad_skips_param_and_moments() {
        let mut params = ParamSet::new();
        params.insert("a", Tensor::scalar(1.0)).unwrap();
        params.insert("b", Tensor::scalar(2.0)).unwrap();
        let mut opt = Adam::new(AdamConfig { lr: 0.5, ..AdamConfig::default() }, &params);
        opt.step(&mut params, &vec![Some(Tensor::scalar(1.0)), None]).unwrap();
        assert_ne!(params.by_id(0).item(), 1.0);
        assert_eq!(params.by_id(1).item(), 2.0);
    }

    #[test]
    fn grad_count_mismatch_errors() {
        let mut params = one_param(0.0);
        let mut opt = Adam::new(AdamConfig::default(), &params);
        assert!(opt.step(&mut params, &vec![]).is_err());
    }
}
