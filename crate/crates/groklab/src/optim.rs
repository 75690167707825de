//! Optimizers (SGD, Adam, AdamW with decoupled weight decay) and the
//! constant-norm projection step used for reduced landscapes and de-grokking.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::ParamVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimKind {
    Sgd,
    /// Adam with the weight-decay term folded into the gradient (coupled).
    Adam,
    /// Adam with decoupled weight decay.
    AdamW,
}

/// Optimizer hyperparameters. `weight_decay` is the decay coefficient gamma.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimConfig {
    pub kind: OptimKind,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
}

impl OptimConfig {
    pub fn sgd(lr: f64, weight_decay: f64) -> Self {
        Self {
            kind: OptimKind::Sgd,
            lr,
            beta1: 0.0,
            beta2: 0.0,
            eps: 0.0,
            weight_decay,
        }
    }

    pub fn adam(lr: f64, weight_decay: f64) -> Self {
        Self {
            kind: OptimKind::Adam,
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay,
        }
    }

    pub fn adamw(lr: f64, weight_decay: f64) -> Self {
        Self {
            kind: OptimKind::AdamW,
            ..Self::adam(lr, weight_decay)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lr > 0.0) {
            return Err(Error::domain(format!("learning rate must be > 0, got {}", self.lr)));
        }
        if self.weight_decay < 0.0 {
            return Err(Error::domain(format!(
                "weight decay must be >= 0, got {}",
                self.weight_decay
            )));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return Err(Error::domain("beta1/beta2 must lie in [0, 1)".to_string()));
        }
        Ok(())
    }
}

/// First/second moment buffers and step counter for the adaptive kinds.
#[derive(Debug, Clone)]
pub struct OptimState {
    pub step_count: usize,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl OptimState {
    pub fn new(len: usize) -> Self {
        Self {
            step_count: 0,
            m: vec![0.0; len],
            v: vec![0.0; len],
        }
    }
}

/// One optimizer instance: config plus per-run state.
#[derive(Debug, Clone)]
pub struct Optimizer {
    pub cfg: OptimConfig,
    pub state: OptimState,
}

impl Optimizer {
    pub fn new(cfg: OptimConfig, param_len: usize) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            cfg,
            state: OptimState::new(param_len),
        })
    }

    /// Apply one update to `p` given gradient `g` (same layout).
    pub fn step(&mut self, p: &mut ParamVector, g: &ParamVector) -> Result<()> {
        if p.len() != g.len() {
            return Err(Error::domain(format!(
                "parameter length {} does not match gradient length {}",
                p.len(),
                g.len()
            )));
        }
        self.step_slice(p.values_mut(), g.values())
    }

    /// Slice-level update; used directly for parameter groups that are not
    /// full networks (e.g. the trainable representation of the addition task).
    pub fn step_slice(&mut self, p: &mut [f64], g: &[f64]) -> Result<()> {
        if g.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                what: "gradient entry",
                step: self.state.step_count,
            });
        }
        let cfg = &self.cfg;
        let st = &mut self.state;
        st.step_count += 1;
        match cfg.kind {
            OptimKind::Sgd => {
                for (pi, gi) in p.iter_mut().zip(g) {
                    *pi -= cfg.lr * (gi + cfg.weight_decay * *pi);
                }
            }
            OptimKind::Adam | OptimKind::AdamW => {
                let t = st.step_count as i32;
                let bc1 = 1.0 - cfg.beta1.powi(t);
                let bc2 = 1.0 - cfg.beta2.powi(t);
                let decay_factor = 1.0 - cfg.lr * cfg.weight_decay;
                for i in 0..p.len() {
                    let geff = if cfg.kind == OptimKind::Adam {
                        g[i] + cfg.weight_decay * p[i]
                    } else {
                        g[i]
                    };
                    st.m[i] = cfg.beta1 * st.m[i] + (1.0 - cfg.beta1) * geff;
                    st.v[i] = cfg.beta2 * st.v[i] + (1.0 - cfg.beta2) * geff * geff;
                    let m_hat = st.m[i] / bc1;
                    let v_hat = st.v[i] / bc2;
                    if cfg.kind == OptimKind::AdamW {
                        // Decoupled decay is applied multiplicatively, so a
                        // zero-gradient run follows p0 * (1 - lr*gamma)^t to
                        // the bit.
                        p[i] *= decay_factor;
                    }
                    p[i] -= cfg.lr * m_hat / (v_hat.sqrt() + cfg.eps);
                }
            }
        }
        Ok(())
    }
}

/// Rescale all parameters so the L2 norm equals `target`.
pub fn project_norm(p: &ParamVector, target: f64) -> Result<ParamVector> {
    let mut out = p.clone();
    project_norm_in_place(&mut out, target)?;
    Ok(out)
}

/// In-place variant of [`project_norm`].
pub fn project_norm_in_place(p: &mut ParamVector, target: f64) -> Result<()> {
    if !(target > 0.0) {
        return Err(Error::domain(format!("target norm must be positive, got {target}")));
    }
    let norm = p.weight_norm();
    if norm == 0.0 {
        return Err(Error::domain("cannot project a zero-norm parameter vector"));
    }
    let scale = target / norm;
    for v in p.values_mut() {
        *v *= scale;
    }
    Ok(())
}

/// Predicted weight norm under pure exponential decay: `w0 * exp(-gamma t)`.
pub fn decay_norm_prediction(w0: f64, gamma: f64, t: f64) -> f64 {
    w0 * (-gamma * t).exp()
}
