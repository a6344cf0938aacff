use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{LayerGrads, Network, NetworkError, ParamRole};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    Sgd,
    Adam,
}

impl FromStr for OptimizerKind {
    type Err = NetworkError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sgd" => Ok(OptimizerKind::Sgd),
            "adam" => Ok(OptimizerKind::Adam),
            other => Err(NetworkError::InvalidConfig(format!("unknown optimizer '{other}' (expected sgd or adam)"))),
        }
    }
}

impl fmt::Display for OptimizerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OptimizerKind::Sgd => "sgd",
            OptimizerKind::Adam => "adam",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub kind: OptimizerKind,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// Decoupled decay applied to weight groups only: `w ← w − lr·λ·w`.
    pub weight_decay: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            kind: OptimizerKind::Adam,
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 0.0,
        }
    }
}

/// SGD or Adam with per-parameter moment buffers.
#[derive(Debug, Clone)]
pub struct OptimizerState {
    pub config: OptimizerConfig,
    m: Vec<Vec<Vec<f64>>>,
    v: Vec<Vec<Vec<f64>>>,
    step: u64,
}

impl OptimizerState {
    pub fn new(config: OptimizerConfig) -> Self {
        Self {
            config,
            m: Vec::new(),
            v: Vec::new(),
            step: 0,
        }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    fn ensure_moments(&mut self, grads: &[LayerGrads]) {
        let shaped = |grads: &[LayerGrads]| -> Vec<Vec<Vec<f64>>> {
            grads
                .iter()
                .map(|groups| groups.iter().map(|g| vec![0.0; g.len()]).collect())
                .collect()
        };
        let matches = self.m.len() == grads.len()
            && self
                .m
                .iter()
                .zip(grads)
                .all(|(m, g)| m.len() == g.len() && m.iter().zip(g).all(|(a, b)| a.len() == b.len()));
        if !matches {
            self.m = shaped(grads);
            self.v = shaped(grads);
        }
    }

    /// Applies one update to `net`, then re-applies prune masks.
    pub fn step(&mut self, net: &mut Network, grads: &[LayerGrads]) -> Result<(), NetworkError> {
        if grads.len() != net.layers.len() {
            return Err(NetworkError::InvalidConfig(format!(
                "{} gradient entries for {} layers",
                grads.len(),
                net.layers.len()
            )));
        }
        let c = self.config;
        if c.kind == OptimizerKind::Adam {
            self.ensure_moments(grads);
        }
        self.step += 1;
        let t = self.step as i32;
        let (bc1, bc2) = (1.0 - c.beta1.powi(t), 1.0 - c.beta2.powi(t));

        for (li, (layer, layer_grads)) in net.layers.iter_mut().zip(grads).enumerate() {
            let params = layer.params_mut();
            if params.len() != layer_grads.len() {
                return Err(NetworkError::InvalidConfig(format!(
                    "layer {li}: {} gradient groups for {} parameter groups",
                    layer_grads.len(),
                    params.len()
                )));
            }
            for (gi, ((role, p), g)) in params.into_iter().zip(layer_grads).enumerate() {
                if p.len() != g.len() {
                    return Err(NetworkError::InvalidConfig(format!("layer {li} group {gi}: gradient length mismatch")));
                }
                let decay = if role == ParamRole::Weight { c.weight_decay } else { 0.0 };
                match c.kind {
                    OptimizerKind::Sgd => {
                        for (w, &gw) in p.iter_mut().zip(g) {
                            *w -= c.lr * (gw + decay * *w);
                        }
                    }
                    OptimizerKind::Adam => {
                        let m = &mut self.m[li][gi];
                        let v = &mut self.v[li][gi];
                        for k in 0..p.len() {
                            m[k] = c.beta1 * m[k] + (1.0 - c.beta1) * g[k];
                            v[k] = c.beta2 * v[k] + (1.0 - c.beta2) * g[k] * g[k];
                            let m_hat = m[k] / bc1;
                            let v_hat = v[k] / bc2;
                            p[k] -= c.lr * (m_hat / (v_hat.sqrt() + c.eps) + decay * p[k]);
                        }
                    }
                }
            }
            layer.sanitize();
            layer.apply_mask();
        }
        Ok(())
    }
}
