use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::AmError;
use crate::features::FeatureMatrix;

/// Frame-level acoustic scores for HMM states.
///
/// The decoder only scores every `frame_subsampling()`-th frame and weights
/// each scored frame by the number of frames it stands for.
pub trait AcousticScorer: Sync {
    fn num_states(&self) -> usize;

    /// Expected feature dimension, or `None` to accept any.
    fn dims(&self) -> Option<usize>;

    fn frame_subsampling(&self) -> usize {
        1
    }

    fn log_likelihood(&self, feats: &FeatureMatrix, frame: usize, state: usize) -> f64;
}

/// Diagonal-covariance Gaussian mixture.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagGmm {
    pub weights: Vec<f64>,
    pub means: Vec<Vec<f64>>,
    pub vars: Vec<Vec<f64>>,
    #[serde(skip)]
    cache: Vec<(f64, Vec<f64>)>,
}

impl DiagGmm {
    pub fn new(weights: Vec<f64>, means: Vec<Vec<f64>>, vars: Vec<Vec<f64>>) -> Self {
        let mut g = Self { weights, means, vars, cache: Vec::new() };
        g.refresh();
        g
    }

    pub fn single(mean: Vec<f64>, var: Vec<f64>) -> Self {
        Self::new(vec![1.0], vec![mean], vec![var])
    }

    pub fn num_components(&self) -> usize {
        self.weights.len()
    }

    pub fn dims(&self) -> usize {
        self.means.first().map_or(0, Vec::len)
    }

    /// Rebuilds the per-component constants after parameters change.
    pub fn refresh(&mut self) {
        self.cache = self
            .weights
            .iter()
            .zip(&self.vars)
            .map(|(&w, v)| {
                let logdet: f64 = v.iter().map(|x| (2.0 * PI * x).ln()).sum();
                (w.ln() - 0.5 * logdet, v.iter().map(|x| 1.0 / x).collect())
            })
            .collect();
    }

    /// Per-component `ln w_m + ln N(x; μ_m, σ²_m)`.
    pub fn component_log_likelihoods(&self, x: &[f64], out: &mut Vec<f64>) {
        if self.cache.len() != self.weights.len() {
            let mut fresh = self.clone();
            fresh.refresh();
            return fresh.component_log_likelihoods(x, out);
        }
        out.clear();
        for ((gconst, inv), mean) in self.cache.iter().zip(&self.means) {
            let mut q = 0.0;
            for ((xi, mi), ii) in x.iter().zip(mean).zip(inv) {
                let d = xi - mi;
                q += d * d * ii;
            }
            out.push(gconst - 0.5 * q);
        }
    }

    pub fn log_likelihood(&self, x: &[f64]) -> f64 {
        let mut buf = Vec::with_capacity(self.weights.len());
        self.component_log_likelihoods(x, &mut buf);
        log_sum_exp(&buf)
    }
}

pub(crate) fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Left-to-right phone HMMs without skips. State `s` of phone `p` has id
/// `p·states_per_phone + s`. Each state either loops or moves forward; the
/// forward move out of the last state leaves the phone.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HmmTopology {
    pub phones: Vec<String>,
    pub states_per_phone: usize,
    /// Self-loop probability per state.
    pub self_loop: Vec<f64>,
}

impl HmmTopology {
    pub fn new(phones: Vec<String>, states_per_phone: usize, self_loop: f64) -> Result<Self, AmError> {
        if states_per_phone == 0 {
            return Err(AmError::InvalidConfig("states_per_phone must be positive".into()));
        }
        if !(self_loop > 0.0 && self_loop < 1.0) {
            return Err(AmError::InvalidConfig(format!("self-loop probability {self_loop} outside (0, 1)")));
        }
        let n = phones.len() * states_per_phone;
        Ok(Self { phones, states_per_phone, self_loop: vec![self_loop; n] })
    }

    pub fn num_states(&self) -> usize {
        self.phones.len() * self.states_per_phone
    }

    pub fn phone_index(&self, phone: &str) -> Option<usize> {
        self.phones.iter().position(|p| p == phone)
    }

    pub fn state_id(&self, phone: usize, s: usize) -> usize {
        phone * self.states_per_phone + s
    }

    /// State ids of a phone sequence, in order.
    pub fn expand(&self, phones: &[String]) -> Result<Vec<usize>, AmError> {
        let mut out = Vec::with_capacity(phones.len() * self.states_per_phone);
        for p in phones {
            let idx = self.phone_index(p).ok_or_else(|| AmError::UnknownPhone(p.clone()))?;
            out.extend((0..self.states_per_phone).map(|s| self.state_id(idx, s)));
        }
        Ok(out)
    }

    pub fn log_self(&self, state: usize) -> f64 {
        self.self_loop[state].ln()
    }

    pub fn log_forward(&self, state: usize) -> f64 {
        (1.0 - self.self_loop[state]).ln()
    }
}

/// One mixture per HMM state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GmmScorer {
    pub gmms: Vec<DiagGmm>,
    pub var_floor: Vec<f64>,
    pub subsampling: usize,
}

impl GmmScorer {
    pub fn with_subsampling(mut self, k: usize) -> Self {
        self.subsampling = k.max(1);
        self
    }

    pub fn total_gaussians(&self) -> usize {
        self.gmms.iter().map(DiagGmm::num_components).sum()
    }

    /// Restores cached constants, e.g. after deserializing.
    pub fn refresh(&mut self) {
        for g in &mut self.gmms {
            g.refresh();
        }
    }
}

impl AcousticScorer for GmmScorer {
    fn num_states(&self) -> usize {
        self.gmms.len()
    }

    fn dims(&self) -> Option<usize> {
        Some(self.var_floor.len())
    }

    fn frame_subsampling(&self) -> usize {
        self.subsampling
    }

    fn log_likelihood(&self, feats: &FeatureMatrix, frame: usize, state: usize) -> f64 {
        let row = feats.values.row(frame);
        match row.as_slice() {
            Some(x) => self.gmms[state].log_likelihood(x),
            None => self.gmms[state].log_likelihood(&row.to_vec()),
        }
    }
}

/// Everything a decoder needs from training.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AcousticModel {
    pub hmm: HmmTopology,
    pub scorer: GmmScorer,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_normal_density() {
        let g = DiagGmm::single(vec![0.0, 0.0], vec![1.0, 1.0]);
        let expected = -(2.0 * PI).ln();
        assert!((g.log_likelihood(&[0.0, 0.0]) - expected).abs() < 1e-12);
        assert!((g.log_likelihood(&[1.0, 0.0]) - (expected - 0.5)).abs() < 1e-12);
    }

    #[test]
    fn mixture_of_identical_components() {
        let g = DiagGmm::new(vec![0.25, 0.75], vec![vec![1.0]; 2], vec![vec![2.0]; 2]);
        let single = DiagGmm::single(vec![1.0], vec![2.0]);
        assert!((g.log_likelihood(&[0.3]) - single.log_likelihood(&[0.3])).abs() < 1e-12);
    }

    #[test]
    fn transitions_sum_to_one() {
        let h = HmmTopology::new(vec!["a".into(), "b".into()], 3, 0.7).unwrap();
        for s in 0..h.num_states() {
            assert!((h.log_self(s).exp() + h.log_forward(s).exp() - 1.0).abs() < 1e-12);
        }
        assert_eq!(h.expand(&["b".to_string()]).unwrap(), vec![3, 4, 5]);
        assert!(h.expand(&["zz".to_string()]).is_err());
    }
}
