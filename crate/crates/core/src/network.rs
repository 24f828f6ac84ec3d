//! Recurrent spiking network with a leaky readout.

use ndarray::Array2;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Result, SimError};
use crate::model::Model;

/// A fixed-topology recurrent network: `n_in` spike inputs, `n_hidden`
/// recurrently connected model neurons, `n_out` leaky readout units.
///
/// Weight layout is presynaptic-major: `w_in[[i, j]]` connects input `i` to
/// hidden `j`, `w_rec[[i, j]]` connects hidden `i` to hidden `j` (zero
/// diagonal, no self-connections), `w_out[[j, k]]` connects hidden `j` to
/// readout `k`.
#[derive(Debug, Clone)]
pub struct Network<M: Model> {
    pub model: M,
    pub n_in: usize,
    pub n_hidden: usize,
    pub n_out: usize,
    pub w_in: Array2<f64>,
    pub w_rec: Array2<f64>,
    pub w_out: Array2<f64>,
    /// Readout decay per step, `0 <= kappa < 1`.
    pub kappa: f64,
}

impl<M: Model> Network<M> {
    /// Network with all weights zero.
    pub fn zeros(model: M, n_in: usize, n_hidden: usize, n_out: usize, kappa: f64) -> Self {
        Network {
            model,
            n_in,
            n_hidden,
            n_out,
            w_in: Array2::zeros((n_in, n_hidden)),
            w_rec: Array2::zeros((n_hidden, n_hidden)),
            w_out: Array2::zeros((n_hidden, n_out)),
            kappa,
        }
    }

    /// Gaussian init: each matrix gets mean 0 and std `scale / sqrt(fan_in)`,
    /// recurrent diagonal cleared.
    pub fn random<R: Rng>(
        model: M,
        n_in: usize,
        n_hidden: usize,
        n_out: usize,
        kappa: f64,
        scale: f64,
        rng: &mut R,
    ) -> Self {
        let mut net = Self::zeros(model, n_in, n_hidden, n_out, kappa);
        let fill = |m: &mut Array2<f64>, fan_in: usize, rng: &mut R| {
            let dist = Normal::new(0.0, scale / (fan_in.max(1) as f64).sqrt()).unwrap();
            for w in m.iter_mut() {
                *w = dist.sample(rng);
            }
        };
        fill(&mut net.w_in, n_in, rng);
        fill(&mut net.w_rec, n_hidden, rng);
        fill(&mut net.w_out, n_hidden, rng);
        net.clear_diagonal();
        net
    }

    /// Zero the recurrent diagonal (self-connections are not part of the
    /// topology and must stay zero through training).
    pub fn clear_diagonal(&mut self) {
        for j in 0..self.n_hidden {
            self.w_rec[[j, j]] = 0.0;
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.w_in.dim() != (self.n_in, self.n_hidden)
            || self.w_rec.dim() != (self.n_hidden, self.n_hidden)
            || self.w_out.dim() != (self.n_hidden, self.n_out)
        {
            return Err(SimError::ContractViolation(
                "weight matrix shapes do not match network dimensions".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.kappa) {
            return Err(SimError::InvalidConfig(format!(
                "kappa must be in [0, 1), got {}",
                self.kappa
            )));
        }
        for j in 0..self.n_hidden {
            if self.w_rec[[j, j]] != 0.0 {
                return Err(SimError::ContractViolation(format!(
                    "recurrent diagonal must be zero, found w_rec[{j},{j}] = {}",
                    self.w_rec[[j, j]]
                )));
            }
        }
        Ok(())
    }
}

/// One readout update: `y' = kappa * y + sum_j w_out[j][k] * z[j]`.
pub fn readout_step(y: &mut [f64], z: &[f64], w_out: &Array2<f64>, kappa: f64) {
    for (k, yk) in y.iter_mut().enumerate() {
        let mut acc = kappa * *yk;
        for (j, &zj) in z.iter().enumerate() {
            if zj != 0.0 {
                acc += w_out[[j, k]] * zj;
            }
        }
        *yk = acc;
    }
}

/// Gradients (or gradient-shaped accumulators) for the three weight matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub w_in: Array2<f64>,
    pub w_rec: Array2<f64>,
    pub w_out: Array2<f64>,
}

impl Gradients {
    pub fn zeros_like<M: Model>(net: &Network<M>) -> Self {
        Gradients {
            w_in: Array2::zeros((net.n_in, net.n_hidden)),
            w_rec: Array2::zeros((net.n_hidden, net.n_hidden)),
            w_out: Array2::zeros((net.n_hidden, net.n_out)),
        }
    }

    pub fn scaled_add(&mut self, c: f64, other: &Gradients) {
        self.w_in.scaled_add(c, &other.w_in);
        self.w_rec.scaled_add(c, &other.w_rec);
        self.w_out.scaled_add(c, &other.w_out);
    }

    pub fn scale(&mut self, c: f64) {
        self.w_in *= c;
        self.w_rec *= c;
        self.w_out *= c;
    }

    /// Largest absolute entry across all three matrices.
    pub fn max_abs(&self) -> f64 {
        self.w_in
            .iter()
            .chain(self.w_rec.iter())
            .chain(self.w_out.iter())
            .fold(0.0f64, |m, &g| m.max(g.abs()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Lif;
    use crate::neuron::LifParams;
    use crate::rng::{stream, StreamKind};
    use approx::assert_relative_eq;

    fn lif() -> Lif {
        Lif {
            params: LifParams::default(),
        }
    }

    #[test]
    fn readout_step_examples() {
        let w = Array2::from_shape_vec((2, 1), vec![1.0, 0.5]).unwrap();
        let mut y = vec![0.0];
        readout_step(&mut y, &[1.0, 0.0], &w, 0.9);
        assert_relative_eq!(y[0], 1.0);
        readout_step(&mut y, &[0.0, 0.0], &w, 0.9);
        assert_relative_eq!(y[0], 0.9);
        let mut y = vec![0.0];
        readout_step(&mut y, &[0.0, 0.0], &w, 0.9);
        assert_eq!(y[0], 0.0);
    }

    #[test]
    fn random_init_statistics_and_diagonal() {
        let mut rng = stream(7, StreamKind::WeightInit, 0, 0, 0);
        let net = Network::random(lif(), 10, 50, 2, 0.9, 1.0, &mut rng);
        net.validate().unwrap();
        for j in 0..50 {
            assert_eq!(net.w_rec[[j, j]], 0.0);
        }
        // std of w_rec entries should be near 1/sqrt(50).
        let vals: Vec<f64> = net
            .w_rec
            .indexed_iter()
            .filter(|((i, j), _)| i != j)
            .map(|(_, &w)| w)
            .collect();
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        let var = vals.iter().map(|w| (w - mean) * (w - mean)).sum::<f64>() / vals.len() as f64;
        let expect = 1.0 / 50.0f64.sqrt();
        assert!((var.sqrt() - expect).abs() < 0.02, "std = {}", var.sqrt());
    }

    #[test]
    fn validate_rejects_nonzero_diagonal_and_bad_kappa() {
        let mut net = Network::zeros(lif(), 1, 2, 1, 0.9);
        net.w_rec[[1, 1]] = 0.1;
        assert!(net.validate().is_err());
        let net = Network::zeros(lif(), 1, 2, 1, 1.0);
        assert!(net.validate().is_err());
    }

    #[test]
    fn gradients_accumulate_linearly() {
        let net = Network::zeros(lif(), 2, 3, 1, 0.9);
        let mut a = Gradients::zeros_like(&net);
        let mut b = Gradients::zeros_like(&net);
        b.w_in[[0, 0]] = 2.0;
        b.w_rec[[0, 1]] = -1.0;
        a.scaled_add(0.5, &b);
        assert_eq!(a.w_in[[0, 0]], 1.0);
        assert_eq!(a.w_rec[[0, 1]], -0.5);
        assert_eq!(a.max_abs(), 1.0);
    }
}
