use crate::error::{Error, Result};

/// Bias-corrected Adam over a fixed list of parameter tensors.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub t: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl AdamState {
    /// Standard hyperparameters (0.001, 0.9, 0.999, 1e-8) for tensors of
    /// the given lengths.
    pub fn new(tensor_lens: &[usize]) -> Self {
        AdamState {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            t: 0,
            m: tensor_lens.iter().map(|&n| vec![0.0; n]).collect(),
            v: tensor_lens.iter().map(|&n| vec![0.0; n]).collect(),
        }
    }

    pub fn step(&mut self, params: &mut [&mut [f64]], grads: &[&[f64]]) -> Result<()> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(Error::Shape(format!(
                "optimizer tracks {} tensors, got {} params and {} grads",
                self.m.len(),
                params.len(),
                grads.len()
            )));
        }
        for (i, (p, g)) in params.iter().zip(grads).enumerate() {
            if p.len() != self.m[i].len() || g.len() != self.m[i].len() {
                return Err(Error::Shape(format!("tensor {i}: length mismatch")));
            }
            if let Some(j) = g.iter().position(|x| !x.is_finite()) {
                return Err(Error::Numerical(format!("non-finite gradient at tensor {i}, entry {j}")));
            }
        }
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        for ((p, g), (m, v)) in params.iter_mut().zip(grads).zip(self.m.iter_mut().zip(self.v.iter_mut())) {
            for j in 0..p.len() {
                m[j] = self.beta1 * m[j] + (1.0 - self.beta1) * g[j];
                v[j] = self.beta2 * v[j] + (1.0 - self.beta2) * g[j] * g[j];
                let m_hat = m[j] / bc1;
                let v_hat = v[j] / bc2;
                p[j] -= self.learning_rate * m_hat / (v_hat.sqrt() + self.epsilon);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_moves_by_learning_rate() {
        let mut adam = AdamState::new(&[1]);
        let mut p = [0.0];
        adam.step(&mut [&mut p], &[&[1.0]]).unwrap();
        // m_hat = 1, v_hat = 1 -> -alpha / (1 + eps)
        let want = -0.001 / (1.0 + 1e-8);
        assert!((p[0] - want).abs() < 1e-18);
        assert_eq!(adam.t, 1);
    }

    #[test]
    fn zero_gradients_keep_params() {
        let mut adam = AdamState::new(&[3]);
        let mut p = [1.0, -2.0, 0.5];
        for _ in 0..100 {
            adam.step(&mut [&mut p], &[&[0.0; 3]]).unwrap();
        }
        assert_eq!(p, [1.0, -2.0, 0.5]);
    }

    #[test]
    fn cloned_states_step_identically() {
        let mut a = AdamState::new(&[2]);
        let mut pa = [0.3, 0.4];
        a.step(&mut [&mut pa], &[&[0.1, -0.2]]).unwrap();
        let mut b = a.clone();
        let mut pb = pa;
        a.step(&mut [&mut pa], &[&[0.5, 0.5]]).unwrap();
        b.step(&mut [&mut pb], &[&[0.5, 0.5]]).unwrap();
        assert_eq!(pa, pb);
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_nan_and_shape_mismatch() {
        let mut adam = AdamState::new(&[1]);
        let mut p = [0.0];
        assert!(matches!(adam.step(&mut [&mut p], &[&[f64::NAN]]), Err(Error::Numerical(_))));
        assert_eq!(adam.t, 0);
        let mut q = [0.0, 0.0];
        assert!(adam.step(&mut [&mut q], &[&[0.0, 0.0]]).is_err());
    }
}
