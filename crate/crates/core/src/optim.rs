//! Plain stochastic gradient descent.

use crate::error::TensorError;
use crate::tensor::ParamStore;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SgdOptimizer {
    pub learning_rate: f64,
}

impl SgdOptimizer {
    pub fn new(learning_rate: f64) -> Result<Self, TensorError> {
        if !(learning_rate >= 0.0 && learning_rate.is_finite()) {
            return Err(TensorError::Usage(format!(
                "learning rate must be finite and non-negative, got {learning_rate}"
            )));
        }
        Ok(SgdOptimizer { learning_rate })
    }

    /// `p ← p − lr · grad(p)` for every parameter, then clears the gradients.
    ///
    /// Fails if no backward pass has been accumulated since the last step.
    pub fn step(&self, params: &mut ParamStore) -> Result<(), TensorError> {
        if !params.has_gradients() {
            return Err(TensorError::Usage(
                "sgd step called before a backward pass".into(),
            ));
        }
        let ids: Vec<_> = params.ids().collect();
        for id in ids {
            if params.grad(id).iter().all(|&g| g == 0.0) {
                continue;
            }
            let update: Vec<f64> = params
                .grad(id)
                .iter()
                .map(|g| self.learning_rate * g)
                .collect();
            for (p, u) in params.value_mut(id).iter_mut().zip(update) {
                *p -= u;
            }
        }
        params.zero_grads();
        Ok(())
    }
}
