use rayon::prelude::*;
use switchcode_core::Executor;

use crate::error::{Error, Result};

/// Rayon-backed executor. Results come back in index order, so reductions in
/// the core crate see the same partial sums whatever the thread count.
pub struct Pool {
    pool: rayon::ThreadPool,
}

impl Pool {
    pub fn new(threads: usize) -> Result<Self> {
        if threads == 0 {
            return Err(Error::Config("--threads must be at least 1".into()));
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
        Ok(Pool { pool })
    }

    pub fn threads(&self) -> usize {
        self.pool.current_num_threads()
    }
}

impl Executor for Pool {
    fn map_indexed<T, F>(&self, count: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync,
    {
        self.pool.install(|| (0..count).into_par_iter().map(&f).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use switchcode_core::training::sgd_train_with;
    use switchcode_core::{gen_gaussian, Activation, Matrix, Model, ModelSpec, Sequential, TrainConfig};

    #[test]
    fn training_is_thread_count_invariant() {
        let data = gen_gaussian(300, &[0.0; 3], &Matrix::identity(3), 2).unwrap();
        let spec = ModelSpec {
            input_dim: 3,
            layers: vec![(5, Activation::RectifiedLinear)],
            tied: true,
        };
        let model = Model::init(&spec, 1).unwrap();
        let cfg = TrainConfig {
            epochs: 3,
            batch_size: 64,
            l1_weight: 0.01,
            ..TrainConfig::default()
        };
        let seq = sgd_train_with(&Sequential, &model, &data, &cfg, |_, _, _| {}).unwrap();
        for t in [1, 3, 4] {
            let par = sgd_train_with(&Pool::new(t).unwrap(), &model, &data, &cfg, |_, _, _| {}).unwrap();
            assert_eq!(par, seq);
        }
    }

    #[test]
    fn zero_threads_rejected() {
        assert!(matches!(Pool::new(0), Err(Error::Config(_))));
    }
}
