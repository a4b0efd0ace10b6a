use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Epochs during which the learning rate is fixed and the reversal strength is 0.
pub const DEFAULT_WARMUP_EPOCHS: usize = 50;

/// Learning rate and reversal strength for one epoch.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScheduleState<T> {
    pub epoch: usize,
    pub total_epochs: usize,
    /// `(epoch - warmup) / total` after warmup, 0 before.
    pub progress: T,
    pub lr: T,
    pub rho: T,
}

/// Closed-form schedule parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Schedule<T> {
    pub base_lr: T,
    pub alpha: T,
    pub beta: T,
    pub gamma: T,
    pub total_epochs: usize,
    pub warmup_epochs: usize,
}

impl<T: Scalar> Schedule<T> {
    /// For `epoch <= warmup` the rate is `base_lr` and `rho = 0`. Afterwards,
    /// with `p = (epoch - warmup) / total`, the rate is
    /// `base_lr / (1 + alpha p)^beta` and `rho = 2 / (1 + exp(-gamma p)) - 1`.
    pub fn at(&self, epoch: usize) -> Result<ScheduleState<T>> {
        if epoch == 0 || epoch > self.total_epochs {
            return Err(Error::Config(format!(
                "epoch {epoch} outside 1..={}",
                self.total_epochs
            )));
        }
        if epoch <= self.warmup_epochs {
            return Ok(ScheduleState {
                epoch,
                total_epochs: self.total_epochs,
                progress: T::zero(),
                lr: self.base_lr,
                rho: T::zero(),
            });
        }
        let p = T::of_usize(epoch - self.warmup_epochs) / T::of_usize(self.total_epochs);
        let lr = self.base_lr / (T::one() + self.alpha * p).powf(self.beta);
        let rho = T::of(2.0) / (T::one() + (-self.gamma * p).exp()) - T::one();
        Ok(ScheduleState {
            epoch,
            total_epochs: self.total_epochs,
            progress: p,
            lr,
            rho,
        })
    }

    /// Largest `rho` reached at the final epoch.
    pub fn max_rho(&self) -> T {
        self.at(self.total_epochs).map(|s| s.rho).unwrap_or_else(|_| T::zero())
    }
}

/// `(lr, rho)` at epoch `e` of `t` with the standard 50-epoch warmup.
pub fn schedule<T: Scalar>(e: usize, t: usize, l: T, alpha: T, beta: T, gamma: T) -> Result<(T, T)> {
    let s = Schedule {
        base_lr: l,
        alpha,
        beta,
        gamma,
        total_epochs: t,
        warmup_epochs: DEFAULT_WARMUP_EPOCHS,
    };
    s.at(e).map(|st| (st.lr, st.rho))
}
