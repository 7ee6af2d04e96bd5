//! Feature-space CycleGAN between synthetic (A) and real (B) pooled vectors.
//!
//! `G_A` maps synthetic→real, `G_B` real→synthetic. `D_A` judges real-domain
//! vectors (true real vs `G_A` output), `D_B` synthetic-domain vectors.

mod loss;
mod model;
mod train;

pub use loss::{
    composite_loss, discriminator_backward, discriminator_loss, kink_margin, DiscriminatorLosses, GeneratorPass, Lambdas,
    LossTerms,
};
pub use model::{CycleGanModel, NetDims, Networks};
pub use train::{train, train_observed, CycleGanTrainConfig, EpochLosses, TrainReport};
