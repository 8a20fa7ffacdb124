//! RF waveform workbench: baseband dataset synthesis, a CNN modulation
//! classifier, a stochastically quantized VQVAE, white-box adversarial
//! attacks, and the metrics that quantify how much reconstruction through
//! the VQVAE's discrete latent space suppresses those attacks.

pub mod error;
pub mod neuralcore;
pub mod seeding;
pub mod waveforms;

pub use error::{Result, RfError};
