//! Blind likelihood-based modulation classification for spatial-multiplexing
//! MIMO links.
//!
//! The pipeline runs in two stages. A JADE independent component analysis
//! recovers the channel and the transmitted streams up to permutation and
//! phase; a power-law estimator resolves the phase per hypothesis and an MMSE
//! filter splits the link into per-antenna sub-channels. Each sub-channel is
//! then scored with a Gaussian-mixture likelihood and the per-stream
//! likelihoods are fused with the norm-optimal weighted sum.
//!
//! ```no_run
//! use mimo_amc::prelude::*;
//! use rand::SeedableRng;
//!
//! let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
//! let qpsk = Constellation::new(Scheme::Qpsk);
//! let channel = draw_channel(2, 4, &mut rng).unwrap();
//! let sigma2 = noise_variance_from_snr(15.0, 2);
//! let frame = synthesize_frame(&qpsk, &channel, sigma2, 512, &mut rng).unwrap();
//! let result = classify(&frame, &Constellation::all(), Algorithm::Proposed).unwrap();
//! assert_eq!(result.decided, Scheme::Qpsk);
//! ```

pub mod blind;
pub mod capture;
pub mod channel;
pub mod classifier;
pub mod equalizer;
mod error;
pub mod harness;
pub mod modem;
pub mod numeric;
pub mod report;

pub use error::{Error, Result};

pub mod prelude {
    pub use crate::blind::{estimate_phase, jade_separate, phase_correct, whiten, BlindEstimate};
    pub use crate::channel::{
        derive_seed, draw_channel, noise_variance_from_snr, synthesize_frame, ChannelMatrix,
        MimoFrame,
    };
    pub use crate::classifier::{
        classify, classify_alrt_ub, Algorithm, ClassificationResult, HypothesisScore,
    };
    pub use crate::modem::{Constellation, Scheme};
    pub use crate::{Error, Result};
}
