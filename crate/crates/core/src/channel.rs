//! Rayleigh flat-fading MIMO link synthesis, `r(k) = H s(k) + n(k)`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::modem::{Constellation, Scheme};
use crate::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

/// Noise variance giving `snr_db` under the aggregate convention
/// `SNR = 10 log10(M_T / σ²)` (unit power per transmit antenna).
pub fn noise_variance_from_snr(snr_db: f64, m_t: usize) -> f64 {
    m_t as f64 * 10f64.powf(-snr_db / 10.0)
}

/// Draws one circularly-symmetric complex Gaussian sample of the given variance.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let scale = (variance / 2.0).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re * scale, im * scale)
}

/// `M_R × M_T` matrix of complex path gains.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMatrix {
    entries: CMatrix,
}

impl ChannelMatrix {
    pub fn new(entries: CMatrix) -> Result<Self> {
        let (m_r, m_t) = entries.shape();
        if m_t == 0 || m_r < m_t {
            return Err(Error::Dimension(format!(
                "channel must satisfy M_R >= M_T >= 1, got {m_r}x{m_t}"
            )));
        }
        Ok(Self { entries })
    }

    pub fn identity(m: usize) -> Self {
        Self {
            entries: CMatrix::identity(m, m),
        }
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    pub fn m_t(&self) -> usize {
        self.entries.ncols()
    }

    pub fn m_r(&self) -> usize {
        self.entries.nrows()
    }
}

/// Draws a channel with i.i.d. `CN(0, 1)` entries.
pub fn draw_channel<R: Rng + ?Sized>(m_t: usize, m_r: usize, rng: &mut R) -> Result<ChannelMatrix> {
    if m_t == 0 || m_r < m_t {
        return Err(Error::Dimension(format!(
            "channel must satisfy M_R >= M_T >= 1, got M_T={m_t}, M_R={m_r}"
        )));
    }
    // column-major fill; the draw order is part of the reproducibility contract
    let entries = CMatrix::from_fn(m_r, m_t, |_, _| complex_gaussian(rng, 1.0));
    Ok(ChannelMatrix { entries })
}

/// One observation window: `M_R × N` received samples plus whatever ground
/// truth is known.
#[derive(Debug, Clone, PartialEq)]
pub struct MimoFrame {
    pub received: CMatrix,
    /// `M_T × N` transmitted symbols; absent for ingested captures.
    pub transmitted: Option<CMatrix>,
    pub channel: Option<ChannelMatrix>,
    pub noise_variance: f64,
    pub scheme: Option<Scheme>,
    pub m_t: usize,
}

impl MimoFrame {
    /// Wraps received samples without ground truth, as read from a capture.
    pub fn from_received(received: CMatrix, m_t: usize, noise_variance: f64) -> Result<Self> {
        let frame = Self {
            received,
            transmitted: None,
            channel: None,
            noise_variance,
            scheme: None,
            m_t,
        };
        frame.validate()?;
        Ok(frame)
    }

    pub fn m_r(&self) -> usize {
        self.received.nrows()
    }

    pub fn n(&self) -> usize {
        self.received.ncols()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.noise_variance > 0.0 && self.noise_variance.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "noise variance must be positive and finite, got {}",
                self.noise_variance
            )));
        }
        if self.n() == 0 {
            return Err(Error::Dimension("frame has no samples".into()));
        }
        if self.m_t == 0 || self.m_r() < self.m_t {
            return Err(Error::Dimension(format!(
                "frame must satisfy M_R >= M_T >= 1, got M_R={}, M_T={}",
                self.m_r(),
                self.m_t
            )));
        }
        if let Some(s) = &self.transmitted {
            if s.shape() != (self.m_t, self.n()) {
                return Err(Error::Dimension(format!(
                    "transmitted is {:?}, expected {:?}",
                    s.shape(),
                    (self.m_t, self.n())
                )));
            }
        }
        if let Some(h) = &self.channel {
            if (h.m_r(), h.m_t()) != (self.m_r(), self.m_t) {
                return Err(Error::Dimension(format!(
                    "channel is {}x{}, frame is {}x{}",
                    h.m_r(),
                    h.m_t(),
                    self.m_r(),
                    self.m_t
                )));
            }
        }
        Ok(())
    }

    /// A copy with the ground truth stripped, as a receiver would see it.
    pub fn blind_view(&self) -> MimoFrame {
        MimoFrame {
            received: self.received.clone(),
            transmitted: None,
            channel: None,
            noise_variance: self.noise_variance,
            scheme: None,
            m_t: self.m_t,
        }
    }
}

/// Synthesizes `n` instants of `r = H s + n`.
///
/// Symbols are drawn antenna by antenna (all `n` symbols of antenna 0 first),
/// then the noise column by column.
pub fn synthesize_frame<R: Rng + ?Sized>(
    constellation: &Constellation,
    channel: &ChannelMatrix,
    noise_variance: f64,
    n: usize,
    rng: &mut R,
) -> Result<MimoFrame> {
    if !(noise_variance > 0.0 && noise_variance.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "noise variance must be positive and finite, got {noise_variance}"
        )));
    }
    if n == 0 {
        return Err(Error::InvalidParameter(
            "observation length must be >= 1".into(),
        ));
    }
    let m_t = channel.m_t();
    let m_r = channel.m_r();
    let mut transmitted = CMatrix::zeros(m_t, n);
    for a in 0..m_t {
        let seq = constellation.draw_symbols(n, rng);
        for (k, v) in seq.values.into_iter().enumerate() {
            transmitted[(a, k)] = v;
        }
    }
    let noise = CMatrix::from_fn(m_r, n, |_, _| complex_gaussian(rng, noise_variance));
    let received = channel.entries() * &transmitted + noise;
    Ok(MimoFrame {
        received,
        transmitted: Some(transmitted),
        channel: Some(channel.clone()),
        noise_variance,
        scheme: Some(constellation.scheme()),
        m_t,
    })
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Per-frame seed from the master seed and the cell coordinates.
///
/// Stable across releases and independent of execution order, so parallel
/// sweeps reproduce serial ones.
pub fn derive_seed(master: u64, snr_index: usize, scheme_index: usize, trial_index: usize) -> u64 {
    [snr_index as u64, scheme_index as u64, trial_index as u64]
        .iter()
        .fold(splitmix64(master), |acc, &x| {
            splitmix64(acc ^ splitmix64(x))
        })
}
