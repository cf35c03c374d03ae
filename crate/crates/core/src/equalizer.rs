//! MMSE sub-channel separation.
//!
//! Under a hypothesis the filter `G = Ĥ (ĤᴴĤ + σ²I)⁻¹` turns the link into
//! `M_T` scalar channels `ŝ_i = c_i s_i + w_i`, where `c_i = g_iᴴ ĥ_i` and the
//! residual interference plus noise `w_i` is treated as Gaussian with variance
//! `c_i (1 − c_i)`.

use num_complex::Complex64;

use crate::channel::CMatrix;
use crate::modem::Scheme;
use crate::{Error, Result};

const VARIANCE_FLOOR: f64 = 1e-12;

/// One equalized sub-channel.
#[derive(Debug, Clone)]
pub struct EqualizedStream {
    pub estimates: Vec<Complex64>,
    pub effective_gain: f64,
    pub distortion_variance: f64,
    pub stream_index: usize,
    pub hypothesis: Scheme,
}

/// `M_R × M_T` MMSE filter for `channel`, via a Cholesky solve of
/// `ĤᴴĤ + σ²I`.
pub fn mmse_filter(channel: &CMatrix, noise_variance: f64) -> Result<CMatrix> {
    if channel
        .iter()
        .any(|v| !v.re.is_finite() || !v.im.is_finite())
    {
        return Err(Error::InvalidParameter(
            "channel estimate has non-finite entries".into(),
        ));
    }
    if !(noise_variance > 0.0 && noise_variance.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "noise variance must be positive, got {noise_variance}"
        )));
    }
    let m_t = channel.ncols();
    let mut gram = channel.adjoint() * channel;
    for i in 0..m_t {
        gram[(i, i)] += Complex64::new(noise_variance, 0.0);
    }
    let chol = gram
        .cholesky()
        .ok_or_else(|| Error::Inconsistent("MMSE system is not positive definite".into()))?;
    // Gᴴ = (ĤᴴĤ + σ²I)⁻¹ Ĥᴴ since the system matrix is Hermitian
    let g_adj = chol.solve(&channel.adjoint());
    Ok(g_adj.adjoint())
}

/// Applies the filter: column `k` of the result is `Gᴴ r(k)`.
pub fn equalize(filter: &CMatrix, received: &CMatrix) -> Result<CMatrix> {
    if filter.nrows() != received.nrows() {
        return Err(Error::Dimension(format!(
            "filter has {} rows but received has {}",
            filter.nrows(),
            received.nrows()
        )));
    }
    Ok(filter.adjoint() * received)
}

/// `c_i = Re(g_iᴴ ĥ_i)` for stream `i` (zero-based).
pub fn effective_gain(filter: &CMatrix, channel: &CMatrix, i: usize) -> Result<f64> {
    if filter.shape() != channel.shape() {
        return Err(Error::Dimension(format!(
            "filter {:?} and channel {:?} differ in shape",
            filter.shape(),
            channel.shape()
        )));
    }
    if i >= channel.ncols() {
        return Err(Error::InvalidParameter(format!(
            "stream index {i} out of range for {} streams",
            channel.ncols()
        )));
    }
    let c = filter.column(i).dotc(&channel.column(i));
    if c.im.abs() >= 1e-6 {
        return Err(Error::Inconsistent(format!(
            "effective gain of stream {i} has imaginary part {}",
            c.im
        )));
    }
    Ok(c.re)
}

/// `σ²_w = c (1 − c)`, kept within `[1e-12, 0.25 + 1e-12]`.
pub fn distortion_variance(c: f64) -> Result<f64> {
    const TOL: f64 = 1e-9;
    if !c.is_finite() || !(-TOL..=1.0 + TOL).contains(&c) {
        return Err(Error::InvalidParameter(format!(
            "effective gain {c} outside (0, 1)"
        )));
    }
    Ok((c * (1.0 - c)).clamp(VARIANCE_FLOOR, 0.25 + VARIANCE_FLOOR))
}

/// Filters `received` through the MMSE filter of `channel` and returns the
/// per-stream estimates with their Gaussian model parameters.
pub fn equalize_streams(
    channel: &CMatrix,
    noise_variance: f64,
    received: &CMatrix,
    hypothesis: Scheme,
) -> Result<Vec<EqualizedStream>> {
    let filter = mmse_filter(channel, noise_variance)?;
    let outputs = equalize(&filter, received)?;
    (0..channel.ncols())
        .map(|i| {
            let c = effective_gain(&filter, channel, i)?;
            Ok(EqualizedStream {
                estimates: outputs.row(i).iter().copied().collect(),
                effective_gain: c,
                distortion_variance: distortion_variance(c)?,
                stream_index: i,
                hypothesis,
            })
        })
        .collect()
}
