//! Blind channel estimation: JADE source separation followed by power-law
//! phase recovery.
//!
//! JADE whitens the observations, builds the fourth-order cumulant matrices
//! of the whitened data and finds the unitary matrix that jointly
//! diagonalizes them with complex Givens rotations. The streams it returns
//! are known only up to order and a unit-modulus factor each; the power-law
//! estimator removes the factor modulo the constellation's rotational
//! symmetry.

use log::debug;
use nalgebra::{Matrix3, SymmetricEigen};
use num_complex::Complex64;

use crate::channel::CMatrix;
use crate::modem::{Constellation, Scheme};
use crate::{Error, Result};

/// Sweep cap for the joint diagonalization.
pub const MAX_SWEEPS: usize = 100;

const EIG_FLOOR: f64 = 1e-9;

/// Noise-adjusted whitening of the signal subspace.
#[derive(Debug, Clone)]
pub struct Whitening {
    /// `M_T × N` whitened observations.
    pub whitened: CMatrix,
    /// `M_T × M_R`; rows are `(λ_i − σ²)^{-1/2} u_iᴴ`.
    pub matrix: CMatrix,
    /// `M_R × M_T` right inverse of `matrix` on the signal subspace.
    pub dewhitening: CMatrix,
    /// Signal-subspace eigenvalues of the sample covariance, descending.
    pub eigenvalues: Vec<f64>,
}

/// Whitens `received` onto its `m_t` dominant eigen-directions, subtracting
/// the known noise variance from each retained eigenvalue.
///
/// Noise-subtracted eigenvalues are floored at `1e-9 · λ_max`. The call fails
/// only when the sample covariance itself has fewer than `m_t` directions
/// above that floor.
pub fn whiten(received: &CMatrix, m_t: usize, noise_variance: f64) -> Result<Whitening> {
    let (m_r, n) = received.shape();
    if m_t == 0 || m_r < m_t {
        return Err(Error::Dimension(format!(
            "cannot extract {m_t} sources from {m_r} sensors"
        )));
    }
    if n == 0 {
        return Err(Error::Dimension("no samples to whiten".into()));
    }
    let cov = received * received.adjoint() / Complex64::new(n as f64, 0.0);
    if cov.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::EstimationFailure(
            "non-finite sample covariance".into(),
        ));
    }
    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..m_r).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

    let lambda_max = eig.eigenvalues[order[0]];
    let floor = EIG_FLOOR * lambda_max;
    if lambda_max.is_nan() || lambda_max <= 0.0 || eig.eigenvalues[order[m_t - 1]] <= floor {
        return Err(Error::EstimationFailure(format!(
            "sample covariance has fewer than {m_t} significant eigenvalues"
        )));
    }

    let mut matrix = CMatrix::zeros(m_t, m_r);
    let mut dewhitening = CMatrix::zeros(m_r, m_t);
    let mut eigenvalues = Vec::with_capacity(m_t);
    for (row, &idx) in order.iter().take(m_t).enumerate() {
        let lambda = eig.eigenvalues[idx];
        let excess = lambda - noise_variance;
        if excess <= floor {
            debug!("eigenvalue {lambda} does not exceed noise variance {noise_variance}; flooring");
        }
        let power = excess.max(floor);
        let u = eig.eigenvectors.column(idx);
        let inv = 1.0 / power.sqrt();
        for a in 0..m_r {
            matrix[(row, a)] = u[a].conj() * inv;
            dewhitening[(a, row)] = u[a] * power.sqrt();
        }
        eigenvalues.push(lambda);
    }
    let whitened = &matrix * received;
    Ok(Whitening {
        whitened,
        matrix,
        dewhitening,
        eigenvalues,
    })
}

/// Output of the JADE stage.
#[derive(Debug, Clone)]
pub struct BlindEstimate {
    /// `M_R × M_T` channel estimate `Ĥ`.
    pub channel_estimate: CMatrix,
    /// `M_T × N` separated streams, each scaled to unit average power.
    pub separated_streams: CMatrix,
    /// `M_T × M_R` noise-adjusted whitening matrix.
    pub whitening_matrix: CMatrix,
    /// Jacobi sweeps used by the joint diagonalization.
    pub sweeps: usize,
}

impl BlindEstimate {
    pub fn m_t(&self) -> usize {
        self.separated_streams.nrows()
    }

    pub fn stream(&self, m: usize) -> Vec<Complex64> {
        self.separated_streams.row(m).iter().copied().collect()
    }

    /// Power-law phase estimates of every separated stream under `constellation`.
    pub fn phase_corrections(&self, constellation: &Constellation) -> PhaseCorrection {
        let phases = (0..self.m_t())
            .map(|m| estimate_phase(self.separated_streams.row(m).iter().copied(), constellation))
            .collect();
        PhaseCorrection {
            phases,
            hypothesis: constellation.scheme(),
        }
    }

    /// Reorders sources; applying the same permutation to `Ĥ` columns and
    /// stream rows leaves the model unchanged.
    pub fn permuted(&self, perm: &[usize]) -> BlindEstimate {
        let m_t = self.m_t();
        assert_eq!(perm.len(), m_t);
        let mut out = self.clone();
        for (dst, &src) in perm.iter().enumerate() {
            out.channel_estimate
                .set_column(dst, &self.channel_estimate.column(src));
            out.separated_streams
                .set_row(dst, &self.separated_streams.row(src));
            out.whitening_matrix
                .set_row(dst, &self.whitening_matrix.row(src));
        }
        out
    }
}

/// Per-stream phase estimates under one hypothesis.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseCorrection {
    /// Radians, each in `[0, 2π/P)`.
    pub phases: Vec<f64>,
    pub hypothesis: Scheme,
}

/// Separates `m_t` sources from `received` with JADE.
pub fn jade_separate(received: &CMatrix, m_t: usize, noise_variance: f64) -> Result<BlindEstimate> {
    let n = received.ncols();
    let white = whiten(received, m_t, noise_variance)?;
    let cumulants = cumulant_matrices(&white.whitened);
    let threshold = 1e-8 / (n as f64).sqrt();
    let (rotation, sweeps) = joint_diagonalize(cumulants, threshold, MAX_SWEEPS)?;

    let unmixing = rotation.adjoint() * &white.matrix;
    let mut streams = &unmixing * received;
    for m in 0..m_t {
        let power = streams.row(m).iter().map(|v| v.norm_sqr()).sum::<f64>() / n as f64;
        if !(power > 0.0 && power.is_finite()) {
            return Err(Error::EstimationFailure(format!(
                "separated stream {m} has no power"
            )));
        }
        let inv = 1.0 / power.sqrt();
        streams.row_mut(m).iter_mut().for_each(|v| *v *= inv);
    }

    // Columns carry the noise-adjusted signal amplitude; Ĥ (D ⊙ s̃) with D the
    // removed stream scale reproduces the signal-subspace projection.
    let channel_estimate = &white.dewhitening * &rotation;
    for m in 0..m_t {
        let norm = channel_estimate.column(m).norm();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::EstimationFailure(format!(
                "channel column {m} is degenerate"
            )));
        }
    }
    Ok(BlindEstimate {
        channel_estimate,
        separated_streams: streams,
        whitening_matrix: white.matrix,
        sweeps,
    })
}

/// The `M_T²` matrices `Q^{cd}_{ab} = cum(z_a, z_b*, z_c, z_d*)`.
///
/// With `z = U s` each one equals `U diag(κ_k U_ck U_dk*) Uᴴ`, so `U` is a
/// joint diagonalizer of the whole set. The set is closed under conjugate
/// transposition (`Q^{dc} = (Q^{cd})ᴴ`).
pub fn cumulant_matrices(z: &CMatrix) -> Vec<CMatrix> {
    let (m, n) = z.shape();
    let nf = n as f64;
    let cov = z * z.adjoint() / Complex64::new(nf, 0.0);
    let pseudo = z * z.transpose() / Complex64::new(nf, 0.0);

    let mut out = Vec::with_capacity(m * m);
    for c in 0..m {
        for d in 0..m {
            let mut q = CMatrix::zeros(m, m);
            for k in 0..n {
                let w = z[(c, k)] * z[(d, k)].conj();
                for a in 0..m {
                    let wa = w * z[(a, k)];
                    for b in 0..m {
                        q[(a, b)] += wa * z[(b, k)].conj();
                    }
                }
            }
            for a in 0..m {
                for b in 0..m {
                    q[(a, b)] = q[(a, b)] / nf
                        - cov[(a, b)] * cov[(c, d)]
                        - pseudo[(a, c)] * pseudo[(b, d)].conj()
                        - cov[(a, d)] * cov[(c, b)];
                }
            }
            out.push(q);
        }
    }
    out
}

/// Sum of squared off-diagonal moduli over a set of square matrices.
pub fn off_diagonal_energy(matrices: &[CMatrix]) -> f64 {
    matrices
        .iter()
        .map(|q| {
            let mut acc = 0.0;
            for a in 0..q.nrows() {
                for b in 0..q.ncols() {
                    if a != b {
                        acc += q[(a, b)].norm_sqr();
                    }
                }
            }
            acc
        })
        .sum()
}

/// Jointly diagonalizes `matrices` by complex Givens rotations.
///
/// Returns the unitary `V` (so that `Vᴴ Q V` is as diagonal as possible for
/// every `Q`) and the number of sweeps. A sweep with no rotation larger than
/// `threshold` ends the iteration; exceeding `max_sweeps` is an error.
pub fn joint_diagonalize(
    mut matrices: Vec<CMatrix>,
    threshold: f64,
    max_sweeps: usize,
) -> Result<(CMatrix, usize)> {
    let m = matrices.first().map_or(0, |q| q.nrows());
    let mut v = CMatrix::identity(m, m);
    if m < 2 {
        return Ok((v, 0));
    }
    let mut sweeps = 0;
    loop {
        let mut rotated = false;
        for p in 0..m - 1 {
            for q in p + 1..m {
                let Some((c, s)) = givens_angles(&matrices, p, q) else {
                    continue;
                };
                if s.norm() <= threshold {
                    continue;
                }
                rotated = true;
                let cc = Complex64::new(c, 0.0);
                // V ← V G with G = [c, -s*; s, c]
                for r in 0..m {
                    let (vp, vq) = (v[(r, p)], v[(r, q)]);
                    v[(r, p)] = vp * cc + vq * s;
                    v[(r, q)] = -vp * s.conj() + vq * cc;
                }
                for a in matrices.iter_mut() {
                    // rows: A ← Gᴴ A
                    for col in 0..m {
                        let (ap, aq) = (a[(p, col)], a[(q, col)]);
                        a[(p, col)] = cc * ap + s.conj() * aq;
                        a[(q, col)] = -s * ap + cc * aq;
                    }
                    // columns: A ← A G
                    for row in 0..m {
                        let (ap, aq) = (a[(row, p)], a[(row, q)]);
                        a[(row, p)] = ap * cc + aq * s;
                        a[(row, q)] = -ap * s.conj() + aq * cc;
                    }
                }
            }
        }
        sweeps += 1;
        if !rotated {
            return Ok((v, sweeps));
        }
        if sweeps >= max_sweeps {
            return Err(Error::EstimationFailure(format!(
                "joint diagonalization did not converge in {max_sweeps} sweeps"
            )));
        }
    }
}

/// Closed-form optimal rotation for the pair `(p, q)`.
fn givens_angles(matrices: &[CMatrix], p: usize, q: usize) -> Option<(f64, Complex64)> {
    // Real 3-vectors [a_pp − a_qq, a_pq + a_qp, i(a_qp − a_pq)] accumulated as
    // Re(B g gᴴ Bᴴ); the dominant eigenvector gives the angles.
    let mut gram = Matrix3::<f64>::zeros();
    for a in matrices {
        let g1 = a[(p, p)] - a[(q, q)];
        let g2 = a[(p, q)] + a[(q, p)];
        let g3 = Complex64::i() * (a[(q, p)] - a[(p, q)]);
        let g = [g1, g2, g3];
        for r in 0..3 {
            for c in 0..3 {
                gram[(r, c)] += (g[r] * g[c].conj()).re;
            }
        }
    }
    if !gram.iter().all(|x| x.is_finite()) {
        return None;
    }
    let eig = SymmetricEigen::new(gram);
    let top = (0..3).max_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]))?;
    let mut angles = eig.eigenvectors.column(top).into_owned();
    if angles[0] < 0.0 {
        angles = -angles;
    }
    let c = (0.5 + angles[0] / 2.0).sqrt();
    if c == 0.0 {
        return None;
    }
    let s = Complex64::new(angles[1], -angles[2]) * (0.5 / c);
    Some((c, s))
}

/// Power-law phase estimate of one stream under `constellation`:
/// `θ̂ = arg(conj(E[s^P]) Σ z^P) / P`, reduced to `[0, 2π/P)`.
///
/// A vanishing power sum carries no phase information and yields 0.
pub fn estimate_phase<I>(stream: I, constellation: &Constellation) -> f64
where
    I: IntoIterator<Item = Complex64>,
{
    let order = constellation.power_law_order();
    let sum: Complex64 = stream.into_iter().map(|z| z.powu(order)).sum();
    if sum.norm() < 1e-12 {
        debug!(
            "power-law sum vanished under {}; phase set to 0",
            constellation.scheme()
        );
        return 0.0;
    }
    let period = 2.0 * std::f64::consts::PI / order as f64;
    let theta = (constellation.reference_moment().conj() * sum).arg() / order as f64;
    let reduced = theta.rem_euclid(period);
    // rem_euclid can round up to exactly `period`
    if reduced >= period {
        0.0
    } else {
        reduced
    }
}

/// `Ĥ^{(A)} = Ĥ · diag(e^{jθ̂_m})`.
pub fn phase_correct(channel_estimate: &CMatrix, correction: &PhaseCorrection) -> Result<CMatrix> {
    if correction.phases.len() != channel_estimate.ncols() {
        return Err(Error::Dimension(format!(
            "{} phases for a channel with {} columns",
            correction.phases.len(),
            channel_estimate.ncols()
        )));
    }
    let mut out = channel_estimate.clone();
    for (m, &theta) in correction.phases.iter().enumerate() {
        let rot = Complex64::from_polar(1.0, theta);
        out.column_mut(m).iter_mut().for_each(|v| *v *= rot);
    }
    Ok(out)
}

/// Circular distance of `theta` from zero modulo `period`.
pub fn wrapped_distance(theta: f64, period: f64) -> f64 {
    let r = theta.rem_euclid(period);
    r.min(period - r)
}
