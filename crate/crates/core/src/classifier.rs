//! Likelihood scoring, fusion and the final decision.
//!
//! Every quantity is kept in the log domain. A per-stream likelihood over a
//! few hundred symbols is far below the smallest positive `f64`, so products
//! become sums and sums of exponentials go through max-subtracted
//! log-sum-exp.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::blind::{jade_separate, phase_correct, BlindEstimate, PhaseCorrection};
use crate::channel::MimoFrame;
use crate::equalizer::equalize_streams;
use crate::modem::{Constellation, Scheme};
use crate::numeric::{log_sum_exp, LogSumExp};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    /// Norm-optimal weighted sum of per-stream likelihoods.
    Proposed,
    /// Product of per-stream likelihoods.
    Product,
    /// Arithmetic mean of per-stream likelihoods.
    EqualWeight,
    /// Average likelihood of the received vectors with the true channel.
    AlrtUb,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [
        Algorithm::Proposed,
        Algorithm::Product,
        Algorithm::EqualWeight,
        Algorithm::AlrtUb,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Proposed => "proposed",
            Algorithm::Product => "product",
            Algorithm::EqualWeight => "equal_weight",
            Algorithm::AlrtUb => "alrt_ub",
        }
    }

    /// Whether the algorithm runs on blind estimates (as opposed to the
    /// true channel).
    pub fn is_blind(self) -> bool {
        self != Algorithm::AlrtUb
    }

    pub fn parse_list(s: &str) -> Result<Vec<Algorithm>> {
        let list = s
            .split(',')
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .map(Algorithm::from_str)
            .collect::<Result<Vec<_>>>()?;
        if list.is_empty() {
            return Err(Error::Config("empty algorithm list".into()));
        }
        Ok(list)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "proposed" | "weighted" => Ok(Algorithm::Proposed),
            "product" => Ok(Algorithm::Product),
            "equal_weight" | "equal" => Ok(Algorithm::EqualWeight),
            "alrt_ub" | "alrt" => Ok(Algorithm::AlrtUb),
            _ => Err(Error::UnsupportedAlgorithm(s.to_string())),
        }
    }
}

/// Score of one candidate scheme.
#[derive(Debug, Clone, PartialEq)]
pub struct HypothesisScore {
    pub hypothesis: Scheme,
    /// `log f(ŝ_i)` per stream.
    pub stream_loglik: Vec<f64>,
    /// Norm-optimal weights `β` for `stream_loglik`.
    pub weights: Vec<f64>,
    /// The fused score under the selected rule.
    pub combined_log: f64,
    pub phases_used: Option<PhaseCorrection>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassificationResult {
    pub decided: Scheme,
    /// Best first; equal scores keep candidate order.
    pub ranked: Vec<HypothesisScore>,
    pub algorithm: Algorithm,
}

/// Log-likelihood of one equalized stream under `constellation`:
///
/// `−N log(|A| π σ²_w) + Σ_k LSE_s(−|ŝ(k) − c s|² / σ²_w)`.
pub fn stream_log_likelihood(
    estimates: &[Complex64],
    gain: f64,
    sigma_w2: f64,
    constellation: &Constellation,
) -> Result<f64> {
    if estimates.is_empty() {
        return Err(Error::InvalidParameter("empty symbol sequence".into()));
    }
    if !(sigma_w2 > 0.0 && sigma_w2.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "distortion variance {sigma_w2}"
        )));
    }
    let scaled: Vec<Complex64> = constellation.points().iter().map(|p| p * gain).collect();
    let inv = 1.0 / sigma_w2;
    let mut total = 0.0;
    for z in estimates {
        let mut acc = LogSumExp::default();
        for p in &scaled {
            acc.push(-(z - p).norm_sqr() * inv);
        }
        total += acc.value();
    }
    let norm = (constellation.cardinality() as f64 * std::f64::consts::PI * sigma_w2).ln();
    Ok(total - estimates.len() as f64 * norm)
}

/// Norm-optimal weighted sum. Returns `(log ‖f‖₂, β)` with `β = f / ‖f‖₂`.
pub fn fuse_weighted_sum(stream_loglik: &[f64]) -> (f64, Vec<f64>) {
    let doubled: Vec<f64> = stream_loglik.iter().map(|l| 2.0 * l).collect();
    let combined = 0.5 * log_sum_exp(&doubled);
    let weights = stream_loglik.iter().map(|l| (l - combined).exp()).collect();
    (combined, weights)
}

/// Product rule: `Σ log f_i`.
pub fn fuse_product(stream_loglik: &[f64]) -> f64 {
    stream_loglik.iter().sum()
}

/// Equal-weight rule: `log((1/M_T) Σ f_i)`.
pub fn fuse_equal_weight(stream_loglik: &[f64]) -> f64 {
    log_sum_exp(stream_loglik) - (stream_loglik.len() as f64).ln()
}

/// Fuses per-stream log-likelihoods with one of the blind rules.
pub fn fuse(stream_loglik: &[f64], algorithm: Algorithm) -> Result<f64> {
    match algorithm {
        Algorithm::Proposed => Ok(fuse_weighted_sum(stream_loglik).0),
        Algorithm::Product => Ok(fuse_product(stream_loglik)),
        Algorithm::EqualWeight => Ok(fuse_equal_weight(stream_loglik)),
        Algorithm::AlrtUb => Err(Error::InvalidParameter(
            "alrt_ub is not a per-stream fusion rule".into(),
        )),
    }
}

/// Per-stream likelihoods of one hypothesis, before fusion.
#[derive(Debug, Clone, PartialEq)]
pub struct StreamScores {
    pub hypothesis: Scheme,
    pub stream_loglik: Vec<f64>,
    pub phases: PhaseCorrection,
}

/// Runs the HLRT pipeline for one hypothesis on an existing blind estimate:
/// phase estimation and correction, MMSE equalization and per-stream
/// likelihoods.
pub fn score_hypothesis(
    estimate: &BlindEstimate,
    frame: &MimoFrame,
    constellation: &Constellation,
) -> Result<StreamScores> {
    let phases = estimate.phase_corrections(constellation);
    let channel = phase_correct(&estimate.channel_estimate, &phases)?;
    let streams = equalize_streams(
        &channel,
        frame.noise_variance,
        &frame.received,
        constellation.scheme(),
    )?;
    let stream_loglik = streams
        .iter()
        .map(|s| {
            stream_log_likelihood(
                &s.estimates,
                s.effective_gain,
                s.distortion_variance,
                constellation,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(StreamScores {
        hypothesis: constellation.scheme(),
        stream_loglik,
        phases,
    })
}

/// Blind estimation once, then every hypothesis. Shared by all the blind
/// fusion rules.
pub fn score_hypotheses(
    frame: &MimoFrame,
    candidates: &[Constellation],
) -> Result<Vec<StreamScores>> {
    frame.validate()?;
    if candidates.is_empty() {
        return Err(Error::InvalidParameter("no candidate schemes".into()));
    }
    let estimate = jade_separate(&frame.received, frame.m_t, frame.noise_variance)?;
    candidates
        .iter()
        .map(|constellation| score_hypothesis(&estimate, frame, constellation))
        .collect()
}

/// Applies a blind fusion rule to precomputed per-stream scores and ranks
/// the hypotheses.
pub fn decide(scores: &[StreamScores], algorithm: Algorithm) -> Result<ClassificationResult> {
    let ranked = scores
        .iter()
        .map(|s| {
            let (_, weights) = fuse_weighted_sum(&s.stream_loglik);
            Ok(HypothesisScore {
                hypothesis: s.hypothesis,
                combined_log: fuse(&s.stream_loglik, algorithm)?,
                stream_loglik: s.stream_loglik.clone(),
                weights,
                phases_used: Some(s.phases.clone()),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    rank(ranked, algorithm)
}

fn rank(mut ranked: Vec<HypothesisScore>, algorithm: Algorithm) -> Result<ClassificationResult> {
    if ranked.is_empty() {
        return Err(Error::InvalidParameter("no candidate schemes".into()));
    }
    if let Some(bad) = ranked.iter().find(|h| !h.combined_log.is_finite()) {
        return Err(Error::Inconsistent(format!(
            "non-finite score {} for {}",
            bad.combined_log, bad.hypothesis
        )));
    }
    // stable sort: ties stay in candidate order
    ranked.sort_by(|a, b| b.combined_log.total_cmp(&a.combined_log));
    Ok(ClassificationResult {
        decided: ranked[0].hypothesis,
        ranked,
        algorithm,
    })
}

/// Classifies a frame among `candidates`.
///
/// The blind rules use only the received samples, `M_T` and `σ²`;
/// [`Algorithm::AlrtUb`] is forwarded to [`classify_alrt_ub`] and needs the
/// true channel.
pub fn classify(
    frame: &MimoFrame,
    candidates: &[Constellation],
    algorithm: Algorithm,
) -> Result<ClassificationResult> {
    if algorithm == Algorithm::AlrtUb {
        return classify_alrt_ub(frame, candidates);
    }
    decide(&score_hypotheses(frame, candidates)?, algorithm)
}

/// Perfect-CSI average log-likelihood of the received vectors,
/// enumerating all `|A|^{M_T}` joint symbol vectors per instant.
pub fn alrt_ub_log_likelihood(frame: &MimoFrame, constellation: &Constellation) -> Result<f64> {
    frame.validate()?;
    let channel = frame.channel.as_ref().ok_or(Error::MissingChannel)?;
    let h = channel.entries();
    let (m_r, m_t) = h.shape();
    let card = constellation.cardinality();
    let joint = card
        .checked_pow(m_t as u32)
        .filter(|&j| j <= 1 << 20)
        .ok_or_else(|| {
            Error::InvalidParameter(format!("{card}^{m_t} joint symbols is too many"))
        })?;

    // noise-free images H s of every joint symbol vector, stored row-major
    let mut images = vec![Complex64::new(0.0, 0.0); joint * m_r];
    for j in 0..joint {
        let mut idx = j;
        for t in 0..m_t {
            let s = constellation.points()[idx % card];
            idx /= card;
            for a in 0..m_r {
                images[j * m_r + a] += h[(a, t)] * s;
            }
        }
    }

    let s2 = frame.noise_variance;
    let inv = 1.0 / s2;
    let per_instant =
        m_t as f64 * (card as f64).ln() + m_r as f64 * (std::f64::consts::PI * s2).ln();
    let mut total = 0.0;
    let mut column = vec![Complex64::new(0.0, 0.0); m_r];
    for k in 0..frame.n() {
        for (a, slot) in column.iter_mut().enumerate() {
            *slot = frame.received[(a, k)];
        }
        let mut acc = LogSumExp::default();
        for img in images.chunks_exact(m_r) {
            let d: f64 = column
                .iter()
                .zip(img)
                .map(|(r, x)| (r - x).norm_sqr())
                .sum();
            acc.push(-d * inv);
        }
        total += acc.value() - per_instant;
    }
    Ok(total)
}

/// ALRT decision with the true channel and noise variance.
pub fn classify_alrt_ub(
    frame: &MimoFrame,
    candidates: &[Constellation],
) -> Result<ClassificationResult> {
    let ranked = candidates
        .iter()
        .map(|constellation| {
            let ll = alrt_ub_log_likelihood(frame, constellation)?;
            Ok(HypothesisScore {
                hypothesis: constellation.scheme(),
                stream_loglik: vec![ll],
                weights: vec![1.0],
                combined_log: ll,
                phases_used: None,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    rank(ranked, Algorithm::AlrtUb)
}

/// Likelihood terms evaluated per received instant under one hypothesis:
/// `M_T |A|` for the blind rules, `|A|^{M_T}` for the ALRT.
pub fn inner_terms_per_symbol(
    algorithm: Algorithm,
    constellation: &Constellation,
    m_t: usize,
) -> usize {
    match algorithm {
        Algorithm::AlrtUb => constellation.cardinality().pow(m_t as u32),
        _ => constellation.cardinality() * m_t,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{
        draw_channel, noise_variance_from_snr, synthesize_frame, CMatrix, ChannelMatrix,
    };
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Linear-domain likelihood of one stream, straight from the product
    /// form. Only usable while the product stays representable.
    fn brute_stream_likelihood(
        z: &[Complex64],
        c: f64,
        s2: f64,
        constellation: &Constellation,
    ) -> f64 {
        let card = constellation.cardinality() as f64;
        let mut prod = 1.0;
        for zk in z {
            let sum: f64 = constellation
                .points()
                .iter()
                .map(|p| (-(zk - p * c).norm_sqr() / s2).exp())
                .sum();
            prod *= sum / (card * std::f64::consts::PI * s2);
        }
        prod
    }

    #[test]
    fn single_symbol_bpsk_value() {
        let bpsk = Constellation::new(Scheme::Bpsk);
        let ll = stream_log_likelihood(&[Complex64::new(0.0, 0.0)], 1.0, 1.0, &bpsk).unwrap();
        let expected = ((-1.0f64).exp() / std::f64::consts::PI).ln();
        assert!((ll - expected).abs() < 1e-12);
        assert!((ll + 2.14473).abs() < 1e-5);
    }

    #[test]
    fn log_domain_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for _ in 0..200 {
            let constellation = Constellation::new(Scheme::ALL[rng.random_range(0..4)]);
            let n = rng.random_range(1..=8);
            let c = rng.random_range(0.2..1.0);
            let s2 = rng.random_range(0.05..0.25);
            let z: Vec<Complex64> = (0..n)
                .map(|_| Complex64::new(rng.random_range(-1.2..1.2), rng.random_range(-1.2..1.2)))
                .collect();
            let got = stream_log_likelihood(&z, c, s2, &constellation).unwrap();
            let want = brute_stream_likelihood(&z, c, s2, &constellation).ln();
            assert!((got - want).abs() < 1e-9, "{got} vs {want}");
        }
    }

    #[test]
    fn bpsk_symmetry_and_empty_input() {
        let bpsk = Constellation::new(Scheme::Bpsk);
        let z = [Complex64::new(0.3, -0.8), Complex64::new(-1.1, 0.2)];
        let neg: Vec<Complex64> = z.iter().map(|v| -v).collect();
        let a = stream_log_likelihood(&z, 0.7, 0.2, &bpsk).unwrap();
        let b = stream_log_likelihood(&neg, 0.7, 0.2, &bpsk).unwrap();
        assert!((a - b).abs() < 1e-12);
        assert!(stream_log_likelihood(&[], 0.7, 0.2, &bpsk).is_err());
    }

    #[test]
    fn weighted_sum_examples() {
        let (comb, w) = fuse_weighted_sum(&[3f64.ln(), 4f64.ln()]);
        assert!((comb - 5f64.ln()).abs() < 1e-15);
        assert!((w[0] - 0.6).abs() < 1e-15 && (w[1] - 0.8).abs() < 1e-15);

        let (comb, w) = fuse_weighted_sum(&[-1234.5]);
        assert_eq!(comb, -1234.5);
        assert_eq!(w, vec![1.0]);

        let a = -812.25;
        let (comb, w) = fuse_weighted_sum(&[a, a]);
        assert!((comb - (a + 0.5 * 2f64.ln())).abs() < 1e-12);
        for wi in w {
            assert!((wi - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        }
    }

    #[test]
    fn product_and_equal_weight_examples() {
        let l = [3f64.ln(), 4f64.ln()];
        assert!((fuse_product(&l) - 12f64.ln()).abs() < 1e-15);
        assert!((fuse_equal_weight(&l) - 3.5f64.ln()).abs() < 1e-15);
        assert_eq!(fuse_product(&[-7.5]), -7.5);
        assert!((fuse_equal_weight(&[-7.5]) + 7.5).abs() < 1e-15);
        assert!((fuse_equal_weight(&[-300.0, -300.0]) + 300.0).abs() < 1e-12);
    }

    #[test]
    fn product_rule_is_dominated_by_worst_stream() {
        // hypothesis X: one excellent stream, one catastrophic one
        // hypothesis Y: two mediocre streams
        let x = StreamScores {
            hypothesis: Scheme::Qpsk,
            stream_loglik: vec![-100.0, -1e6],
            phases: PhaseCorrection {
                phases: vec![0.0; 2],
                hypothesis: Scheme::Qpsk,
            },
        };
        let y = StreamScores {
            hypothesis: Scheme::Psk8,
            stream_loglik: vec![-400.0, -400.0],
            phases: PhaseCorrection {
                phases: vec![0.0; 2],
                hypothesis: Scheme::Psk8,
            },
        };
        let scores = [x, y];
        assert_eq!(
            decide(&scores, Algorithm::Proposed).unwrap().decided,
            Scheme::Qpsk
        );
        assert_eq!(
            decide(&scores, Algorithm::EqualWeight).unwrap().decided,
            Scheme::Qpsk
        );
        assert_eq!(
            decide(&scores, Algorithm::Product).unwrap().decided,
            Scheme::Psk8
        );
    }

    #[test]
    fn ties_break_toward_earlier_candidate() {
        let mk = |s| StreamScores {
            hypothesis: s,
            stream_loglik: vec![-10.0, -12.0],
            phases: PhaseCorrection {
                phases: vec![0.0; 2],
                hypothesis: s,
            },
        };
        let scores = [mk(Scheme::Psk8), mk(Scheme::Bpsk), mk(Scheme::Qam16)];
        for alg in [
            Algorithm::Proposed,
            Algorithm::Product,
            Algorithm::EqualWeight,
        ] {
            let r = decide(&scores, alg).unwrap();
            assert_eq!(r.decided, Scheme::Psk8);
            assert_eq!(r.ranked[1].hypothesis, Scheme::Bpsk);
        }
        assert!(decide(&[], Algorithm::Proposed).is_err());
        assert!(fuse(&[1.0], Algorithm::AlrtUb).is_err());
    }

    proptest! {
        #[test]
        fn weights_have_unit_norm_and_norm_identity(
            l in prop::collection::vec(-30.0f64..0.0, 1..6)
        ) {
            let (comb, w) = fuse_weighted_sum(&l);
            let norm: f64 = w.iter().map(|x| x * x).sum::<f64>().sqrt();
            prop_assert!((norm - 1.0).abs() < 1e-9);
            let direct = l.iter().map(|x| (2.0 * x).exp()).sum::<f64>().sqrt().ln();
            prop_assert!((comb - direct).abs() < 1e-9);
            let dot: f64 = w.iter().zip(&l).map(|(b, x)| b * x.exp()).sum();
            prop_assert!((dot.ln() - comb).abs() < 1e-9);
        }

        #[test]
        fn common_shift_moves_every_rule_by_the_shift(
            l in prop::collection::vec(-50.0f64..0.0, 1..5),
            shift in -1e3f64..1e3,
        ) {
            let shifted: Vec<f64> = l.iter().map(|x| x + shift).collect();
            for alg in [Algorithm::Proposed, Algorithm::Product, Algorithm::EqualWeight] {
                let a = fuse(&l, alg).unwrap();
                let b = fuse(&shifted, alg).unwrap();
                let expect = if alg == Algorithm::Product { shift * l.len() as f64 } else { shift };
                prop_assert!((b - a - expect).abs() < 1e-9 * (1.0 + shift.abs()));
            }
        }
    }

    #[test]
    fn optimal_weights_beat_random_unit_vectors() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..1000 {
            let m = rng.random_range(1..6);
            let l: Vec<f64> = (0..m).map(|_| rng.random_range(-5.0..0.0)).collect();
            let f: Vec<f64> = l.iter().map(|x| x.exp()).collect();
            let (_, beta) = fuse_weighted_sum(&l);
            let best: f64 = beta.iter().zip(&f).map(|(b, x)| b * x).sum();
            for _ in 0..100 {
                let u: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect();
                let nu = u.iter().map(|x| x * x).sum::<f64>().sqrt();
                let val: f64 = u.iter().zip(&f).map(|(a, x)| a / nu * x).sum();
                assert!(best >= val - 1e-12);
            }
        }
    }

    #[test]
    fn alrt_reduces_to_stream_likelihood_for_scalar_channel() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for scheme in Scheme::ALL {
            let constellation = Constellation::new(scheme);
            let h = draw_channel(1, 1, &mut rng).unwrap();
            let s2 = rng.random_range(0.05..1.0);
            let frame = synthesize_frame(&constellation, &h, s2, 64, &mut rng).unwrap();
            let alrt = alrt_ub_log_likelihood(&frame, &constellation).unwrap();

            let hv = h.entries()[(0, 0)];
            let derot = hv.conj() / hv.norm();
            let z: Vec<Complex64> = frame.received.row(0).iter().map(|r| r * derot).collect();
            let stream = stream_log_likelihood(&z, hv.norm(), s2, &constellation).unwrap();
            assert!(
                (alrt - stream).abs() < 1e-9 * alrt.abs().max(1.0),
                "{scheme}: {alrt} vs {stream}"
            );
        }
    }

    #[test]
    fn alrt_joint_enumeration_size() {
        let qam = Constellation::new(Scheme::Qam16);
        assert_eq!(inner_terms_per_symbol(Algorithm::AlrtUb, &qam, 2), 256);
        assert_eq!(inner_terms_per_symbol(Algorithm::Proposed, &qam, 2), 32);
    }

    #[test]
    fn alrt_needs_channel() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let h = draw_channel(2, 4, &mut rng).unwrap();
        let f = synthesize_frame(&Constellation::new(Scheme::Qpsk), &h, 0.1, 16, &mut rng).unwrap();
        assert!(matches!(
            classify_alrt_ub(&f.blind_view(), &Constellation::all()),
            Err(Error::MissingChannel)
        ));
    }

    #[test]
    fn alrt_picks_truth_at_high_snr() {
        let cands = Constellation::all();
        for (i, scheme) in Scheme::ALL.iter().enumerate() {
            for t in 0..25 {
                let mut rng = ChaCha8Rng::seed_from_u64(1000 * i as u64 + t);
                let h = draw_channel(2, 4, &mut rng).unwrap();
                let s2 = noise_variance_from_snr(20.0, 2);
                let f =
                    synthesize_frame(&Constellation::new(*scheme), &h, s2, 256, &mut rng).unwrap();
                assert_eq!(classify_alrt_ub(&f, &cands).unwrap().decided, *scheme);
            }
        }
    }

    #[test]
    fn perfect_csi_pipeline_matches_linear_oracle() {
        // Eq.-by-eq. linear evaluation at N <= 8 with the true channel: MMSE,
        // Gaussian per-stream likelihood, then norm-optimal fusion.
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..50 {
            let constellation = Constellation::new(Scheme::ALL[rng.random_range(0..4)]);
            let h = draw_channel(2, 3, &mut rng).unwrap();
            let s2 = rng.random_range(0.3..1.5);
            let n = rng.random_range(1..=8);
            let f = synthesize_frame(&constellation, &h, s2, n, &mut rng).unwrap();
            let streams =
                equalize_streams(h.entries(), s2, &f.received, constellation.scheme()).unwrap();
            let logs: Vec<f64> = streams
                .iter()
                .map(|s| {
                    stream_log_likelihood(
                        &s.estimates,
                        s.effective_gain,
                        s.distortion_variance,
                        &constellation,
                    )
                    .unwrap()
                })
                .collect();
            let lin: Vec<f64> = streams
                .iter()
                .map(|s| {
                    brute_stream_likelihood(
                        &s.estimates,
                        s.effective_gain,
                        s.distortion_variance,
                        &constellation,
                    )
                })
                .collect();
            let norm = lin.iter().map(|x| x * x).sum::<f64>().sqrt();
            let (comb, beta) = fuse_weighted_sum(&logs);
            assert!((comb - norm.ln()).abs() < 1e-9);
            for (b, x) in beta.iter().zip(&lin) {
                assert!((b - x / norm).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn row_permutation_of_receivers_keeps_decision() {
        let cands = Constellation::all();
        for seed in 0..10 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let scheme = Scheme::ALL[seed as usize % 4];
            let h = draw_channel(2, 4, &mut rng).unwrap();
            let s2 = noise_variance_from_snr(8.0, 2);
            let f = synthesize_frame(&Constellation::new(scheme), &h, s2, 512, &mut rng).unwrap();
            let perm = [2usize, 0, 3, 1];
            let mut received = CMatrix::zeros(4, 512);
            for (dst, &src) in perm.iter().enumerate() {
                received.set_row(dst, &f.received.row(src));
            }
            let g = MimoFrame::from_received(received, 2, s2).unwrap();
            let a = classify(&f.blind_view(), &cands, Algorithm::Proposed).unwrap();
            let b = classify(&g, &cands, Algorithm::Proposed).unwrap();
            assert_eq!(a.decided, b.decided);
        }
    }

    #[test]
    fn identity_channel_frame_classifies_cleanly() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let cands = Constellation::all();
        for scheme in Scheme::ALL {
            let f = synthesize_frame(
                &Constellation::new(scheme),
                &ChannelMatrix::identity(2),
                0.01,
                512,
                &mut rng,
            )
            .unwrap();
            let r = classify(&f.blind_view(), &cands, Algorithm::Proposed).unwrap();
            assert_eq!(r.decided, scheme);
            for h in &r.ranked {
                let n: f64 = h.weights.iter().map(|w| w * w).sum();
                assert!((n - 1.0).abs() < 1e-9);
            }
        }
    }
}
