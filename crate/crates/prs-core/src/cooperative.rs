//! Dual-hop decode-and-forward cooperative network evaluation.
//!
//! A frame plays out in two phases: the source broadcasts, the relays that
//! sustain rate 2R on the source hop form the decoding subset, and one relay
//! (or an Alamouti pair for OSTC) retransmits on the relay-destination hop.
//! Selection ranks relays by a proxy of the RD-hop SNR whose quality depends
//! on the scheme: the true value (perfect CSI), a stale measurement (ORS), or
//! a predicted one (PRS). Outage and capacity are estimated by Monte Carlo,
//! either from analytic correlated draws ("statistical" mode) or by walking
//! synthesized traces with a trained predictor ("time-series" mode).

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fading::{jakes_correlation, CorrelatedPairSampler, FadingParams, FadingTrace};
use crate::predictor::TrainedPredictor;

/// Relay selection strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    /// Selection on the true RD-hop SNR (benchmark).
    Perfect,
    /// Opportunistic relay selection on outdated CSI.
    Ors,
    /// Opportunistic selection on predicted CSI.
    Prs,
    /// Opportunistic space-time coding: the two strongest relays transmit an
    /// Alamouti pair.
    Ostc,
}

impl Scheme {
    pub fn label(self) -> &'static str {
        match self {
            Scheme::Perfect => "perfect",
            Scheme::Ors => "ors",
            Scheme::Prs => "prs",
            Scheme::Ostc => "ostc",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "perfect" => Scheme::Perfect,
            "ors" => Scheme::Ors,
            "prs" => Scheme::Prs,
            "ostc" => Scheme::Ostc,
            other => return Err(Error::invalid_argument(format!("unknown scheme '{other}'"))),
        })
    }
}

/// Static description of one simulated network.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NetworkScenario {
    pub relay_count: usize,
    /// End-to-end target rate R in bps/Hz.
    pub target_rate: f64,
    /// Total transmit SNR P/sigma_n^2 (linear).
    pub total_snr: f64,
    /// Fraction of P spent in the source phase (the rest goes to the relay
    /// phase); both hops see fraction * total_snr as average SNR.
    pub source_power_fraction: f64,
    pub relay_power_fraction: f64,
    pub doppler_hz: f64,
    /// Delay between CSI acquisition and its use, seconds.
    pub delay_s: f64,
    pub scheme: Scheme,
}

impl NetworkScenario {
    pub fn validate(&self) -> Result<()> {
        if self.relay_count == 0 {
            return Err(Error::invalid_argument("relay_count must be >= 1"));
        }
        if !(self.target_rate > 0.0) {
            return Err(Error::invalid_argument("target_rate must be positive"));
        }
        if !(self.total_snr > 0.0) || !self.total_snr.is_finite() {
            return Err(Error::invalid_argument("total_snr must be positive and finite"));
        }
        let sum = self.source_power_fraction + self.relay_power_fraction;
        if !(self.source_power_fraction > 0.0)
            || !(self.relay_power_fraction > 0.0)
            || (sum - 1.0).abs() > 1e-9
        {
            return Err(Error::invalid_argument("power fractions must be positive and sum to 1"));
        }
        if self.doppler_hz < 0.0 || self.delay_s < 0.0 {
            return Err(Error::invalid_argument("doppler and delay must be non-negative"));
        }
        Ok(())
    }

    /// Average SNR of the source-relay hop.
    pub fn sr_mean_snr(&self) -> f64 {
        self.source_power_fraction * self.total_snr
    }

    /// Average SNR of the relay-destination hop.
    pub fn rd_mean_snr(&self) -> f64 {
        self.relay_power_fraction * self.total_snr
    }

    /// SNR a hop must clear to sustain rate 2R: `2^(2R) - 1`.
    pub fn decode_threshold(&self) -> f64 {
        decode_threshold(self.target_rate)
    }

    /// Correlation between selection-time and transmission-time CSI under
    /// the Jakes model.
    pub fn outdated_rho(&self) -> Result<f64> {
        jakes_correlation(self.doppler_hz, self.delay_s)
    }
}

pub fn decode_threshold(target_rate: f64) -> f64 {
    2f64.powf(2.0 * target_rate) - 1.0
}

/// Relays whose source-hop SNR sustains the doubled (half-duplex) rate.
pub fn decoding_subset(sr_snrs: &[f64], target_rate: f64) -> Vec<usize> {
    let thr = decode_threshold(target_rate);
    sr_snrs
        .iter()
        .enumerate()
        .filter_map(|(k, &snr)| (snr >= thr).then_some(k))
        .collect()
}

/// Index with the largest proxy SNR within the decoding subset; ties resolve
/// to the lowest index. `None` when the subset is empty (frame in outage).
pub fn select_ors(ds: &[usize], proxy_snrs: &[f64]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for &k in ds {
        let v = proxy_snrs[k];
        if best.map_or(true, |(_, bv)| v > bv) {
            best = Some((k, v));
        }
    }
    best.map(|(k, _)| k)
}

/// PRS selection: identical rule, applied to predicted SNRs.
pub fn select_prs(ds: &[usize], predicted_snrs: &[f64]) -> Option<usize> {
    select_ors(ds, predicted_snrs)
}

/// Which relay(s) ended up transmitting.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Selected {
    /// Empty decoding subset: nobody transmits.
    None,
    Single(usize),
    Pair(usize, usize),
}

/// Top-two selection for OSTC. A single decoder degrades to single-relay
/// transmission; an empty subset is an outage.
pub fn select_ostc(ds: &[usize], proxy_snrs: &[f64]) -> Selected {
    let mut first: Option<(usize, f64)> = None;
    let mut second: Option<(usize, f64)> = None;
    for &k in ds {
        let v = proxy_snrs[k];
        if first.map_or(true, |(_, bv)| v > bv) {
            second = first;
            first = Some((k, v));
        } else if second.map_or(true, |(_, bv)| v > bv) {
            second = Some((k, v));
        }
    }
    match (first, second) {
        (Some((i, _)), Some((j, _))) => Selected::Pair(i, j),
        (Some((i, _)), None) => Selected::Single(i),
        _ => Selected::None,
    }
}

/// Per-frame record of what happened.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameOutcome {
    pub decoding_subset: Vec<usize>,
    pub selected: Selected,
    /// Actual end-to-end SNR of the selected path (combined for OSTC).
    pub e2e_snr: f64,
    /// Instantaneous rate, recorded unconditionally (0 when nobody decodes).
    pub rate: f64,
    pub outage: bool,
}

/// Rate and outage for a completed selection, given the actual RD-hop SNRs.
///
/// Single relay: rate = 1/2 log2(1 + gamma), outage when gamma misses the
/// decode threshold. OSTC: the pair splits the relay-phase power, so the
/// combined SNR is the average of the two.
pub fn e2e_rate(selected: &Selected, actual_rd_snrs: &[f64], target_rate: f64) -> (f64, bool) {
    let thr = decode_threshold(target_rate);
    match *selected {
        Selected::None => (0.0, true),
        Selected::Single(k) => {
            let snr = actual_rd_snrs[k];
            (0.5 * (1.0 + snr).log2(), snr < thr)
        }
        Selected::Pair(i, j) => {
            let combined = 0.5 * (actual_rd_snrs[i] + actual_rd_snrs[j]);
            (0.5 * (1.0 + combined).log2(), combined < thr)
        }
    }
}

/// Channel draws for one frame: per-relay source-hop SNRs plus proxy/actual
/// RD-hop SNR pairs.
#[derive(Debug, Clone)]
pub struct FrameDraws {
    pub sr_snrs: Vec<f64>,
    pub rd_proxy_snrs: Vec<f64>,
    pub rd_actual_snrs: Vec<f64>,
}

/// Play out one frame under a scheme.
pub fn frame_outcome(scheme: Scheme, target_rate: f64, draws: &FrameDraws) -> FrameOutcome {
    let ds = decoding_subset(&draws.sr_snrs, target_rate);
    let selected = match scheme {
        Scheme::Perfect => {
            select_ors(&ds, &draws.rd_actual_snrs).map_or(Selected::None, Selected::Single)
        }
        Scheme::Ors | Scheme::Prs => {
            select_ors(&ds, &draws.rd_proxy_snrs).map_or(Selected::None, Selected::Single)
        }
        Scheme::Ostc => select_ostc(&ds, &draws.rd_proxy_snrs),
    };
    let (rate, outage) = e2e_rate(&selected, &draws.rd_actual_snrs, target_rate);
    let e2e_snr = match selected {
        Selected::None => 0.0,
        Selected::Single(k) => draws.rd_actual_snrs[k],
        Selected::Pair(i, j) => 0.5 * (draws.rd_actual_snrs[i] + draws.rd_actual_snrs[j]),
    };
    FrameOutcome { decoding_subset: ds, selected, e2e_snr, rate, outage }
}

/// Allocation-free trial for the Monte-Carlo hot loop; equivalent to
/// [`frame_outcome`] but without materializing the subset.
fn fast_trial(
    scheme: Scheme,
    thr: f64,
    sr_snrs: &[f64],
    proxy: &[f64],
    actual: &[f64],
) -> (f64, bool) {
    match scheme {
        Scheme::Perfect | Scheme::Ors | Scheme::Prs => {
            let rank = if matches!(scheme, Scheme::Perfect) { actual } else { proxy };
            let mut best: Option<(usize, f64)> = None;
            for k in 0..sr_snrs.len() {
                if sr_snrs[k] >= thr {
                    let v = rank[k];
                    if best.map_or(true, |(_, bv)| v > bv) {
                        best = Some((k, v));
                    }
                }
            }
            match best {
                None => (0.0, true),
                Some((k, _)) => {
                    let snr = actual[k];
                    (0.5 * (1.0 + snr).log2(), snr < thr)
                }
            }
        }
        Scheme::Ostc => {
            let mut first: Option<(usize, f64)> = None;
            let mut second: Option<(usize, f64)> = None;
            for k in 0..sr_snrs.len() {
                if sr_snrs[k] >= thr {
                    let v = proxy[k];
                    if first.map_or(true, |(_, bv)| v > bv) {
                        second = first;
                        first = Some((k, v));
                    } else if second.map_or(true, |(_, bv)| v > bv) {
                        second = Some((k, v));
                    }
                }
            }
            match (first, second) {
                (Some((i, _)), Some((j, _))) => {
                    let combined = 0.5 * (actual[i] + actual[j]);
                    (0.5 * (1.0 + combined).log2(), combined < thr)
                }
                (Some((i, _)), None) => {
                    let snr = actual[i];
                    (0.5 * (1.0 + snr).log2(), snr < thr)
                }
                _ => (0.0, true),
            }
        }
    }
}

/// How channel realizations are produced.
#[derive(Debug, Clone, Copy)]
pub enum MonteCarloMode<'a> {
    /// Draw (proxy, actual) pairs analytically: rho = 1 for perfect CSI, the
    /// Jakes value for outdated CSI, or `prs_rho` for modeled prediction.
    Statistical {
        /// Equivalent prediction quality for PRS (required for that scheme).
        prs_rho: Option<f64>,
    },
    /// Walk synthesized traces frame by frame.
    TimeSeries {
        sample_rate_hz: f64,
        /// Samples between consecutive simulated frames. Values near the
        /// channel coherence time keep trials roughly independent so the
        /// reported standard errors stay honest.
        frame_stride: usize,
        /// Trained predictor (required for PRS, ignored otherwise).
        predictor: Option<&'a TrainedPredictor<f64>>,
    },
}

/// Outage and capacity estimates with binomial / sample standard errors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarloResult {
    pub outage_probability: f64,
    pub outage_stderr: f64,
    pub capacity_bps_hz: f64,
    pub capacity_stderr: f64,
    pub trials: usize,
}

const TRIAL_CHUNK: usize = 65_536;

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Estimate outage probability and ergodic capacity for a scenario.
///
/// Deterministic for a given seed regardless of worker count: trials are
/// split into fixed chunks, each chunk owns an RNG substream, and chunk
/// results reduce in index order.
pub fn run_montecarlo(
    scenario: &NetworkScenario,
    mode: &MonteCarloMode<'_>,
    trials: usize,
    seed: u64,
) -> Result<MonteCarloResult> {
    scenario.validate()?;
    if trials == 0 {
        return Err(Error::invalid_argument("trials must be >= 1"));
    }
    match mode {
        MonteCarloMode::Statistical { prs_rho } => {
            statistical_montecarlo(scenario, *prs_rho, trials, seed)
        }
        MonteCarloMode::TimeSeries { sample_rate_hz, frame_stride, predictor } => {
            timeseries_montecarlo(scenario, *sample_rate_hz, *frame_stride, *predictor, trials, seed)
        }
    }
}

fn statistical_montecarlo(
    scenario: &NetworkScenario,
    prs_rho: Option<f64>,
    trials: usize,
    seed: u64,
) -> Result<MonteCarloResult> {
    let rho = match scenario.scheme {
        Scheme::Perfect => 1.0,
        Scheme::Ors | Scheme::Ostc => scenario.outdated_rho()?,
        Scheme::Prs => prs_rho.ok_or_else(|| {
            Error::Config("statistical PRS needs an equivalent prediction correlation".into())
        })?,
    };
    if !(0.0..=1.0).contains(&rho) {
        return Err(Error::Config(format!(
            "selection/actual correlation {rho} outside [0, 1]; \
             this delay/Doppler combination is not representable in statistical mode"
        )));
    }
    let sampler = CorrelatedPairSampler::new(rho)?;
    let k = scenario.relay_count;
    let thr = scenario.decode_threshold();
    let sr_mean = scenario.sr_mean_snr();
    let rd_mean = scenario.rd_mean_snr();
    let scheme = scenario.scheme;

    let chunks: Vec<(usize, usize)> = (0..trials)
        .step_by(TRIAL_CHUNK)
        .enumerate()
        .map(|(i, start)| (i, (trials - start).min(TRIAL_CHUNK)))
        .collect();

    let partials: Vec<(u64, f64, f64)> = chunks
        .par_iter()
        .map(|&(chunk_idx, count)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(chunk_idx as u64);
            let mut sr = vec![0.0; k];
            let mut proxy = vec![0.0; k];
            let mut actual = vec![0.0; k];
            let mut outages = 0u64;
            let mut rate_sum = 0.0;
            let mut rate_sq_sum = 0.0;
            for _ in 0..count {
                for r in 0..k {
                    sr[r] = -sr_mean * (1.0 - rng.random::<f64>()).ln();
                    let (stale, live) = sampler.sample(&mut rng);
                    proxy[r] = stale.norm_sqr() * rd_mean;
                    actual[r] = live.norm_sqr() * rd_mean;
                }
                let (rate, outage) = fast_trial(scheme, thr, &sr, &proxy, &actual);
                outages += outage as u64;
                rate_sum += rate;
                rate_sq_sum += rate * rate;
            }
            (outages, rate_sum, rate_sq_sum)
        })
        .collect();

    Ok(summarize(partials, trials))
}

fn summarize(partials: Vec<(u64, f64, f64)>, trials: usize) -> MonteCarloResult {
    let mut outages = 0u64;
    let mut rate_sum = 0.0;
    let mut rate_sq_sum = 0.0;
    for (o, r, r2) in partials {
        outages += o;
        rate_sum += r;
        rate_sq_sum += r2;
    }
    let n = trials as f64;
    let p = outages as f64 / n;
    let capacity = rate_sum / n;
    let rate_var = (rate_sq_sum / n - capacity * capacity).max(0.0);
    MonteCarloResult {
        outage_probability: p,
        outage_stderr: (p * (1.0 - p) / n).sqrt(),
        capacity_bps_hz: capacity,
        capacity_stderr: (rate_var / n).sqrt(),
        trials,
    }
}

fn timeseries_montecarlo(
    scenario: &NetworkScenario,
    sample_rate_hz: f64,
    frame_stride: usize,
    predictor: Option<&TrainedPredictor<f64>>,
    trials: usize,
    seed: u64,
) -> Result<MonteCarloResult> {
    if frame_stride == 0 {
        return Err(Error::Config("frame_stride must be >= 1".into()));
    }
    let delay_float = scenario.delay_s * sample_rate_hz;
    let delay_samples = delay_float.round() as usize;
    if (delay_float - delay_samples as f64).abs() > 1e-6 {
        return Err(Error::Config(format!(
            "delay {}s is not an integer number of samples at {} Hz",
            scenario.delay_s, sample_rate_hz
        )));
    }
    let needs_predictor = matches!(scenario.scheme, Scheme::Prs);
    let predictor = match (needs_predictor, predictor) {
        (true, None) => {
            return Err(Error::Config("time-series PRS needs a trained predictor".into()))
        }
        (true, Some(p)) => {
            if p.horizon != delay_samples {
                return Err(Error::Config(format!(
                    "predictor horizon {} does not cover the selection delay of {} samples",
                    p.horizon, delay_samples
                )));
            }
            Some(p)
        }
        (false, _) => None,
    };
    if matches!(scenario.scheme, Scheme::Ors | Scheme::Ostc) && delay_samples == 0 {
        // zero delay makes outdated CSI perfect; allowed, just note the rho
    }

    let k = scenario.relay_count;
    let warmup = delay_samples + predictor.map_or(0, |p| p.window);
    let length = warmup + (trials - 1) * frame_stride + 1;
    let params = FadingParams::new(scenario.doppler_hz, sample_rate_hz, 1.0, length)?;

    // Independent per-link traces: seeds derived from the master seed.
    let link_mags = |link_idx: u64| -> Result<Vec<f64>> {
        let trace: FadingTrace<f64> =
            FadingTrace::generate(params, splitmix64(seed ^ link_idx.wrapping_mul(0xA5A5_5A5A)))?;
        Ok(trace.magnitudes())
    };
    let sr_mags: Vec<Vec<f64>> = (0..k as u64)
        .into_par_iter()
        .map(link_mags)
        .collect::<Result<_>>()?;
    let rd_mags: Vec<Vec<f64>> = (k as u64..2 * k as u64)
        .into_par_iter()
        .map(link_mags)
        .collect::<Result<_>>()?;

    // PRS: per-relay predictions for every frame, batched per relay.
    let predictions: Option<Vec<Vec<f64>>> = match predictor {
        None => None,
        Some(p) => {
            let starts: Vec<usize> = (0..trials)
                .map(|i| warmup + i * frame_stride - delay_samples - (p.window - 1))
                .collect();
            let preds = rd_mags
                .par_iter()
                .map(|mags| {
                    let mut local = p.clone();
                    local.predict_starts(mags, &starts)
                })
                .collect::<Result<Vec<_>>>()?;
            Some(preds)
        }
    };

    let thr = scenario.decode_threshold();
    let sr_mean = scenario.sr_mean_snr();
    let rd_mean = scenario.rd_mean_snr();
    let mut sr = vec![0.0; k];
    let mut proxy = vec![0.0; k];
    let mut actual = vec![0.0; k];
    let mut outages = 0u64;
    let mut rate_sum = 0.0;
    let mut rate_sq_sum = 0.0;
    for i in 0..trials {
        let t = warmup + i * frame_stride;
        for r in 0..k {
            let m_sr = sr_mags[r][t];
            sr[r] = m_sr * m_sr * sr_mean;
            let m_act = rd_mags[r][t];
            actual[r] = m_act * m_act * rd_mean;
            let m_proxy = match scenario.scheme {
                Scheme::Perfect => m_act,
                Scheme::Ors | Scheme::Ostc => rd_mags[r][t - delay_samples],
                Scheme::Prs => predictions.as_ref().unwrap()[r][i],
            };
            proxy[r] = m_proxy * m_proxy * rd_mean;
        }
        let (rate, outage) = fast_trial(scenario.scheme, thr, &sr, &proxy, &actual);
        outages += outage as u64;
        rate_sum += rate;
        rate_sq_sum += rate * rate;
    }
    Ok(summarize(vec![(outages, rate_sum, rate_sq_sum)], trials))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn scenario(k: usize, snr_db: f64, scheme: Scheme) -> NetworkScenario {
        NetworkScenario {
            relay_count: k,
            target_rate: 1.0,
            total_snr: 10f64.powf(snr_db / 10.0),
            source_power_fraction: 0.5,
            relay_power_fraction: 0.5,
            doppler_hz: 100.0,
            delay_s: 0.003,
            scheme,
        }
    }

    #[test]
    fn decoding_subset_threshold_is_inclusive() {
        // R = 1 -> threshold 3; boundary value stays in.
        assert_eq!(decoding_subset(&[4.0, 2.0, 3.0], 1.0), vec![0, 2]);
        assert_eq!(decoding_subset(&[0.0, 0.0], 1.0), Vec::<usize>::new());
    }

    #[test]
    fn decoding_subset_fraction_matches_exponential_tail() {
        // gamma ~ Exp(mean 50): P(in subset) = exp(-3/50) ~ 0.9418
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let n = 1_000_000;
        let mut hits = 0usize;
        for _ in 0..n {
            let g = -50.0 * (1.0 - rng.random::<f64>()).ln();
            if g >= 3.0 {
                hits += 1;
            }
        }
        assert_abs_diff_eq!(hits as f64 / n as f64, 0.9418, epsilon = 0.002);
    }

    #[test]
    fn ors_selection_examples() {
        assert_eq!(select_ors(&[0, 1, 2], &[1.0, 5.0, 3.0]), Some(1));
        assert_eq!(select_ors(&[2], &[9.0, 9.0, 0.1]), Some(2));
        assert_eq!(select_ors(&[0, 1], &[4.0, 4.0]), Some(0)); // tie -> lowest
        assert_eq!(select_ors(&[], &[1.0]), None);
    }

    #[test]
    fn prs_selection_is_bit_identical_to_ors() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..500 {
            let k = 1 + (rng.random::<u64>() % 8) as usize;
            let snrs: Vec<f64> = (0..k).map(|_| rng.random::<f64>() * 10.0).collect();
            let ds: Vec<usize> = (0..k).filter(|_| rng.random::<f64>() < 0.7).collect();
            assert_eq!(select_prs(&ds, &snrs), select_ors(&ds, &snrs));
        }
        assert_eq!(select_prs(&[0, 1], &[2.0, 7.0]), Some(1));
    }

    #[test]
    fn ostc_selection_examples() {
        assert_eq!(select_ostc(&[0, 1, 2], &[1.0, 5.0, 3.0]), Selected::Pair(1, 2));
        assert_eq!(select_ostc(&[0, 1], &[4.0, 4.0]), Selected::Pair(0, 1)); // tie order
        assert_eq!(select_ostc(&[2], &[0.0, 0.0, 1.0]), Selected::Single(2));
        assert_eq!(select_ostc(&[], &[]), Selected::None);
    }

    #[test]
    fn e2e_rate_examples() {
        assert_eq!(e2e_rate(&Selected::None, &[], 1.0), (0.0, true));
        let (rate, outage) = e2e_rate(&Selected::Single(0), &[15.0], 1.0);
        assert_abs_diff_eq!(rate, 2.0, epsilon = 1e-12);
        assert!(!outage);
        let (rate, outage) = e2e_rate(&Selected::Pair(0, 1), &[8.0, 4.0], 1.0);
        assert_abs_diff_eq!(rate, 1.4037, epsilon = 1e-4);
        assert!(!outage);
        // combined SNR below threshold is an outage even though both decode
        let (_, outage) = e2e_rate(&Selected::Pair(0, 1), &[3.0, 1.0], 1.0);
        assert!(outage);
    }

    #[test]
    fn perfect_selection_dominates_any_proxy_per_trial() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let sampler = CorrelatedPairSampler::new(0.3).unwrap();
        for _ in 0..2000 {
            let k = 8;
            let sr: Vec<f64> = (0..k).map(|_| -5.0 * (1.0 - rng.random::<f64>()).ln()).collect();
            let mut proxy = vec![0.0; k];
            let mut actual = vec![0.0; k];
            for r in 0..k {
                let (s, a) = sampler.sample(&mut rng);
                proxy[r] = s.norm_sqr() * 5.0;
                actual[r] = a.norm_sqr() * 5.0;
            }
            let draws = FrameDraws { sr_snrs: sr, rd_proxy_snrs: proxy, rd_actual_snrs: actual };
            let perfect = frame_outcome(Scheme::Perfect, 1.0, &draws);
            let ors = frame_outcome(Scheme::Ors, 1.0, &draws);
            assert!(perfect.e2e_snr >= ors.e2e_snr);
            assert!(ors.outage || !perfect.outage);
        }
    }

    #[test]
    fn fast_trial_agrees_with_frame_outcome() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for scheme in [Scheme::Perfect, Scheme::Ors, Scheme::Prs, Scheme::Ostc] {
            for _ in 0..500 {
                let k = 1 + (rng.random::<u64>() % 8) as usize;
                let sr: Vec<f64> =
                    (0..k).map(|_| -4.0 * (1.0 - rng.random::<f64>()).ln()).collect();
                let proxy: Vec<f64> = (0..k).map(|_| rng.random::<f64>() * 20.0).collect();
                let actual: Vec<f64> = (0..k).map(|_| rng.random::<f64>() * 20.0).collect();
                let outcome = frame_outcome(
                    scheme,
                    1.0,
                    &FrameDraws {
                        sr_snrs: sr.clone(),
                        rd_proxy_snrs: proxy.clone(),
                        rd_actual_snrs: actual.clone(),
                    },
                );
                let (rate, outage) = fast_trial(scheme, decode_threshold(1.0), &sr, &proxy, &actual);
                assert_eq!(outcome.rate, rate);
                assert_eq!(outcome.outage, outage);
            }
        }
    }

    #[test]
    fn single_relay_perfect_outage_matches_closed_form() {
        // K=1, perfect CSI, total 10 dB -> hop mean 5:
        // P_out = 1 - exp(-3/5)^2 ~ 0.6988
        let sc = NetworkScenario { delay_s: 0.0, ..scenario(1, 10.0, Scheme::Perfect) };
        let result = run_montecarlo(
            &sc,
            &MonteCarloMode::Statistical { prs_rho: None },
            1_000_000,
            7,
        )
        .unwrap();
        assert_abs_diff_eq!(result.outage_probability, 0.6988, epsilon = 0.005);
    }

    #[test]
    fn montecarlo_is_deterministic_across_worker_counts() {
        let sc = scenario(4, 12.0, Scheme::Ors);
        let mode = MonteCarloMode::Statistical { prs_rho: None };
        let a = run_montecarlo(&sc, &mode, 200_000, 99).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| run_montecarlo(&sc, &mode, 200_000, 99).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn prs_statistical_requires_rho() {
        let sc = scenario(4, 12.0, Scheme::Prs);
        assert!(matches!(
            run_montecarlo(&sc, &MonteCarloMode::Statistical { prs_rho: None }, 100, 1),
            Err(Error::Config(_))
        ));
        assert!(run_montecarlo(
            &sc,
            &MonteCarloMode::Statistical { prs_rho: Some(0.95) },
            100,
            1
        )
        .is_ok());
    }

    #[test]
    fn timeseries_validates_delay_and_predictor() {
        let sc = scenario(2, 12.0, Scheme::Prs);
        // non-integer delay at this rate
        let bad = NetworkScenario { delay_s: 0.0025, ..sc };
        let mode =
            MonteCarloMode::TimeSeries { sample_rate_hz: 1000.0, frame_stride: 10, predictor: None };
        assert!(matches!(run_montecarlo(&bad, &mode, 100, 1), Err(Error::Config(_))));
        // PRS without predictor
        assert!(matches!(run_montecarlo(&sc, &mode, 100, 1), Err(Error::Config(_))));
    }

    #[test]
    fn better_csi_never_hurts_in_statistical_mode() {
        // outage(perfect) <= outage(prs rho 0.95) <= outage(ors rho 0.29)
        let trials = 300_000;
        let perfect = run_montecarlo(
            &scenario(8, 14.0, Scheme::Perfect),
            &MonteCarloMode::Statistical { prs_rho: None },
            trials,
            5,
        )
        .unwrap();
        let prs = run_montecarlo(
            &scenario(8, 14.0, Scheme::Prs),
            &MonteCarloMode::Statistical { prs_rho: Some(0.95) },
            trials,
            5,
        )
        .unwrap();
        let ors = run_montecarlo(
            &scenario(8, 14.0, Scheme::Ors),
            &MonteCarloMode::Statistical { prs_rho: None },
            trials,
            5,
        )
        .unwrap();
        assert!(perfect.outage_probability < prs.outage_probability);
        assert!(prs.outage_probability < ors.outage_probability);
    }
}
