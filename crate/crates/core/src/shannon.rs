//! Block codes over the binary symmetric channel, read as statistical experiments.
//!
//! Messages are parameters, the channel output is the observation, and a decoder is a
//! decision rule. The deficiency of the output experiment with respect to the
//! message-revealing experiment, realized by a decoder, is its worst-message error.

use serde::{Deserialize, Serialize};

use crate::deficiency::deficiency;
use crate::error::{Error, Result};
use crate::experiment::{tv_slices, DeterministicMap, Experiment, Kernel, Labels};
use crate::risk::DecisionRule;

/// Longest block accepted by [`ChannelSpec`].
pub const MAX_BLOCKLENGTH: usize = 16;
/// Longest block for which [`bsc_kernel`] materializes the full matrix.
pub const MAX_KERNEL_BLOCKLENGTH: usize = 12;

/// Slack between the two ways of computing the coding error.
pub const IDENTITY_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChannelKind {
    BinarySymmetric,
}

/// A memoryless channel used `blocklength` times.
///
/// New kinds must act on `{0,1}^n` as the `n`-fold product of a single-symbol kernel.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelSpec {
    pub kind: ChannelKind,
    pub crossover: f64,
    pub blocklength: usize,
}

impl ChannelSpec {
    pub fn bsc(crossover: f64, blocklength: usize) -> Result<Self> {
        let s = ChannelSpec {
            kind: ChannelKind::BinarySymmetric,
            crossover,
            blocklength,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=0.5).contains(&self.crossover) {
            return Err(Error::Invalid(format!("crossover {} not in [0, 0.5]", self.crossover)));
        }
        if self.blocklength == 0 || self.blocklength > MAX_BLOCKLENGTH {
            return Err(Error::Guard(format!(
                "blocklength {} not in 1..={MAX_BLOCKLENGTH}",
                self.blocklength
            )));
        }
        Ok(())
    }

    /// `W^n(y | x)` for words given as integers.
    pub fn likelihood(&self, x: u32, y: u32) -> f64 {
        let d = (x ^ y).count_ones() as i32;
        let p = self.crossover;
        p.powi(d) * (1.0 - p).powi(self.blocklength as i32 - d)
    }

    /// Output distribution for input word `x`.
    pub fn row(&self, x: u32) -> Vec<f64> {
        (0..1u32 << self.blocklength).map(|y| self.likelihood(x, y)).collect()
    }

    pub fn words(&self) -> Labels {
        words(self.blocklength)
    }
}

fn word(v: u32, n: usize) -> String {
    (0..n).rev().map(|i| if v >> i & 1 == 1 { '1' } else { '0' }).collect()
}

/// All `n`-bit strings in counting order.
pub fn words(n: usize) -> Labels {
    Labels::new((0..1u32 << n).map(|v| word(v, n))).expect("distinct words")
}

/// The `2^n × 2^n` channel matrix.
pub fn bsc_kernel(spec: &ChannelSpec) -> Result<Kernel> {
    spec.validate()?;
    if spec.blocklength > MAX_KERNEL_BLOCKLENGTH {
        return Err(Error::Guard(format!(
            "a full kernel for blocklength {} has 4^{} entries",
            spec.blocklength, spec.blocklength
        )));
    }
    let labels = spec.words();
    let matrix = (0..1u32 << spec.blocklength).map(|x| spec.row(x)).collect();
    Kernel::new(labels.clone(), labels, matrix)
}

/// Distinct codewords of a common length.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct Codebook {
    codewords: Vec<String>,
    bits: Vec<u32>,
}

impl TryFrom<Vec<String>> for Codebook {
    type Error = Error;
    fn try_from(v: Vec<String>) -> Result<Self> {
        Codebook::new(v)
    }
}

impl From<Codebook> for Vec<String> {
    fn from(c: Codebook) -> Self {
        c.codewords
    }
}

impl Codebook {
    pub fn new<S: Into<String>>(codewords: impl IntoIterator<Item = S>) -> Result<Self> {
        let codewords: Vec<String> = codewords.into_iter().map(Into::into).collect();
        let n = codewords.first().map(String::len).unwrap_or(0);
        if n == 0 || n > MAX_BLOCKLENGTH {
            return Err(Error::Invalid("codewords must have 1 to 16 bits".into()));
        }
        let mut bits = Vec::with_capacity(codewords.len());
        for c in &codewords {
            if c.len() != n || !c.bytes().all(|b| b == b'0' || b == b'1') {
                return Err(Error::Invalid(format!("codeword `{c}` is not a {n}-bit string")));
            }
            let v = u32::from_str_radix(c, 2).expect("binary");
            if bits.contains(&v) {
                return Err(Error::DuplicateLabel(c.clone()));
            }
            bits.push(v);
        }
        Ok(Codebook { codewords, bits })
    }

    /// `{0ⁿ, 1ⁿ}`.
    pub fn repetition(n: usize) -> Result<Self> {
        Codebook::new(["0".repeat(n), "1".repeat(n)])
    }

    pub fn messages(&self) -> usize {
        self.codewords.len()
    }

    pub fn blocklength(&self) -> usize {
        self.codewords[0].len()
    }

    pub fn rate(&self) -> f64 {
        (self.messages() as f64).log2() / self.blocklength() as f64
    }

    pub fn codewords(&self) -> &[String] {
        &self.codewords
    }

    pub fn message_labels(&self) -> Labels {
        Labels::numbered("m", self.messages())
    }

    fn check(&self, spec: &ChannelSpec) -> Result<()> {
        spec.validate()?;
        if self.blocklength() != spec.blocklength {
            return Err(Error::Dimension(format!(
                "codewords have {} bits, channel blocklength is {}",
                self.blocklength(),
                spec.blocklength
            )));
        }
        Ok(())
    }
}

/// Maximum-likelihood decoding, ties to the lowest message index.
pub fn ml_decoder(cb: &Codebook, spec: &ChannelSpec) -> Result<DecisionRule> {
    cb.check(spec)?;
    let image = (0..1u32 << spec.blocklength)
        .map(|y| {
            let mut best = 0;
            let mut best_l = f64::NEG_INFINITY;
            for (m, &x) in cb.bits.iter().enumerate() {
                let l = spec.likelihood(x, y);
                if l > best_l {
                    best = m;
                    best_l = l;
                }
            }
            best
        })
        .collect();
    Ok(DecisionRule::Deterministic(DeterministicMap::new(
        spec.words(),
        cb.message_labels(),
        image,
    )?))
}

/// Majority vote for the repetition code of odd length `n`.
pub fn majority_decoder(n: usize) -> Result<DecisionRule> {
    if n.is_multiple_of(2) || n > MAX_BLOCKLENGTH {
        return Err(Error::Invalid(format!("repetition length {n} must be odd and at most {MAX_BLOCKLENGTH}")));
    }
    let image = (0..1u32 << n).map(|y| usize::from(y.count_ones() as usize > n / 2)).collect();
    Ok(DecisionRule::Deterministic(DeterministicMap::new(
        words(n),
        Labels::numbered("m", 2),
        image,
    )?))
}

/// The channel-output experiment and the message-revealing experiment, both indexed by message.
pub fn coding_experiments(cb: &Codebook, spec: &ChannelSpec) -> Result<(Experiment, Experiment)> {
    cb.check(spec)?;
    let msgs = cb.message_labels();
    let output = Experiment::new(
        "channel output",
        msgs.clone(),
        spec.words(),
        cb.bits.iter().map(|&x| spec.row(x)).collect(),
    )?;
    let m = cb.messages();
    let reveal = Experiment::new(
        "message",
        msgs.clone(),
        msgs,
        (0..m)
            .map(|i| (0..m).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect(),
    )?;
    Ok((output, reveal))
}

#[derive(Clone, Debug, Serialize)]
pub struct CodingReport {
    /// `max_m TV(φ♯W(·|x_m), δ_m)`.
    pub deficiency: f64,
    /// `max_m P(φ(Y) ≠ m | m)`.
    pub max_error: f64,
    pub average_error: f64,
    pub per_message_error: Vec<f64>,
}

/// Simulation error of `decoder` as a kernel from outputs to messages, checked against
/// the directly summed error probabilities.
pub fn coding_deficiency(
    cb: &Codebook,
    spec: &ChannelSpec,
    decoder: &DecisionRule,
) -> Result<CodingReport> {
    let (output, reveal) = coding_experiments(cb, spec)?;
    if decoder.outcomes() != output.outcomes() || decoder.actions() != reveal.outcomes() {
        return Err(Error::Dimension("decoder must map channel words to messages".into()));
    }
    let k = decoder.as_kernel();
    let mut tv_max = 0.0f64;
    let mut errors = Vec::with_capacity(cb.messages());
    for m in 0..cb.messages() {
        let w = output.row(m);
        let mut pushed = vec![0.0; cb.messages()];
        for (y, wy) in w.iter().enumerate() {
            for (a, ka) in k.row(y).iter().enumerate() {
                pushed[a] += wy * ka;
            }
        }
        tv_max = tv_max.max(tv_slices(&pushed, reveal.row(m)));
        let miss: f64 = w
            .iter()
            .enumerate()
            .map(|(y, wy)| wy * (1.0 - k.row(y)[m]))
            .sum();
        errors.push(miss);
    }
    let max_error = errors.iter().copied().fold(0.0, f64::max);
    if (tv_max - max_error).abs() > IDENTITY_TOL {
        return Err(Error::Falsified(format!(
            "decoder simulation error {tv_max} differs from its error probability {max_error}"
        )));
    }
    Ok(CodingReport {
        deficiency: tv_max,
        max_error,
        average_error: errors.iter().sum::<f64>() / errors.len() as f64,
        per_message_error: errors,
    })
}

/// `δ(output, message)` by linear programming: no decoder does better.
pub fn lp_coding_deficiency(cb: &Codebook, spec: &ChannelSpec) -> Result<f64> {
    let (output, reveal) = coding_experiments(cb, spec)?;
    Ok(deficiency(&output, &reveal)?.value)
}

/// `1 − H₂(p)` bits per channel use.
pub fn bsc_capacity(p: f64) -> f64 {
    let h = |q: f64| if q <= 0.0 || q >= 1.0 { 0.0 } else { -q * q.log2() };
    1.0 - h(p) - h(1.0 - p)
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepRow {
    pub n: usize,
    pub rate: f64,
    #[serde(rename = "Pe")]
    pub pe: f64,
    pub capacity: f64,
    pub average_error: f64,
}

/// Repetition codes with majority decoding at each odd blocklength.
///
/// For `0 < p < 0.5` the worst-message error must fall strictly with `n`.
pub fn repetition_sweep(p: f64, n_values: &[usize]) -> Result<Vec<SweepRow>> {
    let mut rows: Vec<SweepRow> = Vec::with_capacity(n_values.len());
    for &n in n_values {
        let decoder = majority_decoder(n)?;
        let spec = ChannelSpec::bsc(p, n)?;
        let cb = Codebook::repetition(n)?;
        let r = coding_deficiency(&cb, &spec, &decoder)?;
        rows.push(SweepRow {
            n,
            rate: cb.rate(),
            pe: r.max_error,
            capacity: bsc_capacity(p),
            average_error: r.average_error,
        });
    }
    if p > 0.0 && p < 0.5 {
        let mut sorted: Vec<&SweepRow> = rows.iter().collect();
        sorted.sort_by_key(|r| r.n);
        for w in sorted.windows(2) {
            if w[1].n > w[0].n && w[1].pe >= w[0].pe {
                return Err(Error::Falsified(format!(
                    "error {} at n = {} does not improve on {} at n = {}",
                    w[1].pe, w[1].n, w[0].pe, w[0].n
                )));
            }
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::risk::enumerate_deterministic_rules;

    fn binomial_tail(n: u64, p: f64) -> f64 {
        let choose = |n: u64, k: u64| (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64);
        (n / 2 + 1..=n)
            .map(|k| choose(n, k) * p.powi(k as i32) * (1.0 - p).powi((n - k) as i32))
            .sum()
    }

    #[test]
    fn kernel_examples() {
        let k = bsc_kernel(&ChannelSpec::bsc(0.0, 3).unwrap()).unwrap();
        assert_eq!(k, Kernel::identity(&words(3)));
        let k = bsc_kernel(&ChannelSpec::bsc(0.5, 3).unwrap()).unwrap();
        assert!(k.matrix().iter().flatten().all(|&v| v == 0.125));
        let k = bsc_kernel(&ChannelSpec::bsc(0.1, 1).unwrap()).unwrap();
        assert_eq!(k.matrix(), &[vec![0.9, 0.1], vec![0.1, 0.9]]);
        assert!(matches!(ChannelSpec::bsc(0.1, 17), Err(Error::Guard(_))));
        assert!(matches!(bsc_kernel(&ChannelSpec::bsc(0.1, 13).unwrap()), Err(Error::Guard(_))));
        assert!(ChannelSpec::bsc(0.6, 2).is_err());
    }

    #[test]
    fn ml_decoder_examples() {
        let spec = ChannelSpec::bsc(0.1, 3).unwrap();
        let cb = Codebook::repetition(3).unwrap();
        let DecisionRule::Deterministic(m) = ml_decoder(&cb, &spec).unwrap() else { panic!() };
        for y in 0..8u32 {
            assert_eq!(m.apply(y as usize), usize::from(y.count_ones() >= 2));
        }

        let spec0 = ChannelSpec::bsc(0.0, 3).unwrap();
        let cb2 = Codebook::new(["001", "110", "011"]).unwrap();
        let DecisionRule::Deterministic(m) = ml_decoder(&cb2, &spec0).unwrap() else { panic!() };
        assert_eq!(m.apply(0b001), 0);
        assert_eq!(m.apply(0b110), 1);
        assert_eq!(m.apply(0b011), 2);

        let spec2 = ChannelSpec::bsc(0.2, 2).unwrap();
        let DecisionRule::Deterministic(m) =
            ml_decoder(&Codebook::repetition(2).unwrap(), &spec2).unwrap()
        else {
            panic!()
        };
        assert_eq!(m.apply(0b01), 0);
    }

    #[test]
    fn codebook_validation() {
        assert!(matches!(Codebook::new(["01", "01"]), Err(Error::DuplicateLabel(_))));
        assert!(Codebook::new(["01", "011"]).is_err());
        assert!(Codebook::new(["0a"]).is_err());
        assert_eq!(Codebook::new(["00", "01", "10", "11"]).unwrap().rate(), 1.0);
    }

    #[test]
    fn coding_examples() {
        let cb = Codebook::new(["001", "110", "011"]).unwrap();
        let spec = ChannelSpec::bsc(0.0, 3).unwrap();
        let ml = ml_decoder(&cb, &spec).unwrap();
        assert_eq!(coding_deficiency(&cb, &spec, &ml).unwrap().deficiency, 0.0);

        for (n, expected) in [(1, 0.1), (3, 0.028), (5, 0.00856)] {
            let spec = ChannelSpec::bsc(0.1, n).unwrap();
            let cb = Codebook::repetition(n).unwrap();
            let r = coding_deficiency(&cb, &spec, &ml_decoder(&cb, &spec).unwrap()).unwrap();
            assert!((r.max_error - expected).abs() < 1e-12, "{n}: {}", r.max_error);
            assert!((r.max_error - binomial_tail(n as u64, 0.1)).abs() < 1e-12);
        }
    }

    #[test]
    fn sweep_examples() {
        let rows = repetition_sweep(0.1, &[1, 3, 5]).unwrap();
        let pe: Vec<f64> = rows.iter().map(|r| r.pe).collect();
        assert!((pe[0] - 0.1).abs() < 1e-12 && (pe[1] - 0.028).abs() < 1e-12);
        assert!((pe[2] - 0.00856).abs() < 1e-12);
        assert!((rows[0].capacity - 0.5310044064107188).abs() < 1e-12);
        assert!(repetition_sweep(0.0, &[1, 3, 5]).unwrap().iter().all(|r| r.pe == 0.0));
        assert!(repetition_sweep(0.5, &[1, 3, 5, 7])
            .unwrap()
            .iter()
            .all(|r| (r.pe - 0.5).abs() < 1e-12));
        assert!(repetition_sweep(0.1, &[2]).is_err());
    }

    #[test]
    fn lp_never_loses_to_ml() {
        for (cw, p) in [(vec!["000", "111"], 0.1), (vec!["00", "01", "11"], 0.2), (vec!["011", "101", "110"], 0.3)] {
            let cb = Codebook::new(cw).unwrap();
            let spec = ChannelSpec::bsc(p, cb.blocklength()).unwrap();
            let ml = coding_deficiency(&cb, &spec, &ml_decoder(&cb, &spec).unwrap()).unwrap();
            assert!(lp_coding_deficiency(&cb, &spec).unwrap() <= ml.deficiency + 1e-9);
        }
    }

    #[test]
    fn randomized_decoders_obey_the_identity() {
        let cb = Codebook::new(["00", "11"]).unwrap();
        let spec = ChannelSpec::bsc(0.25, 2).unwrap();
        let k = Kernel::new(
            spec.words(),
            cb.message_labels(),
            vec![vec![1.0, 0.0], vec![0.5, 0.5], vec![0.5, 0.5], vec![0.0, 1.0]],
        )
        .unwrap();
        let r = coding_deficiency(&cb, &spec, &DecisionRule::Randomized(k)).unwrap();
        assert!((r.deficiency - r.max_error).abs() < 1e-12);
    }

    fn exhaustive_errors(cb: &Codebook, spec: &ChannelSpec) -> (f64, f64) {
        enumerate_deterministic_rules(&spec.words(), &cb.message_labels())
            .unwrap()
            .map(|m| coding_deficiency(cb, spec, &DecisionRule::Deterministic(m)).unwrap())
            .fold((f64::INFINITY, f64::INFINITY), |(mx, av), r| {
                (mx.min(r.max_error), av.min(r.average_error))
            })
    }

    #[test]
    fn ml_minimizes_average_error() {
        let mut checked = 0;
        for n in 1..=3usize {
            let all = words(n);
            for m in 2..=4usize.min(all.len()) {
                let cb = Codebook::new((0..m).map(|i| all.get((i * 5 + 1) % all.len()).to_string()))
                    .unwrap_or_else(|_| Codebook::new((0..m).map(|i| all.get(i).to_string())).unwrap());
                for p in [0.05, 0.2, 0.4] {
                    let spec = ChannelSpec::bsc(p, n).unwrap();
                    let ml = coding_deficiency(&cb, &spec, &ml_decoder(&cb, &spec).unwrap()).unwrap();
                    let (_, best_avg) = exhaustive_errors(&cb, &spec);
                    assert!(best_avg >= ml.average_error - 1e-12);
                    checked += 1;
                }
            }
        }
        assert!(checked > 10);
    }

    #[test]
    fn ml_is_minimax_on_odd_repetition() {
        for n in [1, 3] {
            for p in [0.05, 0.1, 0.3] {
                let spec = ChannelSpec::bsc(p, n).unwrap();
                let cb = Codebook::repetition(n).unwrap();
                let ml = coding_deficiency(&cb, &spec, &ml_decoder(&cb, &spec).unwrap()).unwrap();
                assert!(exhaustive_errors(&cb, &spec).0 >= ml.max_error - 1e-12);
            }
        }
    }

    #[test]
    fn lowest_index_ties_are_not_minimax() {
        let cb = Codebook::repetition(2).unwrap();
        let spec = ChannelSpec::bsc(0.05, 2).unwrap();
        let ml = coding_deficiency(&cb, &spec, &ml_decoder(&cb, &spec).unwrap()).unwrap();
        assert!((ml.max_error - 0.0975).abs() < 1e-12);
        assert!((exhaustive_errors(&cb, &spec).0 - 0.05).abs() < 1e-12);
        assert!(lp_coding_deficiency(&cb, &spec).unwrap() <= 0.05 + 1e-9);
    }
}
