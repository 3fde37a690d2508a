//! Right-continuous step functions of time.
//!
//! Every estimator in this crate (the observed-time distribution, the
//! event sub-distribution, cumulative hazards and distribution functions)
//! is a càdlàg step function: a baseline value plus a finite list of jumps.
//! [`StepCurve`] stores the jump times together with the jump sizes and the
//! cumulative values, so evaluation is a binary search.

use std::io::Write;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CurveError {
    #[error("jump times and jump sizes differ in length ({times} vs {sizes})")]
    LengthMismatch { times: usize, sizes: usize },
    #[error("jump times must be strictly increasing (index {index})")]
    NotIncreasing { index: usize },
    #[error("jump time {time} is negative or not finite")]
    InvalidTime { time: f64 },
    #[error("jump size {size} at t = {time} is not finite")]
    InvalidJump { time: f64, size: f64 },
    #[error("monotone curve has a negative jump {size} at t = {time}")]
    NegativeJump { time: f64, size: f64 },
}

/// A càdlàg step function `t ↦ baseline + Σ_{s ≤ t} Δ(s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepCurve {
    times: Vec<f64>,
    jumps: Vec<f64>,
    values: Vec<f64>,
    baseline: f64,
    monotone: bool,
}

impl Default for StepCurve {
    fn default() -> Self {
        Self::zero()
    }
}

impl StepCurve {
    /// The identically zero curve.
    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    pub fn constant(baseline: f64) -> Self {
        Self {
            times: Vec::new(),
            jumps: Vec::new(),
            values: Vec::new(),
            baseline,
            monotone: true,
        }
    }

    /// Builds a curve from jump times and jump sizes.
    pub fn new(times: Vec<f64>, jumps: Vec<f64>, baseline: f64) -> Result<Self, CurveError> {
        validate_times(&times)?;
        if times.len() != jumps.len() {
            return Err(CurveError::LengthMismatch {
                times: times.len(),
                sizes: jumps.len(),
            });
        }
        for (&time, &size) in times.iter().zip(&jumps) {
            if !size.is_finite() {
                return Err(CurveError::InvalidJump { time, size });
            }
        }
        let monotone = jumps.iter().all(|&d| d >= 0.0);
        let mut acc = baseline;
        let values = jumps
            .iter()
            .map(|d| {
                acc += d;
                acc
            })
            .collect();
        Ok(Self {
            times,
            jumps,
            values,
            baseline,
            monotone,
        })
    }

    /// Like [`StepCurve::new`] but rejects negative jumps.
    pub fn new_monotone(
        times: Vec<f64>,
        jumps: Vec<f64>,
        baseline: f64,
    ) -> Result<Self, CurveError> {
        if let Some((&time, &size)) = times.iter().zip(&jumps).find(|(_, &d)| d < 0.0) {
            return Err(CurveError::NegativeJump { time, size });
        }
        Self::new(times, jumps, baseline)
    }

    /// Builds a curve from the values it takes right after each jump.
    ///
    /// Jump sizes are recovered as successive differences; the stored values
    /// are the ones passed in, so evaluation returns them bit-for-bit.
    pub fn from_values(
        times: Vec<f64>,
        values: Vec<f64>,
        baseline: f64,
    ) -> Result<Self, CurveError> {
        validate_times(&times)?;
        if times.len() != values.len() {
            return Err(CurveError::LengthMismatch {
                times: times.len(),
                sizes: values.len(),
            });
        }
        let mut prev = baseline;
        let mut jumps = Vec::with_capacity(values.len());
        for (&time, &v) in times.iter().zip(&values) {
            if !v.is_finite() {
                return Err(CurveError::InvalidJump { time, size: v });
            }
            jumps.push(v - prev);
            prev = v;
        }
        let monotone = jumps.iter().all(|&d| d >= 0.0);
        Ok(Self {
            times,
            jumps,
            values,
            baseline,
            monotone,
        })
    }

    /// Builds a curve from unordered `(time, size)` pairs, merging equal
    /// times into one jump whose size is the sum of the contributions.
    pub fn from_unsorted_jumps(
        pairs: impl IntoIterator<Item = (f64, f64)>,
        baseline: f64,
    ) -> Result<Self, CurveError> {
        let mut pairs: Vec<(f64, f64)> = pairs.into_iter().collect();
        for &(time, _) in &pairs {
            if !(time.is_finite() && time >= 0.0) {
                return Err(CurveError::InvalidTime { time });
            }
        }
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut times: Vec<f64> = Vec::with_capacity(pairs.len());
        let mut jumps: Vec<f64> = Vec::with_capacity(pairs.len());
        for (t, d) in pairs {
            match times.last() {
                Some(&last) if last == t => *jumps.last_mut().unwrap() += d,
                _ => {
                    times.push(t);
                    jumps.push(d);
                }
            }
        }
        Self::new(times, jumps, baseline)
    }

    pub fn baseline(&self) -> f64 {
        self.baseline
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn jumps(&self) -> &[f64] {
        &self.jumps
    }

    /// Values immediately after each jump, aligned with [`StepCurve::times`].
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// True when every jump is nonnegative.
    pub fn is_monotone(&self) -> bool {
        self.monotone
    }

    /// Value after the last jump.
    pub fn terminal_value(&self) -> f64 {
        self.values.last().copied().unwrap_or(self.baseline)
    }

    /// Iterator over `(time, jump size)` pairs.
    pub fn iter_jumps(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.times.iter().copied().zip(self.jumps.iter().copied())
    }

    /// Right-continuous evaluation.
    pub fn value(&self, t: f64) -> f64 {
        let idx = self.times.partition_point(|&s| s <= t);
        if idx == 0 {
            self.baseline
        } else {
            self.values[idx - 1]
        }
    }

    /// Left limit at `t`: a jump located exactly at `t` is excluded.
    pub fn value_left(&self, t: f64) -> f64 {
        let idx = self.times.partition_point(|&s| s < t);
        if idx == 0 {
            self.baseline
        } else {
            self.values[idx - 1]
        }
    }

    /// Jump size at `t`, zero when `t` is not a jump time.
    pub fn jump_at(&self, t: f64) -> f64 {
        match self.times.binary_search_by(|s| s.total_cmp(&t)) {
            Ok(i) => self.jumps[i],
            Err(_) => 0.0,
        }
    }

    /// Number of jumps at times `≤ t`.
    pub fn count_up_to(&self, t: f64) -> usize {
        self.times.partition_point(|&s| s <= t)
    }

    /// `∫_{[0, t_max]} f(s) dcurve(s)`, a sum over the jumps at times `≤ t_max`.
    pub fn stieltjes_integral(&self, integrand: impl Fn(f64) -> f64, t_max: f64) -> f64 {
        self.iter_jumps()
            .take_while(|&(s, _)| s <= t_max)
            .map(|(s, d)| integrand(s) * d)
            .sum()
    }

    /// Restriction to jumps at times `≤ t_max`.
    pub fn truncated(&self, t_max: f64) -> Self {
        let k = self.count_up_to(t_max);
        Self {
            times: self.times[..k].to_vec(),
            jumps: self.jumps[..k].to_vec(),
            values: self.values[..k].to_vec(),
            baseline: self.baseline,
            monotone: self.monotone,
        }
    }

    /// Lebesgue integral `∫_{lower}^{upper} value(t) dt`, exact for a step function.
    pub fn integrate(&self, lower: f64, upper: f64) -> f64 {
        if upper <= lower {
            return 0.0;
        }
        let mut total = 0.0;
        let mut left = lower;
        let mut current = self.value(lower);
        let start = self.count_up_to(lower);
        for i in start..self.times.len() {
            let s = self.times[i];
            if s >= upper {
                break;
            }
            total += current * (s - left);
            left = s;
            current = self.values[i];
        }
        total + current * (upper - left)
    }

    /// Writes the two-column `(time, value)` table: one row at `t = 0` with
    /// the baseline, then one row per jump.
    pub fn write_table<W: Write>(&self, mut out: W, value_name: &str) -> std::io::Result<()> {
        writeln!(out, "time,{value_name}")?;
        if self.times.first() != Some(&0.0) {
            writeln!(out, "0,{}", self.baseline)?;
        }
        for (t, v) in self.times.iter().zip(&self.values) {
            writeln!(out, "{t},{v}")?;
        }
        Ok(())
    }
}

fn validate_times(times: &[f64]) -> Result<(), CurveError> {
    for (i, &t) in times.iter().enumerate() {
        if !(t.is_finite() && t >= 0.0) {
            return Err(CurveError::InvalidTime { time: t });
        }
        if i > 0 && times[i - 1] >= t {
            return Err(CurveError::NotIncreasing { index: i });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn two_jumps() -> StepCurve {
        StepCurve::new(vec![1.0, 3.0], vec![0.5, 0.25], 0.0).unwrap()
    }

    #[test]
    fn value_is_right_continuous() {
        let c = StepCurve::new(vec![1.0], vec![0.5], 0.0).unwrap();
        assert_eq!(c.value(1.0), 0.5);
        assert_eq!(c.value(0.99), 0.0);
        assert_eq!(two_jumps().value(2.0), 0.5);
    }

    #[test]
    fn value_left_excludes_jump() {
        let c = StepCurve::new(vec![1.0], vec![0.5], 0.0).unwrap();
        assert_eq!(c.value_left(1.0), 0.0);
        assert_eq!(c.value_left(1.5), 0.5);
        let empty = StepCurve::constant(0.7);
        assert_eq!(empty.value_left(3.0), 0.7);
        assert_eq!(empty.value(3.0), 0.7);
    }

    #[test]
    fn stieltjes_sums() {
        let c = StepCurve::new(vec![1.0, 2.0], vec![0.3, 0.4], 0.0).unwrap();
        assert!((c.stieltjes_integral(|_| 1.0, 2.0) - 0.7).abs() < 1e-15);
        assert!((c.stieltjes_integral(|_| 1.0, 1.5) - 0.3).abs() < 1e-15);
        assert!((c.stieltjes_integral(|s| s, 2.0) - 1.1).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_times() {
        assert_eq!(
            StepCurve::new(vec![1.0, 1.0], vec![0.1, 0.1], 0.0),
            Err(CurveError::NotIncreasing { index: 1 })
        );
        assert!(matches!(
            StepCurve::new(vec![-1.0], vec![0.1], 0.0),
            Err(CurveError::InvalidTime { .. })
        ));
        assert!(matches!(
            StepCurve::new(vec![1.0], vec![0.1, 0.2], 0.0),
            Err(CurveError::LengthMismatch { .. })
        ));
        assert!(matches!(
            StepCurve::new_monotone(vec![1.0], vec![-0.1], 0.0),
            Err(CurveError::NegativeJump { .. })
        ));
    }

    #[test]
    fn ties_merge_into_one_jump() {
        let c = StepCurve::from_unsorted_jumps([(2.0, 0.1), (1.0, 0.2), (2.0, 0.3)], 0.0).unwrap();
        assert_eq!(c.times(), &[1.0, 2.0]);
        assert!((c.jump_at(2.0) - 0.4).abs() < 1e-15);
    }

    #[test]
    fn integrate_step_function() {
        // 0 on [0,1), 0.5 on [1,3), 0.75 afterwards
        let c = two_jumps();
        assert!((c.integrate(0.0, 4.0) - (0.5 * 2.0 + 0.75)).abs() < 1e-15);
        assert!((c.integrate(2.0, 3.5) - (0.5 + 0.375)).abs() < 1e-15);
        assert_eq!(c.integrate(2.0, 2.0), 0.0);
    }

    #[test]
    fn table_has_header_and_rows() {
        let mut buf = Vec::new();
        two_jumps().write_table(&mut buf, "H").unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "time,H\n0,0\n1,0.5\n3,0.75\n"
        );
    }

    fn arb_curve() -> impl Strategy<Value = StepCurve> {
        prop::collection::btree_set(0u32..1000, 0..30)
            .prop_flat_map(|times| {
                let n = times.len();
                let times: Vec<f64> = times.into_iter().map(|t| t as f64 / 10.0).collect();
                (
                    Just(times),
                    prop::collection::vec(0.0f64..1.0, n),
                    -1.0f64..1.0,
                )
            })
            .prop_map(|(t, j, b)| StepCurve::new_monotone(t, j, b).unwrap())
    }

    proptest! {
        #[test]
        fn jump_equals_value_minus_left_limit(c in arb_curve(), t in 0.0f64..100.0) {
            let probe = if c.is_empty() || t > 50.0 { t } else { c.times()[(t as usize) % c.len()] };
            let diff = c.value(probe) - c.value_left(probe);
            prop_assert!((diff - c.jump_at(probe)).abs() < 1e-12);
        }

        #[test]
        fn monotone_curves_are_nondecreasing(c in arb_curve(), a in 0.0f64..100.0, b in 0.0f64..100.0) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(c.value(lo) <= c.value(hi));
        }

        #[test]
        fn unit_integrand_recovers_increment(c in arb_curve(), t in 0.0f64..100.0) {
            let total = c.stieltjes_integral(|_| 1.0, t);
            prop_assert!((total - (c.value(t) - c.baseline())).abs() < 1e-12);
        }
    }
}
