//! Exact calculus of simple (step) functions on a finite measure space:
//! L^p means, distribution function, decreasing rearrangement and the
//! layer-cake identity, all in closed form.

use crate::error::{Error, Result};
use crate::numeric::{kahan_sum, logsumexp};
use serde::{Deserialize, Serialize};

/// One atom of a simple function: the constant `value` taken on a set of
/// the given `measure`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub value: f64,
    pub measure: f64,
}

/// A simple function on a finite measure space, stored as a finite list of
/// (value, measure) atoms.
///
/// The total measure of the underlying space is the sum of the atom
/// measures; atoms with value zero are kept because they carry measure and
/// therefore affect every integral mean. Values are signed; all norms and
/// rearrangements use their absolute values. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct StepFunction {
    atoms: Vec<Atom>,
    total_measure: f64,
}

impl StepFunction {
    /// Validates atoms (finite values, strictly positive finite measures,
    /// at least one atom) and fixes the total measure as their sum.
    pub fn new(atoms: Vec<Atom>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::EmptyStepFunction);
        }
        for (index, a) in atoms.iter().enumerate() {
            if !a.value.is_finite() {
                return Err(Error::NonFiniteValue {
                    index,
                    value: a.value,
                });
            }
            if !(a.measure.is_finite() && a.measure > 0.0) {
                return Err(Error::NonPositiveMeasure {
                    index,
                    measure: a.measure,
                });
            }
        }
        let total_measure = kahan_sum(atoms.iter().map(|a| a.measure));
        Ok(Self {
            atoms,
            total_measure,
        })
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (f64, f64)>) -> Result<Self> {
        Self::new(
            pairs
                .into_iter()
                .map(|(value, measure)| Atom { value, measure })
                .collect(),
        )
    }

    /// f = c on a space of measure `total`, as a single atom.
    pub fn constant(c: f64, total: f64) -> Result<Self> {
        Self::from_pairs([(c, total)])
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn total_measure(&self) -> f64 {
        self.total_measure
    }

    pub fn max_abs_value(&self) -> f64 {
        self.atoms.iter().fold(0.0, |m, a| m.max(a.value.abs()))
    }

    /// True when every atom value is exactly zero (f = 0 a.e.).
    pub fn is_zero(&self) -> bool {
        self.atoms.iter().all(|a| a.value == 0.0)
    }

    /// The integral mean ((1/|Omega|) sum |v_i|^p mu_i)^(1/p).
    ///
    /// Evaluated in the log domain (logsumexp over p ln|v_i| + ln mu_i) so
    /// exponents up to 1e4 neither overflow nor underflow.
    pub fn lp_mean(&self, p: f64) -> f64 {
        assert!(
            p.is_finite() && p >= 1.0,
            "lp_mean requires finite p >= 1, got {p}"
        );
        let terms = self.atoms.iter().map(move |a| {
            let av = a.value.abs();
            if av == 0.0 {
                f64::NEG_INFINITY
            } else {
                p * av.ln() + a.measure.ln()
            }
        });
        let lse = logsumexp(terms);
        if lse == f64::NEG_INFINITY {
            return 0.0;
        }
        ((lse - self.total_measure.ln()) / p).exp()
    }

    /// The raw integral of |f|^s over the whole space (no 1/|Omega|).
    pub fn abs_power_integral(&self, s: f64) -> f64 {
        assert!(s.is_finite() && s >= 0.0);
        self.atoms
            .iter()
            .map(|a| a.value.abs().powf(s) * a.measure)
            .sum()
    }

    /// (ln |v_i|, ln mu_i) for the atoms with nonzero value; shared by the
    /// norm sweeps so the logs are taken once per function.
    pub(crate) fn ln_pairs(&self) -> Vec<(f64, f64)> {
        self.atoms
            .iter()
            .filter(|a| a.value != 0.0)
            .map(|a| (a.value.abs().ln(), a.measure.ln()))
            .collect()
    }

    /// Exact distribution function t -> |{ |f| > t }|.
    pub fn distribution(&self) -> DistributionFunction {
        DistributionFunction::from_step(self)
    }

    /// Exact decreasing rearrangement of |f| on [0, |Omega|).
    pub fn rearrangement(&self) -> Rearrangement {
        Rearrangement::from_step(self)
    }

    /// Both sides of the layer-cake identity
    /// `int |f|^s = s int_0^inf t^(s-1) |{|f| > t}| dt`
    /// computed by independent routes: the left as the atom sum, the right
    /// in closed form piecewise over the distribution function.
    pub fn layer_cake(&self, s: f64) -> (f64, f64) {
        assert!(s.is_finite() && s >= 1.0);
        let lhs = self.abs_power_integral(s);

        let dist = self.distribution();
        let mut rhs = 0.0;
        let mut prev_t = 0.0f64;
        let mut level = dist.initial_level();
        for &(t, super_measure) in dist.breakpoints() {
            if t > prev_t {
                rhs += level * (t.powf(s) - prev_t.powf(s));
            }
            prev_t = t;
            level = super_measure;
        }
        let _ = level; // beyond the largest |value| the distribution is 0
        (lhs, rhs)
    }

    /// Layer-cake identity with both sides divided by |Omega| (integral
    /// means rather than raw integrals).
    pub fn layer_cake_mean(&self, s: f64) -> (f64, f64) {
        let (lhs, rhs) = self.layer_cake(s);
        (lhs / self.total_measure, rhs / self.total_measure)
    }

    /// Pointwise scalar multiple alpha * f.
    pub fn scale(&self, alpha: f64) -> Self {
        assert!(alpha.is_finite());
        Self {
            atoms: self
                .atoms
                .iter()
                .map(|a| Atom {
                    value: alpha * a.value,
                    measure: a.measure,
                })
                .collect(),
            total_measure: self.total_measure,
        }
    }

    /// Pointwise sum on a shared partition. Both functions must have the
    /// same atom count and identical measures (relative error <= 1e-12 per
    /// atom); the result keeps the left-hand measures.
    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.atoms.len() != other.atoms.len() {
            return Err(Error::PartitionMismatch(format!(
                "atom counts differ: {} vs {}",
                self.atoms.len(),
                other.atoms.len()
            )));
        }
        for (i, (a, b)) in self.atoms.iter().zip(&other.atoms).enumerate() {
            let scale = a.measure.max(b.measure);
            if (a.measure - b.measure).abs() > 1e-12 * scale {
                return Err(Error::PartitionMismatch(format!(
                    "atom {i} measures differ: {} vs {}",
                    a.measure, b.measure
                )));
            }
        }
        Ok(Self {
            atoms: self
                .atoms
                .iter()
                .zip(&other.atoms)
                .map(|(a, b)| Atom {
                    value: a.value + b.value,
                    measure: a.measure,
                })
                .collect(),
            total_measure: self.total_measure,
        })
    }

    /// Optional normalization merging atoms with exactly equal values.
    /// Never applied automatically, so constructions stay auditable.
    pub fn merged(&self) -> Self {
        let mut sorted = self.atoms.clone();
        sorted.sort_by(|a, b| a.value.partial_cmp(&b.value).unwrap());
        let mut merged: Vec<Atom> = Vec::with_capacity(sorted.len());
        for a in sorted {
            match merged.last_mut() {
                Some(last) if last.value == a.value => last.measure += a.measure,
                _ => merged.push(a),
            }
        }
        Self {
            total_measure: self.total_measure,
            atoms: merged,
        }
    }

    /// Parses the `value,measure` CSV format. The total measure is inferred
    /// as the sum of the atom measures; nonpositive measures and non-finite
    /// values are rejected with the offending 1-based line number.
    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut atoms = Vec::new();
        let mut saw_header = false;
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let row = raw.trim_start_matches('\u{feff}').trim();
            if row.is_empty() {
                continue;
            }
            if !saw_header {
                if row.to_ascii_lowercase() != "value,measure" {
                    return Err(Error::Csv {
                        line,
                        msg: format!("expected header `value,measure`, got `{row}`"),
                    });
                }
                saw_header = true;
                continue;
            }
            let mut parts = row.split(',');
            let (vs, ms) = match (parts.next(), parts.next(), parts.next()) {
                (Some(v), Some(m), None) => (v.trim(), m.trim()),
                _ => {
                    return Err(Error::Csv {
                        line,
                        msg: format!("expected two comma-separated fields, got `{row}`"),
                    })
                }
            };
            let value: f64 = vs.parse().map_err(|_| Error::Csv {
                line,
                msg: format!("cannot parse value `{vs}`"),
            })?;
            let measure: f64 = ms.parse().map_err(|_| Error::Csv {
                line,
                msg: format!("cannot parse measure `{ms}`"),
            })?;
            if !value.is_finite() {
                return Err(Error::Csv {
                    line,
                    msg: format!("value {value} is not finite"),
                });
            }
            if !(measure.is_finite() && measure > 0.0) {
                return Err(Error::Csv {
                    line,
                    msg: format!("measure {measure} must be finite and > 0"),
                });
            }
            atoms.push(Atom { value, measure });
        }
        if !saw_header {
            return Err(Error::Csv {
                line: 1,
                msg: "missing `value,measure` header".into(),
            });
        }
        StepFunction::new(atoms)
    }

    pub fn from_csv_path(path: impl AsRef<std::path::Path>) -> Result<Self> {
        Self::from_csv_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("value,measure\n");
        for a in &self.atoms {
            out.push_str(&format!("{},{}\n", a.value, a.measure));
        }
        out
    }

    pub fn write_csv_path(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        std::fs::write(path, self.to_csv_string())?;
        Ok(())
    }
}

/// Right-continuous, nonincreasing distribution function of |f|.
///
/// Breakpoints are exactly the distinct |values| of the source step
/// function, each paired with the strict super-level measure |{|f| > t}|
/// at that threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct DistributionFunction {
    /// (threshold, measure of {|f| > threshold}), thresholds strictly increasing.
    breakpoints: Vec<(f64, f64)>,
    /// Sum of all group measures: the value of f_* below the first breakpoint.
    all_measure: f64,
}

impl DistributionFunction {
    fn from_step(f: &StepFunction) -> Self {
        // Stable ascending sort by |value| keeps equal-value atoms in
        // encounter order, so a function and its rearrangement produce
        // bit-identical group sums.
        let mut sorted: Vec<(f64, f64)> = f
            .atoms()
            .iter()
            .map(|a| (a.value.abs(), a.measure))
            .collect();
        sorted.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());

        let mut groups: Vec<(f64, f64)> = Vec::new();
        for (v, m) in sorted {
            match groups.last_mut() {
                Some(last) if last.0 == v => last.1 += m,
                _ => groups.push((v, m)),
            }
        }

        let mut breakpoints = Vec::with_capacity(groups.len());
        let mut running = 0.0;
        for &(v, m) in groups.iter().rev() {
            breakpoints.push((v, running));
            running += m;
        }
        breakpoints.reverse();
        Self {
            breakpoints,
            all_measure: running,
        }
    }

    /// |{ |f| > t }| for t >= 0.
    pub fn eval(&self, t: f64) -> f64 {
        assert!(t >= 0.0, "distribution function is evaluated at t >= 0");
        let idx = self.breakpoints.partition_point(|&(th, _)| th <= t);
        if idx == 0 {
            self.all_measure
        } else {
            self.breakpoints[idx - 1].1
        }
    }

    /// Measure of the support {f != 0}.
    pub fn support_measure(&self) -> f64 {
        self.eval(0.0)
    }

    pub fn breakpoints(&self) -> &[(f64, f64)] {
        &self.breakpoints
    }

    /// Value of f_* on [0, first threshold): the whole space.
    pub fn initial_level(&self) -> f64 {
        self.all_measure
    }

    /// Left limits: (a_k, |{ |f| >= a_k }|) for each distinct |value| a_k.
    /// These are the candidate suprema of t^p f_*(t).
    pub fn left_limits(&self) -> Vec<(f64, f64)> {
        let mut out = Vec::with_capacity(self.breakpoints.len());
        for (k, &(t, _)) in self.breakpoints.iter().enumerate() {
            let measure_geq = if k == 0 {
                self.all_measure
            } else {
                self.breakpoints[k - 1].1
            };
            out.push((t, measure_geq));
        }
        out
    }
}

/// Nonincreasing rearrangement of |f| on [0, |Omega|), stored as plateaus
/// of (length, value) with values sorted nonincreasing.
#[derive(Debug, Clone, PartialEq)]
pub struct Rearrangement {
    plateaus: Vec<(f64, f64)>,
    total_length: f64,
}

impl Rearrangement {
    fn from_step(f: &StepFunction) -> Self {
        let mut atoms: Vec<(f64, f64)> = f
            .atoms()
            .iter()
            .map(|a| (a.measure, a.value.abs()))
            .collect();
        // Stable descending sort by value.
        atoms.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
        Self {
            plateaus: atoms,
            total_length: f.total_measure(),
        }
    }

    /// (length, value) plateaus, values nonincreasing.
    pub fn plateaus(&self) -> &[(f64, f64)] {
        &self.plateaus
    }

    pub fn total_length(&self) -> f64 {
        self.total_length
    }

    /// f*(s) for 0 <= s < total length.
    pub fn value_at(&self, s: f64) -> f64 {
        assert!((0.0..self.total_length).contains(&s));
        let mut acc = 0.0;
        for &(len, v) in &self.plateaus {
            acc += len;
            if s < acc {
                return v;
            }
        }
        self.plateaus.last().map(|&(_, v)| v).unwrap_or(0.0)
    }

    /// int_0^{|Omega|} (f*)^p ds as the exact plateau sum.
    pub fn abs_power_integral(&self, p: f64) -> f64 {
        self.plateaus
            .iter()
            .map(|&(len, v)| if v == 0.0 { 0.0 } else { v.powf(p) * len })
            .sum()
    }

    /// View the rearrangement as a step function (same atoms, nonnegative
    /// values, sorted nonincreasing).
    pub fn to_step_function(&self) -> StepFunction {
        StepFunction::from_pairs(self.plateaus.iter().map(|&(len, v)| (v, len)))
            .expect("rearrangement plateaus are valid atoms")
    }
}
