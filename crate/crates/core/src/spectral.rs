//! Weighted spectra of `|D|`, counting functions `Λ_t`, and log-log
//! dimension estimates.
//!
//! A [`WeightedSpectrum`] is a finite measure on `[0, ∞)`: each point is an
//! eigenvalue of `|D|` together with the trace of its spectral projection.
//! Type I spectra use integer multiplicities; semifinite truncations carry
//! fractional weights.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default cap on the number of points a tensor product may produce.
pub const TENSOR_BUDGET: usize = 1 << 25;

#[derive(Clone, Debug)]
pub struct WeightedSpectrum {
    values: Vec<f64>,
    weights: Vec<f64>,
    /// prefix[i] = Σ weights[..i]
    prefix: Vec<f64>,
    label: String,
    exact_below: f64,
}

impl WeightedSpectrum {
    /// Builds a spectrum from `(value, weight)` pairs. Values must be finite
    /// and nonnegative, weights finite and positive, and the list nonempty.
    pub fn new(points: Vec<(f64, f64)>, label: impl Into<String>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidArgument("empty spectrum".into()));
        }
        for &(v, w) in &points {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidArgument(format!("spectral value {v}")));
            }
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::InvalidArgument(format!("spectral weight {w}")));
            }
        }
        let mut points = points;
        points.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        let (values, weights): (Vec<f64>, Vec<f64>) = points.into_iter().unzip();
        let mut prefix = Vec::with_capacity(weights.len() + 1);
        prefix.push(0.0);
        let mut acc = 0.0;
        for w in &weights {
            acc += w;
            prefix.push(acc);
        }
        Ok(Self {
            values,
            weights,
            prefix,
            label: label.into(),
            exact_below: f64::INFINITY,
        })
    }

    /// Declares that counting is exact (unaffected by truncation) for
    /// `t ≤ limit`. Fits never use grid points above this limit.
    pub fn with_exact_below(mut self, limit: f64) -> Self {
        self.exact_below = limit;
        self
    }

    pub fn exact_below(&self) -> f64 {
        self.exact_below
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Points sorted by value.
    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.values
            .iter()
            .copied()
            .zip(self.weights.iter().copied())
    }

    pub fn total_weight(&self) -> f64 {
        *self.prefix.last().unwrap()
    }

    pub fn max_value(&self) -> f64 {
        *self.values.last().unwrap()
    }

    pub fn min_nonzero_value(&self) -> Option<f64> {
        self.values.iter().copied().find(|&v| v > 0.0)
    }

    /// Merges points with bit-identical values.
    pub fn compacted(&self) -> Self {
        let mut points: Vec<(f64, f64)> = Vec::with_capacity(self.len());
        for (v, w) in self.points() {
            match points.last_mut() {
                Some(last) if last.0 == v => last.1 += w,
                _ => points.push((v, w)),
            }
        }
        Self::new(points, self.label.clone())
            .expect("compacting a valid spectrum")
            .with_exact_below(self.exact_below)
    }

    fn count_below(&self, t: f64) -> f64 {
        let idx = self.values.partition_point(|&v| v < t);
        self.prefix[idx]
    }

    /// `(t_min, t_max)`: `t_min = 4·(smallest nonzero value)`,
    /// `t_max = min(largest value / 2, exactness limit)`.
    pub fn valid_range(&self) -> Result<(f64, f64)> {
        let lo = self
            .min_nonzero_value()
            .ok_or_else(|| Error::InvalidArgument("spectrum has no nonzero value".into()))?;
        Ok((4.0 * lo, (self.max_value() / 2.0).min(self.exact_below)))
    }

    pub fn to_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["value", "weight"]).map_err(fmt_err)?;
        for (v, wt) in self.points() {
            w.write_record([format!("{v:.16e}"), format!("{wt:.16e}")])
                .map_err(fmt_err)?;
        }
        w.flush().map_err(|e| Error::Format(e.to_string()))?;
        Ok(())
    }

    pub fn from_csv<R: Read>(reader: R, label: impl Into<String>) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let headers = r.headers().map_err(fmt_err)?;
        if headers.iter().collect::<Vec<_>>() != ["value", "weight"] {
            return Err(Error::Format(format!("unexpected CSV header {headers:?}")));
        }
        let mut points = Vec::new();
        for record in r.records() {
            let record = record.map_err(fmt_err)?;
            let parse = |i: usize| -> Result<f64> {
                record
                    .get(i)
                    .ok_or_else(|| Error::Format("short CSV row".into()))?
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Format(e.to_string()))
            };
            points.push((parse(0)?, parse(1)?));
        }
        Self::new(points, label)
    }

    /// JSON array of `[value, weight]` pairs.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::Value::Array(
            self.points()
                .map(|(v, w)| serde_json::json!([v, w]))
                .collect(),
        )
    }

    pub fn from_json(value: &serde_json::Value, label: impl Into<String>) -> Result<Self> {
        let points: Vec<(f64, f64)> =
            serde_json::from_value(value.clone()).map_err(|e| Error::Format(e.to_string()))?;
        Self::new(points, label)
    }
}

fn fmt_err(e: csv::Error) -> Error {
    Error::Format(e.to_string())
}

/// `Λ_t = Σ { w : (v, w) ∈ S, v < t }`.
pub fn counting(s: &WeightedSpectrum, t: f64) -> Result<f64> {
    if t.is_nan() || t <= 0.0 {
        return Err(Error::InvalidArgument(format!("counting at t = {t}")));
    }
    Ok(s.count_below(t))
}

/// Spectrum of the number operator on `ℓ²({0, …, N})`.
pub fn nat_spectrum(n: usize) -> Result<WeightedSpectrum> {
    if n < 1 {
        return Err(Error::InvalidArgument("nat_spectrum needs N ≥ 1".into()));
    }
    Ok(WeightedSpectrum::new(
        (0..=n).map(|k| (k as f64, 1.0)).collect(),
        format!("nat(N={n})"),
    )?
    .with_exact_below((n + 1) as f64))
}

/// `|D|` for `D² = D₁² ⊗ I + I ⊗ D₂²`: all pairs `(√(v² + u²), w·w')`.
pub fn tensor_spectrum(s1: &WeightedSpectrum, s2: &WeightedSpectrum) -> Result<WeightedSpectrum> {
    tensor_spectrum_with_budget(s1, s2, TENSOR_BUDGET)
}

pub fn tensor_spectrum_with_budget(
    s1: &WeightedSpectrum,
    s2: &WeightedSpectrum,
    budget: usize,
) -> Result<WeightedSpectrum> {
    let a = s1.compacted();
    let b = s2.compacted();
    let needed = a.len() as u128 * b.len() as u128;
    if needed > budget as u128 {
        return Err(Error::BudgetExceeded {
            what: "tensor spectrum points",
            needed,
            limit: budget as u128,
        });
    }
    let mut points = Vec::with_capacity(needed as usize);
    for (v, w) in a.points() {
        for (u, x) in b.points() {
            points.push((v.hypot(u), w * x));
        }
    }
    let out = WeightedSpectrum::new(points, format!("{} x {}", s1.label(), s2.label()))?;
    // A pair lies below t only if both factors do, so exactness carries over
    // up to the smaller limit.
    Ok(out
        .compacted()
        .with_exact_below(s1.exact_below().min(s2.exact_below())))
}

/// Counting function of the tensor spectrum without materialising it:
/// `Σ_{v < t} w·Λ_{√(t² − v²)}(S₂)`.
pub fn tensor_counting(s1: &WeightedSpectrum, s2: &WeightedSpectrum, t: f64) -> Result<f64> {
    if t.is_nan() || t <= 0.0 {
        return Err(Error::InvalidArgument(format!("counting at t = {t}")));
    }
    Ok(s1
        .points()
        .take_while(|&(v, _)| v < t)
        .map(|(v, w)| w * s2.count_below(((t - v) * (t + v)).sqrt()))
        .sum())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SandwichReport {
    pub t: f64,
    pub lower: f64,
    pub middle: f64,
    pub upper: f64,
    pub holds: bool,
}

/// Checks `Λ_{t/√2}(S₁)Λ_{t/√2}(S₂) ≤ Λ_t(S₁ ⊗ S₂) ≤ Λ_t(S₁)Λ_t(S₂)`
/// (square inside disc inside square).
pub fn sandwich_check(
    s1: &WeightedSpectrum,
    s2: &WeightedSpectrum,
    t: f64,
) -> Result<SandwichReport> {
    let inner = t / std::f64::consts::SQRT_2;
    let lower = counting(s1, inner)? * counting(s2, inner)?;
    let upper = counting(s1, t)? * counting(s2, t)?;
    let middle = tensor_counting(s1, s2, t)?;
    // Fractional weights are summed in different orders on each side.
    let slack = 1e-12 * upper;
    Ok(SandwichReport {
        t,
        lower,
        middle,
        upper,
        holds: lower <= middle + slack && middle <= upper + slack,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DimensionFit {
    pub slope: f64,
    pub intercept: f64,
    pub max_tail_slope: f64,
    pub grid: Vec<(f64, f64)>,
    pub valid_range: (f64, f64),
}

/// Powers of two in `[lo, hi]`.
pub fn dyadic_grid(lo: f64, hi: f64) -> Vec<f64> {
    if lo.is_nan() || lo <= 0.0 || hi < lo {
        return Vec::new();
    }
    let start = lo.log2().ceil() as i32;
    let end = hi.log2().floor() as i32;
    (start..=end).map(|k| 2f64.powi(k)).collect()
}

/// Least-squares slope of `log Λ_t` against `log t` over the grid, plus the
/// largest secant slope from any grid point to the last one.
pub fn dimension_fit(s: &WeightedSpectrum, grid: &[f64]) -> Result<DimensionFit> {
    let valid_range = s.valid_range()?;
    if grid
        .windows(2)
        .any(|w| w[0].partial_cmp(&w[1]) != Some(std::cmp::Ordering::Less))
    {
        return Err(Error::InvalidArgument(
            "grid must be strictly increasing".into(),
        ));
    }
    // Relative slack so that grid points computed by the same formula as
    // the range endpoints are not rejected by rounding.
    let slack = 1e-12;
    for &t in grid {
        if t < valid_range.0 * (1.0 - slack) || t > valid_range.1 * (1.0 + slack) {
            return Err(Error::OutOfRange {
                t,
                min: valid_range.0,
                max: valid_range.1,
            });
        }
    }
    let table: Vec<(f64, f64)> = grid
        .iter()
        .map(|&t| counting(s, t).map(|c| (t, c)))
        .collect::<Result<_>>()?;
    let logs: Vec<(f64, f64)> = table
        .iter()
        .filter(|&&(_, c)| c > 0.0)
        .map(|&(t, c)| (t.ln(), c.ln()))
        .collect();
    if logs.len() < 3 {
        return Err(Error::InsufficientGrid {
            needed: 3,
            found: logs.len(),
        });
    }
    let n = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let last = *logs.last().unwrap();
    let max_tail_slope = logs[..logs.len() - 1]
        .iter()
        .map(|p| (last.1 - p.1) / (last.0 - p.0))
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(DimensionFit {
        slope,
        intercept,
        max_tail_slope,
        grid: table,
        valid_range,
    })
}

/// [`dimension_fit`] over the dyadic grid spanning the valid range.
pub fn dimension_fit_dyadic(s: &WeightedSpectrum) -> Result<DimensionFit> {
    let (lo, hi) = s.valid_range()?;
    dimension_fit(s, &dyadic_grid(lo, hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn spec(points: &[(f64, f64)]) -> WeightedSpectrum {
        WeightedSpectrum::new(points.to_vec(), "test").unwrap()
    }

    #[test]
    fn counting_is_strict() {
        let s = spec(&(0..10).map(|n| (n as f64, 1.0)).collect::<Vec<_>>());
        assert_eq!(counting(&s, 5.5).unwrap(), 6.0);
        let s = spec(&[(1.0, 0.5), (2.0, 0.5)]);
        assert_eq!(counting(&s, 1.0).unwrap(), 0.0);
        assert!(counting(&s, 0.0).is_err());
        assert!(counting(&s, -1.0).is_err());
    }

    #[test]
    fn rejects_bad_points() {
        assert!(WeightedSpectrum::new(vec![], "x").is_err());
        assert!(WeightedSpectrum::new(vec![(-1.0, 1.0)], "x").is_err());
        assert!(WeightedSpectrum::new(vec![(1.0, 0.0)], "x").is_err());
        assert!(WeightedSpectrum::new(vec![(f64::NAN, 1.0)], "x").is_err());
    }

    #[test]
    fn nat_spectrum_examples() {
        let s = nat_spectrum(3).unwrap();
        assert_eq!(
            s.points().collect::<Vec<_>>(),
            vec![(0.0, 1.0), (1.0, 1.0), (2.0, 1.0), (3.0, 1.0)]
        );
        assert_eq!(counting(&nat_spectrum(100).unwrap(), 50.5).unwrap(), 51.0);
        assert!(nat_spectrum(0).is_err());
    }

    #[test]
    fn nat_dimension_is_one() {
        let fit = dimension_fit(&nat_spectrum(128).unwrap(), &dyadic_grid(4.0, 64.0)).unwrap();
        assert!((fit.slope - 1.0).abs() < 0.05, "{}", fit.slope);
        let fit = dimension_fit(&nat_spectrum(2048).unwrap(), &dyadic_grid(8.0, 1024.0)).unwrap();
        assert!((fit.slope - 1.0).abs() < 0.03, "{}", fit.slope);
        assert!(fit
            .grid
            .windows(2)
            .all(|w| w[0].0 < w[1].0 && w[0].1 <= w[1].1));
    }

    #[test]
    fn fit_rejects_bad_grids() {
        let s = nat_spectrum(64).unwrap();
        assert!(matches!(
            dimension_fit(&s, &[4.0, 8.0, 64.0]),
            Err(Error::OutOfRange { .. })
        ));
        assert!(matches!(
            dimension_fit(&s, &[4.0, 8.0]),
            Err(Error::InsufficientGrid { .. })
        ));
        assert!(dimension_fit(&s, &[8.0, 4.0, 16.0]).is_err());
    }

    #[test]
    fn tensor_examples() {
        let s1 = spec(&[(0.0, 1.0), (1.0, 1.0)]);
        let s2 = spec(&[(0.0, 1.0), (2.0, 1.0)]);
        let t = tensor_spectrum(&s1, &s2).unwrap();
        let got: Vec<(f64, f64)> = t.points().collect();
        assert_eq!(
            got,
            vec![(0.0, 1.0), (1.0, 1.0), (2.0, 1.0), (5f64.sqrt(), 1.0)]
        );

        let unit = spec(&[(0.0, 1.0)]);
        let same = tensor_spectrum(&s1, &unit).unwrap();
        assert_eq!(
            same.points().collect::<Vec<_>>(),
            s1.points().collect::<Vec<_>>()
        );

        let w = tensor_spectrum(&spec(&[(1.0, 0.5)]), &spec(&[(1.0, 3.0)])).unwrap();
        assert_eq!(w.points().collect::<Vec<_>>(), vec![(2f64.sqrt(), 1.5)]);
    }

    #[test]
    fn tensor_budget_enforced() {
        let s = nat_spectrum(100).unwrap();
        assert!(matches!(
            tensor_spectrum_with_budget(&s, &s, 1000),
            Err(Error::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn sandwich_examples() {
        let zero = spec(&[(0.0, 1.0)]);
        let r = sandwich_check(&zero, &zero, 1.0).unwrap();
        assert_eq!((r.lower, r.middle, r.upper), (1.0, 1.0, 1.0));
        assert!(r.holds);

        let n = nat_spectrum(64).unwrap();
        let r = sandwich_check(&n, &n, 10.0).unwrap();
        // Brute-force count of lattice points (a, b) ∈ {0..64}² with a² + b² < 100.
        let brute = (0..=64)
            .flat_map(|a| (0..=64).map(move |b| (a, b)))
            .filter(|&(a, b)| a * a + b * b < 100)
            .count() as f64;
        // Values 0..=7 lie below 10/√2.
        assert_eq!(r.lower, 64.0);
        assert_eq!(r.upper, 100.0);
        assert_eq!(r.middle, brute);
        assert!(r.holds);
    }

    #[test]
    fn csv_and_json_round_trip_bit_exact() {
        let s = spec(&[
            (0.0, 1.0),
            (std::f64::consts::PI, 1.0 / 3.0),
            (1e-300, 7.25),
            (2f64.sqrt() * 1e10, 2.0),
        ]);
        let mut buf = Vec::new();
        s.to_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("value,weight\n"));
        let back = WeightedSpectrum::from_csv(&buf[..], "back").unwrap();
        assert_eq!(
            back.points().collect::<Vec<_>>(),
            s.points().collect::<Vec<_>>()
        );

        let j = s.to_json();
        let back = WeightedSpectrum::from_json(&j, "back").unwrap();
        assert_eq!(
            back.points().collect::<Vec<_>>(),
            s.points().collect::<Vec<_>>()
        );
    }

    #[test]
    fn fit_serializes_with_expected_keys() {
        let fit = dimension_fit_dyadic(&nat_spectrum(256).unwrap()).unwrap();
        let v = serde_json::to_value(&fit).unwrap();
        for key in [
            "slope",
            "intercept",
            "max_tail_slope",
            "grid",
            "valid_range",
        ] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
    }

    fn arb_spectrum() -> impl Strategy<Value = WeightedSpectrum> {
        proptest::collection::vec((0.0f64..20.0, 0.01f64..5.0), 1..50)
            .prop_map(|pts| WeightedSpectrum::new(pts, "random").unwrap())
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(20))]

        #[test]
        fn tensor_enumeration_matches_convolution(a in arb_spectrum(), b in arb_spectrum(), t in 0.1f64..30.0) {
            let enumerated = counting(&tensor_spectrum(&a, &b).unwrap(), t).unwrap();
            let convolved = tensor_counting(&a, &b, t).unwrap();
            prop_assert!((enumerated - convolved).abs() <= 1e-9 * enumerated.max(1.0));
        }

        #[test]
        fn counting_monotone_and_bounded(a in arb_spectrum(), t1 in 0.01f64..30.0, dt in 0.0f64..10.0) {
            let c1 = counting(&a, t1).unwrap();
            let c2 = counting(&a, t1 + dt).unwrap();
            prop_assert!(c1 <= c2);
            prop_assert!(c2 <= a.total_weight() * (1.0 + 1e-12));
            prop_assert!((counting(&a, a.max_value() + 1.0).unwrap() - a.total_weight()).abs() < 1e-9);
        }

        #[test]
        fn sandwich_always_holds(a in arb_spectrum(), b in arb_spectrum(), t in 0.1f64..30.0) {
            prop_assert!(sandwich_check(&a, &b, t).unwrap().holds);
        }
    }
}
