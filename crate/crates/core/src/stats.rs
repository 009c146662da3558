//! Comparison statistics: rank correlation, log-log fits and external
//! country indicators.

use std::collections::BTreeMap;
use std::io::BufRead;
use std::path::Path;

use serde::Serialize;

use crate::breakthrough::YearWindow;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpearmanResult<T> {
    pub rho: T,
    /// Entities present in both inputs.
    pub n: usize,
    pub only_in_a: Vec<String>,
    pub only_in_b: Vec<String>,
}

/// Average ranks (1-based, ascending); tied values share the mean of the
/// positions they occupy.
pub fn average_ranks<T: Scalar>(values: &[T]) -> Vec<T> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap_or(std::cmp::Ordering::Equal));
    let mut ranks = vec![T::zero(); n];
    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        while j < n && values[order[j]] == values[order[i]] {
            j += 1;
        }
        // positions i+1 ..= j
        let avg = T::from_count((i + 1 + j) as u64) / T::from_count(2);
        for &k in &order[i..j] {
            ranks[k] = avg;
        }
        i = j;
    }
    ranks
}

pub fn pearson<T: Scalar>(x: &[T], y: &[T]) -> Result<T> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::InsufficientData("pearson needs two equal-length samples of size >= 2".into()));
    }
    let n = T::from_count(x.len() as u64);
    let mx = x.iter().copied().sum::<T>() / n;
    let my = y.iter().copied().sum::<T>() / n;
    let (mut sxy, mut sxx, mut syy) = (T::zero(), T::zero(), T::zero());
    for (&a, &b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy = sxy + dx * dy;
        sxx = sxx + dx * dx;
        syy = syy + dy * dy;
    }
    if sxx == T::zero() || syy == T::zero() {
        return Err(Error::invalid("correlation undefined for a constant sample"));
    }
    let r = sxy / (sxx * syy).sqrt();
    Ok(r.max(-T::one()).min(T::one()))
}

/// Spearman correlation over the keys shared by `a` and `b`. Inputs may be
/// ranks or raw scores; both are re-ranked with tie averaging.
pub fn spearman<T: Scalar>(a: &BTreeMap<String, T>, b: &BTreeMap<String, T>) -> Result<SpearmanResult<T>> {
    let common: Vec<&String> = a.keys().filter(|k| b.contains_key(*k)).collect();
    if common.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "spearman needs at least 3 shared entities, found {}",
            common.len()
        )));
    }
    let xa: Vec<T> = common.iter().map(|k| a[*k]).collect();
    let xb: Vec<T> = common.iter().map(|k| b[*k]).collect();
    let rho = pearson(&average_ranks(&xa), &average_ranks(&xb))?;
    Ok(SpearmanResult {
        rho,
        n: common.len(),
        only_in_a: a.keys().filter(|k| !b.contains_key(*k)).cloned().collect(),
        only_in_b: b.keys().filter(|k| !a.contains_key(*k)).cloned().collect(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LogLogFit<T> {
    pub exponent: T,
    pub prefactor: T,
    /// Residual sum of squares in log space.
    pub residual: T,
    pub n: usize,
}

impl<T: Scalar> LogLogFit<T> {
    pub fn predict(&self, x: T) -> T {
        self.prefactor * x.powf(self.exponent)
    }
}

/// Ordinary least squares of ln y on ln x: y ≈ prefactor · x^exponent.
pub fn loglog_fit<T: Scalar>(x: &[T], y: &[T]) -> Result<LogLogFit<T>> {
    if x.len() != y.len() {
        return Err(Error::invalid("x and y differ in length"));
    }
    if x.len() < 3 {
        return Err(Error::InsufficientData(format!("log-log fit needs at least 3 points, got {}", x.len())));
    }
    if let Some(v) = x.iter().chain(y).find(|v| !(**v > T::zero()) || !v.is_finite()) {
        return Err(Error::invalid(format!("log-log fit needs positive finite values, got {v}")));
    }
    let lx: Vec<T> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<T> = y.iter().map(|v| v.ln()).collect();
    let n = T::from_count(x.len() as u64);
    let mx = lx.iter().copied().sum::<T>() / n;
    let my = ly.iter().copied().sum::<T>() / n;
    let (mut sxy, mut sxx) = (T::zero(), T::zero());
    for (&a, &b) in lx.iter().zip(&ly) {
        sxy = sxy + (a - mx) * (b - my);
        sxx = sxx + (a - mx) * (a - mx);
    }
    if sxx == T::zero() {
        return Err(Error::invalid("log-log fit needs at least two distinct x values"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = lx
        .iter()
        .zip(&ly)
        .map(|(&a, &b)| {
            let e = b - (intercept + slope * a);
            e * e
        })
        .sum();
    Ok(LogLogFit { exponent: slope, prefactor: intercept.exp(), residual, n: x.len() })
}

/// Country-level indicator values keyed by (country, period).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct IndicatorTable {
    pub values: BTreeMap<(String, String), f64>,
}

impl IndicatorTable {
    pub fn insert(&mut self, country: &str, period: &str, value: f64) -> bool {
        self.values
            .insert((country.trim().to_ascii_uppercase(), period.trim().to_string()), value)
            .is_none()
    }

    pub fn get(&self, country: &str, period: &str) -> Option<f64> {
        self.values.get(&(country.to_string(), period.to_string())).copied()
    }

    pub fn periods(&self) -> Vec<String> {
        let mut p: Vec<String> = self.values.keys().map(|(_, p)| p.clone()).collect();
        p.sort();
        p.dedup();
        p
    }

    pub fn countries(&self) -> Vec<String> {
        let mut c: Vec<String> = self.values.keys().map(|(c, _)| c.clone()).collect();
        c.dedup();
        c
    }

    /// Values for one period keyed by country.
    pub fn for_period(&self, period: &str) -> BTreeMap<String, f64> {
        self.values
            .iter()
            .filter(|((_, p), _)| p == period)
            .map(|((c, _), v)| (c.clone(), *v))
            .collect()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from("country\tperiod\tvalue\n");
        for ((c, p), v) in &self.values {
            out.push_str(&format!("{c}\t{p}\t{v}\n"));
        }
        out
    }
}

/// Parses `country, period, value` rows separated by tabs or commas. Blank
/// lines and `#` comments are skipped; a first row whose value column is not
/// numeric is taken as a header.
pub fn read_indicators<R: BufRead>(reader: R, path: &Path) -> Result<IndicatorTable> {
    let mut table = IndicatorTable::default();
    let mut seen_data = false;
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let parse_err = |message: String| Error::Parse { path: path.to_path_buf(), line: i + 1, message };
        let fields: Vec<&str> = if trimmed.contains('\t') {
            trimmed.split('\t').collect()
        } else {
            trimmed.split(',').collect()
        };
        if fields.len() != 3 {
            return Err(parse_err(format!("expected 3 columns, found {}", fields.len())));
        }
        let value = match fields[2].trim().parse::<f64>() {
            Ok(v) => v,
            Err(_) if !seen_data => {
                seen_data = true;
                continue;
            }
            Err(e) => return Err(parse_err(format!("bad value {:?}: {e}", fields[2]))),
        };
        seen_data = true;
        let country = fields[0].trim();
        if country.is_empty() {
            return Err(parse_err("empty country code".into()));
        }
        if !table.insert(country, fields[1], value) {
            return Err(parse_err(format!("duplicate entry for {country} / {}", fields[1].trim())));
        }
    }
    Ok(table)
}

pub fn read_indicator_file(path: &Path) -> Result<IndicatorTable> {
    let f = std::fs::File::open(path)?;
    read_indicators(std::io::BufReader::new(f), path)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GerdMean {
    /// Mean absolute R&D expenditure over the covered years.
    pub value: f64,
    pub years_covered: usize,
    /// Covered years over window length.
    pub coverage: f64,
}

/// Mean of (R&D % of GDP / 100) × GDP per country over `window`. Years missing
/// either series are skipped; countries with no usable year are left out.
pub fn gerd_window_mean(
    percent_gdp: &IndicatorTable,
    gdp: &IndicatorTable,
    window: YearWindow,
) -> BTreeMap<String, GerdMean> {
    let mut acc: BTreeMap<String, (f64, usize)> = BTreeMap::new();
    for ((country, period), pct) in &percent_gdp.values {
        let Ok(year) = period.parse::<i32>() else { continue };
        if !window.contains(year) {
            continue;
        }
        if let Some(g) = gdp.get(country, period) {
            let e = acc.entry(country.clone()).or_default();
            e.0 += pct / 100.0 * g;
            e.1 += 1;
        }
    }
    acc.into_iter()
        .map(|(c, (sum, k))| {
            (c, GerdMean { value: sum / k as f64, years_covered: k, coverage: k as f64 / window.len() as f64 })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn map(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[test]
    fn spearman_cases() {
        let a = map(&[("a", 1.0), ("b", 2.0), ("c", 3.0)]);
        assert_eq!(spearman(&a, &a).unwrap().rho, 1.0);
        let rev = map(&[("a", 3.0), ("b", 2.0), ("c", 1.0)]);
        assert_eq!(spearman(&a, &rev).unwrap().rho, -1.0);
        let swap = map(&[("a", 1.0), ("b", 3.0), ("c", 2.0)]);
        assert_eq!(spearman(&a, &swap).unwrap().rho, 0.5);
    }

    #[test]
    fn spearman_intersection() {
        let a = map(&[("a", 1.0), ("b", 2.0), ("c", 3.0), ("x", 4.0)]);
        let b = map(&[("a", 1.0), ("b", 2.0), ("c", 3.0), ("y", 4.0)]);
        let r = spearman(&a, &b).unwrap();
        assert_eq!(r.n, 3);
        assert_eq!(r.only_in_a, vec!["x"]);
        assert_eq!(r.only_in_b, vec!["y"]);
        let small = map(&[("a", 1.0), ("b", 2.0)]);
        assert!(matches!(spearman(&small, &b), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn tie_averaging() {
        assert_eq!(average_ranks(&[10.0, 20.0, 10.0, 5.0]), vec![2.5, 4.0, 2.5, 1.0]);
    }

    #[test]
    fn exact_power_law() {
        let x = [1.0, 2.0, 4.0, 8.0];
        let y: Vec<f64> = x.iter().map(|v: &f64| 2.0 * v.powf(1.5)).collect();
        let f = loglog_fit(&x, &y).unwrap();
        assert!((f.exponent - 1.5).abs() < 1e-12);
        assert!((f.prefactor - 2.0).abs() < 1e-12);
        assert!(f.residual < 1e-20);
        let c = loglog_fit(&x, &[3.0; 4]).unwrap();
        assert!(c.exponent.abs() < 1e-15);
        assert!(loglog_fit(&x, &[1.0, 0.0, 1.0, 1.0]).is_err());
    }

    #[test]
    fn indicator_parsing() {
        let text = "country,period,value\n# note\nus,2000,2.5\nDE\t2000\t3\n\n";
        let t = read_indicators(text.as_bytes(), Path::new("x")).unwrap();
        assert_eq!(t.get("US", "2000"), Some(2.5));
        assert_eq!(t.get("DE", "2000"), Some(3.0));
        let dup = "US,2000,1\nUS,2000,2\n";
        assert!(matches!(read_indicators(dup.as_bytes(), Path::new("x")), Err(Error::Parse { line: 2, .. })));
        let bad = "US,2000,1\nDE,2000,abc\n";
        assert!(read_indicators(bad.as_bytes(), Path::new("x")).is_err());
    }

    #[test]
    fn gerd_mean_and_coverage() {
        let mut pct = IndicatorTable::default();
        let mut gdp = IndicatorTable::default();
        pct.insert("US", "2000", 2.0);
        pct.insert("US", "2001", 4.0);
        pct.insert("US", "1999", 9.0);
        gdp.insert("US", "2000", 100.0);
        gdp.insert("US", "2001", 100.0);
        gdp.insert("US", "1999", 100.0);
        pct.insert("FR", "2000", 1.0);
        let w = YearWindow::new(2000, 2009).unwrap();
        let g = gerd_window_mean(&pct, &gdp, w);
        assert_eq!(g.len(), 1);
        assert_eq!(g["US"].value, 3.0);
        assert_eq!(g["US"].years_covered, 2);
        assert_eq!(g["US"].coverage, 0.2);
    }
}
