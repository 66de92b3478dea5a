use std::cmp::Ordering;

use crate::dataio::text_lines;
use crate::error::{Error, Result};

/// Labelled `(x, y)` observations, e.g. one model's score on two benchmarks.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PairedScores {
    pairs: Vec<(String, f64, f64)>,
}

impl PairedScores {
    pub fn new(pairs: Vec<(String, f64, f64)>) -> Result<Self> {
        if let Some((label, _, _)) = pairs.iter().find(|(_, x, y)| !x.is_finite() || !y.is_finite()) {
            return Err(Error::invalid(format!("non-finite score for {label}")));
        }
        Ok(PairedScores { pairs })
    }

    pub fn from_xy(xs: &[f64], ys: &[f64]) -> Result<Self> {
        if xs.len() != ys.len() {
            return Err(Error::invalid(format!("{} x values but {} y values", xs.len(), ys.len())));
        }
        Self::new(
            xs.iter()
                .zip(ys)
                .enumerate()
                .map(|(i, (&x, &y))| (i.to_string(), x, y))
                .collect(),
        )
    }

    /// `label<TAB>x<TAB>y` lines.
    pub fn from_tsv(bytes: &[u8]) -> Result<Self> {
        let mut pairs = Vec::new();
        for line in text_lines(bytes) {
            let (no, line) = line?;
            let fields: Vec<&str> = line.split('\t').collect();
            let [label, x, y] = fields[..] else {
                return Err(Error::parse(no, format!("expected 3 tab-separated fields, found {}", fields.len())));
            };
            let num = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::parse(no, format!("{s:?} is not a finite number")))
            };
            pairs.push((label.to_owned(), num(x)?, num(y)?));
        }
        Ok(PairedScores { pairs })
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &(String, f64, f64)> + '_ {
        self.pairs.iter()
    }

    pub fn xs(&self) -> Vec<f64> {
        self.pairs.iter().map(|p| p.1).collect()
    }

    pub fn ys(&self) -> Vec<f64> {
        self.pairs.iter().map(|p| p.2).collect()
    }

    fn check_len(&self) -> Result<()> {
        if self.pairs.len() < 2 {
            return Err(Error::invalid("correlation needs at least two pairs"));
        }
        Ok(())
    }
}

// Values are finite, so partial_cmp never fails.
fn cmp_f64(a: &f64, b: &f64) -> Ordering {
    a.partial_cmp(b).expect("finite values")
}

/// 1-based ranks with ties sharing the average of their positions.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| cmp_f64(&values[a], &values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // positions start+1 ..= end
        let avg = (start + 1 + end) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = avg;
        }
        start = end;
    }
    ranks
}

/// Spearman's ρ: Pearson correlation of the average-rank vectors.
pub fn spearman(pairs: &PairedScores) -> Result<f64> {
    pairs.check_len()?;
    let rx = average_ranks(&pairs.xs());
    let ry = average_ranks(&pairs.ys());
    let n = rx.len() as f64;
    // Average ranks always have mean (n+1)/2.
    let mean = (n + 1.0) / 2.0;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        let (dx, dy) = (a - mean, b - mean);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::UndefinedCorrelation("all values tied in one coordinate".into()));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

fn tied_pairs(sorted: &[f64]) -> u64 {
    let mut total = 0;
    let mut run = 1u64;
    for w in sorted.windows(2) {
        if w[0] == w[1] {
            run += 1;
        } else {
            total += run * (run - 1) / 2;
            run = 1;
        }
    }
    total + run * (run - 1) / 2
}

/// Stable merge sort of `v`, returning the number of strictly inverted pairs.
fn sort_counting_swaps(v: &mut [f64], buf: &mut Vec<f64>) -> u64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut swaps = sort_counting_swaps(&mut v[..mid], buf) + sort_counting_swaps(&mut v[mid..], buf);
    buf.clear();
    let (mut i, mut j) = (0, mid);
    while i < mid && j < n {
        if v[j] < v[i] {
            swaps += (mid - i) as u64;
            buf.push(v[j]);
            j += 1;
        } else {
            buf.push(v[i]);
            i += 1;
        }
    }
    buf.extend_from_slice(&v[i..mid]);
    buf.extend_from_slice(&v[j..n]);
    v.copy_from_slice(buf);
    swaps
}

/// Kendall's τ_b with tie correction, in O(n log n) (Knight's algorithm).
pub fn kendall_tau_b(pairs: &PairedScores) -> Result<f64> {
    pairs.check_len()?;
    let mut xy: Vec<(f64, f64)> = pairs.iter().map(|p| (p.1, p.2)).collect();
    xy.sort_by(|a, b| cmp_f64(&a.0, &b.0).then_with(|| cmp_f64(&a.1, &b.1)));
    let n = xy.len() as u64;
    let n0 = n * (n - 1) / 2;

    let xs: Vec<f64> = xy.iter().map(|p| p.0).collect();
    let tied_x = tied_pairs(&xs);
    let mut tied_xy = 0;
    let mut run = 1u64;
    for w in xy.windows(2) {
        if w[0] == w[1] {
            run += 1;
        } else {
            tied_xy += run * (run - 1) / 2;
            run = 1;
        }
    }
    tied_xy += run * (run - 1) / 2;

    let mut ys: Vec<f64> = xy.iter().map(|p| p.1).collect();
    let mut buf = Vec::with_capacity(ys.len());
    let swaps = sort_counting_swaps(&mut ys, &mut buf);
    let tied_y = tied_pairs(&ys);

    if tied_x == n0 || tied_y == n0 {
        return Err(Error::UndefinedCorrelation("all values tied in one coordinate".into()));
    }
    // Pairs untied in both coordinates are concordant or discordant; swaps counts the discordant ones.
    let untied = (n0 + tied_xy - tied_x - tied_y) as i128;
    let numerator = untied - 2 * swaps as i128;
    let denominator = ((n0 - tied_x) as f64 * (n0 - tied_y) as f64).sqrt();
    Ok((numerator as f64 / denominator).clamp(-1.0, 1.0))
}
