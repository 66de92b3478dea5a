use std::collections::HashMap;
use std::hash::Hash;

use crate::error::{Error, Result};

/// Cohen's κ between two raters' labels for the same items.
///
/// Computed from integer counts, so hand-checkable cases come out exact.
/// When chance agreement is certain (both raters used one and the same
/// label throughout) κ is defined as 1.
pub fn cohens_kappa<T: Eq + Hash>(a: &[T], b: &[T]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::invalid(format!("label vectors differ in length ({} vs {})", a.len(), b.len())));
    }
    if a.is_empty() {
        return Err(Error::invalid("no labels to compare"));
    }
    let n = a.len() as u128;
    let agree = a.iter().zip(b).filter(|(x, y)| x == y).count() as u128;
    let mut counts: HashMap<&T, (u128, u128)> = HashMap::new();
    for x in a {
        counts.entry(x).or_default().0 += 1;
    }
    for y in b {
        counts.entry(y).or_default().1 += 1;
    }
    // p_o = agree/n, p_e = chance/n²
    let chance: u128 = counts.values().map(|&(ca, cb)| ca * cb).sum();
    let n2 = n * n;
    if chance == n2 {
        return if agree == n {
            Ok(1.0)
        } else {
            Err(Error::UndefinedCorrelation("chance agreement is 1 but observed agreement is not".into()))
        };
    }
    // κ = (p_o − p_e)/(1 − p_e) = (agree·n − chance)/(n² − chance)
    let numerator = (agree * n) as i128 - chance as i128;
    Ok(numerator as f64 / (n2 - chance) as f64)
}

/// Middle label of an odd number of ordinal labels.
pub fn median_label<T: Ord + Clone>(labels: &[T]) -> Result<T> {
    if labels.len().is_multiple_of(2) {
        return Err(Error::invalid(format!("median label needs an odd count, got {}", labels.len())));
    }
    let mut sorted = labels.to_vec();
    sorted.sort();
    Ok(sorted[sorted.len() / 2].clone())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_cases() {
        assert_eq!(cohens_kappa(&["x", "x", "y", "y"], &["x", "y", "x", "y"]).unwrap(), 0.0);
        assert_eq!(cohens_kappa(&["x", "x", "x", "y"], &["x", "x", "y", "y"]).unwrap(), 0.5);
        assert_eq!(cohens_kappa(&[1, 2, 3, 1], &[1, 2, 3, 1]).unwrap(), 1.0);
    }

    #[test]
    fn constant_raters() {
        assert_eq!(cohens_kappa(&[2, 2, 2], &[2, 2, 2]).unwrap(), 1.0);
        assert!(cohens_kappa(&[1, 2], &[1]).is_err());
        assert!(cohens_kappa::<u8>(&[], &[]).is_err());
    }

    #[test]
    fn medians() {
        assert_eq!(median_label(&[1, 2, 3]).unwrap(), 2);
        assert_eq!(median_label(&[2, 2, 3]).unwrap(), 2);
        assert_eq!(median_label(&[3, 1, 3]).unwrap(), 3);
        assert!(median_label(&[1, 2]).is_err());
    }
}
