mod common;

use proptest::prelude::*;
use xtrap::analysis::{
    cohens_kappa, kendall_tau_b, pca_project, relevant_overlap, spearman, PairedScores, Threshold,
};
use xtrap::dataio::QrelSet;

fn tied_values() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (2usize..40).prop_flat_map(|n| {
        (
            prop::collection::vec((0i32..8).prop_map(f64::from), n),
            prop::collection::vec((-5i32..5).prop_map(|v| f64::from(v) * 0.25), n),
        )
    })
}

fn non_constant(v: &[f64]) -> bool {
    v.iter().any(|&x| x != v[0])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn correlations_match_pairwise_definitions((x, y) in tied_values()) {
        prop_assume!(non_constant(&x) && non_constant(&y));
        let p = PairedScores::from_xy(&x, &y).unwrap();
        let rho = spearman(&p).unwrap();
        let tau = kendall_tau_b(&p).unwrap();
        prop_assert!((rho - common::oracle_spearman(&x, &y)).abs() < 1e-12);
        prop_assert!((tau - common::oracle_kendall(&x, &y)).abs() < 1e-12);
        prop_assert!((-1.0..=1.0).contains(&rho) && (-1.0..=1.0).contains(&tau));
    }

    #[test]
    fn correlations_ignore_increasing_transforms((x, y) in tied_values()) {
        prop_assume!(non_constant(&x) && non_constant(&y));
        let p = PairedScores::from_xy(&x, &y).unwrap();
        let fx: Vec<f64> = x.iter().map(|v| v.powi(3) + 10.0 * v).collect();
        let fy: Vec<f64> = y.iter().map(|v| v.exp()).collect();
        let q = PairedScores::from_xy(&fx, &fy).unwrap();
        prop_assert!((spearman(&p).unwrap() - spearman(&q).unwrap()).abs() < 1e-12);
        prop_assert!((kendall_tau_b(&p).unwrap() - kendall_tau_b(&q).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn kappa_is_one_exactly_on_agreement(a in prop::collection::vec(0u8..4, 1..30), flips in prop::collection::vec(any::<prop::sample::Index>(), 0..4)) {
        let mut b = a.clone();
        for f in &flips {
            let i = f.index(b.len());
            b[i] = (b[i] + 1) % 4;
        }
        match cohens_kappa(&a, &b) {
            Ok(k) => {
                prop_assert!(k <= 1.0);
                prop_assert_eq!(k == 1.0, a == b);
            }
            // Only when chance agreement is certain and the raters still disagree.
            Err(_) => prop_assert!(a != b),
        }
    }

    #[test]
    fn overlap_shrinks_with_stricter_thresholds(
        test in prop::collection::vec((0usize..6, 0usize..15, 0u32..4), 1..40),
        train in prop::collection::vec((0usize..6, 0usize..15, 0u32..3), 0..40),
    ) {
        let text = |rows: &[(usize, usize, u32)], prefix: &str| -> String {
            rows.iter().map(|(q, d, g)| format!("{prefix}{q} 0 d{d} {g}\n")).collect()
        };
        let test = QrelSet::from_bytes(text(&test, "q").as_bytes()).unwrap();
        let train = QrelSet::from_bytes(text(&train, "t").as_bytes()).unwrap();
        let rep = relevant_overlap(&test, &train, &[Threshold::geq(1), Threshold::geq(2), Threshold::geq(3), Threshold::eq(3)]).unwrap();
        let pct: Vec<f64> = rep.rows.iter().map(|r| r.percent()).collect();
        prop_assert!(pct[0] >= pct[1] && pct[1] >= pct[2]);
        prop_assert_eq!(pct[2], pct[3]);
        prop_assert!(rep.rows.iter().all(|r| r.count <= r.total && (0.0..=100.0).contains(&r.percent())));
    }

    #[test]
    fn pca_axes_are_orthonormal(seed in any::<u64>(), n in 3usize..60, dim in 2usize..10, out in 1usize..4) {
        prop_assume!(out <= dim);
        let points = common::gaussian_set(&mut common::rng(seed), "p", n, dim);
        let res = pca_project(&points, out).unwrap();
        for i in 0..out {
            for j in 0..out {
                let d: f64 = res.components[i].iter().zip(&res.components[j]).map(|(a, b)| a * b).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                prop_assert!((d - want).abs() < 1e-6, "{i},{j}: {d}");
            }
        }
        prop_assert!(res.eigenvalues.windows(2).all(|w| w[0] >= w[1] - 1e-9 * res.total_variance));
    }
}

#[test]
fn pca_matches_jacobi_eigenvalues() {
    let points = common::gaussian_set(&mut common::rng(11), "p", 100, 8);
    // Give the cloud distinct spreads per axis, then rotate it a little.
    let mut skewed = xtrap::dataio::EmbeddingSet::new(8).unwrap();
    for (id, v) in points.iter() {
        let w: Vec<f32> = v.iter().enumerate().map(|(i, x)| x * (8 - i) as f32 + 0.3 * v[(i + 1) % 8]).collect();
        skewed.push(id, &w).unwrap();
    }
    let rows = common::to_rows(&skewed);
    let n = rows.len();
    let mean: Vec<f64> = (0..8).map(|d| rows.iter().map(|r| r[d]).sum::<f64>() / n as f64).collect();
    let cov: Vec<Vec<f64>> = (0..8)
        .map(|i| {
            (0..8)
                .map(|j| rows.iter().map(|r| (r[i] - mean[i]) * (r[j] - mean[j])).sum::<f64>() / (n - 1) as f64)
                .collect()
        })
        .collect();
    let eig = common::oracle_sym_eigenvalues(cov);
    let total: f64 = eig.iter().sum();

    let res = pca_project(&skewed, 2).unwrap();
    let ratio = res.explained_variance_ratio();
    for c in 0..2 {
        assert!((ratio[c] - eig[c] / total).abs() < 1e-6, "component {c}: {} vs {}", ratio[c], eig[c] / total);
        // Variance of the projected coordinates is the eigenvalue.
        let var = res.coords.iter().map(|p| p[c] * p[c]).sum::<f64>() / (n - 1) as f64;
        assert!((var - eig[c]).abs() < 1e-6 * total);
    }
}

#[test]
fn spearman_two_swap_example() {
    let p = PairedScores::from_xy(&[1.0, 2.0, 3.0, 4.0, 5.0], &[2.0, 1.0, 4.0, 3.0, 5.0]).unwrap();
    // Σd² = 4 with n = 5: 1 − 6·4/(5·24).
    assert!((spearman(&p).unwrap() - 0.8).abs() < 1e-15);
}
