mod common;

use num_rational::Ratio;
use num_traits::Signed;
use proptest::prelude::*;
use spinsync_core::bound::{
    certify, certify_many, claim_checks, first_k_exceeding, mu_limit, mu_paper, mu_sequence, mu_strong, pk_params,
    spin_degree, BoundError, CertificateVerdict,
};
use spinsync_core::gp::gp_graph;
use spinsync_core::io::to_json_string;
use spinsync_core::{spin, CertifyOptions, Convention, Coupling};

proptest! {
    #![proptest_config(common::pt_config(512))]

    #[test]
    fn densities_bracket_the_limit(k in 2u64..1_000_000) {
        let paper = mu_paper(k);
        let strong = mu_strong(k);
        prop_assert!(paper < strong);
        prop_assert!(paper < mu_limit());
        prop_assert!((paper - mu_limit()).abs() <= Ratio::new(1, 4 * k as i64));
        prop_assert!((strong - mu_limit()).abs() <= Ratio::new(1, 4 * k as i64));
    }

    #[test]
    fn first_k_is_a_crossing(num in 1i64..687, conv in prop_oneof![Just(Convention::PaperRatio), Just(Convention::StrongDensity)]) {
        let t = Ratio::new(num, 1000);
        let k = first_k_exceeding(t, conv).unwrap();
        prop_assert!(conv.mu(k) > t);
        for j in 2..k.min(5000) {
            prop_assert!(conv.mu(j) <= t);
        }
    }
}

#[test]
fn degree_matches_the_spin_graph() {
    for k in 2..=12 {
        let s = spin(&gp_graph(&pk_params(k).unwrap()), k as usize).unwrap();
        let deg = s.degrees();
        assert!(deg.iter().all(|&d| d as u64 == spin_degree(k)), "k={k}");
        assert_eq!(s.order() as u64, 8 * k);
    }
}

#[test]
fn small_sequence_values() {
    assert_eq!(mu_paper(2), Ratio::new(9, 16));
    assert_eq!(mu_strong(2), Ratio::new(9, 15));
    let seq = mu_sequence(4).unwrap();
    assert_eq!(seq.rows.len(), 3);
    let mut csv = Vec::new();
    seq.write_csv(&mut csv).unwrap();
    let text = String::from_utf8(csv).unwrap();
    assert!(text.starts_with("k,mu_paper,mu_strong"));
    assert!(text.lines().nth(1).unwrap().starts_with("2,9/16,3/5,"));
    assert!(mu_sequence(1).is_err());
}

#[test]
fn threshold_scans() {
    assert_eq!(first_k_exceeding(Ratio::new(5, 8), Convention::PaperRatio).unwrap(), 5);
    assert!(matches!(
        first_k_exceeding(mu_limit(), Convention::PaperRatio),
        Err(BoundError::ThresholdAtOrAboveLimit(_))
    ));
    let claims = claim_checks();
    assert_eq!(claims.len(), 2);
    assert_eq!(claims[0].computed_k_paper_ratio, 51);
    assert_eq!(claims[1].computed_k_paper_ratio, 1877);
    assert!(claims.iter().all(|c| c.agrees == (c.computed_k_paper_ratio == c.claimed_k)));
}

#[test]
fn certificates_for_small_k() {
    let ks: Vec<u64> = (2..=12).collect();
    for (k, r) in ks.iter().zip(certify_many(&ks, &CertifyOptions::default())) {
        let cert = r.unwrap_or_else(|e| panic!("k={k}: {e}"));
        assert_eq!(cert.k, *k);
        assert_eq!(cert.verdict, CertificateVerdict::Certified);
        let s = cert.spectrum_summary.unwrap();
        assert_eq!(s.kernel_dim_est, 1);
        assert!(s.algebraic_connectivity > s.zero_tol);
        assert_eq!(cert.closed_form.unwrap().extras as u64, 8 * (k - 1));
    }
}

#[test]
fn certificate_json_is_reproducible() {
    let opts = CertifyOptions { run_perturbation_test: true, seed: 42, ..Default::default() };
    let a = to_json_string(&certify(5, &opts).unwrap()).unwrap();
    let b = to_json_string(&certify(5, &opts).unwrap()).unwrap();
    assert_eq!(a, b);
    assert!(a.contains("\"Certified\""));
    assert!(a.contains("\"fraction\": \"13/20\""));
}

#[test]
fn certificate_at_first_claimed_k() {
    let cert = certify(34, &CertifyOptions::default()).unwrap();
    assert_eq!(cert.order, 272);
    assert_eq!(cert.verdict, CertificateVerdict::Certified);
}

#[test]
fn k_below_two_is_rejected() {
    assert!(matches!(certify(1, &CertifyOptions::default()), Err(BoundError::KTooSmall(1))));
}
