use stochflow_core::field::{
    build_covariance, channelized_mean, compute_kle, compute_kle_separable, realize_field, CovarianceSpec, Ridge,
    StructuredGrid,
};

#[test]
fn desk_scale_energy() {
    let g = StructuredGrid::unit(60, 60).unwrap();
    let spec = CovarianceSpec::new(1.0, 0.1, 0.1).unwrap();
    let klb = compute_kle_separable(&g, &spec, 200).unwrap();
    // total trace of the discrete operator is sigma^2 |D|
    assert!((klb.total_trace() - 1.0).abs() < 1e-12);
    assert!(klb.energy_fraction(80).unwrap() >= 0.95);
    assert!((klb.energy_fraction(80).unwrap() - 0.98447).abs() < 5e-5);
    assert!((klb.energy_fraction(20).unwrap() - 0.66998).abs() < 5e-5);
    assert_eq!(klb.terms_for_energy(0.95), Some(57));
}

#[test]
fn separable_and_dense_agree_on_leading_terms() {
    let g = StructuredGrid::unit(12, 12).unwrap();
    let spec = CovarianceSpec::new(1.0, 0.3, 0.2).unwrap();
    let dense = compute_kle(&build_covariance(&g, &spec).unwrap(), &g, 10).unwrap();
    let sep = compute_kle_separable(&g, &spec, 10).unwrap();
    for (a, b) in dense.eigenvalues().iter().zip(sep.eigenvalues()) {
        assert!((a - b).abs() < 1e-10);
    }
    assert!((dense.total_trace() - sep.total_trace()).abs() < 1e-10);
}

#[test]
fn covariance_example() {
    let g = StructuredGrid::unit(10, 1).unwrap();
    let c = build_covariance(&g, &CovarianceSpec::new(1.0, 0.1, 0.1).unwrap()).unwrap();
    assert!((c[(0, 1)] - (-0.5f64).exp()).abs() < 1e-12);
    assert_eq!(c[(3, 3)], 1.0);
    assert_eq!(c, c.transpose());
}

#[test]
fn channelized_field_is_positive() {
    let g = StructuredGrid::unit(30, 30).unwrap();
    let spec = CovarianceSpec::new(1.0, 0.1, 0.1).unwrap();
    let mean = channelized_mean(&g, 0.0, &Ridge::default_channels()).unwrap();
    let klb = compute_kle_separable(&g, &spec, 10).unwrap().with_mean_field(mean).unwrap();
    let k = realize_field(&klb, &[1.0; 10]).unwrap();
    assert!(k.values().iter().all(|&v| v > 0.0 && v.is_finite()));
    let k0 = realize_field(&klb, &[0.0; 10]).unwrap();
    for (v, m) in k0.values().iter().zip(klb.mean_field()) {
        assert!((v.ln() - m).abs() < 1e-12);
    }
}
