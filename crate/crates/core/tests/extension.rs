use smrt::darboux::{extension_check, recovered_vanishing, ExtensionConfig};
use smrt::harmonics::sphere_grid;
use smrt::transform::{control_data, forward_data_zonal, PhantomTerm};
use smrt::{MeanMethod, Phantom, RadialProfile, TGrid, Verdict};

fn phantom3() -> Phantom {
    let term = |m, k, a, b| PhantomTerm { m, k, profile: RadialProfile::annular_with_peak(a, b, 1.0).unwrap() };
    Phantom { dimension: 3, terms: vec![term(0, 1, 0.2, 0.9), term(1, 2, 0.25, 0.85), term(2, 3, 0.3, 0.9)] }
}

#[test]
fn three_dimensional_extension_recovers_the_phantom() {
    let ph = phantom3();
    let g = forward_data_zonal(&ph, &sphere_grid(3, 12).unwrap(), TGrid::new(201, 2.0).unwrap()).unwrap();
    let cfg = ExtensionConfig { m_max: 3, eigs: 32, q_max: 6, samples: 40, ..Default::default() };
    let ext = extension_check(&g, Some(&ph), &cfg).unwrap();
    let r = &ext.report;
    assert_eq!(r.verdict, Verdict::Pass, "{r:#?}");
    assert!(r.range_max_rho < 1e-9);
    assert!(r.reconstruction_error.unwrap() < 1e-3);
    assert!(r.boundary_mismatch.unwrap() < 1e-3);
    assert!(r.cone_upper.unwrap() < 1e-3);
    let vanishing = recovered_vanishing(&ext, 3, 0.2).unwrap();
    assert!(vanishing.iter().all(|(_, v)| v.verdict.passed()));
}

#[test]
fn zonal_and_quadrature_extension_agree_in_the_plane() {
    let ph = Phantom::demo();
    let g = forward_data_zonal(&ph, &sphere_grid(2, 64).unwrap(), TGrid::new(201, 2.0).unwrap()).unwrap();
    let base = ExtensionConfig { m_max: 3, eigs: 32, q_max: 6, samples: 30, ..Default::default() };
    let z = extension_check(&g, Some(&ph), &base).unwrap().report;
    let quad = ExtensionConfig { method: MeanMethod::Quadrature, ..base.clone() };
    let q = extension_check(&g, Some(&ph), &quad).unwrap().report;
    for (a, b) in [(z.boundary_mismatch, q.boundary_mismatch), (z.interior_mismatch, q.interior_mismatch)] {
        let (a, b) = (a.unwrap(), b.unwrap());
        assert!((a - b).abs() <= 5e-4 && a.max(b) <= base.tolerance, "{a} vs {b}");
    }
    assert_eq!(z.verdict, q.verdict);
}

#[test]
fn control_data_short_circuits() {
    let centers = sphere_grid(3, 8).unwrap();
    let g = control_data(&centers, TGrid::new(201, 2.0).unwrap());
    let cfg = ExtensionConfig { m_max: 2, eigs: 32, q_max: 4, ..Default::default() };
    let ext = extension_check(&g, None, &cfg).unwrap();
    let r = &ext.report;
    assert!(r.short_circuited);
    assert_eq!(r.range_verdict, Verdict::Fail);
    assert_eq!(r.verdict, Verdict::Fail);
    assert!(ext.field.is_none() && r.boundary_mismatch.is_none());
    assert!(r.modes.iter().any(|m| m.sigma > m.sigma_threshold), "{:?}", r.modes);
}
