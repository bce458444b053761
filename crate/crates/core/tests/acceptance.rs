//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Criteria listed in `KNOWN_UNMET` are reported as they come out and do not
//! fail the target; every other FAIL does.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use smrt::darboux::{extension_check, recovered_vanishing, solve_modes, vanishing_diagnostic, ExtensionConfig};
use smrt::harmonics::sphere_grid;
use smrt::opalg::system::{certificate_check, lemma_sweep};
use smrt::range::{moment_test, orthogonality_residuals};
use smrt::specfun::{bessel_j, bessel_zeros, normalized_j};
use smrt::transform::{control_data, forward_data, spherical_mean};
use smrt::{BesselOrder, BoundaryData, Phantom, SphereGrid, TGrid};
use std::f64::consts::PI;
use std::time::{Duration, Instant};

const KNOWN_UNMET: [usize; 1] = [3];
const CONTROL_RHO_GOLDEN: f64 = 8.2116e-3;

struct Outcome {
    ok: bool,
    detail: String,
    /// Checks that must hold even when the criterion itself is known to fail.
    sound: bool,
}

impl Outcome {
    fn new(ok: bool, detail: String) -> Self {
        Self { ok, detail, sound: true }
    }
}

fn order(nu: f64) -> BesselOrder {
    BesselOrder::new(nu).unwrap()
}

fn demo_data(t_grid: TGrid) -> BoundaryData {
    let centers = sphere_grid(2, 256).unwrap();
    forward_data(&Phantom::demo(), &centers, t_grid, &centers).unwrap()
}

fn mean_value_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = [0.0f64; 2];
    for (slot, n, res) in [(0, 2usize, 256usize), (1, 3, 32)] {
        let grid = sphere_grid(n, res).unwrap();
        let xi = if n == 2 { [0.6, 0.8, 0.0] } else { [0.48, 0.6, 0.64] };
        for &lambda in &[1.0, 5.0, 10.0] {
            for _ in 0..20 {
                let x = loop {
                    let mut p = [0.0; 3];
                    for v in p.iter_mut().take(n) {
                        *v = rng.gen_range(-0.5..0.5);
                    }
                    if p.iter().map(|v| v * v).sum::<f64>() <= 0.25 {
                        break p;
                    }
                };
                let t: f64 = rng.gen_range(0.0..1.0);
                let dot = |y: &[f64; 3]| y[0] * xi[0] + y[1] * xi[1] + y[2] * xi[2];
                let got = spherical_mean(|y| (lambda * dot(y)).cos(), &x, t, &grid);
                let radial = if n == 2 {
                    bessel_j(order(0.0), lambda * t)
                } else if t == 0.0 {
                    1.0
                } else {
                    (lambda * t).sin() / (lambda * t)
                };
                worst[slot] = worst[slot].max((got - radial * (lambda * dot(&x)).cos()).abs());
            }
        }
    }
    Outcome::new(
        worst[0] <= 1e-9 && worst[1] <= 1e-8,
        format!("max error n=2 {:.2e} (<= 1e-9), n=3 {:.2e} (<= 1e-8)", worst[0], worst[1]),
    )
}

fn range_positive() -> Outcome {
    let grid = TGrid::default();
    let coarse = orthogonality_residuals(&demo_data(grid), 8, 10, 1e-5).unwrap();
    let fine = orthogonality_residuals(&demo_data(grid.refined()), 8, 10, 1e-5).unwrap();
    let drop = coarse.max_rho / fine.max_rho.max(f64::MIN_POSITIVE);
    let converged = drop >= 4.0 || fine.max_rho <= 1e-9;
    let r51 = orthogonality_residuals(&demo_data(TGrid::new(51, 2.0).unwrap()), 8, 10, 1.0).unwrap();
    let r101 = orthogonality_residuals(&demo_data(TGrid::new(101, 2.0).unwrap()), 8, 10, 1.0).unwrap();
    let rate = r51.max_rho / r101.max_rho;
    Outcome::new(
        coarse.max_rho <= 1e-5 && converged && rate >= 4.0,
        format!(
            "max rho {:.2e} at 401, {:.2e} at 801 (floor 1e-9); coarse drop 51->101 x{:.1e}",
            coarse.max_rho, fine.max_rho, rate
        ),
    )
}

fn control(centers: &SphereGrid) -> BoundaryData {
    control_data(centers, TGrid::default())
}

fn range_negative() -> Outcome {
    let g = control(&sphere_grid(2, 256).unwrap());
    let report = orthogonality_residuals(&g, 0, 1, 1e-5).unwrap();
    let rho = report.residuals.iter().find(|r| (r.m, r.k, r.q) == (0, 1, 1)).unwrap().rho;
    let golden = (rho - CONTROL_RHO_GOLDEN).abs() <= 0.1 * CONTROL_RHO_GOLDEN;
    Outcome {
        ok: rho >= 1e-2 && golden,
        detail: format!(
            "rho_(0,1,1) {rho:.4e} (>= 1e-2); golden {CONTROL_RHO_GOLDEN:.4e} +-10% {}",
            if golden { "holds" } else { "VIOLATED" }
        ),
        sound: golden,
    }
}

struct Extension4 {
    outcome: Outcome,
    cone_upper: f64,
    vanishing: Vec<bool>,
    vanishing_time: Duration,
}

fn backward_and_extension() -> Extension4 {
    let ph = Phantom::demo();
    let cfg = ExtensionConfig::default();
    let ext = extension_check(&demo_data(TGrid::default()), Some(&ph), &cfg).unwrap();
    let r = &ext.report;
    let fine_cfg = ExtensionConfig { eigs: 128, ..ExtensionConfig::default() };
    let fine = extension_check(&demo_data(TGrid::default().refined()), Some(&ph), &fine_cfg).unwrap();
    let rec = r.reconstruction_error.unwrap_or(f64::INFINITY);
    let rec_fine = fine.report.reconstruction_error.unwrap_or(f64::INFINITY);
    let bnd = r.boundary_mismatch.unwrap_or(f64::INFINITY);
    let int = r.interior_mismatch.unwrap_or(f64::INFINITY);
    let ok = rec <= 1e-2 && rec_fine <= 2.5e-3 && bnd <= 1e-2 && int <= 1e-2 && r.velocity_ratio <= 10.0;
    let start = Instant::now();
    let vanishing = recovered_vanishing(&ext, 3, 0.2)
        .unwrap()
        .iter()
        .map(|(_, v)| v.verdict.passed())
        .collect();
    Extension4 {
        outcome: Outcome::new(
            ok,
            format!(
                "L2 error {rec:.2e} at J=64 (<= 1e-2), {rec_fine:.2e} at J=128/801 (<= 2.5e-3); \
                 re-trace {bnd:.2e}; interior {int:.2e}; velocity {:.2}x floor (<= 10)",
                r.velocity_ratio
            ),
        ),
        cone_upper: r.cone_upper.unwrap_or(f64::INFINITY),
        vanishing,
        vanishing_time: start.elapsed(),
    }
}

fn singularity_detection() -> Outcome {
    let centers = sphere_grid(2, 256).unwrap();
    let max_sigma = |g: &BoundaryData| {
        solve_modes(g, 8, 64, 10.0).unwrap().iter().fold(0.0f64, |a, (_, s)| a.max(s.sigma))
    };
    let range = max_sigma(&demo_data(TGrid::default()));
    let negative = max_sigma(&control(&centers));
    Outcome::new(
        negative > 10.0 * range,
        format!("sigma negative {negative:.2e} vs range {range:.2e} (ratio {:.1e}, > 10)", negative / range),
    )
}

fn cone_vanishing(cone_upper: f64) -> Outcome {
    Outcome::new(cone_upper <= 1e-3, format!("max |G+| on t - r >= 1.05 is {cone_upper:.2e} of max (<= 1e-3)"))
}

fn infinite_order_vanishing(recovered: &[bool]) -> Outcome {
    let control = vanishing_diagnostic(|r| 1.0 - r, 3, 0.2, 0.0).unwrap();
    let d1 = &control.orders[1].estimates;
    let d1_ok = d1.iter().all(|v| (v + 1.0).abs() <= 1e-3);
    let passed = recovered.iter().filter(|v| **v).count();
    Outcome::new(
        passed == recovered.len() && d1_ok && !control.verdict.passed(),
        format!(
            "{passed}/{} recovered modes vanish to order 3; control D1 in [{:.6}, {:.6}], tagged {:?}",
            recovered.len(),
            d1.iter().cloned().fold(f64::INFINITY, f64::min),
            d1.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            control.verdict
        ),
    )
}

fn lemma() -> Outcome {
    let entries = lemma_sweep(6, 12).unwrap();
    let failing = entries.iter().filter(|e| !e.verdict.passed()).count();
    let det21 = entries
        .iter()
        .find(|e| e.nondegeneracy.n == 2 && e.nondegeneracy.m == 1)
        .map(|e| e.nondegeneracy.determinant.clone())
        .unwrap_or_default();
    let q = certificate_check(2, 2, 0).unwrap();
    let spot = det21 == "-1/2" && q.b_products[1] == "-4";
    Outcome::new(
        entries.len() == 60 && failing == 0 && spot,
        format!(
            "{}/{} entries pass (n 2..6, m 1..12); det(2,1) = {det21}; Q_2 Psi_0 coefficient {}",
            entries.len() - failing,
            entries.len(),
            q.b_products[1]
        ),
    )
}

fn moments() -> Outcome {
    let demo = moment_test(&demo_data(TGrid::default()), 3, 1e-5).unwrap();
    let g = control(&sphere_grid(2, 256).unwrap());
    let neg_moment = moment_test(&g, 0, 1e-5).unwrap();
    let neg_range = orthogonality_residuals(&g, 8, 10, 1e-5).unwrap();
    Outcome::new(
        demo.verdict.passed() && neg_moment.verdict.passed() && !neg_range.verdict.passed(),
        format!(
            "demo k<=3 {:?}; control k=0 {:?} while orthogonality {:?} (max rho {:.2e})",
            demo.verdict, neg_moment.verdict, neg_range.verdict, neg_range.max_rho
        ),
    )
}

fn special_functions() -> Outcome {
    let mut recurrence = 0.0f64;
    for i in 1..=20 {
        let nu = 0.5 * i as f64;
        for s in 0..=499 {
            let x = 0.1 + s as f64 * (49.9 / 499.0);
            let below = if nu < 1.0 { (2.0 / (PI * x)).sqrt() * x.cos() } else { bessel_j(order(nu - 1.0), x) };
            let lhs = below + bessel_j(order(nu + 1.0), x) - 2.0 * nu / x * bessel_j(order(nu), x);
            recurrence = recurrence.max(lhs.abs());
        }
    }
    let mut zero_residual = 0.0f64;
    let mut interlace = true;
    for i in 0..=20 {
        let nu = 0.5 * i as f64;
        let z = bessel_zeros(order(nu), 20).unwrap();
        let z1 = bessel_zeros(order(nu + 1.0), 21).unwrap();
        for &l in &z.zeros {
            zero_residual = zero_residual.max(bessel_j(order(nu), l).abs());
        }
        for q in 0..19 {
            let inside = z.zeros.iter().filter(|&&l| z1.zeros[q] < l && l < z1.zeros[q + 1]).count();
            interlace &= inside == 1;
        }
        interlace &= z.zeros.windows(2).all(|w| w[0] < w[1]) && z.zeros[0] > 0.0;
    }
    let mut closed = 0.0f64;
    for s in 1..=200 {
        let x = s as f64 * 0.25;
        closed = closed.max((normalized_j(order(0.5), x) - (2.0 / PI).sqrt() * x.sin() / x).abs());
    }
    closed = closed.max((normalized_j(order(0.5), 0.0) - (2.0 / PI).sqrt()).abs());
    // even in x: a fit in u = x / h on (0, 1] has negligible odd coefficients
    let h = 0.05;
    let us: Vec<f64> = (1..=40).map(|i| i as f64 / 40.0).collect();
    let mut odd = 0.0f64;
    for nu in [0.0, 0.5, 1.0, 2.5] {
        let a = nalgebra::DMatrix::from_fn(us.len(), 8, |r, c| us[r].powi(c as i32));
        let b = nalgebra::DVector::from_iterator(us.len(), us.iter().map(|&u| normalized_j(order(nu), h * u)));
        let coef = a.svd(true, true).solve(&b, 1e-15).unwrap();
        odd = odd.max([1, 3, 5, 7].iter().map(|&k| coef[k].abs()).fold(0.0, f64::max));
    }
    Outcome::new(
        recurrence <= 1e-10 && zero_residual <= 1e-10 && interlace && closed <= 1e-12 && odd <= 1e-10,
        format!(
            "recurrence {recurrence:.1e}; zero residual {zero_residual:.1e}; interlacing {interlace}; \
             j_1/2 closed form {closed:.1e}; odd fit coefficients {odd:.1e}"
        ),
    )
}

fn timed(f: fn() -> Outcome) -> (Outcome, Duration) {
    let start = Instant::now();
    let outcome = f();
    (outcome, start.elapsed())
}

fn main() {
    let mut lines: Vec<(usize, Outcome, Duration, f64)> = Vec::new();
    for (id, budget, f) in [(1, 5.0, mean_value_oracle as fn() -> Outcome), (2, 10.0, range_positive), (3, 2.0, range_negative)] {
        let (o, d) = timed(f);
        lines.push((id, o, d, budget));
    }
    let start = Instant::now();
    let ext = backward_and_extension();
    lines.push((4, ext.outcome, start.elapsed() - ext.vanishing_time, 60.0));
    let (o, d) = timed(singularity_detection);
    lines.push((5, o, d, 30.0));
    lines.push((6, cone_vanishing(ext.cone_upper), Duration::ZERO, 60.0));
    let start = Instant::now();
    let v = infinite_order_vanishing(&ext.vanishing);
    lines.push((7, v, start.elapsed() + ext.vanishing_time, 5.0));
    for (id, budget, f) in [(8, 10.0, lemma as fn() -> Outcome), (9, 5.0, moments), (10, 2.0, special_functions)] {
        let (o, d) = timed(f);
        lines.push((id, o, d, budget));
    }
    lines.sort_by_key(|l| l.0);

    let mut unexpected = Vec::new();
    for (id, outcome, time, budget) in &lines {
        let secs = time.as_secs_f64();
        let pass = outcome.ok && secs < *budget;
        println!(
            "{} criterion {id:>2}: {} [{secs:.2} s, budget {budget} s]",
            if pass { "PASS" } else { "FAIL" },
            outcome.detail
        );
        if (!pass && !KNOWN_UNMET.contains(id)) || !outcome.sound {
            unexpected.push(*id);
        }
    }
    if !unexpected.is_empty() {
        eprintln!("unexpected failures: {unexpected:?}");
        std::process::exit(1);
    }
}
