//! Monte Carlo integration tests: oracle cross-validation of the
//! Crank–Nicolson solver, the weak-order slope of the scheme, reproducibility,
//! and the qualitative bubble trend in γ.

mod common;

use cev_spectral::mc_sim::{
    martingale_defect, simulate, simulate_sequential, standard_normal, Measure, Scheme,
    SimConfig, Stepper,
};
use cev_spectral::params::ModelParams;
use common::{cn_absorption_verified, exact_absorption_gamma_one};

#[test]
fn cn_oracle_matches_exact_gamma_one_law() {
    // oracle-of-oracle: the Crank-Nicolson solver against the closed-form
    // absorption law of the square-root diffusion
    let m = ModelParams::new(0.5, 1.0, 1.0, 0.0, 0.5).unwrap();
    for &t in &[0.5, 1.0, 2.0] {
        let exact = exact_absorption_gamma_one(&m, t);
        let cn = cn_absorption_verified(&m, t);
        assert!(
            (cn - exact).abs() < 1.5e-3,
            "t={t}: CN {cn} vs exact {exact}"
        );
    }
}

#[test]
fn parallel_and_sequential_agree_bitwise() {
    let m = ModelParams::new(1.0, 1.0, 1.5, 0.0, 1.0).unwrap();
    let mut cfg = SimConfig::new(20_000, 5e-3, 1.0, 2024);
    cfg.measure = Measure::Physical;
    let par = simulate(&m, &cfg).unwrap();
    let seq = simulate_sequential(&m, &cfg).unwrap();
    assert_eq!(par, seq, "thread count must not affect the ensemble");
}

#[test]
fn weak_order_slope_at_black_scholes() {
    // Defect bias of the drift-implicit scheme at gamma = 2 with r > 0 is
    // -x0 r² T dt / 2 + O(dt²). Shared Brownian paths (fine increments
    // summed into coarse steps) cancel the Monte Carlo noise in the
    // dt-differences, and the difference ratio
    // (defect(4h) - defect(2h)) / (defect(2h) - defect(h)) -> 2 for O(dt).
    let m = ModelParams::new(0.8, 0.3, 2.0, 0.8, 1.0).unwrap();
    let n_paths = 60_000usize;
    let t_end = 1.0;
    let fine_dt = 2e-3;
    let n_fine = (t_end / fine_dt) as usize;
    let seed = 99u64;
    let levels = [4usize, 2, 1]; // coarsening factors over the fine grid
    let stepper = Stepper::new(&m, Scheme::EulerMaruyamaAbsorbed, Measure::RiskNeutral);
    let mut defects = Vec::new();
    for &factor in &levels {
        let dt = fine_dt * factor as f64;
        let mut sum = 0.0;
        for path in 0..n_paths {
            let mut x = m.x0;
            let mut k = 0;
            while k < n_fine {
                let mut dw = 0.0;
                for j in 0..factor {
                    dw += fine_dt.sqrt() * standard_normal(seed, path as u64, (k + j) as u64);
                }
                x = stepper.step(x, dw, dt).x_next;
                k += factor;
            }
            sum += m.x0 - (-m.r * t_end).exp() * x;
        }
        defects.push(sum / n_paths as f64);
    }
    let d1 = defects[0] - defects[1]; // defect(4h) - defect(2h)
    let d2 = defects[1] - defects[2]; // defect(2h) - defect(h)
    let ratio = d1 / d2;
    let slope = ratio.abs().log2();
    assert!(
        (0.7..=1.3).contains(&slope),
        "weak-order slope {slope} from defects {defects:?}"
    );
}

#[test]
fn discounted_mean_monotone_in_gamma_trend() {
    // bubble deepens with elasticity: E[e^{-rT} X_T] non-increasing across
    // gamma in {2, 2.5, 3} beyond CI noise (trend check, not a gate)
    let cfg = SimConfig::new(40_000, 1e-3, 1.0, 31);
    let mut means = Vec::new();
    let mut ses = Vec::new();
    for &g in &[2.0, 2.5, 3.0] {
        let m = ModelParams::new(1.0, 1.0, g, 0.0, 1.0).unwrap();
        let d = martingale_defect(&m, &cfg).unwrap();
        means.push(m.x0 - d.point); // E[U_T]
        ses.push(d.std_error);
    }
    println!("discounted means across gamma = 2, 2.5, 3: {means:?} (se {ses:?})");
    assert!(
        means[0] >= means[1] - 3.0 * (ses[0] + ses[1]),
        "mean should not increase from gamma=2 to 2.5: {means:?}"
    );
    assert!(
        means[1] >= means[2] - 3.0 * (ses[1] + ses[2]),
        "mean should not increase from gamma=2.5 to 3: {means:?}"
    );
}

#[test]
fn absorbed_fraction_positive_below_two() {
    // gamma=1.5, mu=0.5, T=5: absorption happens with visible frequency
    let m = ModelParams::new(0.5, 1.0, 1.5, 0.0, 1.0).unwrap();
    let mut cfg = SimConfig::new(4_000, 2e-3, 5.0, 4);
    cfg.measure = Measure::Physical;
    let e = simulate(&m, &cfg).unwrap();
    assert!(e.absorbed_fraction() > 0.05, "absorbed fraction {}", e.absorbed_fraction());
}
