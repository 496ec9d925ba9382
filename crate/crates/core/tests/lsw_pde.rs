use lsw_core::lsw_pde::{
    solve, Closure, InitialProfile, KineticRegime, PdeConfig, RadiusDensity, RadiusGrid,
};
use lsw_core::quadrature::integrate16;

/// L1 distance to the characteristics solution of `dR/dt = -1/R`,
/// `n(t, R) = n0(sqrt(R^2 + 2t)) R / sqrt(R^2 + 2t)`.
fn characteristics_error(cells: usize, t: f64) -> f64 {
    let profile = InitialProfile::Bump {
        low: 1.0,
        high: 2.0,
    };
    let grid = RadiusGrid::new(0.1, 2.5, cells).unwrap();
    let initial = profile.discretize(&grid).unwrap();
    let cfg = PdeConfig {
        closure: Closure::Frozen(0.0),
        ..Default::default()
    };
    let traj = solve(&initial, KineticRegime::Reaction, t, &[], &cfg).unwrap();
    let norm = integrate16(|r| profile.shape(r), 1.0, 2.0);
    let exact = |r: f64| {
        let s = (r * r + 2.0 * t).sqrt();
        profile.shape(s) * r / s / norm
    };
    let dr = grid.dr();
    grid.edges
        .windows(2)
        .zip(&traj.last().values)
        .map(|(w, v)| (v - integrate16(exact, w[0], w[1]) / dr).abs() * dr)
        .sum()
}

#[test]
fn upwind_converges_at_first_order_along_characteristics() {
    let coarse = characteristics_error(100, 0.3);
    let fine = characteristics_error(200, 0.3);
    assert!(coarse / fine >= 1.7, "ratio {}", coarse / fine);
}

fn drift(regime: KineticRegime, cells: usize, horizon: f64) -> f64 {
    let grid = RadiusGrid::new(3e-3, 3.0, cells).unwrap();
    let initial = InitialProfile::Bump {
        low: 0.5,
        high: 1.5,
    }
    .discretize(&grid)
    .unwrap();
    let traj = solve(&initial, regime, horizon, &[], &PdeConfig::default()).unwrap();
    let last = traj.records.last().unwrap();
    assert!((last.active_mass + last.escaped_mass - 1.0).abs() <= 1e-12);
    traj.third_moment_drift()
}

#[test]
fn reaction_volume_drift_halves_under_refinement() {
    let ratio = drift(KineticRegime::Reaction, 400, 1.0) / drift(KineticRegime::Reaction, 200, 1.0);
    assert!((0.35..=0.65).contains(&ratio), "ratio {ratio}");
}

#[test]
fn diffusion_closure_also_conserves_volume() {
    // d/dt int R^3 n = 3 (u int R n - int n) vanishes for u = int n / int R n
    let ratio =
        drift(KineticRegime::Diffusion, 200, 0.05) / drift(KineticRegime::Diffusion, 100, 0.05);
    assert!((0.35..=0.65).contains(&ratio), "ratio {ratio}");
}

#[test]
fn critical_cell_only_diffuses_numerically() {
    let mut drifts = Vec::new();
    for cells in [100, 200] {
        let grid = RadiusGrid::new(0.5, 1.5, cells).unwrap();
        let mut values = vec![0.0; cells];
        values[cells / 2] = 1.0 / grid.dr();
        let initial = RadiusDensity::new(grid, values).unwrap();
        let traj = solve(
            &initial,
            KineticRegime::Reaction,
            0.05,
            &[],
            &PdeConfig::default(),
        )
        .unwrap();
        drifts.push(traj.third_moment_drift());
    }
    assert!(drifts[0] < 1e-2);
    assert!(drifts[1] <= 0.65 * drifts[0], "{drifts:?}");
}
