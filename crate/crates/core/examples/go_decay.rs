use magdtn_core::field::bumps::{make_admissible_potential, Bump, BumpRecipe};
use magdtn_core::field::ScalarSpaceTimeField;
use magdtn_core::go::solution::{build_go_solution, GoOptions};
use magdtn_core::go::{build_frame, Side};
use magdtn_core::grid::Grid;

fn main() {
    let grid = Grid::cube(16, 64).unwrap();
    let recipe = BumpRecipe {
        bumps: vec![Bump {
            center: vec![0.5, 0.45, 0.55],
            radius: 0.28,
            amplitude: 0.05,
            direction: vec![1.0, 0.0, 0.0],
            axis_pair: (0, 2),
        }],
        divergence_free: true,
    };
    let a = make_admissible_potential(&grid, &recipe, true).unwrap();
    let q = ScalarSpaceTimeField::from_fn(grid, |x, t| {
        let r2: f64 = x.iter().map(|&c| (c - 0.5) * (c - 0.5)).sum();
        if r2 < 0.09 { 0.3 * (1.0 - r2 / 0.09).powi(4) * (2.0 * std::f64::consts::PI * t).cos() } else { 0.0 }
    });
    let xi = [0.0, 0.0, std::f64::consts::TAU];
    for sigma in [4.0, 6.0, 8.0, 12.0] {
        let frame = build_frame(&xi, &[0.0; 3], sigma, Side::Two).unwrap();
        let t0 = std::time::Instant::now();
        let sol = build_go_solution(Some(&a), Some(&q), &frame, &grid, &GoOptions::default()).unwrap();
        println!(
            "sigma {sigma:5.1}: |w|_L2H1 = {:.4e}  |w|_L2H2 = {:.4e} |w|_H1H1 = {:.4e} |w|_H2H1 = {:.4e} res_carrier = {:.3e} contraction = {:.3} transport = {:.2e}  ({:.1?})",
            sol.norm_w_l2h1, sol.norm_w_l2h2, sol.norm_w_h1h1, sol.norm_w_h2h1,
            sol.pde_residual_carrier, sol.contraction_factor, sol.transport_defect, t0.elapsed()
        );
    }
}
