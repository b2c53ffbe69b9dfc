use super::*;
use crate::fem::assemble_load;
use crate::gpc::{build_basis, build_sparse_grid, Family};
use crate::oneshot::{
    assemble_reduced, eval_cost, piecewise_target, recover_control, split_solution, GalerkinSystem, RhsData,
    StochasticField, TargetSpec,
};
use crate::randfield::{constant_field, kl_expand, CovarianceSpec};
use crate::solve::{KrylovConfig, MeanBasedPreconditioner};

fn system(n: usize, modes: usize, level: usize) -> CollocSystem {
    let space = FeSpace::unit_square(n).unwrap();
    let field = if modes == 0 {
        constant_field(1.0)
    } else {
        kl_expand(&CovarianceSpec::default(), modes, 1.0).unwrap()
    };
    let grid = build_sparse_grid(modes.max(1), level).unwrap();
    CollocSystem::new(space, &field, grid).unwrap()
}

fn piecewise(sys: &CollocSystem) -> CollocData {
    let target = crate::fem::l2_project(&sys.space, &sys.mass, &piecewise_target);
    CollocData::deterministic(vec![0.0; sys.n()], target)
}

fn spec(functional: Functional, beta: f64, epsilon: u8) -> ControlSpec {
    ControlSpec {
        functional,
        beta,
        epsilon,
        gamma: 1e-2,
        ..Default::default()
    }
}

#[test]
fn classification_examples() {
    assert_eq!(classify_coupling(&spec(Functional::J1, 0.0, 0)), CouplingMode::Decoupled);
    assert_eq!(classify_coupling(&spec(Functional::J1, 0.0, 1)), CouplingMode::CoupledMean);
    assert_eq!(classify_coupling(&spec(Functional::J2, 0.0, 0)), CouplingMode::CoupledJ2);
    assert_eq!(classify_coupling(&spec(Functional::J1, 1.0, 0)), CouplingMode::CoupledVariance);
    let h1 = ControlSpec {
        regularization: Regularization::H1,
        ..spec(Functional::J1, 0.0, 0)
    };
    assert_eq!(classify_coupling(&h1), CouplingMode::CoupledH1);
}

#[test]
fn h1_is_rejected() {
    let sys = system(4, 1, 1);
    let s = ControlSpec {
        regularization: Regularization::H1,
        ..spec(Functional::J1, 0.0, 0)
    };
    let data = piecewise(&sys);
    assert!(matches!(
        solve_coupled(&s, &sys, &data, &CollocConfig::default()),
        Err(Error::Unsupported(_))
    ));
    assert!(solve_decoupled(&spec(Functional::J1, 1.0, 0), &sys, &data, &CollocConfig::default()).is_err());
}

#[test]
fn constant_coefficient_gives_identical_snapshots() {
    let space = FeSpace::unit_square(6).unwrap();
    let sys = CollocSystem::new(space, &constant_field(1.0), build_sparse_grid(2, 2).unwrap()).unwrap();
    let sol = solve_decoupled(&spec(Functional::J1, 0.0, 0), &sys, &piecewise(&sys), &CollocConfig::default()).unwrap();
    for z in &sol.state[1..] {
        assert_eq!(z, &sol.state[0]);
    }
}

fn galerkin_deterministic(s: &ControlSpec, n: usize) -> (Vec<f64>, Vec<f64>) {
    let space = FeSpace::unit_square(n).unwrap();
    let basis = build_basis(&[Family::Legendre], 0).unwrap();
    let gsys = GalerkinSystem::new(space, &constant_field(1.0), basis).unwrap();
    let mut data = RhsData::zeros(gsys.n());
    data.target = TargetSpec::piecewise().coefficients(&gsys.space, &gsys.mass, 1).unwrap();
    let (op, rhs) = assemble_reduced(s, &gsys, &data).unwrap();
    let pre = MeanBasedPreconditioner::new(s, &gsys).unwrap();
    let cfg = KrylovConfig {
        rel_tol: 1e-12,
        ..Default::default()
    };
    let (x, _) = krylov_solve(&op, &rhs, &pre, &cfg).unwrap();
    let f = split_solution(&x, gsys.n(), 1);
    (f[0].data().to_vec(), f[1].data().to_vec())
}

#[test]
fn single_point_grid_matches_mean_coefficient_solve() {
    let sys = system(8, 2, 0);
    assert_eq!(sys.npoints(), 1);
    let s = spec(Functional::J1, 0.0, 0);
    let sol = solve_decoupled(&s, &sys, &piecewise(&sys), &CollocConfig::default()).unwrap();
    let (z, l) = galerkin_deterministic(&s, 8);
    for (a, b) in sol.state[0].iter().zip(&z).chain(sol.adjoint[0].iter().zip(&l)) {
        assert!((a - b).abs() < 1e-9 * (1.0 + b.abs()), "{a} {b}");
    }
}

#[test]
fn mean_control_on_one_point_is_deterministic_system() {
    let sys = system(8, 2, 0);
    let s = spec(Functional::J1, 0.0, 1);
    let sol = solve_coupled(&s, &sys, &piecewise(&sys), &CollocConfig::default()).unwrap();
    let (z, _) = galerkin_deterministic(&s, 8);
    for (a, b) in sol.state[0].iter().zip(&z) {
        assert!((a - b).abs() < 1e-8 * (1.0 + b.abs()));
    }
}

#[test]
fn coupled_operator_matches_literal_layout() {
    // N = 15, five collocation points
    let sys = system(4, 2, 1);
    let (n, q) = (sys.n(), sys.npoints());
    assert_eq!(q, 5);
    let w = sys.grid.weights().to_vec();
    for s in [
        ControlSpec {
            gamma: 0.3,
            ..spec(Functional::J1, 0.7, 0)
        },
        ControlSpec {
            gamma: 0.3,
            ..spec(Functional::J1, 0.7, 1)
        },
        ControlSpec {
            gamma: 0.3,
            alpha: 1.3,
            ..spec(Functional::J2, 0.4, 0)
        },
    ] {
        let op = coupled_operator(&s, &sys).unwrap();
        let dim = 2 * n * q;
        let mut dense = vec![0.0; dim * dim];
        let m = sys.mass.to_dense();
        let eps = s.epsilon as f64;
        for i in 0..q {
            let k = sys.stiffness_at(i).to_dense();
            for r in 0..n {
                for c in 0..n {
                    dense[(i * n + r) * dim + i * n + c] += k[r * n + c];
                    dense[((q + i) * n + r) * dim + (q + i) * n + c] += k[r * n + c];
                }
            }
            for j in 0..q {
                let kd = if i == j { 1.0 } else { 0.0 };
                let state = ((1.0 - eps) * kd + eps * w[j]) / s.gamma;
                let adj = match s.functional {
                    Functional::J1 => -(s.alpha + s.beta) * kd + s.beta * w[j],
                    Functional::J2 => -s.beta * kd - (s.alpha - s.beta) * w[j],
                };
                for r in 0..n {
                    for c in 0..n {
                        dense[(i * n + r) * dim + (q + j) * n + c] += state * m[r * n + c];
                        dense[((q + i) * n + r) * dim + j * n + c] += adj * m[r * n + c];
                    }
                }
            }
        }
        let x: Vec<f64> = (0..dim).map(|k| ((k * 37 % 101) as f64 - 50.0) / 17.0).collect();
        let mut y = vec![0.0; dim];
        op.apply(&x, &mut y);
        for r in 0..dim {
            let e: f64 = (0..dim).map(|c| dense[r * dim + c] * x[c]).sum();
            assert!((y[r] - e).abs() <= 1e-12 * (1.0 + e.abs()), "row {r}: {} vs {e}", y[r]);
        }
    }
}

#[test]
fn variance_coupling_cancels_on_constant_states() {
    let w = vec![0.1, 0.2, 0.3, 0.4];
    let s = ControlSpec {
        alpha: 1.5,
        ..spec(Functional::J1, 2.0, 0)
    };
    let (_, a) = coupling_blocks(&s, &w);
    for i in 0..4 {
        let row: f64 = (0..4).map(|j| a.get(i, j)).sum();
        assert!((row + s.alpha).abs() < 1e-14);
    }
}

#[test]
fn decoupled_structure_has_no_cross_point_blocks() {
    let sys = system(4, 2, 1);
    let op = coupled_operator(&spec(Functional::J1, 0.0, 0), &sys).unwrap();
    let q = sys.npoints();
    for t in op.terms() {
        for (r, c, v) in t.stoch.iter() {
            if v != 0.0 {
                assert_eq!(r % q, c % q, "block ({r},{c}) couples points");
            }
        }
    }
    let op = coupled_operator(&spec(Functional::J1, 1.0, 0), &sys).unwrap();
    let cross = op
        .terms()
        .iter()
        .flat_map(|t| t.stoch.iter())
        .any(|(r, c, v)| v != 0.0 && r % q != c % q);
    assert!(cross);
}

#[test]
fn coupled_solver_reproduces_decoupled_solution() {
    let sys = system(6, 2, 1);
    let s = spec(Functional::J1, 0.0, 0);
    let data = piecewise(&sys);
    let a = solve_decoupled(&s, &sys, &data, &CollocConfig::default()).unwrap();
    let b = solve_coupled(&s, &sys, &data, &CollocConfig::default()).unwrap();
    for (za, zb) in a.state.iter().zip(&b.state) {
        for (x, y) in za.iter().zip(zb) {
            assert!((x - y).abs() < 1e-8 * (1.0 + x.abs()));
        }
    }
}

#[test]
fn threaded_points_are_bitwise_identical() {
    let sys = system(8, 2, 2);
    let s = spec(Functional::J1, 0.0, 0);
    let data = piecewise(&sys);
    let serial = solve_decoupled(&s, &sys, &data, &CollocConfig::default()).unwrap();
    let threaded = solve_decoupled(
        &s,
        &sys,
        &data,
        &CollocConfig {
            threads: 3,
            ..Default::default()
        },
    )
    .unwrap();
    assert_eq!(serial.state, threaded.state);
    assert_eq!(serial.control, threaded.control);
}

#[test]
fn multigrid_point_solver_matches_direct() {
    let sys = system(16, 2, 1);
    let s = spec(Functional::J1, 0.0, 0);
    let data = piecewise(&sys);
    let direct = solve_decoupled(
        &s,
        &sys,
        &data,
        &CollocConfig {
            point_solver: PointSolverKind::Direct,
            ..Default::default()
        },
    )
    .unwrap();
    let mg = solve_decoupled(
        &s,
        &sys,
        &data,
        &CollocConfig {
            point_solver: PointSolverKind::Multigrid,
            ..Default::default()
        },
    )
    .unwrap();
    assert!(mg.converged());
    for (za, zb) in direct.state.iter().zip(&mg.state) {
        for (x, y) in za.iter().zip(zb) {
            assert!((x - y).abs() < 1e-7 * (1.0 + x.abs()));
        }
    }
}

#[test]
fn coupled_variance_and_j2_converge() {
    let sys = system(6, 2, 1);
    let data = piecewise(&sys);
    for s in [spec(Functional::J1, 1.0, 0), spec(Functional::J2, 0.5, 0), spec(Functional::J1, 1.0, 1)] {
        let sol = solve_coupled(&s, &sys, &data, &CollocConfig::default()).unwrap();
        assert!(sol.converged(), "{s:?}: {:?}", sol.reports);
    }
}

#[test]
fn perfect_tracking_costs_nothing() {
    let sys = system(4, 2, 1);
    let target: Vec<f64> = (0..sys.n()).map(|i| (i as f64).sin()).collect();
    let data = CollocData::deterministic(vec![0.0; sys.n()], target.clone());
    let q = sys.npoints();
    let sol = CollocSolution {
        grid: sys.grid.clone(),
        state: vec![target.clone(); q],
        adjoint: vec![vec![0.0; sys.n()]; q],
        control: vec![vec![0.0; sys.n()]; q],
        reports: Vec::new(),
    };
    for s in [spec(Functional::J1, 1.0, 0), spec(Functional::J2, 1.0, 0)] {
        let c = colloc_cost(&s, &sys, &sol, &data).unwrap();
        assert!(c.j.abs() < 1e-12 && c.tracking.abs() < 1e-12 && c.std_sq.abs() < 1e-12);
    }
}

#[test]
fn cost_matches_galerkin_on_shared_field() {
    let n = 6;
    let space = FeSpace::unit_square(n).unwrap();
    let field = kl_expand(&CovarianceSpec::default(), 2, 1.0).unwrap();
    let basis = build_basis(&[Family::Legendre; 2], 2).unwrap();
    let gsys = GalerkinSystem::new(space.clone(), &field, basis.clone()).unwrap();
    let csys = CollocSystem::new(space.clone(), &field, build_sparse_grid(2, 3).unwrap()).unwrap();
    let nd = gsys.n();
    let mut z = StochasticField::zeros(nd, basis.len());
    let mut u = StochasticField::zeros(nd, basis.len());
    for (k, v) in z.data_mut().iter_mut().enumerate() {
        *v = ((k * 13 % 17) as f64 - 8.0) / 9.0;
    }
    for (k, v) in u.data_mut().iter_mut().enumerate() {
        *v = ((k * 7 % 11) as f64 - 5.0) / 3.0;
    }
    let target = TargetSpec::piecewise().coefficients(&space, &gsys.mass, 1).unwrap();
    let sample = |f: &StochasticField, y: &[f64]| -> Vec<f64> {
        let psi = basis.eval_all(y).unwrap();
        let mut out = vec![0.0; nd];
        for (q, p) in psi.iter().enumerate() {
            for (o, v) in out.iter_mut().zip(f.block(q)) {
                *o += p * v;
            }
        }
        out
    };
    let pts = csys.grid.points();
    let sol = CollocSolution {
        grid: csys.grid.clone(),
        state: pts.iter().map(|y| sample(&z, y)).collect(),
        adjoint: vec![vec![0.0; nd]; pts.len()],
        control: pts.iter().map(|y| sample(&u, y)).collect(),
        reports: Vec::new(),
    };
    let data = CollocData::deterministic(vec![0.0; nd], target.mean().to_vec());
    for s in [
        ControlSpec {
            gamma: 0.1,
            epsilon: 0,
            ..spec(Functional::J1, 0.6, 0)
        },
        ControlSpec {
            gamma: 0.1,
            epsilon: 0,
            ..spec(Functional::J2, 0.6, 0)
        },
    ] {
        let g = eval_cost(&s, &gsys, &z, Some(&u), None, &target).unwrap();
        let c = colloc_cost(&s, &csys, &sol, &data).unwrap();
        for (a, b) in [(g.j, c.j), (g.tracking, c.tracking), (g.std_sq, c.std_sq)] {
            assert!((a - b).abs() <= 1e-6 * a.abs(), "{a} vs {b}");
        }
    }
}

#[test]
fn reconstruction_properties() {
    let grid = build_sparse_grid(2, 2).unwrap();
    let fields: Vec<Vec<f64>> = vec![vec![2.5, -1.0]; grid.len()];
    for y in [[0.3, -1.2], [1.7, 1.7], [-0.1, 0.0]] {
        let r = reconstruct(&grid, &fields, &y).unwrap();
        assert!((r[0] - 2.5).abs() < 1e-12 && (r[1] + 1.0).abs() < 1e-12);
    }
    // the origin is a node of every odd Gauss rule, hence of every component
    let distinct: Vec<Vec<f64>> = (0..grid.len()).map(|i| vec![i as f64]).collect();
    let origin = grid.points().iter().position(|p| p.iter().all(|v| v.abs() < 1e-14)).unwrap();
    let r = reconstruct(&grid, &distinct, &[0.0, 0.0]).unwrap();
    assert!((r[0] - origin as f64).abs() < 1e-12);
    // a single tensor component interpolates at all of its nodes
    let line = build_sparse_grid(1, 2).unwrap();
    let vals: Vec<Vec<f64>> = (0..line.len()).map(|i| vec![(i * i) as f64]).collect();
    for (k, p) in line.points().iter().enumerate() {
        let r = reconstruct(&line, &vals, p).unwrap();
        assert!((r[0] - (k * k) as f64).abs() < 1e-9);
    }
    assert!(reconstruct(&grid, &fields, &[3.0, 0.0]).is_err());
}

#[test]
fn reconstruction_error_decreases_with_level() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    let s3 = crate::gpc::SQRT3;
    let ys: Vec<[f64; 2]> = (0..50).map(|_| [rng.gen_range(-s3..s3), rng.gen_range(-s3..s3)]).collect();
    let mut errs = Vec::new();
    for level in 1..=3 {
        let grid = build_sparse_grid(2, level).unwrap();
        let f: Vec<Vec<f64>> = grid.points().iter().map(|p| vec![p[0].sin()]).collect();
        let e = ys
            .iter()
            .map(|y| (reconstruct(&grid, &f, y).unwrap()[0] - y[0].sin()).abs())
            .fold(0.0f64, f64::max);
        errs.push(e);
    }
    assert!(errs[1] < errs[0] && errs[2] < errs[1], "{errs:?}");
}

#[test]
fn galerkin_and_collocation_agree_on_small_problem() {
    let n = 8;
    let space = FeSpace::unit_square(n).unwrap();
    let field = kl_expand(&CovarianceSpec::default(), 2, 1.0).unwrap();
    let s = ControlSpec {
        epsilon: 0,
        gamma: 1e-2,
        ..Default::default()
    };
    let load = assemble_load(&space, &|_, _| 1.0);
    let mut errs = Vec::new();
    let mut reference = None;
    for (p, level) in [(1usize, 1usize), (3, 3)] {
        let basis = build_basis(&[Family::Legendre; 2], p).unwrap();
        let gsys = GalerkinSystem::new(space.clone(), &field, basis).unwrap();
        let mut data = RhsData::zeros(gsys.n());
        data.load = StochasticField::deterministic(load.clone());
        data.target = TargetSpec::piecewise().coefficients(&space, &gsys.mass, 1).unwrap();
        let (op, rhs) = assemble_reduced(&s, &gsys, &data).unwrap();
        let pre = MeanBasedPreconditioner::new(&s, &gsys).unwrap();
        let cfg = KrylovConfig {
            rel_tol: 1e-12,
            ..Default::default()
        };
        let (x, _) = krylov_solve(&op, &rhs, &pre, &cfg).unwrap();
        let f = split_solution(&x, gsys.n(), gsys.q());
        let u = recover_control(&s, &f[1]).unwrap();
        let g = eval_cost(&s, &gsys, &f[0], Some(&u), None, &data.target).unwrap();
        let csys = CollocSystem::new(space.clone(), &field, build_sparse_grid(2, level).unwrap()).unwrap();
        let cdata = CollocData::deterministic(load.clone(), data.target.mean().to_vec());
        let sol = solve_decoupled(&s, &csys, &cdata, &CollocConfig::default()).unwrap();
        let c = colloc_cost(&s, &csys, &sol, &cdata).unwrap();
        errs.push((g.std_sq - c.std_sq).abs() / g.std_sq);
        reference.get_or_insert(g.j);
        assert!((g.j - c.j).abs() < 1e-2 * g.j, "{g:?} {c:?}");
    }
    assert!(errs[1] < errs[0], "{errs:?}");
}

#[test]
fn csv_exports() {
    let dir = tempfile::tempdir().unwrap();
    let sys = system(4, 2, 1);
    write_weights_csv(&dir.path().join("w.csv"), &sys.grid).unwrap();
    let text = std::fs::read_to_string(dir.path().join("w.csv")).unwrap();
    assert_eq!(text.lines().count(), 6);
    assert!(text.starts_with("point,y1,y2,weight"));
    let sol = solve_decoupled(&spec(Functional::J1, 0.0, 0), &sys, &piecewise(&sys), &CollocConfig::default()).unwrap();
    write_snapshots(&dir.path().join("snaps"), &sys.space, &sol).unwrap();
    assert!(dir.path().join("snaps/state_4.csv").exists());
}
