use super::*;
use crate::fem::{assemble_load, FeSpace};
use crate::gpc::{build_basis, Family};
use crate::linalg::{Identity, LinearOperator};
use crate::oneshot::{assemble_reduced, assemble_saddle, piecewise_target, RhsData, StochasticField, TargetSpec};
use crate::randfield::{constant_field, kl_expand, CovarianceSpec};

fn uniform_system(n: usize, l: usize, p: usize) -> GalerkinSystem {
    let space = FeSpace::unit_square(n).unwrap();
    let field = kl_expand(&CovarianceSpec::default(), l, 1.0).unwrap();
    let basis = build_basis(&vec![Family::Legendre; l], p).unwrap();
    GalerkinSystem::new(space, &field, basis).unwrap()
}

fn piecewise_data(sys: &GalerkinSystem) -> RhsData {
    let target = TargetSpec::piecewise().coefficients(&sys.space, &sys.mass, 1).unwrap();
    let mut data = RhsData::zeros(sys.n());
    data.target = target;
    data
}

fn rel_residual(op: &dyn LinearOperator, x: &[f64], b: &[f64]) -> f64 {
    let mut r = vec![0.0; b.len()];
    op.apply(x, &mut r);
    let num: f64 = r.iter().zip(b).map(|(a, c)| (a - c) * (a - c)).sum::<f64>().sqrt();
    num / b.iter().map(|v| v * v).sum::<f64>().sqrt()
}

#[test]
fn mean_based_is_exact_for_deterministic_coefficient() {
    let space = FeSpace::unit_square(8).unwrap();
    let basis = build_basis(&[Family::Legendre], 0).unwrap();
    let sys = GalerkinSystem::new(space, &constant_field(1.0), basis).unwrap();
    let spec = ControlSpec {
        epsilon: 0,
        gamma: 1e-3,
        ..Default::default()
    };
    let (op, rhs) = assemble_reduced(&spec, &sys, &piecewise_data(&sys)).unwrap();
    let pre = MeanBasedPreconditioner::new(&spec, &sys).unwrap();
    let (_, rep) = krylov_solve(&op, &rhs, &pre, &KrylovConfig::default()).unwrap();
    assert_eq!(rep.iterations, 1);
    assert!(rep.converged);
}

#[test]
fn mean_based_inverse_consistency_and_linearity() {
    let space = FeSpace::unit_square(6).unwrap();
    let basis = build_basis(&[Family::Legendre; 2], 2).unwrap();
    let sys = GalerkinSystem::new(space, &constant_field(1.0), basis).unwrap();
    let spec = ControlSpec {
        epsilon: 0,
        gamma: 1e-2,
        ..Default::default()
    };
    let op = crate::oneshot::reduced_operator(&spec, &sys).unwrap();
    let pre = MeanBasedPreconditioner::new(&spec, &sys).unwrap();
    let dim = op.dim();
    let x: Vec<f64> = (0..dim).map(|i| ((i * 7 % 13) as f64 - 6.0) / 5.0).collect();
    let w: Vec<f64> = (0..dim).map(|i| (i as f64 * 0.37).sin()).collect();
    let mut px = vec![0.0; dim];
    pre.apply(&x, &mut px);
    let mut back = vec![0.0; dim];
    op.apply(&px, &mut back);
    for (a, b) in back.iter().zip(&x) {
        assert!((a - b).abs() < 1e-12 * (1.0 + b.abs()));
    }
    let combo: Vec<f64> = x.iter().zip(&w).map(|(a, b)| 2.0 * a - 3.0 * b).collect();
    let (mut pc, mut pw) = (vec![0.0; dim], vec![0.0; dim]);
    pre.apply(&combo, &mut pc);
    pre.apply(&w, &mut pw);
    for i in 0..dim {
        assert!((pc[i] - (2.0 * px[i] - 3.0 * pw[i])).abs() < 1e-12 * (1.0 + pc[i].abs()));
    }
}

#[test]
fn mean_based_reduced_solve_residual_recomputed() {
    // n = 10 gives N = 99, L = 3, p = 2 gives Q = 10
    let sys = uniform_system(10, 3, 2);
    assert_eq!((sys.n(), sys.q()), (99, 10));
    let spec = ControlSpec {
        epsilon: 0,
        gamma: 1e-2,
        beta: 1.0,
        ..Default::default()
    };
    let (op, rhs) = assemble_reduced(&spec, &sys, &piecewise_data(&sys)).unwrap();
    let pre = MeanBasedPreconditioner::new(&spec, &sys).unwrap();
    let (x, rep) = krylov_solve(&op, &rhs, &pre, &KrylovConfig::default()).unwrap();
    assert!(rep.converged, "{rep:?}");
    let r = rel_residual(&op, &x, &rhs);
    assert!(r <= 1e-8);
    assert!((r - rep.final_relative_residual).abs() < 1e-12);
}

#[test]
fn preconditioned_and_plain_solutions_agree() {
    let sys = uniform_system(6, 2, 1);
    let spec = ControlSpec {
        epsilon: 0,
        gamma: 1e-1,
        ..Default::default()
    };
    let (op, rhs) = assemble_reduced(&spec, &sys, &piecewise_data(&sys)).unwrap();
    let cfg = KrylovConfig {
        rel_tol: 1e-10,
        max_iter: 2000,
        restart: Some(200),
        ..Default::default()
    };
    let (x1, r1) = krylov_solve(&op, &rhs, &Identity(op.dim()), &cfg).unwrap();
    let pre = MeanBasedPreconditioner::new(&spec, &sys).unwrap();
    let (x2, r2) = krylov_solve(&op, &rhs, &pre, &cfg).unwrap();
    assert!(r1.converged && r2.converged);
    assert!(r2.iterations < r1.iterations);
    let scale = x1.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for (a, b) in x1.iter().zip(&x2) {
        assert!((a - b).abs() <= 1e-6 * scale);
    }
}

#[test]
fn mean_based_rejects_zero_penalty() {
    let sys = uniform_system(4, 1, 1);
    let spec = ControlSpec {
        gamma: 0.0,
        ..Default::default()
    };
    assert!(MeanBasedPreconditioner::new(&spec, &sys).is_err());
}

#[test]
fn one_level_hierarchy_is_a_direct_solve() {
    let sys = uniform_system(4, 2, 1);
    let spec = ControlSpec {
        epsilon: 0,
        ..Default::default()
    };
    let field = kl_expand(&CovarianceSpec::default(), 2, 1.0).unwrap();
    let cfg = MgConfig {
        levels: Some(1),
        ..Default::default()
    };
    let mg = galerkin_hierarchy(&spec, &field, &sys.basis, &sys.space, cfg).unwrap();
    assert_eq!(mg.num_levels(), 1);
    let (op, rhs) = assemble_reduced(&spec, &sys, &piecewise_data(&sys)).unwrap();
    let mut x = vec![0.0; rhs.len()];
    mg.apply(&rhs, &mut x);
    assert!(rel_residual(&op, &x, &rhs) < 1e-12);
}

#[test]
fn level_count_rules() {
    let cfg = MgConfig::default();
    assert_eq!(cfg.level_count(128).unwrap(), 6);
    assert_eq!(cfg.level_count(4).unwrap(), 1);
    assert!(MgConfig { levels: Some(0), ..cfg }.level_count(8).is_err());
    assert!(MgConfig { levels: Some(4), ..cfg }.level_count(8).is_err());
    assert_eq!(MgConfig { levels: Some(3), ..cfg }.level_count(8).unwrap(), 3);
}

#[test]
fn multigrid_contracts_on_reduced_system() {
    let n = 32;
    let space = FeSpace::unit_square(n).unwrap();
    let field = kl_expand(&CovarianceSpec::default(), 3, 1.0).unwrap();
    let basis = build_basis(&[Family::Legendre; 3], 2).unwrap();
    let sys = GalerkinSystem::new(space.clone(), &field, basis.clone()).unwrap();
    let spec = ControlSpec {
        epsilon: 0,
        gamma: 1e-3,
        ..Default::default()
    };
    let (_, rhs) = assemble_reduced(&spec, &sys, &piecewise_data(&sys)).unwrap();
    let mg = galerkin_hierarchy(&spec, &field, &basis, &space, MgConfig::default()).unwrap();
    let (_, hist) = mg.solve_stationary(&rhs, 6);
    for w in hist.windows(2).skip(1) {
        assert!(w[1] <= 0.5 * w[0], "contraction {:?}", hist);
    }
}

#[test]
fn multigrid_preconditioned_gmres_handles_mean_control() {
    let n = 16;
    let space = FeSpace::unit_square(n).unwrap();
    let field = kl_expand(&CovarianceSpec::default(), 2, 1.0).unwrap();
    let basis = build_basis(&[Family::Legendre; 2], 2).unwrap();
    let sys = GalerkinSystem::new(space.clone(), &field, basis.clone()).unwrap();
    let spec = ControlSpec {
        epsilon: 1,
        gamma: 1e-4,
        ..Default::default()
    };
    let mut data = piecewise_data(&sys);
    data.load = StochasticField::deterministic(assemble_load(&space, &|x1, x2| piecewise_target(x1, x2)));
    let (op, rhs) = assemble_reduced(&spec, &sys, &data).unwrap();
    let mg = galerkin_hierarchy(&spec, &field, &basis, &space, MgConfig::default()).unwrap();
    let (x, rep) = krylov_solve(&op, &rhs, &mg, &KrylovConfig::default()).unwrap();
    assert!(rep.converged, "{rep:?}");
    assert!(rep.iterations < 60, "{rep:?}");
    assert!(rel_residual(&op, &x, &rhs) <= 1e-8);
}

#[test]
fn saddle_minres_with_block_preconditioner() {
    let sys = uniform_system(8, 2, 2);
    for (functional, beta, epsilon) in [
        (crate::oneshot::Functional::J1, 0.0, 0u8),
        (crate::oneshot::Functional::J1, 1.0, 1),
        (crate::oneshot::Functional::J2, 0.0, 0),
    ] {
        let spec = ControlSpec {
            functional,
            beta,
            epsilon,
            gamma: 1e-3,
            regularization: Regularization::H1,
            ..Default::default()
        };
        let mut data = piecewise_data(&sys);
        if epsilon == 1 {
            let mut pert = StochasticField::zeros(sys.n(), sys.q());
            for (i, v) in pert.block_mut(1).iter_mut().enumerate() {
                *v = 0.1 * (i as f64 * 0.2).sin();
            }
            data.perturbation = Some(pert);
        }
        let (op, rhs) = assemble_saddle(&spec, &sys, &data).unwrap();
        let pre = SaddleBlockPreconditioner::new(&spec, &sys).unwrap();
        let cfg = KrylovConfig {
            method: KrylovMethod::Minres,
            max_iter: 2000,
            ..Default::default()
        };
        let (x, rep) = krylov_solve(&op, &rhs, &pre, &cfg).unwrap();
        assert!(rep.converged, "{functional:?} {rep:?}");
        assert!(rel_residual(&op, &x, &rhs) <= 1e-8);
    }
}

#[test]
fn run_log_appends_with_single_header() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("runs.csv");
    let rep = SolveReport {
        iterations: 12,
        final_relative_residual: 3e-9,
        converged: true,
        wall_time: 0.5,
    };
    append_run_log(&path, &RunLogRow::new("a", "galerkin", "multigrid", &rep)).unwrap();
    append_run_log(&path, &RunLogRow::new("b", "galerkin", "meanbased", &rep)).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 3);
    assert_eq!(lines[0], "scenario,method,preconditioner,iterations,residual,seconds");
    assert!(lines[2].starts_with("b,galerkin,meanbased,12,"));
}
