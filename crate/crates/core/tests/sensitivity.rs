mod common;

use matfix_core::conditioning::{
    cond_complex_weighted, cond_real_weighted, random_direction, Weights,
};
use matfix_core::linalg::{frobenius_norm, hermitian_part, kron, spectral_norm, vec_permutation};
use matfix_core::reproduce::{example2, example2_delta, example3, example4, base_matrix};
use matfix_core::solver::trajectory;
use matfix_core::{
    backward_bound, build_bundle, cond_complex, cond_fd_oracle, cond_real, first_order_delta,
    scalar_bounds, solve, solve_general, xi1, xi2, xi3, Case, ComplexMatrix, EquationInstance,
    HermitianMatrix, Mode, OracleSettings, PerturbationSpec, SolveSettings,
};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{gaussian, random_instance, scalar};

fn tight() -> SolveSettings {
    SolveSettings::default().with_tol(1e-13)
}

fn spec_norm(m: &DMatrix<f64>) -> f64 {
    m.clone().singular_values().max()
}

#[test]
fn l_norm_is_bounded_by_theta() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..20 {
        let inst = random_instance(&mut rng, 3, 2, true, 0.9);
        let x = solve(&inst, &tight()).unwrap().x;
        let b = build_bundle(&inst, &x).unwrap();
        assert!(b.l > 0.0);
        assert!(b.l <= 1.0 + b.theta + 1e-12);
        assert!(spectral_norm(&b.l_rep) <= 1.0 + b.theta + 1e-12);
    }
}

#[test]
fn l_maps_hermitian_to_hermitian() {
    let inst = random_instance(&mut ChaCha8Rng::seed_from_u64(2), 3, 2, true, 0.8);
    let x = solve(&inst, &tight()).unwrap().x;
    let b = build_bundle(&inst, &x).unwrap();
    let n = 3;
    for r in 0..n {
        for c in r..n {
            for imag in [false, true] {
                if imag && r == c {
                    continue;
                }
                let mut e = vec![matfix_core::C64::new(0.0, 0.0); n * n];
                let z = if imag { matfix_core::C64::new(0.0, 1.0) } else { matfix_core::C64::new(1.0, 0.0) };
                e[r * n + c] += z;
                e[c * n + r] += z.conj();
                let w = ComplexMatrix::from_row_major(n, n, &e).unwrap();
                let y = common::l_direct(&b.b, &w);
                assert!(y.hermitian_deviation() < 1e-14);
                let via = matfix_core::linalg::unvec(
                    &(b.l_rep.as_dmatrix() * matfix_core::linalg::vec(&w)),
                    n,
                    n,
                )
                .unwrap();
                assert!(via.hermitian_deviation() < 1e-14);
            }
        }
    }
}

#[test]
fn p_action_on_real_arguments_matches_adjoint_form() {
    let inst = random_instance(&mut ChaCha8Rng::seed_from_u64(4), 3, 2, true, 0.8);
    let x = solve(&inst, &tight()).unwrap().x;
    let b = build_bundle(&inst, &x).unwrap();
    let z = gaussian(&mut ChaCha8Rng::seed_from_u64(5), 3, false);
    for (bi, p) in b.b.iter().zip(&b.p_reps) {
        let v = matfix_core::linalg::unvec(&(p.as_dmatrix() * matfix_core::linalg::vec(&z)), 3, 3).unwrap();
        let target = &(&bi.adjoint() * &z) + &(&z.adjoint() * bi);
        let lhs = common::l_direct(&b.b, &v);
        assert!(spectral_norm(&(&lhs - &target)) < 1e-12);
    }
}

#[test]
fn xi3_is_sharper_than_xi2_on_the_example_family() {
    let inst = example2();
    let x = solve(&inst, &tight()).unwrap().x;
    let sb = scalar_bounds(&inst, 1e-14, 10_000).unwrap();
    let bundle = build_bundle(&inst, &x).unwrap();
    for j in 4..=9 {
        let spec = example2_delta(j, &base_matrix());
        let r1 = xi1(&inst, &sb, &spec).unwrap().relative_bound;
        let r2 = xi2(&inst, &x, &sb, &spec).unwrap().relative_bound;
        let r3 = xi3(&inst, &x, &bundle, &spec).unwrap().relative_bound;
        assert!(r3 < r2 && r2 < r1, "j={j}: {r1} {r2} {r3}");
    }
}

#[test]
fn bounds_decay_linearly_with_scale() {
    let inst = example2();
    let x = solve(&inst, &tight()).unwrap().x;
    let sb = scalar_bounds(&inst, 1e-14, 10_000).unwrap();
    let bundle = build_bundle(&inst, &x).unwrap();
    let base = example2_delta(3, &base_matrix());
    let at = |t: f64| {
        let s = base.scaled(t);
        [
            xi1(&inst, &sb, &s).unwrap().relative_bound,
            xi2(&inst, &x, &sb, &s).unwrap().relative_bound,
            xi3(&inst, &x, &bundle, &s).unwrap().relative_bound,
        ]
    };
    let one = at(1.0);
    for t in [0.5, 0.1, 1e-2, 1e-4] {
        for (v, v1) in at(t).iter().zip(&one) {
            assert!(*v <= v1 * t * (1.0 + 1e-9));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn scalar_bounds_dominate_direct_solves(
        q in 0.5f64..4.0,
        a in -1.0f64..1.0,
        da in -1e-3f64..1e-3,
        dq in -1e-3f64..1e-3,
    ) {
        let inst = EquationInstance::new(vec![scalar(a)], scalar(q)).unwrap();
        let x = solve(&inst, &SolveSettings::default().with_tol(1e-15)).unwrap().x;
        let sb = scalar_bounds(&inst, 1e-14, 10_000).unwrap();
        let bundle = build_bundle(&inst, &x).unwrap();
        let spec = PerturbationSpec::new(vec![scalar(da)], HermitianMatrix::from_real_diagonal(&[dq]));
        let xt = solve(&inst.perturbed(&spec.da, &spec.dq).unwrap(), &SolveSettings::default().with_tol(1e-15)).unwrap().x;
        let err = (xt[(0, 0)].re - x[(0, 0)].re).abs();
        let xn = x[(0, 0)].re;
        if let Ok(r) = xi1(&inst, &sb, &spec) {
            prop_assert!(err / xn <= r.relative_bound + 1e-14);
        }
        if let Ok(r) = xi3(&inst, &x, &bundle, &spec) {
            prop_assert!(err <= r.absolute_bound.unwrap() + 1e-14);
        }
        let coeff_only = PerturbationSpec::new(spec.da.clone(), HermitianMatrix::zeros(1));
        let xa = solve(&inst.perturbed(&coeff_only.da, &coeff_only.dq).unwrap(), &SolveSettings::default().with_tol(1e-15)).unwrap().x;
        if let Ok(r) = xi2(&inst, &x, &sb, &coeff_only) {
            prop_assert!((xa[(0, 0)].re - xn).abs() / xn <= r.relative_bound + 1e-14);
        }
    }
}

#[test]
fn residual_bound_along_the_iteration() {
    let inst = example3();
    let x = solve(&inst, &tight()).unwrap().x;
    let x0 = HermitianMatrix::from_upper(&base_matrix()).unwrap();
    let mut last = f64::INFINITY;
    for xk in trajectory(&inst, &x0, 8).unwrap() {
        let rep = backward_bound(&inst, &xk).unwrap();
        assert!(rep.feasible);
        let bound = rep.bound.unwrap();
        assert!(bound.is_finite());
        assert!(spectral_norm(&xk.sub(&x)) <= bound + 1e-15);
        assert!(bound < last);
        last = bound;
    }
}

#[test]
fn residual_bound_on_random_approximations() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for t in 0..40 {
        let inst = random_instance(&mut rng, 3, 2, t % 2 == 0, 0.6);
        let x = solve(&inst, &tight()).unwrap().x;
        let e = common::random_hermitian(&mut rng, 3, t % 2 == 0);
        let xt = x.add(&e.scale(1e-4 / spectral_norm(&e)));
        let rep = backward_bound(&inst, &xt).unwrap();
        if rep.feasible {
            assert!(rep.theta.unwrap() <= rep.lambda_min / rep.residual_norm);
            assert!(spectral_norm(&xt.sub(&x)) <= rep.bound.unwrap());
        }
    }
}

fn u_blocks(bundle: &matfix_core::OperatorBundle) -> Vec<(DMatrix<f64>, DMatrix<f64>)> {
    let n = bundle.n;
    let eye = ComplexMatrix::identity(n);
    let perm = ComplexMatrix::from_real(vec_permutation(n).as_dmatrix()).unwrap();
    bundle
        .b
        .iter()
        .map(|bi| {
            let u1 = (&bundle.l_inv * &kron(&eye, &bi.adjoint())).real_part();
            let u2 = (&bundle.l_inv * &(&kron(&bi.transpose(), &eye) * &perm)).real_part();
            (u1, u2)
        })
        .collect()
}

/// On real data the complex construction splits into two real block rows,
/// one built from `U_1 + U_2` and one from `U_1 - U_2`; the real-case
/// number is the first of them.
#[test]
fn complex_and_real_cases_on_real_data() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for t in 0..12 {
        let inst = random_instance(&mut rng, 3, 2, false, 0.8);
        let x = solve(&inst, &tight()).unwrap().x;
        let bundle = build_bundle(&inst, &x).unwrap();
        let mode = if t % 2 == 0 { Mode::Absolute } else { Mode::Relative };
        let c = cond_complex(&inst, &x, &bundle, mode).unwrap();
        let r = cond_real(&inst, &x, mode).unwrap();
        let s = bundle.l_inv.real_part();
        let row = |sign: f64| {
            let mut blocks = vec![&s * c.rho];
            for ((u1, u2), eta) in u_blocks(&bundle).iter().zip(&c.etas) {
                blocks.push((u1 + u2 * sign) * *eta);
            }
            let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
            let mut m = DMatrix::zeros(s.nrows(), cols);
            let mut at = 0;
            for b in &blocks {
                m.view_mut((0, at), b.shape()).copy_from(b);
                at += b.ncols();
            }
            spec_norm(&m)
        };
        let (plus, minus) = (row(1.0), row(-1.0));
        assert!((r.value * r.xi - plus).abs() <= 1e-12 * plus);
        assert!((c.value * c.xi - plus.max(minus)).abs() <= 1e-12 * plus.max(minus));
        assert!(c.value >= r.value * (1.0 - 1e-12));
    }
}

#[test]
fn assembled_block_row_reproduces_the_value() {
    let inst = random_instance(&mut ChaCha8Rng::seed_from_u64(10), 3, 2, true, 0.8);
    let x = solve(&inst, &tight()).unwrap().x;
    let bundle = build_bundle(&inst, &x).unwrap();
    let c = cond_complex(&inst, &x, &bundle, Mode::Relative).unwrap();
    let blocks = c.assembled.as_ref().unwrap();
    assert_eq!((blocks.rows(), blocks.cols()), (18, 54));
    assert!((spec_norm(blocks.as_dmatrix()) - c.value * c.xi).abs() < 1e-12);
    assert!((c.xi - frobenius_norm(&x)).abs() < 1e-15);
}

#[test]
fn uniform_weight_scaling_is_linear() {
    let inst = random_instance(&mut ChaCha8Rng::seed_from_u64(12), 3, 2, false, 0.8);
    let x = solve(&inst, &tight()).unwrap().x;
    let bundle = build_bundle(&inst, &x).unwrap();
    let w = Weights::for_mode(&inst, &x, Mode::Relative);
    let doubled = Weights {
        xi: w.xi,
        rho: 2.0 * w.rho,
        etas: w.etas.iter().map(|e| 2.0 * e).collect(),
    };
    let c1 = cond_complex_weighted(&inst, &bundle, w.clone(), Mode::Relative).unwrap();
    let c2 = cond_complex_weighted(&inst, &bundle, doubled.clone(), Mode::Relative).unwrap();
    assert!((c2.value - 2.0 * c1.value).abs() < 1e-12 * c1.value);
    let r1 = cond_real_weighted(&inst, &x, w, Mode::Relative).unwrap();
    let r2 = cond_real_weighted(&inst, &x, doubled, Mode::Relative).unwrap();
    assert!((r2.value - 2.0 * r1.value).abs() < 1e-12 * r1.value);
}

#[test]
fn unitary_similarity_keeps_complex_condition_number() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let inst = random_instance(&mut rng, 3, 2, true, 0.8);
    let k = hermitian_part(&gaussian(&mut rng, 3, true)).unwrap();
    let skew = ComplexMatrix::from_dmatrix(k.as_dmatrix().map(|z| z * matfix_core::C64::new(0.0, 1.0))).unwrap();
    let eye = ComplexMatrix::identity(3);
    let u = &matfix_core::linalg::inverse(&(&eye - &skew)).unwrap() * &(&eye + &skew);
    let rot = |m: &ComplexMatrix| &(&u.adjoint() * m) * &u;
    let moved = EquationInstance::new(inst.a().iter().map(rot).collect(), rot(inst.q())).unwrap();
    let value = |i: &EquationInstance| {
        let x = solve(i, &tight()).unwrap().x;
        let c = cond_complex(i, &x, &build_bundle(i, &x).unwrap(), Mode::Absolute).unwrap();
        c.value * c.xi
    };
    let (a, b) = (value(&inst), value(&moved));
    assert!((a - b).abs() < 1e-9 * a);
}

#[test]
fn first_order_change_is_bounded_by_the_condition_number() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for t in 0..10 {
        let complex = t % 2 == 0;
        let inst = random_instance(&mut rng, 3, 2, complex, 0.8);
        let x = solve(&inst, &tight()).unwrap().x;
        let bundle = build_bundle(&inst, &x).unwrap();
        let c = cond_complex(&inst, &x, &bundle, Mode::Relative).unwrap();
        let (e, h) = random_direction(&mut rng, 3, 2, if complex { Case::Complex } else { Case::Real });
        let spec = PerturbationSpec::new(
            e.iter().zip(&c.etas).map(|(ei, eta)| ei.scale(*eta)).collect(),
            hermitian_part(&h).unwrap().scale(c.rho),
        );
        let dx = first_order_delta(&bundle, &spec).unwrap();
        assert!(frobenius_norm(&dx) / c.xi <= c.value + 1e-10);
    }
}

#[test]
fn oracle_on_scalar_equation_approaches_the_closed_form() {
    let inst = EquationInstance::new(vec![scalar(0.8)], scalar(1.2)).unwrap();
    let x = solve(&inst, &SolveSettings::default().with_tol(1e-15)).unwrap().x;
    let exact = cond_real(&inst, &x, Mode::Relative).unwrap().value;
    let est = cond_fd_oracle(
        &inst,
        &x,
        &OracleSettings {
            case: Case::Real,
            trials: 200,
            ..OracleSettings::default()
        },
    )
    .unwrap();
    assert!(est <= exact * (1.0 + 1e-5));
    assert!(est >= 0.95 * exact, "{est} vs {exact}");
}

#[test]
fn oracle_without_coefficient_coupling_sees_identity() {
    let inst = EquationInstance::new(vec![ComplexMatrix::zeros(1, 1)], scalar(2.0)).unwrap();
    let est = cond_fd_oracle(
        &inst,
        inst.q(),
        &OracleSettings {
            mode: Mode::Absolute,
            case: Case::Real,
            trials: 200,
            ..OracleSettings::default()
        },
    )
    .unwrap();
    assert!(est <= 1.0 + 1e-5 && est > 0.99, "{est}");
}

#[test]
fn oracle_stays_below_the_nonsymmetric_example() {
    let inst = example4(3);
    let x = solve_general(&inst, &SolveSettings::default().with_tol(1e-12)).unwrap().x;
    let exact = cond_real(&inst, &x, Mode::Relative).unwrap().value;
    let est = cond_fd_oracle(
        &inst,
        &x,
        &OracleSettings {
            case: Case::Real,
            trials: 40,
            solve_tol: 1e-12,
            ..OracleSettings::default()
        },
    )
    .unwrap();
    assert!(est <= 1.0951 * (1.0 + 1e-3), "{est}");
    assert!(est <= exact * (1.0 + 1e-5));
}
