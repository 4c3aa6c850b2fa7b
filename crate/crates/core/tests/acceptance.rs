//! Acceptance suite: one test per release criterion, each printing a
//! PASS line with the measured values (run with `--nocapture` to see them).

use std::f64::consts::PI;
use std::time::Instant;

use bellforge::expr::{rat, BellExpression, Builtin, Form, Party, Rational};
use bellforge::lhv::{
    i2_zero_theta_form, lhv_value, rearrangement_bounds, sample_lhv, vertex_max, RearrangeKind,
};
use bellforge::optimize::{grid_oracle, maximize, Objective, OptimizerConfig};
use bellforge::proof::{default_depth, search, verify, PositivityKind, ProofCertificate};
use bellforge::quantum::{probabilities, quantum_value, Projector, QuantumModel};
use bellforge::BoxPoint;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

fn config64() -> OptimizerConfig {
    OptimizerConfig {
        restarts: 64,
        seed: 20240,
        ..OptimizerConfig::default()
    }
}

/// Independent oracle: plain exhaustive enumeration of all vertices in
/// exact rationals, no incremental evaluation.
fn brute_vertex_max(expr: &BellExpression) -> Rational {
    let (m, n) = (expr.m(), expr.n());
    let mut best: Option<Rational> = None;
    for xm in 0..(1usize << m) {
        for ym in 0..(1usize << n) {
            let mut v = expr.const_term().clone();
            for i in 0..m {
                if xm >> i & 1 == 0 {
                    continue;
                }
                v += expr.marg(Party::X, i);
                for j in 0..n {
                    if ym >> j & 1 == 1 {
                        v += expr.joint(i, j);
                    }
                }
            }
            for j in 0..n {
                if ym >> j & 1 == 1 {
                    v += expr.marg(Party::Y, j);
                }
            }
            if best.as_ref().is_none_or(|b| v > *b) {
                best = Some(v);
            }
        }
    }
    best.unwrap()
}

#[test]
fn accept_i3322_row() {
    let start = Instant::now();
    let prob = BellExpression::builtin(Builtin::I3322Sym)
        .to_probability_form()
        .unwrap();
    let r = maximize(&Objective::Standard(prob), 3, 3, &config64()).unwrap();
    let lambda = r.lambda_max.expect("the optimum violates");
    let elapsed = start.elapsed();
    assert!((r.q - 0.25).abs() <= 1e-3, "Q = {}", r.q);
    assert!(
        (r.theta_max / PI - 0.25).abs() <= 1e-2,
        "theta/pi = {}",
        r.theta_max / PI
    );
    assert!((lambda - 0.8).abs() <= 1e-3, "lambda = {lambda}");
    assert!(elapsed.as_secs() < 60, "took {elapsed:?}");
    println!(
        "ACCEPT i3322-row: PASS (Q = {:.4}, theta/pi = {:.4}, lambda = {:.4}, {} restarts in {:?})",
        r.q,
        r.theta_max / PI,
        lambda,
        64,
        elapsed
    );
}

#[test]
fn accept_i3322_alternative_columns() {
    let r = maximize(&Objective::MaxForm(3), 3, 3, &config64()).unwrap();
    let lambda = r.lambda_max.expect("the optimum violates");
    // A miss here is a reconstruction discrepancy against the published
    // alternative-row values and must be reported, not tuned away.
    assert!(
        (r.q - 0.2071).abs() <= 5e-3,
        "reconstruction discrepancy: Q_a = {} (expected 0.2071 +- 0.005)",
        r.q
    );
    assert!(
        (r.theta_max / PI - 0.25).abs() <= 1e-2,
        "reconstruction discrepancy: theta_a/pi = {}",
        r.theta_max / PI
    );
    assert!(
        (lambda - 0.7836).abs() <= 5e-3,
        "reconstruction discrepancy: lambda_a = {lambda} (expected 0.7836 +- 0.005)"
    );
    println!(
        "ACCEPT i3322-alternative: PASS (Q_a = {:.4}, theta_a/pi = {:.4}, lambda_a = {:.4})",
        r.q,
        r.theta_max / PI,
        lambda
    );
}

#[test]
fn accept_ch_row_with_grid_validation() {
    let objective = Objective::Standard(BellExpression::builtin(Builtin::ChProb));
    let r = maximize(&objective, 2, 2, &config64()).unwrap();
    let lambda = r.lambda_max.expect("the optimum violates");
    let expect_q = (2.0f64.sqrt() - 1.0) / 2.0;
    assert!((r.q - expect_q).abs() <= 1e-4, "Q = {}", r.q);
    assert!((r.theta_max / PI - 0.25).abs() <= 5e-3);
    assert!((lambda - std::f64::consts::FRAC_1_SQRT_2).abs() <= 1e-4);

    // Independent validation: exact maximum over the one-degree grid. The
    // lattice best is 0.20699909 (the optimal angle pattern sits half a
    // step off the lattice), i.e. 0.2070 at report precision; freeze it as
    // the regression anchor.
    let grid = grid_oracle(&objective, 2, 2, PI / 180.0).unwrap();
    assert!(
        (grid - 0.20699909).abs() < 1e-6,
        "grid anchor missed: {grid}"
    );
    assert_eq!(format!("{grid:.4}"), "0.2070");
    assert!(
        r.q >= grid - 1e-6,
        "optimizer below its own grid: {} < {}",
        r.q,
        grid
    );
    assert!(
        r.q - grid < 1e-3,
        "grid too far below the optimizer: {grid} vs {}",
        r.q
    );
    println!(
        "ACCEPT ch-row: PASS (Q = {:.5}, theta/pi = {:.4}, lambda = {:.5}, 1-degree grid = {:.5})",
        r.q,
        r.theta_max / PI,
        lambda,
        grid
    );
}

#[test]
fn accept_validity_suite() {
    let start = Instant::now();
    let one = rat(1);
    let mut names: Vec<String> = Vec::new();
    let mut exprs = vec![
        ("I2222".to_string(), BellExpression::builtin(Builtin::I2222)),
        (
            "I3322_SYM".to_string(),
            BellExpression::builtin(Builtin::I3322Sym),
        ),
        ("I5322".to_string(), BellExpression::builtin(Builtin::I5322)),
    ];
    for k in 2..=6 {
        exprs.push((format!("I{k}{k}"), BellExpression::gen_ikk(k).unwrap()));
    }
    for (name, e) in &exprs {
        let (v, _) = vertex_max(e, &one, &one).unwrap();
        assert_eq!(v, rat(0), "{name} has vertex max {v}");
        assert_eq!(brute_vertex_max(e), rat(0), "{name} fails the brute oracle");
        names.push(name.clone());
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs() < 10, "took {elapsed:?}");
    println!(
        "ACCEPT validity: PASS (vertex max exactly 0 for {} in {:?})",
        names.join(", "),
        elapsed
    );
}

#[test]
fn accept_proof_suite() {
    // The 2x2 inequality: depth-1 certificate with the printed structure
    // (split on y_2 with pivot x_1 - x_2, two positivity-term leaves).
    let i22 = BellExpression::builtin(Builtin::I2222);
    let cert = search(&i22, default_depth(&i22)).unwrap().unwrap();
    verify(&i22, &cert).unwrap();
    assert_eq!(cert.depth(), 1);
    let (party, index, pivot) = cert.first_split().unwrap();
    assert_eq!((party, index), (Party::Y, 1));
    assert_eq!(pivot, vec![rat(1), rat(-1)].as_slice());
    match &cert {
        ProofCertificate::Split { hi, lo, .. } => {
            for leaf in [hi.as_ref(), lo.as_ref()] {
                match leaf {
                    ProofCertificate::Leaf { terms } => {
                        assert_eq!(terms.len(), 2);
                        let kinds: Vec<PositivityKind> = terms.iter().map(|t| t.kind).collect();
                        assert!(kinds.contains(&PositivityKind::XmaY));
                        assert!(kinds.contains(&PositivityKind::XYmb));
                    }
                    _ => panic!("expected a leaf"),
                }
            }
        }
        _ => panic!("expected a split"),
    }

    // Chain members k = 3, 4.
    for k in [3usize, 4] {
        let e = BellExpression::gen_ikk(k).unwrap();
        let cert = search(&e, 2 * k).unwrap().expect("chain member provable");
        verify(&e, &cert).unwrap();
    }

    // The 5x3 inequality: provable with the first pivot on the x_4 column
    // (coefficients 1, 0, -1 over y).
    let i5322 = BellExpression::builtin(Builtin::I5322);
    let cert = search(&i5322, default_depth(&i5322)).unwrap().unwrap();
    verify(&i5322, &cert).unwrap();
    let (party, index, pivot) = cert.first_split().unwrap();
    assert_eq!((party, index), (Party::X, 3));
    assert_eq!(pivot, vec![rat(1), rat(0), rat(-1)].as_slice());

    // The sign-flipped invalid 2x2 variant has no certificate.
    let flipped =
        BellExpression::from_ints(&[&[1, 1], &[1, 1]], &[-1, 0], &[-1, 0], 0, Form::Algebraic);
    assert!(search(&flipped, 8).unwrap().is_none());

    // Soundness cross-check on 200 random valid inequalities up to 4x4:
    // every certificate that search returns must verify, and vertex
    // enumeration must confirm validity of every input.
    let one = rat(1);
    let mut rng = ChaCha8Rng::seed_from_u64(777);
    let mut found = 0usize;
    let mut tested = 0usize;
    while tested < 200 {
        let m = rng.gen_range(2..=4);
        let n = rng.gen_range(2..=4);
        let e = match tested % 5 {
            // Random non-negative combinations of positivity generators.
            0..=2 => {
                let mut joint = vec![vec![rat(0); n]; m];
                let mut marg_x = vec![rat(0); m];
                let mut marg_y = vec![rat(0); n];
                for i in 0..m {
                    for j in 0..n {
                        let c_neg = rng.gen_range(0..=2);
                        let c_xymb = rng.gen_range(0..=2);
                        let c_xmay = rng.gen_range(0..=2);
                        joint[i][j] += rat(c_xymb + c_xmay - c_neg);
                        marg_x[i] -= rat(c_xymb);
                        marg_y[j] -= rat(c_xmay);
                    }
                }
                BellExpression::new(joint, marg_x, marg_y, rat(0), Form::Algebraic).unwrap()
            }
            // Relabeled chain members.
            3 => {
                let k = rng.gen_range(2..=4);
                let mut px: Vec<usize> = (0..k).collect();
                let mut py: Vec<usize> = (0..k).collect();
                px.shuffle(&mut rng);
                py.shuffle(&mut rng);
                BellExpression::gen_ikk(k)
                    .unwrap()
                    .relabel(&px, &py)
                    .unwrap()
            }
            // Random expressions shifted to a tight local bound of zero.
            _ => {
                let joint = (0..m)
                    .map(|_| (0..n).map(|_| rat(rng.gen_range(-2..=2))).collect())
                    .collect();
                let marg_x = (0..m).map(|_| rat(rng.gen_range(-2..=0))).collect();
                let marg_y = (0..n).map(|_| rat(rng.gen_range(-2..=0))).collect();
                let e =
                    BellExpression::new(joint, marg_x, marg_y, rat(0), Form::Algebraic).unwrap();
                let (vm, _) = vertex_max(&e, &one, &one).unwrap();
                BellExpression::new(
                    (0..m)
                        .map(|i| (0..n).map(|j| e.joint(i, j).clone()).collect())
                        .collect(),
                    (0..m).map(|i| e.marg(Party::X, i).clone()).collect(),
                    (0..n).map(|j| e.marg(Party::Y, j).clone()).collect(),
                    -vm,
                    Form::Algebraic,
                )
                .unwrap()
            }
        };
        let (vm, _) = vertex_max(&e, &one, &one).unwrap();
        assert!(vm <= rat(0), "generated inequality must be valid");
        if let Some(cert) = search(&e, e.m() + e.n()).unwrap() {
            verify(&e, &cert).unwrap();
            found += 1;
        }
        tested += 1;
    }
    assert!(found >= 120, "only {found} of {tested} searches closed");
    println!(
        "ACCEPT proof: PASS (printed 2x2 structure, chain k=3,4, 5x3 first pivot (1,0,-1), \
         invalid variant unprovable, {found}/{tested} random certificates verified)"
    );
}

#[test]
fn accept_rearrangement_chains() {
    let mut rng = ChaCha8Rng::seed_from_u64(778);
    for _ in 0..100_000 {
        let a = rng.gen_range(0.5..2.0);
        let b = rng.gen_range(0.5..2.0);
        let p2 = BoxPoint::new(
            (0..2).map(|_| rng.gen_range(0.0..=a)).collect(),
            (0..2).map(|_| rng.gen_range(0.0..=b)).collect(),
            a,
            b,
        )
        .unwrap();
        let (i2, i20) = rearrangement_bounds(RearrangeKind::K2, &p2).unwrap();
        assert!(i2 <= i20 + 1e-12);
        assert!(i20 <= 1e-12);
        assert!((i20 - i2_zero_theta_form(&p2).unwrap()).abs() <= 1e-12);

        let p3 = BoxPoint::new(
            (0..3).map(|_| rng.gen_range(0.0..=a)).collect(),
            (0..3).map(|_| rng.gen_range(0.0..=b)).collect(),
            a,
            b,
        )
        .unwrap();
        let (i3, i30) = rearrangement_bounds(RearrangeKind::K3, &p3).unwrap();
        assert!(i3 <= i30 + 1e-12);
        assert!(i30 <= 1e-12);
    }
    println!("ACCEPT rearrangement: PASS (100000 random points, both chains, slack <= 1e-12)");
}

#[test]
fn accept_lhv_jensen_chain() {
    let ch = BellExpression::builtin(Builtin::ChProb);
    for t in 0..10_000u64 {
        let model = sample_lhv(2, 2, 1 + (t % 6) as usize, 331_000 + t);
        let value = lhv_value(&ch, &model).unwrap();
        let e = model.joint(0, 0) - model.joint(0, 1) - model.joint(1, 0) + model.joint(1, 1);
        let bound = -(e + e.abs()) / 2.0;
        assert!(value <= bound + 1e-12);
        assert!(bound <= 1e-12);
    }
    println!("ACCEPT lhv-jensen: PASS (10000 random finite models, slack <= 1e-12)");
}

#[test]
fn accept_quantum_sanity() {
    use num::complex::Complex64;
    use std::f64::consts::FRAC_PI_2;
    let mut rng = ChaCha8Rng::seed_from_u64(779);
    let valid_probs = [
        BellExpression::builtin(Builtin::ChProb),
        BellExpression::builtin(Builtin::I3322Sym)
            .to_probability_form()
            .unwrap(),
    ];
    for t in 0..1000 {
        let mk = |rng: &mut ChaCha8Rng| {
            Projector::new(rng.gen_range(0.0..PI), rng.gen_range(0.0..2.0 * PI))
        };
        let k = 2 + (t % 2);
        let model = QuantumModel::new(
            rng.gen_range(0.0..FRAC_PI_2),
            (0..k).map(|_| mk(&mut rng)).collect(),
            (0..k).map(|_| mk(&mut rng)).collect(),
            rng.gen_range(0.0..=1.0),
        )
        .unwrap();

        // Projector algebra.
        for p in model.proj_x.iter().chain(&model.proj_y) {
            let m = p.matrix();
            for a in 0..2 {
                for b in 0..2 {
                    let mm = (0..2).map(|c| m[a][c] * m[c][b]).sum::<Complex64>();
                    assert!((mm - m[a][b]).norm() < 1e-12);
                    assert!((m[a][b] - m[b][a].conj()).norm() < 1e-12);
                }
            }
        }

        // Marginal consistency and monotonicity.
        let table = probabilities(&model);
        for i in 0..model.m() {
            for j in 0..model.n() {
                let mut comp = model.clone();
                comp.proj_y[j] = comp.proj_y[j].complement();
                let tc = probabilities(&comp);
                assert!((table.pxy[i][j] + tc.pxy[i][j] - table.px[i]).abs() < 1e-12);
                assert!(table.pxy[i][j] <= table.px[i].min(table.py[j]) + 1e-12);
            }
        }

        // Affinity in the noise weight.
        let expr = &valid_probs[(k - 2) as usize];
        let v1 = quantum_value(expr, &model.with_noise(1.0).unwrap()).unwrap();
        let v0 = quantum_value(expr, &model.with_noise(0.0).unwrap()).unwrap();
        for _ in 0..10 {
            let l = rng.gen_range(0.0..=1.0);
            let v = quantum_value(expr, &model.with_noise(l).unwrap()).unwrap();
            assert!((v - (l * v1 + (1.0 - l) * v0)).abs() < 1e-12);
        }

        // Product states never violate a valid inequality.
        let mut sep = model.clone();
        sep.theta = if rng.gen() { 0.0 } else { FRAC_PI_2 };
        assert!(quantum_value(expr, &sep).unwrap() <= 1e-9);
    }
    println!(
        "ACCEPT quantum-sanity: PASS (1000 random models: projector algebra, marginals, \
         monotonicity, noise affinity, separable bound)"
    );
}
