mod common;

use common::*;

use nkdcd::loss::{j1, j1_on_tape, Reduction};
use nkdcd::numgrad::{Matrix, Tape};

#[test]
fn reverse_mode_matches_central_differences() {
    let mut worst: f64 = 0.0;
    for seed in 0..100 {
        let inst = instance(seed);
        let a = analytic(&inst);
        let f = finite_difference(&inst);
        assert_eq!(a.len(), f.len());
        let diff: Vec<f64> = a.iter().zip(&f).map(|(x, y)| x - y).collect();
        let rel = norm(&diff) / norm(&f).max(1e-8);
        worst = worst.max(rel);
        assert!(rel < 1e-4, "seed {seed}: relative error {rel:e}");
    }
    println!("worst relative gradient error {worst:e}");
}

#[test]
fn full_batch_tape_matches_forward_pass() {
    for seed in 200..230 {
        let mut inst = instance(seed);
        let t = inst.x.rows();
        inst.targets = (inst.model.max_lag()..t).collect();
        inst.recon_rows = (0..t).collect();
        inst.reduction = Reduction::Sum;
        let mut tape = Tape::new();
        let vars = inst.model.register(&mut tape);
        let bl = j1_on_tape(&mut tape, &inst.model, &vars, &inst.x, &inst.targets, &inst.recon_rows, Reduction::Sum)
            .unwrap();
        let on_tape = bl.breakdown(&tape);
        let direct = j1(&inst.x, &inst.model.forward_all(&inst.x).unwrap()).unwrap();
        for (a, b) in [
            (on_tape.recon_autoencoder, direct.recon_autoencoder),
            (on_tape.j1(), direct.j1()),
        ] {
            assert!((a - b).abs() <= 1e-10 * (1.0 + b.abs()), "seed {seed}: {a} vs {b}");
        }
        assert!((tape.value(bl.objective).get(0, 0) - direct.j1()).abs() <= 1e-10 * (1.0 + direct.j1()));
    }
}

#[test]
fn mean_reduction_divides_each_term_by_its_entry_count() {
    let inst = instance(77);
    let model = &inst.model;
    let (n, nn) = (inst.x.cols() as f64, (inst.x.cols() * model.lift_dim()) as f64);
    let mut tape = Tape::new();
    let vars = model.register(&mut tape);
    let bl = j1_on_tape(&mut tape, model, &vars, &inst.x, &inst.targets, &inst.recon_rows, Reduction::Mean).unwrap();
    let b = bl.breakdown(&tape);
    let p = inst.targets.len() as f64;
    let expected = b.recon_autoencoder / (inst.recon_rows.len() as f64 * n)
        + b.lifted_var / (p * nn)
        + b.nar_base / (p * n)
        + b.nar_autoencoded / (p * n);
    let got = tape.value(bl.objective).get(0, 0);
    assert!((got - expected).abs() <= 1e-12 * (1.0 + expected.abs()));
}

#[test]
fn relabelling_series_permutes_predictions() {
    let inst = instance(5);
    let n = inst.x.cols();
    let perm: Vec<usize> = (0..n).rev().collect();
    let px = Matrix::from_fn(inst.x.rows(), n, |r, c| inst.x.get(r, perm[c]));
    let mut pm = inst.model.clone();
    for l in 0..pm.max_lag() {
        for i in 0..n {
            for j in 0..n {
                let b = inst.model.lags.block(l, perm[i], perm[j]);
                pm.lags.set_block(l, i, j, &b).unwrap();
            }
        }
    }
    let a = inst.model.forward_all(&inst.x).unwrap().pred;
    let b = pm.forward_all(&px).unwrap().pred;
    for r in 0..a.rows() {
        for c in 0..n {
            assert!((a.get(r, perm[c]) - b.get(r, c)).abs() < 1e-12);
        }
    }
}
