//! Oracles shared by the property tests and the acceptance suite.
#![allow(dead_code)]

use nkdcd::datagen::Lorenz96Integrator;
use nkdcd::loss::{j1_on_tape, Reduction};
use nkdcd::model::{Activation, LagStack, NkdcdModel};
use nkdcd::numgrad::{Matrix, Tape};
use nkdcd::optim::ParamGrads;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct Instance {
    pub model: NkdcdModel,
    pub x: Matrix,
    pub targets: Vec<usize>,
    pub recon_rows: Vec<usize>,
    pub reduction: Reduction,
}

pub fn instance(seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(1..=3);
    let lift = rng.random_range(1..=3);
    let hidden = 2 * rng.random_range(1..=3);
    let max_lag = rng.random_range(1..=3);
    let t = max_lag + rng.random_range(2..=6);
    let activation = if rng.random_bool(0.7) { Activation::LeakyRelu } else { Activation::Linear };
    let use_bias = rng.random_bool(0.7);
    let mut model = NkdcdModel::random(n, lift, hidden, max_lag, activation, use_bias, 0.5, &mut rng).unwrap();
    for p in model.encoder.0.layers.iter_mut().chain(model.decoder.0.layers.iter_mut()) {
        if let Some(b) = &mut p.bias {
            b.data_mut().iter_mut().for_each(|v| *v = rng.random_range(-0.3..0.3));
        }
    }
    let x = Matrix::from_fn(t, n, |_, _| rng.random_range(-1.5..1.5));
    let targets: Vec<usize> = (max_lag..t).filter(|_| rng.random_bool(0.7)).collect();
    let targets = if targets.is_empty() { vec![t - 1] } else { targets };
    let recon_rows: Vec<usize> = (0..t).filter(|_| rng.random_bool(0.7)).collect();
    let reduction = if rng.random_bool(0.5) { Reduction::Mean } else { Reduction::Sum };
    Instance {
        model,
        x,
        targets,
        recon_rows,
        reduction,
    }
}

pub fn objective(inst: &Instance, model: &NkdcdModel) -> f64 {
    let mut tape = Tape::new();
    let vars = model.register(&mut tape);
    let bl = j1_on_tape(&mut tape, model, &vars, &inst.x, &inst.targets, &inst.recon_rows, inst.reduction).unwrap();
    tape.value(bl.objective).get(0, 0)
}

pub fn analytic(inst: &Instance) -> Vec<f64> {
    let mut tape = Tape::new();
    let vars = inst.model.register(&mut tape);
    let bl = j1_on_tape(
        &mut tape,
        &inst.model,
        &vars,
        &inst.x,
        &inst.targets,
        &inst.recon_rows,
        inst.reduction,
    )
    .unwrap();
    let g = tape.backward(bl.objective).unwrap();
    let pg = ParamGrads::collect(&tape, &vars, g);
    pg.encoder
        .iter()
        .chain(&pg.decoder)
        .chain(&pg.lags)
        .flat_map(|m| m.data().to_vec())
        .collect()
}

pub fn param_lens(model: &NkdcdModel) -> Vec<usize> {
    let mut out = Vec::new();
    for net in [&model.encoder.0, &model.decoder.0] {
        for layer in &net.layers {
            out.push(layer.weight.len());
            if let Some(b) = &layer.bias {
                out.push(b.len());
            }
        }
    }
    out.extend(model.lags.lags().iter().map(Matrix::len));
    out
}

pub fn param_mut(model: &mut NkdcdModel, mut index: usize) -> &mut Matrix {
    for net in [&mut model.encoder.0, &mut model.decoder.0] {
        for layer in net.layers.iter_mut() {
            if index == 0 {
                return &mut layer.weight;
            }
            index -= 1;
            if let Some(b) = layer.bias.as_mut() {
                if index == 0 {
                    return b;
                }
                index -= 1;
            }
        }
    }
    model.lags.lag_mut(index)
}

pub fn finite_difference(inst: &Instance) -> Vec<f64> {
    let h = 1e-6;
    let mut model = inst.model.clone();
    let mut out = Vec::new();
    for (p, len) in param_lens(&model).into_iter().enumerate() {
        for k in 0..len {
            let orig = param_mut(&mut model, p).data()[k];
            param_mut(&mut model, p).data_mut()[k] = orig + h;
            let up = objective(inst, &model);
            param_mut(&mut model, p).data_mut()[k] = orig - h;
            let down = objective(inst, &model);
            param_mut(&mut model, p).data_mut()[k] = orig;
            out.push((up - down) / (2.0 * h));
        }
    }
    out
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

pub fn random_stack(n: usize, block: usize, max_lag: usize, seed: u64) -> LagStack {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = LagStack::zeros(n, block, max_lag).unwrap();
    for l in 0..max_lag {
        for i in 0..n {
            for j in 0..n {
                // Mix of tiny, moderate and exactly-zero blocks.
                let scale = [0.0, 0.05, 0.5, 2.0][rng.random_range(0..4)];
                let b = Matrix::from_fn(block, block, |_, _| scale * rng.random_range(-1.0..1.0));
                s.set_block(l, i, j, &b).unwrap();
            }
        }
    }
    s
}

/// Blocks of pair `(i, j)` flattened lag by lag.
pub fn pair(s: &LagStack, i: usize, j: usize) -> Vec<Vec<f64>> {
    (0..s.max_lag()).map(|l| s.block(l, i, j).data().to_vec()).collect()
}

pub fn shrink(group: &mut [f64], t: f64) {
    let g = norm(group);
    let f = if g > 0.0 { (1.0 - t / g).max(0.0) } else { 0.0 };
    group.iter_mut().for_each(|v| *v *= f);
}

pub fn oracle_ulg(blocks: &[Vec<f64>], t: f64) -> Vec<Vec<f64>> {
    let widths: Vec<usize> = blocks.iter().map(Vec::len).collect();
    let mut flat: Vec<f64> = blocks.concat();
    shrink(&mut flat, t);
    let mut out = Vec::new();
    let mut at = 0;
    for w in widths {
        out.push(flat[at..at + w].to_vec());
        at += w;
    }
    out
}

pub fn oracle_ilg(blocks: &[Vec<f64>], t: f64) -> Vec<Vec<f64>> {
    blocks
        .iter()
        .map(|b| {
            let mut b = b.clone();
            shrink(&mut b, t);
            b
        })
        .collect()
}

pub fn oracle_hlg(blocks: &[Vec<f64>], t: f64) -> Vec<Vec<f64>> {
    let mut cur = blocks.to_vec();
    for start in 0..cur.len() {
        let shrunk = oracle_ulg(&cur[start..], t);
        cur.splice(start.., shrunk);
    }
    cur
}

pub fn close(a: &[Vec<f64>], b: &[Vec<f64>]) -> bool {
    a.iter().flatten().zip(b.iter().flatten()).all(|(x, y)| (x - y).abs() <= 1e-12 * (1.0 + y.abs()))
}

pub fn distance(a: &LagStack, b: &LagStack) -> f64 {
    a.lags()
        .iter()
        .zip(b.lags())
        .map(|(x, y)| x.sub(y).unwrap().squared_norm())
        .sum::<f64>()
        .sqrt()
}

pub fn total_norm(s: &LagStack) -> f64 {
    s.lags().iter().map(Matrix::squared_norm).sum::<f64>().sqrt()
}

pub fn mann_whitney(pairs: &[(f64, bool)]) -> f64 {
    let pos: Vec<f64> = pairs.iter().filter(|p| p.1).map(|p| p.0).collect();
    let neg: Vec<f64> = pairs.iter().filter(|p| !p.1).map(|p| p.0).collect();
    let mut wins = 0.0;
    for p in &pos {
        for q in &neg {
            wins += if p > q {
                1.0
            } else if p == q {
                0.5
            } else {
                0.0
            };
        }
    }
    wins / (pos.len() * neg.len()) as f64
}

pub fn random_pairs(seed: u64) -> Vec<(f64, bool)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let len = rng.random_range(2..80);
    let levels = rng.random_range(2..30);
    let mut pairs: Vec<(f64, bool)> = (0..len)
        .map(|_| {
            let label = rng.random_bool(0.4);
            let s = rng.random_range(0..levels) as f64 / levels as f64 + if label { 0.2 } else { 0.0 };
            (s, label)
        })
        .collect();
    pairs[0].1 = true;
    pairs[1].1 = false;
    pairs
}

pub fn halving_gap(forcing: f64, substeps: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let start: Vec<f64> = (0..20).map(|_| forcing + rng.random_range(-0.5..0.5)).collect();
    let run = |substeps: usize| {
        let mut x = start.clone();
        let mut integ = Lorenz96Integrator::new(20, forcing).unwrap();
        integ.sample(&mut x, 0.1, substeps, 100).unwrap()
    };
    let (coarse, fine) = (run(substeps), run(2 * substeps));
    coarse
        .iter()
        .flatten()
        .zip(fine.iter().flatten())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
}

