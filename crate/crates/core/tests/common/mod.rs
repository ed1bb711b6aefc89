//! Independent reference implementations for the integration tests.
//!
//! Nothing here calls into the library's numerics: products are plain loops,
//! and least squares goes through Gauss-Jordan elimination on the normal
//! equations instead of an SVD.

#![allow(dead_code)]

use hanabi_instruct::engine::{Action, GameConfig, GameState, NUM_ACTIONS};
use hanabi_instruct::factors::NUM_FACTORS;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Mat = Vec<Vec<f64>>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `y_i = Σ_f H[f][i] w[f]` one multiply-add at a time.
pub fn naive_rewards(h: &[[f64; NUM_ACTIONS]; NUM_FACTORS], w: &[f64; NUM_FACTORS]) -> [f64; NUM_ACTIONS] {
    let mut y = [0.0; NUM_ACTIONS];
    for i in 0..NUM_ACTIONS {
        let mut acc = 0.0;
        for f in 0..NUM_FACTORS {
            acc += h[f][i] * w[f];
        }
        y[i] = acc;
    }
    y
}

pub fn transpose(a: &Mat) -> Mat {
    if a.is_empty() {
        return Vec::new();
    }
    (0..a[0].len()).map(|j| a.iter().map(|row| row[j]).collect()).collect()
}

pub fn matmul(a: &Mat, b: &Mat) -> Mat {
    let n = a.len();
    let k = b.len();
    let m = if k == 0 { 0 } else { b[0].len() };
    let mut c = vec![vec![0.0; m]; n];
    for i in 0..n {
        for j in 0..m {
            let mut acc = 0.0;
            for l in 0..k {
                acc += a[i][l] * b[l][j];
            }
            c[i][j] = acc;
        }
    }
    c
}

pub fn matvec(a: &Mat, x: &[f64]) -> Vec<f64> {
    a.iter()
        .map(|row| row.iter().zip(x).map(|(p, q)| p * q).sum())
        .collect()
}

pub fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

/// Reduced row echelon form of `[m | rhs]`; returns the pivot columns.
fn rref(m: &mut Mat, rhs: &mut Vec<f64>, tol: f64) -> Vec<usize> {
    let rows = m.len();
    let cols = if rows == 0 { 0 } else { m[0].len() };
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let (best, val) = (r..rows)
            .map(|i| (i, m[i][c].abs()))
            .fold((r, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if val <= tol {
            continue;
        }
        m.swap(r, best);
        rhs.swap(r, best);
        let p = m[r][c];
        for j in 0..cols {
            m[r][j] /= p;
        }
        rhs[r] /= p;
        for i in 0..rows {
            if i != r && m[i][c] != 0.0 {
                let factor = m[i][c];
                for j in 0..cols {
                    m[i][j] -= factor * m[r][j];
                }
                rhs[i] -= factor * rhs[r];
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

/// Minimum-norm least-squares solution of `a x = b`.
///
/// Solves `AᵀA x = Aᵀb` by Gauss-Jordan, then removes the component of the
/// particular solution lying in the null space of `AᵀA`.
pub fn min_norm_oracle(a: &Mat, b: &[f64]) -> Vec<f64> {
    let at = transpose(a);
    let mut ata = matmul(&at, a);
    let mut atb = matvec(&at, b);
    let n = ata.len();
    let scale = ata.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    let pivots = rref(&mut ata, &mut atb, scale * 1e-10);
    let mut x = vec![0.0; n];
    for (r, &c) in pivots.iter().enumerate() {
        x[c] = atb[r];
    }
    // Null space basis: one vector per free column.
    let free: Vec<usize> = (0..n).filter(|c| !pivots.contains(c)).collect();
    let mut basis: Vec<Vec<f64>> = free
        .iter()
        .map(|&fc| {
            let mut v = vec![0.0; n];
            v[fc] = 1.0;
            for (r, &pc) in pivots.iter().enumerate() {
                v[pc] = -ata[r][fc];
            }
            v
        })
        .collect();
    // Gram-Schmidt, then project x onto the orthogonal complement.
    for i in 0..basis.len() {
        for j in 0..i {
            let d = dot(&basis[i], &basis[j]);
            let bj = basis[j].clone();
            for (v, q) in basis[i].iter_mut().zip(&bj) {
                *v -= d * q;
            }
        }
        let nv = norm(&basis[i]);
        for v in basis[i].iter_mut() {
            *v /= nv;
        }
    }
    for q in &basis {
        let d = dot(&x, q);
        for (v, qv) in x.iter_mut().zip(q) {
            *v -= d * qv;
        }
    }
    x
}

/// Null-space basis of `a` from the same elimination (not orthonormalized).
pub fn null_space_oracle(a: &Mat) -> Vec<Vec<f64>> {
    let mut m = a.clone();
    let mut rhs = vec![0.0; m.len()];
    let n = if m.is_empty() { 0 } else { m[0].len() };
    let scale = m.iter().flatten().fold(0.0f64, |s, v| s.max(v.abs())).max(1.0);
    let pivots = rref(&mut m, &mut rhs, scale * 1e-10);
    (0..n)
        .filter(|c| !pivots.contains(c))
        .map(|fc| {
            let mut v = vec![0.0; n];
            v[fc] = 1.0;
            for (r, &pc) in pivots.iter().enumerate() {
                v[pc] = -m[r][fc];
            }
            v
        })
        .collect()
}

/// States visited by a uniformly random legal policy, including the terminal one.
pub fn random_game(seed: u64) -> Vec<GameState> {
    let mut r = rng(seed ^ 0x5eed);
    let mut state = GameState::new(GameConfig::with_seed(seed));
    let mut states = vec![state.clone()];
    while state.is_terminal().is_none() {
        let legal: Vec<usize> = state.legal_actions().unwrap().indices().collect();
        let a = *legal.choose(&mut r).unwrap();
        state = state.apply_action(Action::from_index(a).unwrap()).unwrap().0;
        states.push(state.clone());
    }
    states
}

/// Non-terminal states from random games, `per_game` evenly spaced picks each.
pub fn sample_states(count: usize, seed: u64) -> Vec<GameState> {
    let mut out = Vec::with_capacity(count);
    let mut g = 0u64;
    while out.len() < count {
        let states: Vec<GameState> = random_game(seed.wrapping_mul(1_000_003).wrapping_add(g))
            .into_iter()
            .filter(|s| s.is_terminal().is_none())
            .collect();
        g += 1;
        let step = (states.len() / 4).max(1);
        for s in states.into_iter().step_by(step) {
            if out.len() < count {
                out.push(s);
            }
        }
    }
    out
}

pub fn random_weights(r: &mut ChaCha8Rng, scale: f64) -> [f64; NUM_FACTORS] {
    std::array::from_fn(|_| r.random_range(-scale..scale))
}
