//! Independent oracles and generators shared by the integration tests.
#![allow(dead_code)]

use nalgebra::DMatrix;
use nonlocal_volume::lp::LpProblem;
use nonlocal_volume::polytope::{Behavior, Scenario};
use nonlocal_volume::quantum::{reck_unitary, ComplexMatrix};
use num_complex::Complex64;
use rand::Rng;

/// Largest of the eight CHSH expressions `s (E00 + E01 + E10 + E11 - 2 E_k)`,
/// with correlators read straight off the probability table.
pub fn chsh_oracle_max(b: &Behavior) -> f64 {
    let e = |x: usize, y: usize| {
        let mut v = 0.0;
        for a in 0..2 {
            for bb in 0..2 {
                let sign = if a == bb { 1.0 } else { -1.0 };
                v += sign * b.get(x, y, a, bb);
            }
        }
        v
    };
    let es = [e(0, 0), e(0, 1), e(1, 0), e(1, 1)];
    let total: f64 = es.iter().sum();
    let mut best = f64::NEG_INFINITY;
    for ek in es {
        for s in [1.0, -1.0] {
            best = best.max(s * (total - 2.0 * ek));
        }
    }
    best
}

/// PR-type box `E_xy = (-1)^(xy + alpha x + beta y + gamma)`.
pub fn pr_variant(alpha: usize, beta: usize, gamma: usize) -> Behavior {
    let e = |x: usize, y: usize| {
        if (x * y + alpha * x + beta * y + gamma).is_multiple_of(2) {
            1.0
        } else {
            -1.0
        }
    };
    Behavior::from_correlators(&[vec![e(0, 0), e(0, 1)], vec![e(1, 0), e(1, 1)]]).unwrap()
}

/// Random no-signalling (2,2,2) behavior: a PR-type box with a uniform weight,
/// mixed with up to three deterministic strategies or white noise.
pub fn random_ns_behavior<R: Rng>(rng: &mut R) -> Behavior {
    let s = Scenario::symmetric(2, 2).unwrap();
    let pr = pr_variant(rng.random_range(0..2), rng.random_range(0..2), rng.random_range(0..2));
    let mut parts: Vec<Behavior> = vec![pr];
    for _ in 0..rng.random_range(1..=3) {
        if rng.random_bool(0.2) {
            parts.push(Behavior::uniform(s));
        } else {
            let a = [rng.random_range(0..2), rng.random_range(0..2)];
            let b = [rng.random_range(0..2), rng.random_range(0..2)];
            parts.push(Behavior::deterministic(s, &a, &b).unwrap());
        }
    }
    let w_pr: f64 = rng.random();
    let raw: Vec<f64> = (1..parts.len()).map(|_| -rng.random::<f64>().ln()).collect();
    let total: f64 = raw.iter().sum();
    let mut weighted: Vec<(f64, &Behavior)> = vec![(w_pr, &parts[0])];
    for (w, b) in raw.iter().zip(&parts[1..]) {
        weighted.push(((1.0 - w_pr) * w / total, b));
    }
    Behavior::mixture(&weighted).unwrap()
}

/// Random bounded LP `min c.z, A z = b, z >= 0` with full row rank. The first
/// row has positive coefficients, which bounds the feasible set. Most right-hand
/// sides come from a sparse nonnegative point (feasible, often degenerate).
pub fn random_bounded_lp<R: Rng>(rng: &mut R) -> LpProblem {
    loop {
        let m = rng.random_range(1..=3);
        let n = rng.random_range(m + 1..=6);
        let mut rows = vec![vec![0.0; n]; m];
        for (i, row) in rows.iter_mut().enumerate() {
            for a in row.iter_mut() {
                *a = if i == 0 {
                    rng.random_range(1..=5) as f64
                } else {
                    rng.random_range(-5..=5) as f64
                };
            }
        }
        let rank = DMatrix::from_fn(m, n, |i, j| rows[i][j]).rank(1e-9);
        if rank < m {
            continue;
        }
        let rhs: Vec<f64> = if rng.random_bool(0.75) {
            let z0: Vec<f64> = (0..n).map(|_| rng.random_range(0..=2) as f64).collect();
            rows.iter().map(|r| r.iter().zip(&z0).map(|(a, z)| a * z).sum()).collect()
        } else {
            (0..m)
                .map(|i| if i == 0 { rng.random_range(1..=10) } else { rng.random_range(-5..=10) } as f64)
                .collect()
        };
        let c: Vec<f64> = (0..n).map(|_| rng.random_range(-5..=5) as f64).collect();
        return LpProblem::from_rows(c, &rows, rhs).unwrap();
    }
}

/// Optimum by enumerating every basis of a full-row-rank bounded LP;
/// `None` if no basic solution is feasible.
pub fn vertex_enumeration_optimum(p: &LpProblem) -> Option<f64> {
    let (m, n) = (p.num_constraints(), p.num_vars());
    let mut best: Option<f64> = None;
    for subset in combinations(n, m) {
        let basis = DMatrix::from_fn(m, m, |i, k| p.coefficient(i, subset[k]));
        let Some(inv) = basis.clone().try_inverse() else { continue };
        if basis.determinant().abs() < 1e-9 {
            continue;
        }
        let xb = inv * nalgebra::DVector::from_column_slice(p.rhs());
        if xb.iter().any(|&v| v < -1e-9) {
            continue;
        }
        let value: f64 = subset.iter().zip(xb.iter()).map(|(&j, &v)| p.objective()[j] * v).sum();
        best = Some(best.map_or(value, |b: f64| b.min(value)));
    }
    best
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}

fn phase(t: f64) -> Complex64 {
    Complex64::from_polar(1.0, t)
}

/// Generic element of U(2).
pub fn random_qubit_unitary<R: Rng>(rng: &mut R) -> ComplexMatrix {
    let tau = std::f64::consts::TAU;
    let (t, a, b, g): (f64, f64, f64, f64) = (
        rng.random::<f64>() * tau,
        rng.random::<f64>() * tau,
        rng.random::<f64>() * tau,
        rng.random::<f64>() * tau,
    );
    ComplexMatrix::from_row_major(
        2,
        2,
        vec![
            phase(a) * t.cos(),
            -phase(b) * t.sin(),
            phase(g) * t.sin(),
            phase(b + g - a) * t.cos(),
        ],
    )
    .unwrap()
}

/// Reck unitary with random angles, framed by random diagonal phases.
pub fn random_qutrit_unitary<R: Rng>(rng: &mut R) -> ComplexMatrix {
    let tau = std::f64::consts::TAU;
    let angles: Vec<f64> = (0..6).map(|_| rng.random::<f64>() * tau).collect();
    let d = |rng: &mut R| {
        let p: Vec<Complex64> = (0..3).map(|_| phase(rng.random::<f64>() * tau)).collect();
        ComplexMatrix::diagonal(&p)
    };
    let left = d(rng);
    let right = d(rng);
    left.matmul(&reck_unitary(&angles).unwrap()).unwrap().matmul(&right).unwrap()
}
