//! Brute-force reference implementations shared by the integration tests.
//! They recompute everything from definitions and share no code with the
//! library beyond its data types.
#![allow(dead_code, clippy::needless_range_loop)]

use randsel::lp::LinearProgram;
use randsel::{Dataset, Labels};

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
pub fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for r in (col + 1)..n {
            let f = a[r][col] / a[col][col];
            for c in col..n {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = ((r + 1)..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Some(x)
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

pub fn subsets(items: &[usize], k: usize) -> Vec<Vec<usize>> {
    combinations(items.len(), k).into_iter().map(|idx| idx.into_iter().map(|i| items[i]).collect()).collect()
}

/// Optimum of a bounded LP found by visiting every basic solution: each
/// choice of `n` active constraints (all equalities included) that is
/// nonsingular and feasible. Returns the best objective and every vertex
/// attaining it (within 1e-9).
pub fn vertex_enumeration(lp: &LinearProgram) -> Option<(f64, Vec<Vec<f64>>)> {
    let n = lp.objective.len();
    // Candidate active constraints: (row, rhs).
    let mut candidates: Vec<(Vec<f64>, f64)> = lp.a_ub.iter().cloned().zip(lp.b_ub.iter().copied()).collect();
    for (j, &(lo, hi)) in lp.bounds.iter().enumerate() {
        let unit = |v: f64| {
            let mut r = vec![0.0; n];
            r[j] = 1.0;
            (r, v)
        };
        if lo.is_finite() {
            candidates.push(unit(lo));
        }
        if hi.is_finite() {
            candidates.push(unit(hi));
        }
    }
    let eqs: Vec<(Vec<f64>, f64)> = lp.a_eq.iter().cloned().zip(lp.b_eq.iter().copied()).collect();
    if eqs.len() > n {
        return None;
    }
    let mut best: Option<(f64, Vec<Vec<f64>>)> = None;
    for choice in combinations(candidates.len(), n - eqs.len()) {
        let rows: Vec<&(Vec<f64>, f64)> = eqs.iter().chain(choice.iter().map(|&i| &candidates[i])).collect();
        let a = rows.iter().map(|(r, _)| r.clone()).collect();
        let b = rows.iter().map(|(_, v)| *v).collect();
        let Some(x) = gauss_solve(a, b) else { continue };
        if lp.max_violation(&x) > 1e-9 {
            continue;
        }
        let obj = lp.objective_at(&x);
        match &mut best {
            Some((b, _)) if obj > *b + 1e-9 => {}
            Some((b, vs)) if (obj - *b).abs() <= 1e-9 => vs.push(x),
            _ => best = Some((obj, vec![x])),
        }
    }
    best
}

/// `exp(-sigma |a - b|^2)` entry by entry.
pub fn gaussian_entry(a: &[f64], b: &[f64], sigma: f64) -> f64 {
    let mut d = 0.0;
    for k in 0..a.len() {
        d += (a[k] - b[k]).powi(2);
    }
    (-sigma * d).exp()
}

/// `H K H` by explicit matrix products.
pub fn center_by_products(k: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let m = k.len();
    let h: Vec<Vec<f64>> =
        (0..m).map(|i| (0..m).map(|j| f64::from(u8::from(i == j)) - 1.0 / m as f64).collect()).collect();
    let mul = |a: &Vec<Vec<f64>>, b: &Vec<Vec<f64>>| -> Vec<Vec<f64>> {
        (0..m).map(|i| (0..m).map(|j| (0..m).map(|l| a[i][l] * b[l][j]).sum()).collect()).collect()
    };
    mul(&mul(&h, &k.to_vec()), &h)
}

pub fn frobenius(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    let mut s = 0.0;
    for i in 0..a.len() {
        for j in 0..a.len() {
            s += a[i][j] * b[i][j];
        }
    }
    s
}

pub fn label_matrix(y: &Labels, rows: &[usize]) -> Vec<Vec<f64>> {
    rows.iter()
        .map(|&i| {
            rows.iter()
                .map(|&j| match y {
                    Labels::Binary { values } => values[i] * values[j],
                    _ => f64::from(u8::from(y.class_of(i) == y.class_of(j))),
                })
                .collect()
        })
        .collect()
}

/// Centered alignment of the Gaussian kernel on `rows` x `features` with the
/// label kernel, using bandwidth `sigma0 / |features|`.
pub fn alignment_oracle(data: &Dataset, rows: &[usize], features: &[usize], sigma0: f64) -> f64 {
    let sigma = sigma0 / features.len() as f64;
    let point = |i: usize| -> Vec<f64> { features.iter().map(|&f| data.x[[i, f]]).collect() };
    let k: Vec<Vec<f64>> =
        rows.iter().map(|&i| rows.iter().map(|&j| gaussian_entry(&point(i), &point(j), sigma)).collect()).collect();
    let cx = center_by_products(&k);
    let cy = center_by_products(&label_matrix(&data.y, rows));
    frobenius(&cx, &cy) / (frobenius(&cx, &cx).sqrt() * frobenius(&cy, &cy).sqrt())
}

/// Exact contributions over every BASE (size n/2) and PLUS (size n/2 + 1)
/// subset of `0..n`, with all rows in every task.
pub fn contribution_oracle(data: &Dataset, sigma0: f64) -> Vec<f64> {
    let n = data.n_features();
    let rows: Vec<usize> = (0..data.n_samples()).collect();
    let all: Vec<usize> = (0..n).collect();
    let base: Vec<(Vec<usize>, f64)> = subsets(&all, n / 2)
        .into_iter()
        .map(|s| {
            let a = alignment_oracle(data, &rows, &s, sigma0);
            (s, a)
        })
        .collect();
    let plus: Vec<(Vec<usize>, f64)> = subsets(&all, n / 2 + 1)
        .into_iter()
        .map(|s| {
            let a = alignment_oracle(data, &rows, &s, sigma0);
            (s, a)
        })
        .collect();
    let mean = |xs: Vec<f64>| xs.iter().sum::<f64>() / xs.len() as f64;
    (0..n)
        .map(|j| {
            let p = mean(plus.iter().filter(|(s, _)| s.contains(&j)).map(|(_, a)| *a).collect());
            let b = mean(base.iter().filter(|(s, _)| !s.contains(&j)).map(|(_, a)| *a).collect());
            p - b
        })
        .collect()
}

/// Active-set sizes produced by culling `max(1, floor(z n))` per step until
/// two remain.
pub fn cull_sequence(mut n: usize, z: f64) -> Vec<usize> {
    let mut seq = vec![n];
    while n > 2 {
        let k = ((z * n as f64).floor() as usize).max(1).min(n - 2);
        n -= k;
        seq.push(n);
    }
    seq
}

/// A fixed 12-sample, 4-feature binary dataset.
pub fn twelve_sample_dataset() -> Dataset {
    let x = ndarray::array![
        [0.9, -0.3, 0.2, 1.1],
        [-0.8, 0.4, -0.5, 0.3],
        [0.7, 0.6, -1.0, -0.2],
        [-1.1, -0.7, 0.8, 0.5],
        [0.2, 1.2, 0.1, -0.9],
        [-0.4, -1.0, -0.3, 0.7],
        [1.3, 0.1, 0.6, -0.4],
        [-0.6, 0.9, 0.4, 1.0],
        [0.5, -0.8, -0.7, -1.2],
        [-0.2, 0.2, 1.1, 0.0],
        [0.0, -0.5, -0.9, 0.6],
        [-1.3, 0.7, 0.3, -0.6],
    ];
    let y = Labels::binary(vec![1.0, -1.0, 1.0, -1.0, 1.0, -1.0, 1.0, -1.0, 1.0, 1.0, -1.0, -1.0]).unwrap();
    Dataset::new(x, y).unwrap()
}
