//! Brute-force reference computations at toy sizes. Each oracle avoids the
//! structural shortcut used by the main code path: optimizations search
//! explicit parameters, and the Motzkin oracle enumerates walks.

use std::collections::{BTreeMap, HashMap};

use nalgebra::{DMatrix, Matrix2, SVD};
use num_bigint::BigUint;

use crate::error::{Error, Result};
use crate::lattice::LatticeModel;

fn rot(t: f64) -> Matrix2<f64> {
    let (s, c) = t.sin_cos();
    Matrix2::new(c, -s, s, c)
}

/// Compass search maximizing `f` from `x0`, halving the step to `tol`.
fn pattern_max(f: &dyn Fn(&[f64]) -> f64, x0: &[f64], step: f64, tol: f64) -> (Vec<f64>, f64) {
    let mut x = x0.to_vec();
    let mut best = f(&x);
    let mut h = step;
    while h > tol {
        let mut improved = false;
        for i in 0..x.len() {
            for sign in [1.0, -1.0] {
                let mut y = x.clone();
                y[i] += sign * h;
                let v = f(&y);
                if v > best {
                    best = v;
                    x = y;
                    improved = true;
                }
            }
        }
        if !improved {
            h /= 2.0;
        }
    }
    (x, best)
}

/// Grid over the box then compass refinement from the best `starts` points.
fn grid_then_refine(f: &dyn Fn(&[f64]) -> f64, lo: &[f64], hi: &[f64], n: usize, starts: usize) -> f64 {
    let dim = lo.len();
    let mut pts: Vec<(f64, Vec<f64>)> = Vec::new();
    let total = n.pow(dim as u32);
    for idx in 0..total {
        let mut r = idx;
        let x: Vec<f64> = (0..dim)
            .map(|d| {
                let i = r % n;
                r /= n;
                lo[d] + (hi[d] - lo[d]) * i as f64 / (n - 1) as f64
            })
            .collect();
        pts.push((f(&x), x));
    }
    pts.sort_by(|a, b| b.0.total_cmp(&a.0));
    let step = (0..dim).map(|d| (hi[d] - lo[d]) / (n - 1) as f64).fold(0.0, f64::max);
    pts.iter()
        .take(starts)
        .map(|(_, x)| pattern_max(f, x, step, 1e-11).1)
        .fold(f64::NEG_INFINITY, f64::max)
}

fn qubit(p: [f64; 2]) -> Result<Matrix2<f64>> {
    if p.iter().any(|x| !(*x >= 0.0)) || ((p[0] + p[1]) - 1.0).abs() > 1e-12 {
        return Err(Error::invalid("qubit spectrum must be a probability pair"));
    }
    Ok(Matrix2::new(p[0].sqrt(), 0.0, 0.0, p[1].sqrt()))
}

/// `max |⟨φ| U ⊗ V |ψ⟩|` over real local rotations and reflections, for two
/// two-qubit states in Schmidt form.
pub fn lu_overlap_2x2(p: [f64; 2], q: [f64; 2]) -> Result<f64> {
    let (cp, cq) = (qubit(p)?, qubit(q)?);
    let flip = Matrix2::new(1.0, 0.0, 0.0, -1.0);
    let mut best: f64 = 0.0;
    for ra in [Matrix2::identity(), flip] {
        for rb in [Matrix2::identity(), flip] {
            // coefficient matrix transforms as U C V^T
            let f = |x: &[f64]| {
                let c = rot(x[0]) * ra * cp * (rot(x[1]) * rb).transpose();
                cq.component_mul(&c).sum().abs()
            };
            best = best.max(grid_then_refine(&f, &[0.0, 0.0], &[std::f64::consts::TAU; 2], 25, 4));
        }
    }
    Ok(best)
}

/// Best average overlap with `q` reachable by one two-outcome measurement
/// on the source's first party followed by local corrections.
///
/// The Kraus pair is `M_1 = D_1 R(θ)`, `M_2 = D_2 R(θ)` with
/// `D_1 = diag(sqrt a, sqrt b)`, `D_1^2 + D_2^2 = 1`; corrections are
/// optimized per outcome by aligning Schmidt bases. A lower bound on the
/// optimum over all LOCC protocols.
pub fn qubit_protocol_fidelity(p: [f64; 2], q: [f64; 2]) -> Result<f64> {
    let c = qubit(p)?;
    let mut qs = q;
    qs.sort_by(|a, b| b.total_cmp(a));
    let score = |m: Matrix2<f64>| -> f64 {
        let out = m * c;
        let prob = out.norm_squared();
        if prob <= 0.0 {
            return 0.0;
        }
        let sv = SVD::new(out, false, false).singular_values;
        let (mut s0, mut s1) = (sv[0], sv[1]);
        if s1 > s0 {
            std::mem::swap(&mut s0, &mut s1);
        }
        // prob * sorted overlap of the normalized outcome
        prob.sqrt() * (s0 * qs[0].sqrt() + s1 * qs[1].sqrt())
    };
    let f = |x: &[f64]| {
        let (a, b) = (x[1].clamp(0.0, 1.0), x[2].clamp(0.0, 1.0));
        let r = rot(x[0]);
        let m1 = Matrix2::new(a.sqrt(), 0.0, 0.0, b.sqrt()) * r;
        let m2 = Matrix2::new((1.0 - a).sqrt(), 0.0, 0.0, (1.0 - b).sqrt()) * r;
        score(m1) + score(m2)
    };
    Ok(grid_then_refine(&f, &[0.0, 0.0, 0.0], &[std::f64::consts::PI, 1.0, 1.0], 17, 6).min(1.0))
}

/// Exact convertibility as seen by the protocol oracle.
pub fn qubit_protocol_convertible(p: [f64; 2], q: [f64; 2]) -> Result<bool> {
    Ok(qubit_protocol_fidelity(p, q)? >= 1.0 - 1e-9)
}

/// Largest entry of `[P_e, P_e']` over all edge pairs, with every projector
/// written out as a full matrix on all virtual spins.
pub fn full_space_commutator_norm(model: &LatticeModel) -> Result<f64> {
    let n = model.num_virtual_spins();
    let m = model.m();
    let dim = m.checked_pow(n as u32).filter(|d| *d <= 1 << 8).ok_or(Error::CapExceeded {
        what: "oracle dimension",
        requested: model.total_dim().unwrap_or(u128::MAX),
        cap: 1 << 8,
    })?;
    let amps = model.amplitudes()?;
    let digit = |x: usize, spin: usize| (x / m.pow((n - 1 - spin) as u32)) % m;
    let mats: Vec<DMatrix<f64>> = model
        .edges()
        .iter()
        .map(|e| {
            let [i, j] = model.edge_spins(e);
            let psi = |x: usize| {
                let (a, b) = (digit(x, i), digit(x, j));
                if a == b {
                    amps[a]
                } else {
                    0.0
                }
            };
            DMatrix::from_fn(dim, dim, |x, y| {
                let rest_equal = (0..n).filter(|&s| s != i && s != j).all(|s| digit(x, s) == digit(y, s));
                if rest_equal {
                    psi(x) * psi(y)
                } else {
                    0.0
                }
            })
        })
        .collect();
    let mut worst: f64 = 0.0;
    for (a, pa) in mats.iter().enumerate() {
        for pb in &mats[a + 1..] {
            worst = worst.max((pa * pb - pb * pa).amax());
        }
    }
    Ok(worst)
}

/// Exhaustive midpoint Schmidt data of colored Motzkin walks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MotzkinEnumeration {
    /// Number of walks.
    pub walks: u64,
    /// Left halves ending at height `h`, counted over all color words.
    pub prefixes_by_height: Vec<u64>,
    /// Unnormalized Schmidt weights `rows × cols` of the all-ones blocks,
    /// descending.
    pub block_weights: Vec<u64>,
}

pub const ENUMERATION_CAP: usize = 12;

/// Enumerates every walk of length `l` with steps flat, up_c, down_c
/// (`c < s`), split at `l / 2`. The coefficient matrix between left and
/// right halves is a sum of all-ones blocks, one per distinct column set;
/// each block contributes Schmidt weight `rows · cols`.
pub fn motzkin_enumeration(l: usize, s: u32) -> Result<MotzkinEnumeration> {
    if l == 0 || !l.is_multiple_of(2) || l > ENUMERATION_CAP || s == 0 || s > 3 {
        return Err(Error::invalid(format!(
            "enumeration covers even 2 <= L <= {ENUMERATION_CAP} and 1 <= s <= 3"
        )));
    }
    let half = l / 2;
    let alphabet = 1 + 2 * s as u64;
    // step codes: 0 flat, 1..=s up, s+1..=2s down
    let mut walks: Vec<(u64, u64)> = Vec::new();
    let mut word = Vec::with_capacity(l);
    fn dfs(word: &mut Vec<u64>, l: usize, s: u64, stack: &mut Vec<u64>, out: &mut Vec<Vec<u64>>) {
        if word.len() == l {
            if stack.is_empty() {
                out.push(word.clone());
            }
            return;
        }
        if stack.len() > l - word.len() {
            return;
        }
        for step in 0..=2 * s {
            if step == 0 {
                word.push(0);
                dfs(word, l, s, stack, out);
                word.pop();
            } else if step <= s {
                stack.push(step);
                word.push(step);
                dfs(word, l, s, stack, out);
                word.pop();
                stack.pop();
            } else if stack.last() == Some(&(step - s)) {
                let c = stack.pop().unwrap();
                word.push(step);
                dfs(word, l, s, stack, out);
                word.pop();
                stack.push(c);
            }
        }
    }
    let mut all = Vec::new();
    dfs(&mut word, l, s as u64, &mut Vec::new(), &mut all);
    let encode = |w: &[u64]| w.iter().fold(0u64, |acc, &x| acc * alphabet + x);
    for w in &all {
        walks.push((encode(&w[..half]), encode(&w[half..])));
    }

    let mut columns: HashMap<u64, Vec<u64>> = HashMap::new();
    for &(a, b) in &walks {
        columns.entry(a).or_default().push(b);
    }
    let mut prefixes_by_height = vec![0u64; half + 1];
    // prefixes are distinct left strings, not walks
    let mut seen: BTreeMap<u64, usize> = BTreeMap::new();
    for w in &all {
        let key = encode(&w[..half]);
        if seen.contains_key(&key) {
            continue;
        }
        let h = w[..half].iter().fold(0usize, |h, &x| {
            if x == 0 {
                h
            } else if x <= s as u64 {
                h + 1
            } else {
                h - 1
            }
        });
        seen.insert(key, h);
        prefixes_by_height[h] += 1;
    }

    let mut blocks: HashMap<Vec<u64>, u64> = HashMap::new();
    for cols in columns.values_mut() {
        cols.sort_unstable();
        *blocks.entry(cols.clone()).or_default() += 1;
    }
    // distinct blocks must use disjoint columns for the decomposition to be a Schmidt one
    let mut owner: HashMap<u64, usize> = HashMap::new();
    for (i, cols) in blocks.keys().enumerate() {
        for c in cols {
            if owner.insert(*c, i).is_some() {
                return Err(Error::invalid("column sets overlap; not block diagonal"));
            }
        }
    }
    let mut block_weights: Vec<u64> = blocks.iter().map(|(cols, rows)| rows * cols.len() as u64).collect();
    block_weights.sort_unstable_by(|a, b| b.cmp(a));
    Ok(MotzkinEnumeration {
        walks: walks.len() as u64,
        prefixes_by_height,
        block_weights,
    })
}

/// The same data from the counting recurrence, for exact comparison.
pub fn motzkin_recurrence_data(l: usize, s: u32) -> Result<MotzkinEnumeration> {
    let c = crate::chains::motzkin_counts(l / 2, s)?;
    let to_u64 = |x: &BigUint| u64::try_from(x.clone()).map_err(|_| Error::invalid("count exceeds u64"));
    let mut prefixes_by_height = Vec::new();
    let mut block_weights = Vec::new();
    for (h, n) in c.n.iter().enumerate() {
        let words = (s as u64).pow(h as u32);
        let n = to_u64(n)?;
        prefixes_by_height.push(n * words);
        block_weights.extend(std::iter::repeat_n(n * n, words as usize));
    }
    block_weights.retain(|&w| w > 0);
    block_weights.sort_unstable_by(|a, b| b.cmp(a));
    Ok(MotzkinEnumeration {
        walks: to_u64(&c.total)?,
        prefixes_by_height,
        block_weights,
    })
}
