//! Contraction of small tensor networks whose factors are octonion-decorated
//! traces `tr(M O_{l1} … O_{lp})` and coefficient entries `c_{l l'}`, with
//! every index summed over 1..=7.
//!
//! Two independent evaluators are provided: an exhaustive loop over all
//! index assignments, and a greedy variable-elimination contraction.

use crate::error::{Error, Result};
use crate::matrix::RMatrix;
use crate::octonion::sparse_ops;

pub type Mat7 = [[f64; 7]; 7];

pub fn to_mat7(m: &RMatrix) -> Result<Mat7> {
    if m.shape() != (7, 7) {
        return Err(Error::Dimension(format!("expected 7x7 matrix, got {:?}", m.shape())));
    }
    Ok(std::array::from_fn(|i| std::array::from_fn(|j| m[(i, j)])))
}

#[derive(Debug, Clone, PartialEq)]
pub enum Factor {
    /// `tr(M O_{w1} … O_{wp})`; an empty word is a plain trace.
    Trace { matrix: Mat7, word: Vec<usize> },
    /// Entry `c[row][col]` of a coefficient matrix.
    Coeff { matrix: Mat7, row: usize, col: usize },
}

impl Factor {
    fn labels(&self) -> Vec<usize> {
        match self {
            Factor::Trace { word, .. } => word.clone(),
            Factor::Coeff { row, col, .. } => vec![*row, *col],
        }
    }
}

/// A product of factors summed over indices `0..index_count`, times `scalar`.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub scalar: f64,
    pub factors: Vec<Factor>,
    pub index_count: usize,
}

impl Network {
    pub fn new(index_count: usize) -> Self {
        Network {
            scalar: 1.0,
            factors: Vec::new(),
            index_count,
        }
    }

    pub fn push(&mut self, f: Factor) {
        self.factors.push(f);
    }

    /// Number of summed indices that actually occur in some factor.
    pub fn used_indices(&self) -> usize {
        let mut used = vec![false; self.index_count];
        for f in &self.factors {
            for l in f.labels() {
                used[l] = true;
            }
        }
        used.iter().filter(|&&u| u).count()
    }

    fn check_labels(&self) -> Result<()> {
        for f in &self.factors {
            if let Some(&bad) = f.labels().iter().find(|&&l| l >= self.index_count) {
                return Err(Error::Domain(format!(
                    "index {bad} out of range for a network with {} indices",
                    self.index_count
                )));
            }
        }
        Ok(())
    }
}

/// `P · O_l` using the signed-permutation structure of `O_l`.
fn times_op(p: &Mat7, l: usize) -> Mat7 {
    let cols = &sparse_ops()[l];
    let mut out = [[0.0; 7]; 7];
    for (j, c) in cols.iter().enumerate() {
        if let Some((k, s)) = *c {
            for r in 0..7 {
                out[r][j] = s * p[r][k];
            }
        }
    }
    out
}

fn trace7(p: &Mat7) -> f64 {
    (0..7).map(|i| p[i][i]).sum()
}

fn decorated_trace(m: &Mat7, word: &[usize], assign: &[usize]) -> f64 {
    let mut p = *m;
    for &w in word {
        p = times_op(&p, assign[w]);
    }
    trace7(&p)
}

/// Values of one factor at every assignment of its own labels, with the
/// first label varying slowest.
fn tabulate(f: &Factor) -> (Vec<usize>, Vec<f64>) {
    let labels = f.labels();
    let len = labels.len();
    let mut local = vec![0usize; len];
    let table = (0..pow7(len))
        .map(|mut code| {
            for slot in local.iter_mut().rev() {
                *slot = code % 7;
                code /= 7;
            }
            match f {
                Factor::Trace { matrix, .. } => {
                    let word: Vec<usize> = (0..len).collect();
                    decorated_trace(matrix, &word, &local)
                }
                Factor::Coeff { matrix, .. } => matrix[local[0]][local[1]],
            }
        })
        .collect();
    (labels, table)
}

/// Exhaustive summation over all `7^index_count` assignments. Each factor
/// is tabulated over its own labels first, so the inner loop is a product
/// of lookups.
pub fn contract_brute(net: &Network) -> Result<f64> {
    net.check_labels()?;
    let n = net.index_count;
    let tables: Vec<(Vec<usize>, Vec<f64>)> = net.factors.iter().map(tabulate).collect();
    let mut assign = vec![0usize; n];
    let mut total = 0.0;
    loop {
        let mut prod = net.scalar;
        for (labels, table) in &tables {
            let code = labels.iter().fold(0, |acc, &l| acc * 7 + assign[l]);
            prod *= table[code];
            if prod == 0.0 {
                break;
            }
        }
        total += prod;
        let mut pos = 0;
        loop {
            if pos == n {
                return Ok(total);
            }
            assign[pos] += 1;
            if assign[pos] < 7 {
                break;
            }
            assign[pos] = 0;
            pos += 1;
        }
    }
}

/// Dense tensor over labelled axes of extent 7, row-major in `labels` order.
#[derive(Debug, Clone)]
struct Tensor {
    labels: Vec<usize>,
    data: Vec<f64>,
}

fn pow7(k: usize) -> usize {
    7usize.pow(k as u32)
}

impl Tensor {
    /// Collapse repeated labels onto their diagonal.
    fn dedup(self) -> Tensor {
        let mut unique: Vec<usize> = Vec::new();
        for &l in &self.labels {
            if !unique.contains(&l) {
                unique.push(l);
            }
        }
        if unique.len() == self.labels.len() {
            return self;
        }
        let pos_of: Vec<usize> = self
            .labels
            .iter()
            .map(|l| unique.iter().position(|u| u == l).unwrap())
            .collect();
        let mut data = vec![0.0; pow7(unique.len())];
        for (lin, slot) in data.iter_mut().enumerate() {
            let digits = digits_of(lin, unique.len());
            let mut src = 0;
            for &p in &pos_of {
                src = src * 7 + digits[p];
            }
            *slot = self.data[src];
        }
        Tensor { labels: unique, data }
    }
}

fn digits_of(mut lin: usize, len: usize) -> Vec<usize> {
    let mut d = vec![0; len];
    for slot in d.iter_mut().rev() {
        *slot = lin % 7;
        lin /= 7;
    }
    d
}

/// Values of `tr(M O_{w1} … O_{wp})` over all assignments of the word
/// positions, by depth-first extension of prefix products.
fn trace_tensor(m: &Mat7, word: &[usize]) -> Tensor {
    fn fill(p: &Mat7, depth: usize, len: usize, offset: usize, data: &mut [f64]) {
        if depth == len {
            data[offset] = trace7(p);
            return;
        }
        for l in 0..7 {
            fill(&times_op(p, l), depth + 1, len, offset * 7 + l, data);
        }
    }
    let mut data = vec![0.0; pow7(word.len())];
    fill(m, 0, word.len(), 0, &mut data);
    Tensor {
        labels: word.to_vec(),
        data,
    }
    .dedup()
}

fn factor_tensor(f: &Factor) -> Tensor {
    match f {
        Factor::Trace { matrix, word } => trace_tensor(matrix, word),
        Factor::Coeff { matrix, row, col } => Tensor {
            labels: vec![*row, *col],
            data: matrix.iter().flatten().copied().collect(),
        }
        .dedup(),
    }
}

/// Default cap on intermediate tensor size for the factorized evaluator.
pub const DEFAULT_MAX_ENTRIES: usize = 7usize.pow(9);

/// Greedy variable elimination: repeatedly sum out the index whose incident
/// factors span the fewest other indices.
pub fn contract_factorized(net: &Network, max_entries: usize) -> Result<f64> {
    net.check_labels()?;
    let mut scalar = net.scalar;
    let mut tensors: Vec<Tensor> = Vec::new();
    for f in &net.factors {
        let t = factor_tensor(f);
        if t.labels.is_empty() {
            scalar *= t.data[0];
        } else {
            tensors.push(t);
        }
    }
    // Indices that appear nowhere contribute a factor 7 each.
    let unused = net.index_count - net.used_indices();
    scalar *= 7f64.powi(unused as i32);

    while !tensors.is_empty() {
        let mut best: Option<(usize, Vec<usize>)> = None;
        let mut seen: Vec<usize> = tensors.iter().flat_map(|t| t.labels.clone()).collect();
        seen.sort_unstable();
        seen.dedup();
        for &x in &seen {
            let mut union: Vec<usize> = tensors
                .iter()
                .filter(|t| t.labels.contains(&x))
                .flat_map(|t| t.labels.clone())
                .collect();
            union.sort_unstable();
            union.dedup();
            if best.as_ref().is_none_or(|(_, u)| union.len() < u.len()) {
                best = Some((x, union));
            }
        }
        let (x, union) = best.expect("non-empty tensors carry labels");
        if pow7(union.len()) > max_entries {
            return Err(Error::Budget {
                free: union.len(),
                budget: (max_entries as f64).log(7.0).floor() as usize,
                cost: 7f64.powi(union.len() as i32),
            });
        }
        let (group, rest): (Vec<Tensor>, Vec<Tensor>) = tensors.into_iter().partition(|t| t.labels.contains(&x));
        tensors = rest;
        let merged = eliminate(&group, &union, x);
        if merged.labels.is_empty() {
            scalar *= merged.data[0];
        } else {
            tensors.push(merged);
        }
    }
    Ok(scalar)
}

fn eliminate(group: &[Tensor], union: &[usize], x: usize) -> Tensor {
    let out_labels: Vec<usize> = union.iter().copied().filter(|&l| l != x).collect();
    let u = union.len();
    // Stride of each union position inside each tensor (0 when absent).
    let strides: Vec<Vec<usize>> = group
        .iter()
        .map(|t| {
            union
                .iter()
                .map(|l| match t.labels.iter().position(|m| m == l) {
                    Some(p) => pow7(t.labels.len() - 1 - p),
                    None => 0,
                })
                .collect()
        })
        .collect();
    let x_pos = union.iter().position(|&l| l == x).unwrap();
    let out_strides: Vec<usize> = (0..u)
        .map(|p| {
            if p == x_pos {
                0
            } else {
                let later = (p + 1..u).filter(|&q| q != x_pos).count();
                pow7(later)
            }
        })
        .collect();
    let mut out = vec![0.0; pow7(out_labels.len())];
    let mut digits = vec![0usize; u];
    let mut offsets = vec![0usize; group.len()];
    let mut out_off = 0usize;
    loop {
        let mut prod = 1.0;
        for (t, &o) in group.iter().zip(&offsets) {
            prod *= t.data[o];
        }
        out[out_off] += prod;
        // Odometer step over the union, last position fastest.
        let mut p = u;
        loop {
            if p == 0 {
                return Tensor {
                    labels: out_labels,
                    data: out,
                };
            }
            p -= 1;
            digits[p] += 1;
            for (o, s) in offsets.iter_mut().zip(&strides) {
                *o += s[p];
            }
            out_off += out_strides[p];
            if digits[p] < 7 {
                break;
            }
            digits[p] = 0;
            for (o, s) in offsets.iter_mut().zip(&strides) {
                *o -= 7 * s[p];
            }
            out_off -= 7 * out_strides[p];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::octonion::right_mult_matrices;
    use proptest::prelude::*;

    fn mat(vals: &[f64]) -> Mat7 {
        std::array::from_fn(|i| {
            std::array::from_fn(|j| vals[(i * 7 + j) % vals.len()] * (1.0 + 0.1 * i as f64 - 0.05 * j as f64))
        })
    }

    #[test]
    fn decorated_trace_matches_dense_product() {
        let m = mat(&[0.3, -1.2, 0.7, 0.1, 2.0]);
        let ops = right_mult_matrices();
        let dense = RMatrix::from_fn(7, 7, |i, j| m[i][j]) * &ops[2] * &ops[5] * &ops[0];
        let fast = decorated_trace(&m, &[0, 1, 2], &[2, 5, 0]);
        assert!((dense.trace() - fast).abs() < 1e-13);
    }

    #[test]
    fn simple_pairing_with_identity_vanishes() {
        let id: Mat7 = std::array::from_fn(|i| std::array::from_fn(|j| (i == j) as u8 as f64));
        let mut net = Network::new(1);
        net.push(Factor::Trace {
            matrix: id,
            word: vec![0],
        });
        net.push(Factor::Trace {
            matrix: id,
            word: vec![0],
        });
        assert_eq!(contract_brute(&net).unwrap(), 0.0);
        assert_eq!(contract_factorized(&net, DEFAULT_MAX_ENTRIES).unwrap(), 0.0);
    }

    #[test]
    fn unused_indices_and_scalars() {
        let m = mat(&[1.0, 0.5]);
        let mut net = Network::new(2);
        net.scalar = 0.5;
        net.push(Factor::Trace {
            matrix: m,
            word: vec![],
        });
        let expected = 0.5 * trace7(&m) * 49.0;
        assert!((contract_brute(&net).unwrap() - expected).abs() < 1e-12);
        assert!((contract_factorized(&net, DEFAULT_MAX_ENTRIES).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn repeated_labels_take_diagonals() {
        let (m, c) = (mat(&[0.2, -0.9, 1.1]), mat(&[0.4, 0.8, -0.3, 0.6]));
        let mut net = Network::new(2);
        net.push(Factor::Trace {
            matrix: m,
            word: vec![0, 1, 0],
        });
        net.push(Factor::Coeff {
            matrix: c,
            row: 1,
            col: 1,
        });
        let a = contract_brute(&net).unwrap();
        let b = contract_factorized(&net, DEFAULT_MAX_ENTRIES).unwrap();
        assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
    }

    #[test]
    fn out_of_range_and_budget() {
        let mut net = Network::new(1);
        net.push(Factor::Coeff {
            matrix: mat(&[1.0]),
            row: 0,
            col: 3,
        });
        assert!(contract_brute(&net).is_err());
        let mut big = Network::new(4);
        big.push(Factor::Trace {
            matrix: mat(&[1.0]),
            word: vec![0, 1, 2, 3],
        });
        assert!(matches!(
            contract_factorized(&big, 7usize.pow(3)),
            Err(Error::Budget { .. })
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn evaluators_agree(vals in prop::collection::vec(-1.0f64..1.0, 11),
                            words in prop::collection::vec(prop::collection::vec(0usize..4, 0..4), 1..4),
                            coeffs in prop::collection::vec((0usize..4, 0usize..4), 0..3)) {
            let mut net = Network::new(4);
            for (k, w) in words.iter().enumerate() {
                net.push(Factor::Trace { matrix: mat(&vals[k..]), word: w.clone() });
            }
            for (k, &(r, c)) in coeffs.iter().enumerate() {
                net.push(Factor::Coeff { matrix: mat(&vals[k + 3..]), row: r, col: c });
            }
            let a = contract_brute(&net).unwrap();
            let b = contract_factorized(&net, DEFAULT_MAX_ENTRIES).unwrap();
            prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0), "{a} vs {b}");
        }
    }
}
