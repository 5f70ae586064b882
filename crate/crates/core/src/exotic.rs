//! Exotic G2-invariant observables: multi-index contractions of
//! octonion-decorated monodromy traces wired by two incidence matrices
//! `K` (t × n1) and `Q` (t × (2·n2 − s)) and coefficient matrices α, β.

use std::fmt;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::goldman::{membership_residual, sample_g2, MEMBERSHIP_TOL};
use crate::lie_bases::{build_basis, GroupFamily, LieBasis};
use crate::matrix::{to_complex, trace_of_product, RMatrix};
use crate::network::{contract_brute, contract_factorized, to_mat7, Factor, Network, DEFAULT_MAX_ENTRIES};
use crate::octonion::right_mult_matrices;
use crate::report::{ErrorMax, VerificationReport};
use crate::rng::substream;

/// Parameters and incidence matrices of one observable.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ObservableSpec {
    pub r: usize,
    pub n1: usize,
    pub s: usize,
    pub n2: usize,
    pub t: usize,
    #[serde(rename = "K", default)]
    pub k: Vec<Vec<u8>>,
    #[serde(rename = "Q", default)]
    pub q: Vec<Vec<u8>>,
}

impl fmt::Display for ObservableSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows = |m: &Vec<Vec<u8>>| {
            m.iter()
                .map(|r| r.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" "))
                .collect::<Vec<_>>()
                .join("; ")
        };
        write!(
            f,
            "(r={}, n1={}, s={}, n2={}, t={}, K=[{}], Q=[{}])",
            self.r,
            self.n1,
            self.s,
            self.n2,
            self.t,
            rows(&self.k),
            rows(&self.q)
        )
    }
}

/// Where each summed index sits. Indices are 0-based positions `l_1 → 0`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    pub index_count: usize,
    /// Index carried by each of the `n1` single-operator traces.
    pub simple: Vec<usize>,
    /// Operator word of each of the `t` decorated traces.
    pub words: Vec<Vec<usize>>,
    /// `(row, col)` index pairs of the α factors.
    pub alphas: Vec<(usize, usize)>,
    /// `(row, col)` index pairs of the β factors.
    pub betas: Vec<(usize, usize)>,
}

impl ObservableSpec {
    pub fn q_cols(&self) -> usize {
        (2 * self.n2).saturating_sub(self.s)
    }

    /// Number of summed indices, `2·n1 + 2·n2 − r − s`.
    pub fn free_indices(&self) -> usize {
        (2 * self.n1 + 2 * self.n2).saturating_sub(self.r + self.s)
    }

    fn q_entry(&self, row: usize, col: usize) -> u8 {
        self.q.get(row).and_then(|r| r.get(col)).copied().unwrap_or(0)
    }

    /// Index bound by column `c` of `K`.
    pub fn k_column_index(&self, c: usize) -> usize {
        if c < self.r {
            c
        } else {
            self.n1 + (c - self.r)
        }
    }

    /// Index bound by column `c` of `Q`.
    pub fn q_column_index(&self, c: usize) -> usize {
        let base = 2 * self.n1 - self.r;
        if c < self.s {
            base + c
        } else {
            let p = (c - self.s) / 2;
            if (c - self.s) % 2 == 0 {
                base + self.s + p
            } else {
                base + self.n2 + p
            }
        }
    }

    /// Index wiring; requires a valid spec.
    pub fn layout(&self) -> Result<Layout> {
        validate_spec(self).map_err(|v| Error::Spec(v.iter().map(|x| x.to_string()).collect()))?;
        let words = (0..self.t)
            .map(|row| {
                let mut w = Vec::new();
                for c in 0..self.n1 {
                    if self.k[row][c] == 1 {
                        w.push(self.k_column_index(c));
                    }
                }
                for c in 0..self.q_cols() {
                    if self.q_entry(row, c) == 1 {
                        w.push(self.q_column_index(c));
                    }
                }
                w
            })
            .collect();
        let base = 2 * self.n1 - self.r;
        Ok(Layout {
            index_count: self.free_indices(),
            simple: (0..self.n1).collect(),
            words,
            alphas: (0..self.n1 - self.r).map(|m| (self.r + m, self.n1 + m)).collect(),
            betas: (0..self.n2 - self.s)
                .map(|k| (base + self.s + k, base + self.n2 + k))
                .collect(),
        })
    }
}

/// One violated constraint, located by matrix and 1-based column when relevant.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SpecViolation {
    pub field: String,
    pub message: String,
}

impl fmt::Display for SpecViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

/// All constraint violations of a spec; `Ok` when there are none.
pub fn validate_spec(spec: &ObservableSpec) -> std::result::Result<(), Vec<SpecViolation>> {
    let mut v = Vec::new();
    fn bad(v: &mut Vec<SpecViolation>, field: &str, message: String) {
        v.push(SpecViolation {
            field: field.to_string(),
            message,
        })
    }
    if spec.r > spec.n1 {
        bad(&mut v, "r", format!("r = {} exceeds n1 = {}", spec.r, spec.n1));
    }
    if spec.s > spec.n2 {
        bad(&mut v, "s", format!("s = {} exceeds n2 = {}", spec.s, spec.n2));
    }
    if spec.t == 0 {
        bad(&mut v, "t", "t must be at least 1".into());
    }
    if spec.t > spec.n1 + 2 * spec.n2 {
        bad(
            &mut v,
            "t",
            format!("t = {} exceeds n1 + 2·n2 = {}", spec.t, spec.n1 + 2 * spec.n2),
        );
    }
    if spec.k.len() != spec.t {
        bad(
            &mut v,
            "K",
            format!("K has {} rows, expected t = {}", spec.k.len(), spec.t),
        );
    }
    for (i, row) in spec.k.iter().enumerate() {
        if row.len() != spec.n1 {
            bad(
                &mut v,
                "K",
                format!(
                    "row {} of K has {} entries, expected n1 = {}",
                    i + 1,
                    row.len(),
                    spec.n1
                ),
            );
        }
    }
    let qc = spec.q_cols();
    let q_empty_ok = qc == 0 && spec.q.iter().all(|r| r.is_empty());
    if !q_empty_ok {
        if spec.q.len() != spec.t {
            bad(
                &mut v,
                "Q",
                format!("Q has {} rows, expected t = {}", spec.q.len(), spec.t),
            );
        }
        for (i, row) in spec.q.iter().enumerate() {
            if row.len() != qc {
                bad(
                    &mut v,
                    "Q",
                    format!(
                        "row {} of Q has {} entries, expected 2·n2 − s = {}",
                        i + 1,
                        row.len(),
                        qc
                    ),
                );
            }
        }
    }
    for (name, m) in [("K", &spec.k), ("Q", &spec.q)] {
        if m.iter().flatten().any(|&x| x > 1) {
            bad(&mut v, name, format!("{name} must be a (0,1)-matrix"));
        }
    }
    if v.is_empty() {
        for c in 0..spec.n1 {
            let ones = spec.k.iter().filter(|r| r[c] == 1).count();
            if ones != 1 {
                bad(&mut v, "K", format!("column {} of K has {ones} ones", c + 1));
            }
        }
        for c in 0..qc {
            let ones = (0..spec.t).filter(|&r| spec.q_entry(r, c) == 1).count();
            let want = if c < spec.s { 2 } else { 1 };
            if ones != want {
                bad(
                    &mut v,
                    "Q",
                    format!("column {} of Q has {ones} ones, expected {want}", c + 1),
                );
            }
        }
    }
    if v.is_empty() {
        Ok(())
    } else {
        Err(v)
    }
}

fn binomial2(t: usize) -> u128 {
    (t as u128) * (t.saturating_sub(1) as u128) / 2
}

/// Closed-form count `t^{n1} · C(t,2)^s · t^{2n2−2s}`.
pub fn enumeration_count(n1: usize, s: usize, n2: usize, t: usize) -> u128 {
    let t128 = t as u128;
    t128.pow(n1 as u32) * binomial2(t).pow(s as u32) * t128.pow((2 * n2 - 2 * s) as u32)
}

/// Every valid `(K, Q)` for the given parameters, lexicographic in the
/// sequence of column choices (K columns first).
pub fn enumerate_specs(r: usize, n1: usize, s: usize, n2: usize, t: usize) -> Result<Vec<ObservableSpec>> {
    if r > n1 || s > n2 || t == 0 || t > n1 + 2 * n2 {
        return Err(Error::Domain(format!(
            "parameters (r={r}, n1={n1}, s={s}, n2={n2}, t={t}) violate r ≤ n1, s ≤ n2, 1 ≤ t ≤ n1 + 2·n2"
        )));
    }
    let count = enumeration_count(n1, s, n2, t);
    if count > 5_000_000 {
        return Err(Error::Domain(format!("refusing to enumerate {count} specs")));
    }
    let pairs: Vec<(usize, usize)> = (0..t).flat_map(|a| (a + 1..t).map(move |b| (a, b))).collect();
    let qc = 2 * n2 - s;
    // Mixed-radix choice vector: K columns pick a row, the first s Q columns
    // pick a pair of rows, the rest pick a row.
    let radices: Vec<usize> = std::iter::repeat_n(t, n1)
        .chain(std::iter::repeat_n(pairs.len(), s))
        .chain(std::iter::repeat_n(t, qc - s))
        .collect();
    if radices.contains(&0) {
        return Ok(Vec::new());
    }
    let mut out = Vec::with_capacity(count as usize);
    let mut choice = vec![0usize; radices.len()];
    loop {
        let mut k = vec![vec![0u8; n1]; t];
        let mut q = vec![vec![0u8; qc]; t];
        for (c, &row) in choice[..n1].iter().enumerate() {
            k[row][c] = 1;
        }
        for (c, &pick) in choice[n1..].iter().enumerate() {
            if c < s {
                let (a, b) = pairs[pick];
                q[a][c] = 1;
                q[b][c] = 1;
            } else {
                q[pick][c] = 1;
            }
        }
        out.push(ObservableSpec { r, n1, s, n2, t, k, q });
        let mut pos = radices.len();
        loop {
            if pos == 0 {
                return Ok(out);
            }
            pos -= 1;
            choice[pos] += 1;
            if choice[pos] < radices[pos] {
                break;
            }
            choice[pos] = 0;
        }
    }
}

/// A spec together with concrete G2 matrices for every slot.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservableInstance {
    pub spec: ObservableSpec,
    /// `n1` simple-trace monodromies followed by `t` decorated ones.
    pub monodromies: Vec<RMatrix>,
    pub alphas: Vec<RMatrix>,
    pub betas: Vec<RMatrix>,
}

impl ObservableInstance {
    /// Checked constructor: counts must match and every matrix must lie in G2.
    pub fn new(
        spec: ObservableSpec,
        monodromies: Vec<RMatrix>,
        alphas: Vec<RMatrix>,
        betas: Vec<RMatrix>,
    ) -> Result<Self> {
        let inst = Self::new_unchecked(spec, monodromies, alphas, betas)?;
        for (what, list) in [
            ("monodromy", &inst.monodromies),
            ("alpha", &inst.alphas),
            ("beta", &inst.betas),
        ] {
            for (i, m) in list.iter().enumerate() {
                let r = membership_residual(GroupFamily::g2(), &to_complex(m));
                if !(r < MEMBERSHIP_TOL) {
                    return Err(Error::Domain(format!(
                        "{what} {} is not in G2 (residual {r:.3e})",
                        i + 1
                    )));
                }
            }
        }
        Ok(inst)
    }

    /// Checks counts and shapes but not G2 membership.
    pub fn new_unchecked(
        spec: ObservableSpec,
        monodromies: Vec<RMatrix>,
        alphas: Vec<RMatrix>,
        betas: Vec<RMatrix>,
    ) -> Result<Self> {
        validate_spec(&spec).map_err(|v| Error::Spec(v.iter().map(|x| x.to_string()).collect()))?;
        let expect = [
            ("monodromies", monodromies.len(), spec.n1 + spec.t),
            ("alphas", alphas.len(), spec.n1 - spec.r),
            ("betas", betas.len(), spec.n2 - spec.s),
        ];
        for (what, got, want) in expect {
            if got != want {
                return Err(Error::Dimension(format!("{what}: got {got} matrices, expected {want}")));
            }
        }
        for m in monodromies.iter().chain(&alphas).chain(&betas) {
            if m.shape() != (7, 7) {
                return Err(Error::Dimension(format!("expected 7x7 matrices, got {:?}", m.shape())));
            }
        }
        Ok(ObservableInstance {
            spec,
            monodromies,
            alphas,
            betas,
        })
    }

    /// Random G2 matrices in every slot, drawn from substream `(seed, 0)`.
    pub fn sample(spec: ObservableSpec, seed: u64) -> Result<Self> {
        let basis = build_basis(GroupFamily::g2())?;
        let mut rng = substream(seed, 0);
        let mut draw =
            |k: usize| -> Result<Vec<RMatrix>> { (0..k).map(|_| sample_g2(&basis, &mut rng, 1.0)).collect() };
        let m = draw(spec.n1 + spec.t)?;
        let a = draw(spec.n1 - spec.r)?;
        let b = draw(spec.n2 - spec.s)?;
        Self::new(spec, m, a, b)
    }

    /// Conjugate every matrix by an orthogonal `g`.
    pub fn conjugated(&self, g: &RMatrix) -> Self {
        let gt = g.transpose();
        let conj = |list: &Vec<RMatrix>| list.iter().map(|m| g * m * &gt).collect();
        ObservableInstance {
            spec: self.spec.clone(),
            monodromies: conj(&self.monodromies),
            alphas: conj(&self.alphas),
            betas: conj(&self.betas),
        }
    }

    pub fn network(&self) -> Result<Network> {
        let layout = self.spec.layout()?;
        let mut net = Network::new(layout.index_count);
        let n1 = self.spec.n1;
        for (j, &l) in layout.simple.iter().enumerate() {
            net.push(Factor::Trace {
                matrix: to_mat7(&self.monodromies[j])?,
                word: vec![l],
            });
        }
        for (i, w) in layout.words.iter().enumerate() {
            net.push(Factor::Trace {
                matrix: to_mat7(&self.monodromies[n1 + i])?,
                word: w.clone(),
            });
        }
        for (m, &(row, col)) in layout.alphas.iter().enumerate() {
            net.push(Factor::Coeff {
                matrix: to_mat7(&self.alphas[m])?,
                row,
                col,
            });
        }
        for (k, &(row, col)) in layout.betas.iter().enumerate() {
            net.push(Factor::Coeff {
                matrix: to_mat7(&self.betas[k])?,
                row,
                col,
            });
        }
        Ok(net)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EvalMode {
    BruteForce,
    Factorized,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EvalConfig {
    pub mode: EvalMode,
    /// Largest number of free indices the brute-force engine accepts.
    pub brute_force_max_free: usize,
    /// Largest intermediate tensor the factorized engine builds.
    pub max_entries: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            mode: EvalMode::Factorized,
            brute_force_max_free: 6,
            max_entries: DEFAULT_MAX_ENTRIES,
        }
    }
}

impl EvalConfig {
    pub fn brute_force() -> Self {
        EvalConfig {
            mode: EvalMode::BruteForce,
            ..Default::default()
        }
    }
}

/// Evaluate a contraction network with the configured engine.
pub fn evaluate_network(net: &Network, config: &EvalConfig) -> Result<f64> {
    match config.mode {
        EvalMode::BruteForce => {
            if net.index_count > config.brute_force_max_free {
                return Err(Error::Budget {
                    free: net.index_count,
                    budget: config.brute_force_max_free,
                    cost: 7f64.powi(net.index_count as i32) * net.factors.len() as f64,
                });
            }
            contract_brute(net)
        }
        EvalMode::Factorized => contract_factorized(net, config.max_entries),
    }
}

pub fn evaluate(inst: &ObservableInstance, config: &EvalConfig) -> Result<f64> {
    evaluate_network(&inst.network()?, config)
}

/// Invariance result plus the single-term negative control.
#[derive(Debug, Clone, PartialEq)]
pub struct InvarianceReport {
    pub report: VerificationReport,
    /// Largest change of one `tr(M₁ O_i)` under the same transformations.
    pub negative_control: f64,
}

/// Evaluate at `inst` and at its conjugates by `trials` random G2 elements;
/// passes when every relative change `|ΔF| / max(1, |F|)` is below `rel_tol`.
pub fn invariance_test(inst: &ObservableInstance, trials: u64, seed: u64, rel_tol: f64) -> Result<InvarianceReport> {
    let start = Instant::now();
    let basis: LieBasis = build_basis(GroupFamily::g2())?;
    let config = EvalConfig::default();
    let base = evaluate(inst, &config)?;
    let ops = right_mult_matrices();
    let first = inst.monodromies.first();
    let per_trial: Vec<Result<(ErrorMax, f64)>> = (0..trials)
        .into_par_iter()
        .map(|k| {
            let g = sample_g2(&basis, &mut substream(seed, k), 1.0)?;
            let moved = evaluate(&inst.conjugated(&g), &config)?;
            let d = (moved - base).abs();
            let rel = d / base.abs().max(1.0);
            let mut control = 0.0f64;
            if let Some(m1) = first {
                let conj = &g * m1 * g.transpose();
                for o in ops {
                    control = control.max((trace_of_product(&conj, o) - trace_of_product(m1, o)).abs());
                }
            }
            Ok((ErrorMax::single(d, rel, rel < rel_tol), control))
        })
        .collect();
    let mut acc = ErrorMax::ok();
    let mut control = 0.0f64;
    for r in per_trial {
        let (e, c) = r?;
        acc = acc.merge(e);
        control = control.max(c);
    }
    let report = VerificationReport::new("exotic-invariance")
        .param("spec", inst.spec.to_string())
        .param("value", base)
        .param("negative_control", control)
        .seeded(seed, trials)
        .errors(acc.abs, acc.rel)
        .verdict(acc.all_ok)
        .timed(start);
    Ok(InvarianceReport {
        report,
        negative_control: control,
    })
}

/// The first observable `Σ_i tr(M₁O_i) tr(M₂O_i)`.
pub fn first_example_spec() -> ObservableSpec {
    ObservableSpec {
        r: 1,
        n1: 1,
        s: 0,
        n2: 0,
        t: 1,
        k: vec![vec![1]],
        q: vec![vec![]],
    }
}

/// `(r, n1, s, n2, t) = (2, 2, 0, 1, 2)` with `K = Q = I₂`.
pub fn third_type_example_spec() -> ObservableSpec {
    ObservableSpec {
        r: 2,
        n1: 2,
        s: 0,
        n2: 1,
        t: 2,
        k: vec![vec![1, 0], vec![0, 1]],
        q: vec![vec![1, 0], vec![0, 1]],
    }
}

/// `(1, 2, 0, 0, 1)` with `K = [1 1]`.
pub fn composite_example_spec() -> ObservableSpec {
    ObservableSpec {
        r: 1,
        n1: 2,
        s: 0,
        n2: 0,
        t: 1,
        k: vec![vec![1, 1]],
        q: vec![vec![]],
    }
}
