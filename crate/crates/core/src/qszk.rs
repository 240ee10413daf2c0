//! A small density-matrix channel simulator and the entropy-estimation
//! reduction pipeline built on it.
//!
//! Circuits are [`ChannelExpression`] DAGs evaluated exactly as dense
//! density matrices (at most 10 live qubits per node). On top sit the
//! promise problems — state distinguishability, entropy approximation
//! against a threshold, entropy difference — and the reductions between
//! them: flattening by tensor powers, hashing through a quantum extractor,
//! three-valued formula closure via the recursive circuit builder, and the
//! coin-flip construction that converts distinguishability into an entropy
//! gap.

use crate::extractor::{binary_entropy, entropies, shannon_entropy};
use crate::linalg::{trace_norm, CMatrix, C_ONE, C_ZERO};
use crate::qexpander::{DensityMatrix, Superoperator};
use crate::{QexError, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Hard cap on live qubits at any node: dense 1024×1024 states.
pub const QUBIT_CAP: usize = 10;

/// Pinned stand-in for the O(1) slack in the extractor seed length of the
/// entropy-approximation reduction; recorded in every report.
pub const QEA_BIG_O_CONSTANT: f64 = 1.0;

/// A composable channel/circuit node. Qubit 0 is the most significant bit
/// of the state index; tensor children are laid out left to right.
#[derive(Debug, Clone)]
pub enum ChannelExpression {
    /// `|0^n⟩⟨0^n|`.
    PrepareZeros { qubits: usize },
    /// Apply a `2^k × 2^k` unitary on the listed target qubits.
    UnitaryGate { child: Box<ChannelExpression>, targets: Vec<usize>, matrix: CMatrix },
    /// Measure the listed qubits in the computational basis and forget the
    /// outcome: zero every coherence between differing basis values.
    MeasureDephase { child: Box<ChannelExpression>, qubits: Vec<usize> },
    /// A fresh fair coin kept as qubit 0:
    /// `½|0⟩⟨0|⊗eval(zero) + ½|1⟩⟨1|⊗eval(one)`.
    CoinConditioned { zero: Box<ChannelExpression>, one: Box<ChannelExpression> },
    Tensor { children: Vec<ChannelExpression> },
    /// Convex combination of same-shape children.
    Mixture { weights: Vec<f64>, children: Vec<ChannelExpression> },
    /// Partial trace over the listed qubits.
    TraceOut { child: Box<ChannelExpression>, qubits: Vec<usize> },
    /// Keep exactly the listed qubits, in the listed order.
    OutputSelect { child: Box<ChannelExpression>, qubits: Vec<usize> },
}

impl ChannelExpression {
    pub fn qubits(&self) -> usize {
        match self {
            ChannelExpression::PrepareZeros { qubits } => *qubits,
            ChannelExpression::UnitaryGate { child, .. } => child.qubits(),
            ChannelExpression::MeasureDephase { child, .. } => child.qubits(),
            ChannelExpression::CoinConditioned { zero, .. } => 1 + zero.qubits(),
            ChannelExpression::Tensor { children } => children.iter().map(|c| c.qubits()).sum(),
            ChannelExpression::Mixture { children, .. } => children[0].qubits(),
            ChannelExpression::TraceOut { child, qubits } => child.qubits() - qubits.len(),
            ChannelExpression::OutputSelect { qubits, .. } => qubits.len(),
        }
    }

    /// Hadamard on one fresh qubit.
    pub fn plus_state() -> ChannelExpression {
        let h = 1.0 / 2.0f64.sqrt();
        let matrix = CMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::new(h, 0.0),
                Complex64::new(h, 0.0),
                Complex64::new(h, 0.0),
                Complex64::new(-h, 0.0),
            ],
        );
        ChannelExpression::UnitaryGate {
            child: Box::new(ChannelExpression::PrepareZeros { qubits: 1 }),
            targets: vec![0],
            matrix,
        }
    }

    /// One maximally mixed qubit: Hadamard then full dephasing.
    pub fn mixed_qubit() -> ChannelExpression {
        ChannelExpression::MeasureDephase {
            child: Box::new(ChannelExpression::plus_state()),
            qubits: vec![0],
        }
    }
}

fn bit_of(index: usize, qubit: usize, n: usize) -> usize {
    (index >> (n - 1 - qubit)) & 1
}

/// Bits of `index` at `positions`, packed with `positions[0]` most
/// significant.
fn extract_bits(index: usize, positions: &[usize], n: usize) -> usize {
    positions.iter().fold(0, |acc, &q| (acc << 1) | bit_of(index, q, n))
}

/// Writes `value`'s bits into `index` at `positions` (MSB-first).
fn deposit_bits(mut index: usize, positions: &[usize], value: usize, n: usize) -> usize {
    for (j, &q) in positions.iter().enumerate() {
        let bit = (value >> (positions.len() - 1 - j)) & 1;
        let mask = 1usize << (n - 1 - q);
        index = (index & !mask) | (bit * mask);
    }
    index
}

fn check_targets(targets: &[usize], n: usize) -> Result<()> {
    let mut seen = vec![false; n];
    for &q in targets {
        if q >= n {
            return Err(QexError::Channel(format!("qubit {q} out of range for {n} qubits")));
        }
        if seen[q] {
            return Err(QexError::Channel(format!("qubit {q} repeated")));
        }
        seen[q] = true;
    }
    Ok(())
}

/// Exact dense evaluation of a channel expression.
pub fn evaluate(expr: &ChannelExpression) -> Result<DensityMatrix> {
    let n = expr.qubits();
    if n == 0 || n > QUBIT_CAP {
        return Err(QexError::Channel(format!("node has {n} qubits (cap {QUBIT_CAP})")));
    }
    let dim = 1usize << n;
    let rho = match expr {
        ChannelExpression::PrepareZeros { .. } => DensityMatrix::basis_state(dim, 0).matrix,
        ChannelExpression::UnitaryGate { child, targets, matrix } => {
            check_targets(targets, n)?;
            let k = targets.len();
            if matrix.nrows() != (1 << k) || matrix.ncols() != (1 << k) {
                return Err(QexError::Channel(format!(
                    "gate on {k} qubits needs a {0}×{0} matrix",
                    1 << k
                )));
            }
            if crate::linalg::unitarity_residual(matrix) > 1e-9 {
                return Err(QexError::Channel("gate matrix is not unitary".into()));
            }
            let inner = evaluate(child)?.matrix;
            let mut full = CMatrix::zeros(dim, dim);
            for i in 0..dim {
                let tin = extract_bits(i, targets, n);
                for tout in 0..1 << k {
                    let j = deposit_bits(i, targets, tout, n);
                    full[(j, i)] += matrix[(tout, tin)];
                }
            }
            &full * inner * full.adjoint()
        }
        ChannelExpression::MeasureDephase { child, qubits } => {
            check_targets(qubits, n)?;
            let mut rho = evaluate(child)?.matrix;
            for r in 0..dim {
                for c in 0..dim {
                    if extract_bits(r, qubits, n) != extract_bits(c, qubits, n) {
                        rho[(r, c)] = C_ZERO;
                    }
                }
            }
            rho
        }
        ChannelExpression::CoinConditioned { zero, one } => {
            let a = evaluate(zero)?.matrix;
            let b = evaluate(one)?.matrix;
            if a.nrows() != b.nrows() {
                return Err(QexError::Channel("coin branches differ in qubit count".into()));
            }
            let half = dim / 2;
            let mut rho = CMatrix::zeros(dim, dim);
            for r in 0..half {
                for c in 0..half {
                    rho[(r, c)] = a[(r, c)] * 0.5;
                    rho[(half + r, half + c)] = b[(r, c)] * 0.5;
                }
            }
            rho
        }
        ChannelExpression::Tensor { children } => {
            let mut rho = CMatrix::identity(1, 1);
            for child in children {
                rho = crate::linalg::kron(&rho, &evaluate(child)?.matrix);
            }
            rho
        }
        ChannelExpression::Mixture { weights, children } => {
            if weights.len() != children.len() || children.is_empty() {
                return Err(QexError::Channel("mixture weights/children mismatch".into()));
            }
            if (weights.iter().sum::<f64>() - 1.0).abs() > 1e-10
                || weights.iter().any(|&w| w < 0.0)
            {
                return Err(QexError::Channel("mixture weights must be a distribution".into()));
            }
            let mut rho = CMatrix::zeros(dim, dim);
            for (w, child) in weights.iter().zip(children) {
                let part = evaluate(child)?.matrix;
                if part.nrows() != dim {
                    return Err(QexError::Channel("mixture children differ in shape".into()));
                }
                rho += part * Complex64::new(*w, 0.0);
            }
            rho
        }
        ChannelExpression::TraceOut { child, qubits } => {
            let inner_n = child.qubits();
            check_targets(qubits, inner_n)?;
            let inner = evaluate(child)?.matrix;
            partial_trace(&inner, qubits, inner_n)
        }
        ChannelExpression::OutputSelect { child, qubits } => {
            let inner_n = child.qubits();
            check_targets(qubits, inner_n)?;
            let inner = evaluate(child)?.matrix;
            let traced: Vec<usize> =
                (0..inner_n).filter(|q| !qubits.contains(q)).collect();
            let reduced = partial_trace(&inner, &traced, inner_n);
            // `partial_trace` leaves kept qubits ascending; reorder to the
            // requested output order.
            let kept_ascending: Vec<usize> = {
                let mut v: Vec<usize> = qubits.clone();
                v.sort_unstable();
                v
            };
            let k = qubits.len();
            let out_dim = 1usize << k;
            let mut out = CMatrix::zeros(out_dim, out_dim);
            let position_in_ascending: Vec<usize> = qubits
                .iter()
                .map(|q| kept_ascending.iter().position(|x| x == q).unwrap())
                .collect();
            for r in 0..out_dim {
                let src_r = remap_bits(r, &position_in_ascending, k);
                for c in 0..out_dim {
                    let src_c = remap_bits(c, &position_in_ascending, k);
                    out[(r, c)] = reduced[(src_r, src_c)];
                }
            }
            out
        }
    };
    let trace = rho.trace();
    if (trace - C_ONE).norm() > 1e-10 {
        return Err(QexError::Channel(format!("evaluation lost trace: {trace}")));
    }
    Ok(DensityMatrix::new_unchecked(rho))
}

/// New index whose bit `p` is the old bit `map[p]`.
fn remap_bits(new_index: usize, map: &[usize], k: usize) -> usize {
    let mut old = 0usize;
    for (p, &source) in map.iter().enumerate() {
        let bit = (new_index >> (k - 1 - p)) & 1;
        old |= bit << (k - 1 - source);
    }
    old
}

fn partial_trace(rho: &CMatrix, traced: &[usize], n: usize) -> CMatrix {
    let keep: Vec<usize> = (0..n).filter(|q| !traced.contains(q)).collect();
    let out_dim = 1usize << keep.len();
    let sum_dim = 1usize << traced.len();
    let mut out = CMatrix::zeros(out_dim, out_dim);
    for r in 0..out_dim {
        for c in 0..out_dim {
            let mut acc = C_ZERO;
            for t in 0..sum_dim {
                let row = deposit_bits(deposit_bits(0, &keep, r, n), traced, t, n);
                let col = deposit_bits(deposit_bits(0, &keep, c, n), traced, t, n);
                acc += rho[(row, col)];
            }
            out[(r, c)] = acc;
        }
    }
    out
}

/// Trace distance `½‖ρ − σ‖_tr ∈ [0, 1]`.
pub fn trace_distance(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(QexError::DimensionMismatch { expected: a.dim(), got: b.dim() });
    }
    Ok(trace_norm(&(&a.matrix - &b.matrix)) / 2.0)
}

// ---------------------------------------------------------------------
// Flattening

/// Typical-mass table for a tensor power `ρ^{⊗k}`.
pub struct FlatnessReport {
    pub k: usize,
    /// `m = max lg(1/λ)` over nonzero base eigenvalues.
    pub m: f64,
    /// `Δ = √k·m`.
    pub delta: f64,
    pub base_entropy: f64,
    /// `(t, typical mass, bound 1 − 2^{1−t²}, pass)`.
    pub rows: Vec<(f64, f64, f64, bool)>,
}

/// Exact combinatorial tally of the `tΔ`-typical mass of `ρ^{⊗k}`,
/// computed from multinomial convolutions of the base spectrum — the
/// tensor power is never materialized.
pub fn flatness_report(spectrum: &[f64], k: usize, t_values: &[f64]) -> Result<FlatnessReport> {
    let base: Vec<f64> = spectrum.iter().copied().filter(|&l| l > 1e-15).collect();
    if base.is_empty() || k == 0 {
        return Err(QexError::Config("flatness needs a nonzero spectrum and k >= 1".into()));
    }
    let groups = count_compositions(k, base.len());
    if groups > 10_000_000 {
        return Err(QexError::Config(format!(
            "spectrum of {} points at k = {k} needs {groups} composition groups",
            base.len()
        )));
    }
    let m = base.iter().map(|l| -l.log2()).fold(0.0, f64::max);
    let s = shannon_entropy(&base);
    let delta = (k as f64).sqrt() * m;
    // ln k! table for exact multinomial weights.
    let mut ln_fact = vec![0.0f64; k + 1];
    for i in 1..=k {
        ln_fact[i] = ln_fact[i - 1] + (i as f64).ln();
    }
    let mut masses: Vec<(f64, f64)> = Vec::new(); // (−lg λ, total mass)
    let mut counts = vec![0usize; base.len()];
    collect_masses(&base, k, 0, k, &mut counts, &ln_fact, &mut masses);
    let rows = t_values
        .iter()
        .map(|&t| {
            let mass: f64 = masses
                .iter()
                .filter(|(neg_lg, _)| (neg_lg - k as f64 * s).abs() <= t * delta)
                .map(|(_, w)| w)
                .sum();
            let bound = 1.0 - 2f64.powf(1.0 - t * t);
            (t, mass, bound, mass >= bound - 1e-9)
        })
        .collect();
    Ok(FlatnessReport { k, m, delta, base_entropy: s, rows })
}

fn count_compositions(k: usize, parts: usize) -> usize {
    // C(k + parts − 1, parts − 1), saturating.
    let mut acc: f64 = 1.0;
    for i in 0..parts - 1 {
        acc *= (k + parts - 1 - i) as f64 / (parts - 1 - i) as f64;
    }
    acc.round() as usize
}

fn collect_masses(
    base: &[f64],
    k: usize,
    idx: usize,
    remaining: usize,
    counts: &mut Vec<usize>,
    ln_fact: &[f64],
    out: &mut Vec<(f64, f64)>,
) {
    if idx == base.len() - 1 {
        counts[idx] = remaining;
        let mut ln_weight = ln_fact[k];
        let mut neg_lg = 0.0;
        for (c, l) in counts.iter().zip(base) {
            ln_weight -= ln_fact[*c];
            ln_weight += *c as f64 * l.ln();
            neg_lg -= *c as f64 * l.log2();
        }
        out.push((neg_lg, ln_weight.exp()));
        return;
    }
    for c in 0..=remaining {
        counts[idx] = c;
        collect_masses(base, k, idx + 1, remaining - c, counts, ln_fact, out);
    }
}

// ---------------------------------------------------------------------
// Entropy vs distance

/// Instance check of the implication
/// `S(ρ) ≤ (1−ε)n ⟹ ½‖ρ − Ĩ‖_tr ≥ ε − 2^{−n}`.
pub struct EntropyDistanceVerdict {
    pub entropy: f64,
    pub distance: f64,
    pub premise_holds: bool,
    pub conclusion_holds: bool,
    /// The implication itself.
    pub consistent: bool,
}

pub fn entropy_distance_bound(rho: &DensityMatrix, epsilon: f64) -> Result<EntropyDistanceVerdict> {
    let n = (rho.dim() as f64).log2();
    let entropy = entropies(rho).von_neumann;
    let mixed = DensityMatrix::maximally_mixed(rho.dim());
    let distance = trace_distance(rho, &mixed)?;
    let premise_holds = entropy <= (1.0 - epsilon) * n + 1e-12;
    let conclusion_holds = distance >= epsilon - 1.0 / rho.dim() as f64 - 1e-9;
    Ok(EntropyDistanceVerdict {
        entropy,
        distance,
        premise_holds,
        conclusion_holds,
        consistent: !premise_holds || conclusion_holds,
    })
}

/// Distance from uniform of the extremal source: probability `ε` on one
/// string plus `1−ε` uniform; equals `ε + (1−ε)/2ⁿ − 1/2ⁿ` exactly.
pub fn extremal_distance(epsilon: f64, n_qubits: usize) -> f64 {
    let dim = (1usize << n_qubits) as f64;
    epsilon + (1.0 - epsilon) / dim - 1.0 / dim
}

/// Grid brute force over sorted diagonal spectra with entries on the grid
/// `i/denominator`; returns the number of spectra checked and the worst
/// margin `distance − (ε* − 2^{−n})` at the tight `ε* = 1 − S/n`.
pub fn entropy_distance_grid_check(n_qubits: usize, denominator: usize) -> (usize, f64) {
    let dim = 1usize << n_qubits;
    let n = n_qubits as f64;
    let mut parts = Vec::with_capacity(dim);
    let mut checked = 0usize;
    let mut worst = f64::INFINITY;
    enumerate_sorted(denominator, denominator, dim, &mut parts, &mut |spectrum: &[usize]| {
        let probs: Vec<f64> =
            spectrum.iter().map(|&c| c as f64 / denominator as f64).collect();
        let s = shannon_entropy(&probs);
        let distance: f64 =
            probs.iter().map(|p| (p - 1.0 / dim as f64).abs()).sum::<f64>() / 2.0;
        let epsilon_star = 1.0 - s / n;
        let margin = distance - (epsilon_star - 1.0 / dim as f64);
        checked += 1;
        if margin < worst {
            worst = margin;
        }
    });
    (checked, worst)
}

fn enumerate_sorted(
    remaining: usize,
    max_part: usize,
    slots: usize,
    parts: &mut Vec<usize>,
    visit: &mut impl FnMut(&[usize]),
) {
    if slots == 1 {
        if remaining <= max_part {
            parts.push(remaining);
            visit(parts);
            parts.pop();
        }
        return;
    }
    let lo = remaining.div_ceil(slots);
    for c in lo..=remaining.min(max_part) {
        parts.push(c);
        enumerate_sorted(remaining - c, c, slots - 1, parts, visit);
        parts.pop();
    }
}

/// Entropy never increases under moving mass `ε` from `λ_j` to `λ₁`
/// (both at or above `1/2ⁿ` in the intended use): returns
/// `(S_before, S_after, S_after ≤ S_before + 1e−10)`.
pub fn local_change_check(spectrum: &[f64], j: usize, epsilon: f64) -> Result<(f64, f64, bool)> {
    if j < 2 || j > spectrum.len() {
        return Err(QexError::Config(format!("index j = {j} out of range (1-based, j > 1)")));
    }
    if !(epsilon > 0.0) || spectrum[j - 1] <= epsilon {
        return Err(QexError::Config("need λ_j > ε > 0".into()));
    }
    let before = shannon_entropy(spectrum);
    let mut modified = spectrum.to_vec();
    modified[0] += epsilon;
    modified[j - 1] -= epsilon;
    let after = shannon_entropy(&modified);
    Ok((before, after, after <= before + 1e-10))
}

// ---------------------------------------------------------------------
// Three-valued formulas and the circuit builder

/// Three-valued truth value of a promise problem's characteristic function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Tri {
    Zero,
    One,
    Star,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum Formula {
    Var(usize),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
}

impl Formula {
    /// Number of subformulas.
    pub fn size(&self) -> usize {
        match self {
            Formula::Var(_) => 1,
            Formula::Not(f) => 1 + f.size(),
            Formula::And(a, b) | Formula::Or(a, b) => 1 + a.size() + b.size(),
        }
    }

    /// True when negations appear only directly on variables.
    pub fn is_nnf(&self) -> bool {
        match self {
            Formula::Var(_) => true,
            Formula::Not(f) => matches!(**f, Formula::Var(_)),
            Formula::And(a, b) | Formula::Or(a, b) => a.is_nnf() && b.is_nnf(),
        }
    }

    /// De Morgan normal form: negations pushed onto variables.
    pub fn to_nnf(&self) -> Formula {
        fn push(f: &Formula, negate: bool) -> Formula {
            match f {
                Formula::Var(v) => {
                    if negate {
                        Formula::Not(Box::new(Formula::Var(*v)))
                    } else {
                        Formula::Var(*v)
                    }
                }
                Formula::Not(inner) => push(inner, !negate),
                Formula::And(a, b) => {
                    let (pa, pb) = (push(a, negate), push(b, negate));
                    if negate {
                        Formula::Or(Box::new(pa), Box::new(pb))
                    } else {
                        Formula::And(Box::new(pa), Box::new(pb))
                    }
                }
                Formula::Or(a, b) => {
                    let (pa, pb) = (push(a, negate), push(b, negate));
                    if negate {
                        Formula::And(Box::new(pa), Box::new(pb))
                    } else {
                        Formula::Or(Box::new(pa), Box::new(pb))
                    }
                }
            }
        }
        push(self, false)
    }
}

/// The extended boolean algebra over `{0, 1, ⋆}`.
pub fn eval_formula(formula: &Formula, assignment: &[Tri]) -> Result<Tri> {
    Ok(match formula {
        Formula::Var(v) => *assignment
            .get(*v)
            .ok_or_else(|| QexError::Config(format!("unbound variable v{v}")))?,
        Formula::Not(f) => match eval_formula(f, assignment)? {
            Tri::Zero => Tri::One,
            Tri::One => Tri::Zero,
            Tri::Star => Tri::Star,
        },
        Formula::And(a, b) => match (eval_formula(a, assignment)?, eval_formula(b, assignment)?) {
            (Tri::One, Tri::One) => Tri::One,
            (Tri::Zero, _) | (_, Tri::Zero) => Tri::Zero,
            _ => Tri::Star,
        },
        Formula::Or(a, b) => match (eval_formula(a, assignment)?, eval_formula(b, assignment)?) {
            (Tri::One, _) | (_, Tri::One) => Tri::One,
            (Tri::Zero, Tri::Zero) => Tri::Zero,
            _ => Tri::Star,
        },
    })
}

/// Per-variable polarized circuit pairs: `y` far apart when the variable
/// is true, `z` far apart when it is false.
pub struct PolarizedLeaves {
    pub y: Vec<(ChannelExpression, ChannelExpression)>,
    pub z: Vec<(ChannelExpression, ChannelExpression)>,
}

/// The recursive closure construction:
///
/// 1. `ψ = v_i` → `Y_b^i`
/// 2. `ψ = ¬v_i` → `Z_b^i`
/// 3. `ψ = τ ∨ μ` → `B(τ,b) ⊗ B(μ,b)`
/// 4. `ψ = τ ∧ μ` → `½ B(τ,0)⊗B(μ,b) + ½ B(τ,1)⊗B(μ,1−b)`
///
/// Requires negation normal form; each subformula is expanded once for
/// both output bits, so the circuit size is linear in `|ψ|`.
pub fn build_circuit(
    formula: &Formula,
    b: u8,
    leaves: &PolarizedLeaves,
) -> Result<ChannelExpression> {
    if !formula.is_nnf() {
        return Err(QexError::Config("build_circuit needs negation normal form".into()));
    }
    let (zero, one) = build_pair(formula, leaves)?;
    Ok(if b == 0 { zero } else { one })
}

fn build_pair(
    formula: &Formula,
    leaves: &PolarizedLeaves,
) -> Result<(ChannelExpression, ChannelExpression)> {
    match formula {
        Formula::Var(v) => {
            let pair = leaves
                .y
                .get(*v)
                .ok_or_else(|| QexError::Config(format!("missing Y leaves for v{v}")))?;
            Ok((pair.0.clone(), pair.1.clone()))
        }
        Formula::Not(inner) => {
            let Formula::Var(v) = **inner else {
                return Err(QexError::Config("negation not in NNF position".into()));
            };
            let pair = leaves
                .z
                .get(v)
                .ok_or_else(|| QexError::Config(format!("missing Z leaves for v{v}")))?;
            Ok((pair.0.clone(), pair.1.clone()))
        }
        Formula::Or(a, b) => {
            let (a0, a1) = build_pair(a, leaves)?;
            let (b0, b1) = build_pair(b, leaves)?;
            Ok((
                ChannelExpression::Tensor { children: vec![a0.clone(), b0.clone()] },
                ChannelExpression::Tensor { children: vec![a1, b1] },
            ))
        }
        Formula::And(a, b) => {
            let (a0, a1) = build_pair(a, leaves)?;
            let (b0, b1) = build_pair(b, leaves)?;
            let mix = |x: &ChannelExpression,
                       y: &ChannelExpression,
                       p: &ChannelExpression,
                       q: &ChannelExpression| {
                ChannelExpression::Mixture {
                    weights: vec![0.5, 0.5],
                    children: vec![
                        ChannelExpression::Tensor { children: vec![x.clone(), y.clone()] },
                        ChannelExpression::Tensor { children: vec![p.clone(), q.clone()] },
                    ],
                }
            };
            Ok((mix(&a0, &b0, &a1, &b1), mix(&a0, &b1, &a1, &b0)))
        }
    }
}

/// `Δ(ψ)`: trace distance between the two builder outputs.
pub fn circuit_delta(
    formula: &Formula,
    leaves: &PolarizedLeaves,
) -> Result<f64> {
    let zero = evaluate(&build_circuit(formula, 0, leaves)?)?;
    let one = evaluate(&build_circuit(formula, 1, leaves)?)?;
    trace_distance(&zero, &one)
}

// ---------------------------------------------------------------------
// QEA → co-QSD

/// One named feasibility constraint of the hashing reduction.
#[derive(Debug, Clone, Serialize)]
pub struct Constraint {
    pub name: String,
    pub satisfied: bool,
    pub detail: String,
}

/// Output of the entropy-approximation reduction: the hashed state `ξ`
/// against the maximally mixed state, with both thresholds.
pub struct QeaToQsdReport {
    pub xi: DensityMatrix,
    pub distance: f64,
    /// Accept when the distance is at most `5ε`.
    pub yes_bound: f64,
    /// Reject when the distance is at least `1/(qm) − 2^{−qm}`.
    pub no_bound: f64,
    pub base_entropy: f64,
    pub tensor_entropy: f64,
    pub constraints: Vec<Constraint>,
    pub feasible: bool,
    pub verdict: Tri,
    pub big_o_constant: f64,
}

/// Runs `ξ = E(⟨Q⟩^{⊗q})` and evaluates both verdict thresholds. With
/// `strict` set, unsatisfiable parameter constraints abort with the
/// violated constraint named; otherwise they are reported.
pub fn qea_to_qsd(
    circuit: &ChannelExpression,
    t: u32,
    epsilon: f64,
    q: u32,
    extractor: &Superoperator,
    strict: bool,
) -> Result<QeaToQsdReport> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(QexError::Config("need 0 < ε < 1".into()));
    }
    let rho = evaluate(circuit)?;
    let m_qubits = circuit.qubits() * q as usize;
    if m_qubits > QUBIT_CAP {
        return Err(QexError::Channel(format!(
            "q·m = {m_qubits} qubits exceeds the cap {QUBIT_CAP}"
        )));
    }
    let dim = 1usize << m_qubits;
    if extractor.dim() != dim {
        return Err(QexError::DimensionMismatch { expected: dim, got: extractor.dim() });
    }
    let mut tensor = CMatrix::identity(1, 1);
    for _ in 0..q {
        tensor = crate::linalg::kron(&tensor, &rho.matrix);
    }
    let xi = DensityMatrix::new_unchecked(extractor.apply(&tensor));
    let mixed = DensityMatrix::maximally_mixed(dim);
    let distance = trace_distance(&xi, &mixed)?;

    let base = entropies(&rho);
    let m_hat = base
        .eigenvalues
        .iter()
        .filter(|&&l| l > 1e-15)
        .map(|l| -l.log2())
        .fold(0.0, f64::max);
    let r = (1.0 / epsilon).log2().max(0.0).sqrt();
    let delta = (q as f64).sqrt() * m_hat;
    let qm = m_qubits as f64;
    let no_bound = 1.0 / qm - 2f64.powf(-qm);
    let yes_bound = 5.0 * epsilon;

    let constraints = vec![
        Constraint {
            name: "q >= r*Delta + 1".into(),
            satisfied: q as f64 >= r * delta + 1.0,
            detail: format!("q = {q}, rΔ + 1 = {:.4}", r * delta + 1.0),
        },
        Constraint {
            name: "q > 2 lg(1/eps) + lg(qm) + C".into(),
            satisfied: q as f64
                > 2.0 * (1.0 / epsilon).log2() + qm.log2() + QEA_BIG_O_CONSTANT,
            detail: format!(
                "q = {q}, rhs = {:.4}",
                2.0 * (1.0 / epsilon).log2() + qm.log2() + QEA_BIG_O_CONSTANT
            ),
        },
        Constraint {
            name: "5 eps < no_bound^2".into(),
            satisfied: yes_bound < no_bound * no_bound,
            detail: format!("5ε = {yes_bound:.4}, no_bound² = {:.6}", no_bound * no_bound),
        },
    ];
    let feasible = constraints.iter().all(|c| c.satisfied);
    if strict && !feasible {
        let violated = constraints.iter().find(|c| !c.satisfied).unwrap();
        return Err(QexError::Infeasible(format!(
            "{} ({})",
            violated.name, violated.detail
        )));
    }
    let verdict = if distance <= yes_bound {
        Tri::One
    } else if distance >= no_bound {
        Tri::Zero
    } else {
        Tri::Star
    };
    let _ = t; // the threshold enters through the caller's promise, not the hash
    Ok(QeaToQsdReport {
        xi,
        distance,
        yes_bound,
        no_bound,
        base_entropy: base.von_neumann,
        tensor_entropy: q as f64 * base.von_neumann,
        constraints,
        feasible,
        verdict,
        big_o_constant: QEA_BIG_O_CONSTANT,
    })
}

// ---------------------------------------------------------------------
// QED → formula over QEA

/// Characteristic value of a QEA instance from its exact entropy, with `⋆`
/// on the closed boundary.
pub fn chi_qea(entropy: f64, t: f64) -> Tri {
    if entropy > t + 0.5 {
        Tri::One
    } else if entropy < t - 0.5 {
        Tri::Zero
    } else {
        Tri::Star
    }
}

/// Characteristic value of a QSD instance from its exact trace distance.
pub fn chi_qsd(distance: f64, alpha: f64, beta: f64) -> Tri {
    if distance > beta {
        Tri::One
    } else if distance < alpha {
        Tri::Zero
    } else {
        Tri::Star
    }
}

pub struct QedFormulaReport {
    /// `S(ξ_0) = 6·S(⟨Q_0⟩)` by tensor additivity.
    pub s0: f64,
    pub s1: f64,
    pub disjuncts: Vec<(u32, Tri)>,
    pub value: Tri,
}

/// Expresses an entropy-difference instance as
/// `⋁_t [(ξ₀,t) ∈ QEA_Y ∧ (ξ₁,t) ∈ QEA_N]` with `ξ_i = ⟨Q_i⟩^{⊗6}` and
/// evaluates it over the exact entropies.
pub fn qed_to_formula(q0: &ChannelExpression, q1: &ChannelExpression) -> Result<QedFormulaReport> {
    let s0 = 6.0 * entropies(&evaluate(q0)?).von_neumann;
    let s1 = 6.0 * entropies(&evaluate(q1)?).von_neumann;
    let n = q0.qubits().max(q1.qubits());
    let t_max = 6 * n as u32;
    // Each disjunct is v₀ ∧ ¬v₁ over the two QEA characteristic values.
    let template = Formula::And(
        Box::new(Formula::Var(0)),
        Box::new(Formula::Not(Box::new(Formula::Var(1)))),
    );
    let mut disjuncts = Vec::new();
    let mut value = Tri::Zero;
    for t in 1..=t_max {
        let assignment = [chi_qea(s0, t as f64), chi_qea(s1, t as f64)];
        let v = eval_formula(&template, &assignment)?;
        disjuncts.push((t, v));
        value = match (value, v) {
            (Tri::One, _) | (_, Tri::One) => Tri::One,
            (Tri::Zero, Tri::Zero) => Tri::Zero,
            _ => Tri::Star,
        };
    }
    Ok(QedFormulaReport { s0, s1, disjuncts, value })
}

// ---------------------------------------------------------------------
// QSD → QED

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolarizeMode {
    Identity,
    TensorPower { copies: usize },
}

impl std::str::FromStr for PolarizeMode {
    type Err = QexError;
    fn from_str(s: &str) -> Result<Self> {
        if s == "identity" {
            return Ok(PolarizeMode::Identity);
        }
        if let Some(k) = s.strip_prefix("tensor:") {
            let copies: usize =
                k.parse().map_err(|_| QexError::Config(format!("bad tensor copies '{k}'")))?;
            if copies == 0 {
                return Err(QexError::Config("tensor mode needs k >= 1".into()));
            }
            return Ok(PolarizeMode::TensorPower { copies });
        }
        Err(QexError::Config(format!(
            "unsupported polarization mode '{s}': full α < β² polarization is out of scope; \
             use 'identity' or 'tensor:<k>' on pre-separated instances"
        )))
    }
}

/// Gap-amplification stub: `identity` passes circuits through;
/// `tensor:<k>` returns `k`-fold tensor powers (distance is monotone
/// non-decreasing under tensoring, which polarizes only pre-separated
/// instances).
pub fn polarize(
    q0: &ChannelExpression,
    q1: &ChannelExpression,
    mode: PolarizeMode,
) -> Result<(ChannelExpression, ChannelExpression)> {
    match mode {
        PolarizeMode::Identity => Ok((q0.clone(), q1.clone())),
        PolarizeMode::TensorPower { copies } => {
            let rep = |c: &ChannelExpression| ChannelExpression::Tensor {
                children: std::iter::repeat(c.clone()).take(copies).collect(),
            };
            Ok((rep(q0), rep(q1)))
        }
    }
}

pub struct QsdToQedReport {
    /// First output circuit `Z₀ ⊗ Z₀ ⊗ C`.
    pub first: ChannelExpression,
    /// Second output circuit `Z₁ ⊗ Z₁`.
    pub second: ChannelExpression,
    pub polarized_distance: f64,
    pub s_z0: f64,
    pub s_z1: f64,
    /// `S(⟨Z₁⊗Z₁⟩) − S(⟨Z₀⊗Z₀⊗C⟩)`; at most −0.8 on far instances and at
    /// least +0.8 on near ones.
    pub entropy_gap: f64,
    /// One on far (distinguishable) instances, Zero on near ones.
    pub verdict: Tri,
}

/// The coin-flip reduction: `Z₁` keeps a fair coin choosing between the
/// polarized circuits, `Z₀` traces it out, `C` is one maximally mixed
/// qubit; the output pair is `(Z₀⊗Z₀⊗C, Z₁⊗Z₁)`. Inputs whose polarized
/// distance sits in the dead zone `(2^{−m₀}, 1 − 2^{−m₀})` are rejected.
pub fn qsd_to_qed(
    q0: &ChannelExpression,
    q1: &ChannelExpression,
    m0: u32,
    mode: PolarizeMode,
) -> Result<QsdToQedReport> {
    let (r0, r1) = polarize(q0, q1, mode)?;
    let rho0 = evaluate(&r0)?;
    let rho1 = evaluate(&r1)?;
    let polarized_distance = trace_distance(&rho0, &rho1)?;
    let cutoff = 2f64.powi(-(m0 as i32));
    let far = polarized_distance >= 1.0 - cutoff;
    let near = polarized_distance <= cutoff;
    if !far && !near {
        return Err(QexError::Infeasible(format!(
            "polarized distance {polarized_distance:.6} lies in the dead zone \
             ({cutoff:.2e}, {:.6})",
            1.0 - cutoff
        )));
    }

    let z1 = ChannelExpression::CoinConditioned { zero: Box::new(r0), one: Box::new(r1) };
    let z0 = ChannelExpression::TraceOut { child: Box::new(z1.clone()), qubits: vec![0] };
    let first = ChannelExpression::Tensor {
        children: vec![z0.clone(), z0.clone(), ChannelExpression::mixed_qubit()],
    };
    let second = ChannelExpression::Tensor { children: vec![z1.clone(), z1.clone()] };

    let s_z0 = entropies(&evaluate(&z0)?).von_neumann;
    let s_z1 = entropies(&evaluate(&z1)?).von_neumann;
    let s_first = entropies(&evaluate(&first)?).von_neumann;
    let s_second = entropies(&evaluate(&second)?).von_neumann;
    let entropy_gap = s_second - s_first;
    let verdict = if far { Tri::One } else { Tri::Zero };
    Ok(QsdToQedReport { first, second, polarized_distance, s_z0, s_z1, entropy_gap, verdict })
}

// ---------------------------------------------------------------------
// Information-theoretic inequality checks

pub struct InequalityReport {
    /// `|S(Σ p_i |i⟩⟨i| ⊗ ρ_i) − (H(p) + Σ p_i S(ρ_i))|`.
    pub joint_entropy_residual: f64,
    /// `(t(lg d − lg t) − |S(ρ₀) − S(ρ₁)|, applied?)` with `t = ‖ρ₀−ρ₁‖_tr`.
    pub fannes_margin: Option<f64>,
    /// `S(ρ̄) − (½[S₀+S₁] + 1 − H(½ + TD/2))` for `ρ̄ = ½(ρ₀+ρ₁)`.
    pub holevo_margin: f64,
    /// `|optimal measurement advantage − TD|` via the Helstrom projector.
    pub distinguishability_residual: f64,
    pub all_hold: bool,
}

/// Evaluates the joint entropy theorem, Fannes' inequality (skipped and
/// reported when `‖ρ₀−ρ₁‖_tr > 1/e`), the Holevo-based entropy bound, and
/// the optimal-measurement characterization of trace distance.
pub fn inequality_checks(
    rho0: &DensityMatrix,
    rho1: &DensityMatrix,
    p: (f64, f64),
) -> Result<InequalityReport> {
    if rho0.dim() != rho1.dim() {
        return Err(QexError::DimensionMismatch { expected: rho0.dim(), got: rho1.dim() });
    }
    if (p.0 + p.1 - 1.0).abs() > 1e-12 || p.0 < 0.0 || p.1 < 0.0 {
        return Err(QexError::Config("p-list must be a distribution".into()));
    }
    let dim = rho0.dim();
    let s0 = entropies(rho0).von_neumann;
    let s1 = entropies(rho1).von_neumann;

    // Joint entropy: flag qubit ⊗ states.
    let mut joint = CMatrix::zeros(2 * dim, 2 * dim);
    for r in 0..dim {
        for c in 0..dim {
            joint[(r, c)] = rho0.matrix[(r, c)] * p.0;
            joint[(dim + r, dim + c)] = rho1.matrix[(r, c)] * p.1;
        }
    }
    let s_joint = entropies(&DensityMatrix::new_unchecked(joint)).von_neumann;
    let expected = shannon_entropy(&[p.0, p.1]) + p.0 * s0 + p.1 * s1;
    let joint_entropy_residual = (s_joint - expected).abs();

    // Fannes in bits: |S₀ − S₁| ≤ t·lg(d) − t·lg(t) for t = full trace norm.
    let t_full = trace_norm(&(&rho0.matrix - &rho1.matrix));
    let fannes_margin = if t_full > 1.0 / std::f64::consts::E {
        None
    } else if t_full < 1e-15 {
        Some(0.0 - (s0 - s1).abs())
    } else {
        Some(t_full * ((dim as f64).log2() - t_full.log2()) - (s0 - s1).abs())
    };

    // Holevo-based bound on the mixture entropy.
    let avg = DensityMatrix::new_unchecked((&rho0.matrix + &rho1.matrix) * Complex64::new(0.5, 0.0));
    let td = trace_distance(rho0, rho1)?;
    let s_avg = entropies(&avg).von_neumann;
    let holevo_margin = s_avg - (0.5 * (s0 + s1) + 1.0 - binary_entropy(0.5 + td / 2.0));

    // Helstrom: project onto the nonnegative eigenspace of ρ₀ − ρ₁.
    let diff = &rho0.matrix - &rho1.matrix;
    let (vals, vecs) = crate::linalg::hermitian_eigen(&diff);
    let mut projector = CMatrix::zeros(dim, dim);
    for (i, &v) in vals.iter().enumerate() {
        if v >= 0.0 {
            let col = vecs.column(i);
            projector += &col * col.adjoint();
        }
    }
    let success = 0.5
        * ((&projector * &rho0.matrix).trace().re
            + ((CMatrix::identity(dim, dim) - &projector) * &rho1.matrix).trace().re);
    let distinguishability_residual = (success - (0.5 + td / 2.0)).abs();

    let all_hold = joint_entropy_residual <= 1e-8
        && fannes_margin.map_or(true, |m| m >= -1e-8)
        && holevo_margin >= -1e-8
        && distinguishability_residual <= 1e-8;
    Ok(InequalityReport {
        joint_entropy_residual,
        fannes_margin,
        holevo_margin,
        distinguishability_residual,
        all_hold,
    })
}

// ---------------------------------------------------------------------
// JSON schema for circuits and reduction instances

/// One node of the on-disk circuit format; children refer to earlier
/// indices in the node list.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum NodeSpec {
    PrepareZeros { qubits: usize },
    UnitaryGate { child: usize, targets: Vec<usize>, matrix: Vec<Vec<[f64; 2]>> },
    MeasureDephase { child: usize, qubits: Vec<usize> },
    CoinConditioned { zero: usize, one: usize },
    Tensor { children: Vec<usize> },
    Mixture { weights: Vec<f64>, children: Vec<usize> },
    TraceOut { child: usize, qubits: Vec<usize> },
    OutputSelect { child: usize, qubits: Vec<usize> },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CircuitSpec {
    pub nodes: Vec<NodeSpec>,
    pub root: usize,
}

/// Builds the expression tree from the node list; children must precede
/// their parents, which rules out cycles.
pub fn build_expression(spec: &CircuitSpec) -> Result<ChannelExpression> {
    let mut built: Vec<ChannelExpression> = Vec::with_capacity(spec.nodes.len());
    let fetch = |built: &[ChannelExpression], idx: usize, at: usize| -> Result<ChannelExpression> {
        if idx >= at {
            return Err(QexError::Channel(format!(
                "node {at} references child {idx}; children must come first"
            )));
        }
        Ok(built[idx].clone())
    };
    for (at, node) in spec.nodes.iter().enumerate() {
        let expr = match node {
            NodeSpec::PrepareZeros { qubits } => ChannelExpression::PrepareZeros { qubits: *qubits },
            NodeSpec::UnitaryGate { child, targets, matrix } => {
                let rows = matrix.len();
                let mat = CMatrix::from_fn(rows, rows, |r, c| {
                    let [re, im] = matrix[r][c];
                    Complex64::new(re, im)
                });
                ChannelExpression::UnitaryGate {
                    child: Box::new(fetch(&built, *child, at)?),
                    targets: targets.clone(),
                    matrix: mat,
                }
            }
            NodeSpec::MeasureDephase { child, qubits } => ChannelExpression::MeasureDephase {
                child: Box::new(fetch(&built, *child, at)?),
                qubits: qubits.clone(),
            },
            NodeSpec::CoinConditioned { zero, one } => ChannelExpression::CoinConditioned {
                zero: Box::new(fetch(&built, *zero, at)?),
                one: Box::new(fetch(&built, *one, at)?),
            },
            NodeSpec::Tensor { children } => ChannelExpression::Tensor {
                children: children
                    .iter()
                    .map(|&c| fetch(&built, c, at))
                    .collect::<Result<Vec<_>>>()?,
            },
            NodeSpec::Mixture { weights, children } => ChannelExpression::Mixture {
                weights: weights.clone(),
                children: children
                    .iter()
                    .map(|&c| fetch(&built, c, at))
                    .collect::<Result<Vec<_>>>()?,
            },
            NodeSpec::TraceOut { child, qubits } => ChannelExpression::TraceOut {
                child: Box::new(fetch(&built, *child, at)?),
                qubits: qubits.clone(),
            },
            NodeSpec::OutputSelect { child, qubits } => ChannelExpression::OutputSelect {
                child: Box::new(fetch(&built, *child, at)?),
                qubits: qubits.clone(),
            },
        };
        built.push(expr);
    }
    built
        .get(spec.root)
        .cloned()
        .ok_or_else(|| QexError::Channel(format!("root {} out of range", spec.root)))
}
