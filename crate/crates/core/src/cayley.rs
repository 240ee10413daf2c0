//! The normalized adjacency operator of a Cayley graph, its spectrum, and
//! the Lubotzky–Phillips–Sarnak Ramanujan generator family.
//!
//! For an inverse-closed generator multiset `Γ` the operator is
//! `M = (1/|Γ|) Σ_γ |xγ⟩⟨x|` — real, symmetric and doubly stochastic, so
//! `λ₁ = 1` and all eigenvalues are real in `[-1, 1]`.

use crate::groups::{
    is_prime, FiniteGroup, GeneratingSet, ProjectiveMat2, SubgroupTower,
};
use crate::linalg::{symmetric_eigenvalues, RMatrix};
use crate::{QexError, Result};
use std::collections::HashMap;

/// Normalized Cayley adjacency operator.
pub struct CayleyOperator {
    pub degree: usize,
    pub matrix: RMatrix,
}

/// Real spectrum of a Cayley operator, eigenvalues descending.
pub struct SpectrumReport {
    pub eigenvalues: Vec<f64>,
    /// `λ̄ = max_{i>1} |λ_i|`.
    pub lambda_bar: f64,
    /// Orthonormal eigenvector columns matching `eigenvalues`, when requested.
    pub eigenvectors: Option<RMatrix>,
}

/// Builds `M = (1/|Γ|) Σ_γ P_γ` where `P_γ` is right multiplication by `γ`.
pub fn cayley_operator(group: &FiniteGroup, gens: &GeneratingSet) -> Result<CayleyOperator> {
    if !gens.is_inverse_closed(group) {
        return Err(QexError::InvalidGenerators("Γ must be closed under inverse".into()));
    }
    let n = group.order();
    let d = gens.degree();
    let mut matrix = RMatrix::zeros(n, n);
    let w = 1.0 / d as f64;
    for &gamma in &gens.elements {
        for x in 0..n {
            matrix[(group.mul(x, gamma), x)] += w;
        }
    }
    Ok(CayleyOperator { degree: d, matrix })
}

/// Full real eigendecomposition of a symmetric Cayley operator.
pub fn spectrum(op: &CayleyOperator, want_eigenvectors: bool) -> Result<SpectrumReport> {
    let sym_residual = (&op.matrix - op.matrix.transpose()).abs().max();
    if sym_residual > 1e-12 {
        return Err(QexError::Numerical(format!(
            "Cayley operator not symmetric (residual {sym_residual:.2e})"
        )));
    }
    let n = op.matrix.nrows();
    let (eigenvalues, eigenvectors) = if want_eigenvectors {
        let eig = op.matrix.clone().symmetric_eigen();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap());
        let vals: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let mut vecs = RMatrix::zeros(n, n);
        for (col, &i) in order.iter().enumerate() {
            vecs.set_column(col, &eig.eigenvectors.column(i));
        }
        (vals, Some(vecs))
    } else {
        (symmetric_eigenvalues(&op.matrix), None)
    };
    let lambda_bar = eigenvalues.iter().skip(1).map(|l| l.abs()).fold(0.0, f64::max);
    if (eigenvalues[0] - 1.0).abs() > 1e-9 {
        return Err(QexError::Numerical(format!(
            "top Cayley eigenvalue {} is not 1",
            eigenvalues[0]
        )));
    }
    Ok(SpectrumReport { eigenvalues, lambda_bar, eigenvectors })
}

/// Ramanujan verdict against the optimal bound `2√(D−1)/D`.
///
/// Connected bipartite Cayley graphs (the LPS case when `p` is a
/// non-residue mod `q`) carry the trivial eigenvalue `−1`; eigenvalues
/// within `1e−9` of `−1` are excluded from the tested quantity, matching
/// the bipartite Ramanujan convention. Returns the verdict and the margin
/// `threshold − λ̄`.
pub fn ramanujan_check(report: &SpectrumReport, degree: usize) -> Result<(bool, f64)> {
    if degree < 3 {
        return Err(QexError::Config(format!("ramanujan check needs degree >= 3, got {degree}")));
    }
    let threshold = 2.0 * ((degree - 1) as f64).sqrt() / degree as f64;
    let lambda = report
        .eigenvalues
        .iter()
        .skip(1)
        .filter(|&&l| l > -1.0 + 1e-9)
        .map(|l| l.abs())
        .fold(0.0, f64::max);
    Ok((lambda <= threshold + 1e-9, threshold - lambda))
}

/// Breadth-first connectivity and bipartiteness of the Cayley graph; used
/// to cross-check `λ̄ < 1`.
pub fn connectivity(group: &FiniteGroup, gens: &GeneratingSet) -> (bool, bool) {
    let n = group.order();
    let mut color = vec![-1i8; n];
    color[group.identity()] = 0;
    let mut queue = std::collections::VecDeque::from([group.identity()]);
    let mut seen = 1usize;
    let mut bipartite = true;
    while let Some(x) = queue.pop_front() {
        for &gamma in &gens.elements {
            let y = group.mul(x, gamma);
            if color[y] == -1 {
                color[y] = 1 - color[x];
                seen += 1;
                queue.push_back(y);
            } else if color[y] == color[x] {
                bipartite = false;
            }
        }
    }
    (seen == n, bipartite)
}

/// Which group the LPS construction landed on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpsHost {
    Pgl,
    Psl,
}

/// An LPS Ramanujan generator set together with its host group.
pub struct LpsGraph {
    pub group: FiniteGroup,
    pub tower: Option<SubgroupTower>,
    pub generators: GeneratingSet,
    pub host: LpsHost,
    pub p: u64,
    pub q: u64,
}

fn legendre(a: u64, q: u64) -> i64 {
    // a^((q-1)/2) mod q ∈ {1, q-1}
    let r = crate::groups::FqElement::new(a as i64, q).pow((q - 1) / 2).value;
    if r == 1 {
        1
    } else {
        -1
    }
}

fn sqrt_minus_one(q: u64) -> u64 {
    (1..q).find(|&x| x * x % q == q - 1).expect("q ≡ 1 (mod 4) has √-1")
}

/// The `p+1` quaternion solutions of `a²+b²+c²+d² = p` with `a` odd
/// positive and `b,c,d` even, mapped to projective matrices
/// `[[a+ib, c+id], [−c+id, a−ib]]` with `i² ≡ −1 (mod q)`.
///
/// Requires `p ≠ q` odd primes, `p ≡ q ≡ 1 (mod 4)` and `q > 2√p`. The
/// host is `PSL(2,q)` when `p` is a quadratic residue mod `q` and
/// `PGL(2,q)` otherwise (the paper's case).
pub fn lps_generators(p: u64, q: u64) -> Result<LpsGraph> {
    if !is_prime(p) || !is_prime(q) || p == q {
        return Err(QexError::Config(format!("lps needs distinct primes, got p={p} q={q}")));
    }
    if p % 4 != 1 || q % 4 != 1 {
        return Err(QexError::Config("lps needs p ≡ q ≡ 1 (mod 4)".into()));
    }
    if (q * q) as f64 <= 4.0 * p as f64 {
        return Err(QexError::Config("lps needs q > 2√p".into()));
    }

    let root = sqrt_minus_one(q) as i64;
    let bound = (p as f64).sqrt().floor() as i64;
    let mut mats = Vec::new();
    let mut a = 1i64;
    while a <= bound {
        for b in evens(bound) {
            for c in evens(bound) {
                for d in evens(bound) {
                    if a * a + b * b + c * c + d * d == p as i64 {
                        mats.push(ProjectiveMat2::new(
                            a + root * b,
                            c + root * d,
                            -c + root * d,
                            a - root * b,
                            q,
                        )?);
                    }
                }
            }
        }
        a += 2;
    }
    if mats.len() != (p + 1) as usize {
        return Err(QexError::Numerical(format!(
            "expected {} quaternion solutions, found {}",
            p + 1,
            mats.len()
        )));
    }

    let host = if legendre(p, q) == 1 { LpsHost::Psl } else { LpsHost::Pgl };
    let (group, tower) = match host {
        LpsHost::Pgl => {
            let (g, t) = crate::groups::make_pgl2_with_cap(q, usize::MAX)?;
            (g, Some(t))
        }
        LpsHost::Psl => (make_psl2(q)?, None),
    };
    let index: HashMap<ProjectiveMat2, usize> = group
        .projective_elements()
        .expect("LPS hosts are structurally backed")
        .iter()
        .enumerate()
        .map(|(i, &m)| (m, i))
        .collect();
    let elements = mats
        .iter()
        .map(|m| {
            index.get(m).copied().ok_or_else(|| {
                QexError::Numerical("lps generator not found in host group".into())
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let generators = GeneratingSet::new(&group, elements)?;
    Ok(LpsGraph { group, tower, generators, host, p, q })
}

fn evens(bound: i64) -> impl Iterator<Item = i64> {
    (-bound..=bound).filter(|v| v % 2 == 0)
}

fn projective_det(m: &ProjectiveMat2, q: u64) -> u64 {
    (m.a * m.d % q + q - m.b * m.c % q) % q
}

/// `PSL(2,q)`: canonical projective matrices with square determinant.
fn make_psl2(q: u64) -> Result<FiniteGroup> {
    if q < 5 || q % 2 == 0 || !is_prime(q) {
        return Err(QexError::InvalidGroup(format!("psl2 needs an odd prime q >= 5, got {q}")));
    }
    let mut elems = Vec::new();
    for a in 0..q {
        for b in 0..q {
            for c in 0..q {
                for d in 0..q {
                    if let Ok(m) = ProjectiveMat2::new(a as i64, b as i64, c as i64, d as i64, q)
                    {
                        if (m.a, m.b, m.c, m.d) == (a, b, c, d)
                            && legendre(projective_det(&m, q), q) == 1
                        {
                            elems.push(m);
                        }
                    }
                }
            }
        }
    }
    debug_assert_eq!(elems.len() as u64, q * (q - 1) * (q + 1) / 2);
    let identity = elems
        .iter()
        .position(|&m| m == ProjectiveMat2::identity(q))
        .expect("identity has square determinant");
    Ok(crate::groups::finite_group_from_parts(identity, format!("psl2:{q}"), elems))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groups::{make_cyclic, random_symmetric_generators};

    #[test]
    fn z2_swap_operator() {
        let g = make_cyclic(2).unwrap();
        let gens = GeneratingSet::new(&g, vec![1, 1]).unwrap();
        let op = cayley_operator(&g, &gens).unwrap();
        assert_eq!(op.matrix[(0, 1)], 1.0);
        assert_eq!(op.matrix[(1, 0)], 1.0);
        assert_eq!(op.matrix[(0, 0)], 0.0);
        let report = spectrum(&op, false).unwrap();
        assert!((report.eigenvalues[0] - 1.0).abs() < 1e-12);
        assert!((report.eigenvalues[1] + 1.0).abs() < 1e-12);
        assert!((report.lambda_bar - 1.0).abs() < 1e-12);
    }

    #[test]
    fn z3_circulant_spectrum() {
        let g = make_cyclic(3).unwrap();
        let gens = GeneratingSet::new(&g, vec![1, 2]).unwrap();
        let op = cayley_operator(&g, &gens).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let expect = if i == j { 0.0 } else { 0.5 };
                assert!((op.matrix[(i, j)] - expect).abs() < 1e-15);
            }
        }
        let report = spectrum(&op, false).unwrap();
        assert!((report.lambda_bar - 0.5).abs() < 1e-12);
        assert!((report.eigenvalues[1] + 0.5).abs() < 1e-9);
        assert!((report.eigenvalues[2] + 0.5).abs() < 1e-9);
    }

    #[test]
    fn z8_cycle_eigenvalues_are_cosines() {
        let g = make_cyclic(8).unwrap();
        let gens = GeneratingSet::new(&g, vec![1, 7]).unwrap();
        let report = spectrum(&cayley_operator(&g, &gens).unwrap(), false).unwrap();
        let mut expected: Vec<f64> =
            (0..8).map(|k| (2.0 * std::f64::consts::PI * k as f64 / 8.0).cos()).collect();
        expected.sort_by(|a, b| b.partial_cmp(a).unwrap());
        for (got, want) in report.eigenvalues.iter().zip(&expected) {
            assert!((got - want).abs() < 1e-9);
        }
        // The 8-cycle is bipartite: λ = −1 is present, so λ̄ = 1, and the
        // largest non-trivial |λ| is cos(π/4).
        assert!((report.lambda_bar - 1.0).abs() < 1e-12);
        let interior = report
            .eigenvalues
            .iter()
            .skip(1)
            .filter(|&&l| l > -1.0 + 1e-9)
            .map(|l| l.abs())
            .fold(0.0, f64::max);
        assert!((interior - (std::f64::consts::PI / 4.0).cos()).abs() < 1e-9);
    }

    #[test]
    fn row_sums_and_trace_identity() {
        let (g, _) = crate::groups::make_pgl2(3).unwrap();
        for seed in [1u64, 2, 3] {
            let gens = random_symmetric_generators(&g, 4, seed).unwrap();
            let op = cayley_operator(&g, &gens).unwrap();
            for i in 0..g.order() {
                assert!((op.matrix.row(i).sum() - 1.0).abs() < 1e-12);
                assert!((op.matrix.column(i).sum() - 1.0).abs() < 1e-12);
            }
            let report = spectrum(&op, false).unwrap();
            let loops =
                gens.elements.iter().filter(|&&x| x == g.identity()).count() as f64;
            let trace_expected = loops / gens.degree() as f64;
            let sum: f64 = report.eigenvalues.iter().sum();
            assert!((sum - trace_expected).abs() < 1e-9);
        }
    }

    #[test]
    fn lambda_bar_matches_connectivity_and_bipartiteness() {
        // Connected non-bipartite, connected bipartite, disconnected.
        let cases: Vec<(FiniteGroup, Vec<usize>)> = vec![
            (make_cyclic(5).unwrap(), vec![1, 4]),
            (make_cyclic(8).unwrap(), vec![1, 7]),
            (make_cyclic(6).unwrap(), vec![2, 4]),
        ];
        for (g, gens) in cases {
            let gens = GeneratingSet::new(&g, gens).unwrap();
            let report = spectrum(&cayley_operator(&g, &gens).unwrap(), false).unwrap();
            let (connected, bipartite) = connectivity(&g, &gens);
            let gapped = report.lambda_bar < 1.0 - 1e-9;
            assert_eq!(gapped, connected && !bipartite);
        }
    }

    #[test]
    fn ramanujan_threshold_values() {
        let g = make_cyclic(8).unwrap();
        let gens = GeneratingSet::new(&g, vec![1, 7]).unwrap();
        let report = spectrum(&cayley_operator(&g, &gens).unwrap(), false).unwrap();
        let (_, margin) = ramanujan_check(&report, 6).unwrap();
        let threshold = 2.0 * 5.0f64.sqrt() / 6.0;
        assert!((threshold - 0.745356).abs() < 1e-6);
        // Margin is threshold − λ̄ with λ̄ = cos(π/4) here.
        assert!((margin - (threshold - (std::f64::consts::PI / 4.0).cos())).abs() < 1e-9);

        // Disconnected-like λ̄ = 1 fails.
        let g6 = make_cyclic(6).unwrap();
        let gens = GeneratingSet::new(&g6, vec![2, 4]).unwrap();
        let report = spectrum(&cayley_operator(&g6, &gens).unwrap(), false).unwrap();
        let (ok, _) = ramanujan_check(&report, 6).unwrap();
        assert!(!ok);
    }

    #[test]
    fn lps_solution_counts_and_inverse_closure() {
        let lps = lps_generators(5, 13).unwrap();
        assert_eq!(lps.generators.degree(), 6);
        assert_eq!(lps.host, LpsHost::Pgl);
        assert_eq!(lps.group.order(), 2184);
        assert!(lps.generators.is_inverse_closed(&lps.group));

        let lps = lps_generators(13, 17).unwrap();
        assert_eq!(lps.generators.degree(), 14);
        assert!(lps.generators.is_inverse_closed(&lps.group));
    }

    #[test]
    fn lps_rejects_bad_parameters() {
        assert!(lps_generators(3, 13).is_err()); // p ≢ 1 (mod 4)
        assert!(lps_generators(5, 7).is_err()); // q ≢ 1 (mod 4)
        assert!(lps_generators(13, 5).is_err()); // q not > 2√p
    }
}
