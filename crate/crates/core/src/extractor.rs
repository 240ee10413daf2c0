//! Entropy functionals, balanced quantum extractors, and the rank
//! experiment behind the degree lower bound.
//!
//! A `(k, d, ε)` extractor is a `2^d`-regular superoperator mapping every
//! state of min-entropy at least `k` to within `ε` of the maximally mixed
//! state in trace distance. A `(D = 2^d, λ̄)` quantum expander is such an
//! extractor with `ε = 2^{t/2}·λ̄` at `k = n − t`; regularity also caps
//! entropy production at `d` bits per application.

use crate::linalg::{fro_norm, hermitian_eigen, orthonormalize_columns, CMatrix};
use crate::qexpander::{regularity_check, DensityMatrix, Superoperator};
use crate::{QexError, Result};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Entropies in bits. All three are functions of the spectrum:
/// `S = Σ −λ lg λ`, `H₂ = −lg Σ λ²`, `H_∞ = −lg λ_max`.
pub struct EntropyReport {
    pub von_neumann: f64,
    pub renyi2: f64,
    pub min_entropy: f64,
    pub eigenvalues: Vec<f64>,
}

/// Shannon entropy of a probability vector, in bits; `0·lg(1/0) = 0`.
pub fn shannon_entropy(probs: &[f64]) -> f64 {
    probs.iter().filter(|&&p| p > 0.0).map(|&p| -p * p.log2()).sum()
}

/// Binary entropy `H(p)`.
pub fn binary_entropy(p: f64) -> f64 {
    shannon_entropy(&[p, 1.0 - p])
}

/// Entropy functionals of a density matrix; eigenvalues are clipped at
/// zero before taking logs.
pub fn entropies(rho: &DensityMatrix) -> EntropyReport {
    let eigenvalues: Vec<f64> = rho.eigenvalues().iter().map(|&l| l.max(0.0)).collect();
    let von_neumann = shannon_entropy(&eigenvalues);
    let collision: f64 = eigenvalues.iter().map(|l| l * l).sum();
    let renyi2 = -collision.log2();
    let min_entropy = -eigenvalues[0].log2();
    EntropyReport { von_neumann, renyi2, min_entropy, eigenvalues }
}

/// `ε = 2^{t/2}·λ̄` from the expander-to-extractor lemma.
pub fn expander_to_extractor_params(lambda_bar: f64, t: f64) -> f64 {
    2f64.powf(t / 2.0) * lambda_bar
}

/// Outcome of sampling-based extractor verification.
pub struct ExtractorCheckReport {
    pub epsilon: f64,
    pub worst_distance: f64,
    pub trials: usize,
    pub pass: bool,
    /// Set when `ε ≥ 1`: the trace-distance cap makes the claim empty.
    pub vacuous: bool,
}

/// Uniform mixture over the first `r` columns of an orthonormal basis.
fn flat_state(basis: &CMatrix, r: usize) -> DensityMatrix {
    let n = basis.nrows();
    let mut m = CMatrix::zeros(n, n);
    for c in 0..r {
        let col = basis.column(c);
        m += &col * col.adjoint() * Complex64::new(1.0 / r as f64, 0.0);
    }
    DensityMatrix::new_unchecked(m)
}

/// Checks `‖E(ρ) − Ĩ‖_tr/2 ≤ ε` over sampled flat states with
/// `H_∞ ≥ k`, plus analytic worst-case candidates built from the top
/// singular operator of the projected map. The definition quantifies over
/// all states, so this is a sampled check; the analytic `2^{t/2}·sigma2`
/// bound remains the authoritative criterion.
pub fn extractor_check(
    op: &Superoperator,
    k: f64,
    epsilon: f64,
    trials: usize,
    seed: u64,
) -> Result<ExtractorCheckReport> {
    if !regularity_check(op) {
        return Err(QexError::Config("extractor check needs a regular superoperator".into()));
    }
    let n = op.dim();
    let r = (2f64.powf(k).ceil() as usize).clamp(1, n);
    let mixed = DensityMatrix::maximally_mixed(n).matrix;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    let run = |rho: DensityMatrix, worst: &mut f64| {
        let out = op.apply(&rho.matrix);
        let distance = crate::linalg::trace_norm(&(&out - &mixed)) / 2.0;
        *worst = worst.max(distance);
    };
    for _ in 0..trials {
        let basis = orthonormalize_columns(&crate::linalg::random_complex(n, &mut rng));
        run(flat_state(&basis, r), &mut worst);
    }
    // Analytic candidates: flat states aligned with the worst direction of
    // the projected map, via the Hermitian parts of its top singular
    // operator.
    let top = top_singular_operator(op, seed ^ 0x5eed);
    for herm in [
        (&top + top.adjoint()) * Complex64::new(0.5, 0.0),
        (&top - top.adjoint()) * Complex64::new(0.0, 0.5),
    ] {
        if fro_norm(&herm) < 1e-12 {
            continue;
        }
        let (_, vecs) = hermitian_eigen(&herm);
        run(flat_state(&vecs, r), &mut worst);
        let flipped = CMatrix::from_fn(n, n, |i, j| vecs[(i, n - 1 - j)]);
        run(flat_state(&flipped, r), &mut worst);
    }
    Ok(ExtractorCheckReport {
        epsilon,
        worst_distance: worst,
        trials,
        pass: worst <= epsilon + 1e-7,
        vacuous: epsilon >= 1.0,
    })
}

/// Loose power iteration for the top singular operator of `P∘E∘P`; only a
/// candidate generator, so convergence is not enforced.
fn top_singular_operator(op: &Superoperator, seed: u64) -> CMatrix {
    let n = op.dim();
    let project = |x: &CMatrix| -> CMatrix {
        let shift = x.trace() / Complex64::new(n as f64, 0.0);
        let mut out = x.clone();
        for i in 0..n {
            out[(i, i)] -= shift;
        }
        out
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = project(&crate::linalg::random_complex(n, &mut rng));
    for _ in 0..200 {
        let y = project(&op.apply_adjoint(&project(&op.apply(&project(&x)))));
        let norm = fro_norm(&y);
        if norm < 1e-30 {
            return x;
        }
        x = y / Complex64::new(norm, 0.0);
    }
    x
}

/// Regularity caps entropy production: `S(E(ρ)) ≤ S(ρ) + d`.
pub fn entropy_growth_check(op: &Superoperator, rho: &DensityMatrix) -> Result<(bool, f64, f64)> {
    let d = (op.degree() as f64).log2();
    let before = entropies(rho).von_neumann;
    let after = entropies(&DensityMatrix::new_unchecked(op.apply(&rho.matrix))).von_neumann;
    Ok((after <= before + d + 1e-7, before, after))
}

/// Rank experiment instantiating the lower-bound proof at parameter `δ`.
pub struct RankExperimentReport {
    /// Rank of the flat input `⌊2^{n−d+2lg δ}⌋ = ⌊N δ²/D⌋`.
    pub input_rank: usize,
    /// Numerical rank of `E(ρ)` (singular values above `1e−9` relative).
    pub output_rank: usize,
    pub trace_distance_to_mixed: f64,
    /// `rank(E(ρ)) ≥ (1 − δ⁻¹ 2^{d/2} λ̄)·N`.
    pub lower_rank_bound: f64,
    pub lower_holds: bool,
    /// `rank(E(ρ)) ≤ N δ²`.
    pub upper_rank_bound: f64,
    pub upper_holds: bool,
    /// `rank(E(ρ)) ≤ D·rank(ρ)`.
    pub product_bound_holds: bool,
}

/// Runs the proof's two rank inequalities on a flat classical input of
/// rank `⌊N δ²/D⌋`, with `λ̄` taken from the measured `sigma2`.
pub fn rank_experiment(
    op: &Superoperator,
    delta: f64,
    sigma2: f64,
) -> Result<RankExperimentReport> {
    let n = op.dim() as f64;
    let degree = op.degree() as f64;
    let input_rank = (n * delta * delta / degree).floor() as usize;
    if input_rank < 1 {
        return Err(QexError::Config(format!(
            "empty-support request: N·δ²/D = {:.3} < 1",
            n * delta * delta / degree
        )));
    }
    let mut rho = CMatrix::zeros(op.dim(), op.dim());
    for i in 0..input_rank {
        rho[(i, i)] = Complex64::new(1.0 / input_rank as f64, 0.0);
    }
    let out = op.apply(&rho);
    let sv = crate::linalg::singular_values(&out);
    let output_rank = sv.iter().filter(|&&s| s > 1e-9 * sv[0]).count();
    let mixed = DensityMatrix::maximally_mixed(op.dim()).matrix;
    let trace_distance_to_mixed = crate::linalg::trace_norm(&(&out - &mixed)) / 2.0;

    let lower_rank_bound = (1.0 - degree.sqrt() / delta * sigma2) * n;
    let upper_rank_bound = n * delta * delta;
    Ok(RankExperimentReport {
        input_rank,
        output_rank,
        trace_distance_to_mixed,
        lower_rank_bound,
        lower_holds: output_rank as f64 >= lower_rank_bound - 1e-9,
        upper_rank_bound,
        upper_holds: output_rank as f64 <= upper_rank_bound + 1e-9,
        product_bound_holds: output_rank <= op.degree() * input_rank,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groups::{make_cyclic, make_pgl2, GeneratingSet};
    use crate::qexpander::{
        basis_change, expander, product_mapping, spectral_gap, step_superoperator, MappingKind,
    };
    use crate::repr::{explicit_irreps, fourier_transform};
    use rand::Rng;

    fn full_mix_expander(n: usize) -> (crate::groups::FiniteGroup, Superoperator) {
        let g = make_cyclic(n).unwrap();
        let gens = GeneratingSet::whole_group(&g);
        let t = step_superoperator(&g, &gens).unwrap();
        let irreps = explicit_irreps(&g, 0).unwrap();
        let f = fourier_transform(&g, &irreps).unwrap();
        let mapping = product_mapping(&g, &f.dims, MappingKind::Abelian, None).unwrap();
        let u = basis_change(&g, &f, &mapping).unwrap();
        let e = expander(&t, &u.matrix).unwrap();
        (g, e)
    }

    #[test]
    fn entropy_values_match_closed_forms() {
        // Ĩ on 2 qubits: all three entropies equal 2.
        let mixed = DensityMatrix::maximally_mixed(4);
        let rep = entropies(&mixed);
        assert!((rep.von_neumann - 2.0).abs() < 1e-12);
        assert!((rep.renyi2 - 2.0).abs() < 1e-12);
        assert!((rep.min_entropy - 2.0).abs() < 1e-12);

        // Pure state: all zero.
        let pure = DensityMatrix::basis_state(4, 1);
        let rep = entropies(&pure);
        assert!(rep.von_neumann.abs() < 1e-12);
        assert!(rep.renyi2.abs() < 1e-12);
        assert!(rep.min_entropy.abs() < 1e-12);

        // Spectrum (3/4, 1/4).
        let mut m = CMatrix::zeros(2, 2);
        m[(0, 0)] = Complex64::new(0.75, 0.0);
        m[(1, 1)] = Complex64::new(0.25, 0.0);
        let rep = entropies(&DensityMatrix::new(m).unwrap());
        assert!((rep.von_neumann - 0.811278).abs() < 1e-6);
        assert!((rep.renyi2 - (8.0f64 / 5.0).log2()).abs() < 1e-12);
        assert!((rep.min_entropy - (4.0f64 / 3.0).log2()).abs() < 1e-12);
    }

    #[test]
    fn entropy_ordering_invariants() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..200 {
            let n = rng.gen_range(2..9);
            let rep = entropies(&DensityMatrix::random(n, &mut rng));
            assert!(rep.min_entropy <= rep.renyi2 + 1e-9);
            assert!(rep.renyi2 <= rep.von_neumann + 1e-9);
            assert!(rep.renyi2 <= 2.0 * rep.min_entropy + 1e-9);
        }
    }

    #[test]
    fn extractor_params_formula() {
        assert!((expander_to_extractor_params(0.1, 2.0) - 0.2).abs() < 1e-12);
        assert!(expander_to_extractor_params(0.0, 5.0).abs() < 1e-15);
        let eps = expander_to_extractor_params(0.5, 4.0);
        assert!((eps - 2.0).abs() < 1e-12); // vacuous: above the distance cap
    }

    #[test]
    fn perfect_mixer_is_an_extractor() {
        let (_, e) = full_mix_expander(8);
        let gap = spectral_gap(&e, 0).unwrap();
        assert!(gap.sigma2 <= 1e-10);
        let n = 3.0; // lg 8
        let t = 2.0;
        let eps = expander_to_extractor_params(gap.sigma2, t);
        let report = extractor_check(&e, n - t, eps, 20, 7).unwrap();
        assert!(report.pass, "worst distance {}", report.worst_distance);
        assert!(report.worst_distance <= 1e-7);
    }

    #[test]
    fn fixed_point_has_zero_distance() {
        let (_, e) = full_mix_expander(4);
        let mixed = DensityMatrix::maximally_mixed(4);
        let out = e.apply(&mixed.matrix);
        let d = crate::linalg::trace_norm(&(&out - &mixed.matrix)) / 2.0;
        assert!(d < 1e-13);
    }

    #[test]
    fn entropy_growth_is_capped_by_degree() {
        let (g, tower) = make_pgl2(3).unwrap();
        let gens = crate::groups::random_symmetric_generators(&g, 4, 2).unwrap();
        let t = step_superoperator(&g, &gens).unwrap();
        let irreps = explicit_irreps(&g, 0).unwrap();
        let f = fourier_transform(&g, &irreps).unwrap();
        let mapping = product_mapping(&g, &f.dims, MappingKind::Pgl2, Some(&tower)).unwrap();
        let u = basis_change(&g, &f, &mapping).unwrap();
        let e = expander(&t, &u.matrix).unwrap();

        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..100 {
            let rho = DensityMatrix::random(24, &mut rng);
            let (ok, _, _) = entropy_growth_check(&e, &rho).unwrap();
            assert!(ok);
        }
        // Pure input, D = 16: output entropy at most 4 bits.
        let pure = DensityMatrix::basis_state(24, 0);
        let (ok, before, after) = entropy_growth_check(&e, &pure).unwrap();
        assert!(ok);
        assert!(before.abs() < 1e-12);
        assert!(after <= 4.0 + 1e-7);
    }

    #[test]
    fn rank_experiment_on_pgl3() {
        // Degree-2 generators give D = 4 ≤ N/3 = 8: non-vacuous regime.
        let (g, tower) = make_pgl2(3).unwrap();
        let gens = crate::groups::random_symmetric_generators(&g, 2, 1).unwrap();
        let t = step_superoperator(&g, &gens).unwrap();
        let irreps = explicit_irreps(&g, 0).unwrap();
        let f = fourier_transform(&g, &irreps).unwrap();
        let mapping = product_mapping(&g, &f.dims, MappingKind::Pgl2, Some(&tower)).unwrap();
        let u = basis_change(&g, &f, &mapping).unwrap();
        let e = expander(&t, &u.matrix).unwrap();
        let sigma2 = spectral_gap(&e, 0).unwrap().sigma2;

        let delta = 1.0 / 3.0f64.sqrt();
        let report = rank_experiment(&e, delta, sigma2).unwrap();
        assert_eq!(report.input_rank, 2); // ⌊24/(3·4)⌋
        assert!(report.lower_holds);
        assert!(report.upper_holds);
        assert!(report.product_bound_holds);
    }

    #[test]
    fn rank_experiment_perfect_mixer_reaches_full_rank() {
        let (_, e) = full_mix_expander(8);
        // D = 64 > N/3, so δ = 1/√3 empties the input; widen δ for support.
        let report = rank_experiment(&e, 2.9, 0.0).unwrap();
        assert_eq!(report.output_rank, 8);
        assert!(report.trace_distance_to_mixed < 1e-10);
        assert!(report.product_bound_holds);
    }

    #[test]
    fn rank_experiment_rejects_empty_support() {
        let (_, e) = full_mix_expander(8);
        assert!(rank_experiment(&e, 1.0 / 3.0f64.sqrt(), 0.0).is_err());
    }

    #[test]
    fn two_norm_chain_and_data_processing() {
        let (g, e) = full_mix_expander(5);
        let n = g.order();
        let mixed = DensityMatrix::maximally_mixed(n).matrix;
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..50 {
            let rho = DensityMatrix::random(n, &mut rng);
            // ‖E(ρ) − Ĩ‖₂² ≤ sigma2²(‖ρ‖₂² − 1/N) + tol, with sigma2 = 0 here.
            let lhs = fro_norm(&(&e.apply(&rho.matrix) - &mixed)).powi(2);
            let rhs = fro_norm(&rho.matrix).powi(2) - 1.0 / n as f64;
            assert!(lhs <= 0.0 * rhs + 1e-9);
            // Trace norm ≤ √dim·2-norm (Cauchy–Schwarz over N² singular values).
            let diff = &rho.matrix - &mixed;
            assert!(crate::linalg::trace_norm(&diff) <= (n as f64) * fro_norm(&diff) + 1e-9);
        }

        // Data processing on random pairs for a nontrivial regular map.
        let (g, tower) = make_pgl2(3).unwrap();
        let gens = crate::groups::random_symmetric_generators(&g, 4, 3).unwrap();
        let t = step_superoperator(&g, &gens).unwrap();
        let irreps = explicit_irreps(&g, 0).unwrap();
        let f = fourier_transform(&g, &irreps).unwrap();
        let mapping = product_mapping(&g, &f.dims, MappingKind::Pgl2, Some(&tower)).unwrap();
        let u = basis_change(&g, &f, &mapping).unwrap();
        let e = expander(&t, &u.matrix).unwrap();
        for _ in 0..20 {
            let a = DensityMatrix::random(24, &mut rng);
            let b = DensityMatrix::random(24, &mut rng);
            let before = crate::linalg::trace_norm(&(&a.matrix - &b.matrix));
            let after = crate::linalg::trace_norm(&(&e.apply(&a.matrix) - &e.apply(&b.matrix)));
            assert!(after <= before + 1e-8);
        }
    }
}
