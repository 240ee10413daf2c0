//! Finite-group arithmetic and the concrete group families used by the
//! laboratory: cyclic groups `Z_n`, dihedral groups `D_m`, and the
//! projective linear groups `PGL(2,q)` over prime fields.
//!
//! Elements are dense indices `0..N-1`. Groups of order at most
//! [`TABLE_CAP`] carry a precomputed `N×N` multiplication table so the
//! representation and superoperator loops stay cache-friendly; larger
//! groups (only `PGL(2,q)` for big `q`, used by the extended Ramanujan
//! run) multiply structurally through canonical projective matrices.

use crate::{QexError, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::HashMap;

/// Largest group order that gets a dense multiplication table.
pub const TABLE_CAP: usize = 360;

/// An element of the prime field `F_q`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FqElement {
    pub value: u64,
    pub modulus: u64,
}

impl FqElement {
    pub fn new(value: i64, modulus: u64) -> Self {
        let m = modulus as i64;
        FqElement { value: (value.rem_euclid(m)) as u64, modulus }
    }

    pub fn add(self, other: FqElement) -> FqElement {
        FqElement { value: (self.value + other.value) % self.modulus, modulus: self.modulus }
    }

    pub fn sub(self, other: FqElement) -> FqElement {
        FqElement {
            value: (self.value + self.modulus - other.value) % self.modulus,
            modulus: self.modulus,
        }
    }

    pub fn mul(self, other: FqElement) -> FqElement {
        FqElement { value: (self.value * other.value) % self.modulus, modulus: self.modulus }
    }

    pub fn neg(self) -> FqElement {
        FqElement { value: (self.modulus - self.value) % self.modulus, modulus: self.modulus }
    }

    /// Multiplicative inverse by Fermat's little theorem; `inv(0)` is an error.
    pub fn inv(self) -> Result<FqElement> {
        if self.value == 0 {
            return Err(QexError::InvalidGroup("inverse of 0 in F_q".into()));
        }
        Ok(self.pow(self.modulus - 2))
    }

    pub fn pow(self, mut e: u64) -> FqElement {
        let mut base = self.value;
        let mut acc = 1u64;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base % self.modulus;
            }
            base = base * base % self.modulus;
            e >>= 1;
        }
        FqElement { value: acc, modulus: self.modulus }
    }
}

/// A 2×2 invertible matrix over `F_q` modulo the group center, stored in
/// canonical form: the first nonzero entry in scan order `(a,b,c,d)` is
/// scaled to 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ProjectiveMat2 {
    pub a: u64,
    pub b: u64,
    pub c: u64,
    pub d: u64,
    pub q: u64,
}

impl ProjectiveMat2 {
    /// Canonicalize raw entries; errors when the determinant vanishes.
    pub fn new(a: i64, b: i64, c: i64, d: i64, q: u64) -> Result<Self> {
        let fa = FqElement::new(a, q);
        let fb = FqElement::new(b, q);
        let fc = FqElement::new(c, q);
        let fd = FqElement::new(d, q);
        let det = fa.mul(fd).sub(fb.mul(fc));
        if det.value == 0 {
            return Err(QexError::InvalidGroup(format!(
                "singular projective matrix [[{a},{b}],[{c},{d}]] mod {q}"
            )));
        }
        let lead = [fa, fb, fc, fd].into_iter().find(|e| e.value != 0).unwrap();
        let s = lead.inv()?;
        Ok(ProjectiveMat2 {
            a: fa.mul(s).value,
            b: fb.mul(s).value,
            c: fc.mul(s).value,
            d: fd.mul(s).value,
            q,
        })
    }

    pub fn mul(self, other: ProjectiveMat2) -> ProjectiveMat2 {
        let q = self.q as i64;
        debug_assert_eq!(self.q, other.q);
        let a = (self.a * other.a + self.b * other.c) as i64 % q;
        let b = (self.a * other.b + self.b * other.d) as i64 % q;
        let c = (self.c * other.a + self.d * other.c) as i64 % q;
        let d = (self.c * other.b + self.d * other.d) as i64 % q;
        ProjectiveMat2::new(a, b, c, d, self.q).expect("product of invertibles is invertible")
    }

    pub fn inv(self) -> ProjectiveMat2 {
        // Projectively, [[a,b],[c,d]]⁻¹ ~ [[d,-b],[-c,a]].
        ProjectiveMat2::new(
            self.d as i64,
            -(self.b as i64),
            -(self.c as i64),
            self.a as i64,
            self.q,
        )
        .expect("inverse of invertible is invertible")
    }

    pub fn identity(q: u64) -> ProjectiveMat2 {
        ProjectiveMat2::new(1, 0, 0, 1, q).unwrap()
    }

    /// Scan-order key used for deterministic enumeration.
    fn key(&self) -> (u64, u64, u64, u64) {
        (self.a, self.b, self.c, self.d)
    }
}

enum Backend {
    Table { mul: Vec<u32>, inv: Vec<u32> },
    /// Structured arithmetic for PGL(2,q) above the table cap.
    Pgl2 { elems: Vec<ProjectiveMat2>, index: HashMap<ProjectiveMat2, u32> },
}

/// A finite group on element indices `0..N-1`.
pub struct FiniteGroup {
    order: usize,
    identity: usize,
    label: String,
    backend: Backend,
}

impl FiniteGroup {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn identity(&self) -> usize {
        self.identity
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn mul(&self, a: usize, b: usize) -> usize {
        match &self.backend {
            Backend::Table { mul, .. } => mul[a * self.order + b] as usize,
            Backend::Pgl2 { elems, index } => {
                index[&elems[a].mul(elems[b])] as usize
            }
        }
    }

    pub fn inv(&self, a: usize) -> usize {
        match &self.backend {
            Backend::Table { inv, .. } => inv[a] as usize,
            Backend::Pgl2 { elems, index } => index[&elems[a].inv()] as usize,
        }
    }

    pub fn pow(&self, a: usize, k: usize) -> usize {
        let mut acc = self.identity;
        for _ in 0..k {
            acc = self.mul(acc, a);
        }
        acc
    }

    /// Order of a single element.
    pub fn element_order(&self, a: usize) -> usize {
        let mut x = a;
        let mut n = 1;
        while x != self.identity {
            x = self.mul(x, a);
            n += 1;
        }
        n
    }

    /// Element matrices of a structurally-backed projective group, in
    /// index order; `None` for table-backed groups.
    pub(crate) fn projective_elements(&self) -> Option<&[ProjectiveMat2]> {
        match &self.backend {
            Backend::Pgl2 { elems, .. } => Some(elems),
            Backend::Table { .. } => None,
        }
    }

    fn from_table(order: usize, identity: usize, label: String, mul: Vec<u32>) -> Result<Self> {
        let mut inv = vec![u32::MAX; order];
        for a in 0..order {
            for b in 0..order {
                if mul[a * order + b] as usize == identity {
                    inv[a] = b as u32;
                }
            }
            if inv[a] == u32::MAX {
                return Err(QexError::InvalidGroup(format!("element {a} has no inverse")));
            }
        }
        Ok(FiniteGroup { order, identity, label, backend: Backend::Table { mul, inv } })
    }
}

/// Inverse-closed generator multiset `Γ`.
#[derive(Debug, Clone)]
pub struct GeneratingSet {
    pub elements: Vec<usize>,
}

impl GeneratingSet {
    /// Builds a generating set, rejecting multisets not closed under inverse.
    pub fn new(group: &FiniteGroup, elements: Vec<usize>) -> Result<Self> {
        for &g in &elements {
            if g >= group.order() {
                return Err(QexError::InvalidGenerators(format!(
                    "element index {g} out of range for group of order {}",
                    group.order()
                )));
            }
        }
        let set = GeneratingSet { elements };
        if !set.is_inverse_closed(group) {
            return Err(QexError::InvalidGenerators(
                "generator multiset is not closed under inverse".into(),
            ));
        }
        Ok(set)
    }

    /// The whole group as a generating multiset (each element once).
    pub fn whole_group(group: &FiniteGroup) -> Self {
        GeneratingSet { elements: (0..group.order()).collect() }
    }

    pub fn degree(&self) -> usize {
        self.elements.len()
    }

    /// Multiset inverse-closure: the multiplicity of `γ` equals that of `γ⁻¹`.
    pub fn is_inverse_closed(&self, group: &FiniteGroup) -> bool {
        let mut counts: HashMap<usize, i64> = HashMap::new();
        for &g in &self.elements {
            *counts.entry(g).or_insert(0) += 1;
        }
        counts.iter().all(|(&g, &c)| counts.get(&group.inv(g)).copied().unwrap_or(0) == c)
    }
}

/// Subgroup tower `G > G₂ > G₁ > G₀ = {e}` with coset transversals, as
/// used by the PGL(2,q) product mapping. Transversals are right-coset
/// representatives: `G = ⊔_j H·t_j`.
pub struct SubgroupTower {
    /// `G₁ = ⟨r⟩ = Z_q` element indices.
    pub g1: Vec<usize>,
    /// `G₂ = ⟨r,s⟩ = D_{2q}` element indices.
    pub g2: Vec<usize>,
    /// Rotation generator `r`.
    pub r: usize,
    /// Reflection generator `s`.
    pub s: usize,
    /// Transversal `T₂` for `G₂`: size `ℓ = (q−1)(q+1)/2`.
    pub t2: Vec<usize>,
    /// Transversal `T₁` for `G₁` in the interleaved order `t_1, s·t_1, …`.
    pub t1: Vec<usize>,
}

/// `Z_n` with addition mod `n`; identity 0.
pub fn make_cyclic(n: usize) -> Result<FiniteGroup> {
    if n == 0 {
        return Err(QexError::InvalidGroup("cyclic group needs n >= 1".into()));
    }
    let mut mul = vec![0u32; n * n];
    for a in 0..n {
        for b in 0..n {
            mul[a * n + b] = ((a + b) % n) as u32;
        }
    }
    FiniteGroup::from_table(n, 0, format!("cyclic:{n}"), mul)
}

/// Dihedral group of order `2m`, `m ≥ 3`. Element `b·m + a` encodes
/// `r^a s^b`; the relations `s² = e` and `s r s = r⁻¹` hold.
pub fn make_dihedral(m: usize) -> Result<FiniteGroup> {
    if m < 3 {
        return Err(QexError::InvalidGroup(format!("dihedral group needs m >= 3, got {m}")));
    }
    let n = 2 * m;
    let mut mul = vec![0u32; n * n];
    for b1 in 0..2usize {
        for a1 in 0..m {
            for b2 in 0..2usize {
                for a2 in 0..m {
                    // (r^a1 s^b1)(r^a2 s^b2) = r^(a1 ± a2) s^(b1⊕b2)
                    let a = if b1 == 0 { (a1 + a2) % m } else { (a1 + m - a2 % m) % m };
                    let b = b1 ^ b2;
                    let lhs = b1 * m + a1;
                    let rhs = b2 * m + a2;
                    mul[lhs * n + rhs] = (b * m + a) as u32;
                }
            }
        }
    }
    FiniteGroup::from_table(n, 0, format!("dihedral:{m}"), mul)
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

/// Enumerates the canonical projective matrices of `PGL(2,q)` in
/// ascending scan order.
fn enumerate_pgl2(q: u64) -> Vec<ProjectiveMat2> {
    let mut elems = Vec::new();
    for a in 0..q {
        for b in 0..q {
            for c in 0..q {
                for d in 0..q {
                    if let Ok(m) = ProjectiveMat2::new(a as i64, b as i64, c as i64, d as i64, q)
                    {
                        if m.key() == (a, b, c, d) {
                            elems.push(m);
                        }
                    }
                }
            }
        }
    }
    elems
}

/// `PGL(2,q)` for an odd prime `q` plus its subgroup tower
/// `G > D_{2q} > Z_q > {e}` with `r = [[1,1],[0,1]]`, `s = [[1,0],[0,−1]]`.
pub fn make_pgl2(q: u64) -> Result<(FiniteGroup, SubgroupTower)> {
    make_pgl2_with_cap(q, TABLE_CAP)
}

/// Same as [`make_pgl2`] with an explicit order cap; above [`TABLE_CAP`]
/// the group multiplies structurally instead of via a dense table.
pub fn make_pgl2_with_cap(q: u64, cap: usize) -> Result<(FiniteGroup, SubgroupTower)> {
    if q < 3 || q % 2 == 0 || !is_prime(q) {
        return Err(QexError::InvalidGroup(format!("pgl2 needs an odd prime q >= 3, got {q}")));
    }
    let order = (q * (q - 1) * (q + 1)) as usize;
    if order > cap {
        return Err(QexError::InvalidGroup(format!(
            "PGL(2,{q}) has order {order}, above the cap {cap}"
        )));
    }
    let elems = enumerate_pgl2(q);
    debug_assert_eq!(elems.len(), order);
    let index: HashMap<ProjectiveMat2, u32> =
        elems.iter().enumerate().map(|(i, &m)| (m, i as u32)).collect();
    let identity = index[&ProjectiveMat2::identity(q)] as usize;

    let group = if order <= TABLE_CAP {
        let mut mul = vec![0u32; order * order];
        for a in 0..order {
            for b in 0..order {
                mul[a * order + b] = index[&elems[a].mul(elems[b])];
            }
        }
        FiniteGroup::from_table(order, identity, format!("pgl2:{q}"), mul)?
    } else {
        FiniteGroup {
            order,
            identity,
            label: format!("pgl2:{q}"),
            backend: Backend::Pgl2 { elems: elems.clone(), index: index.clone() },
        }
    };

    let r = index[&ProjectiveMat2::new(1, 1, 0, 1, q).unwrap()] as usize;
    let s = index[&ProjectiveMat2::new(1, 0, 0, -1, q).unwrap()] as usize;
    let tower = build_tower(&group, r, s)?;
    Ok((group, tower))
}

/// Assembles a structurally-backed group from an explicit projective
/// element list (used for PSL hosts of the LPS construction).
pub(crate) fn finite_group_from_parts(
    identity: usize,
    label: String,
    elems: Vec<ProjectiveMat2>,
) -> FiniteGroup {
    let order = elems.len();
    let index: HashMap<ProjectiveMat2, u32> =
        elems.iter().enumerate().map(|(i, &m)| (m, i as u32)).collect();
    FiniteGroup { order, identity, label, backend: Backend::Pgl2 { elems, index } }
}

/// Closure of a generator list inside `G`.
fn subgroup_closure(group: &FiniteGroup, gens: &[usize]) -> Vec<usize> {
    let mut seen = vec![false; group.order()];
    seen[group.identity()] = true;
    let mut frontier = vec![group.identity()];
    while let Some(x) = frontier.pop() {
        for &g in gens {
            let y = group.mul(x, g);
            if !seen[y] {
                seen[y] = true;
                frontier.push(y);
            }
        }
    }
    (0..group.order()).filter(|&i| seen[i]).collect()
}

/// Right-coset transversal of a subgroup: one representative per coset
/// `H·t`, the representative being the minimal element index in the coset,
/// listed in ascending order of that minimum.
fn right_transversal(group: &FiniteGroup, subgroup: &[usize]) -> Vec<usize> {
    let mut assigned = vec![false; group.order()];
    let mut reps = Vec::new();
    for t in 0..group.order() {
        if assigned[t] {
            continue;
        }
        reps.push(t);
        for &h in subgroup {
            assigned[group.mul(h, t)] = true;
        }
    }
    reps
}

fn build_tower(group: &FiniteGroup, r: usize, s: usize) -> Result<SubgroupTower> {
    let g1 = subgroup_closure(group, &[r]);
    let g2 = subgroup_closure(group, &[r, s]);
    // Dihedral relations at level G₂.
    if group.mul(s, s) != group.identity() {
        return Err(QexError::InvalidGroup("tower: s^2 != e".into()));
    }
    if group.mul(group.mul(s, r), s) != group.inv(r) {
        return Err(QexError::InvalidGroup("tower: s r s != r^-1".into()));
    }
    let t2 = right_transversal(group, &g2);
    let mut t1 = Vec::with_capacity(2 * t2.len());
    for &t in &t2 {
        t1.push(t);
        t1.push(group.mul(s, t));
    }
    Ok(SubgroupTower { g1, g2, r, s, t2, t1 })
}

/// Partition of the element indices into conjugacy classes. The class of
/// the identity comes first; the rest are ordered by their minimal element.
pub fn conjugacy_classes(group: &FiniteGroup) -> Vec<Vec<usize>> {
    let n = group.order();
    let mut class_of = vec![usize::MAX; n];
    let mut classes: Vec<Vec<usize>> = Vec::new();
    for g in 0..n {
        if class_of[g] != usize::MAX {
            continue;
        }
        let id = classes.len();
        let mut class = Vec::new();
        for x in 0..n {
            let y = group.mul(group.mul(x, g), group.inv(x));
            if class_of[y] == usize::MAX {
                class_of[y] = id;
                class.push(y);
            }
        }
        class.sort_unstable();
        classes.push(class);
    }
    classes.sort_by_key(|c| (!c.contains(&group.identity()), c[0]));
    classes
}

/// Samples `k/2` uniform non-identity elements and unions them with their
/// inverses; a self-inverse draw is counted twice so the degree is exactly
/// `k`. Deterministic under `seed`.
pub fn random_symmetric_generators(
    group: &FiniteGroup,
    k: usize,
    seed: u64,
) -> Result<GeneratingSet> {
    if k < 2 || k % 2 != 0 {
        return Err(QexError::InvalidGenerators(format!("degree k must be even and >= 2, got {k}")));
    }
    if group.order() < 2 {
        return Err(QexError::InvalidGenerators("trivial group has no non-identity elements".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut elements = Vec::with_capacity(k);
    for _ in 0..k / 2 {
        let mut g = rng.gen_range(0..group.order());
        while g == group.identity() {
            g = rng.gen_range(0..group.order());
        }
        elements.push(g);
        elements.push(group.inv(g));
    }
    elements.sort_unstable();
    GeneratingSet::new(group, elements)
}

/// Exhaustive identity/inverse laws plus associativity (exhaustive for
/// `N ≤ 64`, 10⁴ seeded random triples above).
pub fn validate_group(group: &FiniteGroup, seed: u64) -> Result<()> {
    let n = group.order();
    let e = group.identity();
    for g in 0..n {
        if group.mul(e, g) != g || group.mul(g, e) != g {
            return Err(QexError::InvalidGroup(format!("identity law fails at {g}")));
        }
        if group.mul(g, group.inv(g)) != e {
            return Err(QexError::InvalidGroup(format!("inverse law fails at {g}")));
        }
    }
    let check = |a: usize, b: usize, c: usize| -> Result<()> {
        if group.mul(group.mul(a, b), c) != group.mul(a, group.mul(b, c)) {
            return Err(QexError::InvalidGroup(format!("associativity fails at ({a},{b},{c})")));
        }
        Ok(())
    };
    if n <= 64 {
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    check(a, b, c)?;
                }
            }
        }
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..10_000 {
            check(rng.gen_range(0..n), rng.gen_range(0..n), rng.gen_range(0..n))?;
        }
    }
    Ok(())
}

/// Parses `cyclic:<n>`, `dihedral:<m>` or `pgl2:<q>`. For `pgl2` the tower
/// is returned alongside the group.
pub fn parse_group_spec(spec: &str) -> Result<(FiniteGroup, Option<SubgroupTower>)> {
    let (family, param) = spec
        .split_once(':')
        .ok_or_else(|| QexError::Config(format!("bad group spec '{spec}' (want family:param)")))?;
    let value: u64 = param
        .parse()
        .map_err(|_| QexError::Config(format!("bad group parameter '{param}'")))?;
    match family {
        "cyclic" => Ok((make_cyclic(value as usize)?, None)),
        "dihedral" => Ok((make_dihedral(value as usize)?, None)),
        "pgl2" => {
            let (g, tower) = make_pgl2(value)?;
            Ok((g, Some(tower)))
        }
        other => Err(QexError::Config(format!("unknown group family '{other}'"))),
    }
}

/// Parses `random:<k>:<seed>`, `all` (the whole group, with multiplicity
/// one), or an explicit comma-separated element-index list.
pub fn parse_generator_spec(spec: &str, group: &FiniteGroup) -> Result<GeneratingSet> {
    if spec == "all" {
        return Ok(GeneratingSet::whole_group(group));
    }
    if let Some(rest) = spec.strip_prefix("random:") {
        let (k, seed) = rest
            .split_once(':')
            .ok_or_else(|| QexError::Config(format!("bad generator spec '{spec}'")))?;
        let k: usize =
            k.parse().map_err(|_| QexError::Config(format!("bad generator degree '{k}'")))?;
        let seed: u64 =
            seed.parse().map_err(|_| QexError::Config(format!("bad generator seed '{seed}'")))?;
        return random_symmetric_generators(group, k, seed);
    }
    let elements = spec
        .split(',')
        .map(|tok| {
            tok.trim()
                .parse::<usize>()
                .map_err(|_| QexError::Config(format!("bad generator element '{tok}'")))
        })
        .collect::<Result<Vec<_>>>()?;
    GeneratingSet::new(group, elements)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cyclic_identity_and_inverses() {
        let g1 = make_cyclic(1).unwrap();
        assert_eq!(g1.order(), 1);
        assert_eq!(g1.inv(0), 0);

        let g2 = make_cyclic(2).unwrap();
        assert_eq!(g2.mul(1, 1), 0);

        let g5 = make_cyclic(5).unwrap();
        assert_eq!(g5.inv(2), 3);
    }

    #[test]
    fn dihedral_relations() {
        let d3 = make_dihedral(3).unwrap();
        assert_eq!(d3.order(), 6);
        let r = 1; // r^1 s^0
        let s = 3; // r^0 s^1
        // s·r·s = r² = r⁻¹ in D_3
        assert_eq!(d3.mul(d3.mul(s, r), s), d3.pow(r, 2));
        assert_eq!(d3.inv(r), d3.pow(r, 2));
        validate_group(&d3, 0).unwrap();

        let d5 = make_dihedral(5).unwrap();
        let r = 1;
        let s = 5;
        let rs = d5.mul(r, s);
        assert_eq!(d5.mul(rs, rs), d5.identity());

        assert!(make_dihedral(2).is_err());
    }

    #[test]
    fn pgl2_orders_and_tower() {
        let (g3, tower3) = make_pgl2(3).unwrap();
        assert_eq!(g3.order(), 24);
        assert_eq!(tower3.t2.len(), 4);
        assert_eq!(tower3.g2.len(), 6);
        assert_eq!(tower3.g1.len(), 3);
        // s·r·s = r⁻¹ inside the dihedral level
        assert_eq!(
            g3.mul(g3.mul(tower3.s, tower3.r), tower3.s),
            g3.inv(tower3.r)
        );
        validate_group(&g3, 0).unwrap();

        let (g5, tower5) = make_pgl2(5).unwrap();
        assert_eq!(g5.order(), 120);
        assert_eq!(tower5.t2.len(), 12); // ℓ = (q−1)(q+1)/2
        validate_group(&g5, 0).unwrap();

        assert!(make_pgl2(4).is_err());
        assert!(make_pgl2(9).is_err());
        assert!(make_pgl2(11).is_err()); // order 1320 above the default cap
    }

    #[test]
    fn pgl2_cosets_tile_the_group() {
        for q in [3u64, 5] {
            let (g, tower) = make_pgl2(q).unwrap();
            let mut covered = vec![false; g.order()];
            for &t in &tower.t2 {
                for &h in &tower.g2 {
                    let x = g.mul(h, t);
                    assert!(!covered[x], "coset overlap at {x}");
                    covered[x] = true;
                }
            }
            assert!(covered.iter().all(|&c| c));
            assert_eq!(tower.t2.len() * tower.g2.len(), g.order());
            // T₁ tiles against G₁ as well.
            let mut covered = vec![false; g.order()];
            for &t in &tower.t1 {
                for &h in &tower.g1 {
                    let x = g.mul(h, t);
                    assert!(!covered[x]);
                    covered[x] = true;
                }
            }
            assert!(covered.iter().all(|&c| c));
            // Subgroup levels closed under mul and inv.
            for level in [&tower.g1, &tower.g2] {
                for &a in level {
                    assert!(level.contains(&g.inv(a)));
                    for &b in level {
                        assert!(level.contains(&g.mul(a, b)));
                    }
                }
            }
        }
    }

    #[test]
    fn structured_backend_matches_table() {
        let (table, _) = make_pgl2(5).unwrap();
        let (structured, _) = {
            // Force the structured path by re-building above the table cap.
            let elems = enumerate_pgl2(5);
            let index: HashMap<ProjectiveMat2, u32> =
                elems.iter().enumerate().map(|(i, &m)| (m, i as u32)).collect();
            let identity = index[&ProjectiveMat2::identity(5)] as usize;
            (
                FiniteGroup {
                    order: elems.len(),
                    identity,
                    label: "pgl2:5".into(),
                    backend: Backend::Pgl2 { elems, index },
                },
                (),
            )
        };
        for a in (0..120).step_by(7) {
            for b in (0..120).step_by(11) {
                assert_eq!(table.mul(a, b), structured.mul(a, b));
            }
            assert_eq!(table.inv(a), structured.inv(a));
        }
    }

    #[test]
    fn conjugacy_class_shapes() {
        let z4 = make_cyclic(4).unwrap();
        let classes = conjugacy_classes(&z4);
        assert_eq!(classes.len(), 4);
        assert!(classes.iter().all(|c| c.len() == 1));

        let d3 = make_dihedral(3).unwrap();
        let classes = conjugacy_classes(&d3);
        let mut sizes: Vec<usize> = classes.iter().map(|c| c.len()).collect();
        sizes.sort_unstable();
        assert_eq!(sizes, vec![1, 2, 3]);
        assert_eq!(classes[0], vec![d3.identity()]);

        // PGL(2,3) ≅ S₄: five classes, matching the five irreps.
        let (g3, _) = make_pgl2(3).unwrap();
        let classes = conjugacy_classes(&g3);
        assert_eq!(classes.len(), 5);
        assert_eq!(classes.iter().map(|c| c.len()).sum::<usize>(), 24);
    }

    #[test]
    fn random_generators_are_inverse_closed_and_deterministic() {
        let z2 = make_cyclic(2).unwrap();
        let gens = random_symmetric_generators(&z2, 2, 99).unwrap();
        assert_eq!(gens.elements, vec![1, 1]);

        let z5 = make_cyclic(5).unwrap();
        for seed in 0..20 {
            let gens = random_symmetric_generators(&z5, 2, seed).unwrap();
            assert_eq!(gens.degree(), 2);
            assert_eq!((gens.elements[0] + gens.elements[1]) % 5, 0);
            let again = random_symmetric_generators(&z5, 2, seed).unwrap();
            assert_eq!(gens.elements, again.elements);
        }

        let (g3, _) = make_pgl2(3).unwrap();
        for seed in 0..10 {
            let gens = random_symmetric_generators(&g3, 4, seed).unwrap();
            assert_eq!(gens.degree(), 4);
            assert!(gens.is_inverse_closed(&g3));
        }
    }

    #[test]
    fn spec_parsing() {
        let (g, _) = parse_group_spec("cyclic:8").unwrap();
        assert_eq!(g.order(), 8);
        let (g, tower) = parse_group_spec("pgl2:3").unwrap();
        assert_eq!(g.order(), 24);
        assert!(tower.is_some());
        assert!(parse_group_spec("cyclic").is_err());
        assert!(parse_group_spec("weird:5").is_err());

        let z6 = make_cyclic(6).unwrap();
        let gens = parse_generator_spec("1,5", &z6).unwrap();
        assert_eq!(gens.elements, vec![1, 5]);
        assert!(parse_generator_spec("1,2", &z6).is_err()); // not inverse-closed
        let all = parse_generator_spec("all", &z6).unwrap();
        assert_eq!(all.degree(), 6);
        let rnd = parse_generator_spec("random:4:7", &z6).unwrap();
        assert_eq!(rnd.degree(), 4);
    }
}
