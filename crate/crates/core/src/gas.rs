//! Generalized-active-space partitions and determinant-space enumeration.
//!
//! A GAS is described by two arrays: subspace start indices over the
//! energy-ordered spin orbitals, and the allowed electron counts per
//! subspace (one tuple per allowed occupation pattern). Spin orbitals are
//! interleaved spatial-major with α before β, i.e. spin orbital `2p` is the
//! α and `2p + 1` the β partner of spatial orbital `p`, so "K spatial
//! orbitals" maps to `2K` contiguous spin-orbital indices.
//!
//! The many-electron basis is the set of `M_s`-restricted Slater
//! determinants compatible with some pattern, stored as one occupation
//! bitstring per spin channel and ordered lexicographically.

use crate::{Error, Result};
use std::fmt;

/// Occupation bitstring over spatial orbitals for one spin channel.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct OrbSet {
    words: Box<[u64]>,
}

impl OrbSet {
    pub fn empty(n_words: usize) -> Self {
        OrbSet { words: vec![0; n_words].into_boxed_slice() }
    }

    pub fn from_orbitals(orbs: &[usize], n_words: usize) -> Self {
        let mut s = Self::empty(n_words);
        for &p in orbs {
            s.set(p);
        }
        s
    }

    #[inline]
    pub fn test(&self, p: usize) -> bool {
        self.words[p >> 6] >> (p & 63) & 1 != 0
    }

    #[inline]
    pub fn set(&mut self, p: usize) {
        self.words[p >> 6] |= 1 << (p & 63);
    }

    #[inline]
    pub fn clear(&mut self, p: usize) {
        self.words[p >> 6] &= !(1 << (p & 63));
    }

    pub fn count(&self) -> u32 {
        self.words.iter().map(|w| w.count_ones()).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    None
                } else {
                    let b = w.trailing_zeros() as usize;
                    w &= w - 1;
                    Some((wi << 6) | b)
                }
            })
        })
    }

    /// Number of occupied orbitals with index strictly between `p` and `q`.
    pub fn count_between(&self, p: usize, q: usize) -> u32 {
        let (lo, hi) = if p < q { (p, q) } else { (q, p) };
        if hi - lo <= 1 {
            return 0;
        }
        let (lo, hi) = (lo + 1, hi); // half-open [lo, hi)
        let mut count = 0;
        let (wl, bl) = (lo >> 6, lo & 63);
        let (wh, bh) = (hi >> 6, hi & 63);
        if wl == wh {
            let mask = (!0u64 << bl) & !(!0u64 << bh);
            return (self.words[wl] & mask).count_ones();
        }
        count += (self.words[wl] & (!0u64 << bl)).count_ones();
        for w in wl + 1..wh {
            count += self.words[w].count_ones();
        }
        if bh > 0 {
            count += (self.words[wh] & !(!0u64 << bh)).count_ones();
        }
        count
    }

    pub fn difference_count(&self, other: &OrbSet) -> u32 {
        self.words.iter().zip(other.words.iter()).map(|(a, b)| (a ^ b).count_ones()).sum()
    }

    fn cmp_words(&self, other: &OrbSet) -> std::cmp::Ordering {
        // compare as big integers, most significant word first
        for (a, b) in self.words.iter().rev().zip(other.words.iter().rev()) {
            match a.cmp(b) {
                std::cmp::Ordering::Equal => continue,
                ord => return ord,
            }
        }
        std::cmp::Ordering::Equal
    }
}

impl fmt::Debug for OrbSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, p) in self.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{p}")?;
        }
        write!(f, "}}")
    }
}

/// One Slater determinant: α and β occupation strings over spatial orbitals.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Determinant {
    pub alpha: OrbSet,
    pub beta: OrbSet,
}

impl Determinant {
    pub fn n_electrons(&self) -> u32 {
        self.alpha.count() + self.beta.count()
    }

    pub fn two_ms(&self) -> i32 {
        self.alpha.count() as i32 - self.beta.count() as i32
    }

    /// Orbital-difference count (number of spin orbitals occupied in exactly
    /// one of the two determinants, divided by two).
    pub fn excitation_degree(&self, other: &Determinant) -> u32 {
        (self.alpha.difference_count(&other.alpha) + self.beta.difference_count(&other.beta)) / 2
    }

    pub fn cmp_lex(&self, other: &Determinant) -> std::cmp::Ordering {
        self.alpha.cmp_words(&other.alpha).then_with(|| self.beta.cmp_words(&other.beta))
    }
}

/// GAS specification: subspace boundaries over spin orbitals plus the
/// allowed per-subspace electron counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GasSpec {
    /// 0-based start index of each subspace in the spin-orbital ordering;
    /// first entry is always 0.
    pub boundaries: Vec<usize>,
    /// Allowed occupation patterns; each sums to `n_el`.
    pub patterns: Vec<Vec<usize>>,
    pub n_el: usize,
    /// Twice the spin projection (2 M_s), so half-integer values stay exact.
    pub two_ms: i32,
}

impl GasSpec {
    pub fn n_subspaces(&self) -> usize {
        self.boundaries.len()
    }

    /// Full CI: a single unrestricted subspace.
    pub fn fci(n_el: usize, two_ms: i32) -> Self {
        GasSpec { boundaries: vec![0], patterns: vec![vec![n_el]], n_el, two_ms }
    }

    /// CAS*(N_el^C, K): a frozen core of `n_frozen_spatial` doubly occupied
    /// orbitals, a complete active space of `k` spatial orbitals, and single
    /// excitations into everything above.
    pub fn cas_star(
        n_el: usize,
        n_frozen_spatial: usize,
        k: usize,
        n_b_spatial: usize,
    ) -> Result<Self> {
        let f = n_frozen_spatial;
        if n_el < 2 * f + 1 {
            return Err(Error::Invalid(format!(
                "CAS* needs at least one active electron: n_el={n_el}, frozen={f}"
            )));
        }
        let n_active = n_el - 2 * f;
        if k < n_active.div_ceil(2) {
            return Err(Error::Invalid(format!(
                "active space of {k} spatial orbitals cannot hold {n_active} electrons"
            )));
        }
        if f + k > n_b_spatial {
            return Err(Error::Invalid(format!(
                "CAS*({n_active},{k}) with {f} frozen orbitals exceeds basis of {n_b_spatial}"
            )));
        }
        let mut boundaries = Vec::new();
        let mut pat_full = Vec::new();
        let mut pat_single = Vec::new();
        if f > 0 {
            boundaries.push(0);
            pat_full.push(2 * f);
            pat_single.push(2 * f);
        }
        boundaries.push(2 * f);
        pat_full.push(n_active);
        pat_single.push(n_active - 1);
        let remainder = 2 * n_b_spatial - 2 * (f + k);
        let mut patterns = Vec::new();
        if remainder > 0 {
            boundaries.push(2 * (f + k));
            pat_full.push(0);
            pat_single.push(1);
            patterns.push(pat_full);
            patterns.push(pat_single);
        } else {
            // active space spans the whole basis: no continuum subspace
            patterns.push(pat_full);
        }
        Ok(GasSpec { boundaries, patterns, n_el, two_ms: 0 })
    }

    /// Single-active-electron reference with an active valence electron: all
    /// but one electron frozen in the lowest spin orbitals.
    pub fn sae_valence(n_el: usize) -> Result<Self> {
        if n_el < 2 {
            return Err(Error::Invalid("SAE needs at least two electrons".into()));
        }
        Ok(GasSpec {
            boundaries: vec![0, n_el - 1],
            patterns: vec![vec![n_el - 1, 1]],
            n_el,
            two_ms: 0,
        })
    }

    /// Configuration-interaction singles: CAS*(n_active, n_occ) degenerate case.
    pub fn cis(n_el: usize, n_b_spatial: usize) -> Result<Self> {
        Self::cas_star(n_el, 0, n_el / 2, n_b_spatial)
    }

    pub fn validate(&self, n_b_spatial: usize) -> Result<()> {
        let n_so = 2 * n_b_spatial;
        if self.boundaries.is_empty() || self.boundaries[0] != 0 {
            return Err(Error::Invalid("first GAS boundary must be spin orbital 0".into()));
        }
        if self.boundaries.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Invalid("GAS boundaries must be strictly increasing".into()));
        }
        if *self.boundaries.last().unwrap() >= n_so {
            return Err(Error::Invalid(format!(
                "GAS boundary {} outside the {n_so} spin orbitals",
                self.boundaries.last().unwrap()
            )));
        }
        if (self.n_el as i32 + self.two_ms) % 2 != 0 {
            return Err(Error::Invalid(format!(
                "2M_s = {} incompatible with {} electrons",
                self.two_ms, self.n_el
            )));
        }
        if self.n_alpha(self.two_ms).is_none() {
            return Err(Error::Invalid(format!(
                "spin projection 2M_s = {} not reachable with {} electrons",
                self.two_ms, self.n_el
            )));
        }
        for pat in &self.patterns {
            if pat.len() != self.n_subspaces() {
                return Err(Error::Invalid(format!(
                    "pattern {pat:?} does not match {} subspaces",
                    self.n_subspaces()
                )));
            }
            if pat.iter().sum::<usize>() != self.n_el {
                return Err(Error::Invalid(format!(
                    "pattern {pat:?} does not sum to n_el = {}",
                    self.n_el
                )));
            }
            for (j, &nj) in pat.iter().enumerate() {
                if nj > self.subspace_capacity(j, n_b_spatial) {
                    return Err(Error::Invalid(format!(
                        "pattern {pat:?} exceeds capacity of subspace {j}"
                    )));
                }
            }
        }
        Ok(())
    }

    fn n_alpha(&self, two_ms: i32) -> Option<usize> {
        let na2 = self.n_el as i32 + two_ms;
        if na2 < 0 || na2 % 2 != 0 || na2 as usize > 2 * self.n_el {
            return None;
        }
        let na = (na2 / 2) as usize;
        if na > self.n_el {
            None
        } else {
            Some(na)
        }
    }

    fn subspace_range(&self, j: usize, n_b_spatial: usize) -> (usize, usize) {
        let lo = self.boundaries[j];
        let hi = if j + 1 < self.boundaries.len() {
            self.boundaries[j + 1]
        } else {
            2 * n_b_spatial
        };
        (lo, hi)
    }

    fn subspace_capacity(&self, j: usize, n_b_spatial: usize) -> usize {
        let (lo, hi) = self.subspace_range(j, n_b_spatial);
        hi - lo
    }

    /// Spatial orbitals whose α (spin = 0) or β (spin = 1) spin orbital lies
    /// in subspace `j`.
    fn slots(&self, j: usize, spin: usize, n_b_spatial: usize) -> Vec<usize> {
        let (lo, hi) = self.subspace_range(j, n_b_spatial);
        (0..n_b_spatial).filter(|&p| (lo..hi).contains(&(2 * p + spin))).collect()
    }
}

/// Enumerated determinant basis with stable lexicographic addressing.
#[derive(Debug, Clone)]
pub struct DeterminantSpace {
    dets: Vec<Determinant>,
    pub n_spatial: usize,
    pub n_words: usize,
    pub spec: GasSpec,
    /// Subspace owning each spin orbital.
    so_subspace: Vec<u8>,
    /// Patterns as fixed-width arrays for O(1) membership checks.
    patterns: Vec<Vec<u8>>,
}

impl DeterminantSpace {
    pub fn len(&self) -> usize {
        self.dets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dets.is_empty()
    }

    pub fn dets(&self) -> &[Determinant] {
        &self.dets
    }

    pub fn det(&self, i: usize) -> &Determinant {
        &self.dets[i]
    }

    /// Position of a determinant in the lexicographic ordering.
    pub fn index_of(&self, d: &Determinant) -> Option<usize> {
        self.dets.binary_search_by(|probe| probe.cmp_lex(d)).ok()
    }

    pub fn n_subspaces(&self) -> usize {
        self.spec.n_subspaces()
    }

    #[inline]
    pub fn subspace_of(&self, spin_orbital: usize) -> usize {
        self.so_subspace[spin_orbital] as usize
    }

    /// Per-subspace electron counts of a determinant.
    pub fn occupation_profile(&self, d: &Determinant) -> Vec<u8> {
        let mut prof = vec![0u8; self.n_subspaces()];
        for p in d.alpha.iter() {
            prof[self.subspace_of(2 * p)] += 1;
        }
        for p in d.beta.iter() {
            prof[self.subspace_of(2 * p + 1)] += 1;
        }
        prof
    }

    pub fn profile_allowed(&self, prof: &[u8]) -> bool {
        self.patterns.iter().any(|p| p[..] == *prof)
    }

    /// Content hash of the enumerated space (used to guard checkpoints
    /// against basis mismatches).
    pub fn content_hash(&self) -> u64 {
        // FNV-1a over the determinant words and the defining sizes
        let mut h: u64 = 0xcbf29ce484222325;
        let mut feed = |x: u64| {
            for byte in x.to_le_bytes() {
                h ^= byte as u64;
                h = h.wrapping_mul(0x100000001b3);
            }
        };
        feed(self.n_spatial as u64);
        feed(self.dets.len() as u64);
        feed(self.spec.two_ms as u64 as u64);
        for d in &self.dets {
            for &w in d.alpha.words.iter() {
                feed(w);
            }
            for &w in d.beta.words.iter() {
                feed(w);
            }
        }
        h
    }
}

/// Number of determinants the spec would enumerate, without materializing.
pub fn count_determinants(spec: &GasSpec, n_b_spatial: usize) -> Result<u128> {
    spec.validate(n_b_spatial)?;
    let n_alpha = spec.n_alpha(spec.two_ms).unwrap();
    let mut total: u128 = 0;
    for pat in &spec.patterns {
        for_each_split(spec, pat, n_alpha, n_b_spatial, &mut |splits| {
            let mut prod: u128 = 1;
            for (j, &(a, b)) in splits.iter().enumerate() {
                let na = spec.slots(j, 0, n_b_spatial).len();
                let nb = spec.slots(j, 1, n_b_spatial).len();
                prod = prod.saturating_mul(binomial(na, a)).saturating_mul(binomial(nb, b));
            }
            total = total.saturating_add(prod);
        });
    }
    Ok(total)
}

/// Enumerate all determinants satisfying the spec and `M_s` restriction,
/// in deterministic lexicographic order.
pub fn enumerate(spec: &GasSpec, n_b_spatial: usize, cap: usize) -> Result<DeterminantSpace> {
    let count = count_determinants(spec, n_b_spatial)?;
    if count > cap as u128 {
        return Err(Error::SpaceTooLarge { computed: count, cap: cap as u128 });
    }
    let n_alpha = spec.n_alpha(spec.two_ms).unwrap();
    let n_words = n_b_spatial.div_ceil(64).max(1);
    let mut dets: Vec<Determinant> = Vec::with_capacity(count as usize);

    for pat in &spec.patterns {
        for_each_split(spec, pat, n_alpha, n_b_spatial, &mut |splits| {
            // per-subspace candidate orbital combinations for each spin
            let mut alpha_choices: Vec<Vec<Vec<usize>>> = Vec::new();
            let mut beta_choices: Vec<Vec<Vec<usize>>> = Vec::new();
            for (j, &(a, b)) in splits.iter().enumerate() {
                alpha_choices.push(combinations(&spec.slots(j, 0, n_b_spatial), a));
                beta_choices.push(combinations(&spec.slots(j, 1, n_b_spatial), b));
            }
            let choices: Vec<&Vec<Vec<usize>>> =
                alpha_choices.iter().chain(beta_choices.iter()).collect();
            cartesian(&choices, &mut |sel| {
                let g = splits.len();
                let mut alpha = OrbSet::empty(n_words);
                let mut beta = OrbSet::empty(n_words);
                for (k, orbs) in sel.iter().enumerate() {
                    let target = if k < g { &mut alpha } else { &mut beta };
                    for &p in orbs.iter() {
                        target.set(p);
                    }
                }
                dets.push(Determinant { alpha, beta });
            });
        });
    }

    dets.sort_by(|a, b| a.cmp_lex(b));
    debug_assert!(dets.windows(2).all(|w| w[0].cmp_lex(&w[1]) == std::cmp::Ordering::Less));

    let n_so = 2 * n_b_spatial;
    let mut so_subspace = vec![0u8; n_so];
    for so in 0..n_so {
        let mut j = 0;
        for (k, &lo) in spec.boundaries.iter().enumerate() {
            if so >= lo {
                j = k;
            }
        }
        so_subspace[so] = j as u8;
    }
    let patterns = spec
        .patterns
        .iter()
        .map(|p| p.iter().map(|&x| x as u8).collect())
        .collect();

    Ok(DeterminantSpace {
        dets,
        n_spatial: n_b_spatial,
        n_words,
        spec: spec.clone(),
        so_subspace,
        patterns,
    })
}

/// Excitation-degree classes of determinant pairs (0 = identical, 1 or 2 =
/// single/double difference). Intended for small spaces and as the sparsity
/// pattern reference in tests; matrix assembly generates its own candidates.
#[derive(Debug)]
pub struct Connectivity {
    /// `classes[i]` = sorted `(j, degree)` with `degree <= 2` and `j != i`.
    pub classes: Vec<Vec<(u32, u8)>>,
}

pub fn excitation_connectivity(space: &DeterminantSpace) -> Connectivity {
    let n = space.len();
    let mut classes: Vec<Vec<(u32, u8)>> = vec![Vec::new(); n];
    for i in 0..n {
        let di = space.det(i);
        // singles
        for (set, spin) in [(&di.alpha, 0usize), (&di.beta, 1usize)] {
            for p in set.iter() {
                for q in 0..space.n_spatial {
                    if set.test(q) {
                        continue;
                    }
                    let mut d = di.clone();
                    let target = if spin == 0 { &mut d.alpha } else { &mut d.beta };
                    target.clear(p);
                    target.set(q);
                    if let Some(j) = space.index_of(&d) {
                        if j != i {
                            classes[i].push((j as u32, 1));
                        }
                    }
                }
            }
        }
        // doubles via pairwise scan over candidates of degree two: generate
        // by a second single excitation on each single-excited determinant
        let mut seen: Vec<(u32, u8)> = classes[i].clone();
        for &(j, _) in classes[i].clone().iter() {
            let dj = space.det(j as usize).clone();
            for (set_sel, spin) in [(0usize, 0usize), (1, 1)] {
                let set = if set_sel == 0 { &dj.alpha } else { &dj.beta };
                for p in set.iter() {
                    for q in 0..space.n_spatial {
                        if set.test(q) {
                            continue;
                        }
                        let mut d = dj.clone();
                        let target = if spin == 0 { &mut d.alpha } else { &mut d.beta };
                        target.clear(p);
                        target.set(q);
                        if let Some(k) = space.index_of(&d) {
                            if k != i && space.det(k).excitation_degree(di) == 2 {
                                seen.push((k as u32, 2));
                            }
                        }
                    }
                }
            }
        }
        seen.sort_unstable();
        seen.dedup();
        classes[i] = seen;
    }
    Connectivity { classes }
}

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut num: u128 = 1;
    for i in 0..k {
        num = num * (n - i) as u128 / (i + 1) as u128;
    }
    num
}

/// All k-combinations of the given slots, in lexicographic order.
fn combinations(slots: &[usize], k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k > slots.len() {
        return out;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.iter().map(|&i| slots[i]).collect());
        if k == 0 {
            break;
        }
        // advance the combination indices
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if idx[i] != i + slots.len() - k {
                break;
            }
        }
        if idx[i] == i + slots.len() - k {
            return out;
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
    out
}

/// Visit every per-subspace (α, β) electron split compatible with the
/// pattern and the total α count.
fn for_each_split(
    spec: &GasSpec,
    pattern: &[usize],
    n_alpha: usize,
    n_b_spatial: usize,
    visit: &mut impl FnMut(&[(usize, usize)]),
) {
    fn recurse(
        spec: &GasSpec,
        pattern: &[usize],
        n_b_spatial: usize,
        j: usize,
        remaining_alpha: usize,
        acc: &mut Vec<(usize, usize)>,
        visit: &mut impl FnMut(&[(usize, usize)]),
    ) {
        if j == pattern.len() {
            if remaining_alpha == 0 {
                visit(acc);
            }
            return;
        }
        let nj = pattern[j];
        let ca = spec.slots(j, 0, n_b_spatial).len();
        let cb = spec.slots(j, 1, n_b_spatial).len();
        for a in 0..=nj.min(ca).min(remaining_alpha) {
            let b = nj - a;
            if b > cb {
                continue;
            }
            acc.push((a, b));
            recurse(spec, pattern, n_b_spatial, j + 1, remaining_alpha - a, acc, visit);
            acc.pop();
        }
    }
    let mut acc = Vec::new();
    recurse(spec, pattern, n_b_spatial, 0, n_alpha, &mut acc, visit);
}

fn cartesian<'a, T>(choices: &[&'a Vec<T>], visit: &mut impl FnMut(&[&'a T])) {
    fn recurse<'a, T>(
        choices: &[&'a Vec<T>],
        k: usize,
        acc: &mut Vec<&'a T>,
        visit: &mut impl FnMut(&[&'a T]),
    ) {
        if k == choices.len() {
            visit(acc);
            return;
        }
        for item in choices[k].iter() {
            acc.push(item);
            recurse(choices, k + 1, acc, visit);
            acc.pop();
        }
    }
    let mut acc = Vec::new();
    recurse(choices, 0, &mut acc, visit);
}

#[cfg(test)]
mod tests {
    use super::*;

    fn n_conf(spec: &GasSpec, n_b: usize) -> usize {
        enumerate(spec, n_b, 100_000_000).unwrap().len()
    }

    #[test]
    fn he_table_counts() {
        // FCI, SAE, CIS and CAS*(2,K) sizes for the 209-orbital basis
        assert_eq!(n_conf(&GasSpec::fci(2, 0), 209), 43681);
        assert_eq!(n_conf(&GasSpec::sae_valence(2).unwrap(), 209), 209);
        assert_eq!(n_conf(&GasSpec::cis(2, 209).unwrap(), 209), 417);
        assert_eq!(n_conf(&GasSpec::cas_star(2, 0, 2, 209).unwrap(), 209), 832);
        assert_eq!(n_conf(&GasSpec::cas_star(2, 0, 3, 209).unwrap(), 209), 1245);
        assert_eq!(n_conf(&GasSpec::cas_star(2, 0, 11, 209).unwrap(), 209), 4477);
        assert_eq!(n_conf(&GasSpec::cas_star(2, 0, 27, 209).unwrap(), 209), 10557);
    }

    #[test]
    fn be_table_counts() {
        assert_eq!(n_conf(&GasSpec::sae_valence(4).unwrap(), 209), 208);
        assert_eq!(n_conf(&GasSpec::cas_star(4, 1, 2, 209).unwrap(), 209), 828);
        assert_eq!(n_conf(&GasSpec::cas_star(4, 1, 3, 209).unwrap(), 209), 1239);
        assert_eq!(n_conf(&GasSpec::cas_star(4, 1, 21, 209).unwrap(), 209), 8295);
        assert_eq!(n_conf(&GasSpec::cas_star(4, 1, 41, 209).unwrap(), 209), 15375);
        assert_eq!(n_conf(&GasSpec::cas_star(4, 0, 3, 209).unwrap(), 209), 3717);
        assert_eq!(n_conf(&GasSpec::cas_star(4, 0, 4, 209).unwrap(), 209), 9876);
        assert_eq!(
            count_determinants(&GasSpec::cas_star(4, 0, 10, 209).unwrap(), 209).unwrap(),
            181125
        );
    }

    #[test]
    fn closed_form_cas2_count() {
        // CAS*(2,K) with f frozen: K^2 + 2K(N_b - f - K) at M_s = 0
        for (f, k, nb) in [(0usize, 5usize, 40usize), (1, 3, 30), (2, 4, 25)] {
            let spec = GasSpec::cas_star(2 * f + 2, f, k, nb).unwrap();
            let expect = k * k + 2 * k * (nb - f - k);
            assert_eq!(n_conf(&spec, nb), expect);
        }
    }

    #[test]
    fn ms_conservation_and_determinism() {
        let spec = GasSpec::cas_star(4, 1, 3, 12).unwrap();
        let s1 = enumerate(&spec, 12, 1_000_000).unwrap();
        let s2 = enumerate(&spec, 12, 1_000_000).unwrap();
        assert_eq!(s1.len(), s2.len());
        for (a, b) in s1.dets().iter().zip(s2.dets()) {
            assert_eq!(a, b);
            assert_eq!(a.two_ms(), 0);
            assert_eq!(a.n_electrons(), 4);
            assert!(s1.profile_allowed(&s1.occupation_profile(a)));
        }
        // strictly sorted, no duplicates
        assert!(s1.dets().windows(2).all(|w| w[0].cmp_lex(&w[1]) == std::cmp::Ordering::Less));
    }

    #[test]
    fn odd_electron_fci() {
        // 3-electron doublet (Li fragment reference)
        let spec = GasSpec::fci(3, 1);
        let s = enumerate(&spec, 6, 1_000_000).unwrap();
        // C(6,2) * C(6,1)
        assert_eq!(s.len(), 15 * 6);
        assert!(s.dets().iter().all(|d| d.two_ms() == 1));
    }

    #[test]
    fn space_cap_enforced() {
        let err = enumerate(&GasSpec::fci(2, 0), 209, 1000).unwrap_err();
        match err {
            Error::SpaceTooLarge { computed, cap } => {
                assert_eq!(computed, 43681);
                assert_eq!(cap, 1000);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn index_lookup_roundtrip() {
        let spec = GasSpec::cas_star(2, 0, 3, 10).unwrap();
        let s = enumerate(&spec, 10, 1_000_000).unwrap();
        for (i, d) in s.dets().iter().enumerate() {
            assert_eq!(s.index_of(d), Some(i));
        }
        let missing = Determinant {
            alpha: OrbSet::from_orbitals(&[9], 1),
            beta: OrbSet::from_orbitals(&[9], 1),
        };
        assert_eq!(s.index_of(&missing), None);
    }

    #[test]
    fn two_electron_fci_fully_connected() {
        let spec = GasSpec::fci(2, 0);
        let s = enumerate(&spec, 4, 1_000_000).unwrap();
        let conn = excitation_connectivity(&s);
        for (i, cls) in conn.classes.iter().enumerate() {
            assert_eq!(cls.len(), s.len() - 1, "det {i} not connected to all others");
        }
    }

    #[test]
    fn single_determinant_space() {
        let spec = GasSpec {
            boundaries: vec![0],
            patterns: vec![vec![2]],
            n_el: 2,
            two_ms: 0,
        };
        let s = enumerate(&spec, 1, 10).unwrap();
        assert_eq!(s.len(), 1);
        let conn = excitation_connectivity(&s);
        assert!(conn.classes[0].is_empty());
    }

    #[test]
    fn connectivity_matches_pairwise_scan() {
        let spec = GasSpec::cas_star(4, 0, 2, 5).unwrap();
        let s = enumerate(&spec, 5, 1_000_000).unwrap();
        let conn = excitation_connectivity(&s);
        for i in 0..s.len() {
            let mut brute: Vec<(u32, u8)> = (0..s.len())
                .filter(|&j| j != i)
                .filter_map(|j| {
                    let deg = s.det(i).excitation_degree(s.det(j));
                    (deg <= 2).then_some((j as u32, deg as u8))
                })
                .collect();
            brute.sort_unstable();
            assert_eq!(conn.classes[i], brute, "row {i}");
        }
    }

    #[test]
    fn count_between_multiword() {
        let mut s = OrbSet::empty(3);
        for p in [0, 5, 63, 64, 70, 127, 128, 150] {
            s.set(p);
        }
        assert_eq!(s.count_between(0, 64), 2); // 5, 63
        assert_eq!(s.count_between(64, 0), 2);
        assert_eq!(s.count_between(5, 6), 0);
        assert_eq!(s.count_between(63, 129), 4); // 64, 70, 127, 128
        assert_eq!(s.count_between(0, 151), 7); // all but the endpoints themselves
    }
}
