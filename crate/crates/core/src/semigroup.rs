//! Exponent lattice `mu_1 < mu_2 < ...` generated by the decay rates
//! `nu * Lambda_k`, and enumeration of the index tuples
//! `(k; j_1, ..., j_m)` with `mu_k + mu_j1 + ... + mu_jm = mu_n`.
//!
//! Exponents are stored as exact rational residues `r` with
//! `mu = nu * r * scale`; `nu` is an exact rational and `scale` an optional
//! floating factor (for instance `(2 pi / L)^2`). All lattice arithmetic is
//! performed on the residues, so resonance detection is exact.

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap, HashMap};

use num_traits::{One, Signed, ToPrimitive};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::scalar::{fraction_string, rational_to_f64, Rational};

/// A lattice element in units of `nu`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Exponent(Rational);

impl Exponent {
    pub fn new(value: Rational) -> Result<Self> {
        if !value.is_positive() {
            return Err(Error::InvalidInput(format!(
                "exponents must be positive, got {value}"
            )));
        }
        Ok(Exponent(value))
    }

    pub fn value(&self) -> &Rational {
        &self.0
    }
}

/// One ordered term of the recursion for `zeta_n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Decomposition {
    pub n: usize,
    pub k: usize,
    pub js: Vec<usize>,
}

impl Decomposition {
    pub fn m(&self) -> usize {
        self.js.len()
    }
}

/// An ordered decomposition class: `js` sorted ascending, with the number
/// of distinct orderings of `js`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupedDecomposition {
    pub decomposition: Decomposition,
    pub multiplicity: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Semigroup {
    generators: Vec<Exponent>,
    nu: Rational,
    scale: f64,
    elements: Vec<Exponent>,
    index_of: HashMap<Rational, usize>,
}

/// The `n_cap` smallest distinct finite sums of the generators.
pub fn build_semigroup(generators: &[Rational], nu: Rational, n_cap: usize) -> Result<Semigroup> {
    Semigroup::new(generators, nu, 1.0, n_cap)
}

impl Semigroup {
    pub fn new(generators: &[Rational], nu: Rational, scale: f64, n_cap: usize) -> Result<Self> {
        if generators.is_empty() {
            return Err(Error::InvalidInput("generator list is empty".into()));
        }
        if n_cap == 0 {
            return Err(Error::InvalidInput("n_cap must be at least 1".into()));
        }
        if !nu.is_positive() {
            return Err(Error::InvalidInput(format!("nu must be positive, got {nu}")));
        }
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::InvalidInput(format!("scale must be positive, got {scale}")));
        }
        let gens: BTreeSet<Rational> = generators.iter().cloned().collect();
        let gens: Vec<Exponent> = gens
            .into_iter()
            .map(Exponent::new)
            .collect::<Result<_>>()?;

        // Dijkstra-style sweep: pop the smallest unseen sum, push its
        // successors by one generator.
        let mut heap = BinaryHeap::new();
        let mut queued = BTreeSet::new();
        for g in &gens {
            heap.push(Reverse(g.0.clone()));
            queued.insert(g.0.clone());
        }
        let mut elements = Vec::with_capacity(n_cap);
        while elements.len() < n_cap {
            let Reverse(v) = heap.pop().expect("lattice is infinite");
            for g in &gens {
                let next = &v + &g.0;
                if queued.insert(next.clone()) {
                    heap.push(Reverse(next));
                }
            }
            elements.push(Exponent(v));
        }
        let index_of = elements
            .iter()
            .enumerate()
            .map(|(i, e)| (e.0.clone(), i + 1))
            .collect();
        Ok(Semigroup {
            generators: gens,
            nu,
            scale,
            elements,
            index_of,
        })
    }

    pub fn generators(&self) -> &[Exponent] {
        &self.generators
    }

    pub fn nu(&self) -> &Rational {
        &self.nu
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// True when `mu_n = nu * r_n` is an exact rational.
    pub fn is_exact(&self) -> bool {
        self.scale == 1.0
    }

    pub fn n_cap(&self) -> usize {
        self.elements.len()
    }

    pub fn elements(&self) -> &[Exponent] {
        &self.elements
    }

    fn check(&self, n: usize) -> Result<()> {
        if n == 0 || n > self.n_cap() {
            return Err(Error::IndexOutOfRange {
                index: n,
                cap: self.n_cap(),
            });
        }
        Ok(())
    }

    /// Residue `r_n` (1-based).
    pub fn residue(&self, n: usize) -> Result<&Rational> {
        self.check(n)?;
        Ok(&self.elements[n - 1].0)
    }

    /// `nu * r_n`; equals `mu_n` when the scale is one.
    pub fn mu_rational(&self, n: usize) -> Result<Rational> {
        Ok(&self.nu * self.residue(n)?)
    }

    pub fn mu(&self, n: usize) -> Result<f64> {
        Ok(rational_to_f64(&self.mu_rational(n)?) * self.scale)
    }

    /// Index of an exact residue, if it is one of the first `n_cap` elements.
    pub fn index_of(&self, residue: &Rational) -> Option<usize> {
        self.index_of.get(residue).copied()
    }

    /// `mu_{n+1} - mu_n`; needs `n + 1 <= n_cap`.
    pub fn gap(&self, n: usize) -> Result<f64> {
        self.check(n)?;
        self.check(n + 1)?;
        Ok(self.mu(n + 1)? - self.mu(n)?)
    }

    /// Smallest positive integer `s` with `s >= mu_n / mu_1 - 1`.
    pub fn s_index(&self, n: usize) -> Result<usize> {
        let ratio = self.residue(n)? / self.residue(1)? - Rational::one();
        let s = ratio.ceil().to_integer().to_usize().unwrap_or(0);
        Ok(s.max(1))
    }

    /// All ordered decompositions of `mu_n`, lexicographic in `(m, k, js)`.
    /// The `m = 0` entry is `(k = n; ())`.
    pub fn decompositions(&self, n: usize) -> Result<Vec<Decomposition>> {
        self.check(n)?;
        let s_n = self.s_index(n)?;
        self.enumerate(n, s_n, n - 1, n - 1, false, true)
    }

    /// Decompositions with caller-chosen bounds `m <= m_max`, `k <= k_max`,
    /// `j <= j_max`. For bounds at least as large as `(s_n, n, n - 1)` the
    /// sum constraint alone selects the same tuples as [`Self::decompositions`].
    pub fn decompositions_within(
        &self,
        n: usize,
        m_max: usize,
        k_max: usize,
        j_max: usize,
    ) -> Result<Vec<Decomposition>> {
        self.check(n)?;
        let k_max = k_max.min(self.n_cap());
        self.enumerate(n, m_max, k_max, j_max.min(self.n_cap()), false, k_max >= n)
    }

    /// Multiset form of [`Self::decompositions`]: `js` nondecreasing, each
    /// class carrying its number of orderings. Valid for symmetric tensors.
    pub fn grouped_decompositions(&self, n: usize) -> Result<Vec<GroupedDecomposition>> {
        self.check(n)?;
        let s_n = self.s_index(n)?;
        let raw = self.enumerate(n, s_n, n - 1, n - 1, true, true)?;
        Ok(raw
            .into_iter()
            .map(|d| {
                let multiplicity = orderings(&d.js);
                GroupedDecomposition {
                    decomposition: d,
                    multiplicity,
                }
            })
            .collect())
    }

    fn enumerate(
        &self,
        n: usize,
        m_max: usize,
        k_max: usize,
        j_max: usize,
        sorted_only: bool,
        include_m0: bool,
    ) -> Result<Vec<Decomposition>> {
        let target = self.residue(n)?.clone();
        let mut out = Vec::new();
        // m = 0 forces k = n
        if include_m0 {
            out.push(Decomposition {
                n,
                k: n,
                js: vec![],
            });
        }
        let r1 = self.elements[0].0.clone();
        let mut js = Vec::new();
        for m in 1..=m_max {
            for k in 1..=k_max {
                let rk = &self.elements[k - 1].0;
                let rest = &target - rk;
                // every j contributes at least r_1
                if rest < &r1 * Rational::from_integer(m.into()) {
                    break;
                }
                js.clear();
                self.fill(n, k, &rest, m, 1, j_max, sorted_only, &mut js, &mut out);
            }
        }
        Ok(out)
    }

    #[allow(clippy::too_many_arguments)]
    fn fill(
        &self,
        n: usize,
        k: usize,
        rest: &Rational,
        slots: usize,
        j_min: usize,
        j_max: usize,
        sorted_only: bool,
        js: &mut Vec<usize>,
        out: &mut Vec<Decomposition>,
    ) {
        if slots == 1 {
            if let Some(j) = self.index_of(rest) {
                if j >= j_min && j <= j_max {
                    js.push(j);
                    out.push(Decomposition {
                        n,
                        k,
                        js: js.clone(),
                    });
                    js.pop();
                }
            }
            return;
        }
        let r1 = &self.elements[0].0;
        let reserve = r1 * Rational::from_integer((slots - 1).into());
        for j in j_min..=j_max {
            let rj = &self.elements[j - 1].0;
            if rj + &reserve > *rest {
                break;
            }
            js.push(j);
            let next_min = if sorted_only { j } else { 1 };
            self.fill(n, k, &(rest - rj), slots - 1, next_min, j_max, sorted_only, js, out);
            js.pop();
        }
    }

    pub fn to_json(&self) -> Value {
        json!({
            "generators": self.generators.iter().map(|g| fraction_string(&g.0)).collect::<Vec<_>>(),
            "nu": fraction_string(&self.nu),
            "scale": self.scale,
            "n_cap": self.n_cap(),
            "residues": self.elements.iter().map(|e| fraction_string(&e.0)).collect::<Vec<_>>(),
            "mu": (1..=self.n_cap()).map(|n| self.mu(n).unwrap_or(f64::NAN)).collect::<Vec<_>>(),
        })
    }
}

/// Number of distinct orderings of a sorted tuple: `m! / prod c_i!`.
fn orderings(sorted: &[usize]) -> u64 {
    let mut total: u64 = 1;
    let mut run = 0u64;
    for (i, j) in sorted.iter().enumerate() {
        // multiply by (i+1) / (run+1) incrementally
        run = if i > 0 && sorted[i - 1] == *j { run + 1 } else { 1 };
        total = total * (i as u64 + 1) / run;
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;

    fn q(p: i64) -> Rational {
        Rational::from_integer(BigInt::from(p))
    }

    fn residues(sg: &Semigroup) -> Vec<Rational> {
        sg.elements().iter().map(|e| e.value().clone()).collect()
    }

    #[test]
    fn integer_lattice() {
        let sg = build_semigroup(&[q(1)], q(1), 5).unwrap();
        assert_eq!(residues(&sg), (1..=5).map(q).collect::<Vec<_>>());
    }

    #[test]
    fn two_five_lattice() {
        let sg = build_semigroup(&[q(2), q(5)], q(1), 6).unwrap();
        assert_eq!(residues(&sg), [2, 4, 5, 6, 7, 8].map(q).to_vec());
    }

    #[test]
    fn stokes_torus_lattice() {
        let nu = Rational::new(BigInt::from(1), BigInt::from(100));
        let sg = build_semigroup(&[1, 2, 4, 5, 8, 9, 10].map(q), nu, 6).unwrap();
        for n in 1..=6 {
            assert_eq!(
                sg.mu_rational(n).unwrap(),
                Rational::new(BigInt::from(n as i64), BigInt::from(100))
            );
        }
    }

    #[test]
    fn rejects_bad_generators() {
        assert!(build_semigroup(&[], q(1), 3).is_err());
        assert!(build_semigroup(&[q(0)], q(1), 3).is_err());
        assert!(build_semigroup(&[q(-1), q(2)], q(1), 3).is_err());
        assert!(build_semigroup(&[q(1)], q(1), 0).is_err());
    }

    #[test]
    fn s_index_values() {
        let sg = build_semigroup(&[q(1)], q(1), 5).unwrap();
        assert_eq!(sg.s_index(1).unwrap(), 1);
        assert_eq!(sg.s_index(3).unwrap(), 2);
        let sg = build_semigroup(&[q(2), q(5)], q(1), 6).unwrap();
        assert_eq!(sg.s_index(3).unwrap(), 2);
        assert!(sg.s_index(7).is_err());
        assert!(sg.s_index(0).is_err());
    }

    #[test]
    fn small_decompositions() {
        let sg = build_semigroup(&[q(1)], q(1), 5).unwrap();
        let d = |k, js: &[usize]| Decomposition {
            n: 0,
            k,
            js: js.to_vec(),
        };
        let strip = |v: Vec<Decomposition>| {
            v.into_iter()
                .map(|x| Decomposition { n: 0, ..x })
                .collect::<Vec<_>>()
        };
        assert_eq!(strip(sg.decompositions(1).unwrap()), vec![d(1, &[])]);
        assert_eq!(strip(sg.decompositions(2).unwrap()), vec![d(2, &[]), d(1, &[1])]);
        assert_eq!(
            strip(sg.decompositions(3).unwrap()),
            vec![d(3, &[]), d(1, &[2]), d(2, &[1]), d(1, &[1, 1])]
        );
    }

    #[test]
    fn grouped_counts_orderings() {
        let sg = build_semigroup(&[q(1)], q(1), 6).unwrap();
        let ordered = sg.decompositions(6).unwrap().len() as u64;
        let grouped: u64 = sg
            .grouped_decompositions(6)
            .unwrap()
            .iter()
            .map(|g| g.multiplicity)
            .sum();
        assert_eq!(ordered, grouped);
        assert_eq!(orderings(&[1, 1, 2]), 3);
        assert_eq!(orderings(&[1, 2, 3]), 6);
        assert_eq!(orderings(&[4, 4, 4]), 1);
        assert_eq!(orderings(&[]), 1);
    }

    #[test]
    fn gap_needs_next_exponent() {
        let sg = build_semigroup(&[q(2), q(5)], q(1), 3).unwrap();
        assert_eq!(sg.gap(1).unwrap(), 2.0);
        assert!(sg.gap(3).is_err());
    }
}
