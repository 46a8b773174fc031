//! Symbol identities, their linear forms over private symbols, and the
//! per-trial ground-truth pool.
//!
//! Every symbol is written `u[i | desired ; known]`: sent by Tx `i`, built
//! only from Tx `i`'s private symbols, wanted by the receivers in `desired`
//! and already available at the receivers in `known`. User indices are
//! 0-based.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::SymbolError;
use crate::linalg::{self, RANK_THRESHOLD};

/// Re-draws allowed before a combination matrix is declared degenerate.
pub const MAX_LC_DRAWS: usize = 8;

/// A set of user indices below 32, iterated in increasing order.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct UserSet(u32);

impl UserSet {
    pub const MAX_USERS: usize = 32;

    pub fn empty() -> Self {
        UserSet(0)
    }

    pub fn single(i: usize) -> Self {
        UserSet::empty().with(i)
    }

    /// The first `k` users.
    pub fn all(k: usize) -> Self {
        assert!(k <= Self::MAX_USERS);
        UserSet(if k == 32 { u32::MAX } else { (1u32 << k) - 1 })
    }

    pub fn with(self, i: usize) -> Self {
        assert!(i < Self::MAX_USERS, "user index {i} out of range");
        UserSet(self.0 | (1 << i))
    }

    pub fn without(self, i: usize) -> Self {
        assert!(i < Self::MAX_USERS, "user index {i} out of range");
        UserSet(self.0 & !(1 << i))
    }

    pub fn contains(self, i: usize) -> bool {
        i < Self::MAX_USERS && self.0 & (1 << i) != 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn is_disjoint(self, other: UserSet) -> bool {
        self.0 & other.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = usize> {
        (0..Self::MAX_USERS).filter(move |&i| self.contains(i))
    }

    /// Position of `i` among the members, in increasing order.
    pub fn position(self, i: usize) -> Option<usize> {
        self.contains(i)
            .then(|| (self.0 & ((1u32 << i) - 1)).count_ones() as usize)
    }
}

impl FromIterator<usize> for UserSet {
    fn from_iter<T: IntoIterator<Item = usize>>(iter: T) -> Self {
        iter.into_iter().fold(UserSet::empty(), UserSet::with)
    }
}

impl fmt::Display for UserSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let items: Vec<String> = self.iter().map(|i| i.to_string()).collect();
        write!(f, "{{{}}}", items.join(","))
    }
}

impl fmt::Debug for UserSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl Serialize for UserSet {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(self.iter())
    }
}

impl<'de> Deserialize<'de> for UserSet {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = Vec::<usize>::deserialize(d)?;
        if let Some(bad) = v.iter().find(|&&i| i >= UserSet::MAX_USERS) {
            return Err(serde::de::Error::custom(format!(
                "user index {bad} out of range"
            )));
        }
        Ok(v.into_iter().collect())
    }
}

/// All `m`-subsets of `0..k` in lexicographic order.
pub fn subsets(k: usize, m: usize) -> Vec<UserSet> {
    let mut out = Vec::new();
    if m > k {
        return out;
    }
    let mut idx: Vec<usize> = (0..m).collect();
    loop {
        out.push(idx.iter().copied().collect());
        let mut i = m;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if idx[i] < k - m + i {
                idx[i] += 1;
                for j in i + 1..m {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SymbolClass {
    /// Fresh message symbol.
    Private,
    /// `u[i|S_m]`, wanted by `m` users, known by none.
    Order(usize),
    /// `u[i|i;S_m']`, wanted by its origin only, known by `m'` others.
    Aligned(usize),
    /// `u[i|S_m;j]`, the scalar receiver `j` overhears while `S_m` is served.
    SideInfo(usize),
}

impl fmt::Display for SymbolClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SymbolClass::Private => write!(f, "private"),
            SymbolClass::Order(m) => write!(f, "order-{m}"),
            SymbolClass::Aligned(m) => write!(f, "order-(1,{m})"),
            SymbolClass::SideInfo(m) => write!(f, "side-info-{m}"),
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SymbolId {
    pub origin: usize,
    pub desired: UserSet,
    pub known: UserSet,
    /// Replication round of the phase that created the symbol.
    pub round: u32,
    /// Slot at which the symbol was created.
    pub slot: u32,
    /// Index within a multi-symbol payload or generation group.
    pub component: u32,
}

impl SymbolId {
    pub fn class(&self) -> SymbolClass {
        let d = self.desired.len();
        match (d, self.known.len()) {
            (1, 0) => SymbolClass::Private,
            (_, 0) => SymbolClass::Order(d),
            (1, k) => SymbolClass::Aligned(k),
            _ => SymbolClass::SideInfo(d),
        }
    }

    /// Structural invariants: disjoint sets, origin among the desired
    /// users, and the order-(1,m') shape when `known` is non-empty with a
    /// single desired user.
    pub fn is_well_formed(&self) -> bool {
        self.desired.is_disjoint(self.known)
            && self.desired.contains(self.origin)
            && match self.class() {
                SymbolClass::Aligned(_) => self.desired == UserSet::single(self.origin),
                SymbolClass::SideInfo(_) => self.known.len() == 1,
                _ => true,
            }
    }
}

impl fmt::Display for SymbolId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "u[{}|{}", self.origin, self.desired)?;
        if !self.known.is_empty() {
            write!(f, ";{}", self.known)?;
        }
        write!(f, "]@r{}s{}c{}", self.round, self.slot, self.component)
    }
}

impl fmt::Debug for SymbolId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Coefficients over private-symbol indices.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LinearForm(BTreeMap<usize, Complex64>);

impl LinearForm {
    pub fn unit(private: usize) -> Self {
        LinearForm(BTreeMap::from([(private, Complex64::new(1.0, 0.0))]))
    }

    /// `Σ coef_i · form_i`.
    pub fn combine<'a>(terms: impl IntoIterator<Item = (Complex64, &'a LinearForm)>) -> Self {
        let mut acc: BTreeMap<usize, Complex64> = BTreeMap::new();
        for (c, form) in terms {
            if c == Complex64::new(0.0, 0.0) {
                continue;
            }
            for (&idx, &v) in &form.0 {
                *acc.entry(idx).or_default() += c * v;
            }
        }
        acc.retain(|_, v| *v != Complex64::new(0.0, 0.0));
        LinearForm(acc)
    }

    pub fn evaluate(&self, privates: &[Complex64]) -> Complex64 {
        self.0.iter().map(|(&i, &c)| c * privates[i]).sum()
    }

    /// `Σ |coef · value|`, the scale against which rounding is judged.
    pub fn magnitude(&self, privates: &[Complex64]) -> f64 {
        self.0.iter().map(|(&i, &c)| (c * privates[i]).norm()).sum()
    }

    pub fn coefficient(&self, private: usize) -> Complex64 {
        self.0.get(&private).copied().unwrap_or_default()
    }

    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.keys().copied()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SymbolRecord {
    pub form: LinearForm,
    pub value: Complex64,
}

/// Combination coefficients of one generation group: rows `0..m-1` build
/// the order-(m+1) symbols, the last row builds the order-(1,m) symbol.
/// Column `p` multiplies the constituent overheard by the `p`-th listener.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LcMatrix {
    #[serde(with = "crate::linalg::serde_matrix")]
    pub coeffs: DMatrix<Complex64>,
}

impl LcMatrix {
    pub fn order(&self) -> usize {
        self.coeffs.nrows()
    }

    pub fn higher_rows(&self) -> DMatrix<Complex64> {
        let m = self.order();
        self.coeffs.rows(0, m - 1).into_owned()
    }

    /// The matrix a listener at column `p` solves: the order-(m+1) rows
    /// plus a unit row for its own overheard constituent.
    pub fn listener_system(&self, p: usize) -> DMatrix<Complex64> {
        let m = self.order();
        let mut a = self.coeffs.clone();
        for c in 0..m {
            a[(m - 1, c)] = Complex64::new(if c == p { 1.0 } else { 0.0 }, 0.0);
        }
        a
    }

    pub fn min_singular(&self) -> f64 {
        linalg::min_singular_rows(&self.coeffs)
    }

    /// Full rank for the origin and for every listener's system.
    pub fn is_decodable(&self) -> bool {
        self.min_singular() > RANK_THRESHOLD
            && (0..self.order())
                .all(|p| linalg::min_singular_rows(&self.listener_system(p)) > RANK_THRESHOLD)
    }
}

/// Output of one distributed generation step for `(origin, set)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HigherOrderGroup {
    pub origin: usize,
    pub set: UserSet,
    pub round: u32,
    /// Order of the constituents' desired sets.
    pub order: usize,
    /// `set \ {origin}` in increasing order; constituent `p` was overheard by `listeners[p]`.
    pub listeners: Vec<usize>,
    pub constituents: Vec<SymbolId>,
    pub higher: Vec<SymbolId>,
    pub aligned: SymbolId,
    pub lc: LcMatrix,
}

/// Registry of every symbol in one trial with its form and true value.
#[derive(Clone, Debug, Default)]
pub struct SymbolPool {
    records: BTreeMap<SymbolId, SymbolRecord>,
    private_values: Vec<Complex64>,
    private_ids: Vec<SymbolId>,
}

impl SymbolPool {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers `count` fresh private symbols of `tx` with i.i.d. standard
    /// complex Gaussian values.
    pub fn register_private<R: Rng + ?Sized>(
        &mut self,
        tx: usize,
        count: usize,
        round: u32,
        slot: u32,
        rng: &mut R,
    ) -> Result<Vec<SymbolId>, SymbolError> {
        if count == 0 {
            return Err(SymbolError::EmptyRegistration);
        }
        let mut ids = Vec::with_capacity(count);
        for c in 0..count {
            let id = SymbolId {
                origin: tx,
                desired: UserSet::single(tx),
                known: UserSet::empty(),
                round,
                slot,
                component: c as u32,
            };
            if self.records.contains_key(&id) {
                return Err(SymbolError::Duplicate(id.to_string()));
            }
            let idx = self.private_values.len();
            let value = linalg::complex_gaussian(rng);
            self.private_values.push(value);
            self.private_ids.push(id);
            self.records.insert(
                id,
                SymbolRecord {
                    form: LinearForm::unit(idx),
                    value,
                },
            );
            ids.push(id);
        }
        Ok(ids)
    }

    /// Registers `id` as `Σ coef · parent`. All parents must be registered
    /// and share `id`'s origin.
    pub fn insert_combination(
        &mut self,
        id: SymbolId,
        terms: &[(Complex64, SymbolId)],
    ) -> Result<&SymbolRecord, SymbolError> {
        if self.records.contains_key(&id) {
            return Err(SymbolError::Duplicate(id.to_string()));
        }
        let mut parts = Vec::with_capacity(terms.len());
        for (c, pid) in terms {
            let rec = self
                .records
                .get(pid)
                .ok_or_else(|| SymbolError::Unregistered(pid.to_string()))?;
            if pid.origin != id.origin {
                return Err(SymbolError::ForeignConstituent(pid.to_string()));
            }
            parts.push((*c, rec));
        }
        let form = LinearForm::combine(parts.iter().map(|(c, r)| (*c, &r.form)));
        let value = parts.iter().map(|(c, r)| c * r.value).sum();
        self.records.insert(id, SymbolRecord { form, value });
        Ok(&self.records[&id])
    }

    /// Registers the scalar `channel_rowᴴ · precoder · payload` under `id`.
    pub fn derive_overheard(
        &mut self,
        id: SymbolId,
        payload: &[SymbolId],
        channel_row: &[Complex64],
        precoder: &DMatrix<Complex64>,
    ) -> Result<(LinearForm, Complex64), SymbolError> {
        if precoder.ncols() != payload.len() {
            return Err(SymbolError::Dimension(format!(
                "precoder has {} columns for {} payload symbols",
                precoder.ncols(),
                payload.len()
            )));
        }
        if precoder.nrows() != channel_row.len() {
            return Err(SymbolError::Dimension(format!(
                "precoder has {} rows for a channel of length {}",
                precoder.nrows(),
                channel_row.len()
            )));
        }
        let coeffs = linalg::effective_row(channel_row, precoder);
        let terms: Vec<_> = coeffs.into_iter().zip(payload.iter().copied()).collect();
        let rec = self.insert_combination(id, &terms)?;
        Ok((rec.form.clone(), rec.value))
    }

    /// Distributed generation for Tx `origin` and the set `set` of `m + 1`
    /// users: from the `m` constituents `u[origin | set \ j ; j]` (ordered by
    /// listener `j`) builds `m - 1` order-(m+1) symbols and one
    /// order-(1,m) symbol.
    pub fn make_higher_order<R: Rng + ?Sized>(
        &mut self,
        origin: usize,
        set: UserSet,
        constituents: &[SymbolId],
        round: u32,
        slot: u32,
        rng: &mut R,
    ) -> Result<HigherOrderGroup, SymbolError> {
        if !set.contains(origin) || set.len() < 3 {
            return Err(SymbolError::Dimension(format!(
                "generation set {set} must contain Tx{origin} and at least 3 users"
            )));
        }
        let m = set.len() - 1;
        if constituents.len() != m {
            return Err(SymbolError::ConstituentCount {
                expected: m,
                got: constituents.len(),
            });
        }
        let listeners: Vec<usize> = set.without(origin).iter().collect();
        for (c, &j) in constituents.iter().zip(&listeners) {
            let expected_shape =
                c.origin == origin && c.desired == set.without(j) && c.known == UserSet::single(j);
            if !expected_shape {
                return Err(SymbolError::ForeignConstituent(c.to_string()));
            }
            if !self.records.contains_key(c) {
                return Err(SymbolError::Unregistered(c.to_string()));
            }
        }

        let lc = (0..MAX_LC_DRAWS)
            .map(|_| LcMatrix {
                coeffs: linalg::gaussian_matrix(rng, m, m),
            })
            .find(LcMatrix::is_decodable)
            .ok_or(SymbolError::RankDeficient(MAX_LC_DRAWS))?;

        let row_terms = |r: usize| -> Vec<(Complex64, SymbolId)> {
            (0..m)
                .map(|p| (lc.coeffs[(r, p)], constituents[p]))
                .collect()
        };
        let mut higher = Vec::with_capacity(m - 1);
        for r in 0..m - 1 {
            let id = SymbolId {
                origin,
                desired: set,
                known: UserSet::empty(),
                round,
                slot,
                component: r as u32,
            };
            self.insert_combination(id, &row_terms(r))?;
            higher.push(id);
        }
        let aligned = SymbolId {
            origin,
            desired: UserSet::single(origin),
            known: set.without(origin),
            round,
            slot,
            component: 0,
        };
        self.insert_combination(aligned, &row_terms(m - 1))?;
        Ok(HigherOrderGroup {
            origin,
            set,
            round,
            order: m,
            listeners,
            constituents: constituents.to_vec(),
            higher,
            aligned,
            lc,
        })
    }

    pub fn get(&self, id: &SymbolId) -> Option<&SymbolRecord> {
        self.records.get(id)
    }

    pub fn value(&self, id: &SymbolId) -> Option<Complex64> {
        self.records.get(id).map(|r| r.value)
    }

    pub fn contains(&self, id: &SymbolId) -> bool {
        self.records.contains_key(id)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&SymbolId, &SymbolRecord)> {
        self.records.iter()
    }

    pub fn private_values(&self) -> &[Complex64] {
        &self.private_values
    }

    pub fn private_ids(&self) -> &[SymbolId] {
        &self.private_ids
    }

    /// Largest `|form(x) - value| / (1 + Σ|coef·x|)` over the registry.
    pub fn closure_error(&self) -> f64 {
        self.records
            .values()
            .map(|r| {
                let eval = r.form.evaluate(&self.private_values);
                (eval - r.value).norm() / (1.0 + r.form.magnitude(&self.private_values))
            })
            .fold(0.0, f64::max)
    }

    /// Symbols whose form touches another transmitter's private symbols.
    pub fn purity_violations(&self) -> Vec<SymbolId> {
        self.records
            .iter()
            .filter(|(id, r)| {
                r.form
                    .support()
                    .any(|p| self.private_ids[p].origin != id.origin)
            })
            .map(|(id, _)| *id)
            .collect()
    }

    pub fn census(&self) -> BTreeMap<SymbolClass, usize> {
        let mut out = BTreeMap::new();
        for id in self.records.keys() {
            *out.entry(id.class()).or_insert(0) += 1;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn subsets_are_lexicographic() {
        let s: Vec<String> = subsets(4, 2).iter().map(|s| s.to_string()).collect();
        assert_eq!(s, ["{0,1}", "{0,2}", "{0,3}", "{1,2}", "{1,3}", "{2,3}"]);
        assert_eq!(subsets(3, 3), vec![UserSet::all(3)]);
        assert_eq!(subsets(3, 0), vec![UserSet::empty()]);
        assert!(subsets(2, 3).is_empty());
        assert_eq!(subsets(7, 3).len(), 35);
    }

    #[test]
    fn user_set_basics() {
        let s: UserSet = [2, 0, 5].into_iter().collect();
        assert_eq!(s.iter().collect::<Vec<_>>(), vec![0, 2, 5]);
        assert_eq!(s.position(5), Some(2));
        assert_eq!(s.position(1), None);
        assert_eq!(s.without(2).len(), 2);
        assert_eq!(serde_json::to_string(&s).unwrap(), "[0,2,5]");
        let back: UserSet = serde_json::from_str("[5,2,0]").unwrap();
        assert_eq!(back, s);
        assert!(serde_json::from_str::<UserSet>("[40]").is_err());
    }

    #[test]
    fn classes() {
        let base = SymbolId {
            origin: 0,
            desired: UserSet::single(0),
            known: UserSet::empty(),
            round: 0,
            slot: 0,
            component: 0,
        };
        assert_eq!(base.class(), SymbolClass::Private);
        let order3 = SymbolId {
            desired: UserSet::all(3),
            ..base
        };
        assert_eq!(order3.class(), SymbolClass::Order(3));
        let aligned = SymbolId {
            known: [1, 2].into_iter().collect(),
            ..base
        };
        assert_eq!(aligned.class(), SymbolClass::Aligned(2));
        let side = SymbolId {
            desired: [0, 1].into_iter().collect(),
            known: UserSet::single(2),
            ..base
        };
        assert_eq!(side.class(), SymbolClass::SideInfo(2));
        for id in [base, order3, aligned, side] {
            assert!(id.is_well_formed(), "{id}");
        }
        let bad = SymbolId {
            desired: [1, 2].into_iter().collect(),
            ..base
        };
        assert!(!bad.is_well_formed());
        let overlapping = SymbolId {
            known: UserSet::single(0),
            ..side
        };
        assert!(!overlapping.is_well_formed());
    }

    #[test]
    fn register_private_gives_unit_forms() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut pool = SymbolPool::new();
        let ids = pool.register_private(1, 3, 0, 0, &mut rng).unwrap();
        assert_eq!(ids.len(), 3);
        let mut seen = Vec::new();
        for id in &ids {
            let rec = pool.get(id).unwrap();
            assert_eq!(rec.form.len(), 1);
            let idx = rec.form.support().next().unwrap();
            assert_eq!(rec.form.coefficient(idx), c(1.0, 0.0));
            assert_eq!(rec.form.evaluate(pool.private_values()), rec.value);
            seen.push(idx);
        }
        seen.dedup();
        assert_eq!(seen.len(), 3);
        assert_eq!(
            pool.register_private(2, 0, 0, 0, &mut rng),
            Err(SymbolError::EmptyRegistration)
        );
        assert!(matches!(
            pool.register_private(1, 1, 0, 0, &mut rng),
            Err(SymbolError::Duplicate(_))
        ));
    }

    fn overheard_id(origin: usize, desired: &[usize], known: usize) -> SymbolId {
        SymbolId {
            origin,
            desired: desired.iter().copied().collect(),
            known: UserSet::single(known),
            round: 0,
            slot: 9,
            component: 0,
        }
    }

    #[test]
    fn derive_overheard_identity_and_combination() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut pool = SymbolPool::new();
        let p = pool.register_private(0, 2, 0, 0, &mut rng).unwrap();
        let (v1, v2) = (pool.value(&p[0]).unwrap(), pool.value(&p[1]).unwrap());

        // hᴴ W = [1]
        let h = [c(1.0, 0.0)];
        let w = DMatrix::from_element(1, 1, c(1.0, 0.0));
        let (form, value) = pool
            .derive_overheard(overheard_id(0, &[0, 1], 2), &p[..1], &h, &w)
            .unwrap();
        assert_eq!(&form, &pool.get(&p[0]).unwrap().form);
        assert_eq!(value, v1);

        // hᴴ W = (α, β)
        let h = [c(1.0, 0.0), c(0.0, 0.0)];
        let (alpha, beta) = (c(0.3, -1.2), c(-0.7, 0.4));
        let w = DMatrix::from_row_slice(2, 2, &[alpha, beta, c(5.0, 5.0), c(-2.0, 1.0)]);
        let (_, value) = pool
            .derive_overheard(overheard_id(0, &[0, 1], 3), &p, &h, &w)
            .unwrap();
        assert!((value - (alpha * v1 + beta * v2)).norm() < 1e-12);

        // zero channel
        let h = [c(0.0, 0.0), c(0.0, 0.0)];
        let (form, value) = pool
            .derive_overheard(overheard_id(0, &[0, 1], 4), &p, &h, &w)
            .unwrap();
        assert!(form.is_empty());
        assert_eq!(value, c(0.0, 0.0));

        // dimension mismatch
        let err = pool.derive_overheard(overheard_id(0, &[0, 1], 5), &p[..1], &h, &w);
        assert!(matches!(err, Err(SymbolError::Dimension(_))));
    }

    fn seeded_constituents(
        pool: &mut SymbolPool,
        rng: &mut ChaCha8Rng,
        origin: usize,
        set: UserSet,
    ) -> Vec<SymbolId> {
        let privs = pool.register_private(origin, 4, 0, 0, rng).unwrap();
        set.without(origin)
            .iter()
            .map(|j| {
                let id = SymbolId {
                    origin,
                    desired: set.without(j),
                    known: UserSet::single(j),
                    round: 0,
                    slot: 1,
                    component: 0,
                };
                let terms: Vec<_> = privs
                    .iter()
                    .map(|p| (linalg::complex_gaussian(rng), *p))
                    .collect();
                pool.insert_combination(id, &terms).unwrap();
                id
            })
            .collect()
    }

    #[test]
    fn higher_order_three_users() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut pool = SymbolPool::new();
        let set = UserSet::all(3);
        let cons = seeded_constituents(&mut pool, &mut rng, 0, set);
        // u[0|{0,1};2] and u[0|{0,2};1], ordered by listener
        assert_eq!(cons[0].desired, [0, 2].into_iter().collect());
        assert_eq!(cons[1].desired, [0, 1].into_iter().collect());
        let g = pool
            .make_higher_order(0, set, &cons, 0, 5, &mut rng)
            .unwrap();
        assert_eq!(g.higher.len(), 1);
        assert_eq!(g.higher[0].class(), SymbolClass::Order(3));
        assert_eq!(g.aligned.class(), SymbolClass::Aligned(2));
        assert_eq!(g.aligned.known, [1, 2].into_iter().collect());
        assert_eq!(g.lc.order(), 2);
        assert!(g.lc.min_singular() > RANK_THRESHOLD);
        let truth: Complex64 = (0..2)
            .map(|p| g.lc.coeffs[(1, p)] * pool.value(&cons[p]).unwrap())
            .sum();
        assert!((pool.value(&g.aligned).unwrap() - truth).norm() < 1e-12);
        assert!(pool.closure_error() < 1e-12);
    }

    #[test]
    fn higher_order_four_users() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let mut pool = SymbolPool::new();
        let set: UserSet = [0, 1, 2, 3].into_iter().collect();
        let cons = seeded_constituents(&mut pool, &mut rng, 2, set);
        let g = pool
            .make_higher_order(2, set, &cons, 0, 7, &mut rng)
            .unwrap();
        assert_eq!(g.higher.len(), 2);
        assert_eq!(g.lc.order(), 3);
        let sv = g.lc.coeffs.clone().svd(false, false).singular_values;
        assert_eq!(sv.len(), 3);
        assert!(sv.iter().all(|&s| s > 1e-9));
        assert!(g.lc.is_decodable());
        assert_eq!(g.listeners, vec![0, 1, 3]);
    }

    #[test]
    fn higher_order_rejects_bad_constituents() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let mut pool = SymbolPool::new();
        let set = UserSet::all(3);
        let cons = seeded_constituents(&mut pool, &mut rng, 0, set);
        assert!(matches!(
            pool.make_higher_order(0, set, &cons[..1], 0, 5, &mut rng),
            Err(SymbolError::ConstituentCount {
                expected: 2,
                got: 1
            })
        ));
        let swapped = vec![cons[1], cons[0]];
        assert!(matches!(
            pool.make_higher_order(0, set, &swapped, 0, 5, &mut rng),
            Err(SymbolError::ForeignConstituent(_))
        ));
        let mut ghost = cons.clone();
        ghost[0].slot = 99;
        assert!(matches!(
            pool.make_higher_order(0, set, &ghost, 0, 5, &mut rng),
            Err(SymbolError::Unregistered(_))
        ));
    }

    #[test]
    fn cross_origin_combination_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut pool = SymbolPool::new();
        let a = pool.register_private(0, 1, 0, 0, &mut rng).unwrap();
        let id = overheard_id(1, &[0, 1], 2);
        assert!(matches!(
            pool.insert_combination(id, &[(c(1.0, 0.0), a[0])]),
            Err(SymbolError::ForeignConstituent(_))
        ));
        assert!(pool.purity_violations().is_empty());
    }

    proptest! {
        #[test]
        fn combinations_keep_closure(seed in any::<u64>(), n in 1usize..6, depth in 1usize..5) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut pool = SymbolPool::new();
            let mut layer = pool.register_private(0, n, 0, 0, &mut rng).unwrap();
            for d in 0..depth {
                let mut next = Vec::new();
                for i in 0..n {
                    let id = SymbolId {
                        origin: 0,
                        desired: [0, 1].into_iter().collect(),
                        known: UserSet::empty(),
                        round: d as u32,
                        slot: 1 + d as u32,
                        component: i as u32,
                    };
                    let terms: Vec<_> = layer.iter().map(|p| (linalg::complex_gaussian(&mut rng), *p)).collect();
                    pool.insert_combination(id, &terms).unwrap();
                    next.push(id);
                }
                layer = next;
            }
            prop_assert!(pool.closure_error() < 1e-12);
            prop_assert!(pool.purity_violations().is_empty());
        }
    }
}
