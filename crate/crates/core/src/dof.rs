//! Exact degrees-of-freedom calculus.
//!
//! Everything here is integer or rational arithmetic; there is no floating
//! point on any path that produces a DoF value.
//!
//! Notation used in names:
//! * `big_o(k)` is the DoF of delivering order-2 symbols, `O(K) = DoF_2(K)`.
//! * `dof_m(k, m)` is the DoF of delivering order-`m` symbols.
//! * `A_m = 1 - 1/DoF_m` is the quantity the closed-form path works with.
//! * `n` is the number of transmitters active per slot in the first phase.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::DofError;
use crate::rational::Rational;

/// Limit of the sum DoF as the number of users grows.
pub fn ds_limit() -> Rational {
    Rational::frac(64, 15)
}

fn check_k(k: usize) -> Result<(), DofError> {
    if k < 2 {
        return Err(DofError::domain("k", k, "k >= 2"));
    }
    Ok(())
}

fn check_n(k: usize, n: usize) -> Result<(), DofError> {
    check_k(k)?;
    if n < 2 || n > k {
        return Err(DofError::domain("n", n, format!("2 <= n <= {k}")));
    }
    Ok(())
}

/// `C(n, r)`, `None` on `u64` overflow.
pub fn binomial(n: usize, r: usize) -> Option<u64> {
    if r > n {
        return Some(0);
    }
    let r = r.min(n - r);
    let mut acc: u128 = 1;
    for i in 0..r {
        // acc * (n - i) is divisible by (i + 1) after the multiplication.
        acc = acc.checked_mul((n - i) as u128)? / (i as u128 + 1);
    }
    u64::try_from(acc).ok()
}

fn binom(n: usize, r: usize) -> Result<u64, DofError> {
    binomial(n, r).ok_or(DofError::Overflow("binomial coefficient"))
}

fn mul(a: u64, b: u64, what: &'static str) -> Result<u64, DofError> {
    a.checked_mul(b).ok_or(DofError::Overflow(what))
}

// ---------------------------------------------------------------------------
// O(K) and A_2(K)
// ---------------------------------------------------------------------------

/// Smallest prime `p` such that `n = p^e`, if `n` is a prime power.
fn prime_power_base(n: usize) -> Option<usize> {
    if n < 2 {
        return None;
    }
    let mut p = 2;
    while p * p <= n && !n.is_multiple_of(p) {
        p += 1;
    }
    if !n.is_multiple_of(p) {
        return Some(n);
    }
    let mut m = n;
    while m.is_multiple_of(p) {
        m /= p;
    }
    (m == 1).then_some(p)
}

/// Partial harmonic sums kept over the common denominator `lcm(1..n)`.
///
/// Only big-by-small operations per step; the fraction is never reduced.
#[derive(Clone, Debug)]
struct Harmonic {
    n: usize,
    numer: BigInt,
    lcm: BigInt,
}

impl Harmonic {
    fn new() -> Self {
        Harmonic {
            n: 0,
            numer: BigInt::zero(),
            lcm: BigInt::one(),
        }
    }

    fn advance(&mut self) {
        self.n += 1;
        if let Some(p) = prime_power_base(self.n) {
            self.lcm *= p;
            self.numer *= p;
        }
        self.numer += &self.lcm / self.n;
    }
}

/// Unreduced `(p, q)` with `O(K) = p / q`, both positive, from the harmonic
/// state at `K - 2` and `K`.
fn big_o_from_harmonics(k: usize, h_km2: &Harmonic, h_k: &Harmonic) -> (BigInt, BigInt) {
    debug_assert_eq!(h_km2.n + 2, k);
    debug_assert_eq!(h_k.n, k);
    // H_{K-2} expressed over lcm(1..K).
    let scale = prime_power_base(k - 1).unwrap_or(1) * prime_power_base(k).unwrap_or(1);
    let p_km2 = &h_km2.numer * scale;
    let km1 = BigInt::from(k - 1);
    let kp1 = BigInt::from(k + 1);
    // A_2 = [(K-1) H_{K-2} - (K+1)(H_K - 3/2)] / (2(K-1)) = a / b
    let a = BigInt::from(2u8) * &km1 * p_km2
        - &kp1 * (BigInt::from(2u8) * &h_k.numer - BigInt::from(3u8) * &h_k.lcm);
    let b = BigInt::from(4u8) * &km1 * &h_k.lcm;
    // O = 1 / (1 - A_2) = b / (b - a)
    let q = &b - a;
    (b, q)
}

fn big_o_parts(k: usize) -> (BigInt, BigInt) {
    let mut h = Harmonic::new();
    while h.n < k - 2 {
        h.advance();
    }
    let h_km2 = h.clone();
    while h.n < k {
        h.advance();
    }
    big_o_from_harmonics(k, &h_km2, &h)
}

/// `O(K) = [1 - (1/(K-1)) Σ_{l=2}^{K-1} (K-l)/(l²-1)]^{-1}`, the DoF of
/// delivering order-2 symbols.
///
/// Evaluated through the telescoped harmonic form of the sum, which is
/// linear in `K` with a single reduction at the end.
pub fn big_o(k: usize) -> Result<Rational, DofError> {
    check_k(k)?;
    let (p, q) = big_o_parts(k);
    Ok(Rational::new(p, q).expect("q > 0"))
}

/// `A_2(K) = (1/(K-1)) Σ_{l=2}^{K-1} (K-l)/((l-1)(l+1))`, summed term by term.
pub fn a2_closed(k: usize) -> Result<Rational, DofError> {
    check_k(k)?;
    let sum: Rational = (2..k)
        .map(|l| Rational::frac((k - l) as i64, ((l - 1) * (l + 1)) as i64))
        .sum();
    Ok(sum / Rational::integer(k - 1))
}

// ---------------------------------------------------------------------------
// Recursion over orders
// ---------------------------------------------------------------------------

/// One backward step: `DoF_m` from `DoF_{m+1}`.
fn dof_step(k: usize, m: usize, next: &Rational) -> Rational {
    let numer = Rational::integer(m * (k - m + 1));
    let denom = Rational::integer(m)
        + Rational::frac((k - m) as i64, (m + 1) as i64)
        + Rational::integer((m - 1) * (k - m)) / next;
    numer / denom
}

/// `DoF_m(K)` for `m = 2..=K`, index `m - 2`, from the backward recursion
/// starting at `DoF_K(K) = 1`.
pub fn dof_m_table(k: usize) -> Result<Vec<Rational>, DofError> {
    check_k(k)?;
    let mut out = vec![Rational::one(); k - 1];
    for m in (2..k).rev() {
        out[m - 2] = dof_step(k, m, &out[m - 1]);
    }
    Ok(out)
}

/// `DoF_m(K)` from the backward recursion.
pub fn dof_m_recursive(k: usize, m: usize) -> Result<Rational, DofError> {
    check_k(k)?;
    if m < 2 || m > k {
        return Err(DofError::domain("m", m, format!("2 <= m <= {k}")));
    }
    let mut cur = Rational::one();
    for j in (m..k).rev() {
        cur = dof_step(k, j, &cur);
    }
    Ok(cur)
}

/// `A_m` through the closed products
/// `Π_{i=m}^{K-1} B_i = (m-1)/((K-1)(K-m+1))` and
/// `C_l Π_{i=m}^{l-1} B_i = ((m-1)/(K-m+1)) (K-l)/((l+1)(l-1))`, with `A_K = 0`.
pub fn appendix_b_path(k: usize, m: usize) -> Result<Rational, DofError> {
    check_k(k)?;
    if m < 2 || m + 1 > k {
        return Err(DofError::domain("m", m, format!("2 <= m <= {}", k - 1)));
    }
    let factor = Rational::frac((m - 1) as i64, (k - m + 1) as i64);
    let sum: Rational = (m..k)
        .map(|l| Rational::frac((k - l) as i64, ((l + 1) * (l - 1)) as i64))
        .sum();
    Ok(factor * sum)
}

/// [`appendix_b_path`] for every `m = 2..=K-1` (index `m - 2`) using one
/// suffix-sum pass.
pub fn appendix_b_table(k: usize) -> Result<Vec<Rational>, DofError> {
    check_k(k)?;
    let mut out = Vec::with_capacity(k.saturating_sub(2));
    let mut suffix = Rational::zero();
    for m in (2..k).rev() {
        suffix = suffix + Rational::frac((k - m) as i64, ((m + 1) * (m - 1)) as i64);
        out.push(Rational::frac((m - 1) as i64, (k - m + 1) as i64) * &suffix);
    }
    out.reverse();
    Ok(out)
}

// ---------------------------------------------------------------------------
// Sum DoF
// ---------------------------------------------------------------------------

/// Sum DoF with `n` active transmitters in phase 1: `n² / (1 + n(n-1)/O)`.
pub fn objective(n: usize, big_o: &Rational) -> Rational {
    let n2 = Rational::integer(n * n);
    let inner = Rational::integer(n * (n - 1)) / big_o;
    n2 / (Rational::one() + inner)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Candidate {
    pub n: usize,
    pub ds: Rational,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DofBreakdown {
    pub k: usize,
    pub big_o: Rational,
    /// `⌊2 O(K)⌋`, before clamping.
    pub o1: usize,
    /// `⌈2 O(K)⌉`, before clamping.
    pub o2: usize,
    /// Clamped, de-duplicated candidates with their objective values.
    pub candidates: Vec<Candidate>,
    pub n_star: usize,
    pub ds: Rational,
    /// `DoF_m(K)` for `m = 2..=K`, index `m - 2`.
    pub dof_m: Vec<Rational>,
    pub min_antennas: usize,
}

impl DofBreakdown {
    pub fn dof(&self, m: usize) -> Option<&Rational> {
        m.checked_sub(2).and_then(|i| self.dof_m.get(i))
    }
}

fn floor_ceil_twice(p: &BigInt, q: &BigInt) -> (usize, usize) {
    let (fl, rem) = (BigInt::from(2u8) * p).div_rem(q);
    let fl = fl.to_usize().expect("2 O(K) < 8");
    let ce = if rem.is_zero() { fl } else { fl + 1 };
    (fl, ce)
}

fn clamped_candidates(k: usize, o1: usize, o2: usize) -> Vec<usize> {
    let mut c = vec![o1.clamp(2, k), o2.clamp(2, k)];
    c.dedup();
    c
}

fn min_antennas(k: usize, n_star: usize) -> usize {
    if k >= 3 {
        n_star.max(k - 1)
    } else {
        k
    }
}

/// Achievable sum DoF: maximize the objective over `{⌊2O⌋, ⌈2O⌉} ∩ [2, K]`,
/// ties resolved towards the smaller `n`.
pub fn sum_dof(k: usize) -> Result<DofBreakdown, DofError> {
    check_k(k)?;
    let (p, q) = big_o_parts(k);
    let (o1, o2) = floor_ceil_twice(&p, &q);
    let o = Rational::new(p, q).expect("q > 0");
    let candidates: Vec<Candidate> = clamped_candidates(k, o1, o2)
        .into_iter()
        .map(|n| Candidate {
            n,
            ds: objective(n, &o),
        })
        .collect();
    let best = candidates
        .iter()
        .fold(None::<&Candidate>, |best, c| match best {
            Some(b) if b.ds >= c.ds => Some(b),
            _ => Some(c),
        })
        .expect("at least one candidate");
    let (n_star, ds) = (best.n, best.ds.clone());
    Ok(DofBreakdown {
        k,
        big_o: o,
        o1,
        o2,
        candidates,
        n_star,
        ds,
        dof_m: dof_m_table(k)?,
        min_antennas: min_antennas(k, n_star),
    })
}

// ---------------------------------------------------------------------------
// Fast exact sweep over K
// ---------------------------------------------------------------------------

/// One point of [`fast_sweep`]: `O(K) = o_num / o_den` unreduced.
#[derive(Clone, Debug)]
pub struct SweepPoint {
    pub k: usize,
    pub n_star: usize,
    pub o_num: BigInt,
    pub o_den: BigInt,
}

impl SweepPoint {
    /// Unreduced `(num, den)` of the sum DoF at `n_star`.
    pub fn ds_parts(&self) -> (BigInt, BigInt) {
        ds_parts(self.n_star, &self.o_num, &self.o_den)
    }

    pub fn ds(&self) -> Rational {
        let (n, d) = self.ds_parts();
        Rational::new(n, d).expect("positive denominator")
    }

    /// Exact `ds < 64/15`.
    pub fn below_limit(&self) -> bool {
        let (n, d) = self.ds_parts();
        BigInt::from(15u8) * n < BigInt::from(64u8) * d
    }

    /// Exact `|64/15 - ds| < tol`.
    pub fn gap_within(&self, tol: &Rational) -> bool {
        let (n, d) = self.ds_parts();
        let gap_num = (BigInt::from(64u8) * &d - BigInt::from(15u8) * n)
            .magnitude()
            .clone();
        let gap_den = BigInt::from(15u8) * d;
        BigInt::from(gap_num) * tol.denom() < gap_den * tol.numer()
    }
}

fn ds_parts(n: usize, p: &BigInt, q: &BigInt) -> (BigInt, BigInt) {
    let n2 = BigInt::from(n * n);
    (&n2 * p, p + BigInt::from(n * (n - 1)) * q)
}

fn best_n_unreduced(k: usize, p: &BigInt, q: &BigInt) -> usize {
    let (o1, o2) = floor_ceil_twice(p, q);
    let c = clamped_candidates(k, o1, o2);
    if c.len() == 1 {
        return c[0];
    }
    let (a, b) = (c[0], c[1]);
    // f(a) >= f(b)  <=>  a² (p + b(b-1) q) >= b² (p + a(a-1) q)
    let lhs = BigInt::from(a * a) * (p + BigInt::from(b * (b - 1)) * q);
    let rhs = BigInt::from(b * b) * (p + BigInt::from(a * (a - 1)) * q);
    if lhs >= rhs {
        a
    } else {
        b
    }
}

/// Iterates `K = 2..=k_max` carrying the harmonic sums forward, so each
/// point costs a handful of big-by-small operations and no gcd.
pub fn fast_sweep(k_max: usize) -> impl Iterator<Item = SweepPoint> {
    let mut window: Vec<Harmonic> = Vec::with_capacity(3);
    let mut h = Harmonic::new();
    window.push(h.clone());
    h.advance();
    window.push(h.clone());
    (2..=k_max).map(move |k| {
        h.advance();
        window.push(h.clone());
        if window.len() > 3 {
            window.remove(0);
        }
        let (p, q) = big_o_from_harmonics(k, &window[0], &window[2]);
        let n_star = best_n_unreduced(k, &p, &q);
        SweepPoint {
            k,
            n_star,
            o_num: p,
            o_den: q,
        }
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundAudit {
    pub k_max: usize,
    pub checked: usize,
    /// Every `K` with `ds(K) >= 64/15`.
    pub violations: Vec<usize>,
    pub final_n_star: usize,
    pub final_ds: f64,
    pub final_gap: f64,
    pub tolerance: Rational,
    /// Exact `|64/15 - ds(k_max)| < tolerance`.
    pub final_gap_within_tolerance: bool,
}

/// Exact check of `ds(K) < 64/15` for every `K = 2..=k_max`, plus the gap
/// at `k_max` against `tolerance`.
pub fn bound_audit(k_max: usize, tolerance: &Rational) -> Result<BoundAudit, DofError> {
    check_k(k_max)?;
    let mut violations = Vec::new();
    let mut checked = 0;
    let mut last = None;
    for pt in fast_sweep(k_max) {
        checked += 1;
        if !pt.below_limit() {
            violations.push(pt.k);
        }
        last = Some(pt);
    }
    let last = last.expect("k_max >= 2");
    let ds = last.ds();
    let gap = ds_limit() - &ds;
    Ok(BoundAudit {
        k_max,
        checked,
        violations,
        final_n_star: last.n_star,
        final_ds: ds.to_f64(),
        final_gap: gap.to_f64(),
        tolerance: tolerance.clone(),
        final_gap_within_tolerance: last.gap_within(tolerance),
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AsymptoteRow {
    pub k: usize,
    pub n_star: usize,
    pub ds: Rational,
    pub gap: Rational,
}

/// `(K, ds(K), 64/15 - ds(K))` for `K = 2..=k_max`, reduced.
pub fn asymptote_check(k_max: usize) -> Result<Vec<AsymptoteRow>, DofError> {
    check_k(k_max)?;
    Ok(fast_sweep(k_max)
        .map(|pt| {
            let ds = pt.ds();
            AsymptoteRow {
                k: pt.k,
                n_star: pt.n_star,
                gap: ds_limit() - &ds,
                ds,
            }
        })
        .collect())
}

// ---------------------------------------------------------------------------
// Symbol and slot counts
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrderCounts {
    pub m: usize,
    /// Slots of phase m-I, `m C(K,m)`.
    pub t_m: u64,
    /// Order-m symbols delivered by phase m-I, `(K-m+1) T_m`.
    pub n_m: u64,
    /// Order-(m+1) symbols generated after phase m-I, `(m-1)(m+1) C(K,m+1)`.
    pub higher_generated: u64,
    /// Order-(1,m) symbols generated after phase m-I, `(m+1) C(K,m+1)`.
    pub aligned_generated: u64,
}

/// Per-round symbol and slot counts.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountTable {
    pub k: usize,
    pub n: usize,
    pub n1: u64,
    pub t1: u64,
    pub n2: u64,
    /// `m = 2..=K`, index `m - 2`.
    pub orders: Vec<OrderCounts>,
}

impl CountTable {
    pub fn order(&self, m: usize) -> Option<&OrderCounts> {
        m.checked_sub(2).and_then(|i| self.orders.get(i))
    }
}

pub fn counts(k: usize, n: usize) -> Result<CountTable, DofError> {
    check_n(k, n)?;
    let t1 = binom(k, n)?;
    let n1 = mul((n * n) as u64, t1, "N_1")?;
    let n2 = mul((n * (n - 1)) as u64, t1, "N_2")?;
    let orders = (2..=k)
        .map(|m| {
            let t_m = mul(m as u64, binom(k, m)?, "T_m")?;
            let up = binom(k, m + 1)?;
            Ok(OrderCounts {
                m,
                t_m,
                n_m: mul((k - m + 1) as u64, t_m, "N_m")?,
                higher_generated: mul(((m - 1) * (m + 1)) as u64, up, "N_{m+1}")?,
                aligned_generated: mul((m + 1) as u64, up, "N_{1,m}")?,
            })
        })
        .collect::<Result<_, DofError>>()?;
    Ok(CountTable {
        k,
        n,
        n1,
        t1,
        n2,
        orders,
    })
}

// ---------------------------------------------------------------------------
// Replication planning
// ---------------------------------------------------------------------------

/// Symbols of one order produced upstream versus consumed by its delivery
/// phase, over the whole plan.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrderFlow {
    pub m: usize,
    pub generated: u64,
    pub consumed: u64,
}

/// Integer round counts that make every phase's supply equal the next
/// phase's demand.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplicationPlan {
    pub k: usize,
    pub n: usize,
    pub phase1_rounds: u64,
    /// Rounds of phase m-I, `m = 2..=K`, index `m - 2`.
    pub delivery_rounds: Vec<u64>,
    pub slots_phase1: u64,
    /// Slots of phase m-I, `m = 2..=K`, index `m - 2`.
    pub slots_delivery: Vec<u64>,
    /// Slots delivering order-(1,m) symbols, `m = 2..=K-1`, index `m - 2`.
    pub slots_aligned: Vec<u64>,
    pub total_symbols: u64,
    pub total_slots: u64,
    pub flows: Vec<OrderFlow>,
}

impl ReplicationPlan {
    /// Round count of phase 1 (`m == 1`) or phase m-I.
    pub fn rounds(&self, m: usize) -> Option<u64> {
        match m {
            0 => None,
            1 => Some(self.phase1_rounds),
            _ => self.delivery_rounds.get(m - 2).copied(),
        }
    }

    pub fn delivery_slots(&self, m: usize) -> Option<u64> {
        m.checked_sub(2)
            .and_then(|i| self.slots_delivery.get(i))
            .copied()
    }

    pub fn aligned_slots(&self, m: usize) -> Option<u64> {
        m.checked_sub(2)
            .and_then(|i| self.slots_aligned.get(i))
            .copied()
    }

    /// Private symbols per slot.
    pub fn ratio(&self) -> Rational {
        Rational::new(self.total_symbols, self.total_slots).expect("plan has slots")
    }
}

/// Minimal integer plan for `(k, n)`.
///
/// Balance per transmit queue: a phase-1 round puts `C(K-2, n-2)` order-2
/// symbols into each `(Tx k, {k, j})` queue and a phase 2-I round drains
/// `K-1`; each round of phase m-I feeds `m-1` order-(m+1) symbols per
/// `(Tx, S_{m+1})` and each round of phase (m+1)-I drains `K-m`. The
/// round counts therefore lie on a ray; the plan is its first integer point.
pub fn replication_plan(k: usize, n: usize) -> Result<ReplicationPlan, DofError> {
    check_n(k, n)?;
    let ratio = |a: u64, b: usize| BigRational::new(BigInt::from(a), BigInt::from(b));
    let mut rel: Vec<BigRational> = Vec::with_capacity(k);
    rel.push(BigRational::one());
    rel.push(ratio(binom(k - 2, n - 2)?, k - 1));
    for m in 2..k {
        let next = &rel[m - 1] * ratio((m - 1) as u64, k - m);
        rel.push(next);
    }
    let lcm = rel.iter().fold(BigInt::one(), |acc, r| acc.lcm(r.denom()));
    let scaled: Vec<BigInt> = rel.iter().map(|r| (r * &lcm).to_integer()).collect();
    let g = scaled.iter().fold(BigInt::zero(), |acc, x| acc.gcd(x));
    let rounds: Vec<u64> = scaled
        .iter()
        .map(|x| (x / &g).to_u64().ok_or(DofError::Overflow("round count")))
        .collect::<Result<_, _>>()?;

    let r1 = rounds[0];
    let delivery_rounds = rounds[1..].to_vec();
    let slots_phase1 = mul(r1, binom(k, n)?, "phase-1 slots")?;
    let mut slots_delivery = Vec::with_capacity(k - 1);
    let mut slots_aligned = Vec::with_capacity(k.saturating_sub(2));
    let mut flows = Vec::with_capacity(k - 1);
    for m in 2..=k {
        let r = delivery_rounds[m - 2];
        slots_delivery.push(mul(
            r,
            mul(m as u64, binom(k, m)?, "T_m")?,
            "phase m-I slots",
        )?);
        let consumed = mul(
            r,
            mul(
                (k - m + 1) as u64,
                mul(m as u64, binom(k, m)?, "T_m")?,
                "N_m",
            )?,
            "consumed",
        )?;
        let generated = if m == 2 {
            mul(
                r1,
                mul((n * (n - 1)) as u64, binom(k, n)?, "N_2")?,
                "generated",
            )?
        } else {
            let rp = delivery_rounds[m - 3];
            mul(
                rp,
                mul(((m - 2) * m) as u64, binom(k, m)?, "N_m")?,
                "generated",
            )?
        };
        flows.push(OrderFlow {
            m,
            generated,
            consumed,
        });
        if m < k {
            slots_aligned.push(mul(r, binom(k, m + 1)?, "aligned slots")?);
        }
    }
    let total_symbols = mul(
        r1,
        mul((n * n) as u64, binom(k, n)?, "N_1")?,
        "total symbols",
    )?;
    let total_slots = slots_phase1
        .checked_add(slots_delivery.iter().sum::<u64>())
        .and_then(|s| s.checked_add(slots_aligned.iter().sum::<u64>()))
        .ok_or(DofError::Overflow("total slots"))?;
    Ok(ReplicationPlan {
        k,
        n,
        phase1_rounds: r1,
        delivery_rounds,
        slots_phase1,
        slots_delivery,
        slots_aligned,
        total_symbols,
        total_slots,
        flows,
    })
}

// ---------------------------------------------------------------------------
// Prior-art comparators
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Scheme {
    /// Broadcast channel with delayed CSIT, `K / (1 + 1/2 + ... + 1/K)`.
    #[serde(rename = "mat_bc")]
    MatBc,
    /// Two-phase MISO IC, `K² / (K² - K + 1)`.
    #[serde(rename = "two_phase_misoic")]
    TwoPhaseMisoic,
    /// Two-phase MISO IC with one active transmitter per slot, `2K / (K + 1)`.
    #[serde(rename = "torrellas")]
    Torrellas,
    /// K-phase SISO IC, 3 users only.
    #[serde(rename = "abdoli_siso_k3")]
    AbdoliSisoK3,
    /// Two-phase SISO IC, 3 users only.
    #[serde(rename = "maleki_k3")]
    MalekiK3,
}

impl Scheme {
    pub const ALL: [Scheme; 5] = [
        Scheme::MatBc,
        Scheme::TwoPhaseMisoic,
        Scheme::Torrellas,
        Scheme::AbdoliSisoK3,
        Scheme::MalekiK3,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::MatBc => "mat_bc",
            Scheme::TwoPhaseMisoic => "two_phase_misoic",
            Scheme::Torrellas => "torrellas",
            Scheme::AbdoliSisoK3 => "abdoli_siso_k3",
            Scheme::MalekiK3 => "maleki_k3",
        }
    }

    pub fn three_user_only(self) -> bool {
        matches!(self, Scheme::AbdoliSisoK3 | Scheme::MalekiK3)
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Scheme {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Scheme::ALL
            .into_iter()
            .find(|sch| sch.name() == s)
            .ok_or_else(|| format!("unknown scheme {s:?}"))
    }
}

pub fn comparator(k: usize, scheme: Scheme) -> Result<Rational, DofError> {
    check_k(k)?;
    if scheme.three_user_only() && k != 3 {
        return Err(DofError::Unsupported { scheme, k });
    }
    let kk = k as i64;
    Ok(match scheme {
        Scheme::MatBc => {
            let h: Rational = (1..=k).map(|i| Rational::frac(1, i as i64)).sum();
            Rational::integer(k) / h
        }
        Scheme::TwoPhaseMisoic => Rational::frac(kk * kk, kk * kk - kk + 1),
        Scheme::Torrellas => Rational::frac(2 * kk, kk + 1),
        Scheme::AbdoliSisoK3 => Rational::frac(36, 31),
        Scheme::MalekiK3 => Rational::frac(9, 8),
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComparatorRow {
    pub scheme: String,
    pub ds: Option<Rational>,
}

/// The proposed scheme followed by every comparator; schemes undefined at
/// `k` carry `None`.
pub fn comparator_table(k: usize) -> Result<Vec<ComparatorRow>, DofError> {
    let mut rows = vec![ComparatorRow {
        scheme: "proposed".to_string(),
        ds: Some(sum_dof_value(k)?),
    }];
    for scheme in Scheme::ALL {
        rows.push(ComparatorRow {
            scheme: scheme.name().to_string(),
            ds: comparator(k, scheme).ok(),
        });
    }
    Ok(rows)
}

/// `ds(K)` alone, without the per-order DoF table.
pub fn sum_dof_value(k: usize) -> Result<Rational, DofError> {
    check_k(k)?;
    let (p, q) = big_o_parts(k);
    let n = best_n_unreduced(k, &p, &q);
    let (a, b) = ds_parts(n, &p, &q);
    Ok(Rational::new(a, b).expect("positive"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> Rational {
        Rational::frac(n, d)
    }

    #[test]
    fn prime_powers() {
        let got: Vec<_> = (1..=16).map(prime_power_base).collect();
        let want = [
            None,
            Some(2),
            Some(3),
            Some(2),
            Some(5),
            None,
            Some(7),
            Some(2),
            Some(3),
            None,
            Some(11),
            None,
            Some(13),
            None,
            None,
            Some(2),
        ];
        assert_eq!(got, want);
    }

    #[test]
    fn harmonic_lcm_tracks_exact_sum() {
        let mut h = Harmonic::new();
        let mut exact = Rational::zero();
        for i in 1..=60 {
            h.advance();
            exact = exact + r(1, i);
            assert_eq!(
                Rational::new(h.numer.clone(), h.lcm.clone()).unwrap(),
                exact
            );
        }
    }

    #[test]
    fn big_o_examples() {
        assert_eq!(big_o(2).unwrap(), r(1, 1));
        assert_eq!(big_o(3).unwrap(), r(6, 5));
        assert_eq!(big_o(4).unwrap(), r(72, 53));
        assert!(matches!(big_o(1), Err(DofError::Domain { .. })));
        assert!(big_o(0).is_err());
    }

    #[test]
    fn a2_examples() {
        assert_eq!(a2_closed(2).unwrap(), Rational::zero());
        assert_eq!(a2_closed(3).unwrap(), r(1, 6));
        assert_eq!(a2_closed(5).unwrap(), r(79, 240));
        assert!(a2_closed(1).is_err());
    }

    #[test]
    fn recursion_examples() {
        for k in 2..8 {
            assert_eq!(dof_m_recursive(k, k).unwrap(), Rational::one());
        }
        assert_eq!(dof_m_recursive(3, 2).unwrap(), r(6, 5));
        assert_eq!(dof_m_recursive(4, 2).unwrap(), r(72, 53));
        assert_eq!(dof_m_recursive(4, 3).unwrap(), r(8, 7));
        assert!(dof_m_recursive(4, 1).is_err());
        assert!(dof_m_recursive(4, 5).is_err());
    }

    #[test]
    fn closed_form_examples() {
        assert_eq!(appendix_b_path(3, 2).unwrap(), r(1, 6));
        assert_eq!(appendix_b_path(4, 3).unwrap(), r(1, 8));
        assert_eq!(appendix_b_path(5, 4).unwrap(), r(1, 10));
        for k in 3..12 {
            assert_eq!(appendix_b_path(k, k - 1).unwrap(), r(1, 2 * k as i64));
        }
        assert!(appendix_b_path(4, 4).is_err());
        assert!(appendix_b_path(4, 1).is_err());
        assert!(appendix_b_path(2, 2).is_err());
        assert_eq!(appendix_b_table(2).unwrap(), Vec::<Rational>::new());
    }

    #[test]
    fn sum_dof_examples() {
        let b3 = sum_dof(3).unwrap();
        assert_eq!(b3.ds, r(3, 2));
        assert_eq!((b3.o1, b3.o2), (2, 3));
        assert_eq!(b3.candidates.len(), 2);
        assert_eq!(b3.candidates[0].ds, b3.candidates[1].ds);
        assert_eq!(b3.n_star, 2);
        assert_eq!(b3.min_antennas, 2);

        let b4 = sum_dof(4).unwrap();
        assert_eq!(b4.ds, r(108, 65));
        assert_eq!(b4.n_star, 3);
        assert_eq!(b4.min_antennas, 3);

        let b5 = sum_dof(5).unwrap();
        assert_eq!(b5.ds, r(360, 201));
        assert_eq!(b5.n_star, 3);
        assert_eq!(b5.min_antennas, 4);

        let b2 = sum_dof(2).unwrap();
        assert_eq!(b2.ds, r(4, 3));
        assert_eq!((b2.o1, b2.o2, b2.n_star, b2.min_antennas), (2, 2, 2, 2));
        assert_eq!(b2.candidates.len(), 1);
        assert!(sum_dof(1).is_err());
    }

    #[test]
    fn breakdown_invariants() {
        for k in 2..40 {
            let b = sum_dof(k).unwrap();
            let two_o = Rational::integer(2) * &b.big_o;
            assert!(Rational::integer(b.o1) <= two_o && two_o <= Rational::integer(b.o2));
            assert!(b.n_star == b.o1.clamp(2, k) || b.n_star == b.o2.clamp(2, k));
            assert!((2..=k).contains(&b.n_star));
            assert_eq!(b.ds, objective(b.n_star, &b.big_o));
            assert_eq!(b.dof(k), Some(&Rational::one()));
            assert_eq!(b.dof(2), Some(&b.big_o));
            assert_eq!(sum_dof_value(k).unwrap(), b.ds);
        }
    }

    #[test]
    fn count_examples() {
        let c = counts(3, 3).unwrap();
        assert_eq!((c.n1, c.t1, c.n2), (9, 1, 6));
        let c = counts(3, 2).unwrap();
        assert_eq!((c.n1, c.t1, c.n2), (12, 3, 6));
        let row = c.order(2).unwrap();
        assert_eq!(
            (
                row.t_m,
                row.n_m,
                row.higher_generated,
                row.aligned_generated
            ),
            (6, 12, 3, 3)
        );
        let last = c.order(3).unwrap();
        assert_eq!(
            (
                last.t_m,
                last.n_m,
                last.higher_generated,
                last.aligned_generated
            ),
            (3, 3, 0, 0)
        );
        assert!(counts(3, 4).is_err());
        assert!(counts(3, 1).is_err());
    }

    #[test]
    fn plan_examples() {
        let p = replication_plan(3, 3).unwrap();
        assert_eq!(p.phase1_rounds, 2);
        assert_eq!(p.slots_phase1, 2);
        assert_eq!(p.slots_delivery, vec![6, 3]);
        assert_eq!(p.slots_aligned, vec![1]);
        assert_eq!((p.total_symbols, p.total_slots), (18, 12));

        let p = replication_plan(3, 2).unwrap();
        assert_eq!((p.total_symbols, p.total_slots), (24, 16));

        let p = replication_plan(4, 3).unwrap();
        assert_eq!(p.phase1_rounds, 3);
        assert_eq!(p.delivery_rounds, vec![2, 1, 2]);
        assert_eq!(p.slots_phase1, 12);
        assert_eq!(p.slots_delivery, vec![24, 12, 8]);
        assert_eq!(p.slots_aligned, vec![8, 1]);
        assert_eq!((p.total_symbols, p.total_slots), (108, 65));
        assert_eq!(p.ratio(), r(108, 65));

        let p = replication_plan(2, 2).unwrap();
        assert_eq!((p.phase1_rounds, p.delivery_rounds.clone()), (1, vec![1]));
        assert_eq!((p.total_symbols, p.total_slots), (4, 3));
        assert!(p.slots_aligned.is_empty());
    }

    #[test]
    fn plan_flows_balance() {
        for k in 2..=10 {
            for n in 2..=k {
                let p = replication_plan(k, n).unwrap();
                for f in &p.flows {
                    assert_eq!(f.generated, f.consumed, "k={k} n={n} m={}", f.m);
                }
            }
        }
    }

    #[test]
    fn comparator_examples() {
        assert_eq!(comparator(3, Scheme::MatBc).unwrap(), r(18, 11));
        assert_eq!(comparator(3, Scheme::TwoPhaseMisoic).unwrap(), r(9, 7));
        assert_eq!(comparator(3, Scheme::Torrellas).unwrap(), r(3, 2));
        assert_eq!(comparator(3, Scheme::AbdoliSisoK3).unwrap(), r(36, 31));
        assert_eq!(comparator(3, Scheme::MalekiK3).unwrap(), r(9, 8));
        assert_eq!(
            comparator(4, Scheme::MalekiK3),
            Err(DofError::Unsupported {
                scheme: Scheme::MalekiK3,
                k: 4
            })
        );
        assert!(comparator(4, Scheme::AbdoliSisoK3).is_err());
        assert_eq!(comparator(2, Scheme::MatBc).unwrap(), r(4, 3));
        assert_eq!("torrellas".parse::<Scheme>().unwrap(), Scheme::Torrellas);
        let table = comparator_table(4).unwrap();
        assert_eq!(table.len(), 6);
        assert_eq!(table[0].ds, Some(r(108, 65)));
        assert!(table.iter().filter(|row| row.ds.is_none()).count() == 2);
    }

    #[test]
    fn asymptote_examples() {
        let rows = asymptote_check(5).unwrap();
        assert_eq!(rows.len(), 4);
        assert_eq!(rows[1].gap, r(83, 30));
        assert_eq!(rows[3].gap, r(64, 15) - r(360, 201));
        assert!(rows.iter().all(|row| row.gap.is_positive()));
        assert!(asymptote_check(1).is_err());
    }

    #[test]
    fn fast_sweep_matches_reduced_route() {
        for pt in fast_sweep(120) {
            let b = sum_dof(pt.k).unwrap();
            assert_eq!(pt.n_star, b.n_star, "k={}", pt.k);
            assert_eq!(pt.ds(), b.ds, "k={}", pt.k);
            assert_eq!(
                Rational::new(pt.o_num.clone(), pt.o_den.clone()).unwrap(),
                b.big_o
            );
        }
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(5, 2), Some(10));
        assert_eq!(binomial(5, 6), Some(0));
        assert_eq!(binomial(0, 0), Some(1));
        assert_eq!(binomial(66, 33), Some(7219428434016265740));
        assert_eq!(binomial(68, 34), None);
    }
}
