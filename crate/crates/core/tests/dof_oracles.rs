//! Exact DoF values checked against independent oracles: the literal
//! definitions evaluated with plain `BigRational`, brute-force searches and
//! published values.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use ria_core::dof::{self, Scheme};
use ria_core::Rational;

fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn to_big(r: &Rational) -> BigRational {
    BigRational::new(r.numer().clone(), r.denom().clone())
}

fn r(n: i64, d: i64) -> Rational {
    Rational::frac(n, d)
}

/// O(K) straight from its definition, one term at a time.
fn big_o_literal(k: usize) -> BigRational {
    let k = k as i64;
    let mut s = BigRational::zero();
    for l in 2..k {
        s += q(k - l, l * l - 1);
    }
    (BigRational::one() - s / q(k - 1, 1)).recip()
}

fn objective_literal(n: usize, o: &BigRational) -> BigRational {
    let n = n as i64;
    q(n * n, 1) / (BigRational::one() + q(n * (n - 1), 1) / o)
}

/// Best n over every 2..=K, smallest n on ties.
fn brute_force_ds(k: usize) -> (usize, BigRational) {
    let o = big_o_literal(k);
    let mut best = (2, objective_literal(2, &o));
    for n in 3..=k {
        let v = objective_literal(n, &o);
        if v > best.1 {
            best = (n, v);
        }
    }
    best
}

#[test]
fn big_o_matches_definition() {
    for k in 2..=120 {
        assert_eq!(to_big(&dof::big_o(k).unwrap()), big_o_literal(k), "K = {k}");
    }
}

#[test]
fn big_o_is_order_two_dof() {
    for k in 2..=60 {
        let table = dof::dof_m_table(k).unwrap();
        assert_eq!(dof::big_o(k).unwrap(), table[0], "K = {k}");
    }
}

#[test]
fn published_small_k_values() {
    assert_eq!(dof::big_o(3).unwrap(), r(6, 5));
    let b = dof::sum_dof(3).unwrap();
    assert_eq!((b.o1, b.o2), (2, 3));
    assert_eq!(b.ds, r(3, 2));
    assert_eq!(dof::sum_dof(4).unwrap().ds, r(108, 65));
    assert_eq!(dof::sum_dof(5).unwrap().ds, r(360, 201));
    assert_eq!(dof::ds_limit(), r(64, 15));
}

#[test]
fn n_star_is_global_optimum() {
    for k in 2..=80 {
        let (n, ds) = brute_force_ds(k);
        let b = dof::sum_dof(k).unwrap();
        assert_eq!(to_big(&b.ds), ds, "K = {k}");
        assert_eq!(b.n_star, n, "K = {k}");
    }
}

#[test]
fn two_paths_agree() {
    for k in 3..=200 {
        let rec = dof::dof_m_table(k).unwrap();
        let closed = dof::appendix_b_table(k).unwrap();
        assert_eq!(closed[0], dof::a2_closed(k).unwrap());
        for m in 2..k {
            let via_a = (Rational::one() - &closed[m - 2]).recip().unwrap();
            assert_eq!(via_a, rec[m - 2], "K = {k}, m = {m}");
        }
    }
}

#[test]
fn large_k_against_float_oracle() {
    // high-precision reference for K = 10^4: n* = 8, ds = 4.2519222714538...
    let ds_exact = dof::sum_dof_value(10_000).unwrap();
    let audit = dof::bound_audit(10_000, &r(1, 100)).unwrap();
    assert_eq!(audit.final_n_star, 8);
    assert!((ds_exact.to_f64() - 4.251_922_271_453_853).abs() < 1e-12);
    let gap = (dof::ds_limit() - &ds_exact).to_f64();
    assert!((gap - 0.014_744_395_212_814).abs() < 1e-12);

    // the same value from a plain f64 evaluation
    let k = 10_000f64;
    let s: f64 = (2..10_000)
        .map(|l| (k - l as f64) / ((l * l - 1) as f64))
        .sum();
    let o = 1.0 / (1.0 - s / (k - 1.0));
    let ds = 64.0 / (1.0 + 56.0 / o);
    assert!((ds - ds_exact.to_f64()).abs() < 1e-9);
}

#[test]
fn bound_audit_agrees_with_exact_breakdowns() {
    let tol = r(1, 100);
    let audit = dof::bound_audit(300, &tol).unwrap();
    assert!(audit.violations.is_empty());
    let b = dof::sum_dof(300).unwrap();
    assert_eq!(audit.final_n_star, b.n_star);
    assert!((audit.final_ds - b.ds.to_f64()).abs() < 1e-12);
    for p in dof::fast_sweep(150) {
        let b = dof::sum_dof(p.k).unwrap();
        assert_eq!(p.ds(), b.ds, "K = {}", p.k);
        assert_eq!(p.n_star, b.n_star);
        assert!(p.below_limit());
    }
}

/// Smallest round vector found by scanning the phase-1 round count.
fn brute_force_rounds(k: usize, n: usize) -> Vec<u64> {
    let binom = |a: u64, b: u64| (0..b).fold(1u64, |acc, i| acc * (a - i) / (i + 1));
    'scan: for r1 in 1u64.. {
        let mut rounds = vec![r1];
        let supply = r1 * binom((k - 2) as u64, (n - 2) as u64);
        if supply % (k as u64 - 1) != 0 {
            continue;
        }
        rounds.push(supply / (k as u64 - 1));
        for m in 2..k {
            let feed = rounds[m - 1] * (m as u64 - 1);
            if !feed.is_multiple_of((k - m) as u64) {
                continue 'scan;
            }
            rounds.push(feed / (k - m) as u64);
        }
        return rounds;
    }
    unreachable!()
}

#[test]
fn plan_is_minimal_balanced_solution() {
    for k in 2..=7 {
        for n in 2..=k {
            let plan = dof::replication_plan(k, n).unwrap();
            let mut rounds = vec![plan.phase1_rounds];
            rounds.extend(&plan.delivery_rounds);
            assert_eq!(rounds, brute_force_rounds(k, n), "K = {k}, n = {n}");
            for f in &plan.flows {
                assert_eq!(f.generated, f.consumed, "K = {k}, n = {n}, m = {}", f.m);
            }
        }
    }
}

#[test]
fn plan_ratio_equals_objective() {
    for k in 2..=9 {
        let o = dof::big_o(k).unwrap();
        for n in 2..=k {
            let plan = dof::replication_plan(k, n).unwrap();
            assert_eq!(plan.ratio(), dof::objective(n, &o), "K = {k}, n = {n}");
        }
    }
}

#[test]
fn published_plan_sizes() {
    let p = dof::replication_plan(4, 3).unwrap();
    assert_eq!((p.total_symbols, p.total_slots), (108, 65));
    let p = dof::replication_plan(3, 3).unwrap();
    assert_eq!((p.total_symbols, p.total_slots), (18, 12));
    let p = dof::replication_plan(3, 2).unwrap();
    assert_eq!((p.total_symbols, p.total_slots), (24, 16));
    let p = dof::replication_plan(2, 2).unwrap();
    assert_eq!((p.total_symbols, p.total_slots), (4, 3));
}

/// Count (subset, member) pairs by enumerating bitmasks.
fn subset_slots(k: usize, m: usize) -> u64 {
    (0u32..1 << k)
        .filter(|s| s.count_ones() as usize == m)
        .map(|_| m as u64)
        .sum()
}

#[test]
fn count_table_matches_enumeration() {
    for k in 2..=8 {
        for n in 2..=k {
            let c = dof::counts(k, n).unwrap();
            let t1 = (0u32..1 << k)
                .filter(|s| s.count_ones() as usize == n)
                .count() as u64;
            assert_eq!(c.t1, t1);
            assert_eq!(c.n1, (n * n) as u64 * t1);
            assert_eq!(c.n2, (n * (n - 1)) as u64 * t1);
            for o in &c.orders {
                assert_eq!(o.t_m, subset_slots(k, o.m));
                assert_eq!(o.n_m, (k - o.m + 1) as u64 * o.t_m);
                let up = if o.m < k {
                    subset_slots(k, o.m + 1) / (o.m as u64 + 1)
                } else {
                    0
                };
                assert_eq!(o.higher_generated, ((o.m - 1) * (o.m + 1)) as u64 * up);
                assert_eq!(o.aligned_generated, (o.m + 1) as u64 * up);
            }
        }
    }
}

#[test]
fn comparators() {
    assert_eq!(dof::comparator(3, Scheme::MalekiK3).unwrap(), r(9, 8));
    assert_eq!(dof::comparator(3, Scheme::AbdoliSisoK3).unwrap(), r(36, 31));
    assert_eq!(dof::comparator(3, Scheme::TwoPhaseMisoic).unwrap(), r(9, 7));
    assert_eq!(dof::comparator(3, Scheme::Torrellas).unwrap(), r(3, 2));
    assert_eq!(dof::comparator(3, Scheme::MatBc).unwrap(), r(18, 11));
    assert!(dof::comparator(4, Scheme::MalekiK3).is_err());
    for k in 2..=30i64 {
        let ku = k as usize;
        let h: BigRational = (1..=k).map(|i| q(1, i)).sum();
        assert_eq!(
            to_big(&dof::comparator(ku, Scheme::MatBc).unwrap()),
            q(k, 1) / h
        );
        assert_eq!(
            dof::comparator(ku, Scheme::TwoPhaseMisoic).unwrap(),
            r(k * k, k * k - k + 1)
        );
        assert_eq!(
            dof::comparator(ku, Scheme::Torrellas).unwrap(),
            r(2 * k, k + 1)
        );
    }
}

#[test]
fn proposed_scheme_beats_general_k_comparators() {
    for k in 3..=40 {
        let ds = dof::sum_dof(k).unwrap().ds;
        for s in [Scheme::TwoPhaseMisoic, Scheme::Torrellas] {
            let c = dof::comparator(k, s).unwrap();
            if k > 3 || s != Scheme::Torrellas {
                assert!(ds > c, "K = {k}, {s:?}");
            }
        }
    }
}

#[test]
fn out_of_range_inputs() {
    assert!(dof::sum_dof(1).is_err());
    assert!(dof::replication_plan(4, 5).is_err());
    assert!(dof::replication_plan(4, 1).is_err());
    assert!(dof::counts(3, 4).is_err());
}
