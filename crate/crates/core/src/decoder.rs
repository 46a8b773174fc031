//! Backward decoding at each receiver: order-K symbols first, then one
//! order at a time down to 2, then the phase-1 private symbols.
//!
//! The decoder reads received scalars, channels, precoders and combination
//! coefficients from the transcript. Ground truth from the pool is used
//! only to check each recovered value.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::DecodeError;
use crate::linalg::{self, Solve};
use crate::protocol::{PhaseLabel, SlotRecord, Transcript};
use crate::rational::Rational;
use crate::symbols::{HigherOrderGroup, SymbolClass, SymbolId};

pub const DEFAULT_TOLERANCE: f64 = 1e-6;

/// Coefficients below this magnitude count as a degenerate draw.
pub const MIN_COEFFICIENT: f64 = 1e-12;

/// What one receiver has recovered so far.
#[derive(Clone, Debug)]
pub struct ReceiverState {
    pub rx: usize,
    pub known: BTreeMap<SymbolId, Complex64>,
    pub max_residual: f64,
    pub recovered: BTreeMap<SymbolClass, usize>,
    tolerance: f64,
}

impl ReceiverState {
    pub fn new(rx: usize, tolerance: f64) -> Self {
        ReceiverState {
            rx,
            known: BTreeMap::new(),
            max_residual: 0.0,
            recovered: BTreeMap::new(),
            tolerance,
        }
    }

    pub fn get(&self, id: &SymbolId) -> Result<Complex64, DecodeError> {
        self.known
            .get(id)
            .copied()
            .ok_or_else(|| DecodeError::Missing(id.to_string()))
    }

    /// Admits `value` for `id` if it matches `truth` within tolerance.
    fn accept(
        &mut self,
        id: SymbolId,
        value: Complex64,
        truth: Complex64,
    ) -> Result<(), DecodeError> {
        let residual = (value - truth).norm() / (1.0 + truth.norm());
        // NaN counts as a failure
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !(residual < self.tolerance) {
            self.max_residual = self.max_residual.max(if residual.is_nan() {
                f64::INFINITY
            } else {
                residual
            });
            return Err(DecodeError::Tolerance {
                symbol: id.to_string(),
                residual,
            });
        }
        self.max_residual = self.max_residual.max(residual);
        if self.known.insert(id, value).is_none() {
            *self.recovered.entry(id.class()).or_insert(0) += 1;
        }
        Ok(())
    }
}

/// Result of decoding a whole transcript at every receiver.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecodeReport {
    pub success: bool,
    /// A numerically singular system was hit.
    pub degenerate: bool,
    pub max_relative_residual: f64,
    pub tolerance: f64,
    /// Recovered symbols by class, summed over receivers.
    pub recovered: BTreeMap<String, usize>,
    pub private_symbols: usize,
    pub private_recovered: usize,
    pub slots: usize,
    pub measured_dof: Rational,
    pub expected_dof: Rational,
    pub violations: Vec<String>,
}

pub struct Decoder<'a> {
    tr: &'a Transcript,
    delivery: BTreeMap<usize, Vec<usize>>,
    aligned: BTreeMap<usize, Vec<usize>>,
    phase1: Vec<usize>,
    groups: BTreeMap<usize, Vec<&'a HigherOrderGroup>>,
    tolerance: f64,
}

impl<'a> Decoder<'a> {
    pub fn new(tr: &'a Transcript, tolerance: f64) -> Self {
        let mut delivery: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        let mut aligned: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        let mut phase1 = Vec::new();
        for (i, s) in tr.slots.iter().enumerate() {
            match s.phase {
                PhaseLabel::Private => phase1.push(i),
                PhaseLabel::Delivery(m) => delivery.entry(m).or_default().push(i),
                PhaseLabel::Aligned(m) => aligned.entry(m).or_default().push(i),
            }
        }
        let mut groups: BTreeMap<usize, Vec<&HigherOrderGroup>> = BTreeMap::new();
        for g in &tr.groups {
            groups.entry(g.order).or_default().push(g);
        }
        Decoder {
            tr,
            delivery,
            aligned,
            phase1,
            groups,
            tolerance,
        }
    }

    fn truth(&self, id: &SymbolId) -> Result<Complex64, DecodeError> {
        self.tr
            .pool
            .value(id)
            .ok_or_else(|| DecodeError::Transcript(format!("{id} missing from the pool")))
    }

    fn accept(
        &self,
        state: &mut ReceiverState,
        id: SymbolId,
        value: Complex64,
    ) -> Result<(), DecodeError> {
        let truth = self.truth(&id)?;
        state.accept(id, value, truth)
    }

    fn y(&self, slot: &SlotRecord, rx: usize) -> Result<Complex64, DecodeError> {
        slot.y(rx).ok_or_else(|| {
            DecodeError::Transcript(format!("Rx{rx} recorded nothing in slot {}", slot.slot))
        })
    }

    fn row(
        &self,
        rx: usize,
        tx: usize,
        t: usize,
        w: &DMatrix<Complex64>,
    ) -> Result<Vec<Complex64>, DecodeError> {
        self.tr
            .channels
            .effective_row(rx, tx, t, w)
            .map_err(|e| DecodeError::Transcript(e.to_string()))
    }

    fn solve(
        &self,
        stage: &str,
        a: DMatrix<Complex64>,
        b: Vec<Complex64>,
    ) -> Result<DVector<Complex64>, DecodeError> {
        if a.nrows() != a.ncols() || a.nrows() != b.len() {
            return Err(DecodeError::Transcript(format!(
                "{stage}: {}x{} system with {} values",
                a.nrows(),
                a.ncols(),
                b.len()
            )));
        }
        let tiny_row = a
            .row_iter()
            .any(|r| r.iter().all(|z| z.norm() < MIN_COEFFICIENT));
        if tiny_row {
            return Err(DecodeError::Degenerate {
                stage: stage.to_string(),
                smallest: 0.0,
            });
        }
        match linalg::checked_solve(&a, &DVector::from_vec(b)) {
            Solve::Ok(x) => Ok(x),
            Solve::Singular(smallest) => Err(DecodeError::Degenerate {
                stage: stage.to_string(),
                smallest,
            }),
        }
    }

    /// Order-K symbols: each sits alone in its slot.
    pub fn decode_order_k_phase(&self, state: &mut ReceiverState) -> Result<(), DecodeError> {
        self.decode_delivery(state, self.tr.k)
    }

    /// Payloads of every phase m-I slot that `state.rx` was served in,
    /// using its own scalar and the side information of the outsiders.
    fn decode_delivery(&self, state: &mut ReceiverState, m: usize) -> Result<(), DecodeError> {
        let rx = state.rx;
        for &i in self.delivery.get(&m).into_iter().flatten() {
            let s = &self.tr.slots[i];
            if !s.set.contains(rx) {
                continue;
            }
            let a = &s.active[0];
            let w = &a.precoder.matrix;
            let mut rows = vec![self.row(rx, a.tx, s.slot, w)?];
            let mut rhs = vec![self.y(s, rx)?];
            for id in &s.overheard {
                let j = id
                    .known
                    .iter()
                    .next()
                    .expect("overheard symbol has a listener");
                rows.push(self.row(j, a.tx, s.slot, w)?);
                rhs.push(state.get(id)?);
            }
            let d = rows.len();
            let mat = DMatrix::from_fn(d, d, |r, c| rows[r][c]);
            let x = self.solve(&format!("phase {m}-I slot {}", s.slot), mat, rhs)?;
            for (id, v) in a.payload.iter().zip(x.iter()) {
                self.accept(state, *id, *v)?;
            }
        }
        Ok(())
    }

    /// Recovers every order-m symbol meant for `state.rx` from the
    /// order-(m+1) and order-(1,m) symbols it already holds.
    pub fn peel_order_m(&self, state: &mut ReceiverState, m: usize) -> Result<(), DecodeError> {
        let rx = state.rx;
        let groups: Vec<&HigherOrderGroup> = self
            .groups
            .get(&m)
            .into_iter()
            .flatten()
            .copied()
            .filter(|g| g.set.contains(rx))
            .collect();

        // Other transmitters' groups: the overheard constituent replaces the
        // order-(1,m) row.
        for g in groups.iter().filter(|g| g.origin != rx) {
            let p = g
                .listeners
                .iter()
                .position(|&j| j == rx)
                .expect("rx is a listener");
            let heard = g.constituents[p];
            let direct = self.y(&self.tr.slots[heard.slot as usize], rx)?;
            self.accept(state, heard, direct)?;
            let mut rhs = Vec::with_capacity(m);
            for id in &g.higher {
                rhs.push(state.get(id)?);
            }
            rhs.push(direct);
            let x = self.solve(
                &format!("group Tx{} {} round {}", g.origin, g.set, g.round),
                g.lc.listener_system(p),
                rhs,
            )?;
            for (q, id) in g.constituents.iter().enumerate() {
                if q != p {
                    self.accept(state, *id, x[q])?;
                }
            }
            let aligned: Complex64 = (0..m).map(|q| g.lc.coeffs[(m - 1, q)] * x[q]).sum();
            self.accept(state, g.aligned, aligned)?;
        }

        // Order-(1,m) slots: strip the other transmitters' aligned symbols.
        for &i in self.aligned.get(&m).into_iter().flatten() {
            let s = &self.tr.slots[i];
            if !s.set.contains(rx) {
                continue;
            }
            let mut y = self.y(s, rx)?;
            let mut own = None;
            for a in &s.active {
                let coef = self.row(rx, a.tx, s.slot, &a.precoder.matrix)?[0];
                if a.tx == rx {
                    own = Some((a.payload[0], coef));
                } else {
                    y -= coef * state.get(&a.payload[0])?;
                }
            }
            let (id, coef) = own.ok_or_else(|| {
                DecodeError::Transcript(format!("Rx{rx} silent in slot {}", s.slot))
            })?;
            if coef.norm() < MIN_COEFFICIENT {
                return Err(DecodeError::Degenerate {
                    stage: format!("phase {} slot {}", s.phase, s.slot),
                    smallest: coef.norm(),
                });
            }
            self.accept(state, id, y / coef)?;
        }

        // Own groups: full combination matrix.
        for g in groups.iter().filter(|g| g.origin == rx) {
            let mut rhs = Vec::with_capacity(m);
            for id in &g.higher {
                rhs.push(state.get(id)?);
            }
            rhs.push(state.get(&g.aligned)?);
            let x = self.solve(
                &format!("own group {} round {}", g.set, g.round),
                g.lc.coeffs.clone(),
                rhs,
            )?;
            for (id, v) in g.constituents.iter().zip(x.iter()) {
                self.accept(state, *id, *v)?;
            }
        }

        self.decode_delivery(state, m)
    }

    /// Phase 1: cancel the order-2 interference and stack the side
    /// information of the other active receivers.
    pub fn solve_phase1(&self, state: &mut ReceiverState) -> Result<(), DecodeError> {
        let rx = state.rx;
        for &i in &self.phase1 {
            let s = &self.tr.slots[i];
            if !s.set.contains(rx) {
                continue;
            }
            let own = s.transmission(rx).ok_or_else(|| {
                DecodeError::Transcript(format!("Tx{rx} silent in slot {}", s.slot))
            })?;
            let w = &own.precoder.matrix;
            let mut y = self.y(s, rx)?;
            let mut rows = vec![self.row(rx, rx, s.slot, w)?];
            let mut side = Vec::new();
            for id in &s.overheard {
                if id.origin != rx && id.desired.contains(rx) {
                    y -= state.get(id)?;
                } else if id.origin == rx {
                    let j = id.desired.without(rx).iter().next().expect("order-2 pair");
                    rows.push(self.row(j, rx, s.slot, w)?);
                    side.push(state.get(id)?);
                }
            }
            let mut rhs = vec![y];
            rhs.extend(side);
            let d = rows.len();
            let mat = DMatrix::from_fn(d, d, |r, c| rows[r][c]);
            let x = self.solve(&format!("phase 1 slot {}", s.slot), mat, rhs)?;
            for (id, v) in own.payload.iter().zip(x.iter()) {
                self.accept(state, *id, *v)?;
            }
        }
        Ok(())
    }

    /// Full backward pass for one receiver. On failure the partial state
    /// is returned alongside the error.
    pub fn decode_receiver(&self, rx: usize) -> (ReceiverState, Option<DecodeError>) {
        let mut state = ReceiverState::new(rx, self.tolerance);
        let run = |state: &mut ReceiverState| -> Result<(), DecodeError> {
            self.decode_order_k_phase(state)?;
            for m in (2..self.tr.k).rev() {
                self.peel_order_m(state, m)?;
            }
            self.solve_phase1(state)?;
            let own: Vec<&SymbolId> = self
                .tr
                .pool
                .private_ids()
                .iter()
                .filter(|id| id.origin == rx)
                .collect();
            if let Some(id) = own.iter().find(|id| !state.known.contains_key(id)) {
                return Err(DecodeError::Missing(id.to_string()));
            }
            Ok(())
        };
        let err = run(&mut state).err();
        (state, err)
    }
}

/// Decodes every receiver and checks the symbol-per-slot count.
pub fn backward_decode(tr: &Transcript, tolerance: f64) -> DecodeReport {
    let decoder = Decoder::new(tr, tolerance);
    let mut recovered: BTreeMap<String, usize> = BTreeMap::new();
    let mut violations = Vec::new();
    let mut degenerate = false;
    let mut max_residual: f64 = 0.0;
    let mut private_recovered = 0;
    for rx in 0..tr.k {
        let (state, err) = decoder.decode_receiver(rx);
        max_residual = max_residual.max(state.max_residual);
        for (class, n) in &state.recovered {
            *recovered.entry(class.to_string()).or_insert(0) += n;
        }
        private_recovered += state
            .known
            .keys()
            .filter(|id| id.class() == SymbolClass::Private && id.origin == rx)
            .count();
        if let Some(e) = err {
            degenerate |= matches!(e, DecodeError::Degenerate { .. });
            violations.push(format!("Rx{rx}: {e}"));
        }
    }
    let private_symbols = tr.private_symbols();
    let slots = tr.slots.len();
    let measured_dof = Rational::new(private_symbols, slots.max(1)).expect("nonzero denominator");
    let expected_dof = tr.plan.ratio();
    if measured_dof != expected_dof {
        violations.push(format!(
            "measured DoF {measured_dof} differs from plan {expected_dof}"
        ));
    }
    if private_recovered != private_symbols {
        violations.push(format!(
            "{private_recovered} of {private_symbols} private symbols recovered"
        ));
    }
    DecodeReport {
        success: violations.is_empty(),
        degenerate,
        max_relative_residual: max_residual,
        tolerance,
        recovered,
        private_symbols,
        private_recovered,
        slots,
        measured_dof,
        expected_dof,
        violations,
    }
}

/// Smallest normalized singular value of every phase m-I solve matrix at
/// each in-set receiver.
pub fn delivery_conditioning(tr: &Transcript) -> f64 {
    let mut worst = f64::INFINITY;
    for s in tr
        .slots
        .iter()
        .filter(|s| matches!(s.phase, PhaseLabel::Delivery(_)))
    {
        let a = &s.active[0];
        let w = &a.precoder.matrix;
        let outsiders: Vec<usize> = s
            .overheard
            .iter()
            .map(|id| id.known.iter().next().expect("listener"))
            .collect();
        for rx in s.set.iter() {
            let rows: Vec<Vec<Complex64>> = std::iter::once(rx)
                .chain(outsiders.iter().copied())
                .map(|j| {
                    tr.channels
                        .effective_row(j, a.tx, s.slot, w)
                        .expect("slot generated")
                })
                .collect();
            let d = rows.len();
            worst = worst.min(linalg::min_singular_rows(&DMatrix::from_fn(
                d,
                d,
                |r, c| rows[r][c],
            )));
        }
    }
    worst
}

/// Smallest normalized singular value of every phase-1 stacked matrix.
pub fn phase1_conditioning(tr: &Transcript) -> f64 {
    let mut worst = f64::INFINITY;
    for s in tr.slots.iter().filter(|s| s.phase == PhaseLabel::Private) {
        for a in &s.active {
            let others: Vec<usize> = s.set.without(a.tx).iter().collect();
            let rows: Vec<Vec<Complex64>> = std::iter::once(a.tx)
                .chain(others)
                .map(|j| {
                    tr.channels
                        .effective_row(j, a.tx, s.slot, &a.precoder.matrix)
                        .expect("slot generated")
                })
                .collect();
            let d = rows.len();
            worst = worst.min(linalg::min_singular_rows(&DMatrix::from_fn(
                d,
                d,
                |r, c| rows[r][c],
            )));
        }
    }
    worst
}
