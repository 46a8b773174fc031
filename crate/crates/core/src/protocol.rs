//! Slot-by-slot execution of the multi-phase scheme.
//!
//! Phases run as 1, 2-I, then for each `m = 3..=K`: m-I followed by the
//! slots carrying the order-(1,m-1) symbols (labelled m-II). Higher-order
//! symbols are generated right after each phase m-I. Every symbol a
//! transmitter derives from a past slot goes through a [`CsitView`].

use std::collections::{BTreeMap, VecDeque};
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::channel::{self, ChannelTensor, CsitAccess, CsitAudit, CsitView, Precoder};
use crate::dof::{self, CountTable, ReplicationPlan};
use crate::error::ProtocolError;
use crate::linalg;
use crate::symbols::{subsets, HigherOrderGroup, SymbolClass, SymbolId, SymbolPool, UserSet};

/// Upper bound on slots in a single simulated trial.
pub const MAX_TRIAL_SLOTS: u64 = 200_000;

const ENGINE_STREAM: u64 = u64::MAX;
const NOISE_STREAM: u64 = u64::MAX - 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PhaseLabel {
    /// Phase 1, private symbols.
    Private,
    /// Phase m-I, one transmitter multicasting order-m symbols.
    Delivery(usize),
    /// Order-(1,m) symbols sent simultaneously, labelled (m+1)-II.
    Aligned(usize),
}

impl fmt::Display for PhaseLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PhaseLabel::Private => write!(f, "1"),
            PhaseLabel::Delivery(m) => write!(f, "{m}-I"),
            PhaseLabel::Aligned(m) => write!(f, "{}-II", m + 1),
        }
    }
}

impl FromStr for PhaseLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || format!("bad phase label {s:?}");
        if s == "1" {
            return Ok(PhaseLabel::Private);
        }
        let (num, kind) = s.split_once('-').ok_or_else(bad)?;
        let m: usize = num.parse().map_err(|_| bad())?;
        match kind {
            "I" if m >= 2 => Ok(PhaseLabel::Delivery(m)),
            "II" if m >= 3 => Ok(PhaseLabel::Aligned(m - 1)),
            _ => Err(bad()),
        }
    }
}

impl Serialize for PhaseLabel {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for PhaseLabel {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?
            .parse()
            .map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Transmission {
    pub tx: usize,
    pub precoder: Precoder,
    pub payload: Vec<SymbolId>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Reception {
    pub rx: usize,
    pub y: Complex64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlotRecord {
    pub slot: usize,
    pub phase: PhaseLabel,
    pub round: u32,
    /// Scheduled users: `S_n`, `S_m` or `S_{m+1}` depending on the phase.
    pub set: UserSet,
    pub active: Vec<Transmission>,
    pub received: Vec<Reception>,
    /// Symbols the transmitters derived from this slot one slot later.
    pub overheard: Vec<SymbolId>,
}

impl SlotRecord {
    pub fn y(&self, rx: usize) -> Option<Complex64> {
        self.received.iter().find(|r| r.rx == rx).map(|r| r.y)
    }

    pub fn transmission(&self, tx: usize) -> Option<&Transmission> {
        self.active.iter().find(|a| a.tx == tx)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseSpan {
    pub phase: PhaseLabel,
    pub start: usize,
    pub end: usize,
}

impl PhaseSpan {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationCounts {
    pub higher: usize,
    pub aligned: usize,
}

/// Parameters of one simulated trial.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialConfig {
    pub k: usize,
    pub n: usize,
    pub antennas: usize,
    pub seed: u64,
    /// Standard deviation of additive receiver noise; zero disables it.
    pub noise_std: f64,
}

impl TrialConfig {
    pub fn new(k: usize, n: usize, antennas: usize, seed: u64) -> Result<Self, ProtocolError> {
        let cfg = TrialConfig {
            k,
            n,
            antennas,
            seed,
            noise_std: 0.0,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ProtocolError> {
        let (k, n, m) = (self.k, self.n, self.antennas);
        if !(2..=UserSet::MAX_USERS).contains(&k) {
            return Err(ProtocolError::Config(format!(
                "K = {k} must be in 2..={}",
                UserSet::MAX_USERS
            )));
        }
        if m + 1 != k && m != k {
            return Err(ProtocolError::Config(format!(
                "antennas = {m} must be K-1 or K (K = {k})"
            )));
        }
        if n < 2 || n > k {
            return Err(ProtocolError::Config(format!(
                "n = {n} must be in 2..=K (K = {k})"
            )));
        }
        if n > m {
            return Err(ProtocolError::Config(format!(
                "n = {n} streams need at least {n} antennas, have {m}"
            )));
        }
        if !(self.noise_std >= 0.0 && self.noise_std.is_finite()) {
            return Err(ProtocolError::Config(format!(
                "noise_std = {} must be finite and >= 0",
                self.noise_std
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Step {
    Phase1,
    Delivery(usize),
    Generate(usize),
    Aligned(usize),
    Done,
}

impl fmt::Display for Step {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Step::Phase1 => write!(f, "1"),
            Step::Delivery(m) => write!(f, "{m}-I"),
            Step::Generate(m) => write!(f, "generation after {m}-I"),
            Step::Aligned(m) => write!(f, "{}-II", m + 1),
            Step::Done => write!(f, "done"),
        }
    }
}

/// Everything a trial produced: slots, generation groups, the ground-truth
/// pool and the channel.
#[derive(Clone, Debug, Serialize)]
pub struct Transcript {
    pub k: usize,
    pub n: usize,
    pub antennas: usize,
    pub seed: u64,
    pub noise_std: f64,
    pub plan: ReplicationPlan,
    pub spans: Vec<PhaseSpan>,
    pub slots: Vec<SlotRecord>,
    pub groups: Vec<HigherOrderGroup>,
    pub csit: CsitAudit,
    /// Symbols left in transmit queues at the end; zero for a balanced plan.
    pub undelivered: usize,
    #[serde(skip)]
    pub csit_log: Vec<CsitAccess>,
    #[serde(skip)]
    pub pool: SymbolPool,
    #[serde(skip)]
    pub channels: ChannelTensor,
}

pub struct Engine {
    cfg: TrialConfig,
    plan: ReplicationPlan,
    channels: ChannelTensor,
    pool: SymbolPool,
    rng: ChaCha8Rng,
    noise_rng: ChaCha8Rng,
    beams: Vec<Precoder>,
    clock: usize,
    csit_log: Vec<CsitAccess>,
    queues: BTreeMap<(usize, UserSet), VecDeque<SymbolId>>,
    /// Overheard symbols waiting for generation, keyed by
    /// `(origin, S_{m+1}, round, listener)`.
    constituents: BTreeMap<(usize, UserSet, u32, usize), SymbolId>,
    /// Order-(1,m) symbols waiting for their slot, keyed by `(S_{m+1}, round)`.
    aligned: BTreeMap<(UserSet, u32), Vec<(usize, SymbolId)>>,
    slots: Vec<SlotRecord>,
    spans: Vec<PhaseSpan>,
    groups: Vec<HigherOrderGroup>,
    next: Step,
}

impl Engine {
    pub fn new(cfg: TrialConfig) -> Result<Self, ProtocolError> {
        cfg.validate()?;
        let plan = dof::replication_plan(cfg.k, cfg.n)?;
        if plan.total_slots > MAX_TRIAL_SLOTS {
            return Err(ProtocolError::Config(format!(
                "plan for K = {}, n = {} needs {} slots (limit {MAX_TRIAL_SLOTS})",
                cfg.k, cfg.n, plan.total_slots
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(ENGINE_STREAM);
        let mut noise_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        noise_rng.set_stream(NOISE_STREAM);
        let beams = (0..cfg.k)
            .map(|tx| channel::make_beam(cfg.antennas, tx, &mut rng))
            .collect::<Result<_, _>>()?;
        Ok(Engine {
            channels: ChannelTensor::new(cfg.k, cfg.antennas, cfg.seed),
            cfg,
            plan,
            pool: SymbolPool::new(),
            rng,
            noise_rng,
            beams,
            clock: 0,
            csit_log: Vec::new(),
            queues: BTreeMap::new(),
            constituents: BTreeMap::new(),
            aligned: BTreeMap::new(),
            slots: Vec::new(),
            spans: Vec::new(),
            groups: Vec::new(),
            next: Step::Phase1,
        })
    }

    pub fn plan(&self) -> &ReplicationPlan {
        &self.plan
    }

    pub fn pool(&self) -> &SymbolPool {
        &self.pool
    }

    pub fn slots(&self) -> &[SlotRecord] {
        &self.slots
    }

    fn expect(&self, step: Step) -> Result<(), ProtocolError> {
        if self.next == step {
            Ok(())
        } else {
            Err(ProtocolError::OutOfOrder(format!(
                "{step} requested while {} is due",
                self.next
            )))
        }
    }

    fn advance(&mut self) {
        let k = self.cfg.k;
        self.next = match self.next {
            Step::Phase1 => Step::Delivery(2),
            Step::Delivery(m) if m >= 3 => Step::Aligned(m - 1),
            Step::Delivery(_) if k > 2 => Step::Generate(2),
            Step::Delivery(_) => Step::Done,
            Step::Aligned(m) if m + 1 < k => Step::Generate(m + 1),
            Step::Aligned(_) => Step::Done,
            Step::Generate(m) => Step::Delivery(m + 1),
            Step::Done => Step::Done,
        };
    }

    fn begin_slot(&mut self) -> Result<usize, ProtocolError> {
        let t = self.clock;
        self.channels.generate_slot(t)?;
        Ok(t)
    }

    fn end_slot(&mut self) {
        self.clock += 1;
    }

    fn close_span(&mut self, phase: PhaseLabel, start: usize) {
        self.spans.push(PhaseSpan {
            phase,
            start,
            end: self.clock,
        });
    }

    /// `y_rx(t) = Σ h_{rx,tx}(t)ᴴ W_tx u_tx` plus optional noise.
    fn receive(
        &mut self,
        rx: usize,
        t: usize,
        active: &[Transmission],
    ) -> Result<Complex64, ProtocolError> {
        let mut y = Complex64::new(0.0, 0.0);
        for a in active {
            let row = self
                .channels
                .effective_row(rx, a.tx, t, &a.precoder.matrix)?;
            for (c, id) in row.iter().zip(&a.payload) {
                y += c * self.pool.value(id).expect("payload registered");
            }
        }
        if self.cfg.noise_std > 0.0 {
            y += linalg::complex_gaussian(&mut self.noise_rng) * self.cfg.noise_std;
        }
        Ok(y)
    }

    /// Tx `a.tx` learns `h_{rx,tx}(t)` at the current clock and registers
    /// `h_{rx,tx}(t)ᴴ W u` as `id`.
    fn derive(
        &mut self,
        a: &Transmission,
        rx: usize,
        t: usize,
        id: SymbolId,
    ) -> Result<(), ProtocolError> {
        let h = CsitView::new(&self.channels, a.tx, self.clock, &mut self.csit_log).query(rx, t)?;
        self.pool
            .derive_overheard(id, &a.payload, h, &a.precoder.matrix)?;
        Ok(())
    }

    /// Phase 1: every `n`-subset in turn, each active Tx sending `n` fresh
    /// symbols; the cross terms become order-2 symbols.
    pub fn run_phase1(&mut self) -> Result<(), ProtocolError> {
        self.expect(Step::Phase1)?;
        let (k, n) = (self.cfg.k, self.cfg.n);
        let start = self.clock;
        for round in 0..self.plan.phase1_rounds as u32 {
            for set in subsets(k, n) {
                let t = self.begin_slot()?;
                let mut active = Vec::with_capacity(n);
                for tx in set.iter() {
                    let precoder =
                        channel::make_precoder(self.cfg.antennas, n, tx, t, &mut self.rng)?;
                    let payload =
                        self.pool
                            .register_private(tx, n, round, t as u32, &mut self.rng)?;
                    active.push(Transmission {
                        tx,
                        precoder,
                        payload,
                    });
                }
                let mut received = Vec::with_capacity(n);
                for rx in set.iter() {
                    received.push(Reception {
                        rx,
                        y: self.receive(rx, t, &active)?,
                    });
                }
                self.end_slot();
                let mut overheard = Vec::with_capacity(n * (n - 1));
                for a in &active {
                    for rx in set.without(a.tx).iter() {
                        let id = SymbolId {
                            origin: a.tx,
                            desired: UserSet::single(a.tx).with(rx),
                            known: UserSet::empty(),
                            round,
                            slot: t as u32,
                            component: 0,
                        };
                        self.derive(a, rx, t, id)?;
                        self.queues
                            .entry((a.tx, id.desired))
                            .or_default()
                            .push_back(id);
                        overheard.push(id);
                    }
                }
                self.slots.push(SlotRecord {
                    slot: t,
                    phase: PhaseLabel::Private,
                    round,
                    set,
                    active,
                    received,
                    overheard,
                });
            }
        }
        self.close_span(PhaseLabel::Private, start);
        self.advance();
        Ok(())
    }

    /// Phase m-I: for each `S_m` and each `k ∈ S_m`, Tx `k` alone sends
    /// `K-m+1` order-m symbols; every receiver outside `S_m` overhears one
    /// scalar.
    pub fn run_phase_m_i(&mut self, m: usize) -> Result<(), ProtocolError> {
        self.expect(Step::Delivery(m))?;
        let k = self.cfg.k;
        let width = k - m + 1;
        let rounds = self.plan.rounds(m).expect("plan covers every order") as u32;
        let start = self.clock;
        for round in 0..rounds {
            for set in subsets(k, m) {
                for tx in set.iter() {
                    let queue = self.queues.entry((tx, set)).or_default();
                    if queue.len() < width {
                        return Err(ProtocolError::MissingPayload {
                            origin: tx,
                            set: set.to_string(),
                            need: width,
                            have: queue.len(),
                        });
                    }
                    let payload: Vec<SymbolId> = queue.drain(..width).collect();
                    let t = self.begin_slot()?;
                    let precoder =
                        channel::make_precoder(self.cfg.antennas, width, tx, t, &mut self.rng)?;
                    let active = vec![Transmission {
                        tx,
                        precoder,
                        payload,
                    }];
                    let mut received = Vec::with_capacity(k);
                    for rx in 0..k {
                        received.push(Reception {
                            rx,
                            y: self.receive(rx, t, &active)?,
                        });
                    }
                    self.end_slot();
                    let mut overheard = Vec::with_capacity(k - m);
                    for j in (0..k).filter(|&j| !set.contains(j)) {
                        let id = SymbolId {
                            origin: tx,
                            desired: set,
                            known: UserSet::single(j),
                            round,
                            slot: t as u32,
                            component: 0,
                        };
                        self.derive(&active[0], j, t, id)?;
                        self.constituents.insert((tx, set.with(j), round, j), id);
                        overheard.push(id);
                    }
                    self.slots.push(SlotRecord {
                        slot: t,
                        phase: PhaseLabel::Delivery(m),
                        round,
                        set,
                        active,
                        received,
                        overheard,
                    });
                }
            }
        }
        self.close_span(PhaseLabel::Delivery(m), start);
        self.advance();
        Ok(())
    }

    /// After phase m-I: per `(k, S_{m+1}, round)`, mixes the `m` overheard
    /// constituents into `m-1` order-(m+1) symbols and one order-(1,m) symbol.
    pub fn generate_between_phases(&mut self, m: usize) -> Result<GenerationCounts, ProtocolError> {
        self.expect(Step::Generate(m))?;
        let k = self.cfg.k;
        let rounds = self.plan.rounds(m).expect("plan covers every order") as u32;
        let at = self.clock as u32;
        let mut counts = GenerationCounts {
            higher: 0,
            aligned: 0,
        };
        for round in 0..rounds {
            for set in subsets(k, m + 1) {
                for tx in set.iter() {
                    let found: Vec<SymbolId> = set
                        .without(tx)
                        .iter()
                        .filter_map(|j| self.constituents.remove(&(tx, set, round, j)))
                        .collect();
                    if found.len() != m {
                        return Err(ProtocolError::MissingPayload {
                            origin: tx,
                            set: set.to_string(),
                            need: m,
                            have: found.len(),
                        });
                    }
                    let group =
                        self.pool
                            .make_higher_order(tx, set, &found, round, at, &mut self.rng)?;
                    counts.higher += group.higher.len();
                    counts.aligned += 1;
                    self.queues
                        .entry((tx, set))
                        .or_default()
                        .extend(group.higher.iter().copied());
                    self.aligned
                        .entry((set, round))
                        .or_default()
                        .push((tx, group.aligned));
                    self.groups.push(group);
                }
            }
        }
        self.advance();
        Ok(counts)
    }

    /// All `m+1` transmitters of each `S_{m+1}` send their order-(1,m)
    /// symbol at once through a fixed unit-norm beam.
    pub fn run_phase_m_ii(&mut self, m: usize) -> Result<(), ProtocolError> {
        self.expect(Step::Aligned(m))?;
        let k = self.cfg.k;
        let rounds = self.plan.rounds(m).expect("plan covers every order") as u32;
        let start = self.clock;
        for round in 0..rounds {
            for set in subsets(k, m + 1) {
                let ids = self.aligned.remove(&(set, round)).unwrap_or_default();
                if ids.len() != m + 1 {
                    return Err(ProtocolError::MissingPayload {
                        origin: ids.first().map_or(set.iter().next().unwrap_or(0), |p| p.0),
                        set: set.to_string(),
                        need: m + 1,
                        have: ids.len(),
                    });
                }
                let t = self.begin_slot()?;
                let active: Vec<Transmission> = ids
                    .into_iter()
                    .map(|(tx, id)| Transmission {
                        tx,
                        precoder: Precoder {
                            slot: t,
                            ..self.beams[tx].clone()
                        },
                        payload: vec![id],
                    })
                    .collect();
                let mut received = Vec::with_capacity(m + 1);
                for rx in set.iter() {
                    received.push(Reception {
                        rx,
                        y: self.receive(rx, t, &active)?,
                    });
                }
                self.end_slot();
                self.slots.push(SlotRecord {
                    slot: t,
                    phase: PhaseLabel::Aligned(m),
                    round,
                    set,
                    active,
                    received,
                    overheard: Vec::new(),
                });
            }
        }
        self.close_span(PhaseLabel::Aligned(m), start);
        self.advance();
        Ok(())
    }

    /// Runs whatever phases remain, in order.
    pub fn run_remaining(&mut self) -> Result<(), ProtocolError> {
        loop {
            match self.next {
                Step::Phase1 => self.run_phase1()?,
                Step::Delivery(m) => self.run_phase_m_i(m)?,
                Step::Generate(m) => {
                    self.generate_between_phases(m)?;
                }
                Step::Aligned(m) => self.run_phase_m_ii(m)?,
                Step::Done => return Ok(()),
            }
        }
    }

    pub fn finish(self) -> Result<Transcript, ProtocolError> {
        self.expect(Step::Done)?;
        let undelivered = self.queues.values().map(VecDeque::len).sum::<usize>()
            + self.constituents.len()
            + self.aligned.values().map(Vec::len).sum::<usize>();
        Ok(Transcript {
            k: self.cfg.k,
            n: self.cfg.n,
            antennas: self.cfg.antennas,
            seed: self.cfg.seed,
            noise_std: self.cfg.noise_std,
            plan: self.plan,
            spans: self.spans,
            slots: self.slots,
            groups: self.groups,
            csit: channel::audit_log(&self.csit_log),
            undelivered,
            csit_log: self.csit_log,
            pool: self.pool,
            channels: self.channels,
        })
    }
}

/// Executes a complete trial.
pub fn run_full(cfg: TrialConfig) -> Result<Transcript, ProtocolError> {
    let mut engine = Engine::new(cfg)?;
    engine.run_remaining()?;
    engine.finish()
}

/// Expected number of symbols of each class over a whole plan.
pub fn expected_census(plan: &ReplicationPlan, table: &CountTable) -> BTreeMap<SymbolClass, u64> {
    let k = plan.k;
    let mut out = BTreeMap::new();
    out.insert(SymbolClass::Private, table.n1 * plan.phase1_rounds);
    out.insert(SymbolClass::Order(2), table.n2 * plan.phase1_rounds);
    for m in 2..k {
        let c = table.order(m).expect("order in range");
        let r = plan.rounds(m).expect("order in range");
        out.insert(SymbolClass::SideInfo(m), (k - m) as u64 * c.t_m * r);
        out.insert(SymbolClass::Order(m + 1), c.higher_generated * r);
        out.insert(SymbolClass::Aligned(m), c.aligned_generated * r);
    }
    out
}

/// Structural checks of a finished transcript against its plan.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TranscriptAudit {
    pub slots: usize,
    pub planned_slots: u64,
    pub csit: CsitAudit,
    pub purity_violations: usize,
    pub closure_error: f64,
    pub undelivered: usize,
    pub mismatches: Vec<String>,
}

impl TranscriptAudit {
    pub fn is_clean(&self) -> bool {
        self.mismatches.is_empty()
    }
}

impl Transcript {
    pub fn slot(&self, t: usize) -> &SlotRecord {
        &self.slots[t]
    }

    pub fn span(&self, phase: PhaseLabel) -> Option<&PhaseSpan> {
        self.spans.iter().find(|s| s.phase == phase)
    }

    pub fn private_symbols(&self) -> usize {
        self.pool.private_ids().len()
    }

    pub fn audit(&self) -> TranscriptAudit {
        let mut bad = Vec::new();
        let plan = &self.plan;
        let (k, n) = (self.k, self.n);
        if self.slots.len() as u64 != plan.total_slots {
            bad.push(format!(
                "{} slots, plan has {}",
                self.slots.len(),
                plan.total_slots
            ));
        }

        let mut expected_spans = vec![(PhaseLabel::Private, plan.slots_phase1)];
        for m in 2..=k {
            expected_spans.push((PhaseLabel::Delivery(m), plan.delivery_slots(m).unwrap_or(0)));
            if m >= 3 {
                expected_spans.push((
                    PhaseLabel::Aligned(m - 1),
                    plan.aligned_slots(m - 1).unwrap_or(0),
                ));
            }
        }
        let got_spans: Vec<(PhaseLabel, u64)> = self
            .spans
            .iter()
            .map(|s| (s.phase, s.len() as u64))
            .collect();
        if got_spans != expected_spans {
            bad.push(format!(
                "phase spans {got_spans:?}, plan {expected_spans:?}"
            ));
        }
        let mut cursor = 0;
        for s in &self.spans {
            if s.start != cursor {
                bad.push(format!(
                    "phase {} starts at {}, expected {cursor}",
                    s.phase, s.start
                ));
            }
            cursor = s.end;
            for t in s.start..s.end.min(self.slots.len()) {
                if self.slots[t].phase != s.phase || self.slots[t].slot != t {
                    bad.push(format!("slot {t} is outside its phase span {}", s.phase));
                }
            }
        }

        match dof::counts(k, n) {
            Ok(table) => {
                let want = expected_census(plan, &table);
                let got: BTreeMap<SymbolClass, u64> = self
                    .pool
                    .census()
                    .into_iter()
                    .map(|(c, v)| (c, v as u64))
                    .collect();
                if got != want {
                    bad.push(format!("symbol census {got:?}, expected {want:?}"));
                }
            }
            Err(e) => bad.push(e.to_string()),
        }
        if self.private_symbols() as u64 != plan.total_symbols {
            bad.push(format!(
                "{} private symbols, plan has {}",
                self.private_symbols(),
                plan.total_symbols
            ));
        }

        for s in &self.slots {
            if let Some(msg) = self.shape_error(s) {
                bad.push(msg);
            }
        }
        if self.csit.violations > 0 {
            bad.push(format!("{} CSIT violations", self.csit.violations));
        }
        if self.undelivered > 0 {
            bad.push(format!("{} symbols never delivered", self.undelivered));
        }
        let purity = self.pool.purity_violations().len();
        if purity > 0 {
            bad.push(format!("{purity} symbols mix transmitters"));
        }
        if let Some(id) = self
            .pool
            .iter()
            .map(|(id, _)| id)
            .find(|id| !id.is_well_formed())
        {
            bad.push(format!("malformed symbol {id}"));
        }
        TranscriptAudit {
            slots: self.slots.len(),
            planned_slots: plan.total_slots,
            csit: self.csit.clone(),
            purity_violations: purity,
            closure_error: self.pool.closure_error(),
            undelivered: self.undelivered,
            mismatches: bad,
        }
    }

    fn shape_error(&self, s: &SlotRecord) -> Option<String> {
        let k = self.k;
        let (txs, width, set_size, listeners) = match s.phase {
            PhaseLabel::Private => (self.n, self.n, self.n, self.n),
            PhaseLabel::Delivery(m) => (1, k - m + 1, m, k),
            PhaseLabel::Aligned(m) => (m + 1, 1, m + 1, m + 1),
        };
        let ok = s.active.len() == txs
            && s.set.len() == set_size
            && s.received.len() == listeners
            && s.active.iter().all(|a| {
                s.set.contains(a.tx)
                    && a.payload.len() == width
                    && a.precoder.matrix.shape() == (self.antennas, width)
                    && a.precoder.owner == a.tx
            });
        (!ok).then(|| format!("slot {} ({}) has the wrong shape", s.slot, s.phase))
    }
}
