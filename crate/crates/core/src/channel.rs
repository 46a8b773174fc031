//! Rayleigh block-fading channels, the delayed local CSIT rule, and
//! generic precoders.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::ChannelError;
use crate::linalg::{self, RANK_THRESHOLD};

/// Re-draws allowed before a precoder is declared degenerate.
pub const MAX_PRECODER_DRAWS: usize = 8;

/// `h[rx][tx][t]`, one length-`antennas` vector per link and slot.
///
/// Slot `t` is drawn from its own ChaCha stream, so the tensor depends only
/// on the seed and never on how many other random draws happened.
#[derive(Clone, Debug)]
pub struct ChannelTensor {
    k: usize,
    antennas: usize,
    seed: u64,
    slots: Vec<Vec<Complex64>>,
}

impl ChannelTensor {
    pub fn new(k: usize, antennas: usize, seed: u64) -> Self {
        ChannelTensor {
            k,
            antennas,
            seed,
            slots: Vec::new(),
        }
    }

    pub fn users(&self) -> usize {
        self.k
    }

    pub fn antennas(&self) -> usize {
        self.antennas
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Number of generated slots.
    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    /// Draws all `K²` vectors of slot `t`; slots must come in order.
    pub fn generate_slot(&mut self, t: usize) -> Result<(), ChannelError> {
        let next = self.slots.len();
        if t != next {
            return Err(if t < next {
                ChannelError::SlotRegenerated { slot: t, next }
            } else {
                ChannelError::SlotMissing { slot: next }
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(t as u64);
        let n = self.k * self.k * self.antennas;
        self.slots
            .push((0..n).map(|_| linalg::complex_gaussian(&mut rng)).collect());
        Ok(())
    }

    /// Unrestricted read, as available to receivers and the simulator.
    pub fn link(&self, rx: usize, tx: usize, t: usize) -> Result<&[Complex64], ChannelError> {
        if rx >= self.k || tx >= self.k {
            return Err(ChannelError::Index(format!(
                "link ({rx}, {tx}) with K = {}",
                self.k
            )));
        }
        let slot = self
            .slots
            .get(t)
            .ok_or(ChannelError::SlotMissing { slot: t })?;
        let base = (rx * self.k + tx) * self.antennas;
        Ok(&slot[base..base + self.antennas])
    }

    /// `h[rx][tx][t]ᴴ W`.
    pub fn effective_row(
        &self,
        rx: usize,
        tx: usize,
        t: usize,
        w: &DMatrix<Complex64>,
    ) -> Result<Vec<Complex64>, ChannelError> {
        let h = self.link(rx, tx, t)?;
        if w.nrows() != h.len() {
            return Err(ChannelError::Index(format!(
                "precoder has {} rows, channel has {} antennas",
                w.nrows(),
                h.len()
            )));
        }
        Ok(linalg::effective_row(h, w))
    }
}

/// One transmitter-side channel lookup.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CsitAccess {
    pub tx: usize,
    pub rx: usize,
    pub queried_tx: usize,
    pub slot: usize,
    /// Clock of the requesting transmitter.
    pub at: usize,
    pub granted: bool,
}

impl CsitAccess {
    /// Local and strictly in the past.
    pub fn is_legal(&self) -> bool {
        self.queried_tx == self.tx && self.slot < self.at
    }
}

/// Tx `tx`'s window on the channel at clock `current_slot`: only its own
/// outgoing links, only for slots already finished.
pub struct CsitView<'a> {
    tensor: &'a ChannelTensor,
    tx: usize,
    current_slot: usize,
    log: &'a mut Vec<CsitAccess>,
}

impl<'a> CsitView<'a> {
    pub fn new(
        tensor: &'a ChannelTensor,
        tx: usize,
        current_slot: usize,
        log: &'a mut Vec<CsitAccess>,
    ) -> Self {
        CsitView {
            tensor,
            tx,
            current_slot,
            log,
        }
    }

    pub fn tx(&self) -> usize {
        self.tx
    }

    pub fn current_slot(&self) -> usize {
        self.current_slot
    }

    /// `h[rx][tx][slot]` for this view's own transmitter.
    pub fn query(&mut self, rx: usize, slot: usize) -> Result<&'a [Complex64], ChannelError> {
        self.query_link(rx, self.tx, slot)
    }

    /// General lookup; anything but an own-link, past-slot request is refused.
    pub fn query_link(
        &mut self,
        rx: usize,
        queried_tx: usize,
        slot: usize,
    ) -> Result<&'a [Complex64], ChannelError> {
        let mut access = CsitAccess {
            tx: self.tx,
            rx,
            queried_tx,
            slot,
            at: self.current_slot,
            granted: false,
        };
        let result = if queried_tx != self.tx {
            Err(ChannelError::LocalCsit {
                tx: self.tx,
                queried: queried_tx,
            })
        } else if slot >= self.current_slot {
            Err(ChannelError::DelayedCsit {
                tx: self.tx,
                slot,
                current: self.current_slot,
            })
        } else {
            self.tensor.link(rx, queried_tx, slot)
        };
        access.granted = result.is_ok();
        self.log.push(access);
        result
    }
}

/// Summary of an access log.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CsitAudit {
    pub queries: usize,
    pub granted: usize,
    /// Requests that broke the rule, whether refused or not.
    pub violations: usize,
}

pub fn audit_log(log: &[CsitAccess]) -> CsitAudit {
    CsitAudit {
        queries: log.len(),
        granted: log.iter().filter(|a| a.granted).count(),
        violations: log.iter().filter(|a| !a.is_legal() || !a.granted).count(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Precoder {
    #[serde(with = "crate::linalg::serde_matrix")]
    pub matrix: DMatrix<Complex64>,
    pub owner: usize,
    pub slot: usize,
}

impl Precoder {
    pub fn streams(&self) -> usize {
        self.matrix.ncols()
    }
}

/// An `antennas × streams` complex Gaussian matrix of full column rank.
pub fn make_precoder<R: Rng + ?Sized>(
    antennas: usize,
    streams: usize,
    owner: usize,
    slot: usize,
    rng: &mut R,
) -> Result<Precoder, ChannelError> {
    if streams == 0 || streams > antennas {
        return Err(ChannelError::TooManyStreams { streams, antennas });
    }
    (0..MAX_PRECODER_DRAWS)
        .map(|_| linalg::gaussian_matrix(rng, antennas, streams))
        .find(|w| linalg::min_singular_cols(w) > RANK_THRESHOLD)
        .map(|matrix| Precoder {
            matrix,
            owner,
            slot,
        })
        .ok_or(ChannelError::RankDeficient {
            rows: antennas,
            cols: streams,
        })
}

/// A random unit-norm single-stream beam.
pub fn make_beam<R: Rng + ?Sized>(
    antennas: usize,
    owner: usize,
    rng: &mut R,
) -> Result<Precoder, ChannelError> {
    let mut p = make_precoder(antennas, 1, owner, 0, rng)?;
    let norm = p.matrix.norm();
    p.matrix /= Complex64::from(norm);
    Ok(p)
}
