//! Machine-readable reports and their CSV renderings.

use std::io::Write;

use serde::Serialize;

use crate::dof::{
    self, Candidate, ComparatorRow, CountTable, DofBreakdown, ReplicationPlan, Scheme,
};
use crate::error::DofError;
use crate::protocol::PhaseLabel;
use crate::rational::{Rational, DECIMAL_DIGITS};
use crate::sim::Campaign;

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Parameters {
    pub k: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub antennas: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TheoryBlock {
    pub breakdown: DofBreakdown,
    pub limit: Rational,
    /// `limit - ds`.
    pub gap: Rational,
    /// Objective at a caller-chosen `n`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub objective: Option<Candidate>,
    pub comparators: Vec<ComparatorRow>,
}

pub fn theory(k: usize, n: Option<usize>) -> Result<TheoryBlock, DofError> {
    let breakdown = dof::sum_dof(k)?;
    let objective = match n {
        Some(n) if !(2..=k).contains(&n) => {
            return Err(DofError::Domain {
                what: "n",
                value: n,
                expected: format!("2 <= n <= K = {k}"),
            })
        }
        Some(n) => Some(Candidate {
            n,
            ds: dof::objective(n, &breakdown.big_o),
        }),
        None => None,
    };
    let limit = dof::ds_limit();
    Ok(TheoryBlock {
        gap: &limit - &breakdown.ds,
        limit,
        objective,
        comparators: dof::comparator_table(k)?,
        breakdown,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub k: usize,
    pub n_star: usize,
    pub ds: Rational,
    pub gap: Rational,
    pub mat_bc: Rational,
    pub two_phase_misoic: Rational,
    pub torrellas: Rational,
    pub abdoli_siso_k3: Option<Rational>,
    pub maleki_k3: Option<Rational>,
}

/// One row per `K = 2..=k_max`.
pub fn sweep(k_max: usize) -> Result<Vec<SweepRow>, DofError> {
    if k_max < 2 {
        return Err(DofError::Domain {
            what: "k_max",
            value: k_max,
            expected: "k_max >= 2".into(),
        });
    }
    let limit = dof::ds_limit();
    let mut harmonic = Rational::one();
    let mut rows = Vec::with_capacity(k_max - 1);
    for p in dof::fast_sweep(k_max) {
        let k = p.k;
        harmonic = harmonic + Rational::frac(1, k as i64);
        let ds = p.ds();
        let three = |s| {
            if k == 3 {
                dof::comparator(3, s).ok()
            } else {
                None
            }
        };
        rows.push(SweepRow {
            k,
            n_star: p.n_star,
            gap: &limit - &ds,
            ds,
            mat_bc: Rational::integer(k) / &harmonic,
            two_phase_misoic: dof::comparator(k, Scheme::TwoPhaseMisoic)?,
            torrellas: dof::comparator(k, Scheme::Torrellas)?,
            abdoli_siso_k3: three(Scheme::AbdoliSisoK3),
            maleki_k3: three(Scheme::MalekiK3),
        });
    }
    Ok(rows)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PhaseRow {
    pub phase: String,
    pub rounds: u64,
    pub slots: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PlanBlock {
    pub plan: ReplicationPlan,
    pub counts: CountTable,
    pub ratio: Rational,
    pub phases: Vec<PhaseRow>,
}

pub fn plan(k: usize, n: usize) -> Result<PlanBlock, DofError> {
    let plan = dof::replication_plan(k, n)?;
    let counts = dof::counts(k, n)?;
    let mut phases = vec![PhaseRow {
        phase: PhaseLabel::Private.to_string(),
        rounds: plan.phase1_rounds,
        slots: plan.slots_phase1,
    }];
    for m in 2..=k {
        phases.push(PhaseRow {
            phase: PhaseLabel::Delivery(m).to_string(),
            rounds: plan.rounds(m).unwrap_or(0),
            slots: plan.delivery_slots(m).unwrap_or(0),
        });
        if m >= 3 {
            phases.push(PhaseRow {
                phase: PhaseLabel::Aligned(m - 1).to_string(),
                rounds: plan.rounds(m - 1).unwrap_or(0),
                slots: plan.aligned_slots(m - 1).unwrap_or(0),
            });
        }
    }
    Ok(PlanBlock {
        ratio: plan.ratio(),
        plan,
        counts,
        phases,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub mode: &'static str,
    pub parameters: Parameters,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theory: Option<TheoryBlock>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<Vec<SweepRow>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub plan: Option<PlanBlock>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub simulation: Option<Campaign>,
}

impl Report {
    pub fn new(mode: &'static str, parameters: Parameters) -> Self {
        Report {
            mode,
            parameters,
            theory: None,
            sweep: None,
            plan: None,
            simulation: None,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// Tabular view of the report's main block.
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        if let Some(t) = &self.theory {
            w.write_record(["scheme", "ds", "ds_num", "ds_den"])?;
            for row in &t.comparators {
                let mut rec = vec![row.scheme.clone()];
                rec.extend(rational_cells(row.ds.as_ref()));
                w.write_record(&rec)?;
            }
        } else if let Some(rows) = &self.sweep {
            let mut header = vec!["k".to_string(), "n_star".to_string()];
            for name in [
                "ds",
                "gap",
                "mat_bc",
                "two_phase_misoic",
                "torrellas",
                "abdoli_siso_k3",
                "maleki_k3",
            ] {
                header.extend([
                    name.to_string(),
                    format!("{name}_num"),
                    format!("{name}_den"),
                ]);
            }
            w.write_record(&header)?;
            for r in rows {
                let mut rec = vec![r.k.to_string(), r.n_star.to_string()];
                for v in [
                    Some(&r.ds),
                    Some(&r.gap),
                    Some(&r.mat_bc),
                    Some(&r.two_phase_misoic),
                    Some(&r.torrellas),
                    r.abdoli_siso_k3.as_ref(),
                    r.maleki_k3.as_ref(),
                ] {
                    rec.extend(rational_cells(v));
                }
                w.write_record(&rec)?;
            }
        } else if let Some(p) = &self.plan {
            w.write_record(["phase", "rounds", "slots"])?;
            for r in &p.phases {
                w.write_record([r.phase.clone(), r.rounds.to_string(), r.slots.to_string()])?;
            }
            w.write_record([
                "total".to_string(),
                String::new(),
                p.plan.total_slots.to_string(),
            ])?;
        } else if let Some(c) = &self.simulation {
            w.write_record([
                "trial",
                "seed",
                "redraws",
                "success",
                "measured_dof",
                "measured_dof_num",
                "measured_dof_den",
                "max_relative_residual",
                "csit_violations",
            ])?;
            for o in &c.outcomes {
                let mut rec = vec![
                    o.index.to_string(),
                    o.seed.to_string(),
                    o.redraws.to_string(),
                    o.success.to_string(),
                ];
                rec.extend(rational_cells(Some(&o.decode.measured_dof)));
                rec.push(format!("{:e}", o.decode.max_relative_residual));
                rec.push(o.audit.csit.violations.to_string());
                w.write_record(&rec)?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

fn rational_cells(r: Option<&Rational>) -> [String; 3] {
    match r {
        Some(r) => [
            r.to_decimal(DECIMAL_DIGITS),
            r.numer().to_string(),
            r.denom().to_string(),
        ],
        None => Default::default(),
    }
}
