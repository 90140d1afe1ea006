//! Run traces: JSON-lines serialization of every round of a run, and a
//! verifier that replays a trace from scratch, recomputing matchings and
//! certificates and comparing them against what was recorded.
//!
//! Traces are self-contained: the first line embeds the graph and the run
//! configuration, so verification needs no other inputs.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::algorithms::{
    round_certificates, AdaptiveOutcome, CertificateReport, NonAdaptiveState,
};
use crate::graph::{EdgeSet, Matching, Weight, WeightedGraph};
use crate::ratio::Ratio;
use crate::solver::max_weight_matching;
use crate::stochastic::Realization;

#[derive(Debug, thiserror::Error)]
pub enum TraceError {
    #[error("trace I/O: {0}")]
    Io(#[from] std::io::Error),
    #[error("trace line {line}: {source}")]
    Parse {
        line: usize,
        source: serde_json::Error,
    },
    #[error("trace line {line}: {msg}")]
    Malformed { line: usize, msg: String },
    #[error("trace does not start with a header record")]
    MissingHeader,
    #[error("graph embedded in trace is invalid: {0}")]
    BadGraph(#[from] crate::graph::GraphError),
}

/// One line of a trace file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TraceRecord {
    Header {
        version: u32,
        n: usize,
        edges: Vec<(usize, usize, Weight, f64)>,
        eps_num: i64,
        eps_den: i64,
        rounds: u64,
        trials: u64,
        seed: u64,
        mode: String,
    },
    Trial {
        trial: u64,
        seed: u64,
        realized: Vec<usize>,
        realized_opt: Weight,
    },
    Round {
        trial: u64,
        round: u64,
        m_r: Vec<usize>,
        m_r_weight: Weight,
        m_r_t: Vec<usize>,
        m_r_f: Vec<usize>,
        e_star_after: Vec<usize>,
        o_r_weight: Weight,
        early_exit: bool,
        #[serde(skip_serializing_if = "Option::is_none")]
        certificates: Option<CertificateReport>,
    },
    TrialEnd {
        trial: u64,
        final_edges: Vec<usize>,
        final_weight: Weight,
    },
    /// One peel of the non-adaptive selection phase.
    NonAdaptiveRound {
        round: u64,
        m_r: Vec<usize>,
        m_r_weight: Weight,
        h_size: usize,
    },
    NonAdaptiveSelection {
        h: Vec<usize>,
        max_degree: u64,
    },
}

pub const TRACE_VERSION: u32 = 1;

pub fn header_record(
    g: &WeightedGraph,
    eps: Ratio,
    rounds: u64,
    trials: u64,
    seed: u64,
    mode: &str,
) -> TraceRecord {
    TraceRecord::Header {
        version: TRACE_VERSION,
        n: g.vertex_count(),
        edges: g.edges().iter().map(|e| (e.u, e.v, e.w, e.p)).collect(),
        eps_num: eps.num,
        eps_den: eps.den,
        rounds,
        trials,
        seed,
        mode: mode.to_string(),
    }
}

/// Expands one adaptive trial into its trace records.
pub fn adaptive_trial_records(
    trial: u64,
    seed: u64,
    realization: &Realization,
    outcome: &AdaptiveOutcome,
) -> Vec<TraceRecord> {
    let mut records = Vec::with_capacity(outcome.rounds.len() + 2);
    records.push(TraceRecord::Trial {
        trial,
        seed,
        realized: realization.realized().to_ids(),
        realized_opt: outcome.realized_opt,
    });
    for r in &outcome.rounds {
        records.push(TraceRecord::Round {
            trial,
            round: r.round,
            m_r: r.matching.edge_ids().to_vec(),
            m_r_weight: r.matching.weight(),
            m_r_t: r.realized.to_ids(),
            m_r_f: r.failed.to_ids(),
            e_star_after: r.e_star_after.to_ids(),
            o_r_weight: r.o_r_weight,
            early_exit: r.early_exit,
            certificates: r.certificates.clone(),
        });
    }
    records.push(TraceRecord::TrialEnd {
        trial,
        final_edges: outcome.final_matching.edge_ids().to_vec(),
        final_weight: outcome.final_matching.weight(),
    });
    records
}

pub fn write_records<W: Write>(w: &mut W, records: &[TraceRecord]) -> Result<(), TraceError> {
    for record in records {
        let line = serde_json::to_string(record).expect("trace records serialize");
        writeln!(w, "{line}")?;
    }
    Ok(())
}

pub fn read_records<R: BufRead>(r: R) -> Result<Vec<TraceRecord>, TraceError> {
    let mut records = Vec::new();
    for (idx, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(&line).map_err(|source| TraceError::Parse {
            line: idx + 1,
            source,
        })?;
        records.push(record);
    }
    Ok(records)
}

/// One discrepancy found while replaying a trace.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyFailure {
    pub trial: u64,
    pub round: Option<u64>,
    pub what: String,
}

/// Outcome of replaying a trace.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub trials: u64,
    pub rounds_checked: u64,
    pub certificates_checked: u64,
    pub failures: Vec<VerifyFailure>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Replays every trial in a trace: reruns the solver round by round,
/// recomputes certificates, and reports any disagreement with the recorded
/// values or any certificate that does not hold.
pub fn verify_trace(records: &[TraceRecord]) -> Result<VerifyReport, TraceError> {
    let (g, eps) = match records.first() {
        Some(TraceRecord::Header {
            n,
            edges,
            eps_num,
            eps_den,
            ..
        }) => {
            let g = WeightedGraph::build(*n, edges)?;
            (g, Ratio::new(*eps_num, *eps_den))
        }
        _ => return Err(TraceError::MissingHeader),
    };
    let m = g.edge_count();

    let mut report = VerifyReport {
        trials: 0,
        rounds_checked: 0,
        certificates_checked: 0,
        failures: Vec::new(),
    };
    let fail = |failures: &mut Vec<VerifyFailure>, trial: u64, round: Option<u64>, what: String| {
        failures.push(VerifyFailure { trial, round, what });
    };

    // Replay state for the current adaptive trial.
    struct TrialState {
        trial: u64,
        realization: EdgeSet,
        realized_opt: Weight,
        e_star: EdgeSet,
        known_realized: EdgeSet,
        o_prev: Matching,
    }
    let mut state: Option<TrialState> = None;
    // Replay state for a non-adaptive selection.
    let mut na_state: Option<NonAdaptiveState> = None;

    for record in &records[1..] {
        match record {
            TraceRecord::Header { .. } => {
                return Err(TraceError::Malformed {
                    line: 0,
                    msg: "trace contains a second header".to_string(),
                })
            }
            TraceRecord::Trial {
                trial,
                realized,
                realized_opt,
                ..
            } => {
                report.trials += 1;
                let realization = EdgeSet::from_ids(m, realized);
                let recomputed = max_weight_matching(&g, &realization).weight();
                if recomputed != *realized_opt {
                    fail(
                        &mut report.failures,
                        *trial,
                        None,
                        format!("realized_opt {realized_opt} != recomputed {recomputed}"),
                    );
                }
                state = Some(TrialState {
                    trial: *trial,
                    realization,
                    realized_opt: recomputed,
                    e_star: g.all_edges(),
                    known_realized: EdgeSet::new(m),
                    o_prev: Matching::empty(),
                });
            }
            TraceRecord::Round {
                trial,
                round,
                m_r,
                m_r_weight,
                m_r_t,
                m_r_f,
                e_star_after,
                o_r_weight,
                certificates,
                ..
            } => {
                let Some(st) = state.as_mut() else {
                    return Err(TraceError::Malformed {
                        line: 0,
                        msg: format!("round record for trial {trial} before its trial record"),
                    });
                };
                report.rounds_checked += 1;
                let m_r_expected = max_weight_matching(&g, &st.e_star);
                if m_r_expected.edge_ids() != &m_r[..] {
                    fail(
                        &mut report.failures,
                        *trial,
                        Some(*round),
                        "recorded M_r differs from the replayed solver output".to_string(),
                    );
                }
                if m_r_expected.weight() != *m_r_weight {
                    fail(
                        &mut report.failures,
                        *trial,
                        Some(*round),
                        format!(
                            "M_r weight {m_r_weight} != recomputed {}",
                            m_r_expected.weight()
                        ),
                    );
                }
                let m_r_set = EdgeSet::from_ids(m, m_r);
                let realized = m_r_set.intersection(&st.realization);
                let failed = m_r_set.difference(&realized);
                if realized.to_ids() != *m_r_t || failed.to_ids() != *m_r_f {
                    fail(
                        &mut report.failures,
                        *trial,
                        Some(*round),
                        "M_r^T / M_r^F split disagrees with the realization".to_string(),
                    );
                }
                st.e_star.subtract(&failed);
                if st.e_star.to_ids() != *e_star_after {
                    fail(
                        &mut report.failures,
                        *trial,
                        Some(*round),
                        "E* evolution mismatch".to_string(),
                    );
                }
                st.known_realized.union_with(&realized);
                let o_r = max_weight_matching(&g, &st.known_realized);
                if o_r.weight() != *o_r_weight {
                    fail(
                        &mut report.failures,
                        *trial,
                        Some(*round),
                        format!("O_r weight {o_r_weight} != recomputed {}", o_r.weight()),
                    );
                }
                if let Some(recorded) = certificates {
                    report.certificates_checked += 1;
                    let recomputed = round_certificates(
                        &g,
                        &st.o_prev,
                        &m_r_expected,
                        st.realized_opt,
                        eps,
                    );
                    if recomputed != *recorded {
                        fail(
                            &mut report.failures,
                            *trial,
                            Some(*round),
                            "certificate fields do not recompute to the recorded values"
                                .to_string(),
                        );
                    }
                    if !recomputed.passed() {
                        fail(
                            &mut report.failures,
                            *trial,
                            Some(*round),
                            format!(
                                "certificate violated: obs1_ok={} lemma2_ok={}",
                                recomputed.obs1_ok, recomputed.lemma2_ok
                            ),
                        );
                    }
                }
                st.o_prev = o_r;
            }
            TraceRecord::TrialEnd {
                trial,
                final_edges,
                final_weight,
            } => {
                let Some(st) = state.take() else {
                    return Err(TraceError::Malformed {
                        line: 0,
                        msg: format!("trial_end for {trial} before its trial record"),
                    });
                };
                if st.trial != *trial
                    || st.o_prev.edge_ids() != &final_edges[..]
                    || st.o_prev.weight() != *final_weight
                {
                    fail(
                        &mut report.failures,
                        *trial,
                        None,
                        "final matching disagrees with the replayed O_R".to_string(),
                    );
                }
            }
            TraceRecord::NonAdaptiveRound {
                round,
                m_r,
                m_r_weight,
                ..
            } => {
                let st = na_state.get_or_insert_with(|| NonAdaptiveState::new(&g));
                report.rounds_checked += 1;
                match st.step(&g) {
                    Some(stepped) => {
                        if stepped.edge_ids() != &m_r[..] || stepped.weight() != *m_r_weight {
                            fail(
                                &mut report.failures,
                                0,
                                Some(*round),
                                "non-adaptive peel differs from the replayed solver output"
                                    .to_string(),
                            );
                        }
                    }
                    None => fail(
                        &mut report.failures,
                        0,
                        Some(*round),
                        "trace records a peel but the remainder is exhausted".to_string(),
                    ),
                }
            }
            TraceRecord::NonAdaptiveSelection { h, max_degree } => {
                let st = na_state.take().unwrap_or_else(|| NonAdaptiveState::new(&g));
                if st.selected().to_ids() != *h {
                    fail(
                        &mut report.failures,
                        0,
                        None,
                        "selected subgraph H differs from replay".to_string(),
                    );
                }
                let mut deg = vec![0u64; g.vertex_count()];
                for id in st.selected().iter() {
                    deg[g.edge(id).u] += 1;
                    deg[g.edge(id).v] += 1;
                }
                let replayed_max = deg.iter().copied().max().unwrap_or(0);
                if replayed_max != *max_degree {
                    fail(
                        &mut report.failures,
                        0,
                        None,
                        format!("H max degree {max_degree} != replayed {replayed_max}"),
                    );
                }
            }
        }
    }
    Ok(report)
}
