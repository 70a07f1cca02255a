//! Closed-form control-cost models and their reconciliation with
//! simulated counters.
//!
//! Every `1 + 2 + ... + k` term is an abstract dissemination cost of
//! `k (k + 1) / 2` units, not a packet count. Reconciliation therefore
//! checks round counts exactly and compares totals only as a ratio.

use thiserror::Error;

use crate::metrics::VariantCounts;
use crate::protocol::{ControlVariant, NodeId, ProtocolKind};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalyticError {
    #[error("interval `{0}` must be positive")]
    Interval(&'static str),
    #[error("network start {tau_ns} must precede network lifetime {tau_nl}")]
    Horizon { tau_ns: f64, tau_nl: f64 },
    #[error("`{field}` has {got} entries, expected one per node ({expected})")]
    Length {
        field: &'static str,
        expected: usize,
        got: usize,
    },
}

/// How per-node scope sizes enter the FSR cost.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ScopeReading {
    /// Each node contributes the triangular cost of its own scope size.
    #[default]
    PerNode,
    /// Every node contributes the triangular cost of the mean scope size.
    Uniform,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AnalyticInputs {
    pub tau_nl: f64,
    pub tau_ns: f64,
    pub n: usize,
    pub tau_ru_per: f64,
    pub trigger_events: u64,
    pub tau_ias: f64,
    pub tau_ies: f64,
    pub n_ias: Vec<u64>,
    pub n_ies: Vec<u64>,
    pub tau_hello: f64,
    pub tau_tc: f64,
    pub nb: Vec<u64>,
    pub n_mprs: u64,
    pub stable_rounds: u64,
    pub unstable_events: u64,
    pub scope_reading: ScopeReading,
}

impl AnalyticInputs {
    /// Default intervals with empty per-node vectors for `n` nodes.
    pub fn new(n: usize, tau_nl: f64) -> Self {
        AnalyticInputs {
            tau_nl,
            tau_ns: 0.0,
            n,
            tau_ru_per: 15.0,
            trigger_events: 0,
            tau_ias: 5.0,
            tau_ies: 15.0,
            n_ias: vec![0; n],
            n_ies: vec![0; n],
            tau_hello: 2.0,
            tau_tc: 5.0,
            nb: vec![0; n],
            n_mprs: 0,
            stable_rounds: 0,
            unstable_events: 0,
            scope_reading: ScopeReading::PerNode,
        }
    }

    fn check_horizon(&self) -> Result<(), AnalyticError> {
        if !(self.tau_ns < self.tau_nl) {
            return Err(AnalyticError::Horizon {
                tau_ns: self.tau_ns,
                tau_nl: self.tau_nl,
            });
        }
        Ok(())
    }

    fn check_len(&self, field: &'static str, v: &[u64]) -> Result<(), AnalyticError> {
        if v.len() != self.n {
            return Err(AnalyticError::Length {
                field,
                expected: self.n,
                got: v.len(),
            });
        }
        Ok(())
    }
}

fn positive(name: &'static str, v: f64) -> Result<f64, AnalyticError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(AnalyticError::Interval(name))
    }
}

/// `1 + 2 + ... + k`.
pub fn triangular(k: f64) -> f64 {
    k * (k + 1.0) / 2.0
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CeTerms {
    /// Periodic component (RU_per, IAS, LSM).
    pub periodic: f64,
    /// Second component (RU_tri, IES, TC).
    pub secondary: f64,
}

impl CeTerms {
    pub fn total(&self) -> f64 {
        self.periodic + self.secondary
    }
}

/// `periodic` = periodic dumps, `secondary` = triggered updates.
pub fn ce_dsdv(a: &AnalyticInputs) -> Result<CeTerms, AnalyticError> {
    a.check_horizon()?;
    let period = positive("tau_ru_per", a.tau_ru_per)?;
    let per_round = triangular(a.n as f64);
    Ok(CeTerms {
        periodic: a.tau_nl / period * per_round,
        secondary: a.trigger_events as f64 * per_round,
    })
}

/// `periodic` = intra scope, `secondary` = inter scope.
pub fn ce_fsr(a: &AnalyticInputs) -> Result<CeTerms, AnalyticError> {
    a.check_horizon()?;
    let tau_ias = positive("tau_ias", a.tau_ias)?;
    let tau_ies = positive("tau_ies", a.tau_ies)?;
    a.check_len("n_ias", &a.n_ias)?;
    a.check_len("n_ies", &a.n_ies)?;
    let scope_cost = |sizes: &[u64]| -> f64 {
        match a.scope_reading {
            ScopeReading::PerNode => sizes.iter().map(|&s| triangular(s as f64)).sum(),
            ScopeReading::Uniform if sizes.is_empty() => 0.0,
            ScopeReading::Uniform => {
                let mean = sizes.iter().sum::<u64>() as f64 / sizes.len() as f64;
                sizes.len() as f64 * triangular(mean)
            }
        }
    };
    Ok(CeTerms {
        periodic: a.tau_nl / tau_ias * scope_cost(&a.n_ias),
        secondary: a.tau_nl / tau_ies * scope_cost(&a.n_ies),
    })
}

/// `periodic` = HELLO sensing, `secondary` = TC dissemination.
pub fn ce_olsr(a: &AnalyticInputs) -> Result<CeTerms, AnalyticError> {
    a.check_horizon()?;
    let tau_hello = positive("tau_hello", a.tau_hello)?;
    a.check_len("nb", &a.nb)?;
    let links: u64 = a.nb.iter().sum();
    Ok(CeTerms {
        periodic: a.tau_nl / tau_hello * links as f64,
        secondary: a.stable_rounds as f64 * triangular(a.n_mprs as f64)
            + a.unstable_events as f64 * triangular(a.n as f64),
    })
}

pub fn ce_for(kind: ProtocolKind, a: &AnalyticInputs) -> Result<CeTerms, AnalyticError> {
    match kind {
        ProtocolKind::Dsdv => ce_dsdv(a),
        ProtocolKind::Fsr => ce_fsr(a),
        ProtocolKind::Olsr | ProtocolKind::OlsrM => ce_olsr(a),
    }
}

/// Periodic timers whose per-node firing counts the model predicts.
pub fn period_terms(kind: ProtocolKind, a: &AnalyticInputs) -> Vec<(ControlVariant, f64)> {
    match kind {
        ProtocolKind::Dsdv => vec![(ControlVariant::RuPer, a.tau_ru_per)],
        ProtocolKind::Fsr => vec![
            (ControlVariant::Ias, a.tau_ias),
            (ControlVariant::Ies, a.tau_ies),
        ],
        ProtocolKind::Olsr | ProtocolKind::OlsrM => vec![
            (ControlVariant::Hello, a.tau_hello),
            (ControlVariant::Tc, a.tau_tc),
        ],
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RoundCheck {
    pub variant: ControlVariant,
    /// `tau_nl / interval`.
    pub analytic_rounds: f64,
    pub per_node: Vec<u64>,
    /// Nodes whose count differs from `floor(analytic_rounds)` by more
    /// than one. TC checks skip nodes that never originated a TC.
    pub outliers: Vec<NodeId>,
}

impl RoundCheck {
    pub fn exact(&self) -> bool {
        self.outliers.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Reconciliation {
    pub rounds: Vec<RoundCheck>,
    pub analytic_ce: f64,
    pub simulated_ce: u64,
    /// `analytic_ce / simulated_ce`; `None` when nothing was transmitted.
    pub ratio: Option<f64>,
}

pub fn reconcile(
    kind: ProtocolKind,
    a: &AnalyticInputs,
    per_node: &[VariantCounts],
    simulated_ce: u64,
) -> Result<Reconciliation, AnalyticError> {
    let analytic_ce = ce_for(kind, a)?.total();
    let span = a.tau_nl - a.tau_ns;
    let rounds = period_terms(kind, a)
        .into_iter()
        .map(|(variant, interval)| {
            let analytic_rounds = span / interval;
            let expected = analytic_rounds.floor() as i64;
            let counts: Vec<u64> = per_node.iter().map(|c| c.get(variant)).collect();
            let outliers = counts
                .iter()
                .enumerate()
                .filter(|&(_, &c)| !(variant == ControlVariant::Tc && c == 0))
                .filter(|&(_, &c)| (c as i64 - expected).abs() > 1)
                .map(|(i, _)| NodeId::from(i))
                .collect();
            RoundCheck {
                variant,
                analytic_rounds,
                per_node: counts,
                outliers,
            }
        })
        .collect();
    Ok(Reconciliation {
        rounds,
        analytic_ce,
        simulated_ce,
        ratio: (simulated_ce > 0).then(|| analytic_ce / simulated_ce as f64),
    })
}
