//! Secularization decisions: the partial-secular cutoff test and frequency
//! clustering for the unified equation.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::ops::Range;

use crate::error::{Error, Result};
use crate::spectral::JumpOperator;

/// Which jump-operator pairs survive in the dissipator and Lamb shift.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SecularPolicy {
    /// Keep every pair.
    Redfield,
    /// Keep only pairs of equal frequency.
    FullSecular,
    /// Keep pairs whose rotation time C/|ω − ω′| reaches the relaxation
    /// time τ_R.
    Partial(f64),
    /// Merge frequencies closer than `w` into clusters, then keep only pairs
    /// within one cluster.
    Unified(f64),
}

impl SecularPolicy {
    pub fn validate(&self) -> Result<()> {
        match *self {
            SecularPolicy::Partial(c) if !(c >= 0.0) => {
                Err(Error::Validation(format!("partial-secular cutoff must be >= 0, got {c}")))
            }
            SecularPolicy::Unified(w) if !(w > 0.0 && w.is_finite()) => {
                Err(Error::Validation(format!("cluster width must be positive and finite, got {w}")))
            }
            _ => Ok(()),
        }
    }

    pub fn name(&self) -> String {
        match self {
            SecularPolicy::Redfield => "redfield".into(),
            SecularPolicy::FullSecular => "full_secular".into(),
            SecularPolicy::Partial(c) => format!("partial({c})"),
            SecularPolicy::Unified(w) => format!("unified({w})"),
        }
    }
}

/// Partial-secular drop test for the pair (ω₁, ω₂). Equal frequencies are
/// always kept; otherwise the pair is dropped iff C_PSA/|ω₁ − ω₂| < τ_R.
pub fn psa_drop(omega1: f64, omega2: f64, tau_r: f64, c_psa: f64) -> bool {
    let delta = (omega1 - omega2).abs();
    if delta == 0.0 {
        return false;
    }
    c_psa / delta < tau_r
}

/// Consecutive runs of `sorted` whose internal gaps satisfy `join`.
pub(crate) fn single_linkage(sorted: &[f64], join: impl Fn(f64) -> bool) -> Vec<Range<usize>> {
    let mut out = Vec::new();
    if sorted.is_empty() {
        return out;
    }
    let mut start = 0;
    for i in 1..sorted.len() {
        if !join(sorted[i] - sorted[i - 1]) {
            out.push(start..i);
            start = i;
        }
    }
    out.push(start..sorted.len());
    out
}

/// A group of quasidegenerate Bohr frequencies.
#[derive(Clone, Debug, PartialEq)]
pub struct FrequencyCluster {
    pub members: Vec<f64>,
    /// Arithmetic mean of the members.
    pub representative: f64,
}

impl FrequencyCluster {
    pub fn width(&self) -> f64 {
        match (self.members.first(), self.members.last()) {
            (Some(a), Some(b)) => b - a,
            _ => 0.0,
        }
    }

    pub fn contains(&self, omega: f64) -> bool {
        self.members.iter().any(|&m| m == omega)
    }
}

/// Single-pass clustering: a gap ≥ `w` between consecutive (sorted)
/// frequencies closes the current cluster. The last frequency is assigned by
/// the same test against its predecessor.
pub fn cluster_frequencies(freqs: &[f64], w: f64) -> Result<Vec<FrequencyCluster>> {
    if !(w > 0.0) {
        return Err(Error::Validation(format!("cluster width must be positive, got {w}")));
    }
    let mut sorted = freqs.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(single_linkage(&sorted, |gap| gap < w)
        .into_iter()
        .map(|r| {
            let members = sorted[r].to_vec();
            let representative = members.iter().sum::<f64>() / members.len() as f64;
            FrequencyCluster { members, representative }
        })
        .collect())
}

/// A cluster wider than the gap to one of its neighbours.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainingWarning {
    pub cluster: usize,
    pub representative: f64,
    pub width: f64,
    pub gap: f64,
}

/// Flags clusters whose width exceeds the gap to an adjacent cluster, the
/// regime where merging stops being a controlled approximation.
pub fn chaining_warnings(clusters: &[FrequencyCluster]) -> Vec<ChainingWarning> {
    let mut out = Vec::new();
    for (k, c) in clusters.iter().enumerate() {
        let below = k.checked_sub(1).map(|p| c.members[0] - clusters[p].members.last().copied().unwrap_or(f64::NEG_INFINITY));
        let above = clusters.get(k + 1).map(|n| n.members[0] - c.members.last().copied().unwrap_or(f64::INFINITY));
        let gap = match (below, above) {
            (Some(a), Some(b)) => a.min(b),
            (Some(a), None) | (None, Some(a)) => a,
            (None, None) => continue,
        };
        let width = c.width();
        if width > gap {
            out.push(ChainingWarning { cluster: k, representative: c.representative, width, gap });
        }
    }
    out
}

/// Index of the cluster holding `omega`.
pub(crate) fn find_cluster(clusters: &[FrequencyCluster], omega: f64) -> Option<usize> {
    // clusters are sorted and disjoint
    let pos = clusters.partition_point(|c| c.members.last().is_some_and(|&m| m < omega));
    (pos < clusters.len() && clusters[pos].contains(omega)).then_some(pos)
}

/// Sums jump operators over each cluster, per (bath, β). The merged operator
/// carries the cluster representative as its frequency.
pub fn cluster_jump_ops(jumps: &[JumpOperator], clusters: &[FrequencyCluster]) -> Result<Vec<JumpOperator>> {
    let mut keyed: Vec<(usize, &JumpOperator)> = Vec::with_capacity(jumps.len());
    for j in jumps {
        let c = find_cluster(clusters, j.omega).ok_or_else(|| {
            Error::Consistency(format!("jump frequency {} of bath {} is in no cluster", j.omega, j.bath_label))
        })?;
        keyed.push((c, j));
    }
    keyed.sort_by(|a, b| {
        a.1.bath_label
            .cmp(&b.1.bath_label)
            .then(a.1.beta.cmp(&b.1.beta))
            .then(a.0.cmp(&b.0))
    });
    let mut out: Vec<JumpOperator> = Vec::new();
    let mut last: Option<(usize, &str, usize)> = None;
    for (c, j) in keyed {
        let key = (c, j.bath_label.as_str(), j.beta);
        if last == Some(key) {
            let m = out.last_mut().expect("group started");
            m.matrix = m.matrix.try_add(&j.matrix)?;
        } else {
            out.push(JumpOperator {
                bath_label: j.bath_label.clone(),
                beta: j.beta,
                omega: clusters[c].representative,
                matrix: j.matrix.clone(),
            });
            last = Some(key);
        }
    }
    Ok(out)
}
