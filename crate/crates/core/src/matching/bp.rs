//! Min-sum loopy belief propagation for pairwise MRFs whose labels are
//! translations and whose pairwise cost is `alpha * min(|t_i - t_j|_1, gamma)`.

use rayon::prelude::*;

use super::domain::{argmin_label, TranslationDomain};
use super::dt::dt_in_place;
use crate::error::{Error, Result};

/// A pairwise MRF over a shared translation domain.
#[derive(Clone, Copy, Debug)]
pub struct Mrf<'a> {
    pub domain: &'a TranslationDomain,
    /// Data cost per node, one entry per label.
    pub unary: &'a [Vec<f64>],
    /// Undirected edges.
    pub edges: &'a [(usize, usize)],
}

impl Mrf<'_> {
    pub fn node_count(&self) -> usize {
        self.unary.len()
    }

    fn validate(&self) -> Result<()> {
        let n = self.node_count();
        for costs in self.unary {
            if costs.len() != self.domain.len() {
                return Err(Error::DimensionMismatch {
                    expected: self.domain.len(),
                    actual: costs.len(),
                });
            }
            if costs.iter().any(|c| !c.is_finite()) {
                return Err(Error::NonFinite("data term"));
            }
        }
        for &(a, b) in self.edges {
            if a >= n || b >= n || a == b {
                return Err(Error::invalid(format!("bad edge ({a}, {b}) for {n} nodes")));
            }
        }
        Ok(())
    }
}

/// Which candidate labeling was returned.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LabelingSource {
    BeliefPropagation,
    AllZero,
    IndependentArgmin,
}

#[derive(Clone, Debug)]
pub struct BpOutcome {
    /// Label index per node.
    pub labels: Vec<usize>,
    /// Energy of `labels`.
    pub energy: f64,
    /// Energy of the raw BP labeling.
    pub bp_energy: f64,
    /// Energy of the all-`(0,0)` labeling, when `(0,0)` is a label.
    pub zero_energy: Option<f64>,
    /// Energy of the per-node data-term argmin labeling.
    pub independent_energy: f64,
    pub source: LabelingSource,
}

/// `sum_i D_i(t_i) + alpha * sum_(i,j) min(|t_i - t_j|_1, gamma)`.
pub fn labeling_energy(mrf: &Mrf<'_>, labels: &[usize], alpha: f64, gamma: f64) -> f64 {
    let data: f64 = mrf
        .unary
        .iter()
        .zip(labels)
        .map(|(costs, &l)| costs[l])
        .sum();
    let smooth: f64 = mrf
        .edges
        .iter()
        .map(|&(a, b)| {
            let (ta, tb) = (mrf.domain.translation(labels[a]), mrf.domain.translation(labels[b]));
            super::cost::smoothness_term(ta, tb, gamma)
        })
        .sum();
    data + alpha * smooth
}

/// Synchronous min-sum BP with min-normalized messages, `iters` rounds.
///
/// Each message is the truncated-L1 distance transform of the sender's data
/// term plus all its other incoming messages. Labels are read off the final
/// beliefs with [`argmin_label`] tie-breaking. The BP labeling is compared
/// with the all-zero and independent-argmin labelings and the lowest-energy
/// one is returned (BP wins ties), so the result is never worse than either.
pub fn min_sum_bp(mrf: &Mrf<'_>, alpha: f64, gamma: f64, iters: usize) -> Result<BpOutcome> {
    mrf.validate()?;
    if iters == 0 {
        return Err(Error::invalid("belief propagation needs at least one iteration"));
    }
    let n = mrf.node_count();
    let labels = mrf.domain.len();
    // Directed edge 2e goes a -> b, 2e + 1 goes b -> a.
    let directed: Vec<(usize, usize)> = mrf
        .edges
        .iter()
        .flat_map(|&(a, b)| [(a, b), (b, a)])
        .collect();
    let mut incoming: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (d, &(_, to)) in directed.iter().enumerate() {
        incoming[to].push(d);
    }

    let mut messages = vec![vec![0.0; labels]; directed.len()];
    for _ in 0..iters {
        let next: Vec<Vec<f64>> = directed
            .par_iter()
            .enumerate()
            .map(|(d, &(from, _))| {
                let mut h = mrf.unary[from].clone();
                for &k in &incoming[from] {
                    if k == d ^ 1 {
                        continue;
                    }
                    for (x, m) in h.iter_mut().zip(&messages[k]) {
                        *x += m;
                    }
                }
                dt_in_place(&mut h, mrf.domain, alpha, gamma);
                let min = h.iter().cloned().fold(f64::INFINITY, f64::min);
                h.iter_mut().for_each(|v| *v -= min);
                h
            })
            .collect();
        messages = next;
    }

    let bp_labels: Vec<usize> = (0..n)
        .map(|i| {
            let mut belief = mrf.unary[i].clone();
            for &k in &incoming[i] {
                for (b, m) in belief.iter_mut().zip(&messages[k]) {
                    *b += m;
                }
            }
            argmin_label(&belief, mrf.domain)
        })
        .collect();
    let bp_energy = labeling_energy(mrf, &bp_labels, alpha, gamma);

    let independent: Vec<usize> = mrf
        .unary
        .iter()
        .map(|c| argmin_label(c, mrf.domain))
        .collect();
    let independent_energy = labeling_energy(mrf, &independent, alpha, gamma);
    let zero = mrf.domain.index_of(0, 0).map(|z| vec![z; n]);
    let zero_energy = zero.as_ref().map(|l| labeling_energy(mrf, l, alpha, gamma));

    let mut best = (bp_labels, bp_energy, LabelingSource::BeliefPropagation);
    if let (Some(l), Some(e)) = (zero, zero_energy) {
        if e < best.1 {
            best = (l, e, LabelingSource::AllZero);
        }
    }
    if independent_energy < best.1 {
        best = (independent, independent_energy, LabelingSource::IndependentArgmin);
    }
    Ok(BpOutcome {
        labels: best.0,
        energy: best.1,
        bp_energy,
        zero_energy,
        independent_energy,
        source: best.2,
    })
}
