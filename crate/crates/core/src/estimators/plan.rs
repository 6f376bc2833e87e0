//! Grouping observables so that one blockwise measurement serves a whole
//! group, and the resulting shot budget.

use crate::error::{arg, Result};
use crate::states::Observable;

/// One group of observables measured with a common block structure.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PlanSubset {
    /// Indices into the planned observable list.
    pub observables: Vec<usize>,
    /// Blocks covering the register, ordered by their smallest qubit.
    pub blocks: Vec<Vec<usize>>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ObservablePlan {
    pub n: usize,
    pub labels: Vec<String>,
    pub subsets: Vec<PlanSubset>,
}

/// Shot budget for a plan at accuracy `ε` and failure probability `δ`.
#[derive(Clone, Debug, PartialEq)]
pub struct PlanBudget {
    pub epsilon: f64,
    pub delta: f64,
    /// Median-of-means batch count `R = ⌈2 ln(2L/δ)⌉`.
    pub batches: usize,
    /// Per subset batch size `N_k = ⌈34·Var_k/ε²⌉`.
    pub batch_sizes: Vec<usize>,
    /// `(68K/ε²)·max Var·ln(2L/δ)`.
    pub total_bound: f64,
}

impl PlanBudget {
    pub fn shots(&self, subset: usize) -> usize {
        self.batch_sizes[subset] * self.batches
    }

    pub fn total_shots(&self) -> usize {
        (0..self.batch_sizes.len()).map(|k| self.shots(k)).sum()
    }
}

fn compatible(a: &[usize], b: &[usize]) -> bool {
    let disjoint = a.iter().all(|q| !b.contains(q));
    let a_in_b = a.iter().all(|q| b.contains(q));
    let b_in_a = b.iter().all(|q| a.contains(q));
    disjoint || a_in_b || b_in_a
}

/// Greedy first-fit grouping, largest supports first.
pub fn plan_observables(observables: &[Observable]) -> Result<ObservablePlan> {
    let Some(first) = observables.first() else {
        return arg("cannot plan an empty observable list");
    };
    let n = first.qubits();
    if observables.iter().any(|o| o.qubits() != n) {
        return arg("observables act on different registers");
    }
    let mut order: Vec<usize> = (0..observables.len()).collect();
    order.sort_by_key(|&i| std::cmp::Reverse(observables[i].support().len()));

    let mut groups: Vec<Vec<usize>> = Vec::new();
    for i in order {
        let s = observables[i].support();
        match groups
            .iter_mut()
            .find(|g| g.iter().all(|&j| compatible(s, observables[j].support())))
        {
            Some(g) => g.push(i),
            None => groups.push(vec![i]),
        }
    }

    let subsets = groups
        .into_iter()
        .map(|mut members| {
            members.sort_unstable();
            let mut blocks: Vec<Vec<usize>> = Vec::new();
            for &i in &members {
                let s = observables[i].support();
                if s.is_empty() {
                    continue;
                }
                let dominated = members.iter().any(|&j| {
                    let o = observables[j].support();
                    o.len() > s.len() && s.iter().all(|q| o.contains(q))
                });
                if !dominated && !blocks.iter().any(|b| b.as_slice() == s) {
                    blocks.push(s.to_vec());
                }
            }
            for q in 0..n {
                if !blocks.iter().any(|b| b.contains(&q)) {
                    blocks.push(vec![q]);
                }
            }
            blocks.sort_by_key(|b| b[0]);
            PlanSubset {
                observables: members,
                blocks,
            }
        })
        .collect();
    Ok(ObservablePlan {
        n,
        labels: observables.iter().map(|o| o.label().to_string()).collect(),
        subsets,
    })
}

impl ObservablePlan {
    /// Number of groups `K`.
    pub fn k(&self) -> usize {
        self.subsets.len()
    }

    /// Number of observables `L`.
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Budget from per-subset variances (one entry per subset).
    pub fn budget(&self, epsilon: f64, delta: f64, variances: &[f64]) -> Result<PlanBudget> {
        let valid = epsilon > 0.0 && delta > 0.0 && delta < 1.0;
        if !valid {
            return arg("need ε > 0 and 0 < δ < 1");
        }
        if variances.len() != self.k() {
            return arg(format!("expected {} variances, got {}", self.k(), variances.len()));
        }
        if variances.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return arg("variances must be finite and non-negative");
        }
        let log = (2.0 * self.len() as f64 / delta).ln();
        let max_var = variances.iter().cloned().fold(0.0, f64::max);
        Ok(PlanBudget {
            epsilon,
            delta,
            batches: (2.0 * log).ceil().max(1.0) as usize,
            batch_sizes: variances
                .iter()
                .map(|&v| super::stats::mom_batch_size(v, epsilon))
                .collect(),
            total_bound: 68.0 * self.k() as f64 / (epsilon * epsilon) * max_var * log,
        })
    }
}
