//! Child selection and progressive-widening decisions.

use super::PlannerConfig;

/// Statistics of one action child as seen by a selection rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChildStats {
    pub q: f64,
    pub visits: u64,
}

/// Picks which existing action child a query descends into.
pub trait SelectionRule: Send + Sync {
    /// `children` is non-empty and in insertion order.
    fn select(&self, parent_visits: u64, children: &[ChildStats]) -> usize;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ucb1 {
    pub c: f64,
}

impl SelectionRule for Ucb1 {
    fn select(&self, parent_visits: u64, children: &[ChildStats]) -> usize {
        ucb1_select(parent_visits, children, self.c)
    }
}

/// Index maximizing `q + c * sqrt(ln n / n_child)`; ties go to the earliest child.
/// Unvisited children score infinitely high.
pub fn ucb1_select(parent_visits: u64, children: &[ChildStats], c: f64) -> usize {
    assert!(!children.is_empty(), "ucb1 needs at least one child");
    let log_n = (parent_visits.max(1) as f64).ln();
    let mut best = 0;
    let mut best_score = f64::NEG_INFINITY;
    for (idx, ch) in children.iter().enumerate() {
        let score = if ch.visits == 0 {
            f64::INFINITY
        } else if c == 0.0 {
            ch.q
        } else {
            ch.q + c * (log_n / ch.visits as f64).sqrt()
        };
        if score > best_score {
            best = idx;
            best_score = score;
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Widen {
    SampleNew,
    Descend,
}

/// Action widening: a new action is sampled while the child count is below
/// `k_a * n^alpha_a`. A childless node always samples.
pub fn widen(node_visits: u64, n_children: usize, cfg: &PlannerConfig) -> Widen {
    if n_children == 0 || (n_children as f64) < action_bound(node_visits, cfg) {
        Widen::SampleNew
    } else {
        Widen::Descend
    }
}

pub(crate) fn action_bound(node_visits: u64, cfg: &PlannerConfig) -> f64 {
    cfg.k_action * (node_visits as f64).powf(cfg.alpha_action)
}

/// Largest number of outcome children an action child with `visits` may hold.
pub(crate) fn outcome_limit(visits: u64, cfg: &PlannerConfig) -> usize {
    let bound = (cfg.k_outcome * (visits as f64).powf(cfg.alpha_outcome)).ceil() as usize;
    bound.max(1)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ch(q: f64, visits: u64) -> ChildStats {
        ChildStats { q, visits }
    }

    #[test]
    fn single_child_wins() {
        assert_eq!(ucb1_select(10, &[ch(-3.0, 10)], 1.0), 0);
    }

    #[test]
    fn zero_exploration_is_greedy() {
        assert_eq!(ucb1_select(10, &[ch(0.0, 5), ch(1.0, 5)], 0.0), 1);
    }

    #[test]
    fn exploration_prefers_rarely_visited() {
        for c in [1e-3, 0.5, 1.0, 10.0] {
            assert_eq!(ucb1_select(101, &[ch(0.5, 100), ch(0.5, 1)], c), 1);
        }
    }

    #[test]
    fn ties_go_to_first_inserted() {
        assert_eq!(ucb1_select(4, &[ch(1.0, 2), ch(1.0, 2)], 1.0), 0);
    }

    fn cfg(k: f64, alpha: f64) -> PlannerConfig {
        PlannerConfig {
            k_action: k,
            alpha_action: alpha,
            ..PlannerConfig::default()
        }
    }

    #[test]
    fn first_visit_widens() {
        assert_eq!(widen(1, 0, &cfg(2.0, 0.5)), Widen::SampleNew);
    }

    #[test]
    fn saturated_node_descends() {
        // 4 children vs bound 2 * 4^0.5 = 4
        assert_eq!(widen(4, 4, &cfg(2.0, 0.5)), Widen::Descend);
        assert_eq!(widen(4, 3, &cfg(2.0, 0.5)), Widen::SampleNew);
    }

    #[test]
    fn zero_k_only_forces_first_child() {
        let c = cfg(0.0, 0.5);
        assert_eq!(widen(1, 0, &c), Widen::SampleNew);
        for n in 1..100 {
            assert_eq!(widen(n, 1, &c), Widen::Descend);
        }
    }

    #[test]
    fn outcome_limit_never_below_one() {
        let c = PlannerConfig::default();
        assert_eq!(outcome_limit(1_000, &c), 1);
        let c = PlannerConfig {
            k_outcome: 1.0,
            ..c
        };
        assert_eq!(outcome_limit(9, &c), 3);
    }
}
