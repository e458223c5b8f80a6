use super::tabular::{brute_force_minmax, one_step_maxmin, TabularGame};

/// The two-agent, two-step game in which composing subproblem-optimal
/// continuations is strictly worse than the best joint plan.
pub fn counterexample_game() -> TabularGame {
    TabularGame::from_json(include_str!("../../fixtures/counterexample.json")).expect("valid fixture")
}

#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    /// `(state, joint action, value)` of the one-step max-min subgame at every
    /// state reachable after the first step.
    pub subgames: Vec<(usize, usize, f64)>,
    /// Best worst-agent return when the second step plays the subgame optimum.
    pub greedy_value: f64,
    pub greedy_plan: Vec<usize>,
    /// Exact max-min value over all joint open-loop plans.
    pub optimal_value: f64,
    pub optimal_plan: Vec<usize>,
}

impl Verdict {
    /// True when the subproblem-optimal composition loses to the exact optimum.
    pub fn dp_fails(&self) -> bool {
        self.optimal_value > self.greedy_value
    }
}

/// Builds the counterexample game and compares the two composite values.
pub fn dp_counterexample() -> (TabularGame, Verdict) {
    let game = counterexample_game();
    let s0 = game.initial_state;
    let mut subgames: Vec<(usize, usize, f64)> = Vec::new();
    let mut greedy: Option<(f64, Vec<usize>)> = None;
    for first in 0..game.n_joint() {
        let s1 = game.transitions[s0][first];
        let (second, value) = one_step_maxmin(&game, s1).expect("two-agent one-step game is small");
        if !subgames.iter().any(|&(s, _, _)| s == s1) {
            subgames.push((s1, second, value));
        }
        let plan = vec![first, second];
        let worst = game
            .evaluate(s0, &plan)
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        if greedy.as_ref().is_none_or(|(v, _)| worst > *v) {
            greedy = Some((worst, plan));
        }
    }
    subgames.sort_by_key(|&(s, _, _)| s);
    let (greedy_value, greedy_plan) = greedy.expect("at least one joint action");
    let best = brute_force_minmax(&game).expect("16 plans");
    let verdict = Verdict {
        subgames,
        greedy_value,
        greedy_plan,
        optimal_value: best.value,
        optimal_plan: best.plan,
    };
    (game, verdict)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn subgame_at_two_prefers_ones() {
        let (game, v) = dp_counterexample();
        let (s, a, val) = v.subgames[0];
        assert_eq!(s, 2);
        assert_eq!(game.decode(a), vec![0, 0]);
        assert_eq!(val, 90.0);
        assert!(v.subgames.iter().all(|&(_, _, val)| val == 90.0));
    }

    #[test]
    fn greedy_loses_to_the_joint_plan() {
        let (game, v) = dp_counterexample();
        assert_eq!(v.greedy_value, 95.0);
        assert_eq!(v.optimal_value, 205.0);
        assert!(v.dp_fails());
        assert_eq!(game.evaluate(0, &v.optimal_plan), vec![205.0, 250.0]);
    }
}
