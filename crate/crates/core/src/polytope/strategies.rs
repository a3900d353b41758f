use super::{Behavior, PolytopeError, Scenario};

/// Upper bound on the number of deterministic strategies we will enumerate.
pub const MAX_STRATEGIES: usize = 1_000_000;

/// The local polytope of a scenario, stored through its vertices.
///
/// Strategy `i` is `i` written in mixed radix: `n_x` digits base `n_a`
/// (Alice's outcome for `x = 0` most significant), followed by `n_y` digits
/// base `n_b` for Bob. Column `i` of the strategy matrix has a one at row
/// `(x, y, alice(i)[x], bob(i)[y])` for every context.
#[derive(Clone, Debug)]
pub struct LocalPolytope {
    scenario: Scenario,
    count: usize,
    /// `count * (n_x + n_y)` outcome digits.
    outcomes: Vec<u8>,
}

/// Builds the deterministic-strategy description of the local polytope.
pub fn enumerate_strategies(scenario: Scenario) -> Result<LocalPolytope, PolytopeError> {
    let count = scenario.strategy_count().unwrap_or(u128::MAX);
    if count > MAX_STRATEGIES as u128 {
        return Err(PolytopeError::Capacity {
            count,
            limit: MAX_STRATEGIES,
        });
    }
    if scenario.n_a > u8::MAX as usize || scenario.n_b > u8::MAX as usize {
        return Err(PolytopeError::Scenario("too many outcomes".into()));
    }
    let count = count as usize;
    let width = scenario.n_x + scenario.n_y;
    let mut outcomes = vec![0u8; count * width];
    for i in 0..count {
        let digits = &mut outcomes[i * width..(i + 1) * width];
        let mut rest = i;
        for y in (0..scenario.n_y).rev() {
            digits[scenario.n_x + y] = (rest % scenario.n_b) as u8;
            rest /= scenario.n_b;
        }
        for x in (0..scenario.n_x).rev() {
            digits[x] = (rest % scenario.n_a) as u8;
            rest /= scenario.n_a;
        }
    }
    Ok(LocalPolytope {
        scenario,
        count,
        outcomes,
    })
}

impl LocalPolytope {
    pub fn scenario(&self) -> Scenario {
        self.scenario
    }

    pub fn strategy_count(&self) -> usize {
        self.count
    }

    fn digits(&self, i: usize) -> &[u8] {
        let w = self.scenario.n_x + self.scenario.n_y;
        &self.outcomes[i * w..(i + 1) * w]
    }

    /// Alice's outcome for input `x` under strategy `i`.
    pub fn alice_outcome(&self, i: usize, x: usize) -> usize {
        self.digits(i)[x] as usize
    }

    pub fn bob_outcome(&self, i: usize, y: usize) -> usize {
        self.digits(i)[self.scenario.n_x + y] as usize
    }

    /// Row indices `j = (x, y, a, b)` where column `i` is one, in context order.
    pub fn support(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        let s = self.scenario;
        (0..s.n_x).flat_map(move |x| {
            (0..s.n_y).map(move |y| s.index(x, y, self.alice_outcome(i, x), self.bob_outcome(i, y)))
        })
    }

    /// Entry `A_{j,i}`.
    pub fn entry(&self, j: usize, i: usize) -> f64 {
        let s = self.scenario;
        let b = j % s.n_b;
        let a = (j / s.n_b) % s.n_a;
        let y = (j / (s.n_a * s.n_b)) % s.n_y;
        let x = j / (s.n_a * s.n_b * s.n_y);
        if self.alice_outcome(i, x) == a && self.bob_outcome(i, y) == b {
            1.0
        } else {
            0.0
        }
    }

    /// Strategy `i` as a behavior.
    pub fn column(&self, i: usize) -> Behavior {
        let mut probs = vec![0.0; self.scenario.len()];
        for j in self.support(i) {
            probs[j] = 1.0;
        }
        Behavior::from_raw(self.scenario, probs)
    }

    /// `A lambda` for a weight vector over strategies.
    pub fn combine(&self, weights: &[f64]) -> Vec<f64> {
        let mut p = vec![0.0; self.scenario.len()];
        for (i, &w) in weights.iter().enumerate().take(self.count) {
            if w != 0.0 {
                for j in self.support(i) {
                    p[j] += w;
                }
            }
        }
        p
    }
}
