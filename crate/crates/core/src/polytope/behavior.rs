use std::fmt::Write as _;

use super::{PolytopeError, Scenario};

/// Per-context normalization tolerance.
pub const NORMALIZATION_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Party {
    Alice,
    Bob,
}

/// A marginal of one party that depends on the other party's input.
#[derive(Clone, Debug, PartialEq)]
pub struct SignallingViolation {
    pub party: Party,
    pub input: usize,
    pub outcome: usize,
    pub max_deviation: f64,
}

/// Conditional probability table `p(a,b|x,y)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Behavior {
    scenario: Scenario,
    probs: Vec<f64>,
}

impl Behavior {
    /// Checks shape, finiteness, nonnegativity and per-context normalization.
    pub fn new(scenario: Scenario, probs: Vec<f64>) -> Result<Self, PolytopeError> {
        if probs.len() != scenario.len() {
            return Err(PolytopeError::Behavior(format!(
                "{} probabilities for scenario {scenario} ({} expected)",
                probs.len(),
                scenario.len()
            )));
        }
        if let Some(p) = probs.iter().find(|p| !p.is_finite() || **p < 0.0) {
            return Err(PolytopeError::Behavior(format!("invalid probability {p}")));
        }
        let b = Self { scenario, probs };
        for x in 0..scenario.n_x {
            for y in 0..scenario.n_y {
                let total = b.context(x, y).iter().sum::<f64>();
                if (total - 1.0).abs() > NORMALIZATION_TOL {
                    return Err(PolytopeError::Behavior(format!(
                        "context (x={x}, y={y}) sums to {total}"
                    )));
                }
            }
        }
        Ok(b)
    }

    pub fn from_fn(
        scenario: Scenario,
        f: impl Fn(usize, usize, usize, usize) -> f64,
    ) -> Result<Self, PolytopeError> {
        let mut probs = vec![0.0; scenario.len()];
        for x in 0..scenario.n_x {
            for y in 0..scenario.n_y {
                for a in 0..scenario.n_a {
                    for b in 0..scenario.n_b {
                        probs[scenario.index(x, y, a, b)] = f(x, y, a, b);
                    }
                }
            }
        }
        Self::new(scenario, probs)
    }

    pub fn uniform(scenario: Scenario) -> Self {
        let p = 1.0 / (scenario.n_a * scenario.n_b) as f64;
        Self {
            scenario,
            probs: vec![p; scenario.len()],
        }
    }

    /// The deterministic behavior `a = alice[x]`, `b = bob[y]`.
    pub fn deterministic(
        scenario: Scenario,
        alice: &[usize],
        bob: &[usize],
    ) -> Result<Self, PolytopeError> {
        if alice.len() != scenario.n_x || bob.len() != scenario.n_y {
            return Err(PolytopeError::Behavior("strategy length does not match inputs".into()));
        }
        if alice.iter().any(|&a| a >= scenario.n_a) || bob.iter().any(|&b| b >= scenario.n_b) {
            return Err(PolytopeError::Behavior("strategy outcome out of range".into()));
        }
        Self::from_fn(scenario, |x, y, a, b| {
            if alice[x] == a && bob[y] == b {
                1.0
            } else {
                0.0
            }
        })
    }

    /// Two-outcome behavior with uniform marginals and correlators `E[x][y]`
    /// (outcome 0 counts as +1): `p(a,b|x,y) = (1 + (-1)^(a+b) E_xy) / 4`.
    pub fn from_correlators(correlators: &[Vec<f64>]) -> Result<Self, PolytopeError> {
        let n_x = correlators.len();
        let n_y = correlators.first().map_or(0, Vec::len);
        if correlators.iter().any(|r| r.len() != n_y) {
            return Err(PolytopeError::Behavior("ragged correlator table".into()));
        }
        let scenario = Scenario::new(n_x, n_y, 2, 2)?;
        Self::from_fn(scenario, |x, y, a, b| {
            let sign = if a == b { 1.0 } else { -1.0 };
            (1.0 + sign * correlators[x][y]) / 4.0
        })
    }

    /// The PR box `a xor b = x y` with uniform marginals.
    pub fn pr_box() -> Self {
        Self::from_correlators(&[vec![1.0, 1.0], vec![1.0, -1.0]]).expect("valid PR box")
    }

    /// Convex combination `sum w_k b_k`; weights must be nonnegative and sum to one.
    pub fn mixture(parts: &[(f64, &Behavior)]) -> Result<Self, PolytopeError> {
        let Some((_, first)) = parts.first() else {
            return Err(PolytopeError::Behavior("empty mixture".into()));
        };
        let scenario = first.scenario;
        let mut probs = vec![0.0; scenario.len()];
        for (w, b) in parts {
            if b.scenario != scenario {
                return Err(PolytopeError::ScenarioMismatch {
                    expected: scenario,
                    found: b.scenario,
                });
            }
            for (p, q) in probs.iter_mut().zip(&b.probs) {
                *p += w * q;
            }
        }
        Self::new(scenario, probs)
    }

    /// Internal constructor for tables normalized by construction.
    pub(crate) fn from_raw(scenario: Scenario, probs: Vec<f64>) -> Self {
        debug_assert_eq!(probs.len(), scenario.len());
        Self { scenario, probs }
    }

    pub fn scenario(&self) -> Scenario {
        self.scenario
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn get(&self, x: usize, y: usize, a: usize, b: usize) -> f64 {
        self.probs[self.scenario.index(x, y, a, b)]
    }

    /// The `n_a * n_b` entries of context `(x, y)`.
    pub fn context(&self, x: usize, y: usize) -> &[f64] {
        let w = self.scenario.n_a * self.scenario.n_b;
        let start = self.scenario.index(x, y, 0, 0);
        &self.probs[start..start + w]
    }

    /// Alice's marginal `p(a|x)` computed in context `(x, y)`.
    pub fn marginal_a(&self, x: usize, y: usize, a: usize) -> f64 {
        (0..self.scenario.n_b).map(|b| self.get(x, y, a, b)).sum()
    }

    pub fn marginal_b(&self, x: usize, y: usize, b: usize) -> f64 {
        (0..self.scenario.n_a).map(|a| self.get(x, y, a, b)).sum()
    }

    /// Correlator `<A_x B_y>` of a two-outcome context, outcome 0 as +1.
    pub fn correlator(&self, x: usize, y: usize) -> f64 {
        let s = |o: usize| if o == 0 { 1.0 } else { -1.0 };
        let mut e = 0.0;
        for a in 0..self.scenario.n_a {
            for b in 0..self.scenario.n_b {
                e += s(a) * s(b) * self.get(x, y, a, b);
            }
        }
        e
    }

    /// Largest entrywise difference; infinite if scenarios differ.
    pub fn max_abs_diff(&self, other: &Behavior) -> f64 {
        if self.scenario != other.scenario {
            return f64::INFINITY;
        }
        self.probs
            .iter()
            .zip(&other.probs)
            .map(|(p, q)| (p - q).abs())
            .fold(0.0, f64::max)
    }

    /// Marginals that change with the remote input by more than `tol`.
    pub fn check_no_signalling(&self, tol: f64) -> Vec<SignallingViolation> {
        let s = self.scenario;
        let mut out = Vec::new();
        for x in 0..s.n_x {
            for a in 0..s.n_a {
                let m: Vec<f64> = (0..s.n_y).map(|y| self.marginal_a(x, y, a)).collect();
                let dev = spread(&m);
                if dev > tol {
                    out.push(SignallingViolation {
                        party: Party::Alice,
                        input: x,
                        outcome: a,
                        max_deviation: dev,
                    });
                }
            }
        }
        for y in 0..s.n_y {
            for b in 0..s.n_b {
                let m: Vec<f64> = (0..s.n_x).map(|x| self.marginal_b(x, y, b)).collect();
                let dev = spread(&m);
                if dev > tol {
                    out.push(SignallingViolation {
                        party: Party::Bob,
                        input: y,
                        outcome: b,
                        max_deviation: dev,
                    });
                }
            }
        }
        out
    }

    /// Text form: `scenario nX nY nA nB`, then `x y a b p` per entry in index order.
    pub fn to_text(&self) -> String {
        let s = self.scenario;
        let mut out = format!("scenario {} {} {} {}\n", s.n_x, s.n_y, s.n_a, s.n_b);
        for x in 0..s.n_x {
            for y in 0..s.n_y {
                for a in 0..s.n_a {
                    for b in 0..s.n_b {
                        // `{:?}` prints the shortest string that round-trips.
                        let _ = writeln!(out, "{x} {y} {a} {b} {:?}", self.get(x, y, a, b));
                    }
                }
            }
        }
        out
    }

    /// Parses [`Behavior::to_text`] output. Blank lines and `#` comments are
    /// ignored; entries may appear in any order but each exactly once.
    pub fn from_text(text: &str) -> Result<Self, PolytopeError> {
        let parse_err = |line: usize, message: String| PolytopeError::Parse { line, message };
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty());

        let (hline, header) = lines
            .next()
            .ok_or_else(|| parse_err(1, "missing 'scenario' header".into()))?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 5 || fields[0] != "scenario" {
            return Err(parse_err(hline, "expected 'scenario nX nY nA nB'".into()));
        }
        let dims = fields[1..]
            .iter()
            .map(|f| f.parse::<usize>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| parse_err(hline, format!("bad scenario size: {e}")))?;
        let scenario = Scenario::new(dims[0], dims[1], dims[2], dims[3])
            .map_err(|e| parse_err(hline, e.to_string()))?;

        let mut probs = vec![f64::NAN; scenario.len()];
        for (ln, line) in lines {
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 5 {
                return Err(parse_err(ln, format!("expected 'x y a b p', got {} fields", f.len())));
            }
            let idx = f[..4]
                .iter()
                .map(|t| t.parse::<usize>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| parse_err(ln, format!("bad index: {e}")))?;
            let (x, y, a, b) = (idx[0], idx[1], idx[2], idx[3]);
            if x >= scenario.n_x || y >= scenario.n_y || a >= scenario.n_a || b >= scenario.n_b {
                return Err(parse_err(ln, format!("entry ({x},{y},{a},{b}) outside scenario")));
            }
            let p: f64 = f[4]
                .parse()
                .map_err(|e| parse_err(ln, format!("bad probability '{}': {e}", f[4])))?;
            let slot = &mut probs[scenario.index(x, y, a, b)];
            if !slot.is_nan() {
                return Err(parse_err(ln, format!("duplicate entry ({x},{y},{a},{b})")));
            }
            *slot = p;
        }
        if probs.iter().any(|p| p.is_nan()) {
            let missing = probs.iter().filter(|p| p.is_nan()).count();
            return Err(parse_err(0, format!("{missing} entries missing")));
        }
        Self::new(scenario, probs)
    }
}

fn spread(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    max - min
}
