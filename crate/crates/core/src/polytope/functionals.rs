use std::f64::consts::PI;

use num_complex::Complex64;

use super::{enumerate_strategies, Behavior, PolytopeError, Scenario};
use crate::quantum::{ComplexMatrix, Measurement};

/// Names accepted by [`functional_by_name`].
pub const FUNCTIONAL_NAMES: [&str; 5] = ["chsh", "chsh-any", "i3322", "i3322-cg", "cglmp3"];

/// How a functional turns a behavior into a number. Every vector is a
/// coefficient table over the behavior's flat `(x, y, a, b)` index.
#[derive(Clone, Debug, PartialEq)]
pub enum FunctionalForm {
    /// `c . p`
    Linear(Vec<f64>),
    /// `|c_abs . p| + c_lin . p`
    AbsPlusLinear { abs: Vec<f64>, linear: Vec<f64> },
    /// `max_k c_k . p`
    MaxOf(Vec<Vec<f64>>),
}

impl FunctionalForm {
    fn evaluate(&self, p: &[f64]) -> f64 {
        let dot = |c: &[f64]| c.iter().zip(p).map(|(c, p)| c * p).sum::<f64>();
        match self {
            FunctionalForm::Linear(c) => dot(c),
            FunctionalForm::AbsPlusLinear { abs, linear } => dot(abs).abs() + dot(linear),
            FunctionalForm::MaxOf(forms) => {
                forms.iter().map(|c| dot(c)).fold(f64::NEG_INFINITY, f64::max)
            }
        }
    }
}

/// A Bell expression with its local bound.
#[derive(Clone, Debug, PartialEq)]
pub struct BellFunctional {
    name: String,
    scenario: Scenario,
    form: FunctionalForm,
    local_bound: f64,
}

impl BellFunctional {
    /// Builds a functional; the local bound is the maximum over all
    /// deterministic strategies of the scenario.
    pub fn new(
        name: impl Into<String>,
        scenario: Scenario,
        form: FunctionalForm,
    ) -> Result<Self, PolytopeError> {
        let tables: Vec<&Vec<f64>> = match &form {
            FunctionalForm::Linear(c) => vec![c],
            FunctionalForm::AbsPlusLinear { abs, linear } => vec![abs, linear],
            FunctionalForm::MaxOf(cs) => cs.iter().collect(),
        };
        if tables.is_empty() || tables.iter().any(|c| c.len() != scenario.len()) {
            return Err(PolytopeError::Behavior(format!(
                "coefficient tables must have {} entries",
                scenario.len()
            )));
        }
        let polytope = enumerate_strategies(scenario)?;
        let local_bound = (0..polytope.strategy_count())
            .map(|i| form.evaluate(polytope.column(i).probs()))
            .fold(f64::NEG_INFINITY, f64::max);
        Ok(Self {
            name: name.into(),
            scenario,
            form,
            local_bound,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn scenario(&self) -> Scenario {
        self.scenario
    }

    pub fn form(&self) -> &FunctionalForm {
        &self.form
    }

    pub fn local_bound(&self) -> f64 {
        self.local_bound
    }

    /// Value on a raw probability table of this functional's scenario.
    pub(crate) fn evaluate_raw(&self, probs: &[f64]) -> f64 {
        self.form.evaluate(probs)
    }
}

/// Evaluates `f` on `b`.
pub fn bell_value(f: &BellFunctional, b: &Behavior) -> Result<f64, PolytopeError> {
    if b.scenario() != f.scenario {
        return Err(PolytopeError::ScenarioMismatch {
            expected: f.scenario,
            found: b.scenario(),
        });
    }
    Ok(f.form.evaluate(b.probs()))
}

/// Coefficient-table builder for two-outcome correlator expressions
/// (outcome 0 counts as +1, outcome 1 as -1).
struct Table {
    s: Scenario,
    c: Vec<f64>,
}

impl Table {
    fn new(s: Scenario) -> Self {
        Self {
            s,
            c: vec![0.0; s.len()],
        }
    }

    fn sign(o: usize) -> f64 {
        if o == 0 {
            1.0
        } else {
            -1.0
        }
    }

    /// `w <A_x B_y>`, inputs zero-based.
    fn correlator(mut self, x: usize, y: usize, w: f64) -> Self {
        for a in 0..2 {
            for b in 0..2 {
                self.c[self.s.index(x, y, a, b)] += w * Self::sign(a) * Self::sign(b);
            }
        }
        self
    }

    /// `w <A_x>`, read off every context of `x` and averaged over `y`.
    fn marginal_a(mut self, x: usize, w: f64) -> Self {
        let share = w / self.s.n_y as f64;
        for y in 0..self.s.n_y {
            for a in 0..2 {
                for b in 0..2 {
                    self.c[self.s.index(x, y, a, b)] += share * Self::sign(a);
                }
            }
        }
        self
    }

    fn marginal_b(mut self, y: usize, w: f64) -> Self {
        let share = w / self.s.n_x as f64;
        for x in 0..self.s.n_x {
            for a in 0..2 {
                for b in 0..2 {
                    self.c[self.s.index(x, y, a, b)] += share * Self::sign(b);
                }
            }
        }
        self
    }

    /// `w P(a = 0 | x)`, averaged over `y`.
    fn first_outcome_a(mut self, x: usize, w: f64) -> Self {
        let share = w / self.s.n_y as f64;
        for y in 0..self.s.n_y {
            for b in 0..self.s.n_b {
                self.c[self.s.index(x, y, 0, b)] += share;
            }
        }
        self
    }

    fn first_outcome_b(mut self, y: usize, w: f64) -> Self {
        let share = w / self.s.n_x as f64;
        for x in 0..self.s.n_x {
            for a in 0..self.s.n_a {
                self.c[self.s.index(x, y, a, 0)] += share;
            }
        }
        self
    }

    /// `w p(0, 0 | x, y)`.
    fn first_outcomes(mut self, x: usize, y: usize, w: f64) -> Self {
        self.c[self.s.index(x, y, 0, 0)] += w;
        self
    }

    /// `w P(A_x - B_y = k mod d)`.
    fn difference(mut self, x: usize, y: usize, k: usize, w: f64) -> Self {
        let d = self.s.n_a;
        for b in 0..d {
            let a = (b + k) % d;
            self.c[self.s.index(x, y, a, b)] += w;
        }
        self
    }
}

/// `|<A1 B1> - <A1 B2>| + <A2 B1> + <A2 B2>`, local bound 2.
pub fn chsh_functional() -> BellFunctional {
    let s = Scenario::symmetric(2, 2).expect("valid scenario");
    let abs = Table::new(s).correlator(0, 0, 1.0).correlator(0, 1, -1.0).c;
    let linear = Table::new(s).correlator(1, 0, 1.0).correlator(1, 1, 1.0).c;
    BellFunctional::new("chsh", s, FunctionalForm::AbsPlusLinear { abs, linear })
        .expect("valid functional")
}

/// Largest of the eight relabelings `+-(E11 + E12 + E21 + E22 - 2 E_k)` of
/// CHSH. Exceeds 2 exactly when a (2,2,2) no-signalling behavior is nonlocal.
pub fn chsh_any_functional() -> BellFunctional {
    let s = Scenario::symmetric(2, 2).expect("valid scenario");
    let mut forms = Vec::with_capacity(8);
    for k in 0..4 {
        for sign in [1.0, -1.0] {
            let mut t = Table::new(s);
            for x in 0..2 {
                for y in 0..2 {
                    let w = if 2 * x + y == k { -1.0 } else { 1.0 };
                    t = t.correlator(x, y, sign * w);
                }
            }
            forms.push(t.c);
        }
    }
    BellFunctional::new("chsh-any", s, FunctionalForm::MaxOf(forms)).expect("valid functional")
}

/// `-<A1> - 2<B1> - <B2> + sum_i <A1 Bi> + <A2 B1> + <A2 B2> - <A2 B3> + <A3 B1> - <A3 B2>`.
pub fn i3322_functional() -> BellFunctional {
    let s = Scenario::symmetric(3, 2).expect("valid scenario");
    let c = Table::new(s)
        .marginal_a(0, -1.0)
        .marginal_b(0, -2.0)
        .marginal_b(1, -1.0)
        .correlator(0, 0, 1.0)
        .correlator(0, 1, 1.0)
        .correlator(0, 2, 1.0)
        .correlator(1, 0, 1.0)
        .correlator(1, 1, 1.0)
        .correlator(1, 2, -1.0)
        .correlator(2, 0, 1.0)
        .correlator(2, 1, -1.0)
        .c;
    BellFunctional::new("i3322", s, FunctionalForm::Linear(c)).expect("valid functional")
}

/// The same combination read with probabilities of outcome 0 in place of
/// expectation values (the Collins-Gisin form), local bound 0:
///
/// ```text
/// -P(A1) - 2P(B1) - P(B2) + sum_i P(A1 Bi) + P(A2 B1) + P(A2 B2) - P(A2 B3)
///   + P(A3 B1) - P(A3 B2)
/// ```
pub fn i3322_cg_functional() -> BellFunctional {
    let s = Scenario::symmetric(3, 2).expect("valid scenario");
    let c = Table::new(s)
        .first_outcome_a(0, -1.0)
        .first_outcome_b(0, -2.0)
        .first_outcome_b(1, -1.0)
        .first_outcomes(0, 0, 1.0)
        .first_outcomes(0, 1, 1.0)
        .first_outcomes(0, 2, 1.0)
        .first_outcomes(1, 0, 1.0)
        .first_outcomes(1, 1, 1.0)
        .first_outcomes(1, 2, -1.0)
        .first_outcomes(2, 0, 1.0)
        .first_outcomes(2, 1, -1.0)
        .c;
    BellFunctional::new("i3322-cg", s, FunctionalForm::Linear(c)).expect("valid functional")
}

/// CGLMP expression for two qutrits, local bound 2:
///
/// ```text
/// P(A1=B1) + P(B1=A2+1) + P(A2=B2) + P(B2=A1)
///   - P(A1=B1-1) - P(B1=A2) - P(A2=B2-1) - P(B2=A1-1)
/// ```
///
/// with `P(A=B+k)` the probability that the outcomes differ by `k` mod 3.
pub fn cglmp3_functional() -> BellFunctional {
    let s = Scenario::symmetric(2, 3).expect("valid scenario");
    // (x, y, k) with A_x - B_y = k mod 3
    let c = Table::new(s)
        .difference(0, 0, 0, 1.0) // A1 = B1
        .difference(1, 0, 2, 1.0) // B1 = A2 + 1
        .difference(1, 1, 0, 1.0) // A2 = B2
        .difference(0, 1, 0, 1.0) // B2 = A1
        .difference(0, 0, 2, -1.0) // A1 = B1 - 1
        .difference(1, 0, 0, -1.0) // B1 = A2
        .difference(1, 1, 2, -1.0) // A2 = B2 - 1
        .difference(0, 1, 1, -1.0) // B2 = A1 - 1
        .c;
    BellFunctional::new("cglmp3", s, FunctionalForm::Linear(c)).expect("valid functional")
}

/// Looks up one of [`FUNCTIONAL_NAMES`].
pub fn functional_by_name(name: &str) -> Result<BellFunctional, PolytopeError> {
    match name {
        "chsh" => Ok(chsh_functional()),
        "chsh-any" => Ok(chsh_any_functional()),
        "i3322" => Ok(i3322_functional()),
        "i3322-cg" => Ok(i3322_cg_functional()),
        "cglmp3" => Ok(cglmp3_functional()),
        other => Err(PolytopeError::UnknownFunctional(other.to_string())),
    }
}

fn fourier_measurement(offset: f64, sign: f64) -> Measurement {
    let norm = 1.0 / 3f64.sqrt();
    let outcomes = (0..3)
        .map(|k| {
            let v: Vec<Complex64> = (0..3)
                .map(|j| Complex64::from_polar(norm, sign * 2.0 * PI * j as f64 * (k as f64 + offset) / 3.0))
                .collect();
            ComplexMatrix::outer(&v)
        })
        .collect();
    Measurement::new(outcomes).expect("Fourier bases are orthonormal")
}

/// Standard CGLMP settings for two qutrits: Alice projects onto
/// `sum_j e^{2 pi i j (k + alpha_x) / 3} |j>` with `alpha = (0, 1/2)`, Bob onto
/// `sum_j e^{-2 pi i j (l + beta_y) / 3} |j>` with `beta = (-1/4, 1/4)`.
pub fn cglmp_optimal_settings() -> (Vec<Measurement>, Vec<Measurement>) {
    let alice = [0.0, 0.5].iter().map(|&o| fourier_measurement(o, 1.0)).collect();
    let bob = [-0.25, 0.25].iter().map(|&o| fourier_measurement(o, -1.0)).collect();
    (alice, bob)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polytope::LocalPolytope;

    fn all_strategies(f: &BellFunctional) -> (LocalPolytope, Vec<f64>) {
        let p = enumerate_strategies(f.scenario()).unwrap();
        let v = (0..p.strategy_count())
            .map(|i| bell_value(f, &p.column(i)).unwrap())
            .collect();
        (p, v)
    }

    #[test]
    fn chsh_examples() {
        let f = chsh_functional();
        assert_eq!(f.local_bound(), 2.0);
        let s = f.scenario();
        let all_plus = Behavior::deterministic(s, &[0, 0], &[0, 0]).unwrap();
        assert!((bell_value(&f, &all_plus).unwrap() - 2.0).abs() < 1e-15);
        let pr = Behavior::from_correlators(&[vec![1.0, -1.0], vec![1.0, 1.0]]).unwrap();
        assert!((bell_value(&f, &pr).unwrap() - 4.0).abs() < 1e-15);
        assert!(bell_value(&f, &Behavior::uniform(s)).unwrap().abs() < 1e-15);
        let (_, vals) = all_strategies(&f);
        assert!(vals.iter().all(|&v| v <= 2.0 + 1e-12));
    }

    #[test]
    fn chsh_any_bound_and_pr_box() {
        let f = chsh_any_functional();
        assert_eq!(f.local_bound(), 2.0);
        assert!((bell_value(&f, &Behavior::pr_box()).unwrap() - 4.0).abs() < 1e-15);
    }

    #[test]
    fn i3322_bound_by_enumeration() {
        let f = i3322_functional();
        let (_, vals) = all_strategies(&f);
        let max = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(f.local_bound(), max);
        // Regression constant from exhaustive enumeration over 64 strategies,
        // attained e.g. by A = (-1, -1, any), B = (-1, -1, any).
        assert!((f.local_bound() - 8.0).abs() < 1e-12, "{}", f.local_bound());
        // Uniform behavior: every correlator and marginal vanishes.
        let u = Behavior::uniform(f.scenario());
        assert!(bell_value(&f, &u).unwrap().abs() < 1e-15);
    }

    #[test]
    fn i3322_probability_form() {
        let f = i3322_cg_functional();
        assert!(f.local_bound().abs() < 1e-12, "{}", f.local_bound());
        // -1/2 - 1 - 1/2 + (3 + 2 - 1 + 1 - 1) / 4
        let u = Behavior::uniform(f.scenario());
        assert!((bell_value(&f, &u).unwrap() + 1.0).abs() < 1e-15);
    }

    #[test]
    fn cglmp_local_bound_is_two() {
        let f = cglmp3_functional();
        let (_, vals) = all_strategies(&f);
        assert_eq!(vals.len(), 81);
        assert!(vals.iter().all(|&v| v <= 2.0 + 1e-12));
        assert!((f.local_bound() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn cglmp_settings_are_projective() {
        let (a, b) = cglmp_optimal_settings();
        for m in a.iter().chain(&b) {
            m.validate(1e-10).unwrap();
            assert!(m.idempotency_defect() < 1e-10);
        }
    }

    #[test]
    fn unknown_name() {
        assert!(matches!(
            functional_by_name("mermin"),
            Err(PolytopeError::UnknownFunctional(_))
        ));
        for n in FUNCTIONAL_NAMES {
            assert_eq!(functional_by_name(n).unwrap().name(), n);
        }
    }
}
