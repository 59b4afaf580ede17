//! Three-party, two-setting, two-outcome Bell expressions in correlator form.
//!
//! Each party measures one of two dichotomic observables of the form
//! `cos(theta_j) sigma_z + sin(theta_j) sigma_x`, identical for all three
//! parties. A Bell expression is an integer-weighted sum of correlators
//! (expectation values of outcome products); the built-in [`BellExpression::sliwa5`]
//! instance is symmetric under party exchange, has local bound 3, and is the
//! one every certification in this crate evaluates.
//!
//! The local bound is computed by brute force over all 4^3 = 64 deterministic
//! strategies, which are the extreme points of the local polytope in this
//! scenario.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::linalg::{ComplexMatrix, DensityMatrix};

/// What a monomial assigns to one party.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Setting {
    Absent,
    One,
    Two,
}

impl Setting {
    fn code(self) -> usize {
        match self {
            Setting::Absent => 0,
            Setting::One => 1,
            Setting::Two => 2,
        }
    }

    fn from_code(code: usize) -> Self {
        match code {
            0 => Setting::Absent,
            1 => Setting::One,
            2 => Setting::Two,
            _ => unreachable!("setting code {code}"),
        }
    }
}

/// One correlator monomial: a setting choice (or absence) per party, in
/// party order A, B, C.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Monomial(pub [Setting; 3]);

impl Monomial {
    pub const COUNT: usize = 27;

    pub const IDENTITY: Monomial = Monomial([Setting::Absent; 3]);

    fn code(self) -> usize {
        9 * self.0[0].code() + 3 * self.0[1].code() + self.0[2].code()
    }

    fn from_code(code: usize) -> Self {
        Monomial([
            Setting::from_code(code / 9),
            Setting::from_code((code / 3) % 3),
            Setting::from_code(code % 3),
        ])
    }

    pub fn all() -> impl Iterator<Item = Monomial> {
        (0..Self::COUNT).map(Monomial::from_code)
    }

    pub fn is_identity(self) -> bool {
        self == Self::IDENTITY
    }

    /// Compact label such as "A1B2"; the identity monomial is "1".
    pub fn label(self) -> String {
        if self.is_identity() {
            return "1".to_string();
        }
        let mut out = String::new();
        for (party, s) in ["A", "B", "C"].iter().zip(self.0) {
            match s {
                Setting::Absent => {}
                Setting::One => {
                    out.push_str(party);
                    out.push('1');
                }
                Setting::Two => {
                    out.push_str(party);
                    out.push('2');
                }
            }
        }
        out
    }
}

/// Integer-weighted sum of correlator monomials.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BellExpression {
    terms: BTreeMap<Monomial, i64>,
}

impl BellExpression {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds `coefficient * monomial`, dropping terms that cancel to zero.
    pub fn add(&mut self, monomial: Monomial, coefficient: i64) {
        let entry = self.terms.entry(monomial).or_insert(0);
        *entry += coefficient;
        if *entry == 0 {
            self.terms.remove(&monomial);
        }
    }

    /// Adds the party-symmetrized orbit of a monomial: every distinct image
    /// under the six party permutations receives the coefficient once.
    pub fn add_symmetrized(&mut self, monomial: Monomial, coefficient: i64) {
        let [a, b, c] = monomial.0;
        let images = [
            [a, b, c],
            [a, c, b],
            [b, a, c],
            [b, c, a],
            [c, a, b],
            [c, b, a],
        ];
        let mut seen = Vec::with_capacity(6);
        for image in images {
            let m = Monomial(image);
            if !seen.contains(&m) {
                seen.push(m);
                self.add(m, coefficient);
            }
        }
    }

    /// The built-in symmetric expression with local bound 3:
    ///
    /// ```text
    ///     S = sym[ A1 + A1B2 - A2B2 - A1B1C1 - A2B1C1 + A2B2C2 ]
    /// ```
    ///
    /// where sym collapses the six party permutations of each generator to
    /// their distinct monomials (so sym\[A1B1\] would mean A1B1 + A1C1 + B1C1).
    /// Expanded, that is 17 terms whose coefficient magnitudes sum to 17.
    pub fn sliwa5() -> Self {
        use Setting::{Absent, One, Two};
        let mut expr = Self::new();
        expr.add_symmetrized(Monomial([One, Absent, Absent]), 1);
        expr.add_symmetrized(Monomial([One, Two, Absent]), 1);
        expr.add_symmetrized(Monomial([Two, Two, Absent]), -1);
        expr.add_symmetrized(Monomial([One, One, One]), -1);
        expr.add_symmetrized(Monomial([Two, One, One]), -1);
        expr.add_symmetrized(Monomial([Two, Two, Two]), 1);
        expr
    }

    pub fn coefficient(&self, monomial: Monomial) -> i64 {
        self.terms.get(&monomial).copied().unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (Monomial, i64)> + '_ {
        self.terms.iter().map(|(&m, &c)| (m, c))
    }

    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    /// Sum of |coefficient|; an algebraic cap on any evaluation.
    pub fn abs_coefficient_sum(&self) -> i64 {
        self.terms.values().map(|c| c.abs()).sum()
    }

    pub fn negated(&self) -> Self {
        Self {
            terms: self.terms.iter().map(|(&m, &c)| (m, -c)).collect(),
        }
    }

    /// Parses the expression file format: one term per line,
    /// `coef party:setting [party:setting ...]` with parties A|B|C, settings
    /// 1|2, and `#` starting a comment. A line with only a coefficient is the
    /// constant (identity) term.
    pub fn parse(text: &str) -> Result<Self, ExpressionParseError> {
        let mut expr = Self::new();
        for (line_index, raw_line) in text.lines().enumerate() {
            let line_no = line_index + 1;
            let line = match raw_line.find('#') {
                Some(pos) => &raw_line[..pos],
                None => raw_line,
            };
            let tokens = tokenize(line);
            if tokens.is_empty() {
                continue;
            }
            let (coef_col, coef_text) = tokens[0];
            let coefficient: i64 = coef_text.parse().map_err(|_| ExpressionParseError {
                line: line_no,
                column: coef_col,
                message: format!("invalid integer coefficient '{coef_text}'"),
            })?;
            let mut settings = [Setting::Absent; 3];
            for &(col, token) in &tokens[1..] {
                let (party_text, setting_text) =
                    token.split_once(':').ok_or_else(|| ExpressionParseError {
                        line: line_no,
                        column: col,
                        message: format!("expected PARTY:SETTING, got '{token}'"),
                    })?;
                let slot = match party_text {
                    "A" => 0,
                    "B" => 1,
                    "C" => 2,
                    other => {
                        return Err(ExpressionParseError {
                            line: line_no,
                            column: col,
                            message: format!("unknown party '{other}' (expected A, B or C)"),
                        })
                    }
                };
                let setting = match setting_text {
                    "1" => Setting::One,
                    "2" => Setting::Two,
                    other => {
                        return Err(ExpressionParseError {
                            line: line_no,
                            column: col,
                            message: format!("invalid setting '{other}' (expected 1 or 2)"),
                        })
                    }
                };
                if settings[slot] != Setting::Absent {
                    return Err(ExpressionParseError {
                        line: line_no,
                        column: col,
                        message: format!("party {party_text} listed twice in one term"),
                    });
                }
                settings[slot] = setting;
            }
            expr.add(Monomial(settings), coefficient);
        }
        Ok(expr)
    }
}

fn tokenize(line: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, ch) in line.char_indices() {
        if ch.is_whitespace() {
            if let Some(s) = start.take() {
                out.push((s + 1, &line[s..i]));
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        out.push((s + 1, &line[s..]));
    }
    out
}

#[derive(Debug, Error)]
#[error("line {line}, column {column}: {message}")]
pub struct ExpressionParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

/// The two measurement directions, shared by all three parties.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeasurementAngles {
    pub theta1: f64,
    pub theta2: f64,
}

impl MeasurementAngles {
    pub fn new(theta1: f64, theta2: f64) -> Self {
        Self { theta1, theta2 }
    }
}

/// The single-qubit observable `cos(theta) sigma_z + sin(theta) sigma_x`:
/// Hermitian, traceless, and involutory.
pub fn observable(theta: f64) -> ComplexMatrix {
    ComplexMatrix::pauli_z()
        .scale(theta.cos())
        .add(&ComplexMatrix::pauli_x().scale(theta.sin()))
}

/// Expectation values of every monomial over 3 parties x 2 settings.
#[derive(Debug, Clone)]
pub struct CorrelationTensor {
    values: [f64; Monomial::COUNT],
}

impl CorrelationTensor {
    pub fn value(&self, monomial: Monomial) -> f64 {
        self.values[monomial.code()]
    }

    /// Monomial label to value, identity omitted.
    pub fn labeled(&self) -> BTreeMap<String, f64> {
        Monomial::all()
            .filter(|m| !m.is_identity())
            .map(|m| (m.label(), self.value(m)))
            .collect()
    }
}

/// Evaluates every correlator `trace(rho · O_A ⊗ O_B ⊗ O_C)` with each factor
/// taken from {identity, observable(theta1), observable(theta2)} according to
/// the monomial.
pub fn correlation_tensor(rho: &DensityMatrix, angles: &MeasurementAngles) -> CorrelationTensor {
    let ops = [
        ComplexMatrix::identity(2),
        observable(angles.theta1),
        observable(angles.theta2),
    ];
    let mut values = [0.0; Monomial::COUNT];
    for monomial in Monomial::all() {
        let op = ops[monomial.0[0].code()]
            .kron(&ops[monomial.0[1].code()])
            .kron(&ops[monomial.0[2].code()]);
        let t = rho.matrix().trace_product(&op);
        debug_assert!(
            t.im.abs() <= 1e-10,
            "correlator has imaginary part {}",
            t.im
        );
        values[monomial.code()] = t.re;
    }
    CorrelationTensor { values }
}

/// Contracts an expression with a correlation tensor.
pub fn evaluate(expr: &BellExpression, tensor: &CorrelationTensor) -> f64 {
    expr.iter().map(|(m, c)| c as f64 * tensor.value(m)).sum()
}

/// Evaluates an expression directly on a state.
pub fn evaluate_on_state(
    expr: &BellExpression,
    rho: &DensityMatrix,
    angles: &MeasurementAngles,
) -> f64 {
    evaluate(expr, &correlation_tensor(rho, angles))
}

/// A local deterministic strategy: a fixed ±1 outcome for each setting of
/// each party. `outcomes[party][setting - 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DeterministicStrategy {
    pub outcomes: [[i8; 2]; 3],
}

impl DeterministicStrategy {
    /// Value of one monomial under this strategy (absent parties contribute 1).
    pub fn monomial_value(&self, monomial: Monomial) -> i64 {
        let mut v = 1i64;
        for (party, s) in monomial.0.iter().enumerate() {
            match s {
                Setting::Absent => {}
                Setting::One => v *= self.outcomes[party][0] as i64,
                Setting::Two => v *= self.outcomes[party][1] as i64,
            }
        }
        v
    }

    pub fn evaluate(&self, expr: &BellExpression) -> i64 {
        expr.iter().map(|(m, c)| c * self.monomial_value(m)).sum()
    }

    pub fn label(&self) -> String {
        let sign = |v: i8| if v > 0 { '+' } else { '-' };
        format!(
            "A({}{}) B({}{}) C({}{})",
            sign(self.outcomes[0][0]),
            sign(self.outcomes[0][1]),
            sign(self.outcomes[1][0]),
            sign(self.outcomes[1][1]),
            sign(self.outcomes[2][0]),
            sign(self.outcomes[2][1]),
        )
    }
}

/// Result of the exhaustive deterministic-strategy maximization.
#[derive(Debug, Clone, Serialize)]
pub struct LocalBound {
    pub bound: f64,
    /// Every strategy attaining the bound.
    pub strategies: Vec<DeterministicStrategy>,
}

/// Maximizes an expression over all 64 deterministic strategies.
///
/// Coefficients are integers and outcomes are ±1, so strategy values are
/// exact and ties are exact as well.
pub fn local_bound(expr: &BellExpression) -> LocalBound {
    let mut best = i64::MIN;
    let mut strategies = Vec::new();
    for bits in 0..64u32 {
        let pick = |k: u32| -> i8 {
            if bits & (1 << k) == 0 {
                1
            } else {
                -1
            }
        };
        let strategy = DeterministicStrategy {
            outcomes: [[pick(0), pick(1)], [pick(2), pick(3)], [pick(4), pick(5)]],
        };
        let value = strategy.evaluate(expr);
        if value > best {
            best = value;
            strategies.clear();
        }
        if value == best {
            strategies.push(strategy);
        }
    }
    LocalBound {
        bound: best as f64,
        strategies,
    }
}

/// Full conditional outcome distribution p(abc|xyz) for the projective
/// measurements `(I ± observable(theta)) / 2`.
///
/// Indexing: settings x, y, z in {1, 2} and outcomes a, b, c in {+1, -1},
/// packed as 3-bit indices with A most significant (bit 0 of a setting means
/// setting 1; bit 0 of an outcome means +1).
#[derive(Debug, Clone)]
pub struct ProbabilityTable {
    values: [[f64; 8]; 8],
}

fn pack3(v: [usize; 3]) -> usize {
    4 * v[0] + 2 * v[1] + v[2]
}

impl ProbabilityTable {
    /// p(outcomes | settings): settings are 1 or 2, outcomes are ±1.
    pub fn probability(&self, settings: [usize; 3], outcomes: [i8; 3]) -> f64 {
        let s = pack3([settings[0] - 1, settings[1] - 1, settings[2] - 1]);
        let o = pack3([
            usize::from(outcomes[0] < 0),
            usize::from(outcomes[1] < 0),
            usize::from(outcomes[2] < 0),
        ]);
        self.values[s][o]
    }

    /// Max |sum over outcomes - 1| across the eight setting combinations.
    pub fn normalization_residual(&self) -> f64 {
        self.values
            .iter()
            .map(|row| (row.iter().sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    pub fn min_probability(&self) -> f64 {
        self.values
            .iter()
            .flat_map(|row| row.iter())
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    /// Largest change of any two-party marginal when the remaining party
    /// switches settings; zero for quantum states up to rounding.
    pub fn no_signaling_residual(&self) -> f64 {
        let mut worst = 0.0f64;
        for party in 0..3 {
            for s_rest in 0..4usize {
                for o_rest in 0..4usize {
                    let mut marginals = [0.0f64; 2];
                    for (s_own, marginal) in marginals.iter_mut().enumerate() {
                        let mut settings = [0usize; 3];
                        let mut rest_bit = 0;
                        for slot in 0..3 {
                            if slot == party {
                                settings[slot] = s_own;
                            } else {
                                settings[slot] = (s_rest >> (1 - rest_bit)) & 1;
                                rest_bit += 1;
                            }
                        }
                        for o_own in 0..2usize {
                            let mut outcomes = [0usize; 3];
                            let mut rest_bit = 0;
                            for slot in 0..3 {
                                if slot == party {
                                    outcomes[slot] = o_own;
                                } else {
                                    outcomes[slot] = (o_rest >> (1 - rest_bit)) & 1;
                                    rest_bit += 1;
                                }
                            }
                            *marginal += self.values[pack3(settings)][pack3(outcomes)];
                        }
                    }
                    worst = worst.max((marginals[0] - marginals[1]).abs());
                }
            }
        }
        worst
    }

    /// Correlator of a monomial recomputed from the table. Absent parties are
    /// measured with setting 1 and traced out; under no-signaling the choice
    /// is immaterial.
    pub fn correlator(&self, monomial: Monomial) -> f64 {
        let settings: [usize; 3] = [
            monomial.0[0].code().max(1) - 1,
            monomial.0[1].code().max(1) - 1,
            monomial.0[2].code().max(1) - 1,
        ];
        let s = pack3(settings);
        let mut acc = 0.0;
        for o in 0..8usize {
            let mut sign = 1.0;
            for slot in 0..3 {
                if monomial.0[slot] != Setting::Absent && (o >> (2 - slot)) & 1 == 1 {
                    sign = -sign;
                }
            }
            acc += sign * self.values[s][o];
        }
        acc
    }
}

/// Computes the full conditional probability table
/// `p(abc|xyz) = trace(rho · P_a^x ⊗ P_b^y ⊗ P_c^z)`.
pub fn probability_distribution(
    rho: &DensityMatrix,
    angles: &MeasurementAngles,
) -> ProbabilityTable {
    let i2 = ComplexMatrix::identity(2);
    // projectors[setting][outcome]: outcome 0 is +1, outcome 1 is -1
    let projector = |theta: f64, outcome: usize| -> ComplexMatrix {
        let sign = if outcome == 0 { 1.0 } else { -1.0 };
        i2.add(&observable(theta).scale(sign)).scale(0.5)
    };
    let projectors =
        [angles.theta1, angles.theta2].map(|theta| [projector(theta, 0), projector(theta, 1)]);

    let mut values = [[0.0f64; 8]; 8];
    for s in 0..8usize {
        let sx = (s >> 2) & 1;
        let sy = (s >> 1) & 1;
        let sz = s & 1;
        for o in 0..8usize {
            let oa = (o >> 2) & 1;
            let ob = (o >> 1) & 1;
            let oc = o & 1;
            let op = projectors[sx][oa]
                .kron(&projectors[sy][ob])
                .kron(&projectors[sz][oc]);
            values[s][o] = rho.matrix().trace_product(&op).re;
        }
    }
    ProbabilityTable { values }
}
