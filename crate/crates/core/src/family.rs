//! The three-parameter family of fully biseparable 3-qubit states.
//!
//! A member of the family is the mixture
//!
//! ```text
//!     rho = p1 |psi1><psi1| + p2 |psi2><psi2| + p2 |psi3><psi3| + p4 |psi4><psi4|
//! ```
//!
//! of four mutually orthonormal states whose amplitudes are trigonometric
//! functions of three free angles (alpha, beta, gamma) and one mixing angle
//! omega:
//!
//! ```text
//!     |psi1> =  a1|000> - b1(|001>+|010>+|100>) + c1|111>
//!     |psi2> = -a2(|001>-2|010>+|100>) + b2(|011>-2|101>+|110>)
//!     |psi3> =  a3(|100>-|001>) + b3(|110>-|011>)
//!     |psi4> = -a4|000> + b4(|011>+|101>+|110>) + c4|111>
//!
//!     a1 = sin(alpha) sin(beta)    a4 = cos(alpha) sin(gamma)
//!     b1 = cos(beta)/sqrt(3)       b4 = cos(gamma)/sqrt(3)
//!     c1 = cos(alpha) sin(beta)    c4 = sin(alpha) sin(gamma)
//!     a2 = cos(omega)/sqrt(6)      a3 = cos(omega)/sqrt(2)
//!     b2 = sin(omega)/sqrt(6)      b3 = sin(omega)/sqrt(2)
//! ```
//!
//! The state is symmetric under every permutation of the parties. Demanding
//! that rho equal its own partial transpose on party C pins the matrix-element
//! pairs `rho[000,011] = rho[001,010]`, `rho[010,111] = rho[011,110]` and
//! `rho[000,111] = rho[001,110]`, which translates into three linear
//! constraints on the weights:
//!
//! ```text
//!     -a4 b4 p4   =  b1^2 p1 - 2 a2^2 p2
//!     -b1 c1 p1   = -2 b2^2 p2 + b4^2 p4
//!     -4 a2 b2 p2 =  a1 c1 p1 - a4 c4 p4
//! ```
//!
//! The first two, together with normalization p1 + 2 p2 + p4 = 1, have the
//! closed-form solution implemented in [`solve_weights`]. Substituting it into
//! the third constraint leaves a quadratic in tan(omega),
//!
//! ```text
//!     C tan^2(omega) + 2 A tan(omega) + B = 0
//!     A = b1 b4 (a4 c1 - b1 b4)
//!     B = -c1 (a1 b4^2 + a4 b1 c4)
//!     C =  a4 (a1 b4 c1 + b1^2 c4)
//! ```
//!
//! solved by [`solve_omega`] whenever A^2 > BC. Partial-transpose invariance
//! plus full permutation symmetry makes every member of the family biseparable
//! along every bipartite cut.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{
    eig_hermitian, partial_transpose, permute_parties, DensityMatrix, Ket, LinalgError, Party,
    PartyPerm, Tolerances,
};

/// Weights more negative than this fail the nonnegativity gate.
pub const WEIGHT_FLOOR: f64 = -1e-10;
/// |det M| below this is treated as a singular weight system.
pub const DET_SINGULAR_THRESHOLD: f64 = 1e-12;
/// |C| below this switches the mixing-angle quadratic to its linear form.
const DEGENERATE_C_THRESHOLD: f64 = 1e-14;
/// Angles within this distance of a tan pole bypass the inequality form of
/// the positivity check.
const TAN_POLE_EPS: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum FamilyError {
    #[error("no real mixing angle: discriminant A^2 - BC = {discriminant:.6e} <= 0")]
    Infeasible { discriminant: f64 },
    #[error("mixing-angle equation vanishes identically (max coefficient {max_coefficient:.3e}): omega unconstrained")]
    Degenerate { max_coefficient: f64 },
    #[error("weight system is singular: |det M| = {det:.3e} below {threshold:.1e}")]
    SingularSystem { det: f64, threshold: f64 },
    #[error("negative mixture weights: p1 = {p1:.6e}, p2 = {p2:.6e}, p4 = {p4:.6e}")]
    InvalidWeights { p1: f64, p2: f64, p4: f64 },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// The three free angles of the family, in radians. No range restriction:
/// valid members exist with gamma > pi.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FamilyAngles {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl FamilyAngles {
    pub fn new(alpha: f64, beta: f64, gamma: f64) -> Self {
        Self { alpha, beta, gamma }
    }
}

/// Amplitudes of the four basis states, derived from the angles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Coefficients {
    pub a1: f64,
    pub b1: f64,
    pub c1: f64,
    pub a2: f64,
    pub b2: f64,
    pub a3: f64,
    pub b3: f64,
    pub a4: f64,
    pub b4: f64,
    pub c4: f64,
}

/// Coefficients and roots of the mixing-angle quadratic
/// `C tan^2(omega) + 2 A tan(omega) + B = 0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OmegaSolutions {
    pub coeff_a: f64,
    pub coeff_b: f64,
    pub coeff_c: f64,
    /// A^2 - BC; solutions exist only when this is positive.
    pub discriminant: f64,
    /// The two arctan roots followed by their +pi copies, wrapped to (-pi, pi].
    pub branches: Vec<f64>,
}

/// Mixture weights (p3 = p2 throughout) and the normalization factor
/// q = 1/det(M).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Weights {
    pub p1: f64,
    pub p2: f64,
    pub p4: f64,
    pub q: f64,
}

impl Weights {
    pub fn min(&self) -> f64 {
        self.p1.min(self.p2).min(self.p4)
    }

    pub fn nonnegative(&self) -> bool {
        self.min() >= WEIGHT_FLOOR
    }
}

/// A fully assembled family member.
#[derive(Debug, Clone)]
pub struct FamilyState {
    pub angles: FamilyAngles,
    pub omega: f64,
    pub coefficients: Coefficients,
    pub weights: Weights,
    pub rho: DensityMatrix,
}

fn sqrt3() -> f64 {
    3.0_f64.sqrt()
}

/// Evaluates the trigonometric coefficient map.
pub fn coefficients_from_angles(angles: &FamilyAngles, omega: f64) -> Coefficients {
    let s3 = sqrt3();
    let s6 = 6.0_f64.sqrt();
    let s2 = 2.0_f64.sqrt();
    Coefficients {
        a1: angles.alpha.sin() * angles.beta.sin(),
        b1: angles.beta.cos() / s3,
        c1: angles.alpha.cos() * angles.beta.sin(),
        a2: omega.cos() / s6,
        b2: omega.sin() / s6,
        a3: omega.cos() / s2,
        b3: omega.sin() / s2,
        a4: angles.alpha.cos() * angles.gamma.sin(),
        b4: angles.gamma.cos() / s3,
        c4: angles.alpha.sin() * angles.gamma.sin(),
    }
}

/// The four basis states as amplitude vectors over |xyz> -> 4x + 2y + z.
pub fn basis_states(c: &Coefficients) -> [Ket; 4] {
    let psi1 = Ket::from_real(&[c.a1, -c.b1, -c.b1, 0.0, -c.b1, 0.0, 0.0, c.c1]);
    let psi2 = Ket::from_real(&[0.0, -c.a2, 2.0 * c.a2, c.b2, -c.a2, -2.0 * c.b2, c.b2, 0.0]);
    let psi3 = Ket::from_real(&[0.0, -c.a3, 0.0, -c.b3, c.a3, 0.0, c.b3, 0.0]);
    let psi4 = Ket::from_real(&[-c.a4, 0.0, 0.0, c.b4, 0.0, c.b4, c.b4, c.c4]);
    [psi1, psi2, psi3, psi4]
}

/// Coefficients (A, B, C) of the mixing-angle quadratic; they depend on
/// (alpha, beta, gamma) only.
pub fn abc_coefficients(angles: &FamilyAngles) -> (f64, f64, f64) {
    let k = coefficients_from_angles(angles, 0.0);
    let a = k.b1 * k.b4 * (k.a4 * k.c1 - k.b1 * k.b4);
    let b = -k.c1 * (k.a1 * k.b4 * k.b4 + k.a4 * k.b1 * k.c4);
    let c = k.a4 * (k.a1 * k.b4 * k.c1 + k.b1 * k.b1 * k.c4);
    (a, b, c)
}

/// Residual of the mixing-angle equation `2 a2 b2 A + a2^2 B + b2^2 C` at the
/// given omega.
pub fn omega_equation_residual(angles: &FamilyAngles, omega: f64) -> f64 {
    let (a, b, c) = abc_coefficients(angles);
    let k = coefficients_from_angles(angles, omega);
    (2.0 * k.a2 * k.b2 * a + k.a2 * k.a2 * b + k.b2 * k.b2 * c).abs()
}

/// Wraps an angle to (-pi, pi].
fn wrap_angle(x: f64) -> f64 {
    let w = x.rem_euclid(2.0 * PI);
    if w > PI {
        w - 2.0 * PI
    } else {
        w
    }
}

/// Solves the mixing-angle quadratic.
///
/// Returns the two roots `arctan((-A ± sqrt(A^2 - BC))/C)` plus their +pi
/// copies, wrapped to (-pi, pi]. omega and omega + pi flip the signs of
/// (a2, b2, a3, b3) simultaneously, which leaves the projectors onto psi2 and
/// psi3 unchanged, so the paired branches describe the same state; both are
/// reported anyway.
///
/// When C collapses to zero the quadratic degenerates to a linear factor: the
/// finite root is arctan(-B/(2A)) and the root that escaped to infinity is
/// omega = pi/2 (cos omega = 0), which still solves the original equation
/// because the C term vanishes.
pub fn solve_omega(angles: &FamilyAngles) -> Result<OmegaSolutions, FamilyError> {
    let (coeff_a, coeff_b, coeff_c) = abc_coefficients(angles);
    let max_coefficient = coeff_a.abs().max(coeff_b.abs()).max(coeff_c.abs());
    if max_coefficient < DEGENERATE_C_THRESHOLD {
        // the whole quadratic vanishes; the discriminant sign is noise
        return Err(FamilyError::Degenerate { max_coefficient });
    }
    let discriminant = coeff_a * coeff_a - coeff_b * coeff_c;
    if discriminant <= 0.0 {
        return Err(FamilyError::Infeasible { discriminant });
    }
    let root = discriminant.sqrt();
    let primary = if coeff_c.abs() <= DEGENERATE_C_THRESHOLD {
        // discriminant > 0 with C ~ 0 forces A != 0
        [(-coeff_b / (2.0 * coeff_a)).atan(), FRAC_PI_2]
    } else {
        // Stable quadratic roots: (-A ± root)/C suffers cancellation in the
        // smaller root when |BC| << A^2, which then leaks into the assembled
        // state's partial-transpose residual. Form the non-cancelling
        // numerator u = -(A + sign(A) root); the roots are u/C and B/u, kept
        // in (+, -) order.
        let u = -(coeff_a + coeff_a.signum() * root);
        let (t_plus, t_minus) = if coeff_a >= 0.0 {
            (coeff_b / u, u / coeff_c)
        } else {
            (u / coeff_c, coeff_b / u)
        };
        [t_plus.atan(), t_minus.atan()]
    };
    let branches = vec![
        wrap_angle(primary[0]),
        wrap_angle(primary[1]),
        wrap_angle(primary[0] + PI),
        wrap_angle(primary[1] + PI),
    ];
    Ok(OmegaSolutions {
        coeff_a,
        coeff_b,
        coeff_c,
        discriminant,
        branches,
    })
}

/// The 3x3 system matrix M with rows (first two PT constraints,
/// normalization), acting on (p1, p2, p4).
pub fn weight_matrix(c: &Coefficients) -> [[f64; 3]; 3] {
    [
        [c.b1 * c.b1, -2.0 * c.a2 * c.a2, c.a4 * c.b4],
        [c.b1 * c.c1, -2.0 * c.b2 * c.b2, c.b4 * c.b4],
        [1.0, 2.0, 1.0],
    ]
}

fn det3(m: &[[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// Closed-form weights without the nonnegativity gate. Useful for mapping the
/// invalid region; [`solve_weights`] is the gated entry point.
pub fn solve_weights_any_sign(angles: &FamilyAngles, omega: f64) -> Result<Weights, FamilyError> {
    let k = coefficients_from_angles(angles, omega);
    let det = det3(&weight_matrix(&k));
    if det.abs() < DET_SINGULAR_THRESHOLD {
        return Err(FamilyError::SingularSystem {
            det,
            threshold: DET_SINGULAR_THRESHOLD,
        });
    }
    let q = 1.0 / det;
    let p1 = q * (2.0 * k.a4 * k.b2 * k.b2 * k.b4 - 2.0 * k.a2 * k.a2 * k.b4 * k.b4);
    let p2 = q * (-k.b1 * k.b1 * k.b4 * k.b4 + k.a4 * k.b1 * k.b4 * k.c1);
    let p4 = q * (-2.0 * k.b1 * k.b1 * k.b2 * k.b2 + 2.0 * k.a2 * k.a2 * k.b1 * k.c1);
    Ok(Weights { p1, p2, p4, q })
}

/// Closed-form mixture weights `q * (2 a4 b2^2 b4 - 2 a2^2 b4^2,
/// -b1^2 b4^2 + a4 b1 b4 c1, -2 b1^2 b2^2 + 2 a2^2 b1 c1)`.
pub fn solve_weights(angles: &FamilyAngles, omega: f64) -> Result<Weights, FamilyError> {
    let w = solve_weights_any_sign(angles, omega)?;
    if !w.nonnegative() {
        return Err(FamilyError::InvalidWeights {
            p1: w.p1,
            p2: w.p2,
            p4: w.p4,
        });
    }
    Ok(w)
}

/// Residuals of the three weight constraints at the given coefficients.
pub fn weight_constraint_residuals(c: &Coefficients, w: &Weights) -> [f64; 3] {
    [
        (-c.a4 * c.b4 * w.p4 - (c.b1 * c.b1 * w.p1 - 2.0 * c.a2 * c.a2 * w.p2)).abs(),
        (-c.b1 * c.c1 * w.p1 - (-2.0 * c.b2 * c.b2 * w.p2 + c.b4 * c.b4 * w.p4)).abs(),
        (-4.0 * c.a2 * c.b2 * w.p2 - (c.a1 * c.c1 * w.p1 - c.a4 * c.c4 * w.p4)).abs(),
    ]
}

fn near_tan_pole(v: f64) -> bool {
    let d = (v - FRAC_PI_2).rem_euclid(PI);
    d.min(PI - d) < TAN_POLE_EPS
}

/// Decides weight nonnegativity from the closed form without evaluating the
/// weights themselves.
///
/// Away from tan poles the sign structure of the closed form factorizes:
///
/// ```text
///     sign(p1) = sign(q cos(alpha)) * sign(tan(gamma) - 1/(sqrt3 cos(alpha) tan^2(omega)))
///     sign(p4) = sign(q cos(alpha)) * sign(tan(beta)  - tan^2(omega)/(sqrt3 cos(alpha)))
///     sign(p2) = sign(q A)
/// ```
///
/// so the two threshold inequalities on tan(gamma) and tan(beta) hold with
/// their stated orientation when `q cos(alpha) > 0` and reverse when it is
/// negative, and the p2 sign rides on q*A alone. When beta, gamma, omega or
/// alpha sits within 1e-9 of a tan pole (or tan(omega) itself vanishes) the
/// inequality form is bypassed and nonnegativity is read directly off
/// [`solve_weights_any_sign`], whose closed form is pole-free.
pub fn check_positivity_inequalities(angles: &FamilyAngles, omega: f64, q_sign: f64) -> bool {
    let at_pole = near_tan_pole(angles.beta)
        || near_tan_pole(angles.gamma)
        || near_tan_pole(angles.alpha)
        || near_tan_pole(omega)
        || omega.tan().abs() < TAN_POLE_EPS;
    if at_pole {
        return match solve_weights_any_sign(angles, omega) {
            Ok(w) => w.nonnegative(),
            Err(_) => false,
        };
    }
    let (coeff_a, _, _) = abc_coefficients(angles);
    let cos_alpha = angles.alpha.cos();
    let tan_w2 = omega.tan().powi(2);
    let gamma_threshold = 1.0 / (sqrt3() * cos_alpha * tan_w2);
    let beta_threshold = tan_w2 / (sqrt3() * cos_alpha);
    let edge_ok = if q_sign * cos_alpha >= 0.0 {
        angles.gamma.tan() >= gamma_threshold && angles.beta.tan() >= beta_threshold
    } else {
        angles.gamma.tan() <= gamma_threshold && angles.beta.tan() <= beta_threshold
    };
    edge_ok && q_sign * coeff_a >= 0.0
}

/// Assembles the density matrix for one mixing-angle branch.
pub fn assemble_state(angles: &FamilyAngles, omega: f64) -> Result<FamilyState, FamilyError> {
    let weights = solve_weights(angles, omega)?;
    let coefficients = coefficients_from_angles(angles, omega);
    let kets = basis_states(&coefficients);
    let rho = DensityMatrix::mixture(&[
        (weights.p1, &kets[0]),
        (weights.p2, &kets[1]),
        (weights.p2, &kets[2]),
        (weights.p4, &kets[3]),
    ])?;
    Ok(FamilyState {
        angles: *angles,
        omega,
        coefficients,
        weights,
        rho,
    })
}

/// One feasible branch of the mixing-angle equation with its assembled state.
#[derive(Debug, Clone)]
pub struct FeasibleBranch {
    pub branch: usize,
    pub omega: f64,
    pub state: FamilyState,
}

/// Solves for omega and assembles every branch with nonnegative weights.
/// Branches with negative weights or a singular weight system are skipped;
/// the returned list may be empty.
pub fn feasible_states(angles: &FamilyAngles) -> Result<Vec<FeasibleBranch>, FamilyError> {
    let solutions = solve_omega(angles)?;
    let mut out = Vec::new();
    for (branch, &omega) in solutions.branches.iter().enumerate() {
        match assemble_state(angles, omega) {
            Ok(state) => out.push(FeasibleBranch {
                branch,
                omega,
                state,
            }),
            Err(FamilyError::InvalidWeights { .. }) | Err(FamilyError::SingularSystem { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

/// One threshold comparison inside a certification record.
#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    /// true: pass means value >= threshold; false: pass means value <= threshold.
    pub lower_bound: bool,
    pub passed: bool,
}

fn check_upper(name: &str, value: f64, threshold: f64) -> CheckResult {
    CheckResult {
        name: name.to_string(),
        value,
        threshold,
        lower_bound: false,
        passed: value <= threshold,
    }
}

fn check_lower(name: &str, value: f64, threshold: f64) -> CheckResult {
    CheckResult {
        name: name.to_string(),
        value,
        threshold,
        lower_bound: true,
        passed: value >= threshold,
    }
}

/// Full structural certification of a 3-qubit density matrix: Hermiticity,
/// trace, spectrum, partial-transpose invariance and spectra on every cut,
/// permutation symmetry, and the three imposed matrix-element relations.
#[derive(Debug, Clone, Serialize)]
pub struct CertificationRecord {
    pub hermiticity_residual: f64,
    pub trace_residual: f64,
    pub min_eigenvalue: f64,
    /// Min eigenvalue of the partial transpose on A, B, C.
    pub pt_min_eigenvalues: [f64; 3],
    /// Max elementwise |rho - PT_X(rho)| for X = A, B, C.
    pub pt_invariance_residuals: [f64; 3],
    /// Max elementwise |rho - U rho U†| over all six party permutations.
    pub permutation_residual: f64,
    /// `|rho[000,011] - rho[001,010]|`, `|rho[010,111] - rho[011,110]|`,
    /// `|rho[000,111] - rho[001,110]|`.
    pub imposed_relation_residuals: [f64; 3],
    /// Max |<psi_j|psi_k> - delta_jk|; present only when certifying a family
    /// member with known basis states.
    pub basis_orthonormality_residual: Option<f64>,
    pub tolerances: Tolerances,
    pub checks: Vec<CheckResult>,
    pub passed: bool,
}

/// Certifies an arbitrary 3-qubit density matrix against the family's
/// structural requirements.
pub fn certify(rho: &DensityMatrix, tol: &Tolerances) -> Result<CertificationRecord, LinalgError> {
    certify_inner(rho, None, tol)
}

fn certify_inner(
    rho: &DensityMatrix,
    basis_orthonormality_residual: Option<f64>,
    tol: &Tolerances,
) -> Result<CertificationRecord, LinalgError> {
    let m = rho.matrix();
    let hermiticity_residual = m.hermiticity_residual();
    let trace_residual = (m.trace().re - 1.0).hypot(m.trace().im);
    let min_eigenvalue = eig_hermitian(m)?.eigenvalues[0];

    let mut pt_min_eigenvalues = [0.0; 3];
    let mut pt_invariance_residuals = [0.0; 3];
    for (i, party) in Party::ALL.iter().enumerate() {
        let pt = partial_transpose(m, *party)?;
        pt_min_eigenvalues[i] = eig_hermitian(&pt)?.eigenvalues[0];
        pt_invariance_residuals[i] = m.max_abs_diff(&pt);
    }

    let permutation_residual = PartyPerm::all()
        .iter()
        .map(|perm| m.max_abs_diff(&permute_parties(m, *perm).expect("dim 8")))
        .fold(0.0, f64::max);

    let imposed_relation_residuals = [
        (m[(0, 3)] - m[(1, 2)]).norm(),
        (m[(2, 7)] - m[(3, 6)]).norm(),
        (m[(0, 7)] - m[(1, 6)]).norm(),
    ];

    let mut checks = vec![
        check_upper(
            "hermiticity_residual",
            hermiticity_residual,
            tol.hermiticity,
        ),
        check_upper("trace_residual", trace_residual, tol.trace),
        check_lower("min_eigenvalue", min_eigenvalue, tol.psd_floor),
    ];
    for (i, party) in Party::ALL.iter().enumerate() {
        checks.push(check_lower(
            &format!("pt_{party}_min_eigenvalue").to_lowercase(),
            pt_min_eigenvalues[i],
            tol.psd_floor,
        ));
        checks.push(check_upper(
            &format!("pt_{party}_invariance_residual").to_lowercase(),
            pt_invariance_residuals[i],
            tol.pt_invariance,
        ));
    }
    checks.push(check_upper(
        "permutation_residual",
        permutation_residual,
        tol.permutation_symmetry,
    ));
    let relation_names = [
        "relation_000_011__001_010",
        "relation_010_111__011_110",
        "relation_000_111__001_110",
    ];
    for (name, value) in relation_names.iter().zip(imposed_relation_residuals) {
        checks.push(check_upper(name, value, tol.pt_invariance));
    }
    if let Some(res) = basis_orthonormality_residual {
        checks.push(check_upper(
            "basis_orthonormality_residual",
            res,
            tol.orthonormality,
        ));
    }
    let passed = checks.iter().all(|c| c.passed);

    Ok(CertificationRecord {
        hermiticity_residual,
        trace_residual,
        min_eigenvalue,
        pt_min_eigenvalues,
        pt_invariance_residuals,
        permutation_residual,
        imposed_relation_residuals,
        basis_orthonormality_residual,
        tolerances: *tol,
        checks,
        passed,
    })
}

impl FamilyState {
    /// Certifies the assembled state, including orthonormality of its four
    /// basis states.
    pub fn certify(&self, tol: &Tolerances) -> Result<CertificationRecord, LinalgError> {
        let kets = basis_states(&self.coefficients);
        let mut worst = 0.0f64;
        for j in 0..4 {
            for k in 0..4 {
                let expected = if j == k { 1.0 } else { 0.0 };
                let inner = kets[j].inner(&kets[k]);
                worst = worst.max((inner.re - expected).hypot(inner.im));
            }
        }
        certify_inner(&self.rho, Some(worst), tol)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Complex64;

    const MAIN: FamilyAngles = FamilyAngles {
        alpha: PI / 12.0,
        beta: PI / 4.0,
        gamma: 5.0 * PI / 12.0,
    };
    const APPENDIX: FamilyAngles = FamilyAngles {
        alpha: 0.1545,
        beta: 0.8460,
        gamma: 4.4903,
    };
    // Frozen branch-0 mixing angles for the two reference points.
    const MAIN_OMEGA: f64 = 0.568177278449205;
    const APPENDIX_OMEGA: f64 = 0.480785193087039;

    fn approx(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn coefficients_at_reference_point() {
        let c = coefficients_from_angles(&MAIN, MAIN_OMEGA);
        assert!(approx(c.a1, 0.1830127018922193, 1e-15));
        assert!(approx(c.b1, 0.408248290463863, 1e-15));
        assert!(approx(c.c1, (PI / 12.0).cos() * (PI / 4.0).sin(), 1e-15));
        // a2^2 + b2^2 = 1/6 and a3^2 + b3^2 = 1/2 identically
        assert!(approx(c.a2 * c.a2 + c.b2 * c.b2, 1.0 / 6.0, 1e-14));
        assert!(approx(c.a3 * c.a3 + c.b3 * c.b3, 0.5, 1e-14));
    }

    #[test]
    fn coefficients_at_zero_angles() {
        let c = coefficients_from_angles(&FamilyAngles::new(0.0, 0.0, 0.0), 0.0);
        let s3 = 1.0 / 3.0_f64.sqrt();
        assert_eq!(c.a1, 0.0);
        assert!(approx(c.b1, s3, 1e-15));
        assert_eq!(c.c1, 0.0);
        assert_eq!(c.a4, 0.0);
        assert!(approx(c.b4, s3, 1e-15));
        assert_eq!(c.c4, 0.0);
        assert!(approx(c.a2, 1.0 / 6.0_f64.sqrt(), 1e-15));
        assert_eq!(c.b2, 0.0);
    }

    #[test]
    fn negative_amplitudes_are_allowed() {
        // gamma in (pi, 3pi/2) puts cos(gamma) < 0
        let c = coefficients_from_angles(&APPENDIX, APPENDIX_OMEGA);
        assert!(c.b4 < 0.0);
    }

    #[test]
    fn basis_state_psi3_at_zero_omega() {
        let c = coefficients_from_angles(&MAIN, 0.0);
        let kets = basis_states(&c);
        // (|100> - |001>)/sqrt(2)
        let inv_sqrt2 = 1.0 / 2.0_f64.sqrt();
        assert!(approx(kets[2].amplitude(4).re, inv_sqrt2, 1e-15));
        assert!(approx(kets[2].amplitude(1).re, -inv_sqrt2, 1e-15));
        assert_eq!(kets[2].amplitude(3), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn basis_states_are_orthonormal_for_any_omega() {
        for &omega in &[0.0, 0.3, MAIN_OMEGA, 1.9, -2.4] {
            let c = coefficients_from_angles(&MAIN, omega);
            let kets = basis_states(&c);
            for j in 0..4 {
                for k in 0..4 {
                    let expected = if j == k { 1.0 } else { 0.0 };
                    let inner = kets[j].inner(&kets[k]);
                    assert!(
                        (inner.re - expected).abs() < 1e-12 && inner.im.abs() < 1e-12,
                        "<psi{}|psi{}> = {inner} at omega {omega}",
                        j + 1,
                        k + 1,
                    );
                }
            }
        }
    }

    #[test]
    fn psi1_norm_is_an_algebraic_identity() {
        let c = coefficients_from_angles(&MAIN, MAIN_OMEGA);
        let n = c.a1 * c.a1 + 3.0 * c.b1 * c.b1 + c.c1 * c.c1;
        assert!(approx(n, 1.0, 1e-12));
    }

    #[test]
    fn quadratic_coefficients_at_reference_points() {
        let (a, b, c) = abc_coefficients(&MAIN);
        assert!(approx(a, 0.0351540126839658, 1e-14));
        assert!(approx(b, -0.0678311654817663, 1e-14));
        assert!(approx(c, 0.0563029522400468, 1e-14));
        assert!(a * a - b * c > 0.0);

        let (a, b, c) = abc_coefficients(&APPENDIX);
        assert!(approx(a, 0.0323356150641418, 1e-14));
        assert!(approx(b, -0.0423422985978717, 1e-14));
        assert!(approx(c, 0.0316425522679755, 1e-14));
    }

    #[test]
    fn vanishing_b1_kills_coeff_a() {
        let angles = FamilyAngles::new(0.4, FRAC_PI_2, 1.1);
        let (a, _, c) = abc_coefficients(&angles);
        let k = coefficients_from_angles(&angles, 0.0);
        assert!(a.abs() < 1e-16);
        assert!(approx(c, k.a4 * k.a1 * k.b4 * k.c1, 1e-16));
    }

    #[test]
    fn a4_and_b4_never_vanish_together() {
        // sin(gamma) and cos(gamma) cannot both be zero
        for i in 0..200 {
            let gamma = -7.0 + 14.0 * i as f64 / 199.0;
            let k = coefficients_from_angles(&FamilyAngles::new(0.3, 0.5, gamma), 0.0);
            assert!(k.a4 * k.a4 + k.b4 * k.b4 > 0.05);
        }
    }

    #[test]
    fn omega_branches_at_reference_points() {
        let sols = solve_omega(&MAIN).unwrap();
        assert_eq!(sols.branches.len(), 4);
        assert!(approx(sols.branches[0], MAIN_OMEGA, 1e-12));
        assert!(approx(sols.discriminant, 0.00505489947829102, 1e-14));
        for &w in &sols.branches {
            assert!(w > -PI && w <= PI);
            assert!(omega_equation_residual(&MAIN, w) <= 1e-10);
        }

        let sols = solve_omega(&APPENDIX).unwrap();
        assert!(approx(sols.branches[0], APPENDIX_OMEGA, 1e-12));
    }

    #[test]
    fn infeasible_angles_are_rejected() {
        let angles = FamilyAngles::new(0.2, 1.4, 2.3);
        match solve_omega(&angles) {
            Err(FamilyError::Infeasible { discriminant }) => {
                assert!(approx(discriminant, -0.0012050678041219034, 1e-12));
            }
            other => panic!("expected Infeasible, got {other:?}"),
        }
    }

    #[test]
    fn degenerate_quadratic_uses_the_linear_root_and_pi_half() {
        // gamma = pi forces a4 = 0 hence C = 0 while A stays finite.
        let angles = FamilyAngles::new(0.3, 0.7, PI);
        let sols = solve_omega(&angles).unwrap();
        assert!(sols.coeff_c.abs() <= 1e-15);
        assert!(approx(sols.branches[0], -0.29185957306154275, 1e-12));
        assert!(approx(sols.branches[1], FRAC_PI_2, 1e-15));
        for &w in &sols.branches {
            assert!(
                omega_equation_residual(&angles, w) <= 1e-10,
                "residual too large at omega {w}"
            );
        }
        // the pi/2 branch carries nonnegative weights (0, 1/3, 1/3)
        let w = solve_weights(&angles, FRAC_PI_2).unwrap();
        assert!(approx(w.p1, 0.0, 1e-12));
        assert!(approx(w.p2, 1.0 / 3.0, 1e-12));
        assert!(approx(w.p4, 1.0 / 3.0, 1e-12));
    }

    #[test]
    fn weights_at_reference_points() {
        let w = solve_weights(&MAIN, MAIN_OMEGA).unwrap();
        assert!(approx(w.p1, 0.0636039242355, 1e-9));
        assert!(approx(w.p2, 0.273733624893, 1e-9));
        assert!(approx(w.p4, 0.388928825978, 1e-9));
        assert!(approx(w.p1 + 2.0 * w.p2 + w.p4, 1.0, 1e-12));
        assert!(approx(w.q, 7.78669642507, 1e-9));

        let w = solve_weights(&APPENDIX, APPENDIX_OMEGA).unwrap();
        assert!(approx(w.p1, 0.033860426221, 1e-9));
        assert!(approx(w.p2, 0.243269476863, 1e-9));
        assert!(approx(w.p4, 0.479600620054, 1e-9));
    }

    #[test]
    fn third_constraint_closes_when_omega_solves_the_quadratic() {
        for angles in [MAIN, APPENDIX] {
            let sols = solve_omega(&angles).unwrap();
            for &omega in &sols.branches {
                let w = solve_weights_any_sign(&angles, omega).unwrap();
                let c = coefficients_from_angles(&angles, omega);
                let residuals = weight_constraint_residuals(&c, &w);
                for r in residuals {
                    assert!(r <= 1e-10, "residual {r} at omega {omega}");
                }
            }
        }
    }

    #[test]
    fn negative_weight_branches_are_gated() {
        // branch 1 at the first reference point carries p4 < 0
        let sols = solve_omega(&MAIN).unwrap();
        let omega = sols.branches[1];
        match solve_weights(&MAIN, omega) {
            Err(FamilyError::InvalidWeights { p4, .. }) => assert!(p4 < 0.0),
            other => panic!("expected InvalidWeights, got {other:?}"),
        }
    }

    #[test]
    fn singular_weight_system_is_reported() {
        // beta = gamma = pi/2 with omega = 0 zeroes an entire row of M.
        let angles = FamilyAngles::new(0.3, FRAC_PI_2, FRAC_PI_2);
        match solve_weights_any_sign(&angles, 0.0) {
            Err(FamilyError::SingularSystem { det, .. }) => assert!(det.abs() < 1e-12),
            other => panic!("expected SingularSystem, got {other:?}"),
        }
    }

    #[test]
    fn positivity_inequalities_match_reference_point() {
        let w = solve_weights(&MAIN, MAIN_OMEGA).unwrap();
        assert!(check_positivity_inequalities(&MAIN, MAIN_OMEGA, w.q));

        // a branch with a negative weight must be rejected
        let sols = solve_omega(&MAIN).unwrap();
        let bad_omega = sols.branches[1];
        let bad = solve_weights_any_sign(&MAIN, bad_omega).unwrap();
        assert!(!bad.nonnegative());
        assert!(!check_positivity_inequalities(&MAIN, bad_omega, bad.q));
    }

    #[test]
    fn positivity_inequalities_agree_with_direct_signs() {
        // deterministic scan over a box that includes q < 0 and cos(alpha) < 0
        let mut checked = 0;
        let n = 12;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let angles = FamilyAngles::new(
                        0.05 + 6.2 * (i as f64 + 0.31) / n as f64,
                        0.05 + 6.2 * (j as f64 + 0.57) / n as f64,
                        0.05 + 6.2 * (k as f64 + 0.83) / n as f64,
                    );
                    let Ok(sols) = solve_omega(&angles) else {
                        continue;
                    };
                    for &omega in &sols.branches {
                        let Ok(w) = solve_weights_any_sign(&angles, omega) else {
                            continue;
                        };
                        // skip knife-edge weights where tolerance conventions differ
                        if w.p1.abs().min(w.p2.abs()).min(w.p4.abs()) < 1e-9 {
                            continue;
                        }
                        checked += 1;
                        assert_eq!(
                            check_positivity_inequalities(&angles, omega, w.q),
                            w.nonnegative(),
                            "disagreement at {angles:?}, omega {omega}",
                        );
                    }
                }
            }
        }
        assert!(checked > 1000, "only {checked} cases exercised");
    }

    #[test]
    fn assemble_reference_state_and_certify() {
        let state = assemble_state(&MAIN, MAIN_OMEGA).unwrap();
        let record = state.certify(&Tolerances::default()).unwrap();
        assert!(record.passed, "failed checks: {:?}", record.checks);
        assert!(record.min_eigenvalue >= -1e-10);
        for r in record.pt_invariance_residuals {
            assert!(r <= 1e-12);
        }
        assert!(record.permutation_residual <= 1e-12);
        // spectrum of the mixture of orthonormal projectors is the weights
        let eigs = eig_hermitian(state.rho.matrix()).unwrap().eigenvalues;
        assert!(approx(eigs[7], 0.388928825978, 1e-9));
        assert!(approx(eigs[4], 0.0636039242355, 1e-9));
        let sum: f64 = eigs.iter().sum();
        assert!(approx(sum, 1.0, 1e-10));
    }

    #[test]
    fn power_iteration_confirms_the_dominant_eigenvalue() {
        // independent route to the top of the spectrum: the dominant
        // eigenvalue of the assembled mixture must be its largest weight
        let state = assemble_state(&MAIN, MAIN_OMEGA).unwrap();
        let m = state.rho.matrix();
        let mut v = vec![Complex64::new(1.0, 0.0); 8];
        for _ in 0..300 {
            let mut next = vec![Complex64::new(0.0, 0.0); 8];
            for (r, out) in next.iter_mut().enumerate() {
                for c in 0..8 {
                    *out += m[(r, c)] * v[c];
                }
            }
            let norm: f64 = next.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            for z in next.iter_mut() {
                *z /= norm;
            }
            v = next;
        }
        // Rayleigh quotient
        let mut mv = vec![Complex64::new(0.0, 0.0); 8];
        for (r, out) in mv.iter_mut().enumerate() {
            for c in 0..8 {
                *out += m[(r, c)] * v[c];
            }
        }
        let lambda: f64 = v
            .iter()
            .zip(mv.iter())
            .map(|(a, b)| (a.conj() * b).re)
            .sum();
        assert!(approx(lambda, state.weights.p4, 1e-12));
        let top = *eig_hermitian(m).unwrap().eigenvalues.last().unwrap();
        assert!(approx(lambda, top, 1e-11));
    }

    #[test]
    fn assemble_propagates_infeasibility() {
        let angles = FamilyAngles::new(0.2, 1.4, 2.3);
        assert!(matches!(
            feasible_states(&angles),
            Err(FamilyError::Infeasible { .. })
        ));
    }

    #[test]
    fn feasible_states_keep_only_nonnegative_branches() {
        let branches = feasible_states(&MAIN).unwrap();
        // branches 0 and 2 describe the same state (omega vs omega + pi)
        assert_eq!(branches.len(), 2);
        let omegas: Vec<f64> = branches.iter().map(|b| b.omega).collect();
        assert!(omegas.iter().any(|&w| approx(w, MAIN_OMEGA, 1e-12)));
        let diff = branches[0]
            .state
            .rho
            .matrix()
            .max_abs_diff(branches[1].state.rho.matrix());
        assert!(diff < 1e-14, "omega and omega+pi should agree: {diff}");
    }

    #[test]
    fn near_degenerate_quadratic_keeps_pt_residual_tight() {
        // regression: with beta and gamma near pi, |C| ~ 1e-6 and the
        // naive (-A - root)/C root loses six digits to cancellation, large
        // enough to break the 1e-12 partial-transpose budget downstream
        let angles = FamilyAngles::new(0.34757600185561216, 3.13718656830989, 3.1380945205434085);
        let solutions = solve_omega(&angles).unwrap();
        for &omega in &solutions.branches {
            assert!(omega_equation_residual(&angles, omega) <= 1e-14);
        }
        for branch in feasible_states(&angles).unwrap() {
            let record = branch.state.certify(&Tolerances::default()).unwrap();
            assert!(
                record.passed,
                "branch {}: {:?}",
                branch.branch, record.checks
            );
        }
    }

    #[test]
    fn maximally_mixed_state_passes_certification() {
        let record = certify(&DensityMatrix::maximally_mixed(), &Tolerances::default()).unwrap();
        assert!(record.passed);
        assert!(approx(record.min_eigenvalue, 0.125, 1e-12));
    }

    #[test]
    fn ghz_state_fails_pt_invariance_and_ppt() {
        let inv_sqrt2 = 1.0 / 2.0_f64.sqrt();
        let ghz = Ket::from_real(&[inv_sqrt2, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, inv_sqrt2]);
        let rho = DensityMatrix::pure(&ghz).unwrap();
        let record = certify(&rho, &Tolerances::default()).unwrap();
        assert!(!record.passed);
        for min_eig in record.pt_min_eigenvalues {
            assert!(approx(min_eig, -0.5, 1e-9), "GHZ PT spectrum has -1/2");
        }
        for residual in record.pt_invariance_residuals {
            assert!(approx(residual, 0.5, 1e-12));
        }
    }
}
