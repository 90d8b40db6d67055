//! Nongeneric parameter families with continua of equilibria: a line
//! segment of two-virus states (beta1 z, (1-beta1) z, 0) and a simplex
//! plane (alpha1 x, alpha2 x, alpha3 x), with attractivity classification,
//! distance-to-set metrics and Lyapunov decay diagnostics.
//!
//! Both builders require unit healing rates. The underlying theory assumes
//! D = I, and rescaling a general system to unit healing moves equilibria
//! consistently but is not known to preserve stability, so the builders
//! refuse rather than rescale.

use crate::equilibria::{self, EquilibriaError};
use crate::model::{self, ModelError, SystemState, TriVirusParams};
use crate::sim::Trajectory;
use crate::spectral::{self, SpectralError, ZERO_BAND};
use nalgebra::{DMatrix, DVector};
use std::fmt;

/// Family points must satisfy the vector field below this.
pub const FAMILY_RESIDUAL_TOL: f64 = 1e-9;
/// Minimum number of samples past the transient needed to fit a decay slope.
pub const MIN_FIT_SAMPLES: usize = 50;
/// Lyapunov values below this are treated as numerically zero.
pub const V_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum FamiliesError {
    Model(ModelError),
    Spectral(SpectralError),
    Equilibria(String),
    /// The virus used to define the shared profile is below threshold.
    BelowThreshold,
    NotIrreducible {
        which: &'static str,
    },
    /// Builders only accept unit healing rates.
    NonIdentityHealing,
    DegenerateConstruction(String),
    ResidualTooLarge {
        location: String,
        value: f64,
    },
    WrongMode(&'static str),
    NotPositiveStart,
    TrajectoryTooShort {
        have: usize,
        need: usize,
    },
    InvariantViolated(String),
}

impl fmt::Display for FamiliesError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FamiliesError::Model(e) => write!(f, "{e}"),
            FamiliesError::Spectral(e) => write!(f, "{e}"),
            FamiliesError::Equilibria(msg) => write!(f, "{msg}"),
            FamiliesError::BelowThreshold => {
                write!(
                    f,
                    "profile virus is below threshold; no shared equilibrium exists"
                )
            }
            FamiliesError::NotIrreducible { which } => {
                write!(f, "matrix {which} is not irreducible")
            }
            FamiliesError::NonIdentityHealing => {
                write!(f, "family builders require unit healing rates (D = I)")
            }
            FamiliesError::DegenerateConstruction(msg) => write!(f, "degenerate family: {msg}"),
            FamiliesError::ResidualTooLarge { location, value } => {
                write!(f, "family point {location} has residual {value:.3e}")
            }
            FamiliesError::WrongMode(msg) => write!(f, "wrong plane mode: {msg}"),
            FamiliesError::NotPositiveStart => {
                write!(
                    f,
                    "diagnostics need a trajectory from a strictly positive start"
                )
            }
            FamiliesError::TrajectoryTooShort { have, need } => {
                write!(
                    f,
                    "trajectory too short to fit: {have} samples past transient, need {need}"
                )
            }
            FamiliesError::InvariantViolated(msg) => write!(f, "invariant violated: {msg}"),
        }
    }
}

impl std::error::Error for FamiliesError {}

impl From<ModelError> for FamiliesError {
    fn from(e: ModelError) -> Self {
        FamiliesError::Model(e)
    }
}

impl From<SpectralError> for FamiliesError {
    fn from(e: SpectralError) -> Self {
        FamiliesError::Spectral(e)
    }
}

impl From<EquilibriaError> for FamiliesError {
    fn from(e: EquilibriaError) -> Self {
        FamiliesError::Equilibria(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Attractivity {
    Attractive,
    Unstable,
    Inconclusive,
}

impl fmt::Display for Attractivity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Attractivity::Attractive => write!(f, "attractive"),
            Attractivity::Unstable => write!(f, "unstable"),
            Attractivity::Inconclusive => write!(f, "inconclusive"),
        }
    }
}

/// Line of equilibria (beta1 z, (1-beta1) z, 0), beta1 in [0,1], for a
/// system with unit healing where viruses 1 and 2 share the profile z.
#[derive(Debug, Clone)]
pub struct LineFamily {
    /// Shared single-virus equilibrium profile, strictly inside (0,1).
    pub z: DVector<f64>,
    /// Row-stochastic-like matrix fixing z: C z = z, rho(C) = 1.
    pub c: DMatrix<f64>,
    pub b2: DMatrix<f64>,
    pub b3: DMatrix<f64>,
    /// rho((I-Z) B3); the line is attractive iff this is below 1.
    pub radius3: f64,
    /// Spectral abscissa of -I + (I-Z) B3, equal to radius3 - 1.
    pub abscissa: f64,
    pub attractivity: Attractivity,
    params: TriVirusParams,
}

impl LineFamily {
    pub fn params(&self) -> &TriVirusParams {
        &self.params
    }

    /// State (beta1 z, (1-beta1) z, 0).
    pub fn state(&self, beta1: f64) -> SystemState {
        debug_assert!((0.0..=1.0).contains(&beta1));
        let n = self.z.len();
        let mut s = SystemState::zeros(3, n);
        s.block_mut(0).copy_from(&(&self.z * beta1));
        s.block_mut(1).copy_from(&(&self.z * (1.0 - beta1)));
        s
    }
}

/// C = diag(z) diag(Mz)^{-1} M: keeps M's zero pattern, fixes z, rho = 1.
pub fn make_stochastic_like_c(
    z: &DVector<f64>,
    m: &DMatrix<f64>,
) -> Result<DMatrix<f64>, FamiliesError> {
    if z.iter().any(|&v| v <= 0.0 || !v.is_finite()) {
        return Err(FamiliesError::DegenerateConstruction(
            "profile z must be strictly positive".into(),
        ));
    }
    if m.nrows() != z.len() || m.ncols() != z.len() {
        return Err(FamiliesError::Model(ModelError::DimensionMismatch(
            format!(
                "pattern matrix is {}x{} but profile has length {}",
                m.nrows(),
                m.ncols(),
                z.len()
            ),
        )));
    }
    if !spectral::is_irreducible(m)? {
        return Err(FamiliesError::NotIrreducible { which: "M" });
    }
    let mz = m * z;
    let mut c = m.clone();
    for i in 0..z.len() {
        if mz[i] <= 0.0 {
            return Err(FamiliesError::DegenerateConstruction(format!(
                "(Mz)_{i} = 0 despite irreducibility check"
            )));
        }
        let scale = z[i] / mz[i];
        for j in 0..z.len() {
            c[(i, j)] *= scale;
        }
    }
    Ok(c)
}

fn shrink_rows(z: &DVector<f64>, m: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = m.clone();
    for i in 0..z.len() {
        let s = 1.0 - z[i];
        for j in 0..m.ncols() {
            out[(i, j)] *= s;
        }
    }
    out
}

fn grow_rows(z: &DVector<f64>, m: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = m.clone();
    for i in 0..z.len() {
        let s = 1.0 - z[i];
        for j in 0..m.ncols() {
            out[(i, j)] /= s;
        }
    }
    out
}

fn field_inf_norm(params: &TriVirusParams, state: &SystemState) -> f64 {
    let f = model::vector_field_unchecked(params, state);
    f.blocks().iter().map(|b| b.amax()).fold(0.0, f64::max)
}

/// Shared profile z of a unit-healing virus with matrix B1, then B2 from
/// the pattern M so that viruses 1 and 2 both fix z, and an arbitrary
/// irreducible B3 whose shrunk radius decides the line's attractivity.
pub fn build_line_family(
    b1: &DMatrix<f64>,
    m: &DMatrix<f64>,
    b3: &DMatrix<f64>,
) -> Result<LineFamily, FamiliesError> {
    for (name, mat) in [("B1", b1), ("B3", b3)] {
        if !spectral::is_irreducible(mat)? {
            return Err(FamiliesError::NotIrreducible { which: name });
        }
    }
    let n = b1.nrows();
    let ones = DVector::from_element(n, 1.0);
    let z =
        equilibria::single_virus_equilibrium(&ones, b1)?.ok_or(FamiliesError::BelowThreshold)?;
    let c = make_stochastic_like_c(&z, m)?;
    let b2 = grow_rows(&z, &c);
    let shrunk3 = shrink_rows(&z, b3);
    let radius3 = spectral::spectral_radius(&shrunk3)?;
    let abscissa = radius3 - 1.0;
    let attractivity = if abscissa < -ZERO_BAND {
        Attractivity::Attractive
    } else if abscissa > ZERO_BAND {
        Attractivity::Unstable
    } else {
        Attractivity::Inconclusive
    };
    let params = TriVirusParams::tri_unit_healing(n, [b1.clone(), b2.clone(), b3.clone()])?;
    let family = LineFamily {
        z,
        c,
        b2,
        b3: b3.clone(),
        radius3,
        abscissa,
        attractivity,
        params,
    };

    let lhs1 = shrink_rows(&family.z, b1) * &family.z - &family.z;
    if lhs1.amax() >= 1e-10 {
        return Err(FamiliesError::InvariantViolated(format!(
            "(-I + (I-Z)B1) z has norm {:.3e}",
            lhs1.amax()
        )));
    }
    let lhs2 = shrink_rows(&family.z, &family.b2) * &family.z - &family.z;
    if lhs2.amax() >= 1e-10 {
        return Err(FamiliesError::InvariantViolated(format!(
            "(I-Z)B2 z - z has norm {:.3e}",
            lhs2.amax()
        )));
    }
    for beta1 in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let r = field_inf_norm(&family.params, &family.state(beta1));
        if r >= FAMILY_RESIDUAL_TOL {
            return Err(FamiliesError::ResidualTooLarge {
                location: format!("line beta1 = {beta1}"),
                value: r,
            });
        }
    }
    Ok(family)
}

/// Plane of equilibria (alpha1 x, alpha2 x, alpha3 x) over the unit
/// simplex, shared profile x.
#[derive(Debug, Clone)]
pub enum PlaneFamily {
    /// All three viruses share one matrix; the plane is anchored at that
    /// virus's endemic profile.
    IdenticalViruses {
        delta: DVector<f64>,
        b: DMatrix<f64>,
        anchor: DVector<f64>,
        params: TriVirusParams,
    },
    /// Distinct matrices that all fix the same profile z.
    GeneralCzHat {
        z: DVector<f64>,
        c: DMatrix<f64>,
        c_hat: DMatrix<f64>,
        b2: DMatrix<f64>,
        b3: DMatrix<f64>,
        params: TriVirusParams,
    },
}

impl PlaneFamily {
    pub fn anchor(&self) -> &DVector<f64> {
        match self {
            PlaneFamily::IdenticalViruses { anchor, .. } => anchor,
            PlaneFamily::GeneralCzHat { z, .. } => z,
        }
    }

    pub fn params(&self) -> &TriVirusParams {
        match self {
            PlaneFamily::IdenticalViruses { params, .. } => params,
            PlaneFamily::GeneralCzHat { params, .. } => params,
        }
    }

    /// State (alpha1 x, alpha2 x, alpha3 x); alpha should lie on the
    /// unit simplex.
    pub fn state(&self, alpha: [f64; 3]) -> SystemState {
        let anchor = self.anchor();
        let n = anchor.len();
        let mut s = SystemState::zeros(3, n);
        for k in 0..3 {
            s.block_mut(k).copy_from(&(anchor * alpha[k]));
        }
        s
    }
}

const SIMPLEX_SAMPLE: [[f64; 3]; 10] = [
    [1.0, 0.0, 0.0],
    [0.0, 1.0, 0.0],
    [0.0, 0.0, 1.0],
    [0.5, 0.5, 0.0],
    [0.5, 0.0, 0.5],
    [0.0, 0.5, 0.5],
    [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
    [0.6, 0.3, 0.1],
    [0.1, 0.6, 0.3],
    [0.3, 0.1, 0.6],
];

fn verify_plane_residuals(family: &PlaneFamily) -> Result<(), FamiliesError> {
    for alpha in SIMPLEX_SAMPLE {
        let r = field_inf_norm(family.params(), &family.state(alpha));
        if r >= FAMILY_RESIDUAL_TOL {
            return Err(FamiliesError::ResidualTooLarge {
                location: format!("plane alpha = ({}, {}, {})", alpha[0], alpha[1], alpha[2]),
                value: r,
            });
        }
    }
    Ok(())
}

/// Three identical copies of one above-threshold virus.
pub fn build_plane_identical(
    delta: &DVector<f64>,
    b: &DMatrix<f64>,
) -> Result<PlaneFamily, FamiliesError> {
    if delta.len() != b.nrows() {
        return Err(FamiliesError::Model(ModelError::DimensionMismatch(
            format!(
                "healing vector has length {} but matrix is {}x{}",
                delta.len(),
                b.nrows(),
                b.ncols()
            ),
        )));
    }
    if delta.iter().any(|&d| (d - 1.0).abs() > 1e-12) {
        return Err(FamiliesError::NonIdentityHealing);
    }
    if !spectral::is_irreducible(b)? {
        return Err(FamiliesError::NotIrreducible { which: "B" });
    }
    let n = b.nrows();
    let ones = DVector::from_element(n, 1.0);
    let anchor =
        equilibria::single_virus_equilibrium(&ones, b)?.ok_or(FamiliesError::BelowThreshold)?;
    let params = TriVirusParams::tri_unit_healing(n, [b.clone(), b.clone(), b.clone()])?;
    let family = PlaneFamily::IdenticalViruses {
        delta: ones,
        b: b.clone(),
        anchor,
        params,
    };
    verify_plane_residuals(&family)?;
    Ok(family)
}

/// Distinct matrices fixing one profile: B2 from pattern M, B3 from
/// pattern MHat. Degenerate (refused) when both patterns yield the same
/// fixed-profile matrix, since then B2 = B3.
pub fn build_plane_cz_hat(
    b1: &DMatrix<f64>,
    m: &DMatrix<f64>,
    m_hat: &DMatrix<f64>,
) -> Result<PlaneFamily, FamiliesError> {
    if !spectral::is_irreducible(b1)? {
        return Err(FamiliesError::NotIrreducible { which: "B1" });
    }
    let n = b1.nrows();
    let ones = DVector::from_element(n, 1.0);
    let z =
        equilibria::single_virus_equilibrium(&ones, b1)?.ok_or(FamiliesError::BelowThreshold)?;
    let c = make_stochastic_like_c(&z, m)?;
    let c_hat = make_stochastic_like_c(&z, m_hat)?;
    let scale = c.amax().max(1.0);
    if (&c_hat - &c).amax() <= 1e-14 * scale {
        return Err(FamiliesError::DegenerateConstruction(
            "the two patterns induce the same matrix, so B2 = B3".into(),
        ));
    }
    let b2 = grow_rows(&z, &c);
    let b3 = grow_rows(&z, &c_hat);
    let params = TriVirusParams::tri_unit_healing(n, [b1.clone(), b2.clone(), b3.clone()])?;
    let family = PlaneFamily::GeneralCzHat {
        z,
        c,
        c_hat,
        b2,
        b3,
        params,
    };
    verify_plane_residuals(&family)?;
    Ok(family)
}

/// Euclidean distance from a state to the line segment, with the
/// minimizing beta1. The minimizer of ||x1 - b z||^2 + ||x2 - (1-b) z||^2
/// is b = z'(x1 - x2)/(2 z'z) + 1/2, clamped to [0,1]; the third block
/// contributes its full norm.
pub fn distance_to_line(family: &LineFamily, state: &SystemState) -> (f64, f64) {
    let z = &family.z;
    let zz = z.norm_squared();
    let beta1 =
        ((state.block(0).dot(z) - state.block(1).dot(z)) / (2.0 * zz) + 0.5).clamp(0.0, 1.0);
    let d2 = (state.block(0) - z * beta1).norm_squared()
        + (state.block(1) - z * (1.0 - beta1)).norm_squared()
        + state.block(2).norm_squared();
    (d2.sqrt(), beta1)
}

/// Euclidean projection of a 3-vector onto the unit simplex.
fn project_to_simplex(v: [f64; 3]) -> [f64; 3] {
    let mut sorted = v;
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut cumulative = 0.0;
    let mut threshold = 0.0;
    for (j, &u) in sorted.iter().enumerate() {
        cumulative += u;
        let t = (cumulative - 1.0) / (j as f64 + 1.0);
        if u - t > 0.0 {
            threshold = t;
        }
    }
    [
        (v[0] - threshold).max(0.0),
        (v[1] - threshold).max(0.0),
        (v[2] - threshold).max(0.0),
    ]
}

/// Euclidean distance from a state to the plane's simplex patch, with the
/// minimizing alpha. The blocks project independently onto the shared
/// profile, and because the three basis directions are orthogonal with
/// equal norm, simplex projection of the per-block coefficients solves the
/// constrained least-squares problem exactly.
pub fn distance_to_plane(family: &PlaneFamily, state: &SystemState) -> (f64, [f64; 3]) {
    let anchor = family.anchor();
    let nn = anchor.norm_squared();
    let raw = [
        state.block(0).dot(anchor) / nn,
        state.block(1).dot(anchor) / nn,
        state.block(2).dot(anchor) / nn,
    ];
    let alpha = project_to_simplex(raw);
    let mut d2 = 0.0;
    for k in 0..3 {
        d2 += (state.block(k) - anchor * alpha[k]).norm_squared();
    }
    (d2.sqrt(), alpha)
}

/// Lyapunov apparatus of the identical-virus plane and its evaluation
/// along a trajectory.
///
/// With Q = I - (I - X) B (X the anchor diagonal), u is the positive left
/// null vector of -Q normalized u'x = 1, P = diag(u_i / x_i), and
/// Qbar = PQ + Q'P is positive semidefinite with null vector x. Each
/// virus's deviation zeta = (I - x u') x^k then satisfies V = zeta' P zeta
/// -> 0 with asymptotic rate at least lambda2 / max_i P_ii.
#[derive(Debug, Clone)]
pub struct PlaneDiagnostics {
    pub u_tilde: DVector<f64>,
    pub p_diag: DVector<f64>,
    pub p_max: f64,
    pub p_min: f64,
    /// Smallest strictly positive eigenvalue of Qbar.
    pub lambda2: f64,
    /// Guaranteed asymptotic decay rate lambda2 / p_max of every V series.
    pub decay_rate: f64,
    pub qbar_eigenvalues: Vec<f64>,
    pub times: Vec<f64>,
    /// V(t) per virus at the trajectory samples.
    pub v_series: [Vec<f64>; 3],
    /// Least-squares slope of log V past the transient, per virus.
    pub fit_slopes: [f64; 3],
    /// Slope negative, or the series sits at the numerical noise floor.
    pub decay_verified: [bool; 3],
    pub max_orthogonality_error: f64,
}

fn affine_fit_slope(ts: &[f64], ys: &[f64]) -> f64 {
    let n = ts.len() as f64;
    let tm = ts.iter().sum::<f64>() / n;
    let ym = ys.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (t, y) in ts.iter().zip(ys) {
        num += (t - tm) * (y - ym);
        den += (t - tm) * (t - tm);
    }
    num / den
}

/// Evaluate the plane Lyapunov apparatus on a trajectory of an
/// identical-virus family started strictly inside the domain.
pub fn plane_diagnostics(
    family: &PlaneFamily,
    trajectory: &Trajectory,
) -> Result<PlaneDiagnostics, FamiliesError> {
    let PlaneFamily::IdenticalViruses { b, anchor, .. } = family else {
        return Err(FamiliesError::WrongMode(
            "Lyapunov diagnostics are defined for the identical-virus plane only",
        ));
    };
    let first = trajectory
        .states
        .first()
        .ok_or(FamiliesError::TrajectoryTooShort {
            have: 0,
            need: MIN_FIT_SAMPLES,
        })?;
    if first
        .blocks()
        .iter()
        .any(|blk| blk.iter().any(|&v| v <= 0.0))
    {
        return Err(FamiliesError::NotPositiveStart);
    }

    let n = anchor.len();
    // Q = I - (I - X) B is a singular irreducible M-matrix with right null
    // vector equal to the anchor
    let mut q = shrink_rows(anchor, b) * -1.0;
    for i in 0..n {
        q[(i, i)] += 1.0;
    }
    let neg_q_t = (-&q).transpose();
    let mut u = spectral::positive_null_vector(&neg_q_t)?;
    u /= u.dot(anchor);
    let p_diag = DVector::from_fn(n, |i, _| u[i] / anchor[i]);
    let p_max = p_diag.max();
    let p_min = p_diag.min();

    let mut qbar = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            qbar[(i, j)] = p_diag[i] * q[(i, j)] + q[(j, i)] * p_diag[j];
        }
    }
    // symmetrize away rounding before the symmetric eigensolver
    let qbar = (&qbar + qbar.transpose()) * 0.5;
    let mut eigs: Vec<f64> = qbar
        .clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .copied()
        .collect();
    eigs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    if eigs[0].abs() >= 1e-9 {
        return Err(FamiliesError::InvariantViolated(format!(
            "Qbar smallest eigenvalue is {:.3e}, expected 0",
            eigs[0]
        )));
    }
    let null_residual = (&qbar * anchor).amax();
    if null_residual >= 1e-9 * qbar.amax().max(1.0) {
        return Err(FamiliesError::InvariantViolated(format!(
            "Qbar does not annihilate the anchor (residual {null_residual:.3e})"
        )));
    }
    let lambda2 = eigs[1];
    if lambda2 <= 1e-9 {
        return Err(FamiliesError::InvariantViolated(format!(
            "second Qbar eigenvalue {lambda2:.3e} is not strictly positive"
        )));
    }

    let mut v_series: [Vec<f64>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    let mut max_orth: f64 = 0.0;
    for state in &trajectory.states {
        for k in 0..3 {
            let xk = state.block(k);
            let zeta = xk - anchor * u.dot(xk);
            max_orth = max_orth.max(u.dot(&zeta).abs());
            let v: f64 = (0..n).map(|i| p_diag[i] * zeta[i] * zeta[i]).sum();
            v_series[k].push(v);
        }
    }
    if max_orth >= 1e-9 {
        return Err(FamiliesError::InvariantViolated(format!(
            "projected deviation not orthogonal to u (max error {max_orth:.3e})"
        )));
    }

    let t_final = *trajectory.times.last().unwrap();
    let t0 = 0.2 * t_final;
    let tail: Vec<usize> = (0..trajectory.times.len())
        .filter(|&i| trajectory.times[i] >= t0)
        .collect();
    if tail.len() < MIN_FIT_SAMPLES {
        return Err(FamiliesError::TrajectoryTooShort {
            have: tail.len(),
            need: MIN_FIT_SAMPLES,
        });
    }

    let mut fit_slopes = [0.0; 3];
    let mut decay_verified = [false; 3];
    for k in 0..3 {
        let mut ts = Vec::new();
        let mut logs = Vec::new();
        let mut tail_max: f64 = 0.0;
        for &i in &tail {
            let v = v_series[k][i];
            tail_max = tail_max.max(v);
            if v > 1e-300 {
                ts.push(trajectory.times[i]);
                logs.push(v.ln());
            }
        }
        if tail_max < V_FLOOR {
            // already at the noise floor; nothing meaningful to fit
            fit_slopes[k] = 0.0;
            decay_verified[k] = true;
        } else {
            if ts.len() < 2 {
                return Err(FamiliesError::TrajectoryTooShort {
                    have: ts.len(),
                    need: 2,
                });
            }
            let slope = affine_fit_slope(&ts, &logs);
            fit_slopes[k] = slope;
            decay_verified[k] = slope < 0.0;
        }
    }

    Ok(PlaneDiagnostics {
        u_tilde: u,
        p_diag,
        p_max,
        p_min,
        lambda2,
        decay_rate: lambda2 / p_max,
        qbar_eigenvalues: eigs,
        times: trajectory.times.clone(),
        v_series,
        fit_slopes,
        decay_verified,
        max_orthogonality_error: max_orth,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{self, SimConfig};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cycle(n: usize, w: f64) -> DMatrix<f64> {
        DMatrix::from_fn(n, n, |i, j| if j == (i + 1) % n { w } else { 0.0 })
    }

    #[test]
    fn stochastic_like_fixes_the_profile() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            let n = rng.gen_range(2..6);
            let mut m = DMatrix::from_fn(n, n, |_, _| {
                if rng.gen_bool(0.5) {
                    rng.gen_range(0.1..2.0)
                } else {
                    0.0
                }
            });
            for i in 0..n {
                m[(i, (i + 1) % n)] += 0.5;
            }
            let z = DVector::from_fn(n, |_, _| rng.gen_range(0.05..0.9));
            let c = make_stochastic_like_c(&z, &m).unwrap();
            assert!((&c * &z - &z).amax() < 1e-14 * z.amax().max(1.0));
            assert!((spectral::spectral_radius(&c).unwrap() - 1.0).abs() < 1e-10);
            for i in 0..n {
                for j in 0..n {
                    assert_eq!(c[(i, j)] == 0.0, m[(i, j)] == 0.0);
                }
            }
        }
    }

    #[test]
    fn already_fixing_pattern_is_untouched() {
        let z = DVector::from_element(3, 0.25);
        let m = make_stochastic_like_c(&z, &(cycle(3, 1.0) + DMatrix::identity(3, 3))).unwrap();
        let c = make_stochastic_like_c(&z, &m).unwrap();
        assert!((&c - &m).amax() < 1e-15);
    }

    #[test]
    fn uniform_cycle_gives_uniform_profile() {
        // constant row sums r give z = (1 - 1/r) 1 exactly
        let b1 = cycle(4, 1.5);
        let family = build_line_family(&b1, &cycle(4, 1.0), &cycle(4, 1.2)).unwrap();
        for i in 0..4 {
            assert!((family.z[i] - 1.0 / 3.0).abs() < 1e-10);
        }
    }

    #[test]
    fn line_points_are_equilibria_everywhere() {
        let family = build_line_family(
            &cycle(4, 1.5),
            &(cycle(4, 1.0) + DMatrix::identity(4, 4)),
            &cycle(4, 0.9),
        )
        .unwrap();
        for step in 0..=100 {
            let beta1 = step as f64 / 100.0;
            let r = field_inf_norm(family.params(), &family.state(beta1));
            assert!(r < 1e-9, "residual {r:.3e} at beta1 = {beta1}");
        }
    }

    #[test]
    fn attractivity_tracks_third_virus_radius() {
        let b1 = cycle(4, 1.5);
        let m = cycle(4, 1.0);
        let weak = build_line_family(&b1, &m, &cycle(4, 1.2)).unwrap();
        // (I-Z) scales the 1.2-cycle by 2/3: radius 0.8 < 1
        assert_eq!(weak.attractivity, Attractivity::Attractive);
        assert!((weak.radius3 - 0.8).abs() < 1e-10);
        let strong = build_line_family(&b1, &m, &cycle(4, 2.4)).unwrap();
        assert_eq!(strong.attractivity, Attractivity::Unstable);
        assert!((strong.radius3 - 1.6).abs() < 1e-10);
        let marginal = build_line_family(&b1, &m, &cycle(4, 1.5)).unwrap();
        assert_eq!(marginal.attractivity, Attractivity::Inconclusive);
    }

    #[test]
    fn attractive_line_jacobian_has_single_null_direction() {
        let family = build_line_family(
            &cycle(4, 1.5),
            &(cycle(4, 1.0) + DMatrix::identity(4, 4)),
            &cycle(4, 0.9),
        )
        .unwrap();
        assert_eq!(family.attractivity, Attractivity::Attractive);
        for step in 0..=10 {
            let beta1 = step as f64 / 10.0;
            let jac = model::jacobian(family.params(), &family.state(beta1)).unwrap();
            let eigs = spectral::eigenvalues(&jac).unwrap();
            let near_zero = eigs.iter().filter(|l| l.norm() < 1e-7).count();
            let decaying = eigs.iter().filter(|l| l.re < -1e-7).count();
            assert_eq!(near_zero, 1, "beta1 = {beta1}");
            assert_eq!(decaying, eigs.len() - 1, "beta1 = {beta1}");
        }
    }

    #[test]
    fn refuses_non_unit_healing() {
        let b = cycle(3, 2.0) + DMatrix::from_element(3, 3, 0.2);
        let delta = DVector::from_vec(vec![1.0, 2.0, 1.0]);
        assert_eq!(
            build_plane_identical(&delta, &b).unwrap_err(),
            FamiliesError::NonIdentityHealing
        );
    }

    #[test]
    fn plane_distance_recovers_orthogonal_perturbation() {
        let b = cycle(3, 2.0) + DMatrix::from_element(3, 3, 0.2);
        let family = build_plane_identical(&DVector::from_element(3, 1.0), &b).unwrap();
        let center = family.state([1.0 / 3.0; 3]);
        let (d0, a0) = distance_to_plane(&family, &center);
        assert!(d0 < 1e-12);
        assert!(a0
            .iter()
            .zip(&[1.0 / 3.0; 3])
            .all(|(a, b)| (a - b).abs() < 1e-9));

        // perturbation orthogonal to the plane's two tangent directions
        let anchor = family.anchor().clone();
        let n = anchor.len();
        let dir1 = {
            let mut v = DVector::zeros(3 * n);
            v.rows_mut(0, n).copy_from(&anchor);
            v.rows_mut(n, n).copy_from(&(-&anchor));
            v
        };
        let dir2 = {
            let mut v = DVector::zeros(3 * n);
            v.rows_mut(0, n).copy_from(&anchor);
            v.rows_mut(2 * n, n).copy_from(&(-&anchor));
            // orthogonalize against dir1 so the two removals below commute
            let overlap = v.dot(&dir1) / dir1.norm_squared();
            v - &dir1 * overlap
        };
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut perturbation = DVector::from_fn(3 * n, |_, _| rng.gen_range(-1.0..1.0));
        perturbation -= &dir1 * (perturbation.dot(&dir1) / dir1.norm_squared());
        perturbation -= &dir2 * (perturbation.dot(&dir2) / dir2.norm_squared());
        perturbation *= 0.01 / perturbation.norm();
        let moved = SystemState::from_flat(3, n, &(center.flat() + perturbation));
        let (d, _) = distance_to_plane(&family, &moved);
        assert!((d - 0.01).abs() < 1e-9, "distance {d}");
    }

    #[test]
    fn line_distance_zero_on_segment_and_clamped_beyond() {
        let family = build_line_family(&cycle(4, 1.5), &cycle(4, 1.0), &cycle(4, 0.9)).unwrap();
        let (d, beta1) = distance_to_line(&family, &family.state(0.5));
        assert!(d < 1e-12);
        assert!((beta1 - 0.5).abs() < 1e-12);
        // a state past the beta1 = 1 end projects onto the endpoint
        let n = family.z.len();
        let mut s = SystemState::zeros(3, n);
        s.block_mut(0).copy_from(&(&family.z * 1.2));
        let (_, clamped) = distance_to_line(&family, &s);
        assert_eq!(clamped, 1.0);
    }

    #[test]
    fn same_pattern_scaled_is_degenerate() {
        let b1 = cycle(4, 1.5);
        let m = cycle(4, 1.0) + DMatrix::identity(4, 4);
        let err = build_plane_cz_hat(&b1, &m, &(&m * 2.0)).unwrap_err();
        assert!(matches!(err, FamiliesError::DegenerateConstruction(_)));
    }

    #[test]
    fn identical_viruses_special_case_of_general_plane() {
        // pattern (I-Z)B1 already fixes z, so C = M and B2 = B1
        let b1 = cycle(4, 1.5) + DMatrix::from_element(4, 4, 0.1);
        let ones = DVector::from_element(4, 1.0);
        let z = equilibria::single_virus_equilibrium(&ones, &b1)
            .unwrap()
            .unwrap();
        let m = shrink_rows(&z, &b1);
        let c = make_stochastic_like_c(&z, &m).unwrap();
        assert!((&c - &m).amax() < 1e-13);
        let b2 = grow_rows(&z, &c);
        assert!((&b2 - &b1).amax() < 1e-12);
    }

    #[test]
    fn diagnostics_decay_on_identical_virus_run() {
        let b = cycle(3, 2.0) + DMatrix::from_element(3, 3, 0.3);
        let family = build_plane_identical(&DVector::from_element(3, 1.0), &b).unwrap();
        let x0 = sim::random_initial_condition(3, 77);
        // this system reaches the derivative threshold within ~30 time
        // units; sample densely enough to leave 50 points past the transient
        let cfg = SimConfig {
            sample_interval: 0.125,
            ..SimConfig::default()
        };
        let traj = sim::integrate(family.params(), &x0, &cfg).unwrap();
        let diag = plane_diagnostics(&family, &traj).unwrap();
        assert!(diag.lambda2 > 0.0);
        assert!(diag.p_min > 0.0 && diag.p_min <= diag.p_max);
        assert!((diag.u_tilde.dot(family.anchor()) - 1.0).abs() < 1e-12);
        assert!(diag.decay_verified.iter().all(|&ok| ok));
        for k in 0..3 {
            assert!(diag.v_series[k].last().unwrap() < &1e-12);
        }
        assert!(diag.max_orthogonality_error < 1e-9);
    }

    #[test]
    fn diagnostics_on_plane_start_stay_at_floor() {
        let b = cycle(3, 2.0) + DMatrix::from_element(3, 3, 0.3);
        let family = build_plane_identical(&DVector::from_element(3, 1.0), &b).unwrap();
        let x0 = family.state([0.5, 0.3, 0.2]);
        let cfg = SimConfig {
            horizon: 120.0,
            eps_conv: 1e-300,
            ..SimConfig::default()
        };
        let traj = sim::integrate(family.params(), &x0, &cfg).unwrap();
        let diag = plane_diagnostics(&family, &traj).unwrap();
        for k in 0..3 {
            assert!(diag.v_series[k].iter().all(|&v| v < 1e-12));
        }
        assert!(diag.decay_verified.iter().all(|&ok| ok));
    }

    #[test]
    fn diagnostics_refuse_boundary_start_and_short_runs() {
        let b = cycle(3, 2.0) + DMatrix::from_element(3, 3, 0.3);
        let family = build_plane_identical(&DVector::from_element(3, 1.0), &b).unwrap();
        let x0 = family.state([0.5, 0.5, 0.0]);
        let traj = sim::integrate(family.params(), &x0, &SimConfig::default()).unwrap();
        assert_eq!(
            plane_diagnostics(&family, &traj).unwrap_err(),
            FamiliesError::NotPositiveStart
        );

        let interior = sim::random_initial_condition(3, 5);
        let short_cfg = SimConfig {
            horizon: 20.0,
            eps_conv: 1e-300,
            ..SimConfig::default()
        };
        let short = sim::integrate(family.params(), &interior, &short_cfg).unwrap();
        assert!(matches!(
            plane_diagnostics(&family, &short),
            Err(FamiliesError::TrajectoryTooShort { .. })
        ));
    }
}
