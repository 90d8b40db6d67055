//! Trajectory integration with domain guards, convergence detection, the
//! randomized interior initial condition, and limit classification.
//!
//! The integrator is an embedded Dormand-Prince 5(4) pair with PI step
//! control and fifth-order dense output. The domain is forward invariant, so
//! accepted states may only be clamped back by roundoff-sized amounts; any
//! larger excursion aborts the run as an integrator failure.

use crate::equilibria::{Equilibrium, EquilibriumKind};
use crate::families::{self, LineFamily, PlaneFamily};
use crate::model::{self, DomainViolation, SystemState, TriVirusParams};
use nalgebra::DVector;
use rand::distributions::OpenClosed01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::fmt;
use std::io::{self, Write};

/// Limits recorded farther than this from every known target are novel.
pub const NOVEL_LIMIT_TOL: f64 = 1e-4;

/// Roundoff slack when clamping accepted integration states.
const GUARD_TOL: f64 = 1e-12;

/// Slack for interpolated output samples; dense output carries its own
/// interpolation error on top of the step tolerance.
const SAMPLE_CLAMP_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub enum SimError {
    OutsideDomain(Vec<DomainViolation>),
    Model(model::ModelError),
    BadConfig(String),
    /// classify_limit requires a trajectory that terminated as converged.
    NotConverged,
}

impl fmt::Display for SimError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SimError::OutsideDomain(v) => {
                write!(f, "initial state outside domain ({} violations)", v.len())
            }
            SimError::Model(e) => write!(f, "{e}"),
            SimError::BadConfig(msg) => write!(f, "bad simulation config: {msg}"),
            SimError::NotConverged => write!(f, "trajectory did not converge"),
        }
    }
}

impl std::error::Error for SimError {}

impl From<model::ModelError> for SimError {
    fn from(e: model::ModelError) -> Self {
        SimError::Model(e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TerminationReason {
    /// Derivative stayed below eps_conv for a full window.
    Converged,
    HorizonReached,
    /// The state left the domain beyond guard tolerance or the step size
    /// underflowed; both indicate integrator failure on this problem.
    GuardTripped,
}

impl fmt::Display for TerminationReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TerminationReason::Converged => write!(f, "converged"),
            TerminationReason::HorizonReached => write!(f, "horizon reached"),
            TerminationReason::GuardTripped => write!(f, "guard tripped"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub rtol: f64,
    pub atol: f64,
    pub horizon: f64,
    /// Convergence window: the derivative must stay below eps_conv this long.
    pub window: f64,
    pub eps_conv: f64,
    pub sample_interval: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            rtol: 1e-8,
            atol: 1e-10,
            horizon: 2000.0,
            window: 10.0,
            eps_conv: 1e-10,
            sample_interval: 1.0,
        }
    }
}

impl SimConfig {
    pub fn with_horizon(horizon: f64) -> Self {
        SimConfig {
            horizon,
            ..SimConfig::default()
        }
    }

    fn validate(&self) -> Result<(), SimError> {
        let fields = [
            ("rtol", self.rtol),
            ("atol", self.atol),
            ("horizon", self.horizon),
            ("window", self.window),
            ("eps_conv", self.eps_conv),
            ("sample_interval", self.sample_interval),
        ];
        for (name, v) in fields {
            if !v.is_finite() || v <= 0.0 {
                return Err(SimError::BadConfig(format!(
                    "{name} = {v}, must be positive"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LimitClassification {
    Equilibrium {
        index: usize,
        kind: EquilibriumKind,
        distance: f64,
    },
    Line {
        beta1: f64,
        distance: f64,
    },
    Plane {
        alpha: [f64; 3],
        distance: f64,
    },
    Novel {
        nearest_distance: f64,
    },
}

impl fmt::Display for LimitClassification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LimitClassification::Equilibrium { kind, distance, .. } => {
                write!(f, "equilibrium {kind} at distance {distance:.3e}")
            }
            LimitClassification::Line { beta1, distance } => {
                write!(
                    f,
                    "line family at beta1 = {beta1:.6} (distance {distance:.3e})"
                )
            }
            LimitClassification::Plane { alpha, distance } => write!(
                f,
                "plane family at alpha = ({:.6}, {:.6}, {:.6}) (distance {distance:.3e})",
                alpha[0], alpha[1], alpha[2]
            ),
            LimitClassification::Novel { nearest_distance } => {
                write!(
                    f,
                    "novel limit (nearest known target {nearest_distance:.3e} away)"
                )
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<SystemState>,
    pub termination: TerminationReason,
    pub limit: Option<LimitClassification>,
    /// Infinity norm of the vector field at the final recorded state.
    pub final_derivative_norm: f64,
}

impl Trajectory {
    pub fn final_state(&self) -> &SystemState {
        self.states
            .last()
            .expect("trajectory records at least the initial state")
    }

    pub fn final_time(&self) -> f64 {
        *self
            .times
            .last()
            .expect("trajectory records at least the initial state")
    }

    /// Plot-ready CSV: header `t,x1_1..x1_n,...`, 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        let m = self.states[0].virus_count();
        let n = self.states[0].node_count();
        write!(w, "t")?;
        for k in 1..=m {
            for i in 1..=n {
                write!(w, ",x{k}_{i}")?;
            }
        }
        writeln!(w)?;
        for (t, state) in self.times.iter().zip(&self.states) {
            write!(w, "{t:.16e}")?;
            for k in 0..m {
                for i in 0..n {
                    write!(w, ",{:.16e}", state.block(k)[i])?;
                }
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

// Dormand-Prince 5(4) tableau. The time nodes are omitted: the field is
// autonomous, so stages never need the intermediate times.
const A21: f64 = 0.2;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
// Difference between the 5th-order weights and the embedded 4th-order ones.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
// Dense-output weights.
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;
// PI controller (order-5 exponent with mild damping).
const SAFE: f64 = 0.9;
const BETA: f64 = 0.04;
const EXPO1: f64 = 0.2 - BETA * 0.75;
const FAC_SHRINK_MAX: f64 = 0.2;
const FAC_GROW_MAX: f64 = 10.0;

/// Clamp roundoff-sized domain excursions in place. Returns false if any
/// excursion exceeds `tol` (the state is then left untouched mid-clamp and
/// the caller must abort).
fn clamp_into_domain(y: &mut DVector<f64>, blocks: usize, n: usize, tol: f64) -> bool {
    for v in y.iter_mut() {
        if *v < 0.0 {
            if *v < -tol {
                return false;
            }
            *v = 0.0;
        } else if *v > 1.0 {
            if *v > 1.0 + tol {
                return false;
            }
            *v = 1.0;
        }
    }
    for i in 0..n {
        let total: f64 = (0..blocks).map(|k| y[k * n + i]).sum();
        if total > 1.0 {
            if total > 1.0 + tol {
                return false;
            }
            let scale = 1.0 / total;
            for k in 0..blocks {
                y[k * n + i] *= scale;
            }
        }
    }
    true
}

pub fn integrate(
    params: &TriVirusParams,
    x0: &SystemState,
    cfg: &SimConfig,
) -> Result<Trajectory, SimError> {
    cfg.validate()?;
    if params.virus_count() != x0.virus_count() || params.node_count() != x0.node_count() {
        return Err(SimError::Model(model::ModelError::DimensionMismatch(
            format!(
                "params {}x{}, initial state {}x{}",
                params.virus_count(),
                params.node_count(),
                x0.virus_count(),
                x0.node_count()
            ),
        )));
    }
    let violations = model::validate_state(x0, model::DOMAIN_TOL);
    if !violations.is_empty() {
        return Err(SimError::OutsideDomain(violations));
    }

    // Pin exactly-zero virus blocks: the subspace x^k = 0 is invariant and
    // must stay invariant to roundoff, so those blocks leave the integration.
    let m_full = params.virus_count();
    let n = params.node_count();
    let live: Vec<usize> = (0..m_full).filter(|&k| x0.block(k).amax() > 0.0).collect();
    let expand = |y: &DVector<f64>| -> SystemState {
        let mut full = SystemState::zeros(m_full, n);
        for (slot, &k) in live.iter().enumerate() {
            full.block_mut(k).copy_from(&y.rows(slot * n, n));
        }
        full
    };

    if live.is_empty() {
        return Ok(Trajectory {
            times: vec![0.0],
            states: vec![x0.clone()],
            termination: TerminationReason::Converged,
            limit: None,
            final_derivative_norm: 0.0,
        });
    }

    let sub = params.restrict(&live);
    let m = live.len();
    let dim = m * n;
    let mut y = DVector::zeros(dim);
    for (slot, &k) in live.iter().enumerate() {
        y.rows_mut(slot * n, n).copy_from(x0.block(k));
    }

    let f = |state: &DVector<f64>, out: &mut DVector<f64>| model::derivative_flat(&sub, state, out);

    let mut k1 = DVector::zeros(dim);
    let mut k2 = DVector::zeros(dim);
    let mut k3 = DVector::zeros(dim);
    let mut k4 = DVector::zeros(dim);
    let mut k5 = DVector::zeros(dim);
    let mut k6 = DVector::zeros(dim);
    let mut k7 = DVector::zeros(dim);
    let mut stage = DVector::zeros(dim);
    f(&y, &mut k1);

    let mut times = vec![0.0];
    let mut states = vec![expand(&y)];
    let mut sample_idx: u64 = 1;

    let mut t = 0.0f64;
    // Two ceilings on the step. Half the window, so the convergence test
    // sees at least two derivative evaluations per window. And 2/L with L a
    // Gershgorin bound on the Jacobian over the domain: an explicit method
    // left to the error controller alone rides its stability boundary near
    // equilibria and the iterate then hovers at the tolerance floor instead
    // of decaying through eps_conv.
    let lipschitz = (0..m)
        .map(|k| {
            let row_max = (0..n)
                .map(|i| sub.beta(k).row(i).iter().map(|v| v.abs()).sum::<f64>())
                .fold(0.0, f64::max);
            sub.delta(k).amax() + (1.0 + m as f64) * row_max
        })
        .fold(0.0, f64::max);
    let h_stab = if lipschitz > 0.0 {
        2.0 / lipschitz
    } else {
        f64::INFINITY
    };
    let h_cap = (cfg.window * 0.5).min(h_stab);
    let mut h = initial_step(&f, &y, &k1, cfg).min(h_cap).min(cfg.horizon);
    let mut fac_old: f64 = 1e-4;
    let mut last_rejected = false;
    let mut below_since: Option<f64> = None;
    if k1.amax() < cfg.eps_conv {
        below_since = Some(0.0);
    }

    let mut termination = None;
    let max_steps = 50_000_000u64;
    let mut steps = 0u64;
    while termination.is_none() {
        steps += 1;
        if steps > max_steps || h < 1e-13 * t.abs().max(1.0) {
            termination = Some(TerminationReason::GuardTripped);
            break;
        }
        let h_left = cfg.horizon - t;
        if h > h_left {
            h = h_left;
        }

        stage.copy_from(&y);
        stage.axpy(h * A21, &k1, 1.0);
        f(&stage, &mut k2);
        stage.copy_from(&y);
        stage.axpy(h * A31, &k1, 1.0);
        stage.axpy(h * A32, &k2, 1.0);
        f(&stage, &mut k3);
        stage.copy_from(&y);
        stage.axpy(h * A41, &k1, 1.0);
        stage.axpy(h * A42, &k2, 1.0);
        stage.axpy(h * A43, &k3, 1.0);
        f(&stage, &mut k4);
        stage.copy_from(&y);
        stage.axpy(h * A51, &k1, 1.0);
        stage.axpy(h * A52, &k2, 1.0);
        stage.axpy(h * A53, &k3, 1.0);
        stage.axpy(h * A54, &k4, 1.0);
        f(&stage, &mut k5);
        stage.copy_from(&y);
        stage.axpy(h * A61, &k1, 1.0);
        stage.axpy(h * A62, &k2, 1.0);
        stage.axpy(h * A63, &k3, 1.0);
        stage.axpy(h * A64, &k4, 1.0);
        stage.axpy(h * A65, &k5, 1.0);
        f(&stage, &mut k6);
        let mut y_new = y.clone();
        y_new.axpy(h * A71, &k1, 1.0);
        y_new.axpy(h * A73, &k3, 1.0);
        y_new.axpy(h * A74, &k4, 1.0);
        y_new.axpy(h * A75, &k5, 1.0);
        y_new.axpy(h * A76, &k6, 1.0);
        f(&y_new, &mut k7);

        let mut err_sq = 0.0;
        for i in 0..dim {
            let e =
                h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let scale = cfg.atol + cfg.rtol * y[i].abs().max(y_new[i].abs());
            err_sq += (e / scale) * (e / scale);
        }
        let err = (err_sq / dim as f64).sqrt();

        let fac11 = err.powf(EXPO1);
        if err > 1.0 {
            // reject: shrink without PI memory
            h /= (fac11 / SAFE).min(1.0 / FAC_SHRINK_MAX);
            last_rejected = true;
            continue;
        }

        let t_new = t + h;
        if !clamp_into_domain(&mut y_new, m, n, GUARD_TOL) {
            termination = Some(TerminationReason::GuardTripped);
            break;
        }
        // FSAL: k7 doubles as the next step's k1. Clamping may have moved
        // y_new by roundoff; the derivative of the clamped state is what the
        // convergence test must see, so refresh it.
        f(&y_new, &mut k7);

        // dense output across [t, t_new] for the sample grid
        let mut next_sample = sample_idx as f64 * cfg.sample_interval;
        if next_sample <= t_new {
            let rcont2 = &y_new - &y;
            let rcont3 = &k1 * h - &rcont2;
            let rcont4 = &rcont2 - &k7 * h - &rcont3;
            let rcont5 = (&k1 * D1 + &k3 * D3 + &k4 * D4 + &k5 * D5 + &k6 * D6 + &k7 * D7) * h;
            while next_sample <= t_new {
                let theta = (next_sample - t) / h;
                let theta1 = 1.0 - theta;
                let mut interp = &rcont4 + &rcont5 * theta1;
                interp *= theta;
                interp += &rcont3;
                interp *= theta1;
                interp += &rcont2;
                interp *= theta;
                interp += &y;
                if !clamp_into_domain(&mut interp, m, n, SAMPLE_CLAMP_TOL) {
                    termination = Some(TerminationReason::GuardTripped);
                    break;
                }
                if next_sample > *times.last().unwrap() {
                    times.push(next_sample);
                    states.push(expand(&interp));
                }
                sample_idx += 1;
                next_sample = sample_idx as f64 * cfg.sample_interval;
            }
            if termination.is_some() {
                break;
            }
        }

        t = t_new;
        std::mem::swap(&mut y, &mut y_new);
        std::mem::swap(&mut k1, &mut k7);

        let derivative_norm = k1.amax();
        if derivative_norm < cfg.eps_conv {
            let since = *below_since.get_or_insert(t);
            if t - since >= cfg.window {
                termination = Some(TerminationReason::Converged);
                break;
            }
        } else {
            below_since = None;
        }
        if t >= cfg.horizon {
            termination = Some(TerminationReason::HorizonReached);
            break;
        }

        // PI step-size update
        let fac = (fac11 / fac_old.powf(BETA) / SAFE)
            .max(1.0 / FAC_GROW_MAX)
            .min(1.0 / FAC_SHRINK_MAX);
        let mut h_new = h / fac;
        if last_rejected {
            h_new = h_new.min(h);
            last_rejected = false;
        }
        h = h_new.min(h_cap);
        fac_old = err.max(1e-4);
    }

    let termination = termination.unwrap();
    if t > *times.last().unwrap() {
        times.push(t);
        states.push(expand(&y));
    }
    let mut deriv = DVector::zeros(dim);
    f(&y, &mut deriv);
    Ok(Trajectory {
        times,
        states,
        termination,
        limit: None,
        final_derivative_norm: deriv.amax(),
    })
}

/// Standard two-stage curvature estimate for the opening step size.
fn initial_step(
    f: &impl Fn(&DVector<f64>, &mut DVector<f64>),
    y0: &DVector<f64>,
    f0: &DVector<f64>,
    cfg: &SimConfig,
) -> f64 {
    let dim = y0.len();
    let scaled_rms = |v: &DVector<f64>| {
        let mut acc = 0.0;
        for i in 0..dim {
            let sk = cfg.atol + cfg.rtol * y0[i].abs();
            acc += (v[i] / sk) * (v[i] / sk);
        }
        (acc / dim as f64).sqrt()
    };
    let d0 = scaled_rms(y0);
    let d1 = scaled_rms(f0);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * (d0 / d1)
    };
    let mut y1 = y0.clone();
    y1.axpy(h0, f0, 1.0);
    let mut f1 = DVector::zeros(dim);
    f(&y1, &mut f1);
    let d2 = scaled_rms(&(&f1 - f0)) / h0;
    let der2 = d1.max(d2);
    let h1 = if der2 <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / der2).powf(0.2)
    };
    (100.0 * h0).min(h1)
}

/// The standard randomized interior initial condition: per node, four
/// uniform (0,1] draws p1..p4 normalized by their sum; virus k receives
/// p_k / sum and the remainder is the susceptible share. Strictly interior
/// by construction and deterministic per seed.
pub fn random_initial_condition(n: usize, seed: u64) -> SystemState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = SystemState::zeros(3, n);
    for i in 0..n {
        let draws: [f64; 4] = [
            rng.sample(OpenClosed01),
            rng.sample(OpenClosed01),
            rng.sample(OpenClosed01),
            rng.sample(OpenClosed01),
        ];
        let sum: f64 = draws.iter().sum();
        for k in 0..3 {
            state.block_mut(k)[i] = draws[k] / sum;
        }
    }
    state
}

/// Known attractors to compare a converged trajectory against.
#[derive(Default)]
pub struct KnownTargets<'a> {
    pub equilibria: &'a [Equilibrium],
    pub line: Option<&'a LineFamily>,
    pub plane: Option<&'a PlaneFamily>,
}

/// Match the final state of a converged trajectory against known equilibria
/// (infinity distance) and families (Euclidean distance to the constrained
/// set). Anything farther than NOVEL_LIMIT_TOL from every target is novel.
pub fn classify_limit(
    trajectory: &Trajectory,
    targets: &KnownTargets,
) -> Result<LimitClassification, SimError> {
    if trajectory.termination != TerminationReason::Converged {
        return Err(SimError::NotConverged);
    }
    let x = trajectory.final_state();
    let mut best: Option<LimitClassification> = None;
    let mut best_distance = f64::INFINITY;
    for (index, eq) in targets.equilibria.iter().enumerate() {
        let d = x.max_distance(&eq.state);
        if d < best_distance {
            best_distance = d;
            best = Some(LimitClassification::Equilibrium {
                index,
                kind: eq.kind,
                distance: d,
            });
        }
    }
    if let Some(line) = targets.line {
        let (d, beta1) = families::distance_to_line(line, x);
        if d < best_distance {
            best_distance = d;
            best = Some(LimitClassification::Line { beta1, distance: d });
        }
    }
    if let Some(plane) = targets.plane {
        let (d, alpha) = families::distance_to_plane(plane, x);
        if d < best_distance {
            best_distance = d;
            best = Some(LimitClassification::Plane { alpha, distance: d });
        }
    }
    match best {
        Some(c) if best_distance <= NOVEL_LIMIT_TOL => Ok(c),
        _ => Ok(LimitClassification::Novel {
            nearest_distance: best_distance,
        }),
    }
}
