//! Equilibrium computation and certification: the disease-free state,
//! single-virus boundary roots, bivirus coexistence sub-solves, support-
//! pattern multi-start Newton enumeration, and the genericity probe.
//!
//! Every equilibrium has, per virus, either an exactly-zero block or a block
//! with all entries strictly inside (0,1). Enumeration therefore solves one
//! restricted system per support pattern instead of one global solve, where
//! boundary roots would sit on the constraint surface and stall Newton.

use crate::model::{self, ModelError, SystemState, TriVirusParams};
use crate::sim::{self, SimConfig};
use crate::spectral::{self, SpectralError};
use nalgebra::{Complex, DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use std::fmt;

/// Certified equilibria must satisfy the field residual below this.
pub const RESIDUAL_TOL: f64 = 1e-10;
/// Newton iterates until the residual drops below this (tighter than
/// RESIDUAL_TOL so certification has slack).
pub const NEWTON_TOL: f64 = 1e-12;
/// Roots closer than this in infinity norm are the same equilibrium.
pub const DEDUP_TOL: f64 = 1e-6;
/// Live blocks of a certified root must clear this floor entrywise.
pub const ALIVE_FLOOR: f64 = 1e-8;
/// Midpoint residual below this between two distinct same-support roots
/// marks a suspected continuum of equilibria.
pub const CONTINUUM_RESIDUAL: f64 = 1e-9;
/// An eigenvalue smaller than this relative to the spectrum's magnitude
/// marks the Jacobian as degenerate (index undefined).
pub const DEGENERACY_REL: f64 = 1e-8;
/// Offset used for the extreme bivirus starts.
pub const BIVIRUS_EPS: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub enum EquilibriaError {
    Model(ModelError),
    Spectral(SpectralError),
    NotIrreducible {
        virus: usize,
    },
    PreconditionFailed(String),
    /// The solver converged nowhere usable or the polish failed.
    SolveFailed(String),
    NotTriVirus {
        viruses: usize,
    },
}

impl fmt::Display for EquilibriaError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EquilibriaError::Model(e) => write!(f, "{e}"),
            EquilibriaError::Spectral(e) => write!(f, "{e}"),
            EquilibriaError::NotIrreducible { virus } => {
                write!(
                    f,
                    "infection matrix of virus {} is not irreducible",
                    virus + 1
                )
            }
            EquilibriaError::PreconditionFailed(msg) => write!(f, "precondition failed: {msg}"),
            EquilibriaError::SolveFailed(msg) => write!(f, "solve failed: {msg}"),
            EquilibriaError::NotTriVirus { viruses } => {
                write!(f, "operation requires exactly 3 viruses, got {viruses}")
            }
        }
    }
}

impl std::error::Error for EquilibriaError {}

impl From<ModelError> for EquilibriaError {
    fn from(e: ModelError) -> Self {
        EquilibriaError::Model(e)
    }
}

impl From<SpectralError> for EquilibriaError {
    fn from(e: SpectralError) -> Self {
        EquilibriaError::Spectral(e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EquilibriumKind {
    DiseaseFree,
    /// Exactly one virus endemic (0-indexed).
    Boundary(usize),
    /// Exactly two viruses endemic (0-indexed, ascending).
    PairCoexistence(usize, usize),
    TripleCoexistence,
}

impl fmt::Display for EquilibriumKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EquilibriumKind::DiseaseFree => write!(f, "disease-free"),
            EquilibriumKind::Boundary(k) => write!(f, "virus-{} boundary", k + 1),
            EquilibriumKind::PairCoexistence(i, j) => {
                write!(f, "virus-{}/virus-{} coexistence", i + 1, j + 1)
            }
            EquilibriumKind::TripleCoexistence => write!(f, "3-coexistence"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Equilibrium {
    pub state: SystemState,
    /// Which viruses are alive; dead blocks are exactly zero.
    pub support: Vec<bool>,
    pub kind: EquilibriumKind,
    pub jacobian_spectrum: Vec<Complex<f64>>,
    /// All eigenvalue real parts < -1e-8.
    pub is_stable: bool,
    /// Every dead-virus diagonal Jacobian block is Hurwitz. Only saturated
    /// equilibria can attract interior trajectories.
    pub is_saturated: bool,
    /// sign(det(-J)); None when the Jacobian is degenerate.
    pub index: Option<i8>,
    /// Infinity norm of the vector field at `state`.
    pub residual: f64,
}

#[derive(Debug, Clone)]
pub struct EnumerationResult {
    pub equilibria: Vec<Equilibrium>,
    /// Newton starts attempted across all support patterns.
    pub starts_used: usize,
    /// True when every listed root has a well-defined index and no
    /// continuum was suspected.
    pub nondegenerate: bool,
    /// Sum of indices over saturated equilibria; None when degenerate.
    /// Equals +1 for a complete nondegenerate enumeration.
    pub index_sum_saturated: Option<i64>,
    pub continuum_suspected: bool,
}

impl EnumerationResult {
    pub fn count_of(&self, kind_matches: impl Fn(EquilibriumKind) -> bool) -> usize {
        self.equilibria
            .iter()
            .filter(|e| kind_matches(e.kind))
            .count()
    }

    pub fn three_coexistence_count(&self) -> usize {
        self.count_of(|k| k == EquilibriumKind::TripleCoexistence)
    }
}

/// Endemic level of a lone virus: the unique positive x with
/// (-D + (I - X) B) x = 0, present iff rho(D^{-1} B) > 1.
///
/// Monotone fixed-point iteration x_i <- (Bx)_i / (delta_i + (Bx)_i) from a
/// Perron-vector seed scaled to max entry 1 - 1/rho, then Newton polish.
pub fn single_virus_equilibrium(
    delta: &DVector<f64>,
    beta: &DMatrix<f64>,
) -> Result<Option<DVector<f64>>, EquilibriaError> {
    let single = TriVirusParams::new(vec![delta.clone()], vec![beta.clone()])?;
    if !spectral::is_irreducible(beta)? {
        return Err(EquilibriaError::NotIrreducible { virus: 0 });
    }
    let scaled = single.scaled_infection(0);
    let rho = spectral::spectral_radius(&scaled)?;
    if rho <= 1.0 {
        return Ok(None);
    }
    let n = delta.len();
    let (_, perron) = spectral::perron_pair(&scaled)?;
    let mut x = perron * (1.0 - 1.0 / rho);
    for _ in 0..200 {
        let bx = beta * &x;
        for i in 0..n {
            x[i] = bx[i] / (delta[i] + bx[i]);
        }
    }
    // Newton polish: F = (I-X)Bx - Dx, J = (I-X)B - diag(Bx) - D
    let mut residual = f64::INFINITY;
    for _ in 0..50 {
        let bx = beta * &x;
        let mut fval = DVector::zeros(n);
        for i in 0..n {
            fval[i] = (1.0 - x[i]) * bx[i] - delta[i] * x[i];
        }
        residual = fval.amax();
        if residual < 1e-13 {
            break;
        }
        let mut jac = beta.clone();
        for i in 0..n {
            for j in 0..n {
                jac[(i, j)] *= 1.0 - x[i];
            }
            jac[(i, i)] -= bx[i] + delta[i];
        }
        let step = jac
            .lu()
            .solve(&(-fval))
            .ok_or_else(|| EquilibriaError::SolveFailed("singular Jacobian in polish".into()))?;
        x += step;
    }
    if residual >= 1e-12 {
        return Err(EquilibriaError::SolveFailed(format!(
            "single-virus polish stalled at residual {residual:.3e}"
        )));
    }
    if x.iter().any(|&v| v <= 0.0 || v >= 1.0) {
        return Err(EquilibriaError::SolveFailed(
            "single-virus root left the open box (0,1)".into(),
        ));
    }
    Ok(Some(x))
}

fn degenerate_spectrum(spectrum: &[Complex<f64>]) -> bool {
    let min = spectrum
        .iter()
        .map(|l| l.norm())
        .fold(f64::INFINITY, f64::min);
    let max = spectrum.iter().map(|l| l.norm()).fold(0.0, f64::max);
    min <= DEGENERACY_REL * max.max(1.0)
}

/// Certify a candidate state as an equilibrium: residual, spectrum,
/// stability, saturation and index. Dead blocks must be exactly zero.
fn certify(params: &TriVirusParams, state: SystemState) -> Result<Equilibrium, EquilibriaError> {
    let m = params.virus_count();
    let n = params.node_count();
    let support: Vec<bool> = (0..m).map(|k| state.block(k).amax() > 0.0).collect();
    let alive: Vec<usize> = (0..m).filter(|&k| support[k]).collect();
    let kind = match alive.as_slice() {
        [] => EquilibriumKind::DiseaseFree,
        [k] => EquilibriumKind::Boundary(*k),
        [i, j] => EquilibriumKind::PairCoexistence(*i, *j),
        _ => EquilibriumKind::TripleCoexistence,
    };
    let residual = {
        let f = model::vector_field_unchecked(params, &state);
        f.blocks().iter().map(|b| b.amax()).fold(0.0, f64::max)
    };
    let jac = model::jacobian(params, &state)?;
    let spectrum = spectral::eigenvalues(&jac)?;
    let is_stable = spectrum.iter().all(|l| l.re < -1e-8);
    // dead-block diagonal of J is -D^k + (I - sum X) B^k since B^k x^k = 0
    let mut is_saturated = true;
    let susceptible = {
        let mut s = DVector::from_element(n, 1.0);
        s -= state.node_totals();
        s
    };
    for k in 0..m {
        if support[k] {
            continue;
        }
        let mut block = params.beta(k).clone();
        for i in 0..n {
            for j in 0..n {
                block[(i, j)] *= susceptible[i];
            }
            block[(i, i)] -= params.delta(k)[i];
        }
        if spectral::spectral_abscissa(&block)? >= 0.0 {
            is_saturated = false;
        }
    }
    let index = if degenerate_spectrum(&spectrum) {
        None
    } else {
        let neg_jac = -&jac;
        Some(if neg_jac.determinant() > 0.0 { 1 } else { -1 })
    };
    Ok(Equilibrium {
        state,
        support,
        kind,
        jacobian_spectrum: spectrum,
        is_stable,
        is_saturated,
        index,
        residual,
    })
}

/// Recompute saturation and index for an externally produced equilibrium.
pub fn saturation_and_index(
    params: &TriVirusParams,
    eq: &Equilibrium,
) -> Result<Equilibrium, EquilibriaError> {
    if eq.residual >= RESIDUAL_TOL {
        return Err(EquilibriaError::PreconditionFailed(format!(
            "residual {:.3e} is not below {RESIDUAL_TOL:.0e}",
            eq.residual
        )));
    }
    certify(params, eq.state.clone())
}

/// Newton with Armijo damping on the squared residual, on the subsystem of
/// the given live viruses. Returns the polished live-stacked vector.
fn newton_restricted(sub: &TriVirusParams, start: &DVector<f64>) -> Option<DVector<f64>> {
    let dim = start.len();
    let n = sub.node_count();
    let m = sub.virus_count();
    let mut y = start.clone();
    let mut fy = DVector::zeros(dim);
    model::derivative_flat(sub, &y, &mut fy);
    let mut fcand = DVector::zeros(dim);
    for _ in 0..100 {
        if fy.amax() < NEWTON_TOL {
            return Some(y);
        }
        let state = SystemState::from_flat(m, n, &y);
        let jac = model::jacobian(sub, &state).ok()?;
        let step = jac.lu().solve(&(-&fy))?;
        let base = fy.norm_squared();
        let mut damping = 1.0;
        loop {
            let cand = &y + &step * damping;
            model::derivative_flat(sub, &cand, &mut fcand);
            if fcand.norm_squared() <= (1.0 - 1e-4 * damping) * base {
                y = cand;
                std::mem::swap(&mut fy, &mut fcand);
                break;
            }
            damping *= 0.5;
            if damping < 1e-10 {
                return None;
            }
        }
    }
    if fy.amax() < NEWTON_TOL {
        Some(y)
    } else {
        None
    }
}

/// Interior filter: live entries clear ALIVE_FLOOR, totals stay clearly
/// below one. Roots failing this belong to a smaller support pattern.
fn accept_root(y: &DVector<f64>, m: usize, n: usize) -> bool {
    if y.iter()
        .any(|v| !v.is_finite() || *v <= ALIVE_FLOOR || *v >= 1.0)
    {
        return false;
    }
    for i in 0..n {
        let total: f64 = (0..m).map(|k| y[k * n + i]).sum();
        if total >= 1.0 - ALIVE_FLOOR {
            return false;
        }
    }
    true
}

fn embed(full_m: usize, n: usize, live: &[usize], y: &DVector<f64>) -> SystemState {
    let mut state = SystemState::zeros(full_m, n);
    for (slot, &k) in live.iter().enumerate() {
        state.block_mut(k).copy_from(&y.rows(slot * n, n));
    }
    state
}

fn dedup_roots(roots: &mut Vec<(DVector<f64>, f64)>) {
    let mut kept: Vec<(DVector<f64>, f64)> = Vec::new();
    for (root, residual) in roots.drain(..) {
        if let Some(existing) = kept
            .iter_mut()
            .find(|(r, _)| (r - &root).amax() < DEDUP_TOL)
        {
            if residual < existing.1 {
                *existing = (root, residual);
            }
        } else {
            kept.push((root, residual));
        }
    }
    *roots = kept;
}

/// Two distinct roots of one support pattern whose segment midpoint is also
/// (numerically) an equilibrium betray a continuum, not isolated points.
fn continuum_in_pattern(sub: &TriVirusParams, roots: &[(DVector<f64>, f64)]) -> bool {
    let dim = sub.virus_count() * sub.node_count();
    let mut fmid = DVector::zeros(dim);
    for a in 0..roots.len() {
        for b in a + 1..roots.len() {
            if (&roots[a].0 - &roots[b].0).amax() < DEDUP_TOL {
                continue;
            }
            let mid = (&roots[a].0 + &roots[b].0) * 0.5;
            model::derivative_flat(sub, &mid, &mut fmid);
            if fmid.amax() < CONTINUUM_RESIDUAL {
                return true;
            }
        }
    }
    false
}

pub struct BivirusResult {
    /// Certified interior coexistence roots of the two-virus subsystem,
    /// embedded in the full system (other blocks zero). Empty when a
    /// continuum is suspected.
    pub equilibria: Vec<Equilibrium>,
    pub continuum_suspected: bool,
    /// Limits of the two extreme-start trajectories; they bracket the
    /// coexistence set of the monotone bivirus subsystem.
    pub extreme_limits: [SystemState; 2],
}

/// Coexistence roots of the bivirus subsystem on viruses i and j, found by
/// integrating from the two extreme starts near (x~^i, eps 1) and
/// (eps 1, x~^j), then polishing limits and their midpoint by Newton.
pub fn bivirus_coexistence(
    params: &TriVirusParams,
    i: usize,
    j: usize,
) -> Result<BivirusResult, EquilibriaError> {
    let m = params.virus_count();
    let n = params.node_count();
    if i == j || i >= m || j >= m {
        return Err(EquilibriaError::PreconditionFailed(format!(
            "virus pair ({i}, {j}) invalid for {m} viruses"
        )));
    }
    let mut anchors = Vec::new();
    for &k in &[i, j] {
        if !spectral::is_irreducible(params.beta(k))? {
            return Err(EquilibriaError::NotIrreducible { virus: k });
        }
        let anchor =
            single_virus_equilibrium(params.delta(k), params.beta(k))?.ok_or_else(|| {
                EquilibriaError::PreconditionFailed(format!(
                    "virus {} is below threshold: no boundary equilibrium",
                    k + 1
                ))
            })?;
        anchors.push(anchor);
    }

    let cfg = SimConfig {
        horizon: 4000.0,
        ..SimConfig::default()
    };
    let mut limits = Vec::new();
    for (dominant, other) in [(0usize, 1usize), (1, 0)] {
        let mut x0 = SystemState::zeros(m, n);
        let virus = [i, j][dominant];
        x0.block_mut(virus)
            .copy_from(&(&anchors[dominant] * (1.0 - BIVIRUS_EPS)));
        x0.block_mut([i, j][other]).fill(BIVIRUS_EPS);
        let traj = integrate_for_solver(params, &x0, &cfg)?;
        limits.push(traj);
    }

    let live = if i < j { [i, j] } else { [j, i] };
    let sub = params.restrict(&live);
    let to_sub = |s: &SystemState| {
        let mut y = DVector::zeros(2 * n);
        y.rows_mut(0, n).copy_from(s.block(live[0]));
        y.rows_mut(n, n).copy_from(s.block(live[1]));
        y
    };
    let lim_a = to_sub(&limits[0]);
    let lim_b = to_sub(&limits[1]);
    let seeds = [lim_a.clone(), lim_b.clone(), (&lim_a + &lim_b) * 0.5];

    let mut roots: Vec<(DVector<f64>, f64)> = Vec::new();
    let mut fbuf = DVector::zeros(2 * n);
    for seed in &seeds {
        if let Some(root) = newton_restricted(&sub, seed) {
            if accept_root(&root, 2, n) {
                model::derivative_flat(&sub, &root, &mut fbuf);
                roots.push((root, fbuf.amax()));
            }
        }
    }
    // limits that already sit on the equilibrium set are continuum
    // witnesses even if Newton failed on the singular Jacobian there
    let mut witnesses = roots.clone();
    for lim in [&lim_a, &lim_b] {
        model::derivative_flat(&sub, lim, &mut fbuf);
        let res = fbuf.amax();
        if res < CONTINUUM_RESIDUAL && accept_root(lim, 2, n) {
            witnesses.push((lim.clone(), res));
        }
    }
    dedup_roots(&mut roots);
    dedup_roots(&mut witnesses);
    let continuum = continuum_in_pattern(&sub, &witnesses);

    let equilibria = if continuum {
        Vec::new()
    } else {
        roots
            .into_iter()
            .map(|(root, _)| certify(params, embed(m, n, &live, &root)))
            .collect::<Result<Vec<_>, _>>()?
    };
    Ok(BivirusResult {
        equilibria,
        continuum_suspected: continuum,
        extreme_limits: [limits[0].clone(), limits[1].clone()],
    })
}

fn integrate_for_solver(
    params: &TriVirusParams,
    x0: &SystemState,
    cfg: &SimConfig,
) -> Result<SystemState, EquilibriaError> {
    match sim::integrate(params, x0, cfg) {
        Ok(traj) => Ok(traj.final_state().clone()),
        Err(e) => Err(EquilibriaError::SolveFailed(format!(
            "bracketing run failed: {e}"
        ))),
    }
}

/// All equilibria reachable by multi-start Newton over the 8 support
/// patterns: `starts` random interior seeds per pattern plus structured
/// seeds (boundary anchors, bivirus bracketing limits, trajectory limits).
pub fn enumerate_equilibria(
    params: &TriVirusParams,
    starts: usize,
    seed: u64,
) -> Result<EnumerationResult, EquilibriaError> {
    let m = params.virus_count();
    if m != 3 {
        return Err(EquilibriaError::NotTriVirus { viruses: m });
    }
    let n = params.node_count();
    for k in 0..3 {
        if !spectral::is_irreducible(params.beta(k))? {
            return Err(EquilibriaError::NotIrreducible { virus: k });
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut starts_used = 0usize;
    let mut continuum_suspected = false;
    let mut found: Vec<Equilibrium> = Vec::new();

    // disease-free state
    found.push(certify(params, SystemState::zeros(3, n))?);

    // boundary states
    let mut anchors: Vec<Option<DVector<f64>>> = Vec::new();
    for k in 0..3 {
        let anchor = single_virus_equilibrium(params.delta(k), params.beta(k))?;
        if let Some(x) = &anchor {
            let mut state = SystemState::zeros(3, n);
            state.block_mut(k).copy_from(x);
            found.push(certify(params, state)?);
        }
        anchors.push(anchor);
    }

    // random interior seed on a restricted pattern: one uniform draw per
    // live virus and one susceptible draw, normalized per node
    let random_seed_vec = |rng: &mut ChaCha8Rng, live: usize| {
        let mut y = DVector::zeros(live * n);
        for i in 0..n {
            let mut draws = vec![0.0; live + 1];
            for d in draws.iter_mut() {
                *d = rng.gen_range(1e-6..1.0);
            }
            let sum: f64 = draws.iter().sum();
            for k in 0..live {
                y[k * n + i] = draws[k] / sum;
            }
        }
        y
    };

    // pair patterns
    for (i, j) in [(0usize, 1usize), (0, 2), (1, 2)] {
        let viable = anchors[i].is_some() && anchors[j].is_some();
        let sub = params.restrict(&[i, j]);
        let mut roots: Vec<(DVector<f64>, f64)> = Vec::new();
        let mut fbuf = DVector::zeros(2 * n);
        let mut try_seed = |seed_vec: &DVector<f64>,
                            roots: &mut Vec<(DVector<f64>, f64)>,
                            starts_used: &mut usize| {
            *starts_used += 1;
            if let Some(root) = newton_restricted(&sub, seed_vec) {
                if accept_root(&root, 2, n) {
                    model::derivative_flat(&sub, &root, &mut fbuf);
                    roots.push((root, fbuf.amax()));
                }
            }
        };
        if viable {
            let bi = bivirus_coexistence(params, i, j)?;
            continuum_suspected |= bi.continuum_suspected;
            if !bi.continuum_suspected {
                for eq in bi.equilibria {
                    let mut y = DVector::zeros(2 * n);
                    y.rows_mut(0, n).copy_from(eq.state.block(i));
                    y.rows_mut(n, n).copy_from(eq.state.block(j));
                    roots.push((y, eq.residual));
                }
                for lambda in [0.25, 0.5, 0.75] {
                    let mut s = DVector::zeros(2 * n);
                    s.rows_mut(0, n)
                        .copy_from(&(anchors[i].as_ref().unwrap() * lambda));
                    s.rows_mut(n, n)
                        .copy_from(&(anchors[j].as_ref().unwrap() * (1.0 - lambda)));
                    try_seed(&s, &mut roots, &mut starts_used);
                }
            }
        }
        if !continuum_suspected || !viable {
            for _ in 0..starts {
                let s = random_seed_vec(&mut rng, 2);
                try_seed(&s, &mut roots, &mut starts_used);
            }
        }
        dedup_roots(&mut roots);
        if continuum_in_pattern(&sub, &roots) {
            continuum_suspected = true;
            continue;
        }
        for (root, _) in roots {
            found.push(certify(params, embed(3, n, &[i, j], &root))?);
        }
    }

    // full pattern
    {
        let sub = params.clone();
        let live = [0usize, 1, 2];
        let mut roots: Vec<(DVector<f64>, f64)> = Vec::new();
        let mut fbuf = DVector::zeros(3 * n);
        let mut seeds: Vec<DVector<f64>> = Vec::new();
        if anchors.iter().all(|a| a.is_some()) {
            for (a, b, c) in [
                (1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0),
                (0.5, 0.25, 0.25),
                (0.25, 0.5, 0.25),
                (0.25, 0.25, 0.5),
            ] {
                let mut s = DVector::zeros(3 * n);
                s.rows_mut(0, n)
                    .copy_from(&(anchors[0].as_ref().unwrap() * a));
                s.rows_mut(n, n)
                    .copy_from(&(anchors[1].as_ref().unwrap() * b));
                s.rows_mut(2 * n, n)
                    .copy_from(&(anchors[2].as_ref().unwrap() * c));
                seeds.push(s);
            }
        }
        // trajectory limits make good interior seeds: interior attractors
        // must be equilibria of the full pattern
        for traj_seed in 0..3u64 {
            let x0 = sim::random_initial_condition(n, seed.wrapping_add(traj_seed));
            if let Ok(traj) = sim::integrate(params, &x0, &SimConfig::default()) {
                seeds.push(traj.final_state().flat());
            }
        }
        for _ in 0..starts {
            seeds.push(random_seed_vec(&mut rng, 3));
        }
        for s in &seeds {
            starts_used += 1;
            if let Some(root) = newton_restricted(&sub, s) {
                if accept_root(&root, 3, n) {
                    model::derivative_flat(&sub, &root, &mut fbuf);
                    roots.push((root, fbuf.amax()));
                }
            }
        }
        dedup_roots(&mut roots);
        if continuum_in_pattern(&sub, &roots) {
            continuum_suspected = true;
        } else {
            for (root, _) in roots {
                found.push(certify(params, embed(3, n, &live, &root))?);
            }
        }
    }

    let nondegenerate = !continuum_suspected && found.iter().all(|e| e.index.is_some());
    let index_sum_saturated = if nondegenerate {
        Some(
            found
                .iter()
                .filter(|e| e.is_saturated)
                .map(|e| e.index.unwrap() as i64)
                .sum(),
        )
    } else {
        None
    };
    Ok(EnumerationResult {
        equilibria: found,
        starts_used,
        nondegenerate,
        index_sum_saturated,
        continuum_suspected,
    })
}

#[derive(Debug, Clone)]
pub struct GenericityReport {
    pub trials: usize,
    pub degenerate_trials: usize,
    pub degenerate_fraction: f64,
    /// equilibrium count -> number of trials yielding that count
    pub count_distribution: BTreeMap<usize, usize>,
    /// Whether the unperturbed base system already shows a continuum.
    pub base_continuum_suspected: bool,
}

/// Monte Carlo transversality probe: multiply every healing rate by
/// exp(uniform(-scale, scale)) and re-enumerate. Generic parameters must
/// yield finitely many nondegenerate roots, so degenerate trials are
/// expected only at scale 0 on nongeneric bases.
pub fn genericity_probe(
    base: &TriVirusParams,
    trials: usize,
    scale: f64,
    seed: u64,
) -> Result<GenericityReport, EquilibriaError> {
    if !(scale >= 0.0) || !scale.is_finite() {
        return Err(EquilibriaError::PreconditionFailed(format!(
            "perturbation scale {scale} must be nonnegative"
        )));
    }
    let starts = 40;
    let base_run = enumerate_equilibria(base, starts, seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9e3779b97f4a7c15).wrapping_add(1));
    let mut degenerate_trials = 0usize;
    let mut count_distribution = BTreeMap::new();
    for _ in 0..trials {
        let deltas = (0..base.virus_count())
            .map(|k| {
                DVector::from_fn(base.node_count(), |i, _| {
                    base.delta(k)[i] * (rng.gen_range(-scale..=scale)).exp()
                })
            })
            .collect();
        let betas = (0..base.virus_count())
            .map(|k| base.beta(k).clone())
            .collect();
        let perturbed = TriVirusParams::new(deltas, betas)?;
        let run = enumerate_equilibria(&perturbed, starts, rng.gen())?;
        if !run.nondegenerate {
            degenerate_trials += 1;
        }
        *count_distribution.entry(run.equilibria.len()).or_insert(0) += 1;
    }
    Ok(GenericityReport {
        trials,
        degenerate_trials,
        degenerate_fraction: if trials == 0 {
            0.0
        } else {
            degenerate_trials as f64 / trials as f64
        },
        count_distribution,
        base_continuum_suspected: base_run.continuum_suspected,
    })
}
