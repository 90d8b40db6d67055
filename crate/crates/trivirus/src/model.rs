//! Parameters, states, vector field, Jacobian and domain checks.
//!
//! The admissible domain is the product of per-virus boxes [0,1]^n cut down
//! by the per-node constraint sum_k x_i^k <= 1. It is forward invariant, so
//! any trajectory that leaves it signals an integrator failure rather than a
//! property of the model.

use nalgebra::{DMatrix, DVector};
use std::fmt;

/// Slack allowed when admitting a state into the domain.
pub const DOMAIN_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum ModelError {
    /// Virus count or node dimensions disagree between fields.
    DimensionMismatch(String),
    NonPositiveHealing {
        virus: usize,
        node: usize,
        value: f64,
    },
    NegativeInfection {
        virus: usize,
        row: usize,
        col: usize,
        value: f64,
    },
    NonFinite(String),
    OutsideDomain(Vec<DomainViolation>),
}

impl fmt::Display for ModelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelError::DimensionMismatch(what) => write!(f, "dimension mismatch: {what}"),
            ModelError::NonPositiveHealing { virus, node, value } => {
                write!(
                    f,
                    "healing rate of virus {virus} at node {node} is {value}, must be > 0"
                )
            }
            ModelError::NegativeInfection {
                virus,
                row,
                col,
                value,
            } => {
                write!(
                    f,
                    "infection rate of virus {virus} at ({row},{col}) is {value}, must be >= 0"
                )
            }
            ModelError::NonFinite(what) => write!(f, "non-finite entry in {what}"),
            ModelError::OutsideDomain(violations) => {
                write!(f, "state outside domain:")?;
                for v in violations {
                    write!(f, " [{v}]")?;
                }
                Ok(())
            }
        }
    }
}

impl std::error::Error for ModelError {}

/// One domain-constraint breach: a negative or >1 entry, or a node whose
/// per-virus fractions sum past one. `virus` is None for the sum constraint.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainViolation {
    pub node: usize,
    pub virus: Option<usize>,
    pub value: f64,
    /// Distance past the constraint boundary; always > 0.
    pub excess: f64,
}

impl fmt::Display for DomainViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.virus {
            Some(k) => write!(
                f,
                "node {}, virus {}: value {} exceeds domain by {:.3e}",
                self.node, k, self.value, self.excess
            ),
            None => write!(
                f,
                "node {}: virus fractions sum to {} exceeding 1 by {:.3e}",
                self.node, self.value, self.excess
            ),
        }
    }
}

/// Healing rates and infection matrices for m viruses over n nodes.
///
/// Storage is general in m; the theorem checkers insist on m = 3 themselves.
/// Healing is stored as the diagonal vector of D^k.
#[derive(Debug, Clone, PartialEq)]
pub struct TriVirusParams {
    deltas: Vec<DVector<f64>>,
    betas: Vec<DMatrix<f64>>,
}

impl TriVirusParams {
    pub fn new(deltas: Vec<DVector<f64>>, betas: Vec<DMatrix<f64>>) -> Result<Self, ModelError> {
        if deltas.is_empty() || deltas.len() != betas.len() {
            return Err(ModelError::DimensionMismatch(format!(
                "{} healing vectors vs {} infection matrices",
                deltas.len(),
                betas.len()
            )));
        }
        let n = deltas[0].len();
        if n == 0 {
            return Err(ModelError::DimensionMismatch("zero nodes".into()));
        }
        for (k, (d, b)) in deltas.iter().zip(&betas).enumerate() {
            if d.len() != n || b.nrows() != n || b.ncols() != n {
                return Err(ModelError::DimensionMismatch(format!(
                    "virus {k}: delta has {} entries, beta is {}x{}, expected {n}",
                    d.len(),
                    b.nrows(),
                    b.ncols()
                )));
            }
            for i in 0..n {
                if !d[i].is_finite() || d[i] <= 0.0 {
                    return Err(ModelError::NonPositiveHealing {
                        virus: k,
                        node: i,
                        value: d[i],
                    });
                }
            }
            for i in 0..n {
                for j in 0..n {
                    if !b[(i, j)].is_finite() || b[(i, j)] < 0.0 {
                        return Err(ModelError::NegativeInfection {
                            virus: k,
                            row: i,
                            col: j,
                            value: b[(i, j)],
                        });
                    }
                }
            }
        }
        Ok(TriVirusParams { deltas, betas })
    }

    /// Three-virus constructor; the common case.
    pub fn tri(deltas: [DVector<f64>; 3], betas: [DMatrix<f64>; 3]) -> Result<Self, ModelError> {
        TriVirusParams::new(deltas.into(), betas.into())
    }

    /// Three viruses sharing unit healing rates.
    pub fn tri_unit_healing(n: usize, betas: [DMatrix<f64>; 3]) -> Result<Self, ModelError> {
        let ones = DVector::from_element(n, 1.0);
        TriVirusParams::tri([ones.clone(), ones.clone(), ones], betas)
    }

    pub fn virus_count(&self) -> usize {
        self.deltas.len()
    }

    pub fn node_count(&self) -> usize {
        self.deltas[0].len()
    }

    pub fn delta(&self, k: usize) -> &DVector<f64> {
        &self.deltas[k]
    }

    pub fn beta(&self, k: usize) -> &DMatrix<f64> {
        &self.betas[k]
    }

    /// (D^k)^{-1} B^k, the threshold matrix whose spectral radius governs
    /// virus k's viability.
    pub fn scaled_infection(&self, k: usize) -> DMatrix<f64> {
        let mut m = self.betas[k].clone();
        for i in 0..self.node_count() {
            let row_scale = 1.0 / self.deltas[k][i];
            for j in 0..self.node_count() {
                m[(i, j)] *= row_scale;
            }
        }
        m
    }

    /// Rescaled copy with unit healing: D^k -> I, B^k -> (D^k)^{-1} B^k.
    ///
    /// The rescaled system has exactly the same equilibria (multiply each
    /// equilibrium equation by D^{-1}); stability need not be preserved, so
    /// callers must not transfer verdicts across the rescaling.
    pub fn unit_healing_rescaled(&self) -> TriVirusParams {
        let n = self.node_count();
        let deltas = vec![DVector::from_element(n, 1.0); self.virus_count()];
        let betas = (0..self.virus_count())
            .map(|k| self.scaled_infection(k))
            .collect();
        TriVirusParams { deltas, betas }
    }

    /// Keep only the given viruses, in the given order.
    pub fn restrict(&self, viruses: &[usize]) -> TriVirusParams {
        TriVirusParams {
            deltas: viruses.iter().map(|&k| self.deltas[k].clone()).collect(),
            betas: viruses.iter().map(|&k| self.betas[k].clone()).collect(),
        }
    }
}

/// Per-virus infection fractions; block k is x^k.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemState {
    blocks: Vec<DVector<f64>>,
}

impl SystemState {
    pub fn new(blocks: Vec<DVector<f64>>) -> Result<Self, ModelError> {
        if blocks.is_empty() {
            return Err(ModelError::DimensionMismatch("no virus blocks".into()));
        }
        let n = blocks[0].len();
        if n == 0 || blocks.iter().any(|b| b.len() != n) {
            return Err(ModelError::DimensionMismatch(
                "unequal block lengths".into(),
            ));
        }
        Ok(SystemState { blocks })
    }

    pub fn zeros(viruses: usize, nodes: usize) -> Self {
        SystemState {
            blocks: vec![DVector::zeros(nodes); viruses],
        }
    }

    /// Every node of virus k at `levels[k]`.
    pub fn uniform(nodes: usize, levels: &[f64]) -> Self {
        SystemState {
            blocks: levels
                .iter()
                .map(|&v| DVector::from_element(nodes, v))
                .collect(),
        }
    }

    pub fn from_flat(viruses: usize, nodes: usize, flat: &DVector<f64>) -> Self {
        assert_eq!(flat.len(), viruses * nodes);
        SystemState {
            blocks: (0..viruses)
                .map(|k| flat.rows(k * nodes, nodes).into_owned())
                .collect(),
        }
    }

    /// Stacked [x^1; x^2; ...; x^m].
    pub fn flat(&self) -> DVector<f64> {
        let n = self.node_count();
        let mut out = DVector::zeros(self.virus_count() * n);
        for (k, b) in self.blocks.iter().enumerate() {
            out.rows_mut(k * n, n).copy_from(b);
        }
        out
    }

    pub fn virus_count(&self) -> usize {
        self.blocks.len()
    }

    pub fn node_count(&self) -> usize {
        self.blocks[0].len()
    }

    pub fn block(&self, k: usize) -> &DVector<f64> {
        &self.blocks[k]
    }

    pub fn block_mut(&mut self, k: usize) -> &mut DVector<f64> {
        &mut self.blocks[k]
    }

    pub fn blocks(&self) -> &[DVector<f64>] {
        &self.blocks
    }

    /// Per-node totals sum_k x_i^k.
    pub fn node_totals(&self) -> DVector<f64> {
        let mut tot = DVector::zeros(self.node_count());
        for b in &self.blocks {
            tot += b;
        }
        tot
    }

    pub fn max_distance(&self, other: &SystemState) -> f64 {
        let mut d: f64 = 0.0;
        for (a, b) in self.blocks.iter().zip(&other.blocks) {
            for i in 0..a.len() {
                d = d.max((a[i] - b[i]).abs());
            }
        }
        d
    }
}

/// All constraint breaches beyond `tol`: entries below 0 or above 1, and
/// node totals above 1. A node whose entries are individually fine but whose
/// total overshoots yields exactly one violation with `virus: None`.
pub fn validate_state(state: &SystemState, tol: f64) -> Vec<DomainViolation> {
    let mut out = Vec::new();
    for (k, b) in state.blocks.iter().enumerate() {
        for i in 0..b.len() {
            let v = b[i];
            if !v.is_finite() {
                out.push(DomainViolation {
                    node: i,
                    virus: Some(k),
                    value: v,
                    excess: f64::INFINITY,
                });
            } else if v < -tol {
                out.push(DomainViolation {
                    node: i,
                    virus: Some(k),
                    value: v,
                    excess: -v,
                });
            } else if v > 1.0 + tol {
                out.push(DomainViolation {
                    node: i,
                    virus: Some(k),
                    value: v,
                    excess: v - 1.0,
                });
            }
        }
    }
    let totals = state.node_totals();
    for i in 0..totals.len() {
        let t = totals[i];
        if t.is_finite() && t > 1.0 + tol {
            out.push(DomainViolation {
                node: i,
                virus: None,
                value: t,
                excess: t - 1.0,
            });
        }
    }
    out
}

fn check_dims(params: &TriVirusParams, state: &SystemState) -> Result<(), ModelError> {
    if params.virus_count() != state.virus_count() || params.node_count() != state.node_count() {
        return Err(ModelError::DimensionMismatch(format!(
            "params are {} viruses x {} nodes, state is {} x {}",
            params.virus_count(),
            params.node_count(),
            state.virus_count(),
            state.node_count()
        )));
    }
    Ok(())
}

/// d/dt x^k = ((I - sum_l X^l) B^k - D^k) x^k for a state inside the domain
/// (within DOMAIN_TOL).
pub fn vector_field(
    params: &TriVirusParams,
    state: &SystemState,
) -> Result<SystemState, ModelError> {
    check_dims(params, state)?;
    let violations = validate_state(state, DOMAIN_TOL);
    if !violations.is_empty() {
        return Err(ModelError::OutsideDomain(violations));
    }
    Ok(vector_field_unchecked(params, state))
}

/// The same right-hand side without the domain gate. The formula is defined
/// for any finite state; integrator stages and finite-difference probes may
/// sit slightly outside the domain.
pub fn vector_field_unchecked(params: &TriVirusParams, state: &SystemState) -> SystemState {
    let susceptible = {
        let mut s = DVector::from_element(state.node_count(), 1.0);
        s -= state.node_totals();
        s
    };
    let blocks = state
        .blocks
        .iter()
        .enumerate()
        .map(|(k, xk)| {
            let mut bx = &params.betas[k] * xk;
            for i in 0..bx.len() {
                bx[i] = susceptible[i] * bx[i] - params.deltas[k][i] * xk[i];
            }
            bx
        })
        .collect();
    SystemState { blocks }
}

/// Flat-layout right-hand side used by the integrator and Newton solvers.
pub(crate) fn derivative_flat(params: &TriVirusParams, y: &DVector<f64>, out: &mut DVector<f64>) {
    let n = params.node_count();
    let m = params.virus_count();
    debug_assert_eq!(y.len(), m * n);
    debug_assert_eq!(out.len(), m * n);
    let mut susceptible = DVector::from_element(n, 1.0);
    for k in 0..m {
        for i in 0..n {
            susceptible[i] -= y[k * n + i];
        }
    }
    for k in 0..m {
        let xk = y.rows(k * n, n);
        let mut bx = &params.betas[k] * xk;
        for i in 0..n {
            bx[i] = susceptible[i] * bx[i] - params.deltas[k][i] * xk[i];
        }
        out.rows_mut(k * n, n).copy_from(&bx);
    }
}

/// Jacobian of the vector field at any finite state, stacked block-wise.
///
/// Diagonal block k:   -D^k + (I - sum_l X^l) B^k - diag(B^k x^k)
/// Off-diagonal (k,l): -diag(B^k x^k), identical for every l != k.
pub fn jacobian(params: &TriVirusParams, state: &SystemState) -> Result<DMatrix<f64>, ModelError> {
    check_dims(params, state)?;
    for b in &state.blocks {
        if b.iter().any(|v| !v.is_finite()) {
            return Err(ModelError::NonFinite("state".into()));
        }
    }
    let n = params.node_count();
    let m = params.virus_count();
    let mut susceptible = DVector::from_element(n, 1.0);
    susceptible -= state.node_totals();
    let mut jac = DMatrix::zeros(m * n, m * n);
    for k in 0..m {
        let bx = &params.betas[k] * &state.blocks[k];
        for l in 0..m {
            let mut block = jac.view_mut((k * n, l * n), (n, n));
            for i in 0..n {
                block[(i, i)] = -bx[i];
            }
            if l == k {
                for i in 0..n {
                    for j in 0..n {
                        block[(i, j)] += susceptible[i] * params.betas[k][(i, j)];
                    }
                    block[(i, i)] -= params.deltas[k][i];
                }
            }
        }
    }
    Ok(jac)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_params(rng: &mut ChaCha8Rng, m: usize, n: usize) -> TriVirusParams {
        let deltas = (0..m)
            .map(|_| DVector::from_fn(n, |_, _| rng.gen_range(0.5..1.5)))
            .collect();
        let betas = (0..m)
            .map(|_| DMatrix::from_fn(n, n, |_, _| rng.gen_range(0.0..2.0)))
            .collect();
        TriVirusParams::new(deltas, betas).unwrap()
    }

    fn random_interior_state(rng: &mut ChaCha8Rng, m: usize, n: usize) -> SystemState {
        let mut blocks = vec![DVector::zeros(n); m];
        for i in 0..n {
            let draws: Vec<f64> = (0..m + 1).map(|_| rng.gen_range(0.01..1.0)).collect();
            let sum: f64 = draws.iter().sum();
            for k in 0..m {
                blocks[k][i] = draws[k] / sum;
            }
        }
        SystemState::new(blocks).unwrap()
    }

    #[test]
    fn scalar_logistic_fixed_point() {
        let params = TriVirusParams::new(
            vec![DVector::from_element(1, 1.0)],
            vec![DMatrix::from_element(1, 1, 2.0)],
        )
        .unwrap();
        // x~ = 1 - delta/beta for the single scalar virus
        let at = |x: f64| {
            vector_field(&params, &SystemState::uniform(1, &[x]))
                .unwrap()
                .block(0)[0]
        };
        assert!(at(0.5).abs() < 1e-15);
        assert!((at(0.25) - 0.125).abs() < 1e-15);
        assert!(at(0.75) < 0.0);
    }

    #[test]
    fn zero_state_is_an_equilibrium() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let params = random_params(&mut rng, 3, 4);
        let dfe = SystemState::zeros(3, 4);
        let f = vector_field(&params, &dfe).unwrap();
        assert_eq!(f, dfe);
    }

    #[test]
    fn dead_virus_block_keeps_zero_derivative() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            let params = random_params(&mut rng, 3, 5);
            let mut state = random_interior_state(&mut rng, 3, 5);
            state.block_mut(1).fill(0.0);
            let f = vector_field(&params, &state).unwrap();
            assert!(f.block(1).iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn tiny_negative_entry_is_admitted() {
        let state = SystemState::uniform(2, &[0.2, 0.3, 0.1]);
        let mut dipped = state.clone();
        dipped.block_mut(0)[0] = -1e-15;
        assert!(validate_state(&dipped, DOMAIN_TOL).is_empty());
        dipped.block_mut(0)[0] = -1e-6;
        let violations = validate_state(&dipped, DOMAIN_TOL);
        assert_eq!(violations.len(), 1);
        assert_eq!(violations[0].virus, Some(0));
        assert!((violations[0].excess - 1e-6).abs() < 1e-18);
    }

    #[test]
    fn node_total_violation_reported_once() {
        // Entries are individually fine; only the per-node sum overshoots.
        let state = SystemState::uniform(1, &[0.5, 0.4, 0.2]);
        let violations = validate_state(&state, DOMAIN_TOL);
        assert_eq!(violations.len(), 1);
        assert_eq!(violations[0].virus, None);
        assert!((violations[0].excess - 0.1).abs() < 1e-12);
        let field_err = vector_field(
            &TriVirusParams::tri_unit_healing(
                1,
                [
                    DMatrix::from_element(1, 1, 2.0),
                    DMatrix::from_element(1, 1, 2.0),
                    DMatrix::from_element(1, 1, 2.0),
                ],
            )
            .unwrap(),
            &state,
        );
        assert!(matches!(field_err, Err(ModelError::OutsideDomain(_))));
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 4;
        let h = 1e-6;
        let mut worst: f64 = 0.0;
        for _ in 0..100 {
            let params = random_params(&mut rng, 3, n);
            let state = random_interior_state(&mut rng, 3, n);
            let jac = jacobian(&params, &state).unwrap();
            let y = state.flat();
            for col in 0..3 * n {
                let mut plus = y.clone();
                let mut minus = y.clone();
                plus[col] += h;
                minus[col] -= h;
                let fp =
                    vector_field_unchecked(&params, &SystemState::from_flat(3, n, &plus)).flat();
                let fm =
                    vector_field_unchecked(&params, &SystemState::from_flat(3, n, &minus)).flat();
                for row in 0..3 * n {
                    let fd = (fp[row] - fm[row]) / (2.0 * h);
                    worst = worst.max((jac[(row, col)] - fd).abs());
                }
            }
        }
        assert!(
            worst < 1e-5,
            "worst Jacobian vs finite-difference gap {worst}"
        );
    }

    #[test]
    fn cross_virus_coupling_is_nonpositive_inside_domain() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let n = 4;
        for _ in 0..50 {
            let params = random_params(&mut rng, 3, n);
            let state = random_interior_state(&mut rng, 3, n);
            let jac = jacobian(&params, &state).unwrap();
            for k in 0..3 {
                for l in 0..3 {
                    if k == l {
                        continue;
                    }
                    let block = jac.view((k * n, l * n), (n, n));
                    assert!(block.iter().all(|&v| v <= 0.0));
                }
            }
        }
    }

    #[test]
    fn jacobian_at_dfe_is_block_diagonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 3;
        let params = random_params(&mut rng, 3, n);
        let jac = jacobian(&params, &SystemState::zeros(3, n)).unwrap();
        for k in 0..3 {
            for l in 0..3 {
                let block = jac.view((k * n, l * n), (n, n));
                if k != l {
                    assert!(block.iter().all(|&v| v == 0.0));
                    continue;
                }
                for i in 0..n {
                    for j in 0..n {
                        let expected =
                            params.beta(k)[(i, j)] - if i == j { params.delta(k)[i] } else { 0.0 };
                        assert_eq!(block[(i, j)], expected);
                    }
                }
            }
        }
    }

    #[test]
    fn unit_healing_rescaling_scales_rows() {
        let params = TriVirusParams::new(
            vec![DVector::from_vec(vec![2.0, 4.0])],
            vec![DMatrix::from_row_slice(2, 2, &[2.0, 6.0, 1.0, 8.0])],
        )
        .unwrap();
        let rescaled = params.unit_healing_rescaled();
        assert_eq!(rescaled.delta(0), &DVector::from_element(2, 1.0));
        assert_eq!(
            rescaled.beta(0),
            &DMatrix::from_row_slice(2, 2, &[1.0, 3.0, 0.25, 2.0])
        );
    }

    #[test]
    fn rejects_malformed_params() {
        let bad_delta = TriVirusParams::new(
            vec![DVector::from_vec(vec![1.0, 0.0])],
            vec![DMatrix::identity(2, 2)],
        );
        assert!(matches!(
            bad_delta,
            Err(ModelError::NonPositiveHealing { .. })
        ));
        let bad_beta = TriVirusParams::new(
            vec![DVector::from_element(2, 1.0)],
            vec![DMatrix::from_row_slice(2, 2, &[1.0, -0.5, 0.0, 1.0])],
        );
        assert!(matches!(
            bad_beta,
            Err(ModelError::NegativeInfection { .. })
        ));
    }
}
