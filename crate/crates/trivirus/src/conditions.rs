//! Mechanical hypothesis/conclusion checkers producing an auditable report:
//! disease-free and boundary stability, nonexistence of triple and pair
//! coexistence under entrywise parameter orderings, the saturated-existence
//! trichotomy with its odd-count corollary, and the signed-graph
//! monotonicity test.
//!
//! All scalar verdicts carry an inconclusive band of 1e-8 around the
//! critical value. The theorems are silent at equality, so the checker
//! must not over-claim there.

use crate::equilibria::{self, EnumerationResult, EquilibriaError, EquilibriumKind};
use crate::model::{self, SystemState, TriVirusParams};
use crate::spectral::{self, OrderVerdict, SpectralError, ZERO_BAND};
use nalgebra::{DMatrix, DVector};
use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum ConditionsError {
    Spectral(SpectralError),
    Equilibria(String),
    /// The check's precondition fails, so its verdict is undefined.
    PreconditionFailed(String),
    /// Saturated-existence accounting needs a nondegenerate enumeration.
    DegenerateEnumeration,
}

impl fmt::Display for ConditionsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConditionsError::Spectral(e) => write!(f, "{e}"),
            ConditionsError::Equilibria(msg) => write!(f, "{msg}"),
            ConditionsError::PreconditionFailed(msg) => write!(f, "precondition failed: {msg}"),
            ConditionsError::DegenerateEnumeration => {
                write!(
                    f,
                    "enumeration is degenerate or suspects a continuum; refusing"
                )
            }
        }
    }
}

impl std::error::Error for ConditionsError {}

impl From<SpectralError> for ConditionsError {
    fn from(e: SpectralError) -> Self {
        ConditionsError::Spectral(e)
    }
}

impl From<EquilibriaError> for ConditionsError {
    fn from(e: EquilibriaError) -> Self {
        ConditionsError::Equilibria(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Holds,
    Fails,
    /// A deciding scalar sits within the 1e-8 band of its critical value.
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Holds => write!(f, "holds"),
            Verdict::Fails => write!(f, "fails"),
            Verdict::Inconclusive => write!(f, "inconclusive"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Witness {
    Scalar { name: String, value: f64 },
    Ordering { name: String, verdict: OrderVerdict },
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Witness::Scalar { name, value } => write!(f, "{name} = {value:.12}"),
            Witness::Ordering { name, verdict } => write!(f, "{name}: {verdict}"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct CheckRecord {
    pub check: String,
    pub hypothesis: Verdict,
    pub witnesses: Vec<Witness>,
    /// Machine-stable conclusion codes implied by the verdict.
    pub conclusions: Vec<String>,
    pub concerns: Vec<String>,
}

impl CheckRecord {
    /// Every record must carry at least one witness for its verdict.
    fn new(check: impl Into<String>, hypothesis: Verdict, witnesses: Vec<Witness>) -> Self {
        let record = CheckRecord {
            check: check.into(),
            hypothesis,
            witnesses,
            conclusions: Vec::new(),
            concerns: Vec::new(),
        };
        assert!(
            !record.witnesses.is_empty(),
            "check {} produced a verdict without witnesses",
            record.check
        );
        record
    }

    pub fn scalar_witness(&self, name: &str) -> Option<f64> {
        self.witnesses.iter().find_map(|w| match w {
            Witness::Scalar { name: n, value } if n == name => Some(*value),
            _ => None,
        })
    }
}

#[derive(Debug, Clone, Default)]
pub struct ConditionReport {
    pub records: Vec<CheckRecord>,
}

impl ConditionReport {
    pub fn find(&self, check: &str) -> Option<&CheckRecord> {
        self.records.iter().find(|r| r.check == check)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for record in &self.records {
            out.push_str(&format!("check: {}\n", record.check));
            out.push_str(&format!("hypothesis: {}\n", record.hypothesis));
            for w in &record.witnesses {
                out.push_str(&format!("  witness {w}\n"));
            }
            for c in &record.conclusions {
                out.push_str(&format!("  conclusion: {c}\n"));
            }
            for c in &record.concerns {
                out.push_str(&format!("  concern: {c}\n"));
            }
            out.push('\n');
        }
        out
    }
}

/// Abscissas s(-D^k + B^k) decide the disease-free state: all negative
/// gives global exponential stability, none positive still leaves the
/// DFE the unique equilibrium and asymptotically stable.
pub fn check_dfe_stability(params: &TriVirusParams) -> Result<CheckRecord, ConditionsError> {
    let m = params.virus_count();
    let mut witnesses = Vec::new();
    let mut abscissas = Vec::new();
    for k in 0..m {
        let mut mat = params.beta(k).clone();
        for i in 0..params.node_count() {
            mat[(i, i)] -= params.delta(k)[i];
        }
        let s = spectral::spectral_abscissa(&mat)?;
        witnesses.push(Witness::Scalar {
            name: format!("s(-D{0}+B{0})", k + 1),
            value: s,
        });
        abscissas.push(s);
    }
    let mut record = if abscissas.iter().all(|&s| s < -ZERO_BAND) {
        let mut r = CheckRecord::new("dfe-stability", Verdict::Holds, witnesses);
        r.conclusions
            .push("dfe-globally-exponentially-stable".into());
        r
    } else if abscissas.iter().all(|&s| s <= ZERO_BAND) {
        let mut r = CheckRecord::new("dfe-stability", Verdict::Holds, witnesses);
        r.conclusions.push("dfe-unique-equilibrium".into());
        r.conclusions.push("dfe-asymptotically-stable".into());
        r
    } else {
        let mut r = CheckRecord::new("dfe-stability", Verdict::Fails, witnesses);
        r.conclusions.push("dfe-unstable".into());
        r
    };
    if abscissas.iter().any(|&s| s.abs() <= ZERO_BAND) {
        record
            .concerns
            .push("an abscissa sits within 1e-8 of 0; classification is borderline".into());
    }
    Ok(record)
}

fn scaled_infection_shrunk(
    params: &TriVirusParams,
    anchor: &DVector<f64>,
    j: usize,
) -> DMatrix<f64> {
    let mut mat = params.scaled_infection(j);
    for i in 0..anchor.len() {
        let s = 1.0 - anchor[i];
        for c in 0..mat.ncols() {
            mat[(i, c)] *= s;
        }
    }
    mat
}

/// Boundary equilibrium (x~^k alive, others zero) is locally exponentially
/// stable iff both invasion radii rho((I-X~^k)(D^j)^{-1}B^j), j != k, are
/// below one.
pub fn check_boundary_stability(
    params: &TriVirusParams,
    k: usize,
) -> Result<CheckRecord, ConditionsError> {
    let m = params.virus_count();
    let mut own = params.beta(k).clone();
    for i in 0..params.node_count() {
        own[(i, i)] -= params.delta(k)[i];
    }
    let own_abscissa = spectral::spectral_abscissa(&own)?;
    if own_abscissa <= ZERO_BAND {
        return Err(ConditionsError::PreconditionFailed(format!(
            "s(B{0}-D{0}) = {1:.3e} is not positive, so virus {0} has no boundary equilibrium",
            k + 1,
            own_abscissa
        )));
    }
    let anchor = equilibria::single_virus_equilibrium(params.delta(k), params.beta(k))?
        .ok_or_else(|| {
            ConditionsError::PreconditionFailed(format!(
                "virus {} has no boundary equilibrium despite positive abscissa",
                k + 1
            ))
        })?;
    let mut witnesses = vec![Witness::Scalar {
        name: format!("s(B{0}-D{0})", k + 1),
        value: own_abscissa,
    }];
    let mut radii = Vec::new();
    for j in (0..m).filter(|&j| j != k) {
        let r = spectral::spectral_radius(&scaled_infection_shrunk(params, &anchor, j))?;
        witnesses.push(Witness::Scalar {
            name: format!("rho((I-X~{})(D{j1})^-1B{j1})", k + 1, j1 = j + 1),
            value: r,
        });
        radii.push(r);
    }
    let verdict = if radii.iter().any(|&r| r > 1.0 + ZERO_BAND) {
        Verdict::Fails
    } else if radii.iter().any(|&r| (r - 1.0).abs() <= ZERO_BAND) {
        Verdict::Inconclusive
    } else {
        Verdict::Holds
    };
    let mut record = CheckRecord::new(
        format!("boundary-stability-virus-{}", k + 1),
        verdict,
        witnesses,
    );
    match verdict {
        Verdict::Holds => record
            .conclusions
            .push(format!("boundary-{}-stable", k + 1)),
        Verdict::Fails => record
            .conclusions
            .push(format!("boundary-{}-unstable", k + 1)),
        Verdict::Inconclusive => record
            .concerns
            .push("an invasion radius sits within 1e-8 of 1".into()),
    }
    Ok(record)
}

struct RhoSummary {
    witnesses: Vec<Witness>,
    all_above: bool,
    any_band: bool,
}

fn supercriticality(params: &TriVirusParams) -> Result<RhoSummary, ConditionsError> {
    let mut witnesses = Vec::new();
    let mut all_above = true;
    let mut any_band = false;
    for k in 0..params.virus_count() {
        let rho = spectral::spectral_radius(&params.scaled_infection(k))?;
        witnesses.push(Witness::Scalar {
            name: format!("rho((D{0})^-1B{0})", k + 1),
            value: rho,
        });
        if rho <= 1.0 + ZERO_BAND {
            all_above = false;
        }
        if (rho - 1.0).abs() <= ZERO_BAND {
            any_band = true;
        }
    }
    Ok(RhoSummary {
        witnesses,
        all_above,
        any_band,
    })
}

/// Strongest ordering: some relabeling (weakest, middle, strongest) has
/// strictly increasing scaled infection matrices, every virus above
/// threshold. Rules out all 3-coexistence and pins the boundary fates.
pub fn check_triple_nonexistence(params: &TriVirusParams) -> Result<CheckRecord, ConditionsError> {
    let name = "nonexistence-3-coexistence";
    let mut reducible = Vec::new();
    for k in 0..params.virus_count() {
        if !spectral::is_irreducible(params.beta(k))? {
            reducible.push(k + 1);
        }
    }
    let rho = supercriticality(params)?;
    let mut witnesses = rho.witnesses;
    if !reducible.is_empty() {
        let mut record = CheckRecord::new(name, Verdict::Fails, witnesses);
        record.concerns.push(format!(
            "infection matrices of viruses {reducible:?} are not irreducible"
        ));
        return Ok(record);
    }
    if !rho.all_above {
        let verdict = if rho.any_band {
            Verdict::Inconclusive
        } else {
            Verdict::Fails
        };
        let mut record = CheckRecord::new(name, verdict, witnesses);
        record
            .concerns
            .push("some virus is not above threshold".into());
        return Ok(record);
    }

    let scaled: Vec<DMatrix<f64>> = (0..params.virus_count())
        .map(|k| params.scaled_infection(k))
        .collect();
    let mut satisfied: Option<[usize; 3]> = None;
    for perm in PERMUTATIONS {
        let [weak, mid, strong] = perm;
        let lower = spectral::elementwise_greater(&scaled[mid], &scaled[weak])?;
        let upper = spectral::elementwise_greater(&scaled[strong], &scaled[mid])?;
        if lower.dominates() && upper.dominates() {
            witnesses.push(Witness::Ordering {
                name: format!("(D{1})^-1B{1} vs (D{0})^-1B{0}", weak + 1, mid + 1),
                verdict: lower,
            });
            witnesses.push(Witness::Ordering {
                name: format!("(D{1})^-1B{1} vs (D{0})^-1B{0}", mid + 1, strong + 1),
                verdict: upper,
            });
            satisfied = Some(perm);
            break;
        }
    }
    match satisfied {
        Some([weak, mid, strong]) => {
            let mut record = CheckRecord::new(name, Verdict::Holds, witnesses);
            record.conclusions.push(format!(
                "ordering-holds-for-relabeling-{}-{}-{}",
                weak + 1,
                mid + 1,
                strong + 1
            ));
            record.conclusions.push("dfe-unstable".into());
            record
                .conclusions
                .push(format!("boundary-{}-unstable", weak + 1));
            record
                .conclusions
                .push(format!("boundary-{}-unstable", mid + 1));
            record
                .conclusions
                .push(format!("boundary-{}-stable", strong + 1));
            record.conclusions.push("no-3-coexistence".into());
            Ok(record)
        }
        None => {
            witnesses.push(Witness::Ordering {
                name: "(D2)^-1B2 vs (D1)^-1B1".into(),
                verdict: spectral::elementwise_greater(&scaled[1], &scaled[0])?,
            });
            let mut record = CheckRecord::new(name, Verdict::Fails, witnesses);
            record
                .concerns
                .push("no virus relabeling yields a strictly increasing chain".into());
            Ok(record)
        }
    }
}

const PERMUTATIONS: [[usize; 3]; 6] = [
    [0, 1, 2],
    [0, 2, 1],
    [1, 0, 2],
    [1, 2, 0],
    [2, 0, 1],
    [2, 1, 0],
];

/// Weaker ordering: one dominated virus d with both others entrywise
/// above it. Rules out exactly the 2-coexistence forms containing d;
/// the form pairing the two dominating viruses stays possible.
pub fn check_pair_nonexistence(params: &TriVirusParams) -> Result<CheckRecord, ConditionsError> {
    let name = "nonexistence-2-coexistence-forms";
    let rho = supercriticality(params)?;
    let mut witnesses = rho.witnesses;
    if !rho.all_above {
        let verdict = if rho.any_band {
            Verdict::Inconclusive
        } else {
            Verdict::Fails
        };
        let mut record = CheckRecord::new(name, verdict, witnesses);
        record
            .concerns
            .push("some virus is not above threshold".into());
        return Ok(record);
    }
    let scaled: Vec<DMatrix<f64>> = (0..params.virus_count())
        .map(|k| params.scaled_infection(k))
        .collect();
    let mut dominated: Option<(usize, [usize; 2])> = None;
    for d in 0..3 {
        let others = [(d + 1) % 3, (d + 2) % 3];
        let first = spectral::elementwise_greater(&scaled[others[0]], &scaled[d])?;
        let second = spectral::elementwise_greater(&scaled[others[1]], &scaled[d])?;
        if first.dominates() && second.dominates() {
            for (o, v) in others.iter().zip([first, second]) {
                witnesses.push(Witness::Ordering {
                    name: format!("(D{1})^-1B{1} vs (D{0})^-1B{0}", d + 1, o + 1),
                    verdict: v,
                });
            }
            dominated = Some((d, others));
            break;
        }
    }
    match dominated {
        Some((d, others)) => {
            let mut record = CheckRecord::new(name, Verdict::Holds, witnesses);
            let mut sorted = others;
            sorted.sort_unstable();
            record
                .conclusions
                .push(format!("dominated-virus-{}", d + 1));
            record.conclusions.push("dfe-unstable".into());
            record
                .conclusions
                .push(format!("boundary-{}-unstable", d + 1));
            for o in sorted {
                let mut pair = [d + 1, o + 1];
                pair.sort_unstable();
                record.conclusions.push(format!(
                    "no-2-coexistence-of-viruses-{}-{}",
                    pair[0], pair[1]
                ));
            }
            Ok(record)
        }
        None => {
            witnesses.push(Witness::Ordering {
                name: "(D2)^-1B2 vs (D1)^-1B1".into(),
                verdict: spectral::elementwise_greater(&scaled[1], &scaled[0])?,
            });
            let mut record = CheckRecord::new(name, Verdict::Fails, witnesses);
            record
                .concerns
                .push("no virus is entrywise dominated by both others".into());
            Ok(record)
        }
    }
}

/// Trichotomy over a certified enumeration: a stable boundary equilibrium,
/// a saturated 2-coexistence equilibrium, or a 3-coexistence equilibrium
/// must be present. When every boundary equilibrium repels both rivals and
/// every pair equilibrium is unsaturated, the 3-coexistence count must
/// additionally be odd.
pub fn check_saturated_existence(
    params: &TriVirusParams,
    enumeration: &EnumerationResult,
) -> Result<CheckRecord, ConditionsError> {
    let name = "saturated-existence";
    if !enumeration.nondegenerate {
        return Err(ConditionsError::DegenerateEnumeration);
    }
    let rho = supercriticality(params)?;
    let mut witnesses = rho.witnesses;
    if !rho.all_above {
        let verdict = if rho.any_band {
            Verdict::Inconclusive
        } else {
            Verdict::Fails
        };
        let mut record = CheckRecord::new(name, verdict, witnesses);
        record.conclusions.push("not-applicable".into());
        return Ok(record);
    }

    let stable_boundary = enumeration
        .equilibria
        .iter()
        .any(|e| matches!(e.kind, EquilibriumKind::Boundary(_)) && e.is_stable);
    let saturated_pair = enumeration
        .equilibria
        .iter()
        .any(|e| matches!(e.kind, EquilibriumKind::PairCoexistence(..)) && e.is_saturated);
    let triple_count = enumeration.three_coexistence_count();
    witnesses.push(Witness::Scalar {
        name: "3-coexistence-count".into(),
        value: triple_count as f64,
    });

    let mut record = CheckRecord::new(name, Verdict::Holds, witnesses);
    if stable_boundary {
        record.conclusions.push("trichotomy-stable-boundary".into());
    }
    if saturated_pair {
        record
            .conclusions
            .push("trichotomy-saturated-2-coexistence".into());
    }
    if triple_count > 0 {
        record.conclusions.push("trichotomy-3-coexistence".into());
    }
    if record.conclusions.is_empty() {
        record.hypothesis = Verdict::Fails;
        record
            .concerns
            .push("no trichotomy member found; the enumeration may be incomplete".into());
        return Ok(record);
    }

    // corollary accounting: all six invasion radii above one and every
    // pair equilibrium unsaturated force an odd 3-coexistence count
    let mut anchors = Vec::new();
    for k in 0..3 {
        anchors.push(
            equilibria::single_virus_equilibrium(params.delta(k), params.beta(k))?
                .expect("above threshold, so the boundary profile exists"),
        );
    }
    let mut all_invaded = true;
    let mut any_band = false;
    for i in 0..3 {
        for j in (0..3).filter(|&j| j != i) {
            let r = spectral::spectral_radius(&scaled_infection_shrunk(params, &anchors[i], j))?;
            record.witnesses.push(Witness::Scalar {
                name: format!("rho((I-X~{})(D{j1})^-1B{j1})", i + 1, j1 = j + 1),
                value: r,
            });
            if r <= 1.0 + ZERO_BAND {
                all_invaded = false;
            }
            if (r - 1.0).abs() <= ZERO_BAND {
                any_band = true;
            }
        }
    }
    let mut pairs_all_unsaturated = true;
    for eq in &enumeration.equilibria {
        let EquilibriumKind::PairCoexistence(i, j) = eq.kind else {
            continue;
        };
        let dead = 3 - i - j;
        let mut block = params.beta(dead).clone();
        let susceptible = {
            let mut s = DVector::from_element(params.node_count(), 1.0);
            s -= eq.state.node_totals();
            s
        };
        for r in 0..params.node_count() {
            for c in 0..params.node_count() {
                block[(r, c)] *= susceptible[r];
            }
            block[(r, r)] -= params.delta(dead)[r];
        }
        let s = spectral::spectral_abscissa(&block)?;
        record.witnesses.push(Witness::Scalar {
            name: format!("s(-D{d}+(I-X-{}{})B{d})", i + 1, j + 1, d = dead + 1),
            value: s,
        });
        if s < -ZERO_BAND {
            pairs_all_unsaturated = false;
        } else if s.abs() <= ZERO_BAND {
            any_band = true;
        }
    }
    let has_pair = enumeration
        .equilibria
        .iter()
        .any(|e| matches!(e.kind, EquilibriumKind::PairCoexistence(..)));
    if all_invaded && pairs_all_unsaturated && has_pair {
        record.conclusions.push("corollary-applicable".into());
        record
            .conclusions
            .push(format!("3-coexistence-count-{triple_count}"));
        if triple_count % 2 == 1 {
            record.conclusions.push("odd-3-coexistence-count".into());
        } else {
            record.hypothesis = Verdict::Fails;
            record.concerns.push(format!(
                "corollary hypotheses hold but the 3-coexistence count {triple_count} is even; \
                 the enumeration is likely incomplete"
            ));
        }
    } else if any_band {
        record
            .concerns
            .push("a corollary scalar sits within 1e-8 of its critical value".into());
    }
    Ok(record)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SignedEdge {
    pub from: usize,
    pub to: usize,
    /// +1 or -1.
    pub sign: i8,
}

/// Signed digraph of Jacobian off-diagonal signs. The sign pattern is
/// constant on the interior of the domain, so one probe state suffices.
#[derive(Debug, Clone)]
pub struct SignedGraph {
    pub vertices: usize,
    pub edges: Vec<SignedEdge>,
}

/// Probe at x^k = 1/(2m) 1: strictly interior with strictly positive
/// susceptibles, so every structural nonzero of the Jacobian is visible.
pub fn build_jacobian_sign_graph(params: &TriVirusParams) -> SignedGraph {
    let m = params.virus_count();
    let n = params.node_count();
    let probe = SystemState::uniform(n, &vec![1.0 / (2.0 * m as f64); m]);
    let jac = model::jacobian(params, &probe).expect("probe state is interior");
    let dim = m * n;
    let mut edges = Vec::new();
    for i in 0..dim {
        for j in 0..dim {
            if i == j {
                continue;
            }
            let v = jac[(i, j)];
            if v > 0.0 {
                edges.push(SignedEdge {
                    from: i,
                    to: j,
                    sign: 1,
                });
            } else if v < 0.0 {
                edges.push(SignedEdge {
                    from: i,
                    to: j,
                    sign: -1,
                });
            }
        }
    }
    SignedGraph {
        vertices: dim,
        edges,
    }
}

/// Balance test: true iff vertices admit a +/-1 labeling with every edge
/// sign equal to the product of its endpoint labels, which is equivalent
/// to every undirected cycle having positive sign product.
pub fn is_sign_consistent(graph: &SignedGraph) -> bool {
    let mut adjacency: Vec<Vec<(usize, i8)>> = vec![Vec::new(); graph.vertices];
    for e in &graph.edges {
        adjacency[e.from].push((e.to, e.sign));
        adjacency[e.to].push((e.from, e.sign));
    }
    let mut label: Vec<i8> = vec![0; graph.vertices];
    for start in 0..graph.vertices {
        if label[start] != 0 {
            continue;
        }
        label[start] = 1;
        let mut queue = std::collections::VecDeque::from([start]);
        while let Some(u) = queue.pop_front() {
            for &(v, sign) in &adjacency[u] {
                let expected = label[u] * sign;
                if label[v] == 0 {
                    label[v] = expected;
                    queue.push_back(v);
                } else if label[v] != expected {
                    return false;
                }
            }
        }
    }
    true
}

/// Run every parameter-only check, plus the enumeration-dependent one when
/// an enumeration is supplied. Boundary checks for below-threshold viruses
/// are recorded as inapplicable rather than failing the whole report.
pub fn full_report(
    params: &TriVirusParams,
    enumeration: Option<&EnumerationResult>,
) -> Result<ConditionReport, ConditionsError> {
    let mut report = ConditionReport::default();
    report.records.push(check_dfe_stability(params)?);
    for k in 0..params.virus_count() {
        match check_boundary_stability(params, k) {
            Ok(record) => report.records.push(record),
            Err(ConditionsError::PreconditionFailed(msg)) => {
                let mut record = CheckRecord::new(
                    format!("boundary-stability-virus-{}", k + 1),
                    Verdict::Inconclusive,
                    vec![Witness::Scalar {
                        name: "not-applicable".into(),
                        value: f64::NAN,
                    }],
                );
                record.concerns.push(msg);
                report.records.push(record);
            }
            Err(e) => return Err(e),
        }
    }
    if params.virus_count() == 3 {
        report.records.push(check_triple_nonexistence(params)?);
        report.records.push(check_pair_nonexistence(params)?);
        if let Some(enumeration) = enumeration {
            report
                .records
                .push(check_saturated_existence(params, enumeration)?);
        }
    }
    let graph = build_jacobian_sign_graph(params);
    let consistent = is_sign_consistent(&graph);
    let mut record = CheckRecord::new(
        "sign-graph-consistency",
        if consistent {
            Verdict::Holds
        } else {
            Verdict::Fails
        },
        vec![Witness::Scalar {
            name: "signed-edge-count".into(),
            value: graph.edges.len() as f64,
        }],
    );
    record.conclusions.push(if consistent {
        "system-is-monotone-compatible".into()
    } else {
        "system-is-not-monotone".into()
    });
    report.records.push(record);
    Ok(report)
}
