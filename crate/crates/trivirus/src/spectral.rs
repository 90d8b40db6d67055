//! Spectral radius, abscissa, Perron pairs, irreducibility and Metzler tests.
//!
//! Eigenvalues come from a dense Schur decomposition. Perron vectors are
//! computed independently by shifted power iteration so eigensolver output
//! can be cross-checked where it matters.

use nalgebra::{Complex, DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::fmt;

/// Half-width of the band around critical values (radius 1, abscissa 0)
/// inside which verdicts are reported as inconclusive.
pub const ZERO_BAND: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub enum SpectralError {
    NonSquare {
        rows: usize,
        cols: usize,
    },
    DimensionMismatch {
        a: (usize, usize),
        b: (usize, usize),
    },
    NonFinite,
    NegativeEntry {
        row: usize,
        col: usize,
        value: f64,
    },
    NotIrreducible,
    /// Iterative eigencomputation failed to settle; pathological spectrum.
    NoConvergence,
    /// positive_null_vector called on a matrix whose abscissa is not ~0.
    NotSingular {
        abscissa: f64,
    },
}

impl fmt::Display for SpectralError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpectralError::NonSquare { rows, cols } => {
                write!(f, "matrix is {rows}x{cols}, not square")
            }
            SpectralError::DimensionMismatch { a, b } => {
                write!(f, "dimension mismatch: {}x{} vs {}x{}", a.0, a.1, b.0, b.1)
            }
            SpectralError::NonFinite => write!(f, "non-finite matrix entry"),
            SpectralError::NegativeEntry { row, col, value } => {
                write!(f, "entry ({row},{col}) = {value} is negative")
            }
            SpectralError::NotIrreducible => write!(f, "matrix is not irreducible"),
            SpectralError::NoConvergence => write!(f, "power iteration did not converge"),
            SpectralError::NotSingular { abscissa } => {
                write!(
                    f,
                    "spectral abscissa {abscissa} is not within tolerance of 0"
                )
            }
        }
    }
}

impl std::error::Error for SpectralError {}

fn check_square(m: &DMatrix<f64>) -> Result<(), SpectralError> {
    if m.nrows() != m.ncols() || m.nrows() == 0 {
        return Err(SpectralError::NonSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(SpectralError::NonFinite);
    }
    Ok(())
}

fn check_nonnegative(m: &DMatrix<f64>) -> Result<(), SpectralError> {
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if m[(i, j)] < 0.0 {
                return Err(SpectralError::NegativeEntry {
                    row: i,
                    col: j,
                    value: m[(i, j)],
                });
            }
        }
    }
    Ok(())
}

pub fn eigenvalues(m: &DMatrix<f64>) -> Result<Vec<Complex<f64>>, SpectralError> {
    check_square(m)?;
    let n = m.nrows();
    if n == 1 {
        return Ok(vec![Complex::new(m[(0, 0)], 0.0)]);
    }
    // Plain Francis QR can stall on exactly cyclic patterns (several
    // eigenvalues sharing one modulus), so the iteration budget is capped
    // and stalls retry under a seeded random orthogonal similarity: same
    // spectrum up to roundoff, structure broken.
    let budget = 200 * n;
    if let Some(schur) = m.clone().try_schur(f64::EPSILON, budget) {
        return Ok(schur.complex_eigenvalues().iter().copied().collect());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x51e9);
    for _ in 0..3 {
        let g = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        let q = g.qr().q();
        let rotated = q.transpose() * m * &q;
        if let Some(schur) = rotated.try_schur(f64::EPSILON, budget) {
            return Ok(schur.complex_eigenvalues().iter().copied().collect());
        }
    }
    Err(SpectralError::NoConvergence)
}

/// max |lambda| over the spectrum; callers wanting Perron theory must pass a
/// nonnegative matrix.
pub fn spectral_radius(m: &DMatrix<f64>) -> Result<f64, SpectralError> {
    check_square(m)?;
    check_nonnegative(m)?;
    Ok(eigenvalues(m)?.iter().map(|l| l.norm()).fold(0.0, f64::max))
}

/// max Re(lambda) over the spectrum of any real square matrix.
pub fn spectral_abscissa(m: &DMatrix<f64>) -> Result<f64, SpectralError> {
    check_square(m)?;
    Ok(eigenvalues(m)?
        .iter()
        .map(|l| l.re)
        .fold(f64::NEG_INFINITY, f64::max))
}

/// Strong connectivity of the digraph with an edge i -> j iff m[(i,j)] > 0.
/// A 1x1 matrix is irreducible iff its entry is positive.
pub fn is_irreducible(m: &DMatrix<f64>) -> Result<bool, SpectralError> {
    check_square(m)?;
    let n = m.nrows();
    if n == 1 {
        return Ok(m[(0, 0)] > 0.0);
    }
    let mut reach = vec![false; n * n];
    for i in 0..n {
        for j in 0..n {
            reach[i * n + j] = m[(i, j)] != 0.0;
        }
    }
    for k in 0..n {
        for i in 0..n {
            if reach[i * n + k] {
                for j in 0..n {
                    if reach[k * n + j] {
                        reach[i * n + j] = true;
                    }
                }
            }
        }
    }
    Ok((0..n).all(|i| (0..n).all(|j| i == j || reach[i * n + j])))
}

/// Dominant eigenpair of a nonnegative matrix with strictly positive
/// diagonal (hence primitive when irreducible), by power iteration with
/// Collatz-Wielandt bounds. Inner routine for the public Perron helpers.
fn dominant_pair_primitive(a: &DMatrix<f64>) -> Result<(f64, DVector<f64>), SpectralError> {
    let n = a.nrows();
    let mut v = DVector::from_element(n, 1.0 / n as f64);
    let mut w = DVector::zeros(n);
    for _ in 0..200_000 {
        w.gemv(1.0, a, &v, 0.0);
        let mut lo = f64::INFINITY;
        let mut hi: f64 = 0.0;
        for i in 0..n {
            let r = w[i] / v[i];
            lo = lo.min(r);
            hi = hi.max(r);
        }
        let scale = w.amax();
        w /= scale;
        std::mem::swap(&mut v, &mut w);
        // min and max ratios always bracket the Perron root
        if hi - lo <= 1e-13 * hi.max(1.0) {
            return Ok((0.5 * (lo + hi), v));
        }
    }
    Err(SpectralError::NoConvergence)
}

/// Perron root and right Perron vector (max entry 1) of a nonnegative
/// irreducible matrix.
pub fn perron_pair(m: &DMatrix<f64>) -> Result<(f64, DVector<f64>), SpectralError> {
    check_square(m)?;
    check_nonnegative(m)?;
    if !is_irreducible(m)? {
        return Err(SpectralError::NotIrreducible);
    }
    // shift by I: same eigenvectors, spectrum moved off the unit circle
    let shifted = m + DMatrix::<f64>::identity(m.nrows(), m.nrows());
    let (rho_shifted, v) = dominant_pair_primitive(&shifted)?;
    Ok((rho_shifted - 1.0, v))
}

/// Perron root and left Perron vector of a nonnegative irreducible matrix.
pub fn perron_left_pair(m: &DMatrix<f64>) -> Result<(f64, DVector<f64>), SpectralError> {
    perron_pair(&m.transpose())
}

/// Positive null vector (max entry 1) of an irreducible Metzler matrix whose
/// spectral abscissa is zero, i.e. the negation of a singular M-matrix.
pub fn positive_null_vector(m: &DMatrix<f64>) -> Result<DVector<f64>, SpectralError> {
    check_square(m)?;
    let n = m.nrows();
    let min_diag = (0..n).map(|i| m[(i, i)]).fold(f64::INFINITY, f64::min);
    let shift = 1.0 + (-min_diag).max(0.0);
    let shifted = m + DMatrix::<f64>::identity(n, n) * shift;
    check_nonnegative(&shifted)?;
    if !is_irreducible(&shifted)? {
        return Err(SpectralError::NotIrreducible);
    }
    let (rho, v) = dominant_pair_primitive(&shifted)?;
    let abscissa = rho - shift;
    if abscissa.abs() > 1e-6 * shift.max(1.0) {
        return Err(SpectralError::NotSingular { abscissa });
    }
    Ok(v)
}

#[derive(Debug, Clone)]
pub struct SpectralSummary {
    pub spectral_radius: f64,
    pub spectral_abscissa: f64,
    /// Perron vectors, present iff the matrix is nonnegative irreducible.
    pub dominant_right: Option<DVector<f64>>,
    pub dominant_left: Option<DVector<f64>>,
    pub is_irreducible: bool,
}

pub fn summarize(m: &DMatrix<f64>) -> Result<SpectralSummary, SpectralError> {
    check_square(m)?;
    let eig = eigenvalues(m)?;
    let radius = eig.iter().map(|l| l.norm()).fold(0.0, f64::max);
    let abscissa = eig.iter().map(|l| l.re).fold(f64::NEG_INFINITY, f64::max);
    let nonneg = check_nonnegative(m).is_ok();
    let irreducible = is_irreducible(m)?;
    let (right, left) = if nonneg && irreducible {
        (Some(perron_pair(m)?.1), Some(perron_left_pair(m)?.1))
    } else {
        (None, None)
    };
    Ok(SpectralSummary {
        spectral_radius: radius,
        spectral_abscissa: abscissa,
        dominant_right: right,
        dominant_left: left,
        is_irreducible: irreducible,
    })
}

/// Entrywise comparison verdict for A against B, exact (no tolerance).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrderVerdict {
    /// Every entry of A strictly exceeds B's.
    StrictlyGreater,
    /// A >= B entrywise with at least one strict entry.
    Greater,
    /// A == B entrywise.
    GreaterEqual,
    Incomparable,
}

impl OrderVerdict {
    /// A dominates B in the order used by the nonexistence hypotheses
    /// (entrywise >= with A != B).
    pub fn dominates(self) -> bool {
        matches!(self, OrderVerdict::StrictlyGreater | OrderVerdict::Greater)
    }
}

impl fmt::Display for OrderVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            OrderVerdict::StrictlyGreater => ">>",
            OrderVerdict::Greater => ">",
            OrderVerdict::GreaterEqual => ">=",
            OrderVerdict::Incomparable => "incomparable",
        };
        f.write_str(s)
    }
}

pub fn elementwise_greater(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
) -> Result<OrderVerdict, SpectralError> {
    if a.shape() != b.shape() {
        return Err(SpectralError::DimensionMismatch {
            a: a.shape(),
            b: b.shape(),
        });
    }
    if a.iter().any(|v| !v.is_finite()) || b.iter().any(|v| !v.is_finite()) {
        return Err(SpectralError::NonFinite);
    }
    let mut any_less = false;
    let mut any_equal = false;
    let mut any_strict = false;
    for (x, y) in a.iter().zip(b.iter()) {
        if x < y {
            any_less = true;
        } else if x == y {
            any_equal = true;
        } else {
            any_strict = true;
        }
    }
    Ok(if any_less {
        OrderVerdict::Incomparable
    } else if !any_equal {
        OrderVerdict::StrictlyGreater
    } else if any_strict {
        OrderVerdict::Greater
    } else {
        OrderVerdict::GreaterEqual
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MetzlerClass {
    /// Off-diagonal entries all nonnegative.
    pub is_metzler: bool,
    /// Spectral abscissa strictly negative.
    pub is_hurwitz: bool,
    /// Metzler with abscissa zero (within ZERO_BAND): the negation is a
    /// singular M-matrix.
    pub is_singular_m_matrix_negation: bool,
}

pub fn classify_metzler(m: &DMatrix<f64>) -> Result<MetzlerClass, SpectralError> {
    check_square(m)?;
    let n = m.nrows();
    let mut metzler = true;
    'outer: for i in 0..n {
        for j in 0..n {
            if i != j && m[(i, j)] < 0.0 {
                metzler = false;
                break 'outer;
            }
        }
    }
    let abscissa = spectral_abscissa(m)?;
    Ok(MetzlerClass {
        is_metzler: metzler,
        is_hurwitz: abscissa < 0.0,
        is_singular_m_matrix_negation: metzler && abscissa.abs() <= ZERO_BAND,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ring_plus_noise(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
        // cycle edges guarantee irreducibility regardless of the noise draw
        let mut m = DMatrix::from_fn(n, n, |_, _| {
            if rng.gen_bool(0.5) {
                rng.gen_range(0.0..2.0)
            } else {
                0.0
            }
        });
        for i in 0..n {
            m[(i, (i + 1) % n)] += rng.gen_range(0.1..1.0);
        }
        m
    }

    #[test]
    fn cyclic_matrices_terminate_in_both_orientations() {
        // exact weighted cycles stall plain QR in one orientation; both must
        // return the full modulus-w spectrum
        for flip in [false, true] {
            let m = DMatrix::from_fn(4, 4, |i, j| {
                let target = if flip { (i + 3) % 4 } else { (i + 1) % 4 };
                if j == target {
                    1.5
                } else {
                    0.0
                }
            });
            let eig = eigenvalues(&m).unwrap();
            assert_eq!(eig.len(), 4);
            for l in &eig {
                assert!((l.norm() - 1.5).abs() < 1e-10, "modulus {}", l.norm());
            }
            assert!((spectral_radius(&m).unwrap() - 1.5).abs() < 1e-10);
        }
    }

    #[test]
    fn radius_of_permutation_and_diagonal() {
        let swap = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        assert!((spectral_radius(&swap).unwrap() - 1.0).abs() < 1e-12);
        let diag = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 3.0]);
        assert!((spectral_radius(&diag).unwrap() - 3.0).abs() < 1e-12);
        assert!(!is_irreducible(&diag).unwrap());
    }

    #[test]
    fn abscissa_of_rotation_block() {
        // eigenvalues -1 +- 2i
        let m = DMatrix::from_row_slice(2, 2, &[-1.0, -2.0, 2.0, -1.0]);
        assert!((spectral_abscissa(&m).unwrap() + 1.0).abs() < 1e-10);
    }

    #[test]
    fn irreducibility_cases() {
        let ring = DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0]);
        assert!(is_irreducible(&ring).unwrap());
        let triangular = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]);
        assert!(!is_irreducible(&triangular).unwrap());
        assert!(is_irreducible(&DMatrix::from_element(1, 1, 0.5)).unwrap());
        assert!(!is_irreducible(&DMatrix::from_element(1, 1, 0.0)).unwrap());
    }

    #[test]
    fn perron_pair_matches_eigensolver() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let n = rng.gen_range(2..8);
            let m = ring_plus_noise(&mut rng, n);
            let (rho, v) = perron_pair(&m).unwrap();
            let rho_eig = spectral_radius(&m).unwrap();
            assert!(
                (rho - rho_eig).abs() <= 1e-10 * rho.max(1.0),
                "power {rho} vs eigen {rho_eig}"
            );
            assert!(v.iter().all(|&x| x > 0.0));
            let residual = (&m * &v - &v * rho).amax();
            assert!(residual < 1e-9 * v.amax());
        }
    }

    #[test]
    fn left_pair_transposes_right() {
        let m = DMatrix::from_row_slice(3, 3, &[0.2, 1.0, 0.0, 0.3, 0.1, 2.0, 1.5, 0.0, 0.4]);
        let (rho_l, u) = perron_left_pair(&m).unwrap();
        let (rho_r, _) = perron_pair(&m).unwrap();
        assert!((rho_l - rho_r).abs() < 1e-11 * rho_r.max(1.0));
        let residual = (m.transpose() * &u - &u * rho_l).amax();
        assert!(residual < 1e-9);
    }

    #[test]
    fn null_vector_of_negated_laplacian() {
        // -L for the path graph: Metzler, irreducible, abscissa 0
        let m = DMatrix::from_row_slice(3, 3, &[-1.0, 1.0, 0.0, 1.0, -2.0, 1.0, 0.0, 1.0, -1.0]);
        let v = positive_null_vector(&m).unwrap();
        assert!((&m * &v).amax() < 1e-9);
        assert!(v.iter().all(|&x| x > 0.0));
        let shifted = &m - DMatrix::<f64>::identity(3, 3) * 0.5;
        assert!(matches!(
            positive_null_vector(&shifted),
            Err(SpectralError::NotSingular { .. })
        ));
    }

    #[test]
    fn order_verdicts() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let b = DMatrix::from_row_slice(2, 2, &[0.5, 1.0, 2.0, 3.0]);
        assert_eq!(
            elementwise_greater(&a, &b).unwrap(),
            OrderVerdict::StrictlyGreater
        );
        let mut c = a.clone();
        c[(0, 0)] = 1.0;
        let mut d = a.clone();
        d[(0, 1)] = 2.0;
        assert_eq!(
            elementwise_greater(&a, &a).unwrap(),
            OrderVerdict::GreaterEqual
        );
        d[(0, 1)] = 1.5;
        assert_eq!(elementwise_greater(&a, &d).unwrap(), OrderVerdict::Greater);
        let mut e = b.clone();
        e[(1, 1)] = 10.0;
        assert_eq!(
            elementwise_greater(&a, &e).unwrap(),
            OrderVerdict::Incomparable
        );
        assert!(!OrderVerdict::GreaterEqual.dominates());
        assert!(OrderVerdict::Greater.dominates());
    }

    #[test]
    fn metzler_classification() {
        let neg_ident = DMatrix::<f64>::identity(2, 2) * -1.0;
        let c = classify_metzler(&neg_ident).unwrap();
        assert!(c.is_metzler && c.is_hurwitz && !c.is_singular_m_matrix_negation);
        let laplacian_neg = DMatrix::from_row_slice(2, 2, &[-1.0, 1.0, 1.0, -1.0]);
        let c = classify_metzler(&laplacian_neg).unwrap();
        assert!(c.is_metzler && !c.is_hurwitz && c.is_singular_m_matrix_negation);
        let not_metzler = DMatrix::from_row_slice(2, 2, &[-1.0, -0.1, 0.0, -1.0]);
        assert!(!classify_metzler(&not_metzler).unwrap().is_metzler);
    }

    #[test]
    fn sign_of_abscissa_tracks_radius_threshold() {
        // s(B - D) and rho(D^{-1} B) - 1 always share their sign
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..50 {
            let n = rng.gen_range(2..8);
            let b = ring_plus_noise(&mut rng, n) * rng.gen_range(0.2..1.5);
            let d = DVector::from_fn(n, |_, _| rng.gen_range(0.5..1.5));
            let mut bd = b.clone();
            for i in 0..n {
                bd[(i, i)] -= d[i];
            }
            let s = spectral_abscissa(&bd).unwrap();
            let mut scaled = b.clone();
            for i in 0..n {
                for j in 0..n {
                    scaled[(i, j)] /= d[i];
                }
            }
            let rho = spectral_radius(&scaled).unwrap();
            if s.abs() > 1e-8 && (rho - 1.0).abs() > 1e-8 {
                assert_eq!(s > 0.0, rho > 1.0, "s = {s}, rho = {rho}");
            }
        }
    }
}
