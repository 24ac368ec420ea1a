//! Dense symmetric-matrix spectral toolkit: eigendecomposition, top-d
//! projectors, Fisher-weighted norms, spectral gaps, and subspace
//! perturbation (Davis-Kahan) checks.
//!
//! Everything is deterministic: the eigensolver is cyclic Jacobi with a
//! fixed sweep order, eigenvalues are sorted non-increasing with a stable
//! tie order, and each eigenvector is sign-normalized so that its
//! largest-magnitude component is positive.

use crate::error::{Error, Result};
use crate::mat::{dot, norm, normalize, Mat};
use crate::scalar::{tol, Real};

/// Validated symmetric matrix with finite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix<S> {
    mat: Mat<S>,
}

impl<S: Real> SymMatrix<S> {
    /// Validates symmetry (relative to the largest entry) and finiteness.
    pub fn new(mat: Mat<S>) -> Result<Self> {
        let n = mat.rows();
        if mat.cols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: mat.cols(),
            });
        }
        for i in 0..n {
            for j in 0..n {
                if !mat[(i, j)].is_finite() {
                    return Err(Error::NonFiniteEntry { row: i, col: j });
                }
            }
        }
        let scale = mat.max_abs();
        let tolerance = S::of(tol::SYMMETRY_REL) * scale;
        let mut asymmetry = S::zero();
        for i in 0..n {
            for j in (i + 1)..n {
                asymmetry = asymmetry.max((mat[(i, j)] - mat[(j, i)]).abs());
            }
        }
        if asymmetry > tolerance {
            return Err(Error::NotSymmetric {
                asymmetry: asymmetry.to_f64_lossy(),
                tolerance: tolerance.to_f64_lossy(),
            });
        }
        Ok(SymMatrix { mat })
    }

    /// Builds an exactly symmetric matrix by evaluating `f` on i <= j only.
    pub fn from_fn_sym(n: usize, mut f: impl FnMut(usize, usize) -> S) -> Self {
        let mut mat = Mat::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = f(i, j);
                mat[(i, j)] = v;
                mat[(j, i)] = v;
            }
        }
        SymMatrix { mat }
    }

    pub fn diag(values: &[S]) -> Self {
        let n = values.len();
        SymMatrix::from_fn_sym(n, |i, j| if i == j { values[i] } else { S::zero() })
    }

    pub fn identity(n: usize) -> Self {
        Self::diag(&vec![S::one(); n])
    }

    pub fn zero(n: usize) -> Self {
        SymMatrix {
            mat: Mat::zeros(n, n),
        }
    }

    pub fn n(&self) -> usize {
        self.mat.rows()
    }

    pub fn mat(&self) -> &Mat<S> {
        &self.mat
    }

    pub fn entry(&self, i: usize, j: usize) -> S {
        self.mat[(i, j)]
    }

    pub fn apply(&self, v: &[S]) -> Vec<S> {
        self.mat.matvec(v)
    }

    pub fn quadratic_form(&self, z: &[S]) -> S {
        dot(z, &self.apply(z))
    }

    pub fn trace(&self) -> S {
        (0..self.n()).map(|i| self.mat[(i, i)]).sum()
    }

    /// Entrywise sum; symmetry is preserved exactly.
    pub fn add(&self, other: &SymMatrix<S>) -> SymMatrix<S> {
        SymMatrix {
            mat: self.mat.add(&other.mat),
        }
    }

    pub fn sub(&self, other: &SymMatrix<S>) -> SymMatrix<S> {
        SymMatrix {
            mat: self.mat.sub(&other.mat),
        }
    }

    pub fn scale(&self, c: S) -> SymMatrix<S> {
        SymMatrix {
            mat: self.mat.scale(c),
        }
    }

    /// Operator norm by power iteration on the squared matrix.
    pub fn op_norm(&self) -> S {
        op_norm_sym(&self.mat)
    }
}

/// Operator norm of a symmetric matrix: power iteration on M², which
/// converges even when the extreme eigenvalues come in +/- pairs.
pub fn op_norm_sym<S: Real>(m: &Mat<S>) -> S {
    let n = m.rows();
    assert_eq!(n, m.cols(), "operator norm needs a square matrix");
    if n == 0 {
        return S::zero();
    }
    // deterministic, irregular start vector
    let mut v: Vec<S> = (0..n).map(|i| S::of(((i + 1) as f64).sin())).collect();
    normalize(&mut v);
    let rel_tol = S::of(tol::OP_NORM_REL);
    let mut sigma = S::zero();
    for _ in 0..tol::OP_NORM_MAX_ITERS {
        let w = m.matvec(&v);
        let estimate = norm(&w);
        if estimate == S::zero() {
            return S::zero();
        }
        let mut u = m.matvec(&w);
        if normalize(&mut u) == S::zero() {
            // M w = 0 with w != 0: w is in the kernel-adjacent edge case,
            // the norm of w is already the best estimate
            return estimate;
        }
        let done = (estimate - sigma).abs() <= rel_tol * estimate;
        sigma = estimate;
        v = u;
        if done {
            break;
        }
    }
    sigma
}

/// Eigendecomposition of a symmetric matrix.
#[derive(Debug, Clone)]
pub struct SymSpectrum<S> {
    eigenvalues: Vec<S>,
    /// Column j is the eigenvector of `eigenvalues[j]`.
    vectors: Mat<S>,
}

impl<S: Real> SymSpectrum<S> {
    /// Assembles a spectrum from parts, validating ordering and
    /// orthonormality.
    pub fn from_parts(eigenvalues: Vec<S>, vectors: Mat<S>) -> Result<Self> {
        let n = eigenvalues.len();
        if vectors.rows() != n || vectors.cols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: vectors.rows().max(vectors.cols()),
            });
        }
        if eigenvalues.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::Parse("eigenvalues not sorted non-increasing".into()));
        }
        let s = SymSpectrum {
            eigenvalues,
            vectors,
        };
        let defect = s.orthonormality_defect();
        if defect > S::of(tol::ORTHONORMALITY) {
            return Err(Error::Parse(format!(
                "eigenvector set not orthonormal: defect {:e}",
                defect.to_f64_lossy()
            )));
        }
        Ok(s)
    }

    pub fn n(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[S] {
        &self.eigenvalues
    }

    pub fn eigenvalue(&self, j: usize) -> S {
        self.eigenvalues[j]
    }

    pub fn vectors(&self) -> &Mat<S> {
        &self.vectors
    }

    pub fn eigenvector(&self, j: usize) -> Vec<S> {
        self.vectors.col(j)
    }

    pub fn lambda_max(&self) -> S {
        self.eigenvalues[0]
    }

    /// Sum of eigenvalues strictly beyond index d (the spectral tail).
    pub fn tail_sum(&self, d: usize) -> S {
        self.eigenvalues[d..].iter().copied().sum()
    }

    /// V f(Lambda) Vᵀ, assembled exactly symmetric.
    pub fn map_eigenvalues(&self, f: impl Fn(S) -> S) -> SymMatrix<S> {
        let n = self.n();
        let mapped: Vec<S> = self.eigenvalues.iter().map(|&l| f(l)).collect();
        SymMatrix::from_fn_sym(n, |i, j| {
            (0..n)
                .map(|k| mapped[k] * self.vectors[(i, k)] * self.vectors[(j, k)])
                .sum()
        })
    }

    pub fn reconstruct(&self) -> SymMatrix<S> {
        self.map_eigenvalues(|l| l)
    }

    /// Max |VᵀV - I| entry.
    pub fn orthonormality_defect(&self) -> S {
        let n = self.n();
        let mut defect = S::zero();
        for a in 0..n {
            let ca = self.vectors.col(a);
            for b in a..n {
                let g = dot(&ca, &self.vectors.col(b));
                let target = if a == b { S::one() } else { S::zero() };
                defect = defect.max((g - target).abs());
            }
        }
        defect
    }
}

const MAX_JACOBI_SWEEPS: usize = 64;

/// Cyclic Jacobi eigendecomposition with deterministic ordering and sign
/// convention (largest-magnitude component of each eigenvector positive).
pub fn eigendecompose<S: Real>(a: &SymMatrix<S>) -> SymSpectrum<S> {
    let n = a.n();
    let mut m = a.mat().clone();
    let mut v = Mat::<S>::identity(n);
    let mut d: Vec<S> = (0..n).map(|i| m[(i, i)]).collect();
    let mut b = d.clone();
    let mut z = vec![S::zero(); n];

    let two = S::of(2.0);
    let hundred = S::of(100.0);

    for sweep in 0..MAX_JACOBI_SWEEPS {
        let mut off_sum = S::zero();
        for p in 0..n {
            for q in (p + 1)..n {
                off_sum = off_sum + m[(p, q)].abs();
            }
        }
        if off_sum == S::zero() {
            break;
        }
        let thresh = if sweep < 3 {
            S::of(0.2) * off_sum / S::from_count(n * n)
        } else {
            S::zero()
        };
        for p in 0..n {
            for q in (p + 1)..n {
                let g = hundred * m[(p, q)].abs();
                if sweep > 3 && d[p].abs() + g == d[p].abs() && d[q].abs() + g == d[q].abs() {
                    m[(p, q)] = S::zero();
                    m[(q, p)] = S::zero();
                } else if m[(p, q)].abs() > thresh {
                    let mut h = d[q] - d[p];
                    let t = if h.abs() + g == h.abs() {
                        m[(p, q)] / h
                    } else {
                        let theta = h / (two * m[(p, q)]);
                        let mut t = S::one() / (theta.abs() + (S::one() + theta * theta).sqrt());
                        if theta < S::zero() {
                            t = -t;
                        }
                        t
                    };
                    let c = S::one() / (S::one() + t * t).sqrt();
                    let s = t * c;
                    let tau = s / (S::one() + c);
                    h = t * m[(p, q)];
                    z[p] = z[p] - h;
                    z[q] = z[q] + h;
                    d[p] = d[p] - h;
                    d[q] = d[q] + h;
                    m[(p, q)] = S::zero();
                    m[(q, p)] = S::zero();
                    for k in 0..n {
                        if k != p && k != q {
                            let mkp = m[(k, p)];
                            let mkq = m[(k, q)];
                            let new_kp = mkp - s * (mkq + tau * mkp);
                            let new_kq = mkq + s * (mkp - tau * mkq);
                            m[(k, p)] = new_kp;
                            m[(p, k)] = new_kp;
                            m[(k, q)] = new_kq;
                            m[(q, k)] = new_kq;
                        }
                    }
                    for k in 0..n {
                        let vkp = v[(k, p)];
                        let vkq = v[(k, q)];
                        v[(k, p)] = vkp - s * (vkq + tau * vkp);
                        v[(k, q)] = vkq + s * (vkp - tau * vkq);
                    }
                }
            }
        }
        for i in 0..n {
            b[i] = b[i] + z[i];
            d[i] = b[i];
            z[i] = S::zero();
        }
    }

    // stable descending sort, then fix each eigenvector's sign
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[j].partial_cmp(&d[i]).expect("finite eigenvalues"));
    let eigenvalues: Vec<S> = order.iter().map(|&i| d[i]).collect();
    let mut vectors = Mat::zeros(n, n);
    for (new_col, &old_col) in order.iter().enumerate() {
        let mut col = v.col(old_col);
        let mut arg = 0;
        for (i, x) in col.iter().enumerate() {
            if x.abs() > col[arg].abs() {
                arg = i;
            }
        }
        if col[arg] < S::zero() {
            for x in col.iter_mut() {
                *x = -*x;
            }
        }
        vectors.set_col(new_col, &col);
    }

    let spectrum = SymSpectrum {
        eigenvalues,
        vectors,
    };
    #[cfg(debug_assertions)]
    debug_validate_spectrum(a, &spectrum);
    spectrum
}

#[cfg(debug_assertions)]
fn debug_validate_spectrum<S: Real>(a: &SymMatrix<S>, s: &SymSpectrum<S>) {
    let defect = s.orthonormality_defect();
    debug_assert!(
        defect <= S::of(tol::ORTHONORMALITY),
        "orthonormality defect {:e}",
        defect.to_f64_lossy()
    );
    let a_norm = a.op_norm();
    let recon_err = op_norm_sym(&s.reconstruct().mat().sub(a.mat()));
    debug_assert!(
        recon_err <= S::of(tol::RECONSTRUCTION_REL) * a_norm.max(S::min_positive_value()),
        "reconstruction error {:e} vs norm {:e}",
        recon_err.to_f64_lossy(),
        a_norm.to_f64_lossy()
    );
}

/// Orthogonal projector onto the span of d eigenvectors.
#[derive(Debug, Clone)]
pub struct Projector<S> {
    rank: usize,
    /// n x d matrix whose columns span the range.
    basis: Mat<S>,
    matrix: SymMatrix<S>,
    ill_conditioned: bool,
}

impl<S: Real> Projector<S> {
    /// Rank-0 projector (the zero map).
    pub fn zero(n: usize) -> Self {
        Projector {
            rank: 0,
            basis: Mat::zeros(n, 0),
            matrix: SymMatrix::zero(n),
            ill_conditioned: false,
        }
    }

    pub fn n(&self) -> usize {
        self.matrix.n()
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn matrix(&self) -> &SymMatrix<S> {
        &self.matrix
    }

    pub fn basis(&self) -> &Mat<S> {
        &self.basis
    }

    /// Set when the defining eigen-gap was below the degeneracy threshold:
    /// the spanned subspace is then not numerically well-defined.
    pub fn ill_conditioned(&self) -> bool {
        self.ill_conditioned
    }

    /// P v through the basis factors (cheaper and more accurate than the
    /// dense matrix).
    pub fn apply(&self, v: &[S]) -> Vec<S> {
        let n = self.n();
        assert_eq!(v.len(), n, "projector dimension");
        let mut out = vec![S::zero(); n];
        for k in 0..self.rank {
            let col = self.basis.col(k);
            let c = dot(&col, v);
            for i in 0..n {
                out[i] = out[i] + c * col[i];
            }
        }
        out
    }

    pub fn trace(&self) -> S {
        self.matrix.trace()
    }
}

/// Projector onto the span of the d leading eigenvectors.
///
/// A gap `lambda_d - lambda_{d+1}` below the degeneracy threshold flags the
/// result ill-conditioned instead of failing.
pub fn top_projector<S: Real>(spectrum: &SymSpectrum<S>, d: usize) -> Result<Projector<S>> {
    let n = spectrum.n();
    if d < 1 || d > n {
        return Err(Error::OutOfRange {
            value: d,
            min: 1,
            max: n,
        });
    }
    let mut basis = Mat::zeros(n, d);
    for j in 0..d {
        basis.set_col(j, &spectrum.eigenvector(j));
    }
    let matrix = SymMatrix::from_fn_sym(n, |i, j| {
        (0..d).map(|k| basis[(i, k)] * basis[(j, k)]).sum()
    });
    let ill_conditioned =
        d < n && (spectrum.eigenvalue(d - 1) - spectrum.eigenvalue(d)) < S::of(tol::DEGENERATE_GAP);
    Ok(Projector {
        rank: d,
        basis,
        matrix,
        ill_conditioned,
    })
}

/// PSD square root F^{1/2} = V Lambda^{1/2} Vᵀ cached with its source
/// spectrum.
#[derive(Debug, Clone)]
pub struct FisherHalf<S> {
    spectrum: SymSpectrum<S>,
    half: SymMatrix<S>,
}

impl<S: Real> FisherHalf<S> {
    /// Rejects spectra that are not PSD (eigenvalues below the PSD floor);
    /// floor-level negatives are clamped to zero before the square root.
    pub fn new(spectrum: SymSpectrum<S>) -> Result<Self> {
        let min = *spectrum.eigenvalues().last().expect("non-empty spectrum");
        if min < S::of(tol::PSD_FLOOR) {
            return Err(Error::NotPsd {
                min_eigenvalue: min.to_f64_lossy(),
            });
        }
        let half = spectrum.map_eigenvalues(|l| l.max(S::zero()).sqrt());
        Ok(FisherHalf { spectrum, half })
    }

    pub fn from_matrix(a: &SymMatrix<S>) -> Result<Self> {
        Self::new(eigendecompose(a))
    }

    pub fn n(&self) -> usize {
        self.spectrum.n()
    }

    pub fn spectrum(&self) -> &SymSpectrum<S> {
        &self.spectrum
    }

    pub fn half_matrix(&self) -> &SymMatrix<S> {
        &self.half
    }

    pub fn lambda_max(&self) -> S {
        self.spectrum.lambda_max()
    }

    pub fn apply(&self, v: &[S]) -> Vec<S> {
        self.half.apply(v)
    }
}

/// ‖F^{1/2} P v‖.
pub fn fisher_half_norm<S: Real>(
    fisher: &FisherHalf<S>,
    projector: &Projector<S>,
    v: &[S],
) -> Result<S> {
    let n = fisher.n();
    if projector.n() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: projector.n(),
        });
    }
    if v.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: v.len(),
        });
    }
    Ok(norm(&fisher.apply(&projector.apply(v))))
}

/// Commutation defect ‖FP - PF‖_op, relative to ‖F‖_op.
fn commutation_defect<S: Real>(f: &SymMatrix<S>, p: &Projector<S>) -> (S, S) {
    let fp = f.mat().matmul(p.matrix().mat());
    let pf = p.matrix().mat().matmul(f.mat());
    (op_norm_sym(&fp.sub(&pf)), f.op_norm())
}

/// Errors unless P commutes with F to within the spectral tolerance
/// (i.e. P projects onto an invariant subspace of F).
pub fn require_spectral<S: Real>(f: &SymMatrix<S>, p: &Projector<S>) -> Result<()> {
    if p.n() != f.n() {
        return Err(Error::DimensionMismatch {
            expected: f.n(),
            got: p.n(),
        });
    }
    if p.rank() == 0 {
        return Ok(()); // the zero map commutes with everything
    }
    let (defect, f_norm) = commutation_defect(f, p);
    if defect > S::of(tol::SPECTRAL_COMMUTE_REL) * f_norm.max(S::min_positive_value()) {
        return Err(Error::NotSpectral {
            defect: defect.to_f64_lossy(),
        });
    }
    Ok(())
}

/// Outcome of the Rayleigh floor check zᵀFz >= lambda ‖Pz‖².
#[derive(Debug, Clone, Copy)]
pub struct RayleighFloor<S> {
    pub quad: S,
    pub floor: S,
    pub holds: bool,
}

/// Verifies zᵀFz >= lambda ‖Pz‖² for a spectral projector P of F and any
/// lambda at most the smallest projected eigenvalue.
pub fn rayleigh_floor<S: Real>(
    f: &SymMatrix<S>,
    p: &Projector<S>,
    lambda: S,
    z: &[S],
) -> Result<RayleighFloor<S>> {
    require_spectral(f, p)?;
    if z.len() != f.n() {
        return Err(Error::DimensionMismatch {
            expected: f.n(),
            got: z.len(),
        });
    }
    let quad = f.quadratic_form(z);
    let pz = p.apply(z);
    let floor = lambda * dot(&pz, &pz);
    let holds = quad >= floor - S::of(tol::INEQ_SLACK);
    Ok(RayleighFloor { quad, floor, holds })
}

/// lambda_d - lambda_{d+1} (1-based d; defined for 1 <= d < n).
pub fn spectral_gap<S: Real>(spectrum: &SymSpectrum<S>, d: usize) -> Result<S> {
    let n = spectrum.n();
    if d < 1 || d >= n {
        return Err(Error::OutOfRange {
            value: d,
            min: 1,
            max: n.saturating_sub(1),
        });
    }
    Ok(spectrum.eigenvalue(d - 1) - spectrum.eigenvalue(d))
}

/// Operator norm of P1 - P2; lies in [0, 1] for equal-rank orthogonal
/// projectors.
pub fn projector_distance<S: Real>(p1: &Projector<S>, p2: &Projector<S>) -> Result<S> {
    if p1.n() != p2.n() {
        return Err(Error::DimensionMismatch {
            expected: p1.n(),
            got: p2.n(),
        });
    }
    if p1.rank() != p2.rank() {
        return Err(Error::RankMismatch {
            left: p1.rank(),
            right: p2.rank(),
        });
    }
    Ok(op_norm_sym(&p1.matrix().mat().sub(p2.matrix().mat())))
}

/// Davis-Kahan comparison of the top-d eigenspaces of F0 and F1.
#[derive(Debug, Clone, Copy)]
pub struct DavisKahan<S> {
    /// ‖P1 - P0‖_op.
    pub dist: S,
    /// 2 ‖F1 - F0‖_op / gap.
    pub bound: S,
    pub gap: S,
    pub holds: bool,
}

/// Checks ‖P1 - P0‖_op <= 2 ‖F1 - F0‖_op / (lambda_d(F0) - lambda_{d+1}(F0)).
pub fn davis_kahan_check<S: Real>(
    f0: &SymMatrix<S>,
    f1: &SymMatrix<S>,
    d: usize,
) -> Result<DavisKahan<S>> {
    if f0.n() != f1.n() {
        return Err(Error::DimensionMismatch {
            expected: f0.n(),
            got: f1.n(),
        });
    }
    let s0 = eigendecompose(f0);
    let gap = spectral_gap(&s0, d)?;
    if gap <= S::zero() {
        return Err(Error::ZeroGap { d });
    }
    let s1 = eigendecompose(f1);
    let p0 = top_projector(&s0, d)?;
    let p1 = top_projector(&s1, d)?;
    let dist = projector_distance(&p0, &p1)?;
    let bound = S::of(2.0) * f1.sub(f0).op_norm() / gap;
    let holds = dist <= bound + S::of(tol::INEQ_SLACK);
    Ok(DavisKahan {
        dist,
        bound,
        gap,
        holds,
    })
}
