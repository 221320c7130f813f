//! Problem instances `{x : Ax > 0}`, planted generators, row normalization,
//! the transform log used to map solutions back, and certificates.

use crate::error::{Error, Result};
use crate::linalg::{axpy, dot, norm1, norm2, Matrix};
use crate::norm::NormState;
use crate::rng;
use crate::scalar::Scalar;
use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Retry cap per generated row.
pub const PLANTED_RETRY_CAP: usize = 10_000;

/// An open polyhedral cone given by its rows. `rows` are the current working
/// coordinates; `original_rows` is the input exactly as loaded.
#[derive(Clone, Debug)]
pub struct ConeInstance<T> {
    rows: Matrix<T>,
    original: Arc<Matrix<T>>,
}

impl<T: Scalar> ConeInstance<T> {
    /// Validates and wraps a row matrix. No normalization is performed.
    pub fn new(rows: Matrix<T>) -> Result<Self> {
        if rows.nrows() < 1 || rows.ncols() < 1 {
            return Err(Error::Dimensions(format!(
                "need m >= 1 and n >= 1, got m = {}, n = {}",
                rows.nrows(),
                rows.ncols()
            )));
        }
        for (i, r) in rows.row_iter().enumerate() {
            if let Some(j) = r.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite { row: i, col: j });
            }
            if r.iter().all(|v| *v == T::zero()) {
                return Err(Error::ZeroRow(i));
            }
        }
        Ok(Self { original: Arc::new(rows.clone()), rows })
    }

    pub fn from_rows<R: AsRef<[T]>>(rows: &[R]) -> Result<Self> {
        let n = rows.first().map_or(0, |r| r.as_ref().len());
        if let Some(bad) = rows.iter().find(|r| r.as_ref().len() != n) {
            return Err(Error::DimensionMismatch { expected: n, found: bad.as_ref().len() });
        }
        Self::new(Matrix::from_rows(rows))
    }

    pub fn n(&self) -> usize {
        self.rows.ncols()
    }

    pub fn m(&self) -> usize {
        self.rows.nrows()
    }

    pub fn rows(&self) -> &Matrix<T> {
        &self.rows
    }

    pub fn original_rows(&self) -> &Matrix<T> {
        &self.original
    }

    pub fn row(&self, i: usize) -> &[T] {
        self.rows.row(i)
    }

    /// Same original rows, new working rows.
    pub(crate) fn with_working_rows(&self, rows: Matrix<T>) -> Self {
        debug_assert_eq!(rows.nrows(), self.m());
        Self { rows, original: Arc::clone(&self.original) }
    }

    /// `A x` in working coordinates.
    pub fn margins(&self, x: &[T]) -> Vec<T> {
        self.rows.matvec(x)
    }

    /// `min_i <A_i, x>` over working rows.
    pub fn min_margin(&self, x: &[T]) -> T {
        self.rows.row_iter().map(|r| dot(r, x)).fold(T::infinity(), T::min)
    }

    /// `min_i <A_i, x>` over the original rows.
    pub fn min_original_margin(&self, x: &[T]) -> T {
        self.original.row_iter().map(|r| dot(r, x)).fold(T::infinity(), T::min)
    }

    pub fn is_strictly_feasible(&self, x: &[T]) -> bool {
        self.min_margin(x) > T::zero()
    }

    /// `sum_i lambda_i A_i` over working rows.
    pub fn combine(&self, lambda: &[T]) -> Vec<T> {
        self.rows.tmatvec(lambda)
    }

    pub fn to_document(&self) -> InstanceDocument {
        InstanceDocument {
            n: self.n(),
            m: self.m(),
            rows: self.original.cast::<f64>().to_rows(),
            planted: None,
        }
    }

    pub fn from_document(doc: &InstanceDocument) -> Result<Self> {
        if doc.n < 1 || doc.m < 1 {
            return Err(Error::Dimensions(format!("need m >= 1 and n >= 1, got m = {}, n = {}", doc.m, doc.n)));
        }
        if doc.rows.len() != doc.m {
            return Err(Error::Malformed(format!("declared m = {} but found {} rows", doc.m, doc.rows.len())));
        }
        for (i, r) in doc.rows.iter().enumerate() {
            if r.len() != doc.n {
                return Err(Error::Malformed(format!("row {i} has {} entries, expected {}", r.len(), doc.n)));
            }
        }
        let rows: Vec<Vec<T>> = doc
            .rows
            .iter()
            .map(|r| r.iter().map(|&v| T::from_f64(v).unwrap_or_else(T::nan)).collect())
            .collect();
        Self::from_rows(&rows)
    }
}

/// Witness for an instance built by [`generate_planted`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlantedWitness {
    pub center: Vec<f64>,
    pub rho: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceDocument {
    pub n: usize,
    pub m: usize,
    pub rows: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub planted: Option<PlantedWitness>,
}

pub fn load_instance<T: Scalar>(source: &str) -> Result<ConeInstance<T>> {
    let doc: InstanceDocument =
        serde_json::from_str(source).map_err(|e| Error::Malformed(e.to_string()))?;
    ConeInstance::from_document(&doc)
}

/// Loads the instance and its planted witness, if the document carries one.
pub fn load_instance_with_witness<T: Scalar>(source: &str) -> Result<(ConeInstance<T>, Option<PlantedWitness>)> {
    let doc: InstanceDocument =
        serde_json::from_str(source).map_err(|e| Error::Malformed(e.to_string()))?;
    Ok((ConeInstance::from_document(&doc)?, doc.planted))
}

pub fn save_instance<T: Scalar>(instance: &ConeInstance<T>, witness: Option<&PlantedWitness>) -> String {
    let mut doc = instance.to_document();
    doc.planted = witness.cloned();
    serde_json::to_string_pretty(&doc).expect("instance serializes")
}

/// How rows of a planted instance are distributed around the hidden center.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "family")]
pub enum PlantedFamily {
    /// Uniform on the cap `<a, z*> >= rho` (reflect, then reject).
    Cap,
    /// Exactly on the boundary `<a, z*> = rho`, transverse part isotropic:
    /// a thin, nearly circular cone of inradius about `rho`.
    Boundary,
    /// On the boundary with the transverse part concentrated around `±c`
    /// for a random `c ⊥ z*`; `spread` scales the transverse noise. Gives a
    /// wedge that is thin along `c` and wide elsewhere.
    Slab { spread: f64 },
}

fn gaussian_vec<R: rand::Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

fn normalized(mut v: Vec<f64>) -> Option<Vec<f64>> {
    let s = norm2(&v);
    if !(s > 1e-300) {
        return None;
    }
    v.iter_mut().for_each(|x| *x /= s);
    Some(v)
}

fn unit_vec<R: rand::Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    loop {
        if let Some(v) = normalized(gaussian_vec(rng, n)) {
            return v;
        }
    }
}

/// Random unit vector orthogonal to the unit vector `z`.
fn unit_orthogonal<R: rand::Rng + ?Sized>(rng: &mut R, z: &[f64]) -> Vec<f64> {
    loop {
        let mut g = gaussian_vec(rng, z.len());
        let t = dot(&g, z);
        axpy(-t, z, &mut g);
        if let Some(v) = normalized(g) {
            return v;
        }
    }
}

/// Planted instance from the `Cap` family.
pub fn generate_planted<T: Scalar>(
    n: usize,
    m: usize,
    rho: f64,
    seed: u64,
) -> Result<(ConeInstance<T>, PlantedWitness)> {
    generate_planted_family(n, m, rho, seed, PlantedFamily::Cap)
}

/// Generates `m` unit rows in dimension `n` with `<A_i, z*> >= rho` for a
/// hidden unit center `z*`, deterministically from `seed`.
pub fn generate_planted_family<T: Scalar>(
    n: usize,
    m: usize,
    rho: f64,
    seed: u64,
    family: PlantedFamily,
) -> Result<(ConeInstance<T>, PlantedWitness)> {
    if n < 2 || m < 1 {
        return Err(Error::Dimensions(format!("planted generation needs n >= 2, m >= 1 (got n = {n}, m = {m})")));
    }
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::Config(format!("rho must lie in (0, 1), got {rho}")));
    }
    let mut rng = rng::stream(seed, rng::INSTANCE_GEN, 0);
    let z = unit_vec(&mut rng, n);
    let slab_axis = unit_orthogonal(&mut rng, &z);
    let mut rows: Vec<Vec<T>> = Vec::with_capacity(m);
    for i in 0..m {
        let mut accepted = None;
        for _ in 0..PLANTED_RETRY_CAP {
            let candidate = match family {
                PlantedFamily::Cap => {
                    let mut g = unit_vec(&mut rng, n);
                    let t = dot(&g, &z);
                    if t < 0.0 {
                        axpy(-2.0 * t, &z, &mut g);
                    }
                    normalized(g)
                }
                PlantedFamily::Boundary => {
                    let u = unit_orthogonal(&mut rng, &z);
                    Some(on_boundary(&z, &u, rho))
                }
                PlantedFamily::Slab { spread } => {
                    let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                    let mut u = unit_orthogonal(&mut rng, &z);
                    u.iter_mut().for_each(|x| *x *= spread);
                    axpy(sign, &slab_axis, &mut u);
                    normalized(u).map(|u| on_boundary(&z, &u, rho))
                }
            };
            let Some(a) = candidate else { continue };
            let row: Vec<T> = a.iter().map(|&v| T::c(v)).collect();
            let check: f64 = row.iter().zip(&z).map(|(r, zi)| r.as_f64() * zi).sum();
            if check >= rho {
                accepted = Some(row);
                break;
            }
        }
        match accepted {
            Some(r) => rows.push(r),
            None => return Err(Error::RetryExhausted { row: i, retries: PLANTED_RETRY_CAP }),
        }
    }
    let instance = ConeInstance::from_rows(&rows)?;
    Ok((instance, PlantedWitness { center: z, rho }))
}

/// `rho' z + sqrt(1 - rho'^2) u` with `rho'` nudged just above `rho` so the
/// rounded row still satisfies the witness inequality.
fn on_boundary(z: &[f64], u: &[f64], rho: f64) -> Vec<f64> {
    let r = rho * (1.0 + 1e-13) + 1e-15;
    let s = (1.0 - r * r).max(0.0).sqrt();
    z.iter().zip(u).map(|(&zi, &ui)| r * zi + s * ui).collect()
}

/// Scales each row to unit dual norm `‖A_i‖_{H^{-1}} = 1`.
pub fn normalize_rows<T: Scalar>(instance: &ConeInstance<T>, norm: &NormState<T>) -> Result<ConeInstance<T>> {
    if norm.dim() != instance.n() {
        return Err(Error::DimensionMismatch { expected: instance.n(), found: norm.dim() });
    }
    let floor = T::c(1e-300).max(T::min_positive_value());
    let mut rows = instance.rows().clone();
    for i in 0..rows.nrows() {
        let s = norm.dual(rows.row(i));
        if !(s >= floor) {
            return Err(Error::RowUnderflow(i));
        }
        let inv = s.recip();
        rows.row_mut(i).iter_mut().for_each(|v| *v *= inv);
    }
    Ok(instance.with_working_rows(rows))
}

/// Euclidean row normalization.
pub fn normalize_rows_euclidean<T: Scalar>(instance: &ConeInstance<T>) -> Result<ConeInstance<T>> {
    normalize_rows(instance, &NormState::identity(instance.n()))
}

/// One rescaling applied to the cone.
#[derive(Clone, Debug)]
pub enum TransformStep<T> {
    /// Rows became `A (I - c c^T / 2)` for a unit `c`.
    Rank1 { c: Vec<T> },
    /// Rows became `A (I + alpha M)^{-1/2}`.
    MultiRank { m: Matrix<T>, alpha: T },
}

impl<T: Scalar> TransformStep<T> {
    /// Forward map on points: `(I + c c^T) x` or `(I + alpha M)^{1/2} x`.
    pub fn forward(&self, x: &[T]) -> Vec<T> {
        match self {
            TransformStep::Rank1 { c } => {
                let mut out = x.to_vec();
                axpy(dot(c, x), c, &mut out);
                out
            }
            TransformStep::MultiRank { m, alpha } => shifted(m, *alpha).sym_eigen().map(|v| v.sqrt()).matvec(x),
        }
    }

    /// Inverse map on points: `(I - c c^T / 2) x` or `(I + alpha M)^{-1/2} x`.
    pub fn inverse(&self, x: &[T]) -> Vec<T> {
        match self {
            TransformStep::Rank1 { c } => {
                let mut out = x.to_vec();
                axpy(-T::c(0.5) * dot(c, x), c, &mut out);
                out
            }
            TransformStep::MultiRank { m, alpha } => {
                shifted(m, *alpha).sym_eigen().map(|v| v.sqrt().recip()).matvec(x)
            }
        }
    }

    pub fn to_document(&self) -> StepDocument {
        match self {
            TransformStep::Rank1 { c } => StepDocument::Rank1 { c: c.iter().map(|v| v.as_f64()).collect() },
            TransformStep::MultiRank { m, alpha } => {
                StepDocument::MultiRank { m: m.cast::<f64>().to_rows(), alpha: alpha.as_f64() }
            }
        }
    }

    pub fn from_document(doc: &StepDocument) -> Result<Self> {
        Ok(match doc {
            StepDocument::Rank1 { c } => TransformStep::Rank1 { c: c.iter().map(|&v| T::c(v)).collect() },
            StepDocument::MultiRank { m, alpha } => {
                if m.iter().any(|r| r.len() != m.len()) {
                    return Err(Error::Malformed("multi-rank step matrix must be square".into()));
                }
                TransformStep::MultiRank { m: Matrix::from_rows(m).cast(), alpha: T::c(*alpha) }
            }
        })
    }
}

/// `I + alpha M`
pub(crate) fn shifted<T: Scalar>(m: &Matrix<T>, alpha: T) -> Matrix<T> {
    Matrix::identity(m.nrows()).add(&m.scaled(alpha))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StepDocument {
    Rank1 { c: Vec<f64> },
    MultiRank { m: Vec<Vec<f64>>, alpha: f64 },
}

/// Ordered composition of rescalings, oldest first.
#[derive(Clone, Debug, Default)]
pub struct TransformLog<T> {
    pub steps: Vec<TransformStep<T>>,
}

impl<T: Scalar> TransformLog<T> {
    pub fn new() -> Self {
        Self { steps: Vec::new() }
    }

    pub fn push(&mut self, step: TransformStep<T>) {
        self.steps.push(step);
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Maps a point from original to working coordinates.
    pub fn forward(&self, x: &[T]) -> Vec<T> {
        self.steps.iter().fold(x.to_vec(), |acc, s| s.forward(&acc))
    }

    /// Replays the log on rows (with Euclidean renormalization after each
    /// step), reproducing the working rows of a transformed instance.
    pub fn apply_to_rows(&self, instance: &ConeInstance<T>) -> Result<ConeInstance<T>> {
        let mut current = instance.clone();
        for step in &self.steps {
            let rows: Vec<Vec<T>> = current.rows().row_iter().map(|r| step.inverse(r)).collect();
            current = normalize_rows_euclidean(&current.with_working_rows(Matrix::from_rows(&rows)))?;
        }
        Ok(current)
    }

    pub fn to_document(&self) -> Vec<StepDocument> {
        self.steps.iter().map(TransformStep::to_document).collect()
    }

    pub fn from_document(docs: &[StepDocument]) -> Result<Self> {
        Ok(Self { steps: docs.iter().map(TransformStep::from_document).collect::<Result<_>>()? })
    }
}

/// Maps a working-coordinate point back to original coordinates by applying
/// the inverse of every step, newest first.
pub fn pull_back<T: Scalar>(x: &[T], log: &TransformLog<T>) -> Vec<T> {
    log.steps.iter().rev().fold(x.to_vec(), |acc, s| s.inverse(&acc))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExhaustionSummary {
    pub phases: usize,
    pub iterations: usize,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Certificate<T> {
    /// Strictly feasible point in original coordinates.
    Feasible { x: Vec<T> },
    /// Convex weights with `‖λA‖ <= delta_achieved` in working coordinates.
    DualEvidence { lambda: Vec<T>, delta_achieved: T },
    BudgetExhausted(ExhaustionSummary),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum CertificateKind {
    Feasible { x: Vec<f64> },
    DualEvidence { lambda: Vec<f64>, delta_achieved: f64 },
    BudgetExhausted { summary: ExhaustionSummary },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificateDocument {
    #[serde(flatten)]
    pub certificate: CertificateKind,
    #[serde(default)]
    pub transform_log: Vec<StepDocument>,
}

impl<T: Scalar> Certificate<T> {
    pub fn to_kind(&self) -> CertificateKind {
        let v = |x: &[T]| x.iter().map(|a| a.as_f64()).collect::<Vec<_>>();
        match self {
            Certificate::Feasible { x } => CertificateKind::Feasible { x: v(x) },
            Certificate::DualEvidence { lambda, delta_achieved } => {
                CertificateKind::DualEvidence { lambda: v(lambda), delta_achieved: delta_achieved.as_f64() }
            }
            Certificate::BudgetExhausted(s) => CertificateKind::BudgetExhausted { summary: s.clone() },
        }
    }

    pub fn from_kind(kind: &CertificateKind) -> Self {
        let v = |x: &[f64]| x.iter().map(|&a| T::c(a)).collect::<Vec<_>>();
        match kind {
            CertificateKind::Feasible { x } => Certificate::Feasible { x: v(x) },
            CertificateKind::DualEvidence { lambda, delta_achieved } => {
                Certificate::DualEvidence { lambda: v(lambda), delta_achieved: T::c(*delta_achieved) }
            }
            CertificateKind::BudgetExhausted { summary } => Certificate::BudgetExhausted(summary.clone()),
        }
    }

    pub fn is_feasible(&self) -> bool {
        matches!(self, Certificate::Feasible { .. })
    }
}

/// Outcome of [`verify_certificate`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub pass: bool,
    pub kind: String,
    /// `min_i <original A_i, x>` for feasible certificates.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub margin: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda_l1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub recomputed_norm: Option<f64>,
    pub message: String,
}

/// Checks a certificate against the instance. Feasible points are checked
/// against the original rows; dual evidence against the working rows under
/// the Euclidean norm (see [`verify_certificate_in`] for other norms).
pub fn verify_certificate<T: Scalar>(instance: &ConeInstance<T>, cert: &Certificate<T>) -> Result<VerificationReport> {
    verify_certificate_in(instance, cert, &NormState::identity(instance.n()))
}

pub fn verify_certificate_in<T: Scalar>(
    instance: &ConeInstance<T>,
    cert: &Certificate<T>,
    norm: &NormState<T>,
) -> Result<VerificationReport> {
    match cert {
        Certificate::Feasible { x } => {
            if x.len() != instance.n() {
                return Err(Error::DimensionMismatch { expected: instance.n(), found: x.len() });
            }
            let margin = instance.min_original_margin(x);
            let pass = margin > T::zero() && x.iter().all(|v| v.is_finite());
            Ok(VerificationReport {
                pass,
                kind: "feasible".into(),
                margin: Some(margin.as_f64()),
                lambda_l1: None,
                recomputed_norm: None,
                message: if pass {
                    format!("strictly feasible, min margin {:e}", margin.as_f64())
                } else {
                    format!("not strictly feasible, min margin {:e}", margin.as_f64())
                },
            })
        }
        Certificate::DualEvidence { lambda, delta_achieved } => {
            if lambda.len() != instance.m() {
                return Err(Error::DimensionMismatch { expected: instance.m(), found: lambda.len() });
            }
            if norm.dim() != instance.n() {
                return Err(Error::DimensionMismatch { expected: instance.n(), found: norm.dim() });
            }
            let l1 = norm1(lambda);
            let nonneg = lambda.iter().all(|&l| l >= T::zero());
            let recomputed = norm.dual(&instance.combine(lambda));
            let simplex_ok = nonneg && (l1 - T::one()).abs() <= T::tol(1e-12);
            let claim_ok = (recomputed - *delta_achieved).abs()
                <= T::tol(1e-9) * recomputed.abs().max(delta_achieved.abs()) + T::tol(1e-15);
            let pass = simplex_ok && claim_ok;
            Ok(VerificationReport {
                pass,
                kind: "dual_evidence".into(),
                margin: None,
                lambda_l1: Some(l1.as_f64()),
                recomputed_norm: Some(recomputed.as_f64()),
                message: match (simplex_ok, claim_ok) {
                    (true, true) => format!("dual evidence holds, ‖λA‖ = {:e}", recomputed.as_f64()),
                    (false, _) => format!("λ is not a convex combination (‖λ‖₁ = {:e})", l1.as_f64()),
                    (true, false) => format!(
                        "claimed ‖λA‖ {:e} does not match recomputed {:e}",
                        delta_achieved.as_f64(),
                        recomputed.as_f64()
                    ),
                },
            })
        }
        Certificate::BudgetExhausted(s) => Ok(VerificationReport {
            pass: false,
            kind: "budget_exhausted".into(),
            margin: None,
            lambda_l1: None,
            recomputed_norm: None,
            message: format!("no certificate: {}", s.reason),
        }),
    }
}
