//! Convex objectives and monotone operators with known solution sets.
//!
//! Every problem carries one designated solution together with an exact
//! distance function to the full solution set. Operators and gradients are
//! evaluated into caller-provided buffers so the integrators never allocate
//! inside their stepping loops.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::{all_finite, dist, dot, norm, Scalar};

/// Violations at or below this level count as numerical noise.
pub const VERIFY_TOLERANCE: f64 = 1e-8;

/// A finite point of `R^d`.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(transparent)]
pub struct VectorState<T>(Vec<T>);

impl<T: Scalar> VectorState<T> {
    pub fn new(entries: Vec<T>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidInput("empty state vector".into()));
        }
        if !all_finite(&entries) {
            return Err(Error::InvalidInput("state vector has non-finite entries".into()));
        }
        Ok(Self(entries))
    }

    pub fn from_f64(entries: &[f64]) -> Result<Self> {
        Self::new(entries.iter().map(|&x| T::lit(x)).collect())
    }

    pub fn zeros(dim: usize) -> Self {
        Self(vec![T::zero(); dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<T> {
        self.0
    }
}

impl<T> AsRef<[T]> for VectorState<T> {
    fn as_ref(&self) -> &[T] {
        &self.0
    }
}

type VecMap<T> = Arc<dyn Fn(&[T], &mut [T]) + Send + Sync>;
type ScalarMap<T> = Arc<dyn Fn(&[T]) -> T + Send + Sync>;

#[derive(Clone)]
enum ObjectiveKind<T> {
    Quadratic {
        spectrum: Vec<T>,
    },
    Custom {
        eval: ScalarMap<T>,
        grad: VecMap<T>,
        distance: Option<ScalarMap<T>>,
    },
}

/// Convex `f` with Lipschitz gradient, its infimum and one minimizer.
#[derive(Clone)]
pub struct ObjectiveProblem<T> {
    name: String,
    kind: ObjectiveKind<T>,
    lipschitz_grad: T,
    inf_value: T,
    minimizer: VectorState<T>,
}

impl<T: Scalar> fmt::Debug for ObjectiveProblem<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ObjectiveProblem")
            .field("name", &self.name)
            .field("dim", &self.dim())
            .field("lipschitz_grad", &self.lipschitz_grad)
            .field("inf_value", &self.inf_value)
            .finish()
    }
}

/// `f(x) = 1/2 sum_i q_i (x_i - y*_i)^2` with a strictly positive spectrum.
pub fn make_quadratic<T: Scalar>(spectrum: &[T], minimizer: VectorState<T>) -> Result<ObjectiveProblem<T>> {
    if spectrum.is_empty() {
        return Err(Error::InvalidProblem("empty spectrum".into()));
    }
    if let Some(q) = spectrum.iter().find(|q| !(q.is_finite() && **q > T::zero())) {
        return Err(Error::InvalidProblem(format!("spectrum entry {q} is not positive")));
    }
    if minimizer.dim() != spectrum.len() {
        return Err(Error::InvalidProblem(format!(
            "minimizer has dimension {} but spectrum has {} entries",
            minimizer.dim(),
            spectrum.len()
        )));
    }
    let lipschitz = spectrum.iter().copied().fold(T::zero(), T::max);
    Ok(ObjectiveProblem {
        name: "quadratic".into(),
        kind: ObjectiveKind::Quadratic {
            spectrum: spectrum.to_vec(),
        },
        lipschitz_grad: lipschitz,
        inf_value: T::zero(),
        minimizer,
    })
}

impl<T: Scalar> ObjectiveProblem<T> {
    /// Wraps user-supplied closures. The distance to `argmin f` defaults to
    /// the distance to `minimizer`, which is exact when the minimizer is unique.
    pub fn custom<E, G>(
        name: &str,
        eval: E,
        grad: G,
        lipschitz_grad: T,
        inf_value: T,
        minimizer: VectorState<T>,
    ) -> Result<Self>
    where
        E: Fn(&[T]) -> T + Send + Sync + 'static,
        G: Fn(&[T], &mut [T]) + Send + Sync + 'static,
    {
        if !(lipschitz_grad > T::zero()) {
            return Err(Error::InvalidProblem(
                "gradient Lipschitz constant must be positive".into(),
            ));
        }
        Ok(Self {
            name: name.into(),
            kind: ObjectiveKind::Custom {
                eval: Arc::new(eval),
                grad: Arc::new(grad),
                distance: None,
            },
            lipschitz_grad,
            inf_value,
            minimizer,
        })
    }

    pub fn with_distance<D>(mut self, distance: D) -> Self
    where
        D: Fn(&[T]) -> T + Send + Sync + 'static,
    {
        if let ObjectiveKind::Custom { distance: d, .. } = &mut self.kind {
            *d = Some(Arc::new(distance));
        }
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.minimizer.dim()
    }

    pub fn lipschitz_grad(&self) -> T {
        self.lipschitz_grad
    }

    pub fn inf_value(&self) -> T {
        self.inf_value
    }

    pub fn minimizer(&self) -> &VectorState<T> {
        &self.minimizer
    }

    pub fn eval(&self, x: &[T]) -> T {
        match &self.kind {
            ObjectiveKind::Quadratic { spectrum } => {
                let half = T::lit(0.5);
                spectrum
                    .iter()
                    .zip(x)
                    .zip(self.minimizer.as_slice())
                    .fold(T::zero(), |acc, ((&q, &xi), &mi)| {
                        acc + half * q * (xi - mi) * (xi - mi)
                    })
            }
            ObjectiveKind::Custom { eval, .. } => eval(x),
        }
    }

    pub fn grad_into(&self, x: &[T], out: &mut [T]) {
        match &self.kind {
            ObjectiveKind::Quadratic { spectrum } => {
                for (((o, &q), &xi), &mi) in out.iter_mut().zip(spectrum).zip(x).zip(self.minimizer.as_slice()) {
                    *o = q * (xi - mi);
                }
            }
            ObjectiveKind::Custom { grad, .. } => grad(x, out),
        }
    }

    pub fn grad(&self, x: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); x.len()];
        self.grad_into(x, &mut out);
        out
    }

    pub fn argmin_distance(&self, x: &[T]) -> T {
        match &self.kind {
            ObjectiveKind::Custom { distance: Some(d), .. } => d(x),
            _ => dist(x, self.minimizer.as_slice()),
        }
    }
}

#[derive(Clone)]
enum OperatorKind<T> {
    Rotation,
    Bilinear {
        rows: usize,
        cols: usize,
        coupling: Vec<T>,
        // Orthogonal projectors onto range(A) and range(A^T); zer V is the
        // product of their orthogonal complements.
        range_proj: Vec<T>,
        corange_proj: Vec<T>,
    },
    Gradient(ObjectiveProblem<T>),
    Custom {
        eval: VecMap<T>,
        distance: Option<ScalarMap<T>>,
    },
}

/// Monotone, Lipschitz `V` with one designated zero.
#[derive(Clone)]
pub struct MonotoneProblem<T> {
    name: String,
    kind: OperatorKind<T>,
    lipschitz: T,
    zero: VectorState<T>,
}

impl<T: Scalar> fmt::Debug for MonotoneProblem<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MonotoneProblem")
            .field("name", &self.name)
            .field("dim", &self.dim())
            .field("lipschitz", &self.lipschitz)
            .finish()
    }
}

/// Counterclockwise rotation by a right angle in the plane.
pub fn make_rotation<T: Scalar>() -> MonotoneProblem<T> {
    MonotoneProblem {
        name: "rotation".into(),
        kind: OperatorKind::Rotation,
        lipschitz: T::one(),
        zero: VectorState::zeros(2),
    }
}

/// Saddle operator `V(x, y) = (A y, -A^T x)` of `Phi(x, y) = <x, A y>`.
///
/// `coupling` is given row by row (`m` rows of length `n`).
pub fn make_bilinear_saddle<T: Scalar>(coupling: &[Vec<T>]) -> Result<MonotoneProblem<T>> {
    let rows = coupling.len();
    let cols = coupling.first().map_or(0, Vec::len);
    if rows == 0 || cols == 0 {
        return Err(Error::InvalidProblem("empty coupling matrix".into()));
    }
    if coupling.iter().any(|r| r.len() != cols) {
        return Err(Error::InvalidProblem("ragged coupling matrix".into()));
    }
    if coupling.iter().flatten().any(|x| !x.is_finite()) {
        return Err(Error::InvalidProblem("coupling matrix has non-finite entries".into()));
    }
    let a = DMatrix::from_fn(rows, cols, |i, j| coupling[i][j].as_f64());
    let svd = a.clone().svd(true, true);
    let u = svd.u.as_ref().expect("requested U");
    let v_t = svd.v_t.as_ref().expect("requested V^T");
    let sigma_max = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let cutoff = sigma_max * (rows.max(cols) as f64) * f64::EPSILON;
    let mut range = DMatrix::<f64>::zeros(rows, rows);
    let mut corange = DMatrix::<f64>::zeros(cols, cols);
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if s > cutoff {
            let uk = u.column(k);
            let vk = v_t.row(k).transpose();
            range += uk * uk.transpose();
            corange += &vk * vk.transpose();
        }
    }
    let to_vec = |m: &DMatrix<f64>| -> Vec<T> {
        let (r, c) = m.shape();
        (0..r)
            .flat_map(|i| (0..c).map(move |j| (i, j)))
            .map(|(i, j)| T::lit(m[(i, j)]))
            .collect()
    };
    Ok(MonotoneProblem {
        name: "bilinear_saddle".into(),
        kind: OperatorKind::Bilinear {
            rows,
            cols,
            coupling: coupling.iter().flatten().copied().collect(),
            range_proj: to_vec(&range),
            corange_proj: to_vec(&corange),
        },
        // A zero matrix gives V = 0, which is 0-Lipschitz; keep the constant positive.
        lipschitz: if sigma_max > 0.0 {
            T::lit(sigma_max)
        } else {
            T::min_positive_value()
        },
        zero: VectorState::zeros(rows + cols),
    })
}

/// Views `grad f` as a monotone operator.
pub fn gradient_as_operator<T: Scalar>(p: &ObjectiveProblem<T>) -> MonotoneProblem<T> {
    MonotoneProblem {
        name: format!("gradient_of_{}", p.name()),
        kind: OperatorKind::Gradient(p.clone()),
        lipschitz: p.lipschitz_grad(),
        zero: p.minimizer().clone(),
    }
}

fn mat_vec<T: Scalar>(m: &[T], rows: usize, cols: usize, x: &[T], out: &mut [T]) {
    for i in 0..rows {
        out[i] = dot(&m[i * cols..(i + 1) * cols], x);
    }
}

impl<T: Scalar> MonotoneProblem<T> {
    /// Wraps a user-supplied operator. Nothing is checked here beyond the
    /// shape; run [`verify_problem`] to test the declared properties.
    pub fn custom<F>(name: &str, eval: F, lipschitz: T, zero: VectorState<T>) -> Result<Self>
    where
        F: Fn(&[T], &mut [T]) + Send + Sync + 'static,
    {
        if !(lipschitz > T::zero()) {
            return Err(Error::InvalidProblem("Lipschitz constant must be positive".into()));
        }
        Ok(Self {
            name: name.into(),
            kind: OperatorKind::Custom {
                eval: Arc::new(eval),
                distance: None,
            },
            lipschitz,
            zero,
        })
    }

    pub fn with_distance<D>(mut self, distance: D) -> Self
    where
        D: Fn(&[T]) -> T + Send + Sync + 'static,
    {
        if let OperatorKind::Custom { distance: d, .. } = &mut self.kind {
            *d = Some(Arc::new(distance));
        }
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.zero.dim()
    }

    pub fn lipschitz(&self) -> T {
        self.lipschitz
    }

    pub fn zero(&self) -> &VectorState<T> {
        &self.zero
    }

    pub fn eval_into(&self, x: &[T], out: &mut [T]) {
        match &self.kind {
            OperatorKind::Rotation => {
                out[0] = -x[1];
                out[1] = x[0];
            }
            OperatorKind::Bilinear {
                rows, cols, coupling, ..
            } => {
                let (m, n) = (*rows, *cols);
                let (xs, ys) = x.split_at(m);
                let (top, bottom) = out.split_at_mut(m);
                mat_vec(coupling, m, n, ys, top);
                for (j, o) in bottom.iter_mut().enumerate() {
                    *o = -(0..m).fold(T::zero(), |acc, i| acc + coupling[i * n + j] * xs[i]);
                }
            }
            OperatorKind::Gradient(p) => p.grad_into(x, out),
            OperatorKind::Custom { eval, .. } => eval(x, out),
        }
    }

    pub fn eval(&self, x: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); x.len()];
        self.eval_into(x, &mut out);
        out
    }

    pub fn zer_distance(&self, x: &[T]) -> T {
        match &self.kind {
            OperatorKind::Rotation => norm(x),
            OperatorKind::Bilinear {
                rows,
                cols,
                range_proj,
                corange_proj,
                ..
            } => {
                let (m, n) = (*rows, *cols);
                let mut px = vec![T::zero(); m];
                let mut py = vec![T::zero(); n];
                mat_vec(range_proj, m, m, &x[..m], &mut px);
                mat_vec(corange_proj, n, n, &x[m..], &mut py);
                (dot(&px, &px) + dot(&py, &py)).sqrt()
            }
            OperatorKind::Gradient(p) => p.argmin_distance(x),
            OperatorKind::Custom { distance: Some(d), .. } => d(x),
            OperatorKind::Custom { distance: None, .. } => dist(x, self.zero.as_slice()),
        }
    }
}

/// Either kind of problem, for the checks that treat both alike.
#[derive(Clone)]
pub enum Problem<T> {
    Objective(ObjectiveProblem<T>),
    Monotone(MonotoneProblem<T>),
}

impl<T: Scalar> fmt::Debug for Problem<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Problem::Objective(p) => p.fmt(f),
            Problem::Monotone(p) => p.fmt(f),
        }
    }
}

impl<T: Scalar> Problem<T> {
    pub fn dim(&self) -> usize {
        match self {
            Problem::Objective(p) => p.dim(),
            Problem::Monotone(p) => p.dim(),
        }
    }

    pub fn solution(&self) -> &VectorState<T> {
        match self {
            Problem::Objective(p) => p.minimizer(),
            Problem::Monotone(p) => p.zero(),
        }
    }

    /// `grad f` for objectives, `V` for operators.
    pub fn operator_into(&self, x: &[T], out: &mut [T]) {
        match self {
            Problem::Objective(p) => p.grad_into(x, out),
            Problem::Monotone(p) => p.eval_into(x, out),
        }
    }

    pub fn lipschitz(&self) -> T {
        match self {
            Problem::Objective(p) => p.lipschitz_grad(),
            Problem::Monotone(p) => p.lipschitz(),
        }
    }

    pub fn solution_distance(&self, x: &[T]) -> T {
        match self {
            Problem::Objective(p) => p.argmin_distance(x),
            Problem::Monotone(p) => p.zer_distance(x),
        }
    }
}

impl<T> From<ObjectiveProblem<T>> for Problem<T> {
    fn from(p: ObjectiveProblem<T>) -> Self {
        Problem::Objective(p)
    }
}

impl<T> From<MonotoneProblem<T>> for Problem<T> {
    fn from(p: MonotoneProblem<T>) -> Self {
        Problem::Monotone(p)
    }
}

/// Outcome of sampling the standing structural assumptions.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerificationReport {
    pub problem: String,
    /// `"convexity"` or `"monotonicity"`.
    pub structure: String,
    pub samples: usize,
    pub radius: f64,
    pub seed: u64,
    /// Smallest and largest value of the structural quantity over the pairs:
    /// `f(y) - f(x) - <grad f(x), y - x>` or `<V(y) - V(x), y - x>`.
    pub structure_range: [f64; 2],
    pub max_structure_violation: f64,
    pub max_lipschitz_violation: f64,
    pub tolerance: f64,
    pub pass: bool,
}

fn sample_ball<R: Rng>(rng: &mut R, center: &[f64], radius: f64, out: &mut [f64]) {
    let d = center.len();
    let mut n2 = 0.0;
    for o in out.iter_mut() {
        let g: f64 = rng.sample(StandardNormal);
        *o = g;
        n2 += g * g;
    }
    let u: f64 = rng.random();
    let scale = radius * u.powf(1.0 / d as f64) / n2.sqrt().max(f64::MIN_POSITIVE);
    for (o, &c) in out.iter_mut().zip(center) {
        *o = c + scale * *o;
    }
}

/// Samples `samples` pairs in the ball of `radius` around the designated
/// solution and records the worst convexity (or monotonicity) and Lipschitz
/// violations.
pub fn verify_problem<T: Scalar>(
    problem: &Problem<T>,
    samples: usize,
    radius: f64,
    seed: u64,
) -> Result<VerificationReport> {
    if samples == 0 {
        return Err(Error::InvalidInput("verification needs at least one sample".into()));
    }
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::InvalidInput("verification radius must be positive".into()));
    }
    let d = problem.dim();
    let center: Vec<f64> = problem.solution().as_slice().iter().map(|x| x.as_f64()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut xf, mut yf) = (vec![0.0; d], vec![0.0; d]);
    let (mut gx, mut gy) = (vec![T::zero(); d], vec![T::zero(); d]);
    let lip = problem.lipschitz().as_f64();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut lip_violation: f64 = 0.0;
    for _ in 0..samples {
        sample_ball(&mut rng, &center, radius, &mut xf);
        sample_ball(&mut rng, &center, radius, &mut yf);
        let x: Vec<T> = xf.iter().map(|&v| T::lit(v)).collect();
        let y: Vec<T> = yf.iter().map(|&v| T::lit(v)).collect();
        problem.operator_into(&x, &mut gx);
        problem.operator_into(&y, &mut gy);
        let diff: Vec<f64> = y.iter().zip(&x).map(|(&a, &b)| (a - b).as_f64()).collect();
        let value = match problem {
            Problem::Objective(p) => {
                let lin: f64 = gx.iter().zip(&diff).map(|(g, dv)| g.as_f64() * dv).sum();
                p.eval(&y).as_f64() - p.eval(&x).as_f64() - lin
            }
            Problem::Monotone(_) => gy
                .iter()
                .zip(&gx)
                .zip(&diff)
                .map(|((a, b), dv)| (a.as_f64() - b.as_f64()) * dv)
                .sum(),
        };
        lo = lo.min(value);
        hi = hi.max(value);
        let gdiff: f64 = gy
            .iter()
            .zip(&gx)
            .map(|(a, b)| (a.as_f64() - b.as_f64()).powi(2))
            .sum::<f64>()
            .sqrt();
        let xdiff: f64 = diff.iter().map(|v| v * v).sum::<f64>().sqrt();
        lip_violation = lip_violation.max(gdiff - lip * xdiff);
    }
    let structure_violation = (-lo).max(0.0);
    let (name, structure) = match problem {
        Problem::Objective(p) => (p.name().to_string(), "convexity"),
        Problem::Monotone(p) => (p.name().to_string(), "monotonicity"),
    };
    Ok(VerificationReport {
        problem: name,
        structure: structure.into(),
        samples,
        radius,
        seed,
        structure_range: [lo, hi],
        max_structure_violation: structure_violation,
        max_lipschitz_violation: lip_violation.max(0.0),
        tolerance: VERIFY_TOLERANCE,
        pass: structure_violation <= VERIFY_TOLERANCE && lip_violation <= VERIFY_TOLERANCE,
    })
}
