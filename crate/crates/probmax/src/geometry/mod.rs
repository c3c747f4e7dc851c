//! Centrally symmetric convex bodies and convex feasible sets.
//!
//! A [`ConvexBody`] is the support of the uniform random vector: a compact
//! convex set symmetric about the origin, described by one of four closed-form
//! variants. It exposes the Minkowski gauge, volume, membership, a uniform
//! sampler, and the smallest enclosing axis-aligned symmetric box.
//!
//! A [`FeasibleSet`] is the decision domain: a closed convex set with a
//! Euclidean projection (closed-form for balls, dual active-set QP for
//! polytopes).
//!
//! All types are immutable after construction; samplers take an explicit
//! generator handle.

mod qp;
mod vertices;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg;
use crate::stream;

/// Membership tolerance on the gauge; absorbs floating-point error at the
/// boundary.
pub const MEMBERSHIP_TOL: f64 = 1e-12;

/// Sample budget for Monte-Carlo volume estimation.
pub const VOLUME_MC_SAMPLES: u64 = 1_000_000;

/// Largest acceptable relative standard error of a Monte-Carlo volume.
pub const VOLUME_MC_REL_SE_LIMIT: f64 = 0.01;

/// Proposal cap per rejection-sampled point.
const REJECTION_ATTEMPT_CAP: u64 = 100_000;

/// Fixed internal seed for the volume estimator, so `volume()` is a pure
/// function of the body.
const VOLUME_SEED: u64 = 0x5EED_B0D7;

/// Volume of the unit Euclidean ball in dimension `n`.
pub fn unit_ball_volume(n: usize) -> f64 {
    let n = n as f64;
    ((n / 2.0) * std::f64::consts::PI.ln() - statrs::function::gamma::ln_gamma(1.0 + n / 2.0)).exp()
}

#[derive(Debug, Clone)]
pub enum BodyKind {
    /// `{xi : ||xi|| <= r}`
    Ball { radius: f64 },
    /// `{xi : |xi_i| <= w_i}`
    Box { half_widths: Vec<f64> },
    /// `{xi : xi^T Q xi <= 1}` with `Q` symmetric positive-definite.
    Ellipsoid {
        shape: DMatrix<f64>,
        /// Lower Cholesky factor of `Q`.
        chol_lower: DMatrix<f64>,
    },
    /// `{xi : |a_i^T xi| <= 1 for all rows a_i}`; rows must span the space.
    SymPolytope { rows: DMatrix<f64> },
}

/// A compact convex body symmetric about the origin.
#[derive(Debug, Clone)]
pub struct ConvexBody {
    dim: usize,
    kind: BodyKind,
    volume_override: Option<f64>,
}

impl ConvexBody {
    pub fn ball(dim: usize, radius: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidBody("dimension must be >= 1".into()));
        }
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::InvalidBody(format!(
                "radius must be positive, got {radius}"
            )));
        }
        Ok(Self {
            dim,
            kind: BodyKind::Ball { radius },
            volume_override: None,
        })
    }

    pub fn axis_box(half_widths: Vec<f64>) -> Result<Self> {
        if half_widths.is_empty() {
            return Err(Error::InvalidBody("dimension must be >= 1".into()));
        }
        if half_widths.iter().any(|w| !(*w > 0.0) || !w.is_finite()) {
            return Err(Error::InvalidBody("half-widths must be positive".into()));
        }
        Ok(Self {
            dim: half_widths.len(),
            kind: BodyKind::Box { half_widths },
            volume_override: None,
        })
    }

    pub fn ellipsoid(shape_rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = shape_rows.len();
        if n == 0 || shape_rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidBody("shape matrix must be square".into()));
        }
        let q = DMatrix::from_fn(n, n, |r, c| shape_rows[r][c]);
        let asym = (&q - q.transpose()).amax();
        if asym > 1e-10 * (1.0 + q.amax()) {
            return Err(Error::InvalidBody("shape matrix must be symmetric".into()));
        }
        let q = (&q + q.transpose()) * 0.5;
        let chol = q
            .clone()
            .cholesky()
            .ok_or_else(|| Error::InvalidBody("shape matrix must be positive-definite".into()))?;
        Ok(Self {
            dim: n,
            kind: BodyKind::Ellipsoid {
                shape: q,
                chol_lower: chol.l(),
            },
            volume_override: None,
        })
    }

    pub fn sym_polytope(rows: Vec<Vec<f64>>) -> Result<Self> {
        let p = rows.len();
        if p == 0 {
            return Err(Error::InvalidBody("at least one row is required".into()));
        }
        let n = rows[0].len();
        if n == 0 || rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidBody(
                "rows must share a positive dimension".into(),
            ));
        }
        let m = DMatrix::from_fn(p, n, |r, c| rows[r][c]);
        let rank = m.rank(1e-10 * (1.0 + m.amax()));
        if rank < n {
            return Err(Error::InvalidBody(
                "rows do not span the space; the body would be unbounded".into(),
            ));
        }
        Ok(Self {
            dim: n,
            kind: BodyKind::SymPolytope { rows: m },
            volume_override: None,
        })
    }

    pub fn with_volume_override(mut self, volume: f64) -> Result<Self> {
        if !(volume > 0.0) || !volume.is_finite() {
            return Err(Error::InvalidBody(format!(
                "volume override must be positive, got {volume}"
            )));
        }
        self.volume_override = Some(volume);
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> &BodyKind {
        &self.kind
    }

    pub fn volume_override(&self) -> Option<f64> {
        self.volume_override
    }

    fn check_dim(&self, point: &[f64]) -> Result<()> {
        if point.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: point.len(),
            });
        }
        Ok(())
    }

    /// Minkowski gauge `inf { t > 0 : xi/t in K }`; a norm for these bodies.
    pub fn gauge(&self, point: &[f64]) -> Result<f64> {
        self.check_dim(point)?;
        Ok(match &self.kind {
            BodyKind::Ball { radius } => linalg::norm(point) / radius,
            BodyKind::Box { half_widths } => point
                .iter()
                .zip(half_widths)
                .map(|(x, w)| (x / w).abs())
                .fold(0.0, f64::max),
            BodyKind::Ellipsoid { shape, .. } => {
                let x = DVector::from_column_slice(point);
                let q = (shape * &x).dot(&x);
                q.max(0.0).sqrt()
            }
            BodyKind::SymPolytope { rows } => {
                let x = DVector::from_column_slice(point);
                (rows * x).amax()
            }
        })
    }

    /// Membership test `gauge(xi) <= 1 + MEMBERSHIP_TOL`.
    pub fn contains(&self, point: &[f64]) -> Result<bool> {
        Ok(self.gauge(point)? <= 1.0 + MEMBERSHIP_TOL)
    }

    /// Exact volume where a closed form exists; Monte-Carlo rejection estimate
    /// for symmetric polytopes without an override.
    pub fn volume(&self) -> Result<f64> {
        self.volume_with_se().map(|(v, _)| v)
    }

    /// Volume together with its standard error (zero for closed forms).
    pub fn volume_with_se(&self) -> Result<(f64, f64)> {
        if let Some(v) = self.volume_override {
            return Ok((v, 0.0));
        }
        match &self.kind {
            BodyKind::Ball { radius } => {
                let n = self.dim as f64;
                let v = (n * radius.ln()).exp() * unit_ball_volume(self.dim);
                Ok((v, 0.0))
            }
            BodyKind::Box { half_widths } => {
                Ok((half_widths.iter().map(|w| 2.0 * w).product(), 0.0))
            }
            BodyKind::Ellipsoid { chol_lower, .. } => {
                // det(Q)^(-1/2) = prod 1/L_ii
                let det_root: f64 = (0..self.dim).map(|i| chol_lower[(i, i)]).product();
                Ok((unit_ball_volume(self.dim) / det_root, 0.0))
            }
            BodyKind::SymPolytope { .. } => {
                let half_widths = self.bounding_box()?;
                let box_vol: f64 = half_widths.iter().map(|w| 2.0 * w).product();
                let mut rng = stream::derive_rng(VOLUME_SEED, &[stream::TAG_VOLUME]);
                let mut hits = 0u64;
                let mut point = vec![0.0; self.dim];
                for _ in 0..VOLUME_MC_SAMPLES {
                    for (c, w) in point.iter_mut().zip(&half_widths) {
                        *c = (2.0 * rng.random::<f64>() - 1.0) * w;
                    }
                    if self.contains(&point)? {
                        hits += 1;
                    }
                }
                let n = VOLUME_MC_SAMPLES as f64;
                let p_hat = hits as f64 / n;
                let vol = box_vol * p_hat;
                let se = box_vol * (p_hat * (1.0 - p_hat) / n).sqrt();
                if vol == 0.0 || se / vol > VOLUME_MC_REL_SE_LIMIT {
                    return Err(Error::VolumeAccuracy {
                        rel_se: if vol == 0.0 { f64::INFINITY } else { se / vol },
                        limit: VOLUME_MC_REL_SE_LIMIT,
                    });
                }
                Ok((vol, se))
            }
        }
    }

    /// One point uniformly distributed in the body.
    pub fn sample_uniform(&self, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
        match &self.kind {
            BodyKind::Ball { radius } => Ok(sample_ball(self.dim, *radius, rng)),
            BodyKind::Box { half_widths } => Ok(half_widths
                .iter()
                .map(|w| (2.0 * rng.random::<f64>() - 1.0) * w)
                .collect()),
            BodyKind::Ellipsoid { chol_lower, .. } => {
                // Map a unit-ball sample u through B = L^-T, so B^T Q B = I.
                let u = DVector::from_vec(sample_ball(self.dim, 1.0, rng));
                let z = chol_lower
                    .transpose()
                    .solve_upper_triangular(&u)
                    .ok_or_else(|| Error::InvalidBody("singular Cholesky factor".into()))?;
                Ok(z.as_slice().to_vec())
            }
            BodyKind::SymPolytope { .. } => {
                let half_widths = self.bounding_box()?;
                let mut point = vec![0.0; self.dim];
                for _ in 0..REJECTION_ATTEMPT_CAP {
                    for (c, w) in point.iter_mut().zip(&half_widths) {
                        *c = (2.0 * rng.random::<f64>() - 1.0) * w;
                    }
                    if self.contains(&point)? {
                        return Ok(point);
                    }
                }
                Err(Error::SamplerTooThin {
                    rate: 1.0 / REJECTION_ATTEMPT_CAP as f64,
                    limit: 1e-4,
                })
            }
        }
    }

    /// Half-widths of the smallest axis-aligned symmetric box containing the
    /// body.
    pub fn bounding_box(&self) -> Result<Vec<f64>> {
        match &self.kind {
            BodyKind::Ball { radius } => Ok(vec![*radius; self.dim]),
            BodyKind::Box { half_widths } => Ok(half_widths.clone()),
            BodyKind::Ellipsoid { chol_lower, .. } => {
                // Support along e_i is sqrt((Q^-1)_ii); solve L w = e_i, L^T z = w.
                let mut widths = Vec::with_capacity(self.dim);
                for i in 0..self.dim {
                    let mut e = DVector::zeros(self.dim);
                    e[i] = 1.0;
                    let w = chol_lower
                        .solve_lower_triangular(&e)
                        .ok_or_else(|| Error::InvalidBody("singular Cholesky factor".into()))?;
                    let z = chol_lower
                        .transpose()
                        .solve_upper_triangular(&w)
                        .ok_or_else(|| Error::InvalidBody("singular Cholesky factor".into()))?;
                    widths.push(z[i].max(0.0).sqrt());
                }
                Ok(widths)
            }
            BodyKind::SymPolytope { rows } => {
                let verts = vertices::sym_polytope_vertices(rows)?;
                if verts.is_empty() {
                    return Err(Error::InvalidBody(
                        "symmetric polytope has no vertices".into(),
                    ));
                }
                let mut widths = vec![0.0f64; self.dim];
                for v in &verts {
                    for (w, x) in widths.iter_mut().zip(v) {
                        *w = w.max(x.abs());
                    }
                }
                Ok(widths)
            }
        }
    }
}

fn sample_ball(dim: usize, radius: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    loop {
        let dir: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let nrm = linalg::norm(&dir);
        if nrm > 0.0 {
            let u: f64 = rng.random();
            let r = radius * u.powf(1.0 / dim as f64) / nrm;
            return dir.iter().map(|d| d * r).collect();
        }
    }
}

/// A closed convex decision domain with a Euclidean projection.
#[derive(Debug, Clone)]
pub enum FeasibleSet {
    Polytope {
        a: DMatrix<f64>,
        b: DVector<f64>,
        /// Feasible point certifying nonemptiness (the projection of the
        /// origin, found at construction).
        anchor: Vec<f64>,
        /// Coordinate bounds when the polytope is bounded.
        bounds: Option<(Vec<f64>, Vec<f64>)>,
        /// Vertex list when bounded.
        verts: Option<Vec<Vec<f64>>>,
    },
    Ball {
        center: Vec<f64>,
        radius: f64,
    },
}

impl FeasibleSet {
    pub fn polytope(rows: Vec<Vec<f64>>, b: Vec<f64>) -> Result<Self> {
        let p = rows.len();
        if p == 0 || p != b.len() {
            return Err(Error::InvalidFeasibleSet(
                "constraint matrix and right-hand side must have matching, positive row counts"
                    .into(),
            ));
        }
        let n = rows[0].len();
        if n == 0 || rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidFeasibleSet(
                "constraint rows must share a positive dimension".into(),
            ));
        }
        let a = DMatrix::from_fn(p, n, |r, c| rows[r][c]);
        let bv = DVector::from_vec(b);
        let anchor = qp::project_polyhedron(&a, &bv, &vec![0.0; n])
            .map_err(|e| Error::Infeasible(format!("no feasible point found: {e}")))?;

        // Bounds and vertices are best-effort: unbounded polytopes stay
        // constructible, but box-dependent operations will error.
        let verts = vertices::enumerate_vertices(&a, &bv)
            .ok()
            .filter(|v| !v.is_empty());
        let bounds = verts.as_ref().and_then(|vs| {
            let mut lo = vs[0].clone();
            let mut hi = vs[0].clone();
            for v in vs {
                for i in 0..n {
                    lo[i] = lo[i].min(v[i]);
                    hi[i] = hi[i].max(v[i]);
                }
            }
            // Certify boundedness: project far points along each axis and
            // check they stay near the vertex box.
            let probe_t = 1e8;
            for i in 0..n {
                for sign in [-1.0, 1.0] {
                    let mut y = vec![0.0; n];
                    y[i] = sign * probe_t;
                    match qp::project_polyhedron(&a, &bv, &y) {
                        Ok(x) => {
                            if x[i] > hi[i] + 1e-3 || x[i] < lo[i] - 1e-3 {
                                return None;
                            }
                        }
                        Err(_) => return None,
                    }
                }
            }
            Some((lo, hi))
        });
        Ok(FeasibleSet::Polytope {
            a,
            b: bv,
            anchor,
            bounds,
            verts,
        })
    }

    pub fn ball(center: Vec<f64>, radius: f64) -> Result<Self> {
        if center.is_empty() {
            return Err(Error::InvalidFeasibleSet("dimension must be >= 1".into()));
        }
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::InvalidFeasibleSet(format!(
                "radius must be positive, got {radius}"
            )));
        }
        Ok(FeasibleSet::Ball { center, radius })
    }

    pub fn dim(&self) -> usize {
        match self {
            FeasibleSet::Polytope { a, .. } => a.ncols(),
            FeasibleSet::Ball { center, .. } => center.len(),
        }
    }

    fn check_dim(&self, point: &[f64]) -> Result<()> {
        if point.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: point.len(),
            });
        }
        Ok(())
    }

    /// Membership up to an absolute slack `tol` per constraint.
    pub fn contains(&self, point: &[f64], tol: f64) -> Result<bool> {
        self.check_dim(point)?;
        Ok(match self {
            FeasibleSet::Polytope { a, b, .. } => {
                let x = DVector::from_column_slice(point);
                let ax = a * x;
                (0..a.nrows()).all(|i| ax[i] <= b[i] + tol * (1.0 + b[i].abs()))
            }
            FeasibleSet::Ball { center, radius } => {
                linalg::dist(point, center) <= radius + tol * (1.0 + radius)
            }
        })
    }

    /// Euclidean projection onto the set.
    pub fn project(&self, point: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(point)?;
        match self {
            FeasibleSet::Polytope { a, b, .. } => qp::project_polyhedron(a, b, point),
            FeasibleSet::Ball { center, radius } => {
                let d = linalg::dist(point, center);
                if d <= *radius {
                    Ok(point.to_vec())
                } else {
                    let scale = radius / d;
                    Ok(center
                        .iter()
                        .zip(point)
                        .map(|(c, y)| c + scale * (y - c))
                        .collect())
                }
            }
        }
    }

    /// A stored feasible point: the construction anchor for polytopes, the
    /// center for balls.
    pub fn interior_point(&self) -> Vec<f64> {
        match self {
            FeasibleSet::Polytope { anchor, .. } => anchor.clone(),
            FeasibleSet::Ball { center, .. } => center.clone(),
        }
    }

    /// Coordinate bounds `(lo, hi)`; errors for unbounded polytopes.
    pub fn bounding_box(&self) -> Result<(Vec<f64>, Vec<f64>)> {
        match self {
            FeasibleSet::Polytope { bounds, .. } => bounds.clone().ok_or_else(|| {
                Error::InvalidFeasibleSet("polytope is unbounded or has no vertices".into())
            }),
            FeasibleSet::Ball { center, radius } => {
                let lo = center.iter().map(|c| c - radius).collect();
                let hi = center.iter().map(|c| c + radius).collect();
                Ok((lo, hi))
            }
        }
    }

    /// Vertices of a bounded polytope.
    pub fn vertices(&self) -> Result<Vec<Vec<f64>>> {
        match self {
            FeasibleSet::Polytope { verts, .. } => verts.clone().ok_or_else(|| {
                Error::InvalidFeasibleSet("polytope is unbounded or has no vertices".into())
            }),
            FeasibleSet::Ball { .. } => Err(Error::InvalidFeasibleSet(
                "a ball has no vertex description".into(),
            )),
        }
    }

    /// Upper bound on the set diameter.
    pub fn diameter_bound(&self) -> Result<f64> {
        match self {
            FeasibleSet::Ball { radius, .. } => Ok(2.0 * radius),
            FeasibleSet::Polytope { .. } => {
                let verts = self.vertices()?;
                let mut d: f64 = 0.0;
                for (i, v) in verts.iter().enumerate() {
                    for w in &verts[i + 1..] {
                        d = d.max(linalg::dist(v, w));
                    }
                }
                Ok(d)
            }
        }
    }

    /// One point uniformly distributed in the set (rejection from the
    /// bounding box for polytopes).
    pub fn sample_uniform(&self, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
        match self {
            FeasibleSet::Ball { center, radius } => {
                let unit = sample_ball(center.len(), *radius, rng);
                Ok(linalg::add(center, &unit))
            }
            FeasibleSet::Polytope { .. } => {
                let (lo, hi) = self.bounding_box()?;
                let mut point = vec![0.0; self.dim()];
                for _ in 0..REJECTION_ATTEMPT_CAP {
                    for i in 0..point.len() {
                        point[i] = lo[i] + (hi[i] - lo[i]) * rng.random::<f64>();
                    }
                    if self.contains(&point, 0.0)? {
                        return Ok(point);
                    }
                }
                Err(Error::SamplerTooThin {
                    rate: 1.0 / REJECTION_ATTEMPT_CAP as f64,
                    limit: 1e-4,
                })
            }
        }
    }

    /// Feasible points of a regular grid with `resolution` points per axis
    /// spanning the bounding box.
    pub fn grid(&self, resolution: usize) -> Result<Vec<Vec<f64>>> {
        if resolution < 2 {
            return Err(Error::InvalidFeasibleSet(
                "grid resolution must be >= 2".into(),
            ));
        }
        let n = self.dim();
        if (resolution as f64).powi(n as i32) > 2e7 {
            return Err(Error::InvalidFeasibleSet(format!(
                "grid of {resolution}^{n} points exceeds the cap"
            )));
        }
        let (lo, hi) = self.bounding_box()?;
        let mut points = Vec::new();
        let mut idx = vec![0usize; n];
        loop {
            let point: Vec<f64> = (0..n)
                .map(|i| lo[i] + (hi[i] - lo[i]) * idx[i] as f64 / (resolution - 1) as f64)
                .collect();
            if self.contains(&point, 1e-9)? {
                points.push(point);
            }
            let mut d = 0;
            loop {
                idx[d] += 1;
                if idx[d] < resolution {
                    break;
                }
                idx[d] = 0;
                d += 1;
                if d == n {
                    return Ok(points);
                }
            }
        }
    }
}
