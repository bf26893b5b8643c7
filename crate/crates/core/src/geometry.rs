//! Riemannian calculus on a single chart, evaluated pointwise on jets.
//!
//! Every quantity at a point `p` is carried as a jet in the chart variables
//! expanded at `p`, so a vector field near `p` is a `Vec<Jet>` of its
//! components and can be differentiated further. Curvature follows
//! `R(U,V) = [∇_U, ∇_V] − ∇_[U,V]` with `R(∂_i, ∂_j)∂_k = R^l_{ijk} ∂_l`, and
//! `Ric_{jk} = R^l_{ljk}`. The Laplacian on functions is `Δ = δd`, so its
//! spectrum is nonnegative.

use rand::Rng;

use crate::error::{AtPoint, Error, Result};
use crate::expr::{parse_expr, Consts, ScalarExpr};
use crate::jet::{lift_all, Jet, JetMatrix, Substitution, MAX_DIM};

/// Pivot threshold of the order-0 Cholesky positivity check.
pub const CHOLESKY_PIVOT: f64 = 1e-10;

/// Coordinate names, a box, and optional constraints `expr > 0`.
#[derive(Debug, Clone)]
pub struct Chart {
    names: Vec<String>,
    bounds: Vec<(f64, f64)>,
    constraints: Vec<ScalarExpr>,
    consts: Consts,
}

impl Chart {
    pub fn new(names: &[&str], bounds: &[(f64, f64)]) -> Result<Self> {
        let names: Vec<String> = names.iter().map(|s| s.to_string()).collect();
        Self::from_parts(names, bounds.to_vec(), Consts::new())
    }

    pub fn from_parts(names: Vec<String>, bounds: Vec<(f64, f64)>, consts: Consts) -> Result<Self> {
        if names.is_empty() || names.len() > MAX_DIM {
            return Err(Error::InvalidModel(format!("chart dimension must be 1..={MAX_DIM}, got {}", names.len())));
        }
        if bounds.len() != names.len() {
            return Err(Error::InvalidModel("one bound pair per coordinate required".into()));
        }
        for (name, &(lo, hi)) in names.iter().zip(&bounds) {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::InvalidModel(format!("bounds of `{name}` must be finite with lo < hi")));
            }
        }
        for (i, n) in names.iter().enumerate() {
            if names[..i].contains(n) {
                return Err(Error::InvalidModel(format!("duplicate coordinate `{n}`")));
            }
        }
        Ok(Chart { names, bounds, constraints: Vec::new(), consts })
    }

    /// Require `text > 0` inside the domain.
    pub fn with_constraint(mut self, text: &str) -> Result<Self> {
        let e = parse_expr(text, &self.names, &self.consts)?;
        self.constraints.push(e);
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    pub fn constraints(&self) -> &[ScalarExpr] {
        &self.constraints
    }

    /// Inside the box and every constraint evaluates to a positive number.
    pub fn contains(&self, p: &[f64]) -> bool {
        p.len() == self.dim()
            && p.iter().zip(&self.bounds).all(|(x, &(lo, hi))| *x >= lo && *x <= hi)
            && self.constraints.iter().all(|c| matches!(c.eval_f64(p, &self.consts), Ok(v) if v > 0.0))
    }

    /// Uniform draw from the box (constraints not applied).
    pub fn sample_box<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        self.bounds.iter().map(|&(lo, hi)| rng.gen_range(lo..=hi)).collect()
    }
}

/// Symmetric matrix of expressions `g_ab` over a chart.
#[derive(Debug, Clone)]
pub struct MetricField {
    n: usize,
    entries: Vec<ScalarExpr>,
    consts: Consts,
}

impl MetricField {
    /// Parse a full `n × n` matrix; the lower triangle may be empty strings,
    /// in which case it mirrors the upper one.
    pub fn parse(coords: &[String], rows: &[Vec<String>], consts: &Consts) -> Result<Self> {
        let n = coords.len();
        if rows.len() != n || rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidModel(format!("metric must be {n}x{n}")));
        }
        let mut entries = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let text = if i > j && rows[i][j].trim().is_empty() { &rows[j][i] } else { &rows[i][j] };
                entries.push(parse_expr(text, coords, consts)?);
            }
        }
        for i in 0..n {
            for j in 0..i {
                if entries[i * n + j].to_string() != entries[j * n + i].to_string() {
                    return Err(Error::InvalidModel(format!("metric is not symmetric in entries ({i},{j}) and ({j},{i})")));
                }
            }
        }
        Ok(MetricField { n, entries, consts: consts.clone() })
    }

    /// Convenience constructor from string slices.
    pub fn from_strs(coords: &[String], rows: &[&[&str]], consts: &Consts) -> Result<Self> {
        let rows: Vec<Vec<String>> = rows.iter().map(|r| r.iter().map(|s| s.to_string()).collect()).collect();
        Self::parse(coords, &rows, consts)
    }

    /// Diagonal metric.
    pub fn diagonal(coords: &[String], diag: &[&str], consts: &Consts) -> Result<Self> {
        let n = coords.len();
        let rows: Vec<Vec<String>> = (0..n)
            .map(|i| (0..n).map(|j| if i == j { diag[i].to_string() } else { "0".to_string() }).collect())
            .collect();
        Self::parse(coords, &rows, consts)
    }

    pub fn euclidean(coords: &[String]) -> Result<Self> {
        let ones = vec!["1"; coords.len()];
        Self::diagonal(coords, &ones, &Consts::new())
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn entry(&self, i: usize, j: usize) -> &ScalarExpr {
        &self.entries[i * self.n + j]
    }

    pub fn consts(&self) -> &Consts {
        &self.consts
    }

    pub fn eval(&self, x: &[Jet]) -> Result<JetMatrix> {
        let vals: Vec<Jet> = self.entries.iter().map(|e| e.eval_jet(x, &self.consts)).collect::<Result<_>>()?;
        Ok(JetMatrix::from_fn(self.n, self.n, |i, j| vals[i * self.n + j]))
    }

    pub fn eval_f64(&self, p: &[f64]) -> Result<Vec<f64>> {
        self.entries.iter().map(|e| e.eval_f64(p, &self.consts)).collect()
    }

    /// All geometric data at `p`.
    pub fn at(&self, p: &[f64]) -> Result<PointGeometry> {
        PointGeometry::new(self, p)
    }
}

/// Component expressions of a vector field in the coordinate basis.
#[derive(Debug, Clone)]
pub struct VectorField {
    comps: Vec<ScalarExpr>,
    consts: Consts,
}

impl VectorField {
    pub fn parse(coords: &[String], comps: &[&str], consts: &Consts) -> Result<Self> {
        if comps.len() != coords.len() {
            return Err(Error::Dimension(format!("{} components for a {}-dimensional chart", comps.len(), coords.len())));
        }
        let comps = comps.iter().map(|c| parse_expr(c, coords, consts)).collect::<std::result::Result<_, _>>()?;
        Ok(VectorField { comps, consts: consts.clone() })
    }

    pub fn eval(&self, x: &[Jet]) -> Result<Vec<Jet>> {
        self.comps.iter().map(|c| c.eval_jet(x, &self.consts)).collect()
    }
}

/// A chart together with a metric.
#[derive(Debug, Clone)]
pub struct Manifold {
    pub chart: Chart,
    pub metric: MetricField,
}

impl Manifold {
    pub fn new(chart: Chart, metric: MetricField) -> Result<Self> {
        if chart.dim() != metric.dim() {
            return Err(Error::Dimension("metric size differs from chart dimension".into()));
        }
        Ok(Manifold { chart, metric })
    }

    pub fn dim(&self) -> usize {
        self.chart.dim()
    }

    pub fn at(&self, p: &[f64]) -> Result<PointGeometry> {
        self.metric.at(p)
    }
}

/// Order-0 Cholesky factorization; fails when a pivot drops below
/// [`CHOLESKY_PIVOT`].
pub fn check_positive_definite(g: &[f64], n: usize, point: &[f64]) -> Result<()> {
    let mut l = vec![0.0; n * n];
    for j in 0..n {
        let mut d = g[j * n + j];
        for k in 0..j {
            d -= l[j * n + k] * l[j * n + k];
        }
        if !(d > CHOLESKY_PIVOT) {
            return Err(Error::DegenerateMetric {
                point: point.to_vec(),
                detail: format!("Cholesky pivot {j} is {d:e}"),
            });
        }
        let d = d.sqrt();
        l[j * n + j] = d;
        for i in j + 1..n {
            let mut s = g[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            l[i * n + j] = s / d;
        }
    }
    Ok(())
}

/// Metric, inverse, Christoffel symbols and curvature as jets. Either expanded
/// at the point itself or transported along a map by substitution.
#[derive(Debug, Clone)]
pub struct Tensors {
    n: usize,
    pub g: JetMatrix,
    pub ginv: JetMatrix,
    gamma: Vec<Jet>,
    riemann: Vec<Jet>,
    ricci: Vec<Jet>,
}

impl Tensors {
    pub fn dim(&self) -> usize {
        self.n
    }

    /// `Γ^k_{ij}`.
    pub fn gamma(&self, k: usize, i: usize, j: usize) -> &Jet {
        &self.gamma[(k * self.n + i) * self.n + j]
    }

    /// `R^l_{ijk}` with `R(∂_i, ∂_j)∂_k = R^l_{ijk} ∂_l`.
    pub fn riemann(&self, l: usize, i: usize, j: usize, k: usize) -> &Jet {
        let n = self.n;
        &self.riemann[((l * n + i) * n + j) * n + k]
    }

    pub fn ricci(&self, i: usize, j: usize) -> &Jet {
        &self.ricci[i * self.n + j]
    }

    /// `Ric^i_j = g^{ik} Ric_{kj}`.
    pub fn ricci_endomorphism(&self) -> JetMatrix {
        let ric = JetMatrix::from_fn(self.n, self.n, |i, j| *self.ricci(i, j));
        self.ginv.matmul(&ric)
    }

    pub fn inner(&self, u: &[Jet], v: &[Jet]) -> Jet {
        self.g.bilinear(u, v)
    }

    /// Order-0 length.
    pub fn norm(&self, u: &[Jet]) -> f64 {
        self.inner(u, u).value().max(0.0).sqrt()
    }

    /// `Γ^k_{ij} u^i v^j` as a vector.
    pub fn gamma_contract(&self, u: &[Jet], v: &[Jet]) -> Vec<Jet> {
        let n = self.n;
        let dim = u.first().map_or(0, Jet::dim);
        (0..n)
            .map(|k| {
                let mut acc = Jet::zero(dim);
                for i in 0..n {
                    for j in 0..n {
                        acc += *self.gamma(k, i, j) * u[i] * v[j];
                    }
                }
                acc
            })
            .collect()
    }

    /// `R(u, v)w`.
    pub fn curvature(&self, u: &[Jet], v: &[Jet], w: &[Jet]) -> Vec<Jet> {
        let n = self.n;
        let dim = u.first().map_or(0, Jet::dim);
        (0..n)
            .map(|l| {
                let mut acc = Jet::zero(dim);
                for i in 0..n {
                    for j in 0..n {
                        let uv = u[i] * v[j];
                        for k in 0..n {
                            acc += *self.riemann(l, i, j, k) * uv * w[k];
                        }
                    }
                }
                acc
            })
            .collect()
    }

    /// Transport every tensor along the map whose coordinate jets define `sub`.
    pub fn compose(&self, sub: &Substitution) -> Result<Tensors> {
        let err = |e| Error::from_jet(e, &[]);
        Ok(Tensors {
            n: self.n,
            g: sub.apply_matrix(&self.g).map_err(err)?,
            ginv: sub.apply_matrix(&self.ginv).map_err(err)?,
            gamma: sub.apply_all(&self.gamma).map_err(err)?,
            riemann: sub.apply_all(&self.riemann).map_err(err)?,
            ricci: sub.apply_all(&self.ricci).map_err(err)?,
        })
    }

    /// Gram–Schmidt over jets, pivoting at each step on the largest remaining
    /// order-0 norm. Returns as many vectors as the candidates span.
    pub fn gram_schmidt(&self, candidates: &[Vec<Jet>], wanted: usize, point: &[f64]) -> Result<Vec<Vec<Jet>>> {
        let mut rest: Vec<Vec<Jet>> = candidates.to_vec();
        let mut out: Vec<Vec<Jet>> = Vec::with_capacity(wanted);
        while out.len() < wanted {
            let (best, norm) = rest
                .iter()
                .enumerate()
                .map(|(i, v)| (i, self.norm(v)))
                .fold((usize::MAX, -1.0), |b, c| if c.1 > b.1 { c } else { b });
            if best == usize::MAX || norm <= 1e-12 {
                return Err(Error::DegenerateMetric {
                    point: point.to_vec(),
                    detail: "frame candidates do not span".into(),
                });
            }
            let v = rest.swap_remove(best);
            let len = self.inner(&v, &v).sqrt().at(point)?;
            let unit: Vec<Jet> = v.iter().map(|c| c.div(&len)).collect::<std::result::Result<_, _>>().at(point)?;
            for r in &mut rest {
                let proj = self.inner(r, &unit);
                for (rc, uc) in r.iter_mut().zip(&unit) {
                    *rc -= proj * *uc;
                }
            }
            out.push(unit);
        }
        Ok(out)
    }
}

/// Geometry of a metric expanded at a chart point.
#[derive(Debug, Clone)]
pub struct PointGeometry {
    point: Vec<f64>,
    x: Vec<Jet>,
    pub tensors: Tensors,
}

impl PointGeometry {
    pub fn new(metric: &MetricField, p: &[f64]) -> Result<Self> {
        let n = metric.dim();
        if p.len() != n {
            return Err(Error::Dimension(format!("point of length {} on a {n}-dimensional chart", p.len())));
        }
        let x = lift_all(p).at(p)?;
        let g = metric.eval(&x)?;
        check_positive_definite(&g.values(), n, p)?;
        let ginv = g.inverse().at(p)?;
        let dg: Vec<JetMatrix> = (0..n)
            .map(|l| {
                let data: Vec<Jet> = (0..n * n).map(|k| g.get(k / n, k % n).d(l)).collect::<std::result::Result<_, _>>()?;
                Ok(JetMatrix::from_fn(n, n, |i, j| data[i * n + j]))
            })
            .collect::<std::result::Result<_, crate::jet::JetError>>()
            .at(p)?;
        // Γ_{lij} = ½(∂_i g_jl + ∂_j g_il − ∂_l g_ij)
        let first = |l: usize, i: usize, j: usize| (*dg[i].get(j, l) + *dg[j].get(i, l) - *dg[l].get(i, j)).scale(0.5);
        let mut lowered = vec![Jet::zero(n); n * n * n];
        for l in 0..n {
            for i in 0..n {
                for j in i..n {
                    let v = first(l, i, j);
                    lowered[(l * n + i) * n + j] = v;
                    lowered[(l * n + j) * n + i] = v;
                }
            }
        }
        let mut gamma = vec![Jet::zero(n); n * n * n];
        for k in 0..n {
            for i in 0..n {
                for j in i..n {
                    let mut acc = Jet::zero(n);
                    for l in 0..n {
                        acc += *ginv.get(k, l) * lowered[(l * n + i) * n + j];
                    }
                    gamma[(k * n + i) * n + j] = acc;
                    gamma[(k * n + j) * n + i] = acc;
                }
            }
        }
        let mut tensors = Tensors { n, g, ginv, gamma, riemann: Vec::new(), ricci: Vec::new() };
        tensors.riemann = riemann_from_gamma(&tensors, p)?;
        tensors.ricci = ricci_from_riemann(&tensors);
        Ok(PointGeometry { point: p.to_vec(), x, tensors })
    }

    /// Negate every Christoffel symbol, leaving curvature untouched. Used only
    /// to build negative controls for the validation suites.
    #[doc(hidden)]
    pub fn corrupt_christoffel_sign(&mut self) {
        for c in &mut self.tensors.gamma {
            *c = -*c;
        }
    }

    pub fn point(&self) -> &[f64] {
        &self.point
    }

    pub fn dim(&self) -> usize {
        self.tensors.n
    }

    /// Coordinate jets of the point.
    pub fn coords(&self) -> &[Jet] {
        &self.x
    }

    pub fn g(&self) -> &JetMatrix {
        &self.tensors.g
    }

    pub fn christoffel(&self, k: usize, i: usize, j: usize) -> &Jet {
        self.tensors.gamma(k, i, j)
    }

    pub fn riemann(&self, l: usize, i: usize, j: usize, k: usize) -> &Jet {
        self.tensors.riemann(l, i, j, k)
    }

    pub fn ricci(&self, i: usize, j: usize) -> &Jet {
        self.tensors.ricci(i, j)
    }

    pub fn ricci_endomorphism(&self) -> JetMatrix {
        self.tensors.ricci_endomorphism()
    }

    pub fn inner(&self, u: &[Jet], v: &[Jet]) -> Jet {
        self.tensors.inner(u, v)
    }

    pub fn norm(&self, u: &[Jet]) -> f64 {
        self.tensors.norm(u)
    }

    /// Constant jet with the shape of this point.
    pub fn constant(&self, v: f64) -> Jet {
        Jet::constant(self.dim(), v)
    }

    /// The coordinate field `∂_i` as jets.
    pub fn coordinate_field(&self, i: usize) -> Vec<Jet> {
        (0..self.dim()).map(|k| self.constant(if k == i { 1.0 } else { 0.0 })).collect()
    }

    /// `W f = W^j ∂_j f`.
    pub fn directional(&self, f: &Jet, w: &[Jet]) -> Result<Jet> {
        directional(f, w, &self.point)
    }

    /// `(∇_W X)^k = W^j (∂_j X^k + Γ^k_{jl} X^l)`.
    pub fn covariant_derivative(&self, x: &[Jet], w: &[Jet]) -> Result<Vec<Jet>> {
        let corr = self.tensors.gamma_contract(w, x);
        x.iter().zip(corr).map(|(xk, c)| Ok(self.directional(xk, w)? + c)).collect()
    }

    pub fn lie_bracket(&self, x: &[Jet], y: &[Jet]) -> Result<Vec<Jet>> {
        lie_bracket(x, y, &self.point)
    }

    /// `(grad f)^k = g^{kl} ∂_l f`.
    pub fn gradient(&self, f: &Jet) -> Result<Vec<Jet>> {
        let df: Vec<Jet> = (0..self.dim()).map(|l| f.d(l)).collect::<std::result::Result<_, _>>().at(&self.point)?;
        Ok(self.tensors.ginv.mul_vec(&df))
    }

    /// `div X = (1/√det g) ∂_i(√det g X^i)`.
    pub fn divergence(&self, x: &[Jet]) -> Result<Jet> {
        let p = &self.point;
        let vol = self.tensors.g.determinant().at(p)?.sqrt().at(p)?;
        let mut acc = self.constant(0.0);
        for (i, xi) in x.iter().enumerate() {
            acc += (vol * *xi).d(i).at(p)?;
        }
        acc.div(&vol).at(p)
    }

    /// `Δf = −div grad f`.
    pub fn laplacian(&self, f: &Jet) -> Result<Jet> {
        Ok(-self.divergence(&self.gradient(f)?)?)
    }

    /// Frobenius norm of `(L_X g)_{ij} = g(∇_i X, ∂_j) + g(∂_i, ∇_j X)`.
    pub fn killing_residual(&self, x: &[Jet]) -> Result<f64> {
        let n = self.dim();
        let nabla: Vec<Vec<Jet>> =
            (0..n).map(|i| self.covariant_derivative(x, &self.coordinate_field(i))).collect::<Result<_>>()?;
        let mut sum = 0.0;
        for i in 0..n {
            for j in 0..n {
                let a = self.inner(&nabla[i], &self.coordinate_field(j)).value();
                let b = self.inner(&self.coordinate_field(i), &nabla[j]).value();
                sum += (a + b) * (a + b);
            }
        }
        Ok(sum.sqrt())
    }

    /// Orthonormal frame from the coordinate fields.
    pub fn coordinate_frame(&self) -> Result<Vec<Vec<Jet>>> {
        let cands: Vec<Vec<Jet>> = (0..self.dim()).map(|i| self.coordinate_field(i)).collect();
        self.tensors.gram_schmidt(&cands, self.dim(), &self.point)
    }

    /// `max |∂_k g_ij − Γˡ_ki g_lj − Γˡ_kj g_il|`.
    pub fn metric_compatibility_residual(&self) -> Result<f64> {
        let n = self.dim();
        let g = &self.tensors.g;
        let mut worst: f64 = 0.0;
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let mut r = g.get(i, j).d(k).at(&self.point)?.value();
                    for l in 0..n {
                        r -= self.christoffel(l, k, i).value() * g.get(l, j).value()
                            + self.christoffel(l, k, j).value() * g.get(i, l).value();
                    }
                    worst = worst.max(r.abs());
                }
            }
        }
        Ok(worst)
    }

    /// `max |Rˡ_ijk + Rˡ_jki + Rˡ_kij|`.
    pub fn bianchi_residual(&self) -> f64 {
        let n = self.dim();
        let mut worst: f64 = 0.0;
        for l in 0..n {
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        let b = self.riemann(l, i, j, k).value()
                            + self.riemann(l, j, k, i).value()
                            + self.riemann(l, k, i, j).value();
                        worst = worst.max(b.abs());
                    }
                }
            }
        }
        worst
    }

    /// `max |Ric_ij − Ric_ji|`.
    pub fn ricci_symmetry_residual(&self) -> f64 {
        let n = self.dim();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                worst = worst.max((self.ricci(i, j).value() - self.ricci(j, i).value()).abs());
            }
        }
        worst
    }
}

/// `W f = W^j ∂_j f`.
pub fn directional(f: &Jet, w: &[Jet], point: &[f64]) -> Result<Jet> {
    let mut acc = Jet::zero(f.dim());
    for (j, wj) in w.iter().enumerate() {
        acc += *wj * f.d(j).at(point)?;
    }
    Ok(acc)
}

/// `[X, Y]^k = X^j ∂_j Y^k − Y^j ∂_j X^k`.
pub fn lie_bracket(x: &[Jet], y: &[Jet], point: &[f64]) -> Result<Vec<Jet>> {
    x.iter()
        .zip(y)
        .map(|(xk, yk)| Ok(directional(yk, x, point)? - directional(xk, y, point)?))
        .collect()
}

fn riemann_from_gamma(t: &Tensors, p: &[f64]) -> Result<Vec<Jet>> {
    let n = t.n;
    // dgamma[m][(k,i,j)] = ∂_m Γ^k_{ij}
    let dgamma: Vec<Vec<Jet>> = (0..n)
        .map(|m| t.gamma.iter().map(|c| c.d(m)).collect::<std::result::Result<Vec<_>, _>>())
        .collect::<std::result::Result<_, _>>()
        .at(p)?;
    let gi = |k: usize, i: usize, j: usize| (k * n + i) * n + j;
    let mut out = vec![Jet::zero(n); n * n * n * n];
    for l in 0..n {
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let mut r = dgamma[i][gi(l, j, k)] - dgamma[j][gi(l, i, k)];
                    for m in 0..n {
                        r += *t.gamma(l, i, m) * *t.gamma(m, j, k) - *t.gamma(l, j, m) * *t.gamma(m, i, k);
                    }
                    out[((l * n + i) * n + j) * n + k] = r;
                }
            }
        }
    }
    Ok(out)
}

fn ricci_from_riemann(t: &Tensors) -> Vec<Jet> {
    let n = t.n;
    let mut out = vec![Jet::zero(n); n * n];
    for j in 0..n {
        for k in 0..n {
            let mut acc = Jet::zero(n);
            for l in 0..n {
                acc += *t.riemann(l, l, j, k);
            }
            out[j * n + k] = acc;
        }
    }
    out
}

/// Euclidean length of order-0 parts.
pub fn euclidean_norm(v: &[Jet]) -> f64 {
    v.iter().map(|c| c.value() * c.value()).sum::<f64>().sqrt()
}

/// `Σ a_i v_i` for jet coefficients and jet vectors.
pub fn combine(coeffs: &[Jet], vectors: &[Vec<Jet>]) -> Vec<Jet> {
    let n = vectors[0].len();
    let dim = vectors[0][0].dim();
    (0..n).map(|k| coeffs.iter().zip(vectors).fold(Jet::zero(dim), |acc, (a, v)| acc + *a * v[k])).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::fd_check;

    fn names(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + b.abs())
    }

    fn sphere(r2: &str) -> MetricField {
        let c = names(&["th", "ph"]);
        let rows: Vec<Vec<String>> = vec![vec![r2.into(), "0".into()], vec!["0".into(), format!("{r2}*sin(th)^2")]];
        MetricField::parse(&c, &rows, &Consts::new()).unwrap()
    }

    fn warped() -> MetricField {
        let c = names(&["x", "y", "t"]);
        MetricField::diagonal(&c, &["1", "1", "exp(x^2/2)^2"], &Consts::new()).unwrap()
    }

    /// Christoffel symbols from finite differences of the metric entries.
    fn fd_christoffel(m: &MetricField, p: &[f64]) -> Vec<f64> {
        let n = m.dim();
        let k = m.consts().clone();
        let mut dg = vec![0.0; n * n * n];
        for l in 0..n {
            let mut ex = vec![0u8; n];
            ex[l] = 1;
            for i in 0..n {
                for j in 0..n {
                    dg[(l * n + i) * n + j] = fd_check(m.entry(i, j), p, &ex, 1e-3, &k).unwrap();
                }
            }
        }
        let g = m.eval_f64(p).unwrap();
        let gm = JetMatrix::from_values(n, n, &g, 0);
        let ginv = gm.inverse().unwrap().values();
        let mut out = vec![0.0; n * n * n];
        for kk in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let mut acc = 0.0;
                    for l in 0..n {
                        let low = 0.5 * (dg[(i * n + j) * n + l] + dg[(j * n + i) * n + l] - dg[(l * n + i) * n + j]);
                        acc += ginv[kk * n + l] * low;
                    }
                    out[(kk * n + i) * n + j] = acc;
                }
            }
        }
        out
    }

    #[test]
    fn euclidean_christoffels_vanish() {
        let g = MetricField::euclidean(&names(&["x", "y", "z"])).unwrap().at(&[0.3, -1.0, 2.0]).unwrap();
        for k in 0..3 {
            for i in 0..3 {
                for j in 0..3 {
                    assert_eq!(g.christoffel(k, i, j).value(), 0.0);
                }
            }
        }
    }

    #[test]
    fn warped_christoffels_match_finite_differences() {
        let m = warped();
        for x in [0.2, 0.7, 1.4] {
            let p = [x, 0.1, -0.3];
            let geo = m.at(&p).unwrap();
            let fd = fd_christoffel(&m, &p);
            for k in 0..3 {
                for i in 0..3 {
                    for j in 0..3 {
                        let jet = geo.christoffel(k, i, j).value();
                        assert!(close(jet, fd[(k * 3 + i) * 3 + j], 1e-6), "Γ^{k}_{i}{j} at x={x}");
                    }
                }
            }
            // β = exp(x²/2): β′/β = x, ββ′ = x exp(x²)
            assert!(close(geo.christoffel(2, 0, 2).value(), x, 1e-12));
            assert!(close(geo.christoffel(0, 2, 2).value(), -x * (x * x).exp(), 1e-12));
        }
    }

    #[test]
    fn sphere_christoffel() {
        let m = sphere("2");
        let th = 0.9;
        let geo = m.at(&[th, 0.4]).unwrap();
        assert!(close(geo.christoffel(0, 1, 1).value(), -th.sin() * th.cos(), 1e-12));
        let fd = fd_christoffel(&m, &[th, 0.4]);
        assert!(close(fd[3], geo.christoffel(0, 1, 1).value(), 1e-6));
    }

    #[test]
    fn cp1_ricci_is_half_metric() {
        let m = sphere("2");
        for th in [0.3, 1.0, 2.5] {
            let geo = m.at(&[th, 1.0]).unwrap();
            let end = geo.ricci_endomorphism();
            for i in 0..2 {
                for j in 0..2 {
                    let want = if i == j { 0.5 } else { 0.0 };
                    assert!((end.get(i, j).value() - want).abs() <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn three_sphere_ricci_is_twice_metric() {
        let c = names(&["eta", "xi1", "xi2"]);
        let m = MetricField::diagonal(&c, &["1", "cos(eta)^2", "sin(eta)^2"], &Consts::new()).unwrap();
        let geo = m.at(&[0.6, 0.2, -1.1]).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert!((geo.ricci(i, j).value() - 2.0 * geo.g().get(i, j).value()).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn flat_metric_has_no_curvature() {
        let c = names(&["r", "t"]);
        // polar coordinates on the plane
        let m = MetricField::diagonal(&c, &["1", "r^2"], &Consts::new()).unwrap();
        let geo = m.at(&[1.3, 0.5]).unwrap();
        for l in 0..2 {
            for i in 0..2 {
                for j in 0..2 {
                    for k in 0..2 {
                        assert!(geo.riemann(l, i, j, k).value().abs() <= 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn bianchi_and_ricci_symmetry_on_general_metric() {
        let c = names(&["x", "y", "z"]);
        let rows: &[&[&str]] = &[
            &["2 + sin(x*y)", "0.3*cos(z)", "0.1*x"],
            &["0.3*cos(z)", "3 + x^2", "0.2*y*z"],
            &["0.1*x", "0.2*y*z", "1 + exp(-y^2)"],
        ];
        let m = MetricField::from_strs(&c, rows, &Consts::new()).unwrap();
        let geo = m.at(&[0.4, -0.2, 0.7]).unwrap();
        for l in 0..3 {
            for i in 0..3 {
                for j in 0..3 {
                    for k in 0..3 {
                        let b = geo.riemann(l, i, j, k).value()
                            + geo.riemann(l, j, k, i).value()
                            + geo.riemann(l, k, i, j).value();
                        assert!(b.abs() <= 1e-9, "Bianchi {l}{i}{j}{k}: {b}");
                    }
                }
            }
        }
        for i in 0..3 {
            for j in 0..3 {
                assert!((geo.ricci(i, j).value() - geo.ricci(j, i).value()).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn degenerate_metric_names_point() {
        let m = sphere("2");
        match m.at(&[0.0, 1.0]) {
            Err(Error::DegenerateMetric { point, .. }) => assert_eq!(point, vec![0.0, 1.0]),
            other => panic!("expected degenerate metric, got {other:?}"),
        }
    }

    #[test]
    fn asymmetric_metric_rejected() {
        let c = names(&["x", "y"]);
        let rows: &[&[&str]] = &[&["1", "x"], &["y", "1"]];
        assert!(matches!(MetricField::from_strs(&c, rows, &Consts::new()), Err(Error::InvalidModel(_))));
    }

    #[test]
    fn brackets() {
        let m = MetricField::euclidean(&names(&["x", "y"])).unwrap();
        let geo = m.at(&[0.7, 0.2]).unwrap();
        let dx = geo.coordinate_field(0);
        let dy = geo.coordinate_field(1);
        let zero = geo.lie_bracket(&dx, &dy).unwrap();
        assert!(zero.iter().all(|c| c.value() == 0.0));
        let x = geo.coords()[0];
        let xdx = vec![x, geo.constant(0.0)];
        let b = geo.lie_bracket(&dx, &xdx).unwrap();
        assert_eq!(b[0].value(), 1.0);
        assert_eq!(b[1].value(), 0.0);
    }

    #[test]
    fn loubeau_ou_frame_bracket_and_vertical_geodesic_curvature() {
        let c = names(&["x", "y", "t"]);
        let beta = "exp(-x)*(1-exp(x))^2";
        let m = MetricField::diagonal(&c, &["1", "1", &format!("({beta})^2")], &Consts::new()).unwrap();
        let xv = 0.8;
        let geo = m.at(&[xv, 0.1, 0.2]).unwrap();
        let b = parse_expr(beta, &c, &Consts::new()).unwrap().eval_jet(geo.coords(), &Consts::new()).unwrap();
        let e3 = vec![geo.constant(0.0), geo.constant(0.0), b.recip().unwrap()];
        let dx = geo.coordinate_field(0);
        let br = geo.lie_bracket(&dx, &e3).unwrap();
        let ratio = b.d(0).unwrap().value() / b.value();
        assert!(close(br[2].value(), -ratio / b.value(), 1e-12));
        // ∇_{e₃}e₃ = κ₁ ∂_x with κ₁ = −β′/β
        let acc = geo.covariant_derivative(&e3, &e3).unwrap();
        assert!(close(acc[0].value(), -ratio, 1e-12));
        assert!(acc[1].value().abs() < 1e-14 && acc[2].value().abs() < 1e-14);
    }

    #[test]
    fn metric_compatibility() {
        let m = warped();
        let geo = m.at(&[0.9, 0.3, 0.5]).unwrap();
        let x = geo.coords().to_vec();
        let u = vec![x[1] * x[2], x[0].sin(), geo.constant(1.0)];
        let v = vec![geo.constant(0.5), x[2] * x[2], x[0]];
        for dir in 0..3 {
            let w = geo.coordinate_field(dir);
            let lhs = geo.directional(&geo.inner(&u, &v), &w).unwrap().value();
            let rhs = geo.inner(&geo.covariant_derivative(&u, &w).unwrap(), &v).value()
                + geo.inner(&u, &geo.covariant_derivative(&v, &w).unwrap()).value();
            assert!((lhs - rhs).abs() <= 1e-9);
        }
    }

    #[test]
    fn height_function_is_first_eigenfunction_on_cp1() {
        let m = sphere("2");
        let c = names(&["th", "ph"]);
        let f = parse_expr("sqrt(2)*cos(th)", &c, &Consts::new()).unwrap();
        for th in [0.4, 1.2, 2.2] {
            let geo = m.at(&[th, 0.3]).unwrap();
            let fj = f.eval_jet(geo.coords(), &Consts::new()).unwrap();
            let lap = geo.laplacian(&fj).unwrap();
            assert!((lap.value() - fj.value()).abs() <= 1e-12);
        }
    }

    #[test]
    fn constant_function_has_zero_gradient_and_laplacian() {
        let geo = sphere("2").at(&[1.0, 0.0]).unwrap();
        let f = geo.constant(3.0);
        assert!(geo.gradient(&f).unwrap().iter().all(|c| c.value() == 0.0));
        assert_eq!(geo.laplacian(&f).unwrap().value(), 0.0);
    }

    #[test]
    fn rotation_fields_are_killing_and_divergence_free() {
        let m = sphere("2");
        let c = names(&["th", "ph"]);
        let rot = VectorField::parse(&c, &["-sin(ph)", "-cos(th)/sin(th)*cos(ph)"], &Consts::new()).unwrap();
        let axial = VectorField::parse(&c, &["0", "1"], &Consts::new()).unwrap();
        for p in [[0.5, 0.2], [1.7, -2.0]] {
            let geo = m.at(&p).unwrap();
            for field in [&rot, &axial] {
                let x = field.eval(geo.coords()).unwrap();
                assert!(geo.killing_residual(&x).unwrap() <= 1e-9);
                assert!(geo.divergence(&x).unwrap().value().abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn gradient_of_square_is_not_killing() {
        let c = names(&["x", "y"]);
        let geo = MetricField::euclidean(&c).unwrap().at(&[0.5, 0.5]).unwrap();
        let f = parse_expr("x^2", &c, &Consts::new()).unwrap().eval_jet(geo.coords(), &Consts::new()).unwrap();
        let gf = geo.gradient(&f).unwrap();
        assert!(geo.killing_residual(&gf).unwrap() > 1.0);
        assert!(geo.killing_residual(&[geo.constant(0.0), geo.constant(0.0)]).unwrap() == 0.0);
    }

    #[test]
    fn coordinate_frame_is_orthonormal() {
        let c = names(&["x", "y", "z"]);
        let rows: &[&[&str]] = &[&["2", "0.5", "0"], &["0.5", "1 + x^2", "0.1"], &["0", "0.1", "3"]];
        let m = MetricField::from_strs(&c, rows, &Consts::new()).unwrap();
        let geo = m.at(&[0.3, 0.0, 0.0]).unwrap();
        let frame = geo.coordinate_frame().unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                let got = geo.inner(&frame[i], &frame[j]);
                assert!((got.value() - want).abs() <= 1e-12);
                // orthonormality holds identically, so derivatives vanish too
                assert!(got.d(0).unwrap().value().abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn chart_contains_applies_constraints() {
        let chart = Chart::new(&["x", "y"], &[(-2.0, 2.0), (-2.0, 2.0)]).unwrap().with_constraint("x^2 + y^2 - 0.25").unwrap();
        assert!(chart.contains(&[1.0, 0.0]));
        assert!(!chart.contains(&[0.1, 0.1]));
        assert!(!chart.contains(&[3.0, 0.0]));
        assert!(Chart::new(&["x"], &[(1.0, 0.0)]).is_err());
    }
}
