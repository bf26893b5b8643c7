//! Riemannian submersions `π: (P, g) → (M, h)` with one-dimensional fibres.
//!
//! At a point of `P` the engine builds an adapted frame `e₁..eₙ, e_{n+1}`
//! with `dπ(eᵢ) = εᵢ` for a base orthonormal frame `εᵢ`, the structure
//! coefficients `κᵢ = g([eᵢ, e_{n+1}], e_{n+1})`, and the reduced tension and
//! bitension in terms of `X = Σ κᵢ εᵢ`. Everything is a jet in the coordinates
//! of `P`, so the reduced formulas can be compared with the definitional
//! quantities of [`crate::map`] at the same point.

use serde::{Deserialize, Serialize};

use crate::error::{AtPoint, Error, Result};
use crate::expr::{Consts, ScalarExpr};
use crate::geometry::{combine, euclidean_norm, Manifold};
use crate::jet::{values, Jet, JetMatrix, Substitution};
use crate::map::{normalized, scale_vector, sub_vectors, sum_vectors, MapPoint, SmoothMap};

/// Accepted deviation of the base Ricci endomorphism from `c·Id`.
pub const EINSTEIN_TOL: f64 = 1e-8;

/// Which sign of the `∇ʰ_X X` term the reduced bitension uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SignVariant {
    /// `−Δ̄ʰX + ∇ʰ_X X + Ricʰ(X)`
    Plus,
    /// `−Δ̄ʰX − ∇ʰ_X X + Ricʰ(X)`
    Minus,
}

impl SignVariant {
    pub fn sign(self) -> f64 {
        match self {
            SignVariant::Plus => 1.0,
            SignVariant::Minus => -1.0,
        }
    }
}

/// Einstein constant and first eigenvalue of the base.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EinsteinData {
    pub c: f64,
    pub lambda1: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct RiemannianSubmersion {
    pub map: SmoothMap,
    base_identity: SmoothMap,
}

impl RiemannianSubmersion {
    pub fn new(map: SmoothMap) -> Result<Self> {
        let (m, n) = (map.domain.dim(), map.codomain.dim());
        if m != n + 1 {
            return Err(Error::InvalidModel(format!(
                "only one-dimensional fibres are supported: total dimension {m}, base dimension {n}"
            )));
        }
        let base_identity = SmoothMap::identity(map.codomain.clone())?;
        Ok(RiemannianSubmersion { map, base_identity })
    }

    pub fn total(&self) -> &Manifold {
        &self.map.domain
    }

    pub fn base(&self) -> &Manifold {
        &self.map.codomain
    }

    /// The identity of the base, for base-only rough Laplacians.
    pub fn base_identity(&self) -> &SmoothMap {
        &self.base_identity
    }

    pub fn at(&self, p: &[f64]) -> Result<SubmersionPoint> {
        SubmersionPoint::new(self, p)
    }
}

/// `𝓥 = ker dπ` and its `g`-orthogonal complement.
#[derive(Debug, Clone)]
pub struct SplitSpaces {
    pub vertical: Vec<Jet>,
    pub horizontal: Vec<Vec<Jet>>,
}

#[derive(Debug, Clone)]
pub struct AdaptedFrame {
    /// `e₁..eₙ`.
    pub horizontal: Vec<Vec<Jet>>,
    /// `e_{n+1}`.
    pub vertical: Vec<Jet>,
    /// `εᵢ ∘ π` in base coordinates.
    pub base: Vec<Vec<Jet>>,
}

impl AdaptedFrame {
    /// `e₁..e_{n+1}`.
    pub fn all(&self) -> Vec<Vec<Jet>> {
        let mut v = self.horizontal.clone();
        v.push(self.vertical.clone());
        v
    }
}

#[derive(Debug, Clone)]
pub struct StructureCoefficients {
    pub kappa: Vec<Jet>,
    /// `D^k_{ij} = g([eᵢ, eⱼ], e_k)`, `k = 1..n+1`.
    d: Vec<Jet>,
    n: usize,
    /// Largest norm of the horizontal part of `[eᵢ, e_{n+1}]`.
    pub horizontal_remainder: f64,
}

impl StructureCoefficients {
    pub fn d(&self, k: usize, i: usize, j: usize) -> &Jet {
        let m = self.n + 1;
        &self.d[(k * m + i) * m + j]
    }
}

/// Both sign variants of the reduced bitension with their ingredients.
#[derive(Debug, Clone)]
pub struct ReducedBitension {
    pub plus: Vec<f64>,
    pub minus: Vec<f64>,
    /// `Δ̄ʰX` (horizontal Laplacian of `X` along `π`).
    pub laplacian: Vec<f64>,
    /// `∇ʰ_X X`.
    pub nabla_xx: Vec<f64>,
    pub ricci_x: Vec<f64>,
    /// `Σⱼ e_{n+1}(e_{n+1}κⱼ) εⱼ`, the part the reduced formula drops.
    pub fiber_term: Vec<f64>,
    pub constituents: f64,
}

impl ReducedBitension {
    pub fn variant(&self, s: SignVariant) -> &[f64] {
        match s {
            SignVariant::Plus => &self.plus,
            SignVariant::Minus => &self.minus,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Divergence {
    /// `Σᵢ h(εᵢ, ∇̄_{eᵢ} X)`.
    pub div: f64,
    /// `Σᵢ eᵢ κᵢ`.
    pub sum_e_kappa: f64,
    /// `g(Σᵢ ∇_{eᵢ}eᵢ, X*)` with `X*` the horizontal lift of `X`.
    pub correction: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EinsteinResiduals {
    /// Normalized `‖Δ̄ʰX − cX‖`.
    pub r1: f64,
    /// Normalized `‖∇ʰ_X X‖`.
    pub r2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObataResiduals {
    /// `|Δf − 2cf|`.
    pub eigres: f64,
    /// Normalized `‖Δ̄X − 2Ric(X)‖`.
    pub jres: f64,
    /// Normalized `‖Δ̄X − Ric(X)‖`.
    pub jres_ricci: f64,
    pub r1: f64,
    pub r2: f64,
}

/// All submersion data at one point of `P`.
#[derive(Debug, Clone)]
pub struct SubmersionPoint {
    /// The definitional oracle at the point.
    pub mp: MapPoint,
    pub frame: AdaptedFrame,
    pub coeffs: StructureCoefficients,
    /// `∇ʰ_{εᵢ}εⱼ ∘ π`, indexed `[i][j]`.
    base_nabla: Vec<Vec<Vec<Jet>>>,
    /// `Δ̄ʰεⱼ ∘ π`.
    base_laplacian: Vec<Vec<Jet>>,
    base_ricci: JetMatrix,
    /// Largest entry of `J g⁻¹ Jᵀ − h⁻¹` at the point.
    pub isometry_residual: f64,
}

/// Determinant by cofactor expansion; no pivoting, so singular minors are fine.
fn cofactor_det(m: &[Vec<Jet>]) -> Jet {
    let n = m.len();
    if n == 1 {
        return m[0][0];
    }
    let dim = m[0][0].dim();
    let mut acc = Jet::zero(dim);
    for c in 0..n {
        let minor: Vec<Vec<Jet>> = m[1..].iter().map(|r| r.iter().enumerate().filter(|(k, _)| *k != c).map(|(_, v)| *v).collect()).collect();
        let term = m[0][c] * cofactor_det(&minor);
        if c % 2 == 0 {
            acc += term;
        } else {
            acc -= term;
        }
    }
    acc
}

impl SubmersionPoint {
    fn new(sub: &RiemannianSubmersion, p: &[f64]) -> Result<Self> {
        let mp = sub.map.at(p)?;
        let n = sub.base().dim();
        let j = mp.dphi.clone();

        // vertical direction: generalized cross product of the rows of dπ
        let rows: Vec<Vec<Jet>> = (0..n).map(|a| j.row(a).to_vec()).collect();
        let v: Vec<Jet> = (0..=n)
            .map(|k| {
                let minor: Vec<Vec<Jet>> =
                    rows.iter().map(|r| r.iter().enumerate().filter(|(c, _)| *c != k).map(|(_, x)| *x).collect()).collect();
                let d = if n == 0 { mp.constant(1.0) } else { cofactor_det(&minor) };
                if (k + n) % 2 == 0 {
                    d
                } else {
                    -d
                }
            })
            .collect();
        let scale: f64 = rows.iter().map(|r| euclidean_norm(r)).product();
        if !(euclidean_norm(&v) > 1e-10 * scale.max(f64::MIN_POSITIVE)) {
            return Err(Error::RankDeficient { point: p.to_vec() });
        }
        let vlen = mp.dom.inner(&v, &v).sqrt().at(p)?;
        let vertical: Vec<Jet> = v.iter().map(|c| c.div(&vlen)).collect::<std::result::Result<_, _>>().at(p)?;

        // base frame and its derivatives at π(p), transported along π
        let y0 = mp.image().to_vec();
        let base_id = sub.base_identity().at(&y0)?;
        let eps_y: Vec<Vec<Jet>> = base_id.frame().to_vec();
        let nabla_y: Vec<Vec<Vec<Jet>>> = eps_y
            .iter()
            .map(|ei| eps_y.iter().map(|ej| base_id.dom.covariant_derivative(ej, ei)).collect::<Result<Vec<_>>>())
            .collect::<Result<_>>()?;
        let lap_y: Vec<Vec<Jet>> = eps_y.iter().map(|ej| base_id.rough_laplacian(ej)).collect::<Result<_>>()?;
        let subst = Substitution::new(&mp.phi).at(p)?;
        let tr = |v: &Vec<Jet>| subst.apply_all(v).at(p);
        let base: Vec<Vec<Jet>> = eps_y.iter().map(tr).collect::<Result<_>>()?;
        let base_nabla: Vec<Vec<Vec<Jet>>> =
            nabla_y.iter().map(|row| row.iter().map(tr).collect::<Result<Vec<_>>>()).collect::<Result<_>>()?;
        let base_laplacian: Vec<Vec<Jet>> = lap_y.iter().map(tr).collect::<Result<_>>()?;
        let base_ricci = mp.target.ricci_endomorphism();

        // horizontal lift eᵢ = g⁻¹Jᵀ(Jg⁻¹Jᵀ)⁻¹εᵢ
        let ginv = &mp.dom.tensors.ginv;
        let gj = ginv.matmul(&j.transpose());
        let jgj = j.matmul(&gj);
        let hinv = &mp.target.ginv;
        let mut isometry_residual: f64 = 0.0;
        for a in 0..n {
            for b in 0..n {
                isometry_residual = isometry_residual.max((jgj.get(a, b).value() - hinv.get(a, b).value()).abs());
            }
        }
        let rhs = JetMatrix::from_fn(n, n, |r, c| base[c][r]);
        let coeff = jgj.solve_matrix(&rhs).at(p)?;
        let lifted = gj.matmul(&coeff);
        let horizontal: Vec<Vec<Jet>> = (0..n).map(|c| lifted.column(c)).collect();
        let frame = AdaptedFrame { horizontal, vertical, base };
        let coeffs = structure(&mp, &frame)?;
        Ok(SubmersionPoint { mp, frame, coeffs, base_nabla, base_laplacian, base_ricci, isometry_residual })
    }

    pub fn n(&self) -> usize {
        self.frame.base.len()
    }

    pub fn point(&self) -> &[f64] {
        self.mp.point()
    }

    pub fn split_spaces(&self) -> SplitSpaces {
        SplitSpaces { vertical: self.frame.vertical.clone(), horizontal: self.frame.horizontal.clone() }
    }

    /// Vertical and horizontal parts of a tangent vector.
    pub fn project(&self, w: &[Jet]) -> (Vec<Jet>, Vec<Jet>) {
        let c = self.mp.dom.inner(w, &self.frame.vertical);
        let vert = scale_jets(&self.frame.vertical, &c);
        let hor = sub_vectors(w, &vert);
        (vert, hor)
    }

    /// Largest deviation of `g(eₐ, e_b)` from `δ_ab` over the adapted frame.
    pub fn orthonormality_residual(&self) -> f64 {
        let all = self.frame.all();
        let mut worst: f64 = 0.0;
        for (a, ea) in all.iter().enumerate() {
            for (b, eb) in all.iter().enumerate() {
                let want = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((self.mp.dom.inner(ea, eb).value() - want).abs());
            }
        }
        worst
    }

    /// Largest deviation of `h(dπeᵢ, dπeⱼ)` from `δᵢⱼ` plus `|dπ e_{n+1}|`.
    pub fn differential_isometry_residual(&self) -> f64 {
        let pushed: Vec<Vec<Jet>> = self.frame.horizontal.iter().map(|e| self.mp.push(e)).collect();
        let mut worst: f64 = self.mp.norm(&self.mp.push(&self.frame.vertical));
        for (a, pa) in pushed.iter().enumerate() {
            for (b, pb) in pushed.iter().enumerate() {
                let want = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((self.mp.target.inner(pa, pb).value() - want).abs());
            }
        }
        worst
    }

    /// `X = Σ κᵢ εᵢ` as a section of `π⁻¹TM`.
    pub fn x(&self) -> Vec<Jet> {
        combine(&self.coeffs.kappa, &self.frame.base)
    }

    /// Horizontal lift `X* = Σ κᵢ eᵢ`.
    pub fn x_lift(&self) -> Vec<Jet> {
        combine(&self.coeffs.kappa, &self.frame.horizontal)
    }

    /// `τ(π) = −Σ κᵢ εᵢ`.
    pub fn tension_reduced(&self) -> Vec<Jet> {
        scale_vector(&self.x(), -1.0)
    }

    /// `∇ʰ_{εᵢ}εⱼ ∘ π`.
    pub fn base_nabla(&self, i: usize, j: usize) -> &[Jet] {
        &self.base_nabla[i][j]
    }

    pub fn base_ricci(&self) -> &JetMatrix {
        &self.base_ricci
    }

    fn e(&self, i: usize, f: &Jet) -> Result<Jet> {
        self.mp.dom.directional(f, &self.frame.horizontal[i])
    }

    /// `Δ̄ʰX`, `∇ʰ_X X` and their constituents from the base frame data.
    fn reduced_pieces(&self) -> Result<(Vec<Jet>, f64, Vec<Jet>, f64)> {
        let n = self.n();
        let kappa = &self.coeffs.kappa;
        let dom = &self.mp.dom;
        let zero = vec![self.mp.constant(0.0); n];
        let mut lap_kappa_part = zero.clone();
        let mut cross = zero.clone();
        let mut zeroth = zero.clone();
        let mut nab_a = zero.clone();
        let mut nab_b = zero.clone();
        for jx in 0..n {
            // Δ_𝓗κⱼ = −Σᵢ (eᵢeᵢκⱼ − (∇_{eᵢ}eᵢ)κⱼ)
            let mut lap = self.mp.constant(0.0);
            for i in 0..n {
                let ei = &self.frame.horizontal[i];
                let eik = self.e(i, &kappa[jx])?;
                let eeik = self.e(i, &eik)?;
                let nabla_ee = dom.covariant_derivative(ei, ei)?;
                lap -= eeik - dom.directional(&kappa[jx], &nabla_ee)?;
                for (c, b) in cross.iter_mut().zip(&self.base_nabla[i][jx]) {
                    *c += eik * *b;
                }
                // ∇ʰ_X X = Σᵢ κᵢ (Σⱼ (eᵢκⱼ) εⱼ + κⱼ ∇ʰ_{εᵢ}εⱼ)
                for (a, e) in nab_a.iter_mut().zip(&self.frame.base[jx]) {
                    *a += kappa[i] * eik * *e;
                }
                for (b, nb) in nab_b.iter_mut().zip(&self.base_nabla[i][jx]) {
                    *b += kappa[i] * kappa[jx] * *nb;
                }
            }
            for (l, e) in lap_kappa_part.iter_mut().zip(&self.frame.base[jx]) {
                *l += lap * *e;
            }
            for (z, bl) in zeroth.iter_mut().zip(&self.base_laplacian[jx]) {
                *z += kappa[jx] * *bl;
            }
        }
        let cross2 = scale_vector(&cross, 2.0);
        let lapx = sub_vectors(&sum_vectors(&[lap_kappa_part.clone(), zeroth.clone()]), &cross2);
        let mp = &self.mp;
        let lap_constituents = mp.norm(&lap_kappa_part) + mp.norm(&cross2) + mp.norm(&zeroth);
        let nabla_xx = sum_vectors(&[nab_a.clone(), nab_b.clone()]);
        let nab_constituents = mp.norm(&nab_a) + mp.norm(&nab_b);
        Ok((lapx, lap_constituents, nabla_xx, nab_constituents))
    }

    /// `−Δ̄ʰX ± ∇ʰ_X X + Ricʰ(X)` for both signs.
    pub fn bitension_reduced(&self) -> Result<ReducedBitension> {
        let x = self.x();
        let (lapx, lap_c, nxx, nab_c) = self.reduced_pieces()?;
        let ric = self.base_ricci.mul_vec(&x);
        let core = sub_vectors(&ric, &lapx);
        let plus = values(&sum_vectors(&[core.clone(), nxx.clone()]));
        let minus = values(&sub_vectors(&core, &nxx));
        let ev = &self.frame.vertical;
        let mut fiber = vec![self.mp.constant(0.0); self.n()];
        for (jx, k) in self.coeffs.kappa.iter().enumerate() {
            let vv = self.mp.dom.directional(&self.mp.dom.directional(k, ev)?, ev)?;
            for (f, e) in fiber.iter_mut().zip(&self.frame.base[jx]) {
                *f += vv * *e;
            }
        }
        let constituents = lap_c + nab_c + self.mp.norm(&ric);
        Ok(ReducedBitension {
            plus,
            minus,
            laplacian: values(&lapx),
            nabla_xx: values(&nxx),
            ricci_x: values(&ric),
            fiber_term: values(&fiber),
            constituents,
        })
    }

    pub fn divergence_tension(&self) -> Result<Divergence> {
        let x = self.x();
        let mut div = 0.0;
        let mut sum = 0.0;
        let mut total_nabla = vec![self.mp.constant(0.0); self.n() + 1];
        for i in 0..self.n() {
            let ei = &self.frame.horizontal[i];
            let nx = self.mp.pullback_connection(&x, ei)?;
            div += self.mp.target.inner(&self.frame.base[i], &nx).value();
            sum += self.e(i, &self.coeffs.kappa[i])?.value();
            let nee = self.mp.dom.covariant_derivative(ei, ei)?;
            for (t, c) in total_nabla.iter_mut().zip(nee) {
                *t += c;
            }
        }
        let correction = self.mp.dom.inner(&total_nabla, &self.x_lift()).value();
        Ok(Divergence { div, sum_e_kappa: sum, correction })
    }

    /// Distance of the base Ricci endomorphism from `c·Id` (Frobenius, order 0).
    pub fn einstein_defect(&self, c: f64) -> f64 {
        einstein_defect(&self.base_ricci, c)
    }

    pub fn einstein_residuals(&self, data: &EinsteinData) -> Result<EinsteinResiduals> {
        let defect = self.einstein_defect(data.c);
        if defect > EINSTEIN_TOL {
            return Err(Error::NotEinstein { c: data.c, residual: defect, point: self.point().to_vec() });
        }
        let x = self.x();
        let (lapx, lap_c, nxx, nab_c) = self.reduced_pieces()?;
        let cx = scale_vector(&x, data.c);
        let mp = &self.mp;
        let r1 = normalized(mp.norm(&sub_vectors(&lapx, &cx)), lap_c + mp.norm(&cx));
        let r2 = normalized(mp.norm(&nxx), nab_c);
        Ok(EinsteinResiduals { r1, r2 })
    }

    /// `∇̄_{e_{n+1}}` of a section.
    pub fn vertical_derivative(&self, v: &[Jet]) -> Result<Vec<Jet>> {
        self.mp.pullback_connection(v, &self.frame.vertical)
    }

    /// Rough Laplacian pieces over the adapted frame: `(Δ̄_𝓗 V, Δ̄_𝓥 V)`.
    pub fn laplacian_split(&self, v: &[Jet]) -> Result<(Vec<Jet>, Vec<Jet>)> {
        let terms = self.mp.rough_laplacian_terms(v, &self.frame.all())?;
        let n = self.n();
        Ok((terms.sum(0..n), terms.sum(n..n + 1)))
    }

    /// Base section given by base-coordinate expressions, pulled back along `π`.
    pub fn pulled_back(&self, comps: &[ScalarExpr], consts: &Consts) -> Result<Vec<Jet>> {
        self.mp.section_from_exprs(comps, consts)
    }
}

fn scale_jets(v: &[Jet], s: &Jet) -> Vec<Jet> {
    v.iter().map(|c| *c * *s).collect()
}

fn structure(mp: &MapPoint, frame: &AdaptedFrame) -> Result<StructureCoefficients> {
    let p = mp.point();
    let n = frame.horizontal.len();
    let all = frame.all();
    let ev = &frame.vertical;
    let mut kappa = Vec::with_capacity(n);
    let mut remainder: f64 = 0.0;
    for ei in &frame.horizontal {
        let br = mp.dom.lie_bracket(ei, ev)?;
        let k = mp.dom.inner(&br, ev);
        let hor = sub_vectors(&br, &scale_jets(ev, &k));
        remainder = remainder.max(mp.dom.norm(&hor));
        kappa.push(k);
    }
    let m = n + 1;
    let mut d = vec![mp.constant(0.0); m * m * m];
    for i in 0..m {
        for j in 0..m {
            let br = crate::geometry::lie_bracket(&all[i], &all[j], p)?;
            for (k, ek) in all.iter().enumerate() {
                d[(k * m + i) * m + j] = mp.dom.inner(&br, ek);
            }
        }
    }
    Ok(StructureCoefficients { kappa, d, n, horizontal_remainder: remainder })
}

pub fn einstein_defect(ricci_endo: &JetMatrix, c: f64) -> f64 {
    let n = ricci_endo.rows();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            let want = if i == j { c } else { 0.0 };
            s += (ricci_endo.get(i, j).value() - want).powi(2);
        }
    }
    s.sqrt()
}

/// Residuals of a vector field on an Einstein manifold, evaluated through the
/// identity map: normalized `‖Δ̄X − cX‖` and `‖∇_X X‖`.
pub fn field_residuals(id: &MapPoint, x: &[Jet], data: &EinsteinData) -> Result<EinsteinResiduals> {
    let ric = id.dom.ricci_endomorphism();
    let defect = einstein_defect(&ric, data.c);
    if defect > EINSTEIN_TOL {
        return Err(Error::NotEinstein { c: data.c, residual: defect, point: id.point().to_vec() });
    }
    let lap = id.rough_laplacian_terms(x, id.frame())?;
    let cx = scale_vector(x, data.c);
    let r1 = normalized(id.norm(&sub_vectors(&lap.total(), &cx)), lap.constituents + id.norm(&cx));
    let nxx = id.dom.covariant_derivative(x, x)?;
    let r2 = normalized(id.norm(&nxx), 0.0);
    Ok(EinsteinResiduals { r1, r2 })
}

/// Obata-type residuals for `X = grad f` on an Einstein manifold.
pub fn obata_residual(id: &MapPoint, f: &ScalarExpr, consts: &Consts, data: &EinsteinData) -> Result<ObataResiduals> {
    let fj = f.eval_jet(id.dom.coords(), consts)?;
    let lapf = id.dom.laplacian(&fj)?;
    let eigres = (lapf.value() - 2.0 * data.c * fj.value()).abs();
    let x = id.dom.gradient(&fj)?;
    let base = field_residuals(id, &x, data)?;
    let lap = id.rough_laplacian_terms(&x, id.frame())?;
    let ricx = id.dom.ricci_endomorphism().mul_vec(&x);
    let lap_total = lap.total();
    let twice = scale_vector(&ricx, 2.0);
    let jres = normalized(id.norm(&sub_vectors(&lap_total, &twice)), lap.constituents + id.norm(&twice));
    let jres_ricci = normalized(id.norm(&sub_vectors(&lap_total, &ricx)), lap.constituents + id.norm(&ricx));
    Ok(ObataResiduals { eigres, jres, jres_ricci, r1: base.r1, r2: base.r2 })
}
