//! Definition-level calculus of a smooth map `φ: (M, g) → (N, h)`.
//!
//! A section of `φ⁻¹TN` near a point is a `Vec<Jet>` of its components in the
//! codomain coordinate basis, expanded in the domain variables. Sign
//! conventions: `Δ̄V = −Σᵢ (∇̄_{eᵢ}∇̄_{eᵢ}V − ∇̄_{∇_{eᵢ}eᵢ}V)`,
//! `ℛ(V) = Σᵢ Rᴺ(V, dφeᵢ)dφeᵢ`, `J = Δ̄ − ℛ` and `τ₂ = J(τ)`.

use crate::error::{AtPoint, Error, Result};
use crate::expr::{parse_expr, Consts, ScalarExpr};
use crate::geometry::{check_positive_definite, combine, Manifold, PointGeometry, Tensors};
use crate::jet::{values, Jet, JetMatrix, Substitution};

/// `‖q‖ / (1 + Σ‖constituent‖)`.
pub fn normalized(norm: f64, constituents: f64) -> f64 {
    norm / (1.0 + constituents)
}

/// Coordinate expressions of a map between two charted manifolds.
#[derive(Debug, Clone)]
pub struct SmoothMap {
    pub domain: Manifold,
    pub codomain: Manifold,
    comps: Vec<ScalarExpr>,
    consts: Consts,
}

impl SmoothMap {
    pub fn new(domain: Manifold, codomain: Manifold, comps: &[&str], consts: &Consts) -> Result<Self> {
        if comps.len() != codomain.dim() {
            return Err(Error::Dimension(format!(
                "{} map components for a {}-dimensional codomain",
                comps.len(),
                codomain.dim()
            )));
        }
        let names = domain.chart.names().to_vec();
        let comps = comps.iter().map(|c| parse_expr(c, &names, consts)).collect::<std::result::Result<_, _>>()?;
        Ok(SmoothMap { domain, codomain, comps, consts: consts.clone() })
    }

    pub fn identity(m: Manifold) -> Result<Self> {
        let names: Vec<String> = m.chart.names().to_vec();
        let refs: Vec<&str> = names.iter().map(String::as_str).collect();
        Self::new(m.clone(), m, &refs, &Consts::new())
    }

    pub fn components(&self) -> &[ScalarExpr] {
        &self.comps
    }

    pub fn consts(&self) -> &Consts {
        &self.consts
    }

    pub fn eval_f64(&self, p: &[f64]) -> Result<Vec<f64>> {
        self.comps.iter().map(|c| c.eval_f64(p, &self.consts)).collect()
    }

    pub fn at(&self, p: &[f64]) -> Result<MapPoint> {
        MapPoint::new(self, p)
    }
}

/// Tension field at a point, with the sum of the norms of its trace terms.
#[derive(Debug, Clone)]
pub struct Tension {
    pub value: Vec<Jet>,
    pub constituents: f64,
}

/// Bitension field at a point with the norms entering its normalization.
#[derive(Debug, Clone)]
pub struct Bitension {
    pub value: Vec<f64>,
    pub constituents: f64,
    pub tension: Tension,
}

/// Per-frame-vector pieces of the rough Laplacian.
#[derive(Debug, Clone)]
pub struct LaplacianTerms {
    /// `−(∇̄_{eᵢ}∇̄_{eᵢ}V − ∇̄_{∇_{eᵢ}eᵢ}V)` for each frame vector.
    pub terms: Vec<Vec<Jet>>,
    /// Codomain norms of `∇̄_{eᵢ}∇̄_{eᵢ}V` and `∇̄_{∇_{eᵢ}eᵢ}V`, summed.
    pub constituents: f64,
}

impl LaplacianTerms {
    pub fn sum(&self, range: std::ops::Range<usize>) -> Vec<Jet> {
        sum_vectors(&self.terms[range])
    }

    pub fn total(&self) -> Vec<Jet> {
        self.sum(0..self.terms.len())
    }
}

pub fn sum_vectors(vs: &[Vec<Jet>]) -> Vec<Jet> {
    let mut out = vs[0].clone();
    for v in &vs[1..] {
        for (o, c) in out.iter_mut().zip(v) {
            *o += *c;
        }
    }
    out
}

pub fn sub_vectors(a: &[Jet], b: &[Jet]) -> Vec<Jet> {
    a.iter().zip(b).map(|(x, y)| *x - *y).collect()
}

pub fn scale_vector(a: &[Jet], s: f64) -> Vec<Jet> {
    a.iter().map(|x| x.scale(s)).collect()
}

/// Everything about `φ` at one domain point, as jets in the domain variables.
#[derive(Debug, Clone)]
pub struct MapPoint {
    pub dom: PointGeometry,
    /// `φ` as jets.
    pub phi: Vec<Jet>,
    /// `∂φᵃ/∂xⁱ`, `n × m`.
    pub dphi: JetMatrix,
    /// Codomain tensors transported along `φ`.
    pub target: Tensors,
    target_point: Vec<f64>,
    frame: Vec<Vec<Jet>>,
}

impl MapPoint {
    fn new(map: &SmoothMap, p: &[f64]) -> Result<Self> {
        let dom = map.domain.at(p)?;
        let phi: Vec<Jet> = map.comps.iter().map(|c| c.eval_jet(dom.coords(), &map.consts)).collect::<Result<_>>()?;
        let m = map.domain.dim();
        let n = map.codomain.dim();
        let mut dphi = JetMatrix::from_fn(n, m, |_, _| Jet::zero(m));
        for a in 0..n {
            for i in 0..m {
                dphi.set(a, i, phi[a].d(i).at(p)?);
            }
        }
        let target_point = values(&phi);
        let cod = map.codomain.at(&target_point).map_err(|e| match e {
            Error::DegenerateMetric { detail, .. } => Error::DegenerateMetric {
                point: p.to_vec(),
                detail: format!("codomain metric at image {target_point:?}: {detail}"),
            },
            other => other,
        })?;
        check_positive_definite(&cod.g().values(), n, p)?;
        let sub = Substitution::new(&phi).at(p)?;
        let target = cod.tensors.compose(&sub)?;
        let frame = dom.coordinate_frame()?;
        Ok(MapPoint { dom, phi, dphi, target, target_point, frame })
    }

    pub fn point(&self) -> &[f64] {
        self.dom.point()
    }

    pub fn image(&self) -> &[f64] {
        &self.target_point
    }

    /// Orthonormal frame of the domain used for traces.
    pub fn frame(&self) -> &[Vec<Jet>] {
        &self.frame
    }

    /// Codomain length of a section at the point.
    pub fn norm(&self, v: &[Jet]) -> f64 {
        self.target.norm(v)
    }

    pub fn norm_f64(&self, v: &[f64]) -> f64 {
        let j: Vec<Jet> = v.iter().map(|&x| self.dom.constant(x)).collect();
        self.norm(&j)
    }

    pub fn constant(&self, v: f64) -> Jet {
        self.dom.constant(v)
    }

    /// `dφ(w)`.
    pub fn push(&self, w: &[Jet]) -> Vec<Jet> {
        self.dphi.mul_vec(w)
    }

    pub fn differential(&self) -> &JetMatrix {
        &self.dphi
    }

    /// Evaluate codomain-coordinate expressions along `φ`.
    pub fn section_from_exprs(&self, comps: &[ScalarExpr], consts: &Consts) -> Result<Vec<Jet>> {
        comps.iter().map(|c| c.eval_jet(&self.phi, consts)).collect()
    }

    /// `B(u,v)ᵃ = uⁱvʲ(∂ᵢ∂ⱼφᵃ − Γᴹᵏᵢⱼ∂ₖφᵃ + Γᴺᵃ_bc ∂ᵢφᵇ ∂ⱼφᶜ)`.
    pub fn second_fundamental_form(&self, u: &[Jet], v: &[Jet]) -> Result<Vec<Jet>> {
        let hess: Vec<Jet> = (0..self.dphi.rows())
            .map(|a| {
                let mut acc = self.constant(0.0);
                for (i, ui) in u.iter().enumerate() {
                    acc += *ui * self.dom.directional(self.dphi.get(a, i), v)?;
                }
                Ok(acc)
            })
            .collect::<Result<_>>()?;
        let cod = self.target.gamma_contract(&self.push(u), &self.push(v));
        let dom = self.push(&self.dom.tensors.gamma_contract(u, v));
        Ok(hess.iter().zip(cod).zip(dom).map(|((h, c), d)| *h + c - d).collect())
    }

    pub fn tension_with_frame(&self, frame: &[Vec<Jet>]) -> Result<Tension> {
        let mut terms = Vec::with_capacity(frame.len());
        let mut constituents = 0.0;
        for e in frame {
            let b = self.second_fundamental_form(e, e)?;
            constituents += self.norm(&b);
            terms.push(b);
        }
        Ok(Tension { value: sum_vectors(&terms), constituents })
    }

    /// `τ(φ) = Σᵢ B(eᵢ, eᵢ)` over the coordinate Gram–Schmidt frame.
    pub fn tension(&self) -> Result<Tension> {
        self.tension_with_frame(&self.frame)
    }

    /// `(∇̄_w V)ᵃ = w(Vᵃ) + Γᴺᵃ_bc (dφ w)ᵇ Vᶜ`.
    pub fn pullback_connection(&self, v: &[Jet], w: &[Jet]) -> Result<Vec<Jet>> {
        let corr = self.target.gamma_contract(&self.push(w), v);
        v.iter().zip(corr).map(|(va, c)| Ok(self.dom.directional(va, w)? + c)).collect()
    }

    /// Pieces of `Δ̄V` over an arbitrary orthonormal frame.
    pub fn rough_laplacian_terms(&self, v: &[Jet], frame: &[Vec<Jet>]) -> Result<LaplacianTerms> {
        let mut terms = Vec::with_capacity(frame.len());
        let mut constituents = 0.0;
        for e in frame {
            let first = self.pullback_connection(v, e)?;
            let second = self.pullback_connection(&first, e)?;
            let nabla_ee = self.dom.covariant_derivative(e, e)?;
            let along = self.pullback_connection(v, &nabla_ee)?;
            constituents += self.norm(&second) + self.norm(&along);
            terms.push(second.iter().zip(&along).map(|(s, a)| *a - *s).collect());
        }
        Ok(LaplacianTerms { terms, constituents })
    }

    pub fn rough_laplacian(&self, v: &[Jet]) -> Result<Vec<Jet>> {
        Ok(self.rough_laplacian_terms(v, &self.frame)?.total())
    }

    pub fn curvature_term_with_frame(&self, v: &[Jet], frame: &[Vec<Jet>]) -> Vec<Jet> {
        let pushed: Vec<Vec<Jet>> = frame.iter().map(|e| self.push(e)).collect();
        let terms: Vec<Vec<Jet>> = pushed.iter().map(|de| self.target.curvature(v, de, de)).collect();
        sum_vectors(&terms)
    }

    /// `ℛ(V) = Σᵢ Rᴺ(V, dφeᵢ)dφeᵢ`.
    pub fn curvature_term(&self, v: &[Jet]) -> Vec<Jet> {
        self.curvature_term_with_frame(v, &self.frame)
    }

    /// `J(V) = Δ̄V − ℛ(V)`.
    pub fn jacobi(&self, v: &[Jet]) -> Result<Vec<Jet>> {
        Ok(sub_vectors(&self.rough_laplacian(v)?, &self.curvature_term(v)))
    }

    /// `τ₂(φ) = J(τ(φ))`, with its normalization constituents.
    pub fn bitension(&self) -> Result<Bitension> {
        let tension = self.tension()?;
        let lap = self.rough_laplacian_terms(&tension.value, &self.frame)?;
        let curv = self.curvature_term(&tension.value);
        let value = values(&sub_vectors(&lap.total(), &curv));
        let constituents = lap.constituents + self.norm(&curv);
        Ok(Bitension { value, constituents, tension })
    }

    /// `(e(φ), |τ(φ)|²)` with `e = ½|dφ|²`.
    pub fn energy_densities(&self) -> Result<(f64, f64)> {
        let e: f64 = self.frame.iter().map(|f| self.norm(&self.push(f)).powi(2)).sum::<f64>() / 2.0;
        let t = self.tension()?;
        Ok((e, self.norm(&t.value).powi(2)))
    }

    /// `Σ aᵢ vᵢ` helper exposed for frame arithmetic.
    pub fn combine(&self, coeffs: &[Jet], vectors: &[Vec<Jet>]) -> Vec<Jet> {
        combine(coeffs, vectors)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Chart, MetricField};

    fn names(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    fn flat(coords: &[&str], bound: f64) -> Manifold {
        let b = vec![(-bound, bound); coords.len()];
        let chart = Chart::new(coords, &b).unwrap();
        let metric = MetricField::euclidean(&names(coords)).unwrap();
        Manifold::new(chart, metric).unwrap()
    }

    fn sphere2() -> Manifold {
        let chart = Chart::new(&["th", "ph"], &[(0.2, 2.9), (-3.0, 3.0)]).unwrap();
        let metric = MetricField::diagonal(&names(&["th", "ph"]), &["2", "2*sin(th)^2"], &Consts::new()).unwrap();
        Manifold::new(chart, metric).unwrap()
    }

    fn inversion(n: usize) -> SmoothMap {
        let coords: Vec<String> = (1..=n).map(|i| format!("x{i}")).collect();
        let refs: Vec<&str> = coords.iter().map(String::as_str).collect();
        let r2 = coords.iter().map(|c| format!("{c}^2")).collect::<Vec<_>>().join(" + ");
        let comps: Vec<String> = coords.iter().map(|c| format!("{c} / ({r2})")).collect();
        let crefs: Vec<&str> = comps.iter().map(String::as_str).collect();
        SmoothMap::new(flat(&refs, 2.0), flat(&refs, 4.0), &crefs, &Consts::new()).unwrap()
    }

    #[test]
    fn identity_map_is_totally_geodesic() {
        let id = SmoothMap::identity(sphere2()).unwrap();
        let mp = id.at(&[1.0, 0.5]).unwrap();
        let dphi = mp.differential().values();
        assert_eq!(dphi, vec![1.0, 0.0, 0.0, 1.0]);
        let t = mp.tension().unwrap();
        assert!(mp.norm(&t.value) <= 1e-12);
        let (e, t2) = mp.energy_densities().unwrap();
        assert!((e - 1.0).abs() <= 1e-12 && t2 <= 1e-24);
    }

    #[test]
    fn inversion_differential_at_unit_vector() {
        let mp = inversion(4).at(&[1.0, 0.0, 0.0, 0.0]).unwrap();
        let d = mp.differential().values();
        let want = [-1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0];
        for (a, b) in d.iter().zip(want) {
            assert!((a - b).abs() <= 1e-14);
        }
    }

    #[test]
    fn inversion_tension_closed_form_and_biharmonicity_in_four_dimensions() {
        let map = inversion(4);
        let p = [0.3, -0.5, 0.8, 0.1];
        let mp = map.at(&p).unwrap();
        let t = mp.tension().unwrap();
        let r2: f64 = p.iter().map(|x| x * x).sum();
        for (k, x) in p.iter().enumerate() {
            assert!((t.value[k].value() + 4.0 * x / (r2 * r2)).abs() <= 1e-10);
        }
        let tau2 = mp.bitension().unwrap();
        assert!(normalized(mp.norm_f64(&tau2.value), tau2.constituents) <= 1e-8);
    }

    #[test]
    fn inversion_in_three_dimensions_is_not_biharmonic() {
        let mp = inversion(3).at(&[0.4, 0.6, -0.7]).unwrap();
        let tau2 = mp.bitension().unwrap();
        assert!(normalized(mp.norm_f64(&tau2.value), tau2.constituents) > 1e-3);
    }

    #[test]
    fn second_fundamental_form_is_symmetric() {
        let map = inversion(3);
        let mp = map.at(&[0.5, 0.2, -0.9]).unwrap();
        let u: Vec<Jet> = [0.3, -1.0, 0.4].iter().map(|&v| mp.constant(v)).collect();
        let v: Vec<Jet> = [1.1, 0.2, 0.7].iter().map(|&v| mp.constant(v)).collect();
        let a = mp.second_fundamental_form(&u, &v).unwrap();
        let b = mp.second_fundamental_form(&v, &u).unwrap();
        assert!(mp.norm(&sub_vectors(&a, &b)) <= 1e-10);
    }

    #[test]
    fn tension_trace_is_frame_independent() {
        let map = inversion(3);
        let mp = map.at(&[0.5, 0.2, -0.9]).unwrap();
        let base = mp.tension().unwrap();
        let (c, s) = (0.6f64.cos(), 0.6f64.sin());
        let f = mp.frame();
        let rot = vec![
            combine(&[mp.constant(c), mp.constant(s), mp.constant(0.0)], f),
            combine(&[mp.constant(-s), mp.constant(c), mp.constant(0.0)], f),
            f[2].clone(),
        ];
        let other = mp.tension_with_frame(&rot).unwrap();
        assert!(mp.norm(&sub_vectors(&base.value, &other.value)) <= 1e-9);
    }

    #[test]
    fn rough_laplacian_on_functions_matches_laplacian() {
        let s2 = sphere2();
        let line = flat(&["z"], 10.0);
        let map = SmoothMap::new(s2, line, &["sqrt(2)*cos(th)*sin(ph) + sin(th)^2"], &Consts::new()).unwrap();
        let p = [1.1, 0.4];
        let mp = map.at(&p).unwrap();
        let f = mp.phi.clone();
        let lap = mp.rough_laplacian(&f).unwrap();
        let direct = mp.dom.laplacian(&f[0]).unwrap();
        assert!((lap[0].value() - direct.value()).abs() <= 1e-8);
    }

    #[test]
    fn constant_section_on_flat_target_is_parallel() {
        let map = SmoothMap::new(flat(&["x", "y"], 1.0), flat(&["u", "v"], 5.0), &["x + y^2", "x*y"], &Consts::new()).unwrap();
        let mp = map.at(&[0.3, 0.4]).unwrap();
        let v = vec![mp.constant(1.0), mp.constant(-2.0)];
        let w = mp.frame()[0].clone();
        assert!(mp.norm(&mp.pullback_connection(&v, &w).unwrap()) == 0.0);
        assert!(mp.norm(&mp.rough_laplacian(&v).unwrap()) == 0.0);
        assert_eq!(mp.norm(&mp.jacobi(&v).unwrap()), 0.0);
    }

    #[test]
    fn pullback_connection_product_rule() {
        let target = sphere2();
        let map = SmoothMap::new(flat(&["x", "y"], 1.0), target, &["1 + 0.3*x", "y + x*y"], &Consts::new()).unwrap();
        let mp = map.at(&[0.2, 0.5]).unwrap();
        let x = mp.dom.coords().to_vec();
        let v = vec![x[0].sin(), x[1] * x[0]];
        let f = x[0] * x[0] + x[1];
        let fv: Vec<Jet> = v.iter().map(|c| f * *c).collect();
        let w = vec![mp.constant(0.7), mp.constant(-0.2)];
        let lhs = mp.pullback_connection(&fv, &w).unwrap();
        let df = mp.dom.directional(&f, &w).unwrap();
        let nv = mp.pullback_connection(&v, &w).unwrap();
        for k in 0..2 {
            let rhs = df * v[k] + f * nv[k];
            assert!((lhs[k].value() - rhs.value()).abs() <= 1e-9);
        }
    }

    #[test]
    fn curvature_term_of_identity_is_ricci() {
        let id = SmoothMap::identity(sphere2()).unwrap();
        let mp = id.at(&[0.8, 0.1]).unwrap();
        let e1 = mp.frame()[0].clone();
        let r = mp.curvature_term(&e1);
        let ric = mp.dom.ricci_endomorphism().mul_vec(&e1);
        assert!(mp.norm(&sub_vectors(&r, &ric)) <= 1e-12);
        // Ric = ½ Id on S²(√2)
        assert!(mp.norm(&sub_vectors(&r, &scale_vector(&e1, 0.5))) <= 1e-12);
    }

    #[test]
    fn jacobi_of_tension_is_bitension() {
        let map = inversion(3);
        let mp = map.at(&[0.5, 0.2, -0.9]).unwrap();
        let t = mp.tension().unwrap();
        let j = values(&mp.jacobi(&t.value).unwrap());
        let b = mp.bitension().unwrap();
        for (a, c) in j.iter().zip(&b.value) {
            assert!((a - c).abs() <= 1e-12);
        }
    }

    #[test]
    fn harmonic_map_has_zero_bitension() {
        let map = SmoothMap::new(flat(&["x", "y"], 1.0), flat(&["u", "v"], 5.0), &["x^2 - y^2", "2*x*y"], &Consts::new()).unwrap();
        let mp = map.at(&[0.3, -0.6]).unwrap();
        assert!(mp.norm(&mp.tension().unwrap().value) <= 1e-12);
        let b = mp.bitension().unwrap();
        assert!(mp.norm_f64(&b.value) <= 1e-12);
    }
}
