//! Confining potentials and the square-of-polynomial class `V = v^2 / 2q`.
//!
//! For that class everything is explicit: the spectrum is the preimage
//! `{v^2 <= 4g}`, the two equilibrium densities are elementary functions of
//! `v` and `v'`, and the quasimomentum is the boundary trace of the
//! Marchenko-Ostrovskii comb map `u = cos(theta)` with `u = v / (2 sqrt g)`.

use crate::error::{Error, Result};
use crate::poly;
use crate::quad;

const EDGE_TOL: f64 = 1e-14;
const SIMPLICITY_TOL: f64 = 1e-9;

/// Ordered disjoint closed intervals, stored as the flat edge list
/// `a_1 < b_1 < ... < a_q < b_q`.
#[derive(Debug, Clone, PartialEq)]
pub struct BandSet {
    edges: Vec<f64>,
}

impl BandSet {
    pub fn new(edges: Vec<f64>) -> Result<Self> {
        const OP: &str = "potential.band_set";
        if edges.is_empty() || edges.len() % 2 != 0 {
            return Err(Error::precondition(OP, "edge list must have even length"));
        }
        if !edges.iter().all(|e| e.is_finite()) {
            return Err(Error::precondition(OP, "edges must be finite"));
        }
        if edges.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::precondition(OP, "edges must be strictly increasing"));
        }
        Ok(BandSet { edges })
    }

    /// Number of bands.
    pub fn q(&self) -> usize {
        self.edges.len() / 2
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    /// The l-th band (0-based) as (a, b).
    pub fn band(&self, l: usize) -> (f64, f64) {
        (self.edges[2 * l], self.edges[2 * l + 1])
    }

    /// The l-th finite gap (0-based), between bands l and l+1.
    pub fn gap(&self, l: usize) -> (f64, f64) {
        (self.edges[2 * l + 1], self.edges[2 * l + 2])
    }

    /// Index of the band containing `x` (closed bands), if any. Edges carry
    /// a relative tolerance so values computed by root-finding stay inside.
    pub fn band_index(&self, x: f64) -> Option<usize> {
        let tol = 1e-12 * self.edges.iter().fold(1.0f64, |a, &e| a.max(e.abs()));
        (0..self.q()).find(|&l| {
            let (a, b) = self.band(l);
            x >= a - tol && x <= b + tol
        })
    }

    pub fn contains(&self, x: f64) -> bool {
        self.band_index(x).is_some()
    }

    pub fn min_edge(&self) -> f64 {
        self.edges[0]
    }

    pub fn max_edge(&self) -> f64 {
        *self.edges.last().unwrap()
    }

    pub fn total_length(&self) -> f64 {
        (0..self.q()).map(|l| {
            let (a, b) = self.band(l);
            b - a
        }).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PotentialKind {
    /// `V = v^2 / 2q` with `v` a degree-q polynomial, leading coefficient +-1.
    SquareOfPolynomial,
    /// A general confining polynomial of even degree.
    GeneralPolynomial,
}

/// A confining potential with amplitude `g`: the effective field is `V / g`.
#[derive(Debug, Clone)]
pub struct Potential {
    kind: PotentialKind,
    /// Coefficients of `v` (square case) or of `V` itself (general case).
    coeffs: Vec<f64>,
    g: f64,
}

/// Boundary trace of the comb map at one point of the real axis.
#[derive(Debug, Clone, Copy)]
pub struct CombPoint {
    pub lambda: f64,
    /// Band index when `lambda` is in the spectrum.
    pub band: Option<usize>,
    /// Real part of theta on the closed spectrum; NaN in gaps.
    pub theta_plus: f64,
    /// Imaginary part of theta: 0 on bands, arccosh|u| on gaps.
    pub kappa: f64,
}

impl Potential {
    /// Square case. `v_coeffs` ascending, degree q >= 1, leading coefficient
    /// +-1; requires all roots of `v^2 - 4g` to be real and simple.
    pub fn square(v_coeffs: Vec<f64>, g: f64) -> Result<Self> {
        const OP: &str = "potential.square";
        if !(g > 0.0) || !g.is_finite() {
            return Err(Error::precondition(OP, "amplitude g must be positive"));
        }
        let d = poly::degree(&v_coeffs);
        if d < 1 {
            return Err(Error::precondition(OP, "v must have degree >= 1"));
        }
        if (v_coeffs[d].abs() - 1.0).abs() > 1e-12 {
            return Err(Error::precondition(
                OP,
                "v must have leading coefficient +1 or -1",
            ));
        }
        let pot = Potential {
            kind: PotentialKind::SquareOfPolynomial,
            coeffs: v_coeffs[..=d].to_vec(),
            g,
        };
        pot.bands()?; // validates simplicity
        Ok(pot)
    }

    /// General polynomial potential: even degree >= 2, positive leading
    /// coefficient, so that `V` grows faster than `log(1 + x^2)`.
    pub fn poly(v_coeffs: Vec<f64>, g: f64) -> Result<Self> {
        const OP: &str = "potential.poly";
        if !(g > 0.0) || !g.is_finite() {
            return Err(Error::precondition(OP, "amplitude g must be positive"));
        }
        let d = poly::degree(&v_coeffs);
        if d < 2 || d % 2 != 0 || v_coeffs[d] <= 0.0 {
            return Err(Error::precondition(
                OP,
                "V must have even degree >= 2 with positive leading coefficient",
            ));
        }
        Ok(Potential {
            kind: PotentialKind::GeneralPolynomial,
            coeffs: v_coeffs[..=d].to_vec(),
            g,
        })
    }

    /// Same potential with a different amplitude.
    pub fn with_amplitude(&self, g: f64) -> Result<Self> {
        match self.kind {
            PotentialKind::SquareOfPolynomial => Potential::square(self.coeffs.clone(), g),
            PotentialKind::GeneralPolynomial => Potential::poly(self.coeffs.clone(), g),
        }
    }

    pub fn kind(&self) -> PotentialKind {
        self.kind
    }

    pub fn amplitude(&self) -> f64 {
        self.g
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn is_square(&self) -> bool {
        self.kind == PotentialKind::SquareOfPolynomial
    }

    /// Degree of `v` in the square case (the band count of the spectrum).
    pub fn q(&self) -> usize {
        match self.kind {
            PotentialKind::SquareOfPolynomial => poly::degree(&self.coeffs),
            PotentialKind::GeneralPolynomial => 1,
        }
    }

    /// The bare potential `V(x)` (amplitude not applied).
    pub fn v_potential(&self, x: f64) -> f64 {
        match self.kind {
            PotentialKind::SquareOfPolynomial => {
                let v = poly::eval(&self.coeffs, x);
                v * v / (2.0 * self.q() as f64)
            }
            PotentialKind::GeneralPolynomial => poly::eval(&self.coeffs, x),
        }
    }

    /// The effective confining field `V(x) / g`.
    pub fn field(&self, x: f64) -> f64 {
        self.v_potential(x) / self.g
    }

    /// Derivative of the effective field.
    pub fn field_prime(&self, x: f64) -> f64 {
        match self.kind {
            PotentialKind::SquareOfPolynomial => {
                let v = poly::eval(&self.coeffs, x);
                let vp = poly::eval(&poly::derivative(&self.coeffs), x);
                v * vp / (self.q() as f64 * self.g)
            }
            PotentialKind::GeneralPolynomial => {
                poly::eval(&poly::derivative(&self.coeffs), x) / self.g
            }
        }
    }

    fn require_square(&self, op: &'static str) -> Result<()> {
        if self.is_square() {
            Ok(())
        } else {
            Err(Error::precondition(op, "requires the square-case potential"))
        }
    }

    /// `u = v / (2 sqrt g)`, the comb variable.
    pub fn u_value(&self, x: f64) -> f64 {
        poly::eval(&self.coeffs, x) / (2.0 * self.g.sqrt())
    }

    /// Band set `{v^2 <= 4g}`. Edges are the 2q real roots of `v^2 - 4g`,
    /// i.e. the roots of the two factors `v -+ 2 sqrt g`.
    pub fn bands(&self) -> Result<BandSet> {
        const OP: &str = "potential.bands_from_polynomial";
        self.require_square(OP)?;
        let q = self.q();
        let two_sqrt_g = 2.0 * self.g.sqrt();
        let mut edges = Vec::with_capacity(2 * q);
        let mut min_flat = f64::INFINITY;
        for sign in [-1.0, 1.0] {
            let mut shifted = self.coeffs.clone();
            shifted[0] += sign * two_sqrt_g;
            let (roots, flat) = poly::real_roots_with_flatness(&shifted);
            if roots.len() != q {
                return Err(Error::NotRegular {
                    op: OP,
                    msg: format!(
                        "v {} 2 sqrt(g) has {} real roots, expected {}",
                        if sign < 0.0 { "+" } else { "-" },
                        roots.len(),
                        q
                    ),
                });
            }
            min_flat = min_flat.min(flat / two_sqrt_g);
            edges.extend(roots);
        }
        edges.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let scale = edges.iter().fold(1.0f64, |a, &e| a.max(e.abs()));
        for w in edges.windows(2) {
            if (w[1] - w[0]).abs() < SIMPLICITY_TOL * scale {
                return Err(Error::NotRegular {
                    op: OP,
                    msg: format!("double root of v^2 - 4g near {}", w[0]),
                });
            }
        }
        if min_flat < SIMPLICITY_TOL {
            return Err(Error::NotRegular {
                op: OP,
                msg: "v^2 - 4g has a near-tangency (complex root pair close to the axis)".into(),
            });
        }
        BandSet::new(edges)
    }

    /// Density of the external-field equilibrium measure:
    /// `rho_g = |v'| / (2 pi g q) * |v^2 - 4g|^{1/2}` on the spectrum, 0 off.
    pub fn density_n(&self, x: f64) -> Result<f64> {
        const OP: &str = "potential.density_N";
        self.require_square(OP)?;
        let q = self.q() as f64;
        let v = poly::eval(&self.coeffs, x);
        let w = v * v - 4.0 * self.g;
        if w >= 0.0 {
            return Ok(0.0);
        }
        let vp = poly::eval(&poly::derivative(&self.coeffs), x);
        Ok(vp.abs() * (-w).sqrt() / (2.0 * std::f64::consts::PI * self.g * q))
    }

    /// Density of the fixed-support equilibrium measure:
    /// `d_g = |v'| / (pi q) * |v^2 - 4g|^{-1/2}` inside the bands.
    pub fn density_nu(&self, x: f64) -> Result<f64> {
        const OP: &str = "potential.density_nu";
        self.require_square(OP)?;
        let q = self.q() as f64;
        let v = poly::eval(&self.coeffs, x);
        let w = v * v - 4.0 * self.g;
        if w.abs() < EDGE_TOL {
            return Err(Error::EdgeSingularity { op: OP, value: w.abs() });
        }
        if w > 0.0 {
            return Ok(0.0);
        }
        let vp = poly::eval(&poly::derivative(&self.coeffs), x);
        Ok(vp.abs() / (std::f64::consts::PI * q * (-w).sqrt()))
    }

    /// Boundary value `theta_+(lambda)` of the comb map on the spectrum.
    ///
    /// On band l (1-based) it increases from `(l - 1 - q) pi` to `(l - q) pi`;
    /// the branch of arccos is resolved per band, oriented by the sign of `u`
    /// at the left band edge.
    pub fn comb_theta_plus(&self, x: f64) -> Result<f64> {
        const OP: &str = "potential.comb_theta_plus";
        self.require_square(OP)?;
        let bands = self.bands()?;
        let l = bands
            .band_index(x)
            .ok_or(Error::OutsideSpectrum { op: OP, lambda: x })?;
        Ok(self.theta_plus_in_band(&bands, l, x))
    }

    fn theta_plus_in_band(&self, bands: &BandSet, l: usize, x: f64) -> f64 {
        let q = self.q();
        let (a, _) = bands.band(l);
        // u(a) = +-1 exactly; its sign orients the arccos branch so that
        // theta_+ increases across the band.
        let s = self.u_value(a).signum();
        let u = (s * self.u_value(x)).clamp(-1.0, 1.0);
        let phi = u.acos();
        (l as f64 - q as f64) * std::f64::consts::PI + phi
    }

    /// Full comb boundary data at `x`: theta_+ on bands, kappa on gaps.
    pub fn comb_point(&self, x: f64) -> Result<CombPoint> {
        const OP: &str = "potential.comb_point";
        self.require_square(OP)?;
        let bands = self.bands()?;
        match bands.band_index(x) {
            Some(l) => Ok(CombPoint {
                lambda: x,
                band: Some(l),
                theta_plus: self.theta_plus_in_band(&bands, l, x),
                kappa: 0.0,
            }),
            None => {
                let u = self.u_value(x).abs();
                Ok(CombPoint {
                    lambda: x,
                    band: None,
                    theta_plus: f64::NAN,
                    kappa: u.max(1.0).acosh(),
                })
            }
        }
    }

    /// Tail counting functions `(N_g(lambda), nu_g(lambda))`, the masses of
    /// `(lambda, inf)` under the two equilibrium measures. Errors off the
    /// spectrum; see [`Potential::tail_functions`] for the total extension.
    pub fn counting_functions(&self, x: f64) -> Result<(f64, f64)> {
        const OP: &str = "potential.counting_functions";
        self.require_square(OP)?;
        let bands = self.bands()?;
        match bands.band_index(x) {
            Some(l) => Ok(self.tails_in_band(&bands, l, x)),
            None => Err(Error::OutsideSpectrum { op: OP, lambda: x }),
        }
    }

    fn tails_in_band(&self, bands: &BandSet, l: usize, x: f64) -> (f64, f64) {
        let q = self.q() as f64;
        let theta = self.theta_plus_in_band(bands, l, x);
        let pi = std::f64::consts::PI;
        // theta_+ <= 0 with theta_+(b_q) = 0, so the minus sign makes both
        // tails decrease from 1 to 0 across the spectrum.
        let big_n = -(theta - 0.5 * (2.0 * theta).sin()) / (pi * q);
        let nu = -theta / (pi * q);
        (big_n, nu)
    }

    /// Tail functions extended to all of R: constant `(q - l) / q` across gap
    /// l, 1 below the spectrum, 0 above.
    pub fn tail_functions(&self, x: f64) -> Result<(f64, f64)> {
        const OP: &str = "potential.tail_functions";
        self.require_square(OP)?;
        let bands = self.bands()?;
        if let Some(l) = bands.band_index(x) {
            return Ok(self.tails_in_band(&bands, l, x));
        }
        if x < bands.min_edge() {
            return Ok((1.0, 1.0));
        }
        if x > bands.max_edge() {
            return Ok((0.0, 0.0));
        }
        // x is in finite gap l (0-based): both tails equal (q - l - 1) / q.
        let q = self.q();
        let l = (0..q - 1)
            .find(|&l| {
                let (b, a) = bands.gap(l);
                x > b && x < a
            })
            .expect("x must be in a finite gap here");
        let v = (q - l - 1) as f64 / q as f64;
        Ok((v, v))
    }

    /// The effective-potential excess `Phi(lambda) + (1/q) log(g/e)`:
    /// identically 0 on the spectrum and `(2/q)(sinh(2 kappa)/2 - kappa) > 0`
    /// in the gaps, with `kappa = arccosh|u|`.
    pub fn phi_gap_value(&self, x: f64) -> Result<f64> {
        const OP: &str = "potential.phi_gap_value";
        self.require_square(OP)?;
        let q = self.q() as f64;
        let u = self.u_value(x).abs();
        if u <= 1.0 {
            return Ok(0.0);
        }
        let kappa = u.acosh();
        Ok((2.0 / q) * (0.5 * (2.0 * kappa).sinh() - kappa))
    }

    /// Closed-form Lagrange constant of the external-field problem for the
    /// square case: `l_V = (1/q) log(g/e)`.
    pub fn lagrange_constant(&self) -> Result<f64> {
        const OP: &str = "potential.lagrange_constant";
        self.require_square(OP)?;
        let q = self.q() as f64;
        Ok((self.g.ln() - 1.0) / q)
    }

    /// Closed-form Robin constant of the fixed-support problem on the
    /// spectrum: `l_sigma = (1/q) log g`, i.e. capacity `g^{1/2q}`.
    pub fn robin_constant(&self) -> Result<f64> {
        const OP: &str = "potential.robin_constant";
        self.require_square(OP)?;
        Ok(self.g.ln() / self.q() as f64)
    }

    /// Integral of `f` against the band-count density `d_g` (unit measure),
    /// one cosine-substituted panel per band.
    pub fn integrate_nu(&self, points: usize, f: impl Fn(f64) -> f64) -> Result<f64> {
        const OP: &str = "potential.integrate_nu";
        self.require_square(OP)?;
        let bands = self.bands()?;
        let mut total = 0.0;
        for l in 0..bands.q() {
            let (a, b) = bands.band(l);
            // d_g = h(x) / sqrt((x-a)(b-x)) with h smooth on the band.
            total += quad::band_singular_integral(a, b, points, |x| {
                let h = self.nu_smooth_part(&bands, l, x);
                h * f(x)
            });
        }
        Ok(total)
    }

    /// Integral of `f` against the external-field density `rho_g`.
    pub fn integrate_n(&self, points: usize, f: impl Fn(f64) -> f64) -> Result<f64> {
        const OP: &str = "potential.integrate_n";
        self.require_square(OP)?;
        let bands = self.bands()?;
        let mut total = 0.0;
        for l in 0..bands.q() {
            let (a, b) = bands.band(l);
            total += quad::band_smooth_integral(a, b, points, |x| {
                self.density_n(x).unwrap_or(0.0) * f(x)
            });
        }
        Ok(total)
    }

    /// The smooth factor h with `d_g(x) = h(x) / sqrt((x - a_l)(b_l - x))`.
    pub(crate) fn nu_smooth_part(&self, bands: &BandSet, l: usize, x: f64) -> f64 {
        let q = self.q() as f64;
        let vp = poly::eval(&poly::derivative(&self.coeffs), x).abs();
        // |v^2 - 4g| = (x - a_l)(b_l - x) * rest(x), rest smooth positive.
        let mut rest = 1.0;
        for m in 0..bands.q() {
            let (a, b) = bands.band(m);
            if m == l {
                continue;
            }
            rest *= ((x - a) * (x - b)).abs();
        }
        // The leading coefficient of v^2 - 4g is 1 (v is +-monic).
        vp / (std::f64::consts::PI * q * rest.sqrt())
    }
}
