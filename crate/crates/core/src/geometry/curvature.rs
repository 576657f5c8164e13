use super::stencil::{derivatives, EndKind, Parity};
use super::{GeometryError, GridProfile};

/// Arclength and the first two r-derivatives of `psi` at every node.
#[derive(Clone, Debug)]
pub struct RadialDerivatives {
    pub r: Vec<f64>,
    pub psi_r: Vec<f64>,
    pub psi_rr: Vec<f64>,
}

impl RadialDerivatives {
    pub fn of(p: &GridProfile) -> Self {
        let (psi_r, psi_rr) = r_derivatives(p, &p.psi, Parity::Odd);
        RadialDerivatives { r: p.arclength(), psi_r, psi_rr }
    }
}

/// `(f_r, f_rr)` for node values `f` of the given parity about smooth poles.
pub(crate) fn r_derivatives(p: &GridProfile, f: &[f64], parity: Parity) -> (Vec<f64>, Vec<f64>) {
    let h = p.h();
    let (f_x, f_xx) = derivatives(f, h, p.ends, parity);
    let (phi_x, _) = derivatives(&p.phi, h, p.ends, Parity::Even);
    let f_r = f_x.iter().zip(&p.phi).map(|(d, phi)| d / phi).collect();
    let f_rr = (0..f.len()).map(|i| (f_xx[i] - f_x[i] * phi_x[i] / p.phi[i]) / (p.phi[i] * p.phi[i])).collect();
    (f_r, f_rr)
}

/// Curvature of the warped product at every node.
#[derive(Clone, Debug)]
pub struct CurvatureSample {
    pub ric_rr: Vec<f64>,
    pub ric_sph: Vec<f64>,
    pub scalar: Vec<f64>,
    pub k_rad: Vec<f64>,
    pub k_sph: Vec<f64>,
    pub mean_curv: Vec<f64>,
    /// Nodes whose values come from a limit rather than the formulas
    /// (pole nodes), or are undefined (`NaN`, singular ends).
    pub extrapolated: Vec<bool>,
}

impl CurvatureSample {
    /// Largest `|sectional curvature|` over nodes with finite values.
    pub fn max_abs_sectional(&self) -> f64 {
        self.k_rad.iter().chain(&self.k_sph).filter(|v| v.is_finite()).fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min_scalar(&self) -> f64 {
        self.scalar.iter().filter(|v| v.is_finite()).fold(f64::INFINITY, |m, &v| m.min(v))
    }
}

pub fn curvature(p: &GridProfile) -> Result<CurvatureSample, GeometryError> {
    p.validate()?;
    let len = p.len();
    let d = RadialDerivatives::of(p);
    let mut k_rad = vec![f64::NAN; len];
    let mut k_sph = vec![f64::NAN; len];
    let mut mean_curv = vec![f64::NAN; len];
    let mut extrapolated = vec![false; len];

    for i in 0..len {
        if p.psi[i] > 0.0 {
            k_rad[i] = -d.psi_rr[i] / p.psi[i];
            k_sph[i] = (1.0 - d.psi_r[i] * d.psi_r[i]) / (p.psi[i] * p.psi[i]);
            mean_curv[i] = p.n as f64 * d.psi_r[i] / p.psi[i];
        }
    }
    for (end, i, a, b) in [(p.ends[0], 0, 1, 2), (p.ends[1], len - 1, len - 2, len - 3)] {
        match end {
            EndKind::SmoothPole => {
                // k_rad is even in the distance s to the pole: K(s) = K0 + c s^2
                let s1 = (d.r[a] - d.r[i]).abs();
                let s2 = (d.r[b] - d.r[i]).abs();
                let k0 = (s2 * s2 * k_rad[a] - s1 * s1 * k_rad[b]) / (s2 * s2 - s1 * s1);
                k_rad[i] = k0;
                k_sph[i] = k0;
                extrapolated[i] = true;
            }
            EndKind::Singular => extrapolated[i] = true,
            EndKind::Open => {}
        }
    }

    let n = p.n as f64;
    let ric_rr = k_rad.iter().map(|k| n * k).collect();
    let ric_sph = k_rad.iter().zip(&k_sph).map(|(kr, ks)| kr + (n - 1.0) * ks).collect();
    let scalar = k_rad.iter().zip(&k_sph).map(|(kr, ks)| 2.0 * n * kr + n * (n - 1.0) * ks).collect();
    Ok(CurvatureSample { ric_rr, ric_sph, scalar, k_rad, k_sph, mean_curv, extrapolated })
}

/// `Delta f = f_rr + n (psi_r / psi) f_r` for a rotationally symmetric `f`.
pub fn radial_laplacian(p: &GridProfile, f: &[f64]) -> Result<Vec<f64>, GeometryError> {
    p.validate()?;
    if f.len() != p.len() {
        return Err(GeometryError::MalformedGrid(format!(
            "function has {} values on a {}-node grid",
            f.len(),
            p.len()
        )));
    }
    let d = RadialDerivatives::of(p);
    let (f_r, f_rr) = r_derivatives(p, f, Parity::Even);
    let n = p.n as f64;
    let last = p.len() - 1;
    Ok((0..p.len())
        .map(|i| {
            let end = match i {
                0 => Some(p.ends[0]),
                j if j == last => Some(p.ends[1]),
                _ => None,
            };
            match end {
                Some(EndKind::SmoothPole) => (n + 1.0) * f_rr[i],
                Some(EndKind::Singular) => 0.0,
                _ => f_rr[i] + n * d.psi_r[i] / p.psi[i] * f_r[i],
            }
        })
        .collect())
}
