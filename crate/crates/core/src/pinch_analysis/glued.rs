//! `W1 = L + int F + int G` for diffusions supported in different caps.

use crate::geometry::{CapAttachment, GluedSpace};
use crate::heat::GluedDensity;
use crate::transport::{pushforward_glued, wasserstein_p, LineMeasure};

use super::cdf::{integral_of_cdf, oriented_line};
use super::{Origin, PinchError};

const IDENTITY_TOL: f64 = 1e-6;

#[derive(Clone, Debug)]
pub struct W1Decomposition {
    pub l: f64,
    /// `int_0^{diam M1} F dr`, `F` measured from the far pole of `M1`.
    pub int_f: f64,
    /// `int_0^{diam M2} G dr`, `G` measured from the far pole of `M2`.
    pub int_g: f64,
    /// `W1` of the two pushforwards on the glued line coordinate.
    pub w1_direct: f64,
    pub diam: [f64; 2],
    pub f: LineMeasure,
    pub g: LineMeasure,
}

impl W1Decomposition {
    pub fn decomposed(&self) -> f64 {
        self.l + self.int_f + self.int_g
    }
}

/// Origin at the smooth (far) pole of a cap.
pub(crate) fn far_pole(a: CapAttachment) -> Origin {
    match a {
        CapAttachment::Upper => Origin::South,
        CapAttachment::Lower => Origin::North,
    }
}

fn check_support(d: &GluedDensity, g: &GluedSpace, own: usize) -> Result<(), PinchError> {
    let caps = [&d.cap1, &d.cap2];
    for (k, cap) in caps.iter().enumerate() {
        if cap.len() != g.cap(k).len() {
            return Err(PinchError::InvalidInput(format!(
                "{} values on the {}-node cap {}",
                cap.len(),
                g.cap(k).len(),
                k + 1
            )));
        }
    }
    let other = caps[1 - own];
    if let Some(v) = other.iter().chain(&d.interval).find(|v| **v != 0.0) {
        return Err(PinchError::SupportViolation(format!(
            "diffusion of cap {} has value {v} outside its cap",
            own + 1
        )));
    }
    Ok(())
}

/// Decomposes `W1(nu1, nu2)` with `supp nu1` in `M1` and `supp nu2` in `M2`
/// and checks it against the direct quantile-formula value.
pub fn w1_glued_decomposition(
    g: &GluedSpace,
    nu1: &GluedDensity,
    nu2: &GluedDensity,
) -> Result<W1Decomposition, PinchError> {
    check_support(nu1, g, 0)?;
    check_support(nu2, g, 1)?;
    let (f, d1) = oriented_line(&g.cap1, &nu1.cap1, far_pole(g.attachments[0]))?;
    let (gm, d2) = oriented_line(&g.cap2, &nu2.cap2, far_pole(g.attachments[1]))?;
    let int_f = integral_of_cdf(&f, d1)?;
    let int_g = integral_of_cdf(&gm, d2)?;
    let a = pushforward_glued(g, [&nu1.cap1, &nu1.cap2])?.measure;
    let b = pushforward_glued(g, [&nu2.cap1, &nu2.cap2])?.measure;
    let w1_direct = wasserstein_p(&a, &b, 1)?;
    let out = W1Decomposition { l: g.l, int_f, int_g, w1_direct, diam: [d1, d2], f, g: gm };
    if (out.decomposed() - w1_direct).abs() > IDENTITY_TOL {
        return Err(PinchError::Decomposition { decomposed: out.decomposed(), direct: w1_direct });
    }
    Ok(out)
}
