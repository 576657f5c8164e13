//! Probability measures on the line: atoms plus a continuous piecewise-linear
//! density, with exact CDF and quantile evaluation.

use super::TransportError;

const MASS_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct LineMeasure {
    atoms: Vec<(f64, f64)>,
    grid: Vec<f64>,
    density: Vec<f64>,
    /// Sorted union of atom positions and grid nodes.
    knots: Vec<f64>,
    jump: Vec<f64>,
    /// Density at the two ends of each interval `(knots[k], knots[k + 1])`.
    dens: Vec<(f64, f64)>,
    /// `F` just left of each knot and at each knot.
    f_left: Vec<f64>,
    f_at: Vec<f64>,
}

fn interp(grid: &[f64], density: &[f64], x: f64) -> f64 {
    let k = grid.partition_point(|&g| g <= x).clamp(1, grid.len() - 1);
    let (x0, x1) = (grid[k - 1], grid[k]);
    let w = ((x - x0) / (x1 - x0)).clamp(0.0, 1.0);
    (1.0 - w) * density[k - 1] + w * density[k]
}

impl LineMeasure {
    /// Unit-mass measure from atoms `(position, mass)`.
    pub fn from_atoms(atoms: Vec<(f64, f64)>) -> Result<Self, TransportError> {
        Self::new(atoms, Vec::new(), Vec::new())
    }

    /// Unit-mass measure with density values at `grid`, linear in between.
    pub fn from_density(grid: Vec<f64>, density: Vec<f64>) -> Result<Self, TransportError> {
        Self::new(Vec::new(), grid, density)
    }

    /// Atoms plus a piecewise-linear density; total mass must be 1.
    pub fn new(atoms: Vec<(f64, f64)>, grid: Vec<f64>, density: Vec<f64>) -> Result<Self, TransportError> {
        let m = Self::build(atoms, grid, density)?;
        let total = m.total_mass();
        if (total - 1.0).abs() > MASS_TOL {
            return Err(TransportError::InvalidMeasure(format!("total mass {total} is not 1")));
        }
        Ok(m)
    }

    /// Like [`LineMeasure::new`] but rescales to unit mass.
    pub fn normalized(atoms: Vec<(f64, f64)>, grid: Vec<f64>, density: Vec<f64>) -> Result<Self, TransportError> {
        let m = Self::build(atoms, grid, density)?;
        let total = m.total_mass();
        if !(total > 0.0 && total.is_finite()) {
            return Err(TransportError::InvalidMeasure(format!("total mass {total} cannot be normalized")));
        }
        let atoms = m.atoms.iter().map(|&(x, w)| (x, w / total)).collect();
        let density = m.density.iter().map(|d| d / total).collect();
        Self::build(atoms, m.grid, density)
    }

    fn build(mut atoms: Vec<(f64, f64)>, grid: Vec<f64>, density: Vec<f64>) -> Result<Self, TransportError> {
        if atoms.iter().any(|&(x, w)| !x.is_finite() || !(w >= 0.0 && w.is_finite())) {
            return Err(TransportError::InvalidMeasure("atoms need finite positions and nonnegative masses".into()));
        }
        if grid.len() != density.len() || grid.len() == 1 {
            return Err(TransportError::InvalidMeasure(format!(
                "density needs >= 2 grid nodes with one value each (got {} and {})",
                grid.len(),
                density.len()
            )));
        }
        if grid.windows(2).any(|w| !(w[1] > w[0])) || grid.iter().any(|x| !x.is_finite()) {
            return Err(TransportError::InvalidMeasure("density grid must be finite and strictly increasing".into()));
        }
        if density.iter().any(|d| !(*d >= 0.0 && d.is_finite())) {
            return Err(TransportError::InvalidMeasure("density values must be finite and nonnegative".into()));
        }
        atoms.retain(|a| a.1 > 0.0);
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(atoms.len());
        for (x, w) in atoms {
            match merged.last_mut() {
                Some(last) if last.0 == x => last.1 += w,
                _ => merged.push((x, w)),
            }
        }
        let atoms = merged;

        let mut knots: Vec<f64> = atoms.iter().map(|a| a.0).chain(grid.iter().copied()).collect();
        knots.sort_by(f64::total_cmp);
        knots.dedup();
        let jump: Vec<f64> = knots
            .iter()
            .map(|x| atoms.binary_search_by(|a| a.0.total_cmp(x)).map(|i| atoms[i].1).unwrap_or(0.0))
            .collect();
        let dens: Vec<(f64, f64)> = knots
            .windows(2)
            .map(|w| {
                let inside = !grid.is_empty() && w[0] >= grid[0] && w[1] <= grid[grid.len() - 1];
                if inside {
                    (interp(&grid, &density, w[0]), interp(&grid, &density, w[1]))
                } else {
                    (0.0, 0.0)
                }
            })
            .collect();
        let mut f_left = vec![0.0; knots.len()];
        let mut f_at = vec![0.0; knots.len()];
        let mut acc = 0.0;
        for k in 0..knots.len() {
            f_left[k] = acc;
            acc += jump[k];
            f_at[k] = acc;
            if k + 1 < knots.len() {
                acc += 0.5 * (dens[k].0 + dens[k].1) * (knots[k + 1] - knots[k]);
            }
        }
        Ok(LineMeasure { atoms, grid, density, knots, jump, dens, f_left, f_at })
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn density_values(&self) -> &[f64] {
        &self.density
    }

    pub fn total_mass(&self) -> f64 {
        self.f_at.last().copied().unwrap_or(0.0)
    }

    /// Smallest interval containing the support.
    pub fn support(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for (k, &x) in self.knots.iter().enumerate() {
            let charged = self.jump[k] > 0.0
                || (k > 0 && self.dens[k - 1].1 > 0.0)
                || (k + 1 < self.knots.len() && self.dens[k].0 > 0.0);
            if charged {
                lo = lo.min(x);
                hi = hi.max(x);
            }
        }
        (lo, hi)
    }

    /// The same measure translated by `c`.
    pub fn shifted(&self, c: f64) -> Self {
        let atoms = self.atoms.iter().map(|&(x, w)| (x + c, w)).collect();
        let grid = self.grid.iter().map(|x| x + c).collect();
        Self::build(atoms, grid, self.density.clone()).expect("translation keeps a valid measure")
    }

    /// Index of the last knot `<= x`, if any.
    fn knot_at_or_before(&self, x: f64) -> Option<usize> {
        self.knots.partition_point(|&k| k <= x).checked_sub(1)
    }

    /// `F(x) = mu((-inf, x])`.
    pub fn cdf(&self, x: f64) -> f64 {
        match self.knot_at_or_before(x) {
            None => 0.0,
            Some(k) if k + 1 == self.knots.len() => self.f_at[k],
            Some(k) => {
                let s = x - self.knots[k];
                let (d0, d1) = self.dens[k];
                let slope = (d1 - d0) / (self.knots[k + 1] - self.knots[k]);
                (self.f_at[k] + s * (d0 + 0.5 * slope * s)).min(self.f_left[k + 1])
            }
        }
    }

    /// `(F(x), density just right of x, its slope)` for the piece containing `x`.
    pub(crate) fn local_poly(&self, x: f64) -> (f64, f64, f64) {
        match self.knot_at_or_before(x) {
            None => (0.0, 0.0, 0.0),
            Some(k) if k + 1 == self.knots.len() => (self.f_at[k], 0.0, 0.0),
            Some(k) => {
                let s = x - self.knots[k];
                let (d0, d1) = self.dens[k];
                let slope = (d1 - d0) / (self.knots[k + 1] - self.knots[k]);
                (self.cdf(x), d0 + slope * s, slope)
            }
        }
    }

    /// `F^{-1}(t) = inf { x : F(x) > t }`; `t >= 1` gives the top of the
    /// support.
    pub fn quantile(&self, t: f64) -> f64 {
        if t >= 1.0 {
            return self.support().1;
        }
        for k in 0..self.knots.len() {
            if self.f_at[k] > t {
                return self.knots[k];
            }
            if k + 1 < self.knots.len() && self.f_left[k + 1] > t {
                let delta = t - self.f_at[k];
                let (d0, d1) = self.dens[k];
                let h = self.knots[k + 1] - self.knots[k];
                let slope = (d1 - d0) / h;
                // root of d0 s + slope s^2 / 2 = delta, in the stable form
                let disc = (d0 * d0 + 2.0 * slope * delta).max(0.0);
                let s = if delta <= 0.0 { 0.0 } else { 2.0 * delta / (d0 + disc.sqrt()) };
                return self.knots[k] + s.clamp(0.0, h);
            }
        }
        self.support().1
    }

    /// Values of `F` at which the quantile function changes form.
    pub(crate) fn t_breaks(&self) -> impl Iterator<Item = f64> + '_ {
        self.f_left.iter().chain(&self.f_at).copied()
    }

    /// Knots of the CDF.
    pub(crate) fn knots(&self) -> &[f64] {
        &self.knots
    }
}

/// `F(x)` of `mu`.
pub fn cdf(mu: &LineMeasure, x: f64) -> f64 {
    mu.cdf(x)
}

/// `F^{-1}(t)` of `mu`.
pub fn quantile(mu: &LineMeasure, t: f64) -> f64 {
    mu.quantile(t)
}
