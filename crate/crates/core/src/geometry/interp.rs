//! C² quintic Hermite interpolation on a nonuniform knot sequence.

/// Piecewise quintic through nodal values, slopes and second derivatives.
#[derive(Clone, Debug)]
pub struct QuinticHermite {
    knots: Vec<f64>,
    y: Vec<f64>,
    d1: Vec<f64>,
    d2: Vec<f64>,
}

/// Segment index and basis weights for one evaluation point; the weights apply
/// to `[y_j, d1_j, d2_j, y_{j+1}, d1_{j+1}, d2_{j+1}]`.
#[derive(Clone, Copy, Debug)]
pub struct HermiteWeights {
    pub segment: usize,
    pub w: [f64; 6],
}

impl HermiteWeights {
    pub fn apply(&self, y: &[f64], d1: &[f64], d2: &[f64]) -> f64 {
        let j = self.segment;
        self.w[0] * y[j]
            + self.w[1] * d1[j]
            + self.w[2] * d2[j]
            + self.w[3] * y[j + 1]
            + self.w[4] * d1[j + 1]
            + self.w[5] * d2[j + 1]
    }
}

fn locate(knots: &[f64], r: f64) -> usize {
    let k = knots.partition_point(|&v| v <= r);
    k.saturating_sub(1).min(knots.len() - 2)
}

/// Basis values and their first two t-derivatives at `t`.
fn basis(t: f64) -> ([f64; 6], [f64; 6], [f64; 6]) {
    let t2 = t * t;
    let t3 = t2 * t;
    let t4 = t3 * t;
    let t5 = t4 * t;
    let v = [
        1.0 - 10.0 * t3 + 15.0 * t4 - 6.0 * t5,
        t - 6.0 * t3 + 8.0 * t4 - 3.0 * t5,
        0.5 * t2 - 1.5 * t3 + 1.5 * t4 - 0.5 * t5,
        10.0 * t3 - 15.0 * t4 + 6.0 * t5,
        -4.0 * t3 + 7.0 * t4 - 3.0 * t5,
        0.5 * t3 - t4 + 0.5 * t5,
    ];
    let d = [
        -30.0 * t2 + 60.0 * t3 - 30.0 * t4,
        1.0 - 18.0 * t2 + 32.0 * t3 - 15.0 * t4,
        t - 4.5 * t2 + 6.0 * t3 - 2.5 * t4,
        30.0 * t2 - 60.0 * t3 + 30.0 * t4,
        -12.0 * t2 + 28.0 * t3 - 15.0 * t4,
        1.5 * t2 - 4.0 * t3 + 2.5 * t4,
    ];
    let dd = [
        -60.0 * t + 180.0 * t2 - 120.0 * t3,
        -36.0 * t + 96.0 * t2 - 60.0 * t3,
        1.0 - 9.0 * t + 18.0 * t2 - 10.0 * t3,
        60.0 * t - 180.0 * t2 + 120.0 * t3,
        -24.0 * t + 84.0 * t2 - 60.0 * t3,
        3.0 * t - 12.0 * t2 + 10.0 * t3,
    ];
    (v, d, dd)
}

impl QuinticHermite {
    pub fn new(knots: Vec<f64>, y: Vec<f64>, d1: Vec<f64>, d2: Vec<f64>) -> Self {
        assert!(knots.len() >= 2);
        assert!(knots.len() == y.len() && y.len() == d1.len() && d1.len() == d2.len());
        Self { knots, y, d1, d2 }
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    /// Weights of the value at `r` with respect to the nodal data.
    pub fn weights(knots: &[f64], r: f64) -> HermiteWeights {
        let j = locate(knots, r);
        let h = knots[j + 1] - knots[j];
        let t = (r - knots[j]) / h;
        let (v, _, _) = basis(t);
        HermiteWeights { segment: j, w: [v[0], h * v[1], h * h * v[2], v[3], h * v[4], h * h * v[5]] }
    }

    /// Value, first and second derivative at `r`.
    pub fn eval(&self, r: f64) -> (f64, f64, f64) {
        let j = locate(&self.knots, r);
        let h = self.knots[j + 1] - self.knots[j];
        let t = (r - self.knots[j]) / h;
        let (v, d, dd) = basis(t);
        let c =
            [self.y[j], h * self.d1[j], h * h * self.d2[j], self.y[j + 1], h * self.d1[j + 1], h * h * self.d2[j + 1]];
        let dot = |b: &[f64; 6]| b.iter().zip(&c).map(|(a, b)| a * b).sum::<f64>();
        (dot(&v), dot(&d) / h, dot(&dd) / (h * h))
    }
}
