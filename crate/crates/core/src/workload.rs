//! Workload algebra: the workload matrix, the effective-cost linear program
//! and the one-dimensional Skorohod reflection map.

use crate::error::{domain, Result};
use crate::params::NetworkLimits;

/// Time-per-job coefficients mapping queue lengths to server workloads.
///
/// Row 1 is `(1/mu1, 1/mu2, 0)` (server 1), row 2 is `(0, 1/mu3, 1/mu3)`
/// (server 2; buffer 2 jobs still owe server 2 a visit).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorkloadMatrix {
    pub m: [[f64; 3]; 2],
}

impl WorkloadMatrix {
    pub fn new(mu: [f64; 3]) -> Self {
        WorkloadMatrix { m: [[1.0 / mu[0], 1.0 / mu[1], 0.0], [0.0, 1.0 / mu[2], 1.0 / mu[2]]] }
    }

    pub fn apply(&self, q: [f64; 3]) -> [f64; 2] {
        let row = |i: usize| self.m[i][0] * q[0] + self.m[i][1] * q[1] + self.m[i][2] * q[2];
        [row(0), row(1)]
    }
}

/// Which branch of the effective cost applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    /// `mu3 w2 >= mu2 w1`: hold the surplus in buffer 3, keep buffer 1 empty.
    Buffer3Heavy,
    /// `mu3 w2 < mu2 w1`: hold the surplus in buffer 1, keep buffer 3 empty.
    Buffer1Heavy,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LpSolution {
    pub z: [f64; 3],
    pub value: f64,
    pub region: Region,
}

fn check_workload(w1: f64, w2: f64) -> Result<()> {
    if !(w1 >= 0.0) || !(w2 >= 0.0) {
        return Err(domain(format!("workloads must be nonnegative, got ({w1}, {w2})")));
    }
    Ok(())
}

fn region_of(mu: [f64; 3], w1: f64, w2: f64) -> Region {
    if mu[2] * w2 >= mu[1] * w1 {
        Region::Buffer3Heavy
    } else {
        Region::Buffer1Heavy
    }
}

/// Closed-form minimizer and value of the effective-cost LP
///
/// ```text
/// minimize h.z  s.t.  z1/mu1 + z2/mu2 = w1,  (z2 + z3)/mu3 = w2,  z >= 0.
/// ```
///
/// Requires Case IIA limits; the boundary `mu3 w2 = mu2 w1` is tagged
/// [`Region::Buffer3Heavy`].
pub fn effective_cost(limits: &NetworkLimits, w1: f64, w2: f64) -> Result<LpSolution> {
    check_workload(w1, w2)?;
    let [m1, m2, m3] = limits.mu;
    let [h1, h2, h3] = limits.h;
    let region = region_of(limits.mu, w1, w2);
    let (z, value) = match region {
        Region::Buffer3Heavy => ([0.0, m2 * w1, m3 * w2 - m2 * w1], (h2 * m2 - h3 * m2) * w1 + h3 * m3 * w2),
        Region::Buffer1Heavy => {
            ([m1 / m2 * (m2 * w1 - m3 * w2), m3 * w2, 0.0], h1 * m1 * w1 + m3 / m2 * (h2 * m2 - h1 * m1) * w2)
        }
    };
    Ok(LpSolution { z, value, region })
}

/// `h_hat(w1, w2)` alone.
pub fn effective_cost_value(limits: &NetworkLimits, w1: f64, w2: f64) -> f64 {
    let [m1, m2, m3] = limits.mu;
    let [h1, h2, h3] = limits.h;
    if m3 * w2 >= m2 * w1 {
        (h2 * m2 - h3 * m2) * w1 + h3 * m3 * w2
    } else {
        h1 * m1 * w1 + m3 / m2 * (h2 * m2 - h1 * m1) * w2
    }
}

const VERTEX_TOL: f64 = 1e-12;

/// Solve the effective-cost LP by enumerating basic feasible solutions.
///
/// Each pair of columns of the workload matrix is tried as a basis; the
/// 2x2 system is solved directly and the cheapest nonnegative vertex wins.
/// Independent of the closed form in [`effective_cost`].
pub fn lp_oracle(limits: &NetworkLimits, w1: f64, w2: f64) -> Result<LpSolution> {
    check_workload(w1, w2)?;
    let a = WorkloadMatrix::new(limits.mu).m;
    let rhs = [w1, w2];
    let scale = 1.0 + w1.abs().max(w2.abs());
    let mut best: Option<([f64; 3], f64)> = None;
    for (i, j) in [(0usize, 1usize), (0, 2), (1, 2)] {
        let det = a[0][i] * a[1][j] - a[0][j] * a[1][i];
        if det.abs() < VERTEX_TOL {
            continue;
        }
        let xi = (rhs[0] * a[1][j] - a[0][j] * rhs[1]) / det;
        let xj = (a[0][i] * rhs[1] - rhs[0] * a[1][i]) / det;
        if xi < -VERTEX_TOL * scale || xj < -VERTEX_TOL * scale {
            continue;
        }
        let mut z = [0.0; 3];
        z[i] = xi.max(0.0);
        z[j] = xj.max(0.0);
        let cost: f64 = (0..3).map(|k| limits.h[k] * z[k]).sum();
        if best.is_none_or(|(_, c)| cost < c) {
            best = Some((z, cost));
        }
    }
    let (z, value) = best.ok_or_else(|| domain("no feasible vertex"))?;
    Ok(LpSolution { z, value, region: region_of(limits.mu, w1, w2) })
}

/// A sampled path on a strictly increasing time grid starting at 0, read as
/// piecewise constant (right-continuous) between grid points.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

impl Path {
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.len() != values.len() || times.is_empty() {
            return Err(domain("path needs equally many (>= 1) times and values"));
        }
        if times[0] != 0.0 {
            return Err(domain(format!("path grid must start at 0, starts at {}", times[0])));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(domain("path grid must be strictly increasing"));
        }
        Ok(Path { times, values })
    }

    /// Path on the uniform grid `0, dt, 2 dt, ...`.
    pub fn uniform(dt: f64, values: Vec<f64>) -> Result<Self> {
        let times = (0..values.len()).map(|k| k as f64 * dt).collect();
        Path::new(times, values)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    fn require_origin(&self) -> Result<()> {
        if self.values[0] != 0.0 {
            return Err(domain(format!("Skorohod map needs x(0) = 0, got {}", self.values[0])));
        }
        Ok(())
    }
}

/// `Gamma(x)(t) = x(t) - inf_{s <= t} x(s)`, by one running-minimum sweep.
pub fn skorohod_reflect(x: &Path) -> Result<Path> {
    x.require_origin()?;
    let mut lo = 0.0f64;
    let values = x
        .values
        .iter()
        .map(|&v| {
            lo = lo.min(v);
            v - lo
        })
        .collect();
    Ok(Path { times: x.times.clone(), values })
}

/// The pushing process `t -> -inf_{s <= t} x(s)`, so that
/// `Gamma(x) = x + regulator(x)`.
pub fn skorohod_regulator(x: &Path) -> Result<Path> {
    x.require_origin()?;
    let mut lo = 0.0f64;
    let values = x
        .values
        .iter()
        .map(|&v| {
            lo = lo.min(v);
            -lo
        })
        .collect();
    Ok(Path { times: x.times.clone(), values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn ex() -> NetworkLimits {
        NetworkLimits::example()
    }

    #[test]
    fn zero_workload_costs_nothing() {
        let s = effective_cost(&ex(), 0.0, 0.0).unwrap();
        assert_eq!(s.z, [0.0; 3]);
        assert_eq!(s.value, 0.0);
        assert_eq!(s.region, Region::Buffer3Heavy);
    }

    #[test]
    fn buffer3_heavy_example() {
        let s = effective_cost(&ex(), 1.0, 3.0).unwrap();
        assert_eq!(s.region, Region::Buffer3Heavy);
        assert_eq!(s.z, [0.0, 2.0, 1.0]);
        assert_eq!(s.value, 3.0);
        let o = lp_oracle(&ex(), 1.0, 3.0).unwrap();
        assert_abs_diff_eq!(o.value, 3.0, epsilon = 1e-12);
        for k in 0..3 {
            assert_abs_diff_eq!(o.z[k], s.z[k], epsilon = 1e-12);
        }
    }

    #[test]
    fn buffer1_heavy_example() {
        let s = effective_cost(&ex(), 1.0, 1.0).unwrap();
        assert_eq!(s.region, Region::Buffer1Heavy);
        assert_eq!(s.z, [1.0, 1.0, 0.0]);
        assert_eq!(s.value, 2.0);
        assert_abs_diff_eq!(lp_oracle(&ex(), 1.0, 1.0).unwrap().value, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn oracle_edge_vertices() {
        let o = lp_oracle(&ex(), 1.0, 0.0).unwrap();
        assert_eq!(o.z, [2.0, 0.0, 0.0]);
        assert_eq!(o.value, 2.0);
        let o = lp_oracle(&ex(), 0.0, 2.5).unwrap();
        assert_eq!(o.z, [0.0, 0.0, 2.5]);
    }

    #[test]
    fn negative_workload_rejected() {
        assert!(effective_cost(&ex(), -1.0, 0.0).is_err());
        assert!(lp_oracle(&ex(), 0.0, -1e-3).is_err());
    }

    #[test]
    fn example_cost_is_max_of_branches() {
        // with unit costs and mu = (2, 2, 1), h_hat = max(2 w1, w2)
        for (w1, w2) in [(0.3, 0.1), (0.1, 0.9), (1.0, 2.0), (4.0, 0.0)] {
            assert_abs_diff_eq!(effective_cost_value(&ex(), w1, w2), f64::max(2.0 * w1, w2), epsilon = 1e-15);
        }
    }

    #[test]
    fn boundary_branches_agree() {
        let l = NetworkLimits { lambda: [0.9, 1.2], mu: [1.5, 3.0, 1.2], h: [2.5, 1.5, 0.5], gamma: 1.0, b: [0.0; 3] };
        l.validate().unwrap();
        let [m1, m2, m3] = l.mu;
        let [h1, h2, h3] = l.h;
        for w1 in [0.0, 0.1, 1.0, 7.5] {
            let w2 = m2 * w1 / m3;
            let a = (h2 * m2 - h3 * m2) * w1 + h3 * m3 * w2;
            let b = h1 * m1 * w1 + m3 / m2 * (h2 * m2 - h1 * m1) * w2;
            assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()));
            let s = effective_cost(&l, w1, w2).unwrap();
            assert_eq!(s.region, Region::Buffer3Heavy);
            assert!(s.z[0].abs() < 1e-12 && s.z[2].abs() < 1e-12);
        }
    }

    fn prefix_min_reflect(v: &[f64]) -> Vec<f64> {
        (0..v.len()).map(|k| v[k] - v[..=k].iter().cloned().fold(f64::INFINITY, f64::min)).collect()
    }

    #[test]
    fn reflect_small_example() {
        let x = Path::uniform(1.0, vec![0.0, 1.0, -1.0, 0.5]).unwrap();
        assert_eq!(skorohod_reflect(&x).unwrap().values, vec![0.0, 1.0, 0.0, 1.5]);
        assert_eq!(prefix_min_reflect(&x.values), vec![0.0, 1.0, 0.0, 1.5]);
        assert_eq!(skorohod_regulator(&x).unwrap().values, vec![0.0, 0.0, 1.0, 1.0]);
    }

    #[test]
    fn reflect_monotone_and_decreasing_paths() {
        let up = Path::uniform(0.5, vec![0.0, 0.2, 0.2, 3.0]).unwrap();
        assert_eq!(skorohod_reflect(&up).unwrap().values, up.values);
        assert!(skorohod_regulator(&up).unwrap().values.iter().all(|&v| v == 0.0));
        let times: Vec<f64> = vec![0.0, 0.3, 1.1, 2.0];
        let down = Path::new(times.clone(), times.iter().map(|t| -t).collect()).unwrap();
        assert!(skorohod_reflect(&down).unwrap().values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn reflect_rejects_bad_paths() {
        let x = Path::uniform(1.0, vec![0.5, 1.0]).unwrap();
        assert!(skorohod_reflect(&x).is_err());
        assert!(skorohod_regulator(&x).is_err());
        assert!(Path::new(vec![0.0, 0.0], vec![0.0, 1.0]).is_err());
        assert!(Path::new(vec![1.0], vec![0.0]).is_err());
    }

    proptest! {
        #[test]
        fn closed_form_matches_oracle(w1 in 0.0f64..10.0, w2 in 0.0f64..10.0) {
            let s = effective_cost(&ex(), w1, w2).unwrap();
            let o = lp_oracle(&ex(), w1, w2).unwrap();
            prop_assert!((s.value - o.value).abs() < 1e-9);
            let hz: f64 = (0..3).map(|k| ex().h[k] * s.z[k]).sum();
            prop_assert!((hz - s.value).abs() < 1e-10);
            let w = WorkloadMatrix::new(ex().mu).apply(s.z);
            prop_assert!((w[0] - w1).abs() < 1e-10 && (w[1] - w2).abs() < 1e-10);
            prop_assert!(s.z.iter().all(|&z| z >= 0.0));
        }

        #[test]
        fn regulator_is_nondecreasing_from_zero(steps in prop::collection::vec(-1.0f64..1.0, 1..200)) {
            let mut v = vec![0.0];
            for s in &steps {
                v.push(v.last().unwrap() + s);
            }
            let x = Path::uniform(0.1, v).unwrap();
            let reg = skorohod_regulator(&x).unwrap();
            let refl = skorohod_reflect(&x).unwrap();
            prop_assert_eq!(reg.values[0], 0.0);
            prop_assert!(reg.values.windows(2).all(|w| w[1] >= w[0]));
            prop_assert_eq!(&refl.values, &prefix_min_reflect(&x.values));
            for k in 0..x.len() {
                prop_assert!((refl.values[k] - (x.values[k] + reg.values[k])).abs() < 1e-12);
            }
            // idempotent on its (already nonnegative) output
            let again = skorohod_reflect(&refl).unwrap();
            prop_assert_eq!(again.values, refl.values);
        }
    }
}
