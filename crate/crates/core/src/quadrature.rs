//! Gauss-Legendre rules and composite panel meshes.
//!
//! Every integral in the crate, in momentum space and in position space, goes
//! through [`PanelMesh`]: an interval split at a set of breakpoints into
//! equal-width panels, each carrying a scaled copy of one reference
//! Gauss-Legendre rule.

use std::f64::consts::PI;

/// Reference Gauss-Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Builds the `n`-point rule by Newton iteration on the three-term
    /// Legendre recurrence. Exact for polynomials of degree `2n - 1`.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            // Tricomi's initial guess for the i-th root, counted from +1.
            let mut x = ((4 * i + 3) as f64 * PI / (4.0 * nf + 2.0)).cos()
                * (1.0 - (nf - 1.0) / (8.0 * nf * nf * nf));
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let step = p / d;
                x -= step;
                if step.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d.is_finite() {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Integrates `f` over `[a, b]` with this rule.
    pub fn integrate<F: Fn(f64) -> f64>(&self, a: f64, b: f64, f: F) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(mid + half * x))
            .sum::<f64>()
            * half
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let d = n as f64 * (x * p - p0) / (x * x - 1.0);
    (p, d)
}

/// Nodes and weights of a composite rule over a union of panels.
#[derive(Debug, Clone, PartialEq)]
pub struct PanelMesh {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    /// Panel edges, `panels + 1` values.
    pub edges: Vec<f64>,
    pub order: usize,
}

impl PanelMesh {
    /// Splits `[lo, hi]` into `panels` panels. Interior `breakpoints` become
    /// panel edges; panels are shared between the pieces in proportion to
    /// their length, at least one per piece.
    pub fn new(lo: f64, hi: f64, panels: usize, breakpoints: &[f64], rule: &GaussLegendre) -> Self {
        assert!(hi > lo, "empty interval [{lo}, {hi}]");
        let mut cuts = vec![lo];
        let mut inner: Vec<f64> = breakpoints
            .iter()
            .copied()
            .filter(|&b| b > lo && b < hi)
            .collect();
        inner.sort_by(f64::total_cmp);
        inner.dedup();
        cuts.extend(inner);
        cuts.push(hi);

        let span = hi - lo;
        let pieces = cuts.len() - 1;
        let panels = panels.max(pieces);
        let mut counts: Vec<usize> = cuts
            .windows(2)
            .map(|w| (((w[1] - w[0]) / span) * panels as f64).round().max(1.0) as usize)
            .collect();
        // Keep the total at exactly `panels` so that doubling is exact.
        let mut total: usize = counts.iter().sum();
        while total > panels {
            let i = (0..pieces).filter(|&i| counts[i] > 1).max_by_key(|&i| counts[i]).unwrap();
            counts[i] -= 1;
            total -= 1;
        }
        while total < panels {
            let i = (0..pieces)
                .max_by(|&a, &b| {
                    let la = (cuts[a + 1] - cuts[a]) / counts[a] as f64;
                    let lb = (cuts[b + 1] - cuts[b]) / counts[b] as f64;
                    la.total_cmp(&lb)
                })
                .unwrap();
            counts[i] += 1;
            total += 1;
        }

        let mut edges = Vec::with_capacity(panels + 1);
        for (piece, &count) in counts.iter().enumerate() {
            let (a, b) = (cuts[piece], cuts[piece + 1]);
            let h = (b - a) / count as f64;
            for k in 0..count {
                edges.push(a + k as f64 * h);
            }
        }
        edges.push(hi);

        let order = rule.len();
        let mut nodes = Vec::with_capacity(panels * order);
        let mut weights = Vec::with_capacity(panels * order);
        for w in edges.windows(2) {
            let half = 0.5 * (w[1] - w[0]);
            let mid = 0.5 * (w[0] + w[1]);
            for (&x, &wt) in rule.nodes().iter().zip(rule.weights()) {
                nodes.push(mid + half * x);
                weights.push(half * wt);
            }
        }
        Self { nodes, weights, edges, order }
    }

    pub fn panels(&self) -> usize {
        self.edges.len() - 1
    }

    pub fn integrate_samples(&self, samples: &[f64]) -> f64 {
        debug_assert_eq!(samples.len(), self.weights.len());
        self.weights.iter().zip(samples).map(|(w, f)| w * f).sum()
    }

    /// Per-panel integrals of `samples`.
    pub fn panel_sums(&self, samples: &[f64]) -> Vec<f64> {
        self.weights
            .chunks(self.order)
            .zip(samples.chunks(self.order))
            .map(|(w, f)| w.iter().zip(f).map(|(w, f)| w * f).sum())
            .collect()
    }
}
