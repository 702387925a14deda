//! One-particle states in momentum space.
//!
//! A state is a wavefunction `psi(p)` sampled on the nodes of a composite
//! Gauss-Legendre grid, integrated against the Lorentz-invariant measure
//!
//! ```text
//! d=1:  dmu(p) = dp / (2 pi * 2 E(p))
//! d=3:  dmu(p) = 4 pi p^2 dp / ((2 pi)^3 * 2 E(p))     (radial states)
//! ```
//!
//! with `E(p) = sqrt(m^2 + p^2)`. The per-node measure weights are
//! precomputed once, so every momentum-space integral is a dot product.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{config, Error, Result};
use crate::quadrature::{GaussLegendre, PanelMesh};

/// Amplitude ratio `|psi(P)| / max|psi|` the cutoff must reach.
pub const CUTOFF_TOLERANCE: f64 = 1e-12;
/// Amplitude ratio the automatic cutoff aims for, below [`CUTOFF_TOLERANCE`].
const AUTO_CUTOFF_RATIO: f64 = 1e-16;
/// Massless states must satisfy `|psi(0)| < MASSLESS_SUPPRESSION * max|psi|`.
pub const MASSLESS_SUPPRESSION: f64 = 1e-6;
/// Largest admissible momentum panel width in units of the Gaussian sigma.
const MAX_PANEL_OVER_SIGMA: f64 = 3.0;

/// Spatial dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Dim {
    /// One spatial dimension, signed momenta.
    One,
    /// Three dimensions, radially symmetric states.
    Three,
}

impl Dim {
    pub fn as_u8(self) -> u8 {
        match self {
            Dim::One => 1,
            Dim::Three => 3,
        }
    }
}

impl TryFrom<u8> for Dim {
    type Error = String;

    fn try_from(d: u8) -> Result<Self, String> {
        match d {
            1 => Ok(Dim::One),
            3 => Ok(Dim::Three),
            other => Err(format!("dimension must be 1 or 3, got {other}")),
        }
    }
}

impl From<Dim> for u8 {
    fn from(d: Dim) -> u8 {
        d.as_u8()
    }
}

/// Mass and spatial dimension, natural units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub mass: f64,
    pub dim: Dim,
}

impl ModelParams {
    pub fn new(mass: f64, dim: Dim) -> Result<Self> {
        if !(mass.is_finite() && mass >= 0.0) {
            return Err(config("mass", format!("mass must be finite and >= 0, got {mass}")));
        }
        Ok(Self { mass, dim })
    }

    /// On-shell energy `sqrt(m^2 + p^2)`.
    #[inline]
    pub fn energy(&self, p: f64) -> f64 {
        self.mass.hypot(p)
    }

    /// Jacobian and `(2 pi)^-d / (2E)` factor of the invariant measure at `p`.
    #[inline]
    pub fn measure_density(&self, p: f64) -> f64 {
        let e = self.energy(p);
        match self.dim {
            Dim::One => 1.0 / (2.0 * PI * 2.0 * e),
            Dim::Three => 4.0 * PI * p * p / ((2.0 * PI).powi(3) * 2.0 * e),
        }
    }
}

/// Where the momentum domain ends.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Cutoff {
    /// Chosen from the wavepacket so the amplitude at the ends is
    /// negligible; the domain hugs the packet.
    Auto,
    /// Symmetric domain `[-P, P]` (d=1) or `[0, P]` (d=3). States built on
    /// the same fixed cutoff share a grid and can be compared directly.
    Fixed(f64),
}

/// Resolution recipe for a [`MomentumGrid`].
///
/// `panels` is a floor. Position-space fields are accurate out to the
/// spatial `reach` only if the phase `p x` changes by at most
/// [`MAX_PHASE_PER_PANEL`] across a momentum panel, so constructors add
/// panels until that holds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub panels: usize,
    pub order: usize,
    pub cutoff: Cutoff,
    /// Largest `|x|` at which fields will be evaluated. `None` lets
    /// [`make_gaussian`] estimate it from the packet's tail.
    pub reach: Option<f64>,
}

/// Phase budget per momentum panel at the spatial reach.
pub const MAX_PHASE_PER_PANEL: f64 = 8.0;

impl Default for GridSpec {
    fn default() -> Self {
        Self { panels: 64, order: 16, cutoff: Cutoff::Auto, reach: None }
    }
}

impl GridSpec {
    /// Grid with about `nodes` nodes of order-16 panels.
    pub fn with_nodes(nodes: usize) -> Self {
        Self { panels: nodes.div_ceil(16).max(1), ..Self::default() }
    }

    pub fn fixed(mut self, cutoff: f64) -> Self {
        self.cutoff = Cutoff::Fixed(cutoff);
        self
    }

    /// Same recipe with `factor` times as many panels.
    pub fn scaled(mut self, factor: usize) -> Self {
        self.panels *= factor.max(1);
        self
    }

    pub fn with_reach(mut self, reach: f64) -> Self {
        self.reach = Some(reach);
        self
    }

    pub fn nodes(&self) -> usize {
        self.panels * self.order
    }

    /// Panel count needed on a domain of width `span` for fields out to `reach`.
    fn panels_for(&self, span: f64, reach: f64) -> usize {
        let needed = (span * reach / MAX_PHASE_PER_PANEL).ceil() as usize;
        self.panels.max(needed)
    }
}

/// Distance beyond which a Gaussian packet's densities at `t = 0` are
/// below `1e-14` of their peak, padded for moderate time evolution.
///
/// The tail follows `exp(-2 sigma^2 x^2)` until `x = m / (2 sigma^2)`, where
/// the branch point of `E(p)` at `p = i m` takes over with
/// `exp(m^2 / (2 sigma^2) - 2 m x)`.
pub fn gaussian_reach(mass: f64, sigma: f64) -> f64 {
    let log_ratio: f64 = 32.0;
    let gaussian = (log_ratio / 2.0).sqrt() / sigma;
    let extent = if mass == 0.0 || gaussian <= mass / (2.0 * sigma * sigma) {
        gaussian
    } else {
        log_ratio / (2.0 * mass) + mass / (4.0 * sigma * sigma)
    };
    1.5 * extent + 10.0
}

/// Reach for a radial packet `psi(|p|)` whose slope at `p = 0` does not
/// vanish. Seen as a function on three-dimensional momentum space it has a
/// kink at the origin, so its densities fall off as a power of `r` instead
/// of exponentially. `kink` is `|psi'(0)| sigma / max|psi|`.
pub fn radial_kink_reach(sigma: f64, kink: f64) -> f64 {
    let extent = (kink * kink * 1e14).powf(1.0 / 6.0) / (2.0 * sigma);
    1.5 * extent + 10.0
}

/// Quadrature nodes and plain `dp` weights over the momentum domain.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentumGrid {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    lo: f64,
    hi: f64,
    spec: GridSpec,
}

impl MomentumGrid {
    /// Builds the grid on `[lo, hi]`; `p = 0` is always a panel edge when
    /// it lies inside, since `E(p)` has a kink there for `m = 0`.
    pub fn new(lo: f64, hi: f64, spec: GridSpec) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && hi > lo) {
            return Err(config("grid", format!("momentum domain [{lo}, {hi}] is empty or not finite")));
        }
        if spec.panels == 0 {
            return Err(config("grid.panels", "need at least one panel"));
        }
        if !(2..=64).contains(&spec.order) {
            return Err(config("grid.order", format!("order must be in 2..=64, got {}", spec.order)));
        }
        let rule = GaussLegendre::new(spec.order);
        let mesh = PanelMesh::new(lo, hi, spec.panels, &[0.0], &rule);
        Ok(Self { nodes: mesh.nodes, weights: mesh.weights, lo, hi, spec })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    /// Largest `|p|` on the domain.
    pub fn cutoff(&self) -> f64 {
        self.lo.abs().max(self.hi.abs())
    }

    pub fn spec(&self) -> GridSpec {
        self.spec
    }

    /// Integrates `f(p)` against `dp` over the domain.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&p, &w)| w * f(p)).sum()
    }

    fn widest_panel(&self) -> f64 {
        (self.hi - self.lo) / self.spec.panels as f64
            * if self.lo < 0.0 && self.hi > 0.0 { 2.0 } else { 1.0 }
    }
}

/// Closed-form description of a state, kept so tests can resample it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ClosedForm {
    /// `N exp(-(p - p0)^2 / (4 sigma^2))`, restricted to `p >= 0` in d=3.
    Gaussian { p0: f64, sigma: f64, norm: f64 },
}

impl ClosedForm {
    pub fn amplitude(&self, p: f64) -> f64 {
        match *self {
            ClosedForm::Gaussian { p0, sigma, norm } => {
                let u = p - p0;
                norm * (-u * u / (4.0 * sigma * sigma)).exp()
            }
        }
    }
}

/// A one-particle state `psi(p)` on a momentum grid.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentumState {
    params: ModelParams,
    grid: MomentumGrid,
    values: Vec<Complex64>,
    energies: Vec<f64>,
    measure: Vec<f64>,
    normalized: bool,
    closed_form: Option<ClosedForm>,
}

impl MomentumState {
    /// Samples `f` on the grid. With `normalize`, rescales so that
    /// `int dmu |psi|^2 = 1` under this grid's quadrature.
    pub fn from_fn<F: Fn(f64) -> Complex64>(
        params: ModelParams,
        grid: MomentumGrid,
        f: F,
        normalize: bool,
    ) -> Result<Self> {
        if params.dim == Dim::Three && grid.lo < 0.0 {
            return Err(config("grid", "radial grids must start at p >= 0"));
        }
        let values: Vec<Complex64> = grid.nodes.iter().map(|&p| f(p)).collect();
        let mut state = Self::assemble(params, grid, values, None);
        if normalize {
            let n = state.norm_squared();
            if !(n.is_finite() && n > 0.0) {
                return Err(Error::Precondition(format!("cannot normalize a state with norm^2 = {n}")));
            }
            let scale = n.sqrt().recip();
            state.values.iter_mut().for_each(|v| *v *= scale);
            state.normalized = true;
        }
        Ok(state)
    }

    fn assemble(
        params: ModelParams,
        grid: MomentumGrid,
        values: Vec<Complex64>,
        closed_form: Option<ClosedForm>,
    ) -> Self {
        let energies = grid.nodes.iter().map(|&p| params.energy(p)).collect();
        let measure = grid
            .nodes
            .iter()
            .zip(&grid.weights)
            .map(|(&p, &w)| w * params.measure_density(p))
            .collect();
        Self { params, grid, values, energies, measure, normalized: false, closed_form }
    }

    pub fn params(&self) -> ModelParams {
        self.params
    }

    pub fn grid(&self) -> &MomentumGrid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// `E(p)` at each node.
    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    /// Quadrature weight times the invariant-measure density at each node.
    pub fn measure(&self) -> &[f64] {
        &self.measure
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn closed_form(&self) -> Option<ClosedForm> {
        self.closed_form
    }

    /// `int dmu |psi|^2`.
    pub fn norm_squared(&self) -> f64 {
        self.measure.iter().zip(&self.values).map(|(m, v)| m * v.norm_sqr()).sum()
    }

    /// The same state evolved by `t`: `psi(p) exp(-i E t)`.
    pub fn phase_advanced(&self, t: f64) -> Self {
        let mut out = self.clone();
        for (v, &e) in out.values.iter_mut().zip(&self.energies) {
            *v *= Complex64::from_polar(1.0, -e * t);
        }
        out.closed_form = None;
        out
    }

    /// Amplitude ratio `|psi(0)| / max|psi|`, from the closed form when
    /// available, otherwise from the node nearest `p = 0`.
    pub fn zero_momentum_ratio(&self) -> f64 {
        let max = self.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
        if max == 0.0 {
            return 0.0;
        }
        let at_zero = match self.closed_form {
            Some(cf) => cf.amplitude(0.0).abs(),
            None => {
                let (i, _) = self
                    .grid
                    .nodes
                    .iter()
                    .enumerate()
                    .min_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
                    .expect("grid is nonempty");
                self.values[i].norm()
            }
        };
        at_zero / max
    }

    /// Rejects massless states whose amplitude does not vanish at `p = 0`.
    pub fn check_massless_suppression(&self) -> Result<()> {
        if self.params.mass > 0.0 {
            return Ok(());
        }
        let (lo, _) = self.grid.domain();
        if lo > 0.0 && self.params.dim == Dim::One {
            return Ok(());
        }
        let ratio = self.zero_momentum_ratio();
        if ratio >= MASSLESS_SUPPRESSION {
            return Err(Error::SingularWeight { ratio, limit: MASSLESS_SUPPRESSION });
        }
        Ok(())
    }

    /// Test hook: rescales the measure weights without renormalizing.
    #[doc(hidden)]
    pub fn with_measure_scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.measure.iter_mut().for_each(|m| *m *= factor);
        out
    }

    fn require_normalized(&self, op: &str) -> Result<()> {
        if self.normalized {
            Ok(())
        } else {
            Err(Error::Precondition(format!("{op} requires a normalized state")))
        }
    }
}

/// Normalized Gaussian wavepacket `psi(p) ~ exp(-(p - p0)^2 / (4 sigma^2))`.
///
/// In d=3 the packet is radial, `psi(|p|)` on `p >= 0`. The normalization
/// constant is fixed by the grid's own quadrature.
pub fn make_gaussian(params: ModelParams, p0: f64, sigma: f64, spec: GridSpec) -> Result<MomentumState> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(config("sigma", format!("sigma must be > 0, got {sigma}")));
    }
    if !p0.is_finite() {
        return Err(config("p0", "p0 must be finite"));
    }
    let envelope = |p: f64| {
        let u = p - p0;
        (-u * u / (4.0 * sigma * sigma)).exp()
    };
    let peak = match params.dim {
        Dim::One => 1.0,
        Dim::Three => envelope(p0.max(0.0)),
    };
    let (lo, hi) = match spec.cutoff {
        Cutoff::Auto => {
            let half = 2.0 * sigma * AUTO_CUTOFF_RATIO.recip().ln().sqrt();
            match params.dim {
                Dim::One => (p0 - half, p0 + half),
                Dim::Three => ((p0 - half).max(0.0), p0.max(0.0) + half),
            }
        }
        Cutoff::Fixed(cut) => {
            if !(cut.is_finite() && cut > 0.0) {
                return Err(config("grid.cutoff", format!("cutoff must be > 0, got {cut}")));
            }
            let edge = match params.dim {
                Dim::One => envelope(cut).max(envelope(-cut)),
                Dim::Three => envelope(cut),
            } / peak;
            if edge >= CUTOFF_TOLERANCE {
                return Err(config(
                    "grid.cutoff",
                    format!(
                        "cutoff P = {cut} leaves |psi(P)|/max|psi| = {edge:.3e}, \
                         which must be < {CUTOFF_TOLERANCE:.0e}"
                    ),
                ));
            }
            match params.dim {
                Dim::One => (-cut, cut),
                Dim::Three => (0.0, cut),
            }
        }
    };
    let reach = spec.reach.unwrap_or_else(|| {
        let smooth = gaussian_reach(params.mass, sigma);
        match params.dim {
            Dim::One => smooth,
            Dim::Three => {
                let kink = p0.abs() / (2.0 * sigma) * envelope(0.0) / peak;
                smooth.max(radial_kink_reach(sigma, kink))
            }
        }
    });
    let spec = GridSpec { panels: spec.panels_for(hi - lo, reach), reach: Some(reach), ..spec };
    let grid = MomentumGrid::new(lo, hi, spec)?;
    let widest = grid.widest_panel();
    if widest > MAX_PANEL_OVER_SIGMA * sigma {
        return Err(config(
            "grid.panels",
            format!(
                "momentum panel width {widest:.4} exceeds {MAX_PANEL_OVER_SIGMA} sigma = {:.4}; \
                 raise the momentum resolution",
                MAX_PANEL_OVER_SIGMA * sigma
            ),
        ));
    }
    let mut state = MomentumState::from_fn(params, grid, |p| Complex64::new(envelope(p), 0.0), true)?;
    let norm = state.values.iter().zip(&state.grid.nodes).find_map(|(v, &p)| {
        let e = envelope(p);
        (e > 1e-3).then(|| v.re / e)
    });
    state.closed_form = norm.map(|norm| ClosedForm::Gaussian { p0, sigma, norm });
    state.check_massless_suppression()?;
    Ok(state)
}

/// `<a|b> = int dmu conj(psi_a) psi_b`.
pub fn inner_product(a: &MomentumState, b: &MomentumState) -> Result<Complex64> {
    check_compatible(a, b)?;
    Ok(a.measure
        .iter()
        .zip(a.values.iter().zip(&b.values))
        .map(|(m, (x, y))| x.conj() * y * *m)
        .sum())
}

pub(crate) fn check_compatible(a: &MomentumState, b: &MomentumState) -> Result<()> {
    if a.params != b.params {
        return Err(Error::Incompatible(format!(
            "model parameters differ: (m={}, d={}) vs (m={}, d={})",
            a.params.mass,
            a.params.dim.as_u8(),
            b.params.mass,
            b.params.dim.as_u8()
        )));
    }
    if a.grid.nodes != b.grid.nodes {
        return Err(Error::Incompatible(
            "momentum grids differ; build both states on the same fixed cutoff".into(),
        ));
    }
    Ok(())
}

/// `int dmu |psi|^2 E^k`. `k = 1` is `<H>`.
pub fn energy_moment(s: &MomentumState, k: u32) -> Result<f64> {
    s.require_normalized("energy_moment")?;
    Ok(s.measure
        .iter()
        .zip(&s.values)
        .zip(&s.energies)
        .map(|((m, v), e)| m * v.norm_sqr() * e.powi(k as i32))
        .sum())
}

/// `Delta E / <E> = sqrt(<E^2> - <E>^2) / <E>`.
pub fn relative_energy_spread(s: &MomentumState) -> Result<f64> {
    let e1 = energy_moment(s, 1)?;
    let e2 = energy_moment(s, 2)?;
    Ok((e2 - e1 * e1).max(0.0).sqrt() / e1)
}

/// Convex combination of pure states. Components stay separate.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedState {
    components: Vec<(f64, MomentumState)>,
}

/// Tolerance on `sum of weights = 1`.
pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-12;

impl MixedState {
    pub fn components(&self) -> &[(f64, MomentumState)] {
        &self.components
    }

    pub fn params(&self) -> ModelParams {
        self.components[0].1.params
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }
}

/// Builds `rho = sum_i alpha_i |psi_i><psi_i|`.
pub fn mix(components: Vec<(f64, MomentumState)>) -> Result<MixedState> {
    let Some((_, first)) = components.first() else {
        return Err(Error::Mixture("a mixture needs at least one component".into()));
    };
    let params = first.params;
    for (i, (w, s)) in components.iter().enumerate() {
        if !(w.is_finite() && *w > 0.0) {
            return Err(Error::Mixture(format!("weight {i} is {w}, must be > 0")));
        }
        if s.params != params {
            return Err(Error::Mixture(format!("component {i} has different mass or dimension")));
        }
        s.require_normalized("mix")?;
    }
    let sum: f64 = components.iter().map(|(w, _)| w).sum();
    if (sum - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
        return Err(Error::Mixture(format!("weights sum to {sum}, must sum to 1")));
    }
    Ok(MixedState { components })
}
