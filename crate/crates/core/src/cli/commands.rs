//! Table builders behind each subcommand.

use std::fmt;

use crate::analysis::{
    convexity_gap, fit_tail, front_speed, localization_bound_scan, narrow_energy_study, nonincreasing_within,
};
use crate::density::{
    density, density_extent, density_width, region_probability, source_values, Prescription, Region, Source,
};
use crate::error::{Error, Result};
use crate::state::{energy_moment, relative_energy_spread, Dim, MixedState, MomentumState};

use super::config::{ScenarioConfig, SpatialWindow};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Density,
    Convexity,
    Tails,
    Spread,
    Compare,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Density => "density",
            Command::Convexity => "convexity",
            Command::Tails => "tails",
            Command::Spread => "spread",
            Command::Compare => "compare",
        }
    }
}

/// A checked inequality that failed, with both sides.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub context: String,
    pub lhs_label: String,
    pub lhs: f64,
    pub relation: &'static str,
    pub rhs_label: String,
    pub rhs: f64,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: {} = {} {} {} = {}",
            self.context,
            self.lhs_label,
            num(self.lhs),
            self.relation,
            self.rhs_label,
            num(self.rhs)
        )
    }
}

/// A finished table and the bounds it violated.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
    pub violations: Vec<Violation>,
}

impl Report {
    fn new(columns: &[&'static str]) -> Self {
        Self { columns: columns.to_vec(), rows: Vec::new(), violations: Vec::new() }
    }

    fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// Comment header followed by the CSV table.
    pub fn render(&self, command: Command, cfg: &ScenarioConfig, resolution_scale: usize) -> Result<String> {
        let mut out = String::new();
        out.push_str(&format!("# locdens {}\n", env!("CARGO_PKG_VERSION")));
        out.push_str(&format!("# command: {}\n", command.name()));
        out.push_str(&format!("# resolution_scale: {resolution_scale}\n"));
        out.push_str("# config:\n");
        for line in cfg.to_toml().lines() {
            if line.is_empty() {
                out.push_str("#\n");
            } else {
                out.push_str(&format!("#   {line}\n"));
            }
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| Error::Precondition(format!("writing table: {e}"));
        w.write_record(&self.columns).map_err(io)?;
        for row in &self.rows {
            w.write_record(row).map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Precondition(format!("writing table: {e}")))?;
        out.push_str(&String::from_utf8(bytes).expect("table is UTF-8"));
        Ok(out)
    }
}

/// Twelve significant digits; negative zero prints as zero.
pub(crate) fn num(x: f64) -> String {
    if x == 0.0 {
        return format!("{:.11e}", 0.0);
    }
    format!("{x:.11e}")
}

pub fn run_command(command: Command, cfg: &ScenarioConfig) -> Result<Report> {
    match command {
        Command::Density => cmd_density(cfg),
        Command::Convexity => cmd_convexity(cfg),
        Command::Tails => cmd_tails(cfg),
        Command::Spread => cmd_spread(cfg),
        Command::Compare => cmd_compare(cfg),
    }
}

enum Target {
    Pure(MomentumState),
    Mixed(MixedState),
}

impl Target {
    fn source(&self) -> Source<'_> {
        match self {
            Target::Pure(s) => Source::Pure(s),
            Target::Mixed(m) => Source::Mixed(m),
        }
    }
}

fn build_target(cfg: &ScenarioConfig) -> Result<Target> {
    let name = match &cfg.run.target {
        Some(n) => n.clone(),
        None => cfg
            .states
            .first()
            .map(|s| s.name.clone())
            .ok_or_else(|| Error::Config { field: "states".into(), message: "no states declared".into() })?,
    };
    if cfg.states.iter().any(|s| s.name == name) {
        Ok(Target::Pure(cfg.build_state(&name)?))
    } else {
        Ok(Target::Mixed(cfg.build_mixture(&name)?))
    }
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let step = (hi - lo) / (n - 1) as f64;
    (0..n).map(|i| if i == n - 1 { hi } else { lo + i as f64 * step }).collect()
}

fn spatial_points(cfg: &ScenarioConfig, components: &[(f64, &MomentumState)]) -> Result<Vec<f64>> {
    let half = match cfg.grids.spatial_window {
        SpatialWindow::HalfWidth(x) => x,
        SpatialWindow::Auto => {
            let mut x: f64 = 0.0;
            for (_, s) in components {
                for &t in &cfg.run.times {
                    for p in [Prescription::Povm, Prescription::NewtonWigner] {
                        x = x.max(density_extent(s, p, t)?);
                    }
                }
            }
            x
        }
    };
    let lo = match cfg.model.dim {
        Dim::One => -half,
        Dim::Three => 0.0,
    };
    Ok(linspace(lo, half, cfg.grids.spatial_points))
}

const DENSITY_COLUMNS: [Prescription; 4] = [
    Prescription::Povm,
    Prescription::NaiveNormalized,
    Prescription::NewtonWigner,
    Prescription::EnergyDensityRaw,
];

fn cmd_density(cfg: &ScenarioConfig) -> Result<Report> {
    let target = build_target(cfg)?;
    let src = target.source();
    let xs = spatial_points(cfg, &src.components())?;
    let mut report = Report::new(&["x", "t", "povm", "naive", "nw", "energy_raw"]);
    for &t in &cfg.run.times {
        let cols = DENSITY_COLUMNS
            .iter()
            .map(|&p| source_values(target.source(), p, &xs, t))
            .collect::<Result<Vec<_>>>()?;
        for (i, &x) in xs.iter().enumerate() {
            let mut row = vec![num(x), num(t)];
            row.extend(cols.iter().map(|c| num(c[i])));
            report.push(row);
        }
    }
    Ok(report)
}

fn region_for(dim: Dim, [a, b]: [f64; 2]) -> Result<Region> {
    Region::new(dim, vec![(a, b)])
}

fn cmd_convexity(cfg: &ScenarioConfig) -> Result<Report> {
    if cfg.mixtures.is_empty() {
        return Err(Error::Precondition("convexity needs at least one entry in `mixtures`".into()));
    }
    let mut report =
        Report::new(&["mixture", "record", "t", "prescription", "label", "value", "reference", "difference"]);
    let probabilities = [Prescription::Povm, Prescription::NaiveNormalized, Prescription::NewtonWigner];
    for m in &cfg.mixtures {
        let mix = cfg.build_mixture(&m.name)?;
        for (c, (_, s)) in m.components.iter().zip(mix.components()) {
            let e = energy_moment(s, 1)?;
            report.push(vec![
                m.name.clone(),
                "mean_energy".into(),
                String::new(),
                String::new(),
                c.state.clone(),
                num(e),
                String::new(),
                String::new(),
            ]);
        }
        for &t in &cfg.run.times {
            for p in probabilities {
                let gap = if mix.len() < 2 { 0.0 } else { convexity_gap(&mix, t, p)? };
                report.push(vec![
                    m.name.clone(),
                    "gap".into(),
                    num(t),
                    p.label().into(),
                    "l1".into(),
                    num(gap),
                    String::new(),
                    String::new(),
                ]);
            }
            for &bounds in &cfg.run.regions {
                let region = region_for(cfg.model.dim, bounds)?;
                for p in probabilities {
                    let value = region_probability(&mix, &region, t, p)?;
                    let mut reference = 0.0;
                    for (w, s) in mix.components() {
                        reference += w * region_probability(s, &region, t, p)?;
                    }
                    report.push(vec![
                        m.name.clone(),
                        "region".into(),
                        num(t),
                        p.label().into(),
                        format!("{}:{}", bounds[0], bounds[1]),
                        num(value),
                        num(reference),
                        num(value - reference),
                    ]);
                }
            }
        }
    }
    Ok(report)
}

fn selected(cfg: &ScenarioConfig) -> Result<Vec<(String, MomentumState)>> {
    let names = cfg.selected_states();
    if names.is_empty() {
        return Err(Error::Config { field: "states".into(), message: "no states declared".into() });
    }
    names.into_iter().map(|n| Ok((n.clone(), cfg.build_state(&n)?))).collect()
}

/// Fit window for one state: the configured one, or twice to four times
/// the RMS width of its POVM density.
pub(crate) fn tail_window(cfg: &ScenarioConfig, s: &MomentumState) -> Result<(f64, f64)> {
    match cfg.run.tail_window {
        Some([a, b]) => Ok((a, b)),
        None => {
            let w = density_width(s, Prescription::Povm, 0.0)?;
            Ok((2.0 * w, 4.0 * w))
        }
    }
}

fn cmd_tails(cfg: &ScenarioConfig) -> Result<Report> {
    let mut report = Report::new(&[
        "state",
        "prescription",
        "window_lo",
        "window_hi",
        "samples",
        "gamma_hat",
        "std_error",
        "residual",
        "mass",
        "bound",
        "holds",
    ]);
    let mass = cfg.model.mass;
    for (name, s) in selected(cfg)? {
        let (lo, hi) = tail_window(cfg, &s)?;
        let xs = linspace(lo, hi, cfg.grids.spatial_points);
        for &p in &cfg.run.prescriptions {
            let fit = fit_tail(&density(&s, p, &xs, 0.0)?, (lo, hi))?;
            let bound = mass + 3.0 * fit.gamma_std_error;
            let holds = fit.within_mass_bound(mass);
            if !holds {
                report.violations.push(Violation {
                    context: format!("tail of {name} ({p})"),
                    lhs_label: "gamma_hat".into(),
                    lhs: fit.gamma_hat,
                    relation: ">",
                    rhs_label: "m + 3*std_error".into(),
                    rhs: bound,
                });
            }
            report.push(vec![
                name.clone(),
                p.label().into(),
                num(lo),
                num(hi),
                fit.samples.to_string(),
                num(fit.gamma_hat),
                num(fit.gamma_std_error),
                num(fit.residual),
                num(mass),
                num(bound),
                holds.to_string(),
            ]);
        }
    }
    Ok(report)
}

fn cmd_spread(cfg: &ScenarioConfig) -> Result<Report> {
    let times = &cfg.run.times;
    if times.len() < 2 {
        return Err(Error::Config {
            field: "run.times".into(),
            message: "spread needs t = 0 and at least one later time".into(),
        });
    }
    let limit = 1.0 + cfg.run.speed_tolerance;
    let mut report = Report::new(&["state", "prescription", "q", "t", "radius", "speed", "limit", "holds"]);
    for (name, s) in selected(cfg)? {
        for &p in cfg.run.prescriptions.iter().filter(|p| p.is_probability()) {
            let fs = front_speed(&s, p, cfg.run.quantile, times)?;
            for (i, (&t, &r)) in fs.front.times.iter().zip(&fs.front.radii).enumerate() {
                let (speed, holds) = if i == 0 {
                    (String::new(), true)
                } else {
                    let v = fs.speeds[i - 1].1;
                    if v > limit {
                        report.violations.push(Violation {
                            context: format!("front of {name} ({p}) at t = {t}"),
                            lhs_label: "speed".into(),
                            lhs: v,
                            relation: ">",
                            rhs_label: "1 + speed_tolerance".into(),
                            rhs: limit,
                        });
                    }
                    (num(v), v <= limit)
                };
                report.push(vec![
                    name.clone(),
                    p.label().into(),
                    num(cfg.run.quantile),
                    num(t),
                    num(r),
                    speed,
                    num(limit),
                    holds.to_string(),
                ]);
            }
        }
    }
    Ok(report)
}

fn cmd_compare(cfg: &ScenarioConfig) -> Result<Report> {
    let mut family = selected(cfg)?
        .into_iter()
        .map(|(n, s)| Ok((relative_energy_spread(&s)?, n, s)))
        .collect::<Result<Vec<_>>>()?;
    family.sort_by(|a, b| b.0.total_cmp(&a.0));
    let (names, states): (Vec<String>, Vec<MomentumState>) = family.into_iter().map(|(_, n, s)| (n, s)).unzip();
    let t = cfg.run.times[0];

    let mut report = Report::new(&[
        "record",
        "state",
        "relative_spread",
        "mean_energy",
        "l1_naive_povm",
        "width",
        "product",
    ]);
    let rows = narrow_energy_study(&states, t)?;
    for (name, row) in names.iter().zip(&rows) {
        report.push(vec![
            "narrow_energy".into(),
            name.clone(),
            num(row.relative_spread),
            num(row.mean_energy),
            num(row.l1),
            String::new(),
            String::new(),
        ]);
    }
    let l1: Vec<f64> = rows.iter().map(|r| r.l1).collect();
    if !nonincreasing_within(&l1, cfg.run.jitter) {
        for (i, w) in l1.windows(2).enumerate() {
            if w[1] > w[0] * (1.0 + cfg.run.jitter) {
                report.violations.push(Violation {
                    context: format!("narrow-energy L1 from {} to {}", names[i], names[i + 1]),
                    lhs_label: "l1_next".into(),
                    lhs: w[1],
                    relation: ">",
                    rhs_label: "(1 + jitter) * l1_prev".into(),
                    rhs: w[0] * (1.0 + cfg.run.jitter),
                });
            }
        }
    }

    let bound = localization_bound_scan(&states, cfg.run.fraction)?;
    for (name, row) in names.iter().zip(&bound) {
        report.push(vec![
            "bound".into(),
            name.clone(),
            String::new(),
            num(row.mean_energy),
            String::new(),
            num(row.width),
            num(row.product),
        ]);
    }
    if let Some((i, min)) = bound.iter().enumerate().min_by(|a, b| a.1.product.total_cmp(&b.1.product)) {
        report.push(vec![
            "bound_min".into(),
            names[i].clone(),
            String::new(),
            num(min.mean_energy),
            String::new(),
            num(min.width),
            num(min.product),
        ]);
        if !(min.product > 0.0) {
            report.violations.push(Violation {
                context: "width-energy scan".into(),
                lhs_label: "min width*<E>".into(),
                lhs: min.product,
                relation: "<=",
                rhs_label: "zero".into(),
                rhs: 0.0,
            });
        }
    }
    Ok(report)
}
