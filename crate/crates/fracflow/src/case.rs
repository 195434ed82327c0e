//! Case definition files: TOML with explicit units on every physical
//! quantity (`perm = "10 mD"`, `total = "5 year"`). Loading parses and
//! validates; building resolves everything into a ready-to-run model.

use std::path::Path;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use crate::edfm::{embed_fracture_network, EdfmTopology, FractureNetwork};
use crate::error::{FracflowError, Result};
use crate::mesh::{build_cartesian_grid, RockModel, StructuredGrid};
use crate::model::ReservoirModel;
use crate::nepc::{CouplingTreatment, Reduction};
use crate::netgen::{generate_fracture_network, load_network_file, GeneratorConfig, OrientationModel};
use crate::physics::{peaceman_well_index, FluidModel, Perforation, WellControl, WellKind, WellSpec};
use crate::sim::{Schedule, SimState, SolverConfig, SolverKind};
use crate::units::{parse_quantity, Dimension, MILLIDARCY};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseFile {
    pub name: Option<String>,
    pub grid: GridSection,
    pub rock: RockSection,
    pub fractures: Option<FracturesSection>,
    #[serde(default)]
    pub fluid: FluidSection,
    pub wells: Vec<WellSection>,
    pub time: TimeSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub schedule: ScheduleSection,
    #[serde(default)]
    pub initial: InitialSection,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub dims: [usize; 3],
    pub extent: [String; 3],
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RockSection {
    pub porosity: f64,
    pub permeability: PermSpec,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum PermSpec {
    /// Uniform isotropic permeability, e.g. "10 mD".
    Uniform(String),
    Lognormal {
        lognormal: LognormalSpec,
    },
    File {
        file: String,
    },
}

/// Log-normal isotropic field: log10(k/mD) ~ N(mean, sigma), seeded.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LognormalSpec {
    pub mean_log10_md: f64,
    pub sigma_log10: f64,
    pub seed: u64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FracturesSection {
    pub file: Option<String>,
    pub generator: Option<GeneratorSection>,
    #[serde(default = "default_aperture")]
    pub aperture: String,
    #[serde(default = "default_frac_perm")]
    pub permeability: String,
    #[serde(default = "default_frac_poro")]
    pub porosity: f64,
}

fn default_aperture() -> String {
    "0.04 m".into()
}

fn default_frac_perm() -> String {
    "1000 D".into()
}

fn default_frac_poro() -> f64 {
    0.5
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorSection {
    pub seed: u64,
    pub count: usize,
    /// [min, max] trace length.
    pub length: [String; 2],
    /// Orientation sets as [mean_deg, half_spread_deg]; omitted = uniform.
    pub sets: Option<Vec<[f64; 2]>>,
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct FluidSection {
    pub water_viscosity: Option<String>,
    pub oil_viscosity: Option<String>,
    pub water_compressibility: Option<String>,
    pub oil_compressibility: Option<String>,
    pub n_w: Option<f64>,
    pub n_o: Option<f64>,
    pub krw_max: Option<f64>,
    pub kro_max: Option<f64>,
    pub s_wr: Option<f64>,
    pub s_or: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WellSection {
    pub name: String,
    pub kind: String,
    pub cell: [usize; 3],
    pub control: ControlSection,
    pub radius: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum ControlSection {
    Rate { rate: String },
    /// Base rate expressed as reservoir pore volumes injected over the
    /// total simulation time (before schedule multipliers).
    PoreVolumes { pore_volumes: f64 },
    Bhp { bhp: String },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSection {
    pub total: String,
    #[serde(default = "default_dt_target")]
    pub dt_target: String,
    #[serde(default = "default_dt_initial")]
    pub dt_initial: String,
    #[serde(default = "default_ramp")]
    pub ramp_factor: f64,
    #[serde(default = "default_cut")]
    pub cut_factor: f64,
}

fn default_dt_target() -> String {
    "30 day".into()
}

fn default_dt_initial() -> String {
    "0.9 day".into()
}

fn default_ramp() -> f64 {
    1.3
}

fn default_cut() -> f64 {
    0.5
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub solver: Option<String>,
    pub tolerance: Option<f64>,
    pub flow_tolerance: Option<f64>,
    pub max_newton: Option<usize>,
    pub max_cuts: Option<usize>,
    pub ds_max: Option<f64>,
    pub gamma: Option<f64>,
    pub reduction: Option<String>,
    pub eps_flux: Option<f64>,
    pub local_iterations: Option<usize>,
    pub activate_on_cut: Option<bool>,
    pub coupling: Option<String>,
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ScheduleSection {
    #[serde(default)]
    pub rate_changes: Vec<RateChange>,
    pub snapshot_fractions: Option<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateChange {
    pub at: String,
    pub multiplier: f64,
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    pub pressure: Option<String>,
    pub water_saturation: Option<f64>,
}

/// A fully resolved case, ready to simulate.
#[derive(Debug)]
pub struct BuiltCase {
    pub name: String,
    pub model: ReservoirModel,
    pub schedule: Schedule,
    pub solver: SolverConfig,
    pub initial: SimState,
}

/// Parse a case file. Diagnostics carry the offending key path.
pub fn load_case(path: &Path) -> Result<CaseFile> {
    let text = std::fs::read_to_string(path).map_err(|e| FracflowError::io(path, e))?;
    toml::from_str(&text).map_err(|e| FracflowError::config(path.display().to_string(), e.to_string()))
}

/// Load and build in one go; relative file references resolve against the
/// case file's directory.
pub fn load_and_build(path: &Path) -> Result<BuiltCase> {
    let case = load_case(path)?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let name = case
        .name
        .clone()
        .or_else(|| path.file_stem().map(|s| s.to_string_lossy().into_owned()))
        .unwrap_or_else(|| "case".into());
    build_case(&case, base, &name)
}

pub fn build_case(case: &CaseFile, base_dir: &Path, name: &str) -> Result<BuiltCase> {
    let extent = parse_extent(&case.grid.extent)?;
    let grid = build_cartesian_grid(
        (case.grid.dims[0], case.grid.dims[1], case.grid.dims[2]),
        (extent[0], extent[1], extent[2]),
    )?;
    let rock = build_rock(&grid, &case.rock, base_dir)?;
    let fluid = build_fluid(&case.fluid)?;

    let topology = match &case.fractures {
        None => EdfmTopology::empty(grid.n_cells()),
        Some(section) => {
            let network = build_network(section, &grid, base_dir)?;
            let topo = embed_fracture_network(&grid, &rock, &network)?;
            for w in &topo.warnings {
                log::warn!("{name}: {w}");
            }
            topo
        }
    };

    let total_time = parse_quantity(&case.time.total, Dimension::Time)?;
    let wells = build_wells(case, &grid, &rock, &topology, total_time)?;
    let model = ReservoirModel::new(grid, rock, fluid, topology, wells)?;

    let mut rate_changes = Vec::new();
    for rc in &case.schedule.rate_changes {
        let at = parse_quantity(&rc.at, Dimension::Time)?;
        if !(0.0..=total_time).contains(&at) {
            return Err(FracflowError::config(
                "schedule.rate_changes.at",
                format!("{} s lies outside [0, total]", at),
            ));
        }
        rate_changes.push((at, rc.multiplier));
    }
    rate_changes.sort_by(|a, b| a.0.total_cmp(&b.0));
    let schedule = Schedule {
        total_time,
        rate_changes,
        snapshot_fractions: case
            .schedule
            .snapshot_fractions
            .clone()
            .unwrap_or_else(|| vec![0.15, 0.5, 1.0]),
    };

    let solver = build_solver(case)?;
    solver.validate()?;

    let p_init = parse_quantity(
        case.initial.pressure.as_deref().unwrap_or("100 bar"),
        Dimension::Pressure,
    )?;
    let s_init = case.initial.water_saturation.unwrap_or(0.0);
    let initial = SimState::uniform(model.n_unknowns(), p_init, s_init);

    Ok(BuiltCase { name: name.to_string(), model, schedule, solver, initial })
}

fn parse_extent(extent: &[String; 3]) -> Result<[f64; 3]> {
    Ok([
        parse_quantity(&extent[0], Dimension::Length)?,
        parse_quantity(&extent[1], Dimension::Length)?,
        parse_quantity(&extent[2], Dimension::Length)?,
    ])
}

fn build_rock(grid: &StructuredGrid, section: &RockSection, base_dir: &Path) -> Result<RockModel> {
    let n = grid.n_cells();
    match &section.permeability {
        PermSpec::Uniform(q) => {
            let k = parse_quantity(q, Dimension::Permeability)?;
            RockModel::uniform(grid, k, section.porosity)
        }
        PermSpec::Lognormal { lognormal } => {
            let mut rng = ChaCha8Rng::seed_from_u64(lognormal.seed);
            let field: Vec<f64> = (0..n)
                .map(|_| {
                    let z = standard_normal(&mut rng);
                    let log10_md = lognormal.mean_log10_md + lognormal.sigma_log10 * z;
                    10f64.powf(log10_md) * MILLIDARCY
                })
                .collect();
            RockModel::from_isotropic_field(field, vec![section.porosity; n])
        }
        PermSpec::File { file } => {
            let path = base_dir.join(file);
            let text = std::fs::read_to_string(&path).map_err(|e| FracflowError::io(&path, e))?;
            let field: Vec<f64> = text
                .split_whitespace()
                .map(|tok| {
                    tok.parse::<f64>().map(|v| v * MILLIDARCY).map_err(|_| {
                        FracflowError::config(path.display().to_string(), format!("`{tok}` is not a number"))
                    })
                })
                .collect::<Result<_>>()?;
            if field.len() != n {
                return Err(FracflowError::config(
                    path.display().to_string(),
                    format!("permeability file has {} values, grid has {} cells", field.len(), n),
                ));
            }
            RockModel::from_isotropic_field(field, vec![section.porosity; n])
        }
    }
}

/// Box-Muller draw; two uniforms per sample keeps the stream layout simple
/// and reproducible.
fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.random_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.random_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

fn build_fluid(section: &FluidSection) -> Result<FluidModel> {
    let mut fluid = FluidModel::default();
    if let Some(q) = &section.water_viscosity {
        fluid.mu_w = parse_quantity(q, Dimension::Viscosity)?;
    }
    if let Some(q) = &section.oil_viscosity {
        fluid.mu_o = parse_quantity(q, Dimension::Viscosity)?;
    }
    if let Some(q) = &section.water_compressibility {
        fluid.c_w = parse_quantity(q, Dimension::Compressibility)?;
    }
    if let Some(q) = &section.oil_compressibility {
        fluid.c_o = parse_quantity(q, Dimension::Compressibility)?;
    }
    if let Some(v) = section.n_w {
        fluid.n_w = v;
    }
    if let Some(v) = section.n_o {
        fluid.n_o = v;
    }
    if let Some(v) = section.krw_max {
        fluid.krw_max = v;
    }
    if let Some(v) = section.kro_max {
        fluid.kro_max = v;
    }
    if let Some(v) = section.s_wr {
        fluid.s_wr = v;
    }
    if let Some(v) = section.s_or {
        fluid.s_or = v;
    }
    fluid.validate()?;
    Ok(fluid)
}

fn build_network(
    section: &FracturesSection,
    grid: &StructuredGrid,
    base_dir: &Path,
) -> Result<FractureNetwork> {
    let aperture = parse_quantity(&section.aperture, Dimension::Length)?;
    let permeability = parse_quantity(&section.permeability, Dimension::Permeability)?;
    match (&section.file, &section.generator) {
        (Some(file), None) => load_network_file(&base_dir.join(file), section.porosity),
        (None, Some(gen)) => {
            let config = GeneratorConfig {
                seed: gen.seed,
                count: gen.count,
                length_min: parse_quantity(&gen.length[0], Dimension::Length)?,
                length_max: parse_quantity(&gen.length[1], Dimension::Length)?,
                orientation: match &gen.sets {
                    None => OrientationModel::Uniform,
                    Some(sets) => OrientationModel::Sets(sets.iter().map(|s| (s[0], s[1])).collect()),
                },
                aperture,
                permeability,
                porosity: section.porosity,
            };
            let extent = grid.extent();
            Ok(generate_fracture_network(&config, [extent[0], extent[1]]))
        }
        _ => Err(FracflowError::config(
            "fractures",
            "specify exactly one of `file` or `generator`",
        )),
    }
}

fn build_wells(
    case: &CaseFile,
    grid: &StructuredGrid,
    rock: &RockModel,
    topology: &EdfmTopology,
    total_time: f64,
) -> Result<Vec<WellSpec>> {
    let [nx, ny, nz] = grid.dims();
    let [dx, dy, dz] = grid.cell_size();
    let cell_volume = grid.cell_volume();
    let total_pv: f64 = (0..grid.n_cells()).map(|c| cell_volume * rock.porosity(c)).sum::<f64>()
        + topology.total_fracture_pore_volume();

    let mut wells = Vec::with_capacity(case.wells.len());
    for (idx, w) in case.wells.iter().enumerate() {
        let field = |f: &str| format!("wells[{idx}].{f}");
        let [i, j, k] = w.cell;
        if i >= nx || j >= ny || k >= nz {
            return Err(FracflowError::config(
                field("cell"),
                format!("cell [{i}, {j}, {k}] outside grid {nx}x{ny}x{nz}"),
            ));
        }
        let cell = grid.cell_index(i, j, k);
        let kind = match w.kind.as_str() {
            "injector" => WellKind::Injector,
            "producer" => WellKind::Producer,
            other => {
                return Err(FracflowError::config(
                    field("kind"),
                    format!("`{other}` is not `injector` or `producer`"),
                ))
            }
        };
        let control = match &w.control {
            ControlSection::Rate { rate } => WellControl::Rate(parse_quantity(rate, Dimension::VolumeRate)?),
            ControlSection::PoreVolumes { pore_volumes } => {
                WellControl::Rate(pore_volumes * total_pv / total_time)
            }
            ControlSection::Bhp { bhp } => WellControl::Bhp(parse_quantity(bhp, Dimension::Pressure)?),
        };
        let r_w = match &w.radius {
            Some(q) => parse_quantity(q, Dimension::Length)?,
            None => 0.1,
        };
        let perm = rock.permeability(cell);
        let well_index = peaceman_well_index(dx, dy, dz, perm[0], perm[1], r_w)?;
        wells.push(WellSpec {
            name: w.name.clone(),
            kind,
            control,
            perforations: vec![Perforation { cell, well_index }],
        });
    }
    Ok(wells)
}

fn build_solver(case: &CaseFile) -> Result<SolverConfig> {
    let s = &case.solver;
    let mut config = SolverConfig {
        dt_initial: parse_quantity(&case.time.dt_initial, Dimension::Time)?,
        dt_target: parse_quantity(&case.time.dt_target, Dimension::Time)?,
        ramp_factor: case.time.ramp_factor,
        cut_factor: case.time.cut_factor,
        ..SolverConfig::default()
    };
    if let Some(kind) = &s.solver {
        config.solver_kind = parse_solver_kind(kind)?;
    }
    if let Some(v) = s.tolerance {
        config.tolerance = v;
    }
    if let Some(v) = s.flow_tolerance {
        config.flow_tolerance = v;
    }
    if let Some(v) = s.max_newton {
        config.max_newton = v;
    }
    if let Some(v) = s.max_cuts {
        config.max_cuts = v;
    }
    if let Some(v) = s.ds_max {
        config.ds_max = v;
    }
    let a = &mut config.activation;
    if let Some(v) = s.gamma {
        a.gamma = v;
    }
    if let Some(v) = &s.reduction {
        a.reduction = match v.as_str() {
            "mean" => Reduction::Mean,
            "sum" => Reduction::Sum,
            other => {
                return Err(FracflowError::config(
                    "solver.reduction",
                    format!("`{other}` is not `mean` or `sum`"),
                ))
            }
        };
    }
    if let Some(v) = s.eps_flux {
        a.eps_flux = v;
    }
    if let Some(v) = s.local_iterations {
        a.local_max_iters = v;
    }
    if let Some(v) = s.activate_on_cut {
        a.activate_on_cut = v;
    }
    if let Some(v) = &s.coupling {
        a.coupling = match v.as_str() {
            "freeze" => CouplingTreatment::FreezeAtEntry,
            "drop" => CouplingTreatment::Drop,
            other => {
                return Err(FracflowError::config(
                    "solver.coupling",
                    format!("`{other}` is not `freeze` or `drop`"),
                ))
            }
        };
    }
    Ok(config)
}

pub fn parse_solver_kind(text: &str) -> Result<SolverKind> {
    match text {
        "newton" => Ok(SolverKind::Newton),
        "enne" | "en-ne" | "en_ne" => Ok(SolverKind::EnNe),
        other => Err(FracflowError::config(
            "solver",
            format!("`{other}` is not `newton` or `enne`"),
        )),
    }
}
