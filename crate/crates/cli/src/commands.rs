//! One function per subcommand. Each writes its files through a [`Sink`]
//! and returns the one-line summary printed on success.

use std::f64::consts::PI;

use moire_core::bands::{BandStructure, KPath};
use moire_core::decoherence::{tunneling_probability, LifetimeBudget, LifetimeReport, RadiativeChannel};
use moire_core::geometry::{moire_period, LatticeKind, MoireGeometry};
use moire_core::protocol::{
    level_frequencies, simulate_pumping_from, simulate_readout, Drive, LevelScheme, PhotonHistogram, ProtocolReport,
    ReadoutParams, UNPOLARIZED,
};
use moire_core::qubit::{
    concurrence, single_qubit_hamiltonian, two_qubit_hamiltonian, zeeman_splitting, CollapseOperator, PairParams,
    QuantumRegister, QubitParams,
};
use moire_core::screener::{load_dataset, rank, read_dataset, screen, write_ranked_csv, ScreenCriteria, ScreenReport};
use moire_core::tightbinding::{hartree_self_consistency, tb_band_structure, ScfOptions, TBModel};
use moire_core::units::PhysConstants;
use moire_core::wellsolver::{
    build_moire_potential, compute_band_structure, default_kpath, fit_hopping_decay, resolve_angular_momentum,
    solve_bloch_eigenstates, HoppingFit, MoirePotential, SolverOptions,
};
use moire_core::fmt::sig9;
use moire_core::linalg::{c, CMatrix};
use serde::Serialize;

use crate::config::RunConfig;
use crate::output::Sink;
use crate::CliError;

/// Bundled synthetic screening dataset.
pub const SAMPLE_DATASET: &str = include_str!("../data/materials_sample.csv");

/// Longest time series written per CSV.
const MAX_ROWS: usize = 1000;

fn io_err(e: std::io::Error) -> CliError {
    CliError::Core(e.into())
}

fn geometry_at(cfg: &RunConfig, angle: f64) -> Result<MoireGeometry, CliError> {
    Ok(MoireGeometry::new(cfg.material.lattice_spec()?, angle)?)
}

fn potential(cfg: &RunConfig, geom: &MoireGeometry) -> Result<MoirePotential, CliError> {
    let m = &cfg.material;
    let s = &cfg.solver;
    Ok(build_moire_potential(geom, m.v0, m.r0, m.m_eff, s.nx, s.ny_for(m.lattice))?)
}

fn solver_options(cfg: &RunConfig) -> SolverOptions {
    SolverOptions { tol: cfg.solver.tol, max_iterations: cfg.solver.max_iterations, ..Default::default() }
}

fn kpath(cfg: &RunConfig, pot: &MoirePotential) -> Result<KPath, CliError> {
    let n = cfg.solver.samples_per_segment;
    Ok(match &cfg.solver.kpath {
        Some(labels) => {
            let labels: Vec<&str> = labels.iter().map(String::as_str).collect();
            KPath::rectangular_labels(pot.lx, pot.ly, &labels, n)?
        }
        None => default_kpath(pot, n),
    })
}

#[derive(Serialize)]
struct GeometryReport {
    theta_deg: f64,
    a_nm: f64,
    lattice: LatticeKind,
    period_nm: f64,
    primitive_vectors_nm: [[f64; 2]; 2],
}

pub fn geometry(cfg: &RunConfig, sink: &mut Sink) -> Result<String, CliError> {
    let geom = geometry_at(cfg, cfg.sweep.angle)?;
    let report = GeometryReport {
        theta_deg: geom.theta,
        a_nm: cfg.material.a,
        lattice: cfg.material.lattice,
        period_nm: geom.period,
        primitive_vectors_nm: geom.primitive_vectors(),
    };
    sink.json("geometry.json", &report)?;
    Ok(format!("R = {:.2} nm", geom.period))
}

#[derive(Serialize)]
struct GammaState {
    energy_mev: f64,
    irrep: Option<String>,
    lz: Option<i32>,
}

#[derive(Serialize)]
struct BandsReport {
    theta_deg: f64,
    period_nm: f64,
    grid: [usize; 2],
    bandwidths_mev: Vec<f64>,
    barrier_mev: Option<f64>,
    flat_bands: usize,
    gamma_states: Vec<GammaState>,
}

/// Γ-point states, with irreps and `lz` tags on square cells.
fn gamma_states(pot: &MoirePotential, n: usize, opts: &SolverOptions) -> Result<Vec<GammaState>, CliError> {
    let mut states = solve_bloch_eigenstates(pot, [0.0, 0.0], n, opts)?;
    if pot.kind == LatticeKind::Square {
        if let Some(center) = pot.site_index(0) {
            // Unclassifiable multiplets simply stay unlabeled.
            let _ = resolve_angular_momentum(&mut states, center, 1e-6);
        }
    }
    Ok(states
        .iter()
        .map(|s| GammaState { energy_mev: s.energy, irrep: s.irrep.map(|i| i.to_string()), lz: s.lz })
        .collect())
}

pub fn bands(cfg: &RunConfig, sink: &mut Sink) -> Result<String, CliError> {
    let geom = geometry_at(cfg, cfg.sweep.angle)?;
    let pot = potential(cfg, &geom)?;
    let opts = solver_options(cfg);
    let mut bs = compute_band_structure(&pot, &kpath(cfg, &pot)?, cfg.solver.n_bands, &opts)?;
    let flat = cfg.material.flat_threshold;
    let barrier = bs.extract_barrier(flat).ok();
    let report = BandsReport {
        theta_deg: geom.theta,
        period_nm: geom.period,
        grid: [pot.nx, pot.ny],
        bandwidths_mev: bs.bandwidths.clone(),
        barrier_mev: barrier,
        flat_bands: bs.flat_band_count(flat),
        gamma_states: gamma_states(&pot, cfg.solver.n_bands.min(6), &opts)?,
    };
    sink.csv("bands.csv", |buf| bs.write_csv(buf).map_err(io_err))?;
    sink.json("bands.json", &report)?;
    let barrier = barrier.map_or_else(|| "n/a".to_string(), |b| format!("{} meV", sig9(b)));
    Ok(format!(
        "lowest bandwidth = {} meV, barrier = {barrier}, flat bands = {}",
        sig9(bs.bandwidths[0]),
        report.flat_bands
    ))
}

#[derive(Serialize)]
struct TbReport {
    period_nm: f64,
    bandwidths_mev: Vec<f64>,
    effective_onsite_mev: Vec<f64>,
    occupations: Option<Vec<f64>>,
    scf_iterations: usize,
}

pub fn tb_bands(cfg: &RunConfig, sink: &mut Sink) -> Result<String, CliError> {
    let tb = &cfg.tightbinding;
    let spec = cfg.material.lattice_spec()?;
    let period = moire_period(spec.a, cfg.sweep.angle, spec.kind)?;
    let mut hopping = vec![CMatrix::from_element(1, 1, c(tb.t, 0.0))];
    if tb.t2 != 0.0 {
        hopping.push(CMatrix::from_element(1, 1, c(tb.t2, 0.0)));
    }
    let mut model = TBModel::new(spec, period, vec![tb.eps], hopping)?.with_interactions(tb.coulomb, tb.exchange)?;
    let interacting = tb.coulomb.iter().chain(&tb.exchange).any(|&x| x != 0.0);
    let mut iterations = 0;
    if interacting {
        let scf = hartree_self_consistency(&model, tb.filling, &ScfOptions::default())?;
        iterations = scf.iterations;
        model = scf.model;
    }
    let path = match spec.kind {
        LatticeKind::Square => KPath::square(period, tb.samples_per_segment),
        LatticeKind::Triangular => KPath::triangular(period, tb.samples_per_segment),
    };
    let bs: BandStructure = tb_band_structure(&model, &path)?;
    let report = TbReport {
        period_nm: period,
        bandwidths_mev: bs.bandwidths.clone(),
        effective_onsite_mev: model.effective_onsite(),
        occupations: model.occupations.clone(),
        scf_iterations: iterations,
    };
    sink.csv("tb_bands.csv", |buf| bs.write_csv(buf).map_err(io_err))?;
    sink.json("tb_bands.json", &report)?;
    Ok(format!("tight-binding bandwidth = {} meV", sig9(bs.bandwidths[0])))
}

#[derive(Serialize)]
struct LifetimeOutput {
    #[serde(flatten)]
    budget: LifetimeReport,
    #[serde(rename = "barrier_meV")]
    barrier_mev: f64,
    tunneling_probability: f64,
    channels: Vec<RadiativeChannel>,
}

fn lifetime_output(cfg: &RunConfig, barrier: f64) -> Result<LifetimeOutput, CliError> {
    let d = &cfg.decoherence;
    let channels = d
        .channels
        .iter()
        .map(|ch| RadiativeChannel::new(&ch.from, &ch.to, ch.energy, ch.dipole, ch.allowed))
        .collect::<moire_core::Result<Vec<_>>>()?;
    let budget = LifetimeBudget::compute(&channels, d.temperature, d.tau_ep.unwrap_or(f64::INFINITY))?;
    // No thermal escape at absolute zero.
    let tunneling = if d.temperature > 0.0 { tunneling_probability(barrier, d.temperature)? } else { 0.0 };
    Ok(LifetimeOutput { budget: budget.report()?, barrier_mev: barrier, tunneling_probability: tunneling, channels })
}

fn seconds(x: Option<f64>) -> String {
    x.map_or_else(|| "inf".to_string(), |t| format!("{} s", sig9(t)))
}

pub fn lifetime(cfg: &RunConfig, sink: &mut Sink) -> Result<String, CliError> {
    let out = lifetime_output(cfg, cfg.decoherence.barrier)?;
    sink.json("lifetime.json", &out)?;
    Ok(format!(
        "tau_eff = {}, linewidth = {} Hz, tunneling probability = {}",
        seconds(out.budget.tau_eff_s),
        sig9(out.budget.linewidth_hz),
        sig9(out.tunneling_probability)
    ))
}

fn collapse_ops(cfg: &RunConfig) -> Result<Vec<CollapseOperator>, CliError> {
    let q = &cfg.qubit;
    let mut ops = Vec::new();
    if q.decay_rate > 0.0 {
        ops.push(CollapseOperator::decay(q.decay_rate)?);
    }
    if q.dephasing_rate > 0.0 {
        ops.push(CollapseOperator::dephasing(q.dephasing_rate)?);
    }
    Ok(ops)
}

/// Integrates the master equation and keeps at most [`MAX_ROWS`] evenly
/// spaced samples plus the final state.
fn sampled_series(
    h: &CMatrix,
    ops: &[CollapseOperator],
    duration: f64,
    init: &QuantumRegister,
    dt: f64,
) -> Result<Vec<(f64, QuantumRegister)>, CliError> {
    let steps = (duration / dt - 1e-9).ceil().max(0.0) as usize;
    let stride = steps.div_ceil(MAX_ROWS).max(1);
    let mut out = Vec::new();
    let mut n = 0usize;
    moire_core::qubit::lindblad_series(h, ops, duration, init, dt, |t, r| {
        if n % stride == 0 || n == steps {
            out.push((t, r.clone()));
        }
        n += 1;
    })?;
    Ok(out)
}

#[derive(Serialize)]
struct QubitReport {
    #[serde(rename = "zeeman_splitting_GHz")]
    zeeman_splitting_ghz: f64,
    generalized_rabi_rad_per_ps: f64,
    pi_time_ps: Option<f64>,
    duration_ps: f64,
    final_population_down: f64,
    final_purity: f64,
}

pub fn qubit(cfg: &RunConfig, sink: &mut Sink) -> Result<String, CliError> {
    let q = &cfg.qubit;
    let p = QubitParams::new(q.omega, q.delta, q.g_ground, q.b)?;
    let rabi = q.omega.hypot(q.delta);
    let duration = q.duration.unwrap_or(if rabi > 0.0 { 2.0 * PI / rabi } else { 1.0 });
    let init = QuantumRegister::basis(1, 0)?;
    let series = sampled_series(&single_qubit_hamiltonian(&p), &collapse_ops(cfg)?, duration, &init, q.dt)?;
    sink.csv("qubit.csv", |buf| {
        buf.extend_from_slice(b"t_ps,p_up,p_down,purity\n");
        for (t, r) in &series {
            let line = format!("{},{},{},{}\n", sig9(*t), sig9(r.population(0)), sig9(r.population(1)), sig9(r.purity()));
            buf.extend_from_slice(line.as_bytes());
        }
        Ok(())
    })?;
    let last = &series.last().expect("series includes t = 0").1;
    let report = QubitReport {
        zeeman_splitting_ghz: zeeman_splitting(q.g_ground, q.b)?,
        generalized_rabi_rad_per_ps: rabi,
        pi_time_ps: (rabi > 0.0).then(|| PI / rabi),
        duration_ps: duration,
        final_population_down: last.population(1),
        final_purity: last.purity(),
    };
    sink.json("qubit.json", &report)?;
    Ok(format!(
        "Zeeman splitting = {} GHz, P(down) at {} ps = {}",
        sig9(report.zeeman_splitting_ghz),
        sig9(duration),
        sig9(report.final_population_down)
    ))
}

#[derive(Serialize)]
struct TwoQubitReport {
    r_nm: f64,
    #[serde(rename = "flip_flop_J_meV")]
    flip_flop_mev: f64,
    swap_time_ps: f64,
    #[serde(rename = "charge_dipole_meV")]
    charge_dipole_mev: f64,
    duration_ps: f64,
    final_populations: [f64; 4],
    max_concurrence: f64,
}

pub fn two_qubit(cfg: &RunConfig, sink: &mut Sink) -> Result<String, CliError> {
    let q = &cfg.qubit;
    let r = match q.r {
        Some(r) => r,
        None => {
            let spec = cfg.material.lattice_spec()?;
            moire_period(spec.a, q.angle.unwrap_or(cfg.sweep.angle), spec.kind)?
        }
    };
    let pair = PairParams { c0: q.c0, c0p: q.c0p, ..PairParams::at_distance(r) };
    let j = pair.flip_flop();
    let hbar = PhysConstants::CODATA.hbar;
    let swap = if j != 0.0 { PI * hbar / (2.0 * j.abs()) } else { f64::INFINITY };
    let duration = q.duration.unwrap_or(if swap.is_finite() { 2.0 * swap } else { 1.0 });
    // Undriven qubits: only the detuning enters the local terms.
    let local = QubitParams::new(0.0, q.delta, q.g_ground, q.b)?;
    let h = two_qubit_hamiltonian(&local, &local, &pair)?;
    let init = QuantumRegister::basis(2, 1)?;
    let ops: Vec<CollapseOperator> = Vec::new();
    let series = sampled_series(&h, &ops, duration, &init, q.dt)?;
    let mut max_c: f64 = 0.0;
    let mut rows = Vec::with_capacity(series.len());
    for (t, reg) in &series {
        let conc = concurrence(reg)?;
        max_c = max_c.max(conc);
        rows.push((*t, [0, 1, 2, 3].map(|i| reg.population(i)), conc));
    }
    sink.csv("two_qubit.csv", |buf| {
        buf.extend_from_slice(b"t_ps,p_up_up,p_up_down,p_down_up,p_down_down,concurrence\n");
        for (t, p, conc) in &rows {
            let line = format!(
                "{},{},{},{},{},{}\n",
                sig9(*t),
                sig9(p[0]),
                sig9(p[1]),
                sig9(p[2]),
                sig9(p[3]),
                sig9(*conc)
            );
            buf.extend_from_slice(line.as_bytes());
        }
        Ok(())
    })?;
    let report = TwoQubitReport {
        r_nm: r,
        flip_flop_mev: j,
        swap_time_ps: swap,
        charge_dipole_mev: pair.charge_dipole(),
        duration_ps: duration,
        final_populations: rows.last().expect("series includes t = 0").1,
        max_concurrence: max_c,
    };
    sink.json("two_qubit.json", &report)?;
    Ok(format!("J = {} meV at R = {} nm, swap time = {} ps", sig9(j), sig9(r), sig9(swap)))
}

fn protocol_run(cfg: &RunConfig) -> Result<(ProtocolReport, moire_core::protocol::PumpResult), CliError> {
    let p = &cfg.protocol;
    let q = &cfg.qubit;
    let mut scheme = LevelScheme::standard(q.g_excited, p.gap, p.decay_rate);
    scheme.ground.g = q.g_ground;
    scheme.ionization_rate = p.ionization_rate;
    let drive = Drive { line: p.line, rate: p.drive_rate };
    let pump = simulate_pumping_from(&scheme, &drive, p.leak, p.duration, UNPOLARIZED, p.samples)?;
    let r = &p.readout;
    let readout = simulate_readout(&ReadoutParams {
        ionize_rate: r.ionize_rate,
        cycle_rate: r.cycle_rate,
        collection: r.collection,
        window: r.window,
        trials: r.trials,
        seed: r.seed,
    })?;
    let report = ProtocolReport {
        spin_polarization: pump.spin_polarization,
        charge_survival: pump.charge_survival,
        readout_fidelity: readout.fidelity,
        readout_threshold: readout.threshold,
        photon_histogram: PhotonHistogram { up: readout.histogram_up, down: readout.histogram_down },
        transition_frequencies_ghz: level_frequencies(&scheme, q.b)?,
    };
    Ok((report, pump))
}

pub fn protocol(cfg: &RunConfig, sink: &mut Sink) -> Result<String, CliError> {
    let (report, pump) = protocol_run(cfg)?;
    sink.csv("pumping.csv", |buf| {
        buf.extend_from_slice(b"t_s,p_g_up,p_g_down,p_e_up,p_e_down,p_dark\n");
        for (t, p) in pump.times.iter().zip(&pump.populations) {
            let cols: Vec<String> = std::iter::once(*t).chain(p.iter().copied()).map(sig9).collect();
            buf.extend_from_slice(cols.join(",").as_bytes());
            buf.push(b'\n');
        }
        Ok(())
    })?;
    sink.csv("readout.csv", |buf| {
        buf.extend_from_slice(b"photons,count_up,count_down\n");
        let h = &report.photon_histogram;
        for (k, (u, d)) in h.up.iter().zip(&h.down).enumerate() {
            buf.extend_from_slice(format!("{k},{u},{d}\n").as_bytes());
        }
        Ok(())
    })?;
    sink.json("protocol.json", &report)?;
    Ok(format!(
        "spin polarization = {}, readout fidelity = {} (threshold {})",
        sig9(report.spin_polarization),
        sig9(report.readout_fidelity),
        report.readout_threshold
    ))
}

pub fn screen_report(cfg: &RunConfig) -> Result<ScreenReport, CliError> {
    let sc = &cfg.screen;
    let records = match &sc.input {
        Some(path) => load_dataset(path)?,
        None => read_dataset(SAMPLE_DATASET.as_bytes())?,
    };
    let criteria = ScreenCriteria { gap_min: sc.gap_min, gap_max: sc.gap_max, vdw_threshold: sc.vdw_threshold };
    Ok(screen(&records, &criteria)?)
}

pub fn screen_cmd(cfg: &RunConfig, sink: &mut Sink) -> Result<String, CliError> {
    let report = screen_report(cfg)?;
    let ranked = rank(&report);
    sink.json("screen.json", &report)?;
    sink.csv("ranked.csv", |buf| Ok(write_ranked_csv(&ranked, buf)?))?;
    Ok(format!(
        "kept {} of {} records ({} rejected)",
        report.kept.len(),
        report.kept.len() + report.rejected.len(),
        report.rejected.len()
    ))
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub theta_deg: f64,
    pub period_nm: f64,
    #[serde(rename = "bandwidth_meV")]
    pub bandwidth_mev: f64,
    #[serde(rename = "barrier_meV")]
    pub barrier_mev: Option<f64>,
    pub flat_bands: usize,
    pub tunneling_probability: Option<f64>,
}

#[derive(Serialize)]
struct FitOutput {
    chi_per_nm: f64,
    log_prefactor: f64,
    r_squared: f64,
}

impl From<HoppingFit> for FitOutput {
    fn from(f: HoppingFit) -> Self {
        Self { chi_per_nm: f.chi, log_prefactor: f.log_prefactor, r_squared: f.r_squared }
    }
}

#[derive(Serialize)]
struct SweepReport {
    rows: Vec<SweepRow>,
    fit: FitOutput,
    lifetime: LifetimeOutput,
    protocol: ProtocolReport,
}

/// Bandwidth, barrier and escape probability at one twist angle.
pub fn sweep_row(cfg: &RunConfig, angle: f64) -> Result<SweepRow, CliError> {
    let geom = geometry_at(cfg, angle)?;
    let pot = potential(cfg, &geom)?;
    let mut bs = compute_band_structure(&pot, &kpath(cfg, &pot)?, cfg.solver.n_bands, &solver_options(cfg))?;
    let flat = cfg.material.flat_threshold;
    let barrier = bs.extract_barrier(flat).ok();
    let t = cfg.decoherence.temperature;
    let tunneling = match barrier {
        Some(b) if t > 0.0 => Some(tunneling_probability(b.max(0.0), t)?),
        Some(_) => Some(0.0),
        None => None,
    };
    Ok(SweepRow {
        theta_deg: angle,
        period_nm: geom.period,
        bandwidth_mev: bs.bandwidths[0],
        barrier_mev: barrier,
        flat_bands: bs.flat_band_count(flat),
        tunneling_probability: tunneling,
    })
}

/// Geometry → bands → decay fit → lifetime → protocol, over `sweep.angles`.
pub fn sweep(cfg: &RunConfig, sink: &mut Sink) -> Result<String, CliError> {
    let rows = cfg.sweep.angles.iter().map(|&a| sweep_row(cfg, a)).collect::<Result<Vec<_>, _>>()?;
    let samples: Vec<(f64, f64)> = rows.iter().map(|r| (r.period_nm, r.bandwidth_mev)).collect();
    let fit = fit_hopping_decay(&samples)?;
    // The lifetime stage uses the barrier of the largest-period dot that has one.
    let barrier = rows
        .iter()
        .filter(|r| r.barrier_mev.is_some())
        .max_by(|a, b| a.period_nm.total_cmp(&b.period_nm))
        .and_then(|r| r.barrier_mev)
        .unwrap_or(cfg.decoherence.barrier);
    let lifetime = lifetime_output(cfg, barrier)?;
    let (protocol, _) = protocol_run(cfg)?;

    sink.csv("sweep.csv", |buf| {
        buf.extend_from_slice(b"theta_deg,period_nm,bandwidth_meV,barrier_meV,flat_bands,tunneling_probability\n");
        let opt = |x: Option<f64>| x.map(sig9).unwrap_or_default();
        for r in &rows {
            let line = format!(
                "{},{},{},{},{},{}\n",
                sig9(r.theta_deg),
                sig9(r.period_nm),
                sig9(r.bandwidth_mev),
                opt(r.barrier_mev),
                r.flat_bands,
                opt(r.tunneling_probability)
            );
            buf.extend_from_slice(line.as_bytes());
        }
        let fit_line = format!("# fit chi_per_nm={} r_squared={}\n", sig9(fit.chi), sig9(fit.r_squared));
        buf.extend_from_slice(fit_line.as_bytes());
        Ok(())
    })?;
    let report = SweepReport { rows, fit: fit.into(), lifetime, protocol };
    sink.json("sweep.json", &report)?;
    Ok(format!("chi = {} nm^-1, r^2 = {}", sig9(fit.chi), sig9(fit.r_squared)))
}
