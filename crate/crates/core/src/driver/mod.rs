//! Refinement studies: uniform h, uniform p after resolving the wavelength,
//! hp-adaptive refinement, and frequency sweeps.

mod selftest;

use std::time::Instant;

use thiserror::Error;

use crate::dpg::{
    assemble_global, error_indicators, global_residual_sq, recover_fields, DofLayout, DpgError, ElementOperator,
    FieldSolution, ProblemConfig,
};
use crate::la::{PcgOptions, C64};
use crate::mesh::{dorfler_mark_with_exponent, wavelength_edge_test, MarkedSet, Mesh, MeshError, RefineKind};
use crate::mg::{solve, CoarseOpMode, CycleConfig, Hierarchy, MgError};

pub use selftest::{selftest, CheckResult};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DriverError {
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Dpg(#[from] DpgError),
    #[error(transparent)]
    Mg(#[from] MgError),
    #[error("invalid study configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StudyKind {
    UniformH,
    UniformP,
    HpAdaptive,
}

impl StudyKind {
    pub fn name(&self) -> &'static str {
        match self {
            Self::UniformH => "uniform_h",
            Self::UniformP => "uniform_p",
            Self::HpAdaptive => "hp_adaptive",
        }
    }
}

#[derive(Debug, Clone)]
pub struct StudyConfig {
    pub problem: ProblemConfig,
    pub kind: StudyKind,
    /// Frequencies of a sweep; single studies use `problem.omega`.
    pub omegas: Vec<f64>,
    /// Maximum number of grids, the initial one included.
    pub grids: usize,
    /// Dörfler bulk parameter.
    pub theta: f64,
    /// Power of `eta_K` summed by the marking.
    pub marking_exponent: f64,
    pub cycle: CycleConfig,
    pub coarse_op_mode: CoarseOpMode,
    pub tol: f64,
    pub max_iter: usize,
    pub p0: usize,
    pub p_max: usize,
    pub warm_start: bool,
    /// Also evaluate the residual with globally assembled operators and
    /// record its relative deviation from the summed indicators.
    pub check_identity: bool,
}

impl StudyConfig {
    pub fn new(kind: StudyKind, problem: ProblemConfig) -> Self {
        Self {
            problem,
            kind,
            omegas: Vec::new(),
            grids: 4,
            theta: 0.5,
            marking_exponent: 2.0,
            cycle: CycleConfig::default(),
            coarse_op_mode: CoarseOpMode::Restrict,
            tol: 1e-7,
            max_iter: 1000,
            p0: 2,
            p_max: 5,
            warm_start: false,
            check_identity: false,
        }
    }

    pub fn validate(&self) -> Result<(), DriverError> {
        let bad = |s: &str| Err(DriverError::InvalidConfig(s.to_string()));
        self.problem.validate()?;
        self.cycle.validate()?;
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return bad("tol must lie in (0, 1)");
        }
        if self.grids < 1 {
            return bad("grids must be at least 1");
        }
        if !(self.theta > 0.0 && self.theta < 1.0) {
            return bad("theta must lie in (0, 1)");
        }
        if self.p0 < 2 || self.p_max < self.p0 {
            return bad("orders must satisfy 2 <= p0 <= p_max");
        }
        if self.max_iter == 0 {
            return bad("max_iter must be positive");
        }
        if self.omegas.iter().any(|w| !(*w > 0.0 && w.is_finite())) {
            return bad("omegas must be positive");
        }
        Ok(())
    }
}

/// Outcome of one grid of a study.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRecord {
    pub grid: usize,
    /// Trace unknowns, constrained ones included.
    pub ndof: usize,
    pub iterations: usize,
    pub final_residual: f64,
    /// `sqrt(sum_K eta_K^2)`.
    pub dpg_eta: f64,
    pub assembly_s: f64,
    pub solve_s: f64,
    pub converged: bool,
    pub elements: usize,
    pub min_order: usize,
    pub max_order: usize,
    /// Smallest element size.
    pub h_min: f64,
    /// Relative gap between summed indicators and the global residual.
    pub identity_error: Option<f64>,
}

/// Everything a study produced besides the records.
#[derive(Debug, Clone)]
pub struct GridSnapshot {
    pub mesh: Mesh,
    pub layout: DofLayout,
    pub solution: Vec<C64>,
    pub fields: FieldSolution,
    pub eta_sq: Vec<f64>,
    /// Elements of this mesh marked for h and for p refinement.
    pub h_marked: Vec<usize>,
    pub p_marked: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct StudyOutcome {
    pub records: Vec<ConvergenceRecord>,
    pub snapshots: Vec<GridSnapshot>,
}

impl StudyOutcome {
    pub fn max_iterations(&self) -> usize {
        self.records.iter().map(|r| r.iterations).max().unwrap_or(0)
    }

    pub fn all_converged(&self) -> bool {
        self.records.iter().all(|r| r.converged)
    }
}

/// Mesh sequence and retained systems of a running study.
struct StudyState<'a> {
    cfg: &'a StudyConfig,
    meshes: Vec<Mesh>,
    stored: Vec<Vec<ElementOperator>>,
    prev: Option<Vec<C64>>,
    records: Vec<ConvergenceRecord>,
    snapshots: Vec<GridSnapshot>,
    keep_snapshots: bool,
}

impl<'a> StudyState<'a> {
    fn new(cfg: &'a StudyConfig, keep_snapshots: bool) -> Result<Self, DriverError> {
        cfg.validate()?;
        Ok(Self {
            cfg,
            meshes: vec![Mesh::initial(cfg.p0, cfg.p_max)?],
            stored: Vec::new(),
            prev: None,
            records: Vec::new(),
            snapshots: Vec::new(),
            keep_snapshots,
        })
    }

    fn mesh(&self) -> &Mesh {
        self.meshes.last().unwrap()
    }

    /// Assembles, solves and evaluates the indicators on the current mesh.
    fn solve_current(&mut self) -> Result<Vec<f64>, DriverError> {
        let cfg = self.cfg;
        let grid = self.meshes.len() - 1;
        let mesh = self.meshes.last().unwrap();
        let t0 = Instant::now();
        let sys = assemble_global(mesh, &cfg.problem)?;
        let h = Hierarchy::build(&self.meshes, sys.operators.clone(), &self.stored, cfg.coarse_op_mode, cfg.cycle)?;
        let assembly_s = t0.elapsed().as_secs_f64();

        let x0 = match (&self.prev, cfg.warm_start && grid > 0) {
            (Some(prev), true) => Some(h.finest().prolongate(prev)),
            _ => None,
        };
        let opts = PcgOptions { tol: cfg.tol, max_iter: cfg.max_iter, ..PcgOptions::default() };
        let t1 = Instant::now();
        let out = solve(&h, &sys.rhs, x0.as_deref(), &opts)?;
        let solve_s = t1.elapsed().as_secs_f64();

        let fields = recover_fields(mesh, &sys, &out.x);
        let eta_sq = error_indicators(mesh, &cfg.problem, &sys.layout, &fields, &out.x)?;
        let total: f64 = eta_sq.iter().sum();
        let identity_error = if cfg.check_identity {
            let g = global_residual_sq(mesh, &cfg.problem, &sys.layout, &fields, &out.x)?;
            Some(if g == 0.0 { (total - g).abs() } else { (total - g).abs() / g })
        } else {
            None
        };
        let orders = mesh.elements().iter().map(|e| e.order);
        self.records.push(ConvergenceRecord {
            grid,
            ndof: sys.layout.num_dofs() + sys.layout.num_constrained(),
            iterations: out.iterations,
            final_residual: out.final_residual(),
            dpg_eta: total.sqrt(),
            assembly_s,
            solve_s,
            converged: out.converged,
            elements: mesh.num_elements(),
            min_order: orders.clone().min().unwrap(),
            max_order: orders.max().unwrap(),
            h_min: mesh.elements().iter().map(|e| e.h).fold(f64::INFINITY, f64::min),
            identity_error,
        });
        if self.keep_snapshots {
            self.snapshots.push(GridSnapshot {
                mesh: mesh.clone(),
                layout: sys.layout.clone(),
                solution: out.x.clone(),
                fields,
                eta_sq: eta_sq.clone(),
                h_marked: Vec::new(),
                p_marked: Vec::new(),
            });
        }
        if self.cfg.coarse_op_mode == CoarseOpMode::Store {
            self.stored.push(sys.operators);
        }
        self.prev = Some(out.x);
        Ok(eta_sq)
    }

    fn refine(&mut self, marks: MarkedSet) -> Result<(), DriverError> {
        if let Some(s) = self.snapshots.last_mut() {
            for &(e, k) in marks.entries() {
                match k {
                    RefineKind::H => s.h_marked.push(e),
                    RefineKind::P => s.p_marked.push(e),
                }
            }
        }
        let next = self.mesh().refine(&marks)?;
        self.meshes.push(next);
        Ok(())
    }

    fn finish(self) -> StudyOutcome {
        StudyOutcome { records: self.records, snapshots: self.snapshots }
    }
}

pub fn run_uniform_h(cfg: &StudyConfig) -> Result<StudyOutcome, DriverError> {
    run_uniform_h_with(cfg, false)
}

pub fn run_uniform_h_with(cfg: &StudyConfig, keep_snapshots: bool) -> Result<StudyOutcome, DriverError> {
    let mut st = StudyState::new(cfg, keep_snapshots)?;
    for g in 0..cfg.grids {
        if g > 0 {
            let marks = MarkedSet::all(st.mesh().num_elements(), RefineKind::H);
            st.refine(marks)?;
        }
        st.solve_current()?;
    }
    Ok(st.finish())
}

/// True while some element is larger than half a wavelength, i.e. there are
/// fewer than two elements per wavelength.
pub fn needs_h_for_wavelength(mesh: &Mesh, problem: &ProblemConfig) -> bool {
    let half = 0.5 * problem.wavelength();
    mesh.elements().iter().any(|e| e.h > half * (1.0 + 1e-12))
}

pub fn run_uniform_p(cfg: &StudyConfig) -> Result<StudyOutcome, DriverError> {
    run_uniform_p_with(cfg, false)
}

pub fn run_uniform_p_with(cfg: &StudyConfig, keep_snapshots: bool) -> Result<StudyOutcome, DriverError> {
    let mut st = StudyState::new(cfg, keep_snapshots)?;
    st.solve_current()?;
    while st.records.len() < cfg.grids {
        let n = st.mesh().num_elements();
        let kind = if needs_h_for_wavelength(st.mesh(), &cfg.problem) {
            RefineKind::H
        } else if st.mesh().elements().iter().all(|e| e.order < cfg.p_max) {
            RefineKind::P
        } else {
            break;
        };
        st.refine(MarkedSet::all(n, kind))?;
        st.solve_current()?;
    }
    Ok(st.finish())
}

/// h for elements whose longest edge reaches half a wavelength, p otherwise;
/// p at the order cap falls back to h.
pub fn classify_marks(mesh: &Mesh, problem: &ProblemConfig, marked: &[usize]) -> MarkedSet {
    let entries = marked
        .iter()
        .map(|&e| {
            let el = mesh.element(e);
            let kind = if wavelength_edge_test(el, problem.omega, problem.wavespeed) || el.order >= mesh.p_max() {
                RefineKind::H
            } else {
                RefineKind::P
            };
            (e, kind)
        })
        .collect();
    MarkedSet::new(entries).expect("marked elements are distinct")
}

pub fn run_hp_adaptive(cfg: &StudyConfig) -> Result<StudyOutcome, DriverError> {
    run_hp_adaptive_with(cfg, false)
}

pub fn run_hp_adaptive_with(cfg: &StudyConfig, keep_snapshots: bool) -> Result<StudyOutcome, DriverError> {
    let mut st = StudyState::new(cfg, keep_snapshots)?;
    let mut last_round = false;
    loop {
        let eta_sq = st.solve_current()?;
        if last_round || st.records.len() >= cfg.grids {
            break;
        }
        let marked = match dorfler_mark_with_exponent(&eta_sq, cfg.theta, cfg.marking_exponent) {
            Ok(m) => m,
            Err(MeshError::AllZeroIndicators) => break,
            Err(e) => return Err(e.into()),
        };
        let marks = classify_marks(st.mesh(), &cfg.problem, &marked);
        if marks.count(RefineKind::H) == 0 {
            last_round = true;
        }
        st.refine(marks)?;
    }
    Ok(st.finish())
}

pub fn run_study(cfg: &StudyConfig, keep_snapshots: bool) -> Result<StudyOutcome, DriverError> {
    match cfg.kind {
        StudyKind::UniformH => run_uniform_h_with(cfg, keep_snapshots),
        StudyKind::UniformP => run_uniform_p_with(cfg, keep_snapshots),
        StudyKind::HpAdaptive => run_hp_adaptive_with(cfg, keep_snapshots),
    }
}

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub omega: f64,
    pub max_iterations: usize,
    pub outcome: StudyOutcome,
}

#[derive(Debug, Clone)]
pub struct OmegaSweep {
    pub rows: Vec<SweepRow>,
    /// Least-squares slope of log(max iterations) against log(omega).
    pub slope: Option<f64>,
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() < 2 || x.len() != y.len() {
        return None;
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxx: f64 = lx.iter().map(|v| (v - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    Some(sxy / sxx)
}

pub fn run_omega_sweep(cfg: &StudyConfig) -> Result<OmegaSweep, DriverError> {
    if cfg.omegas.is_empty() {
        return Err(DriverError::InvalidConfig("omega sweep needs at least one frequency".into()));
    }
    let mut rows = Vec::new();
    for &omega in &cfg.omegas {
        let mut c = cfg.clone();
        c.problem.omega = omega;
        let outcome = run_study(&c, false)?;
        rows.push(SweepRow { omega, max_iterations: outcome.max_iterations(), outcome });
    }
    let xs: Vec<f64> = rows.iter().map(|r| r.omega).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.max_iterations.max(1) as f64).collect();
    Ok(OmegaSweep { slope: loglog_slope(&xs, &ys), rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dpg::BoundaryLoad;
    use std::f64::consts::PI;

    fn cfg(kind: StudyKind, omega: f64) -> StudyConfig {
        let p = ProblemConfig::new(omega).with_load(BoundaryLoad::PlaneWave { direction: [0.6, 0.8] });
        StudyConfig::new(kind, p)
    }

    #[test]
    fn slope_of_power_law() {
        let x = [1.0, 2.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powf(0.8)).collect();
        assert!((loglog_slope(&x, &y).unwrap() - 0.8).abs() < 1e-12);
        assert_eq!(loglog_slope(&[2.0], &[3.0]), None);
    }

    #[test]
    fn one_grid_one_record() {
        let mut c = cfg(StudyKind::UniformH, 2.0 * PI);
        c.grids = 1;
        let out = run_uniform_h(&c).unwrap();
        assert_eq!(out.records.len(), 1);
        assert_eq!(out.records[0].ndof, 8);
    }

    #[test]
    fn uniform_p_resolves_wavelength_first() {
        let mut c = cfg(StudyKind::UniformP, 8.0 * PI);
        c.grids = 20;
        c.p_max = 3;
        let out = run_uniform_p(&c).unwrap();
        let hs: Vec<f64> = out.records.iter().map(|r| r.h_min).collect();
        assert_eq!(hs, vec![1.0, 0.5, 0.25, 0.125, 0.125]);
        assert_eq!(out.records.last().unwrap().max_order, 3);
        let nd: Vec<usize> = out.records.iter().map(|r| r.ndof).collect();
        assert!(nd.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn hp_terminates_one_mesh_after_p_only_round() {
        // at this frequency elements of size 1/2 are already below half a wavelength
        let mut c = cfg(StudyKind::HpAdaptive, PI);
        c.grids = 10;
        c.p_max = 3;
        let out = run_hp_adaptive_with(&c, true).unwrap();
        let n = out.records.len();
        assert!(n >= 2);
        let last_marks = &out.snapshots[n - 2];
        assert!(last_marks.h_marked.is_empty());
        for s in &out.snapshots[..n - 2] {
            assert!(!s.h_marked.is_empty());
        }
    }

    #[test]
    fn studies_are_deterministic() {
        let c = cfg(StudyKind::UniformH, 4.0 * PI);
        let strip = |o: StudyOutcome| {
            o.records.into_iter().map(|r| (r.ndof, r.iterations, r.final_residual, r.dpg_eta)).collect::<Vec<_>>()
        };
        assert_eq!(strip(run_uniform_h(&c).unwrap()), strip(run_uniform_h(&c).unwrap()));
    }
}
