//! Config-driven convergence studies and solution sampling.
//!
//! A study sweeps (rho, level) pairs for one mesh family and element
//! pairing, solving each configuration and tabulating projected errors and
//! observed orders, one block per rho, mirroring the layout of the
//! convergence tables the method is judged by. Outputs (CSV and an aligned
//! markdown table) are written atomically after all rows finish.

use crate::error::{Error, Result};
use crate::geometry::{self, Point};
use crate::mesh::{generate_mesh, FamilyKind, MeshFamily, PolygonalMesh};
use crate::norms::{self, ErrorReport};
use crate::problem::SolutionId;
use crate::space::{DofMap, ElementContext, WgSpace, WeakDegree};
use crate::system::{assemble, solve, solve_condensed, static_condense, WgSolution};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolverKind {
    Full,
    Condensed,
}

/// One experiment: a family, a list of dyadic levels, the element degrees,
/// and the diffusion coefficients to sweep.
#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub family: FamilyKind,
    pub levels: Vec<u32>,
    pub k: usize,
    pub q: usize,
    pub rdeg: WeakDegree,
    pub rho_list: Vec<f64>,
    pub solution: SolutionId,
    pub solver: SolverKind,
    /// output file names, resolved against the output directory
    pub csv_path: Option<PathBuf>,
    pub table_path: Option<PathBuf>,
    pub sample_path: Option<PathBuf>,
    pub sample_resolution: usize,
}

impl ExperimentConfig {
    /// Parses the flat `key = value` format; lists are comma-separated.
    /// Unknown keys are rejected so typos fail loudly.
    pub fn parse(text: &str) -> Result<Self> {
        let mut family = None;
        let mut levels: Vec<u32> = Vec::new();
        let mut k: Option<usize> = None;
        let mut q: Option<usize> = None;
        let mut r: Option<WeakDegree> = None;
        let mut rho_list: Vec<f64> = Vec::new();
        let mut solution = SolutionId::U1;
        let mut solver = SolverKind::Full;
        let mut csv_path = None;
        let mut table_path = None;
        let mut sample_path = None;
        let mut sample_resolution = 8usize;

        for (lineno, raw) in text.lines().enumerate() {
            let line = match raw.find('#') {
                Some(p) => &raw[..p],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected `key = value`", lineno + 1))
            })?;
            let (key, value) = (key.trim(), value.trim());
            let bad = |what: &str| Error::Config(format!("line {}: invalid {what}", lineno + 1));
            match key {
                "family" => family = Some(FamilyKind::parse(value)?),
                "levels" => {
                    levels = value
                        .split(',')
                        .map(|s| s.trim().parse().map_err(|_| bad("level")))
                        .collect::<Result<_>>()?;
                }
                "k" => k = Some(value.parse().map_err(|_| bad("k"))?),
                "q" => q = Some(value.parse().map_err(|_| bad("q"))?),
                "r" => {
                    r = Some(if value == "theoretical" {
                        WeakDegree::Theoretical
                    } else {
                        WeakDegree::Fixed(value.parse().map_err(|_| bad("r"))?)
                    })
                }
                "rho_list" => {
                    rho_list = value
                        .split(',')
                        .map(|s| s.trim().parse().map_err(|_| bad("rho")))
                        .collect::<Result<_>>()?;
                }
                "solution" => solution = SolutionId::parse(value)?,
                "solver" => {
                    solver = match value {
                        "full" => SolverKind::Full,
                        "condensed" => SolverKind::Condensed,
                        _ => return Err(bad("solver (full|condensed)")),
                    }
                }
                "csv" => csv_path = Some(PathBuf::from(value)),
                "table" => table_path = Some(PathBuf::from(value)),
                "sample" => sample_path = Some(PathBuf::from(value)),
                "sample_resolution" => {
                    sample_resolution = value.parse().map_err(|_| bad("sample_resolution"))?
                }
                other => {
                    return Err(Error::Config(format!(
                        "line {}: unknown key `{other}`",
                        lineno + 1
                    )))
                }
            }
        }

        let family = family.ok_or_else(|| Error::Config("missing `family`".into()))?;
        let k = k.ok_or_else(|| Error::Config("missing `k`".into()))?;
        let q = q.unwrap_or(k);
        if !(1..=6).contains(&k) {
            return Err(Error::Config(format!("k = {k} outside the supported range 1..=6")));
        }
        if !levels.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::Config("levels must be strictly ascending".into()));
        }
        if levels.iter().any(|&l| l == 0 || l > 12) {
            return Err(Error::Config("levels must lie in 1..=12".into()));
        }
        if rho_list.is_empty() {
            rho_list = vec![1.0];
        }
        if rho_list.iter().any(|&r| !(r > 0.0)) {
            return Err(Error::Config("rho values must be positive".into()));
        }
        let rdeg = match r {
            Some(r) => r,
            None => match family {
                FamilyKind::Triangular | FamilyKind::Square => WeakDegree::Fixed(k + 1),
                FamilyKind::Nonconvex => WeakDegree::Fixed(k + 2),
            },
        };
        // surface invalid degree combinations now rather than mid-study
        let _ = WgSpace::new(k, q, rdeg)?;

        Ok(Self {
            family,
            levels,
            k,
            q,
            rdeg,
            rho_list,
            solution,
            solver,
            csv_path,
            table_path,
            sample_path,
            sample_resolution,
        })
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn space(&self) -> Result<WgSpace> {
        WgSpace::new(self.k, self.q, self.rdeg)
    }

    fn r_label(&self) -> String {
        match self.rdeg {
            WeakDegree::Fixed(r) => r.to_string(),
            WeakDegree::Theoretical => "theoretical".into(),
        }
    }
}

/// One solved row of a study.
#[derive(Clone, Debug)]
pub struct StudyRow {
    pub rho: f64,
    pub level: u32,
    pub report: ErrorReport,
}

/// All rows of a study plus rendered outputs.
pub struct StudyOutput {
    pub rows: Vec<StudyRow>,
    /// (rho, level, reason) for rows that failed
    pub failures: Vec<(f64, u32, String)>,
    pub csv: String,
    pub table: String,
}

/// Solves one (rho, level) configuration.
pub fn run_single(config: &ExperimentConfig, rho: f64, level: u32) -> Result<(PolygonalMesh, WgSolution, ErrorReport)> {
    let mesh = generate_mesh(&MeshFamily::new(config.family, level));
    let space = config.space()?;
    let problem = config.solution.problem(rho)?;
    let system = assemble(&mesh, &problem, &space)?;
    let solution = match config.solver {
        SolverKind::Full => solve(&system)?,
        SolverKind::Condensed => {
            let condensed = static_condense(&system)?;
            solve_condensed(&system, &condensed)?
        }
    };
    let report = norms::table_errors(&mesh, &problem, &space, &solution)?;
    Ok((mesh, solution, report))
}

/// Runs the sweep and renders outputs. Failures abort their row only.
pub fn run(config: &ExperimentConfig) -> Result<StudyOutput> {
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    if config.levels.is_empty() {
        eprintln!("warning: empty levels list; nothing to do");
    }
    for &rho in &config.rho_list {
        for &level in &config.levels {
            match run_single(config, rho, level) {
                Ok((_, _, report)) => rows.push(StudyRow { rho, level, report }),
                Err(e) => failures.push((rho, level, e.to_string())),
            }
        }
    }
    let csv = render_csv(config, &rows);
    let table = render_table(config, &rows);
    Ok(StudyOutput {
        rows,
        failures,
        csv,
        table,
    })
}

fn fmt_order(o: Option<f64>) -> String {
    match o {
        Some(v) => format!("{v:.1}"),
        None => "---".into(),
    }
}

fn render_csv(config: &ExperimentConfig, rows: &[StudyRow]) -> String {
    let mut out = String::from(
        "family,level,h,k,q,r,rho,dofs,l2_err,l2_order,grad_err,grad_order,energy_err,solve_ms\n",
    );
    for &rho in &config.rho_list {
        let block: Vec<&StudyRow> = rows.iter().filter(|r| r.rho == rho).collect();
        let l2: Vec<f64> = block.iter().map(|r| r.report.l2_error).collect();
        let grad: Vec<f64> = block.iter().map(|r| r.report.weighted_grad_error).collect();
        let l2_orders = norms::convergence_orders(&l2);
        let grad_orders = norms::convergence_orders(&grad);
        for (i, row) in block.iter().enumerate() {
            let l2o = if i == 0 { String::new() } else { fmt_order(l2_orders[i - 1]) };
            let gro = if i == 0 { String::new() } else { fmt_order(grad_orders[i - 1]) };
            writeln!(
                out,
                "{},{},{:.12e},{},{},{},{:e},{},{:.12e},{},{:.12e},{},{:.12e},{:.3}",
                config.family,
                row.level,
                row.report.h,
                config.k,
                config.q,
                config.r_label(),
                rho,
                row.report.dofs,
                row.report.l2_error,
                l2o,
                row.report.weighted_grad_error,
                gro,
                row.report.energy_error,
                row.report.solve_ms
            )
            .unwrap();
        }
    }
    out
}

fn render_table(config: &ExperimentConfig, rows: &[StudyRow]) -> String {
    let mut out = String::new();
    writeln!(
        out,
        "P{}-P{}/P{} elements, {} grids, solution {}",
        config.k,
        config.q,
        config.r_label(),
        config.family,
        config.solution.as_str()
    )
    .unwrap();
    for &rho in &config.rho_list {
        let block: Vec<&StudyRow> = rows.iter().filter(|r| r.rho == rho).collect();
        if block.is_empty() {
            continue;
        }
        writeln!(out, "\nrho = {rho:e}\n").unwrap();
        writeln!(
            out,
            "| G_i | ||Q_h u - u_h|| | order | sqrt(rho)||grad_w(Q_h u - u_h)|| | order |"
        )
        .unwrap();
        writeln!(out, "|----:|----------------:|------:|---------------------------------:|------:|").unwrap();
        let l2: Vec<f64> = block.iter().map(|r| r.report.l2_error).collect();
        let grad: Vec<f64> = block.iter().map(|r| r.report.weighted_grad_error).collect();
        let l2_orders = norms::convergence_orders(&l2);
        let grad_orders = norms::convergence_orders(&grad);
        for (i, row) in block.iter().enumerate() {
            let l2o = if i == 0 { "     ".into() } else { fmt_order(l2_orders[i - 1]) };
            let gro = if i == 0 { "     ".into() } else { fmt_order(grad_orders[i - 1]) };
            writeln!(
                out,
                "| {} | {:.3e} | {} | {:.3e} | {} |",
                row.level, row.report.l2_error, l2o, row.report.weighted_grad_error, gro
            )
            .unwrap();
        }
    }
    out
}

/// Writes `content` to `path` atomically (temp file + rename).
pub fn write_atomic(path: &Path, content: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, content)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

/// Writes the study outputs into `out_dir` per the config's paths.
pub fn write_outputs(config: &ExperimentConfig, out_dir: &Path, output: &StudyOutput) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    if let Some(p) = &config.csv_path {
        let path = out_dir.join(p);
        write_atomic(&path, &output.csv)?;
        written.push(path);
    }
    if let Some(p) = &config.table_path {
        let path = out_dir.join(p);
        write_atomic(&path, &output.table)?;
        written.push(path);
    }
    Ok(written)
}

/// Samples u_0 on a per-element raster and u_b along edges, in plain
/// `x y z` blocks separated by blank lines (gnuplot-style).
pub fn sample_solution(
    mesh: &PolygonalMesh,
    space: &WgSpace,
    solution: &WgSolution,
    resolution: usize,
) -> Result<String> {
    let dofs = DofMap::new(mesh, space);
    let n = resolution.max(2);
    let blocks: Vec<Result<String>> = crate::util::map_indexed(mesh.n_elements(), |el| {
        let ctx = ElementContext::build(mesh, space, el)?;
        let poly = &ctx.polygon;
        let (mut x0, mut y0, mut x1, mut y1) = (f64::MAX, f64::MAX, f64::MIN, f64::MIN);
        for p in poly {
            x0 = x0.min(p.x);
            y0 = y0.min(p.y);
            x1 = x1.max(p.x);
            y1 = y1.max(p.y);
        }
        let off = dofs.element_offset(el);
        let coeffs = &solution.coeffs[off..off + dofs.dim_pk];
        let mut block = String::new();
        for i in 0..=n {
            for j in 0..=n {
                let p = Point::new(
                    x0 + (x1 - x0) * i as f64 / n as f64,
                    y0 + (y1 - y0) * j as f64 / n as f64,
                );
                // keep strictly interior raster points plus the vertices
                if !geometry::point_in_polygon(p, poly) {
                    continue;
                }
                let v = ctx.basis_k.eval(&[p]);
                let mut z = 0.0;
                for m in 0..dofs.dim_pk {
                    z += coeffs[m] * v[(0, m)];
                }
                writeln!(block, "{:.9e} {:.9e} {:.9e}", p.x, p.y, z).unwrap();
            }
        }
        Ok(block)
    });

    let mut out = String::new();
    for b in blocks {
        let b = b?;
        if !b.is_empty() {
            out.push_str(&b);
            out.push('\n');
        }
    }
    // u_b along each edge
    for edge in 0..mesh.n_edges() {
        let (a, b) = mesh.edge_endpoints(edge);
        let ebasis = crate::basis::EdgeBasis::new(space.q, a, b);
        let off = dofs.edge_offset_full(edge);
        let coeffs = &solution.coeffs[off..off + dofs.edge_block];
        let params: Vec<f64> = (0..=n).map(|i| -1.0 + 2.0 * i as f64 / n as f64).collect();
        let v = ebasis.eval_params(&params);
        for (i, &t) in params.iter().enumerate() {
            let p = (a + b) * 0.5 + (b - a) * (0.5 * t);
            let mut z = 0.0;
            for m in 0..dofs.edge_block {
                z += coeffs[m] * v[(i, m)];
            }
            writeln!(out, "{:.9e} {:.9e} {:.9e}", p.x, p.y, z).unwrap();
        }
        out.push('\n');
    }
    Ok(out)
}

/// Max interior solution magnitude, for overshoot checks on layer problems.
pub fn max_interior_value(
    mesh: &PolygonalMesh,
    space: &WgSpace,
    solution: &WgSolution,
) -> Result<f64> {
    let dofs = DofMap::new(mesh, space);
    let maxima: Vec<Result<f64>> = crate::util::map_indexed(mesh.n_elements(), |el| {
        let ctx = ElementContext::build(mesh, space, el)?;
        let off = dofs.element_offset(el);
        let coeffs = &solution.coeffs[off..off + dofs.dim_pk];
        let mut m = 0.0f64;
        for (i, _) in ctx.quad.points.iter().enumerate() {
            let mut z = 0.0;
            for j in 0..dofs.dim_pk {
                z += coeffs[j] * ctx.vk[(i, j)];
            }
            m = m.max(z.abs());
        }
        Ok(m)
    });
    let mut max = 0.0f64;
    for m in maxima {
        max = max.max(m?);
    }
    Ok(max)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base_config() -> &'static str {
        "family = triangular\nlevels = 2,3\nk = 1\nrho_list = 1\nsolution = u1\ncsv = out.csv\ntable = out.md\n"
    }

    #[test]
    fn parse_round_trip_defaults() {
        let c = ExperimentConfig::parse(base_config()).unwrap();
        assert_eq!(c.family, FamilyKind::Triangular);
        assert_eq!(c.q, 1); // defaults to k
        assert_eq!(c.rdeg, WeakDegree::Fixed(2)); // k+1 on triangular
        assert_eq!(c.levels, vec![2, 3]);
        // nonconvex default is k+2
        let c2 = ExperimentConfig::parse("family = nonconvex\nlevels = 2\nk = 1\n").unwrap();
        assert_eq!(c2.rdeg, WeakDegree::Fixed(3));
    }

    #[test]
    fn parse_rejects_bad_input() {
        assert!(ExperimentConfig::parse("family = hexagonal\nk = 1\n").is_err());
        assert!(ExperimentConfig::parse("family = square\nk = 9\nlevels = 1\n").is_err());
        assert!(ExperimentConfig::parse("family = square\nk = 1\nlevels = 3,2\n").is_err());
        assert!(ExperimentConfig::parse("family = square\nk = 1\nlevels = 2\nbogus = 1\n").is_err());
        assert!(ExperimentConfig::parse("family = square\nk = 1\nlevels = 2\nrho_list = -1\n").is_err());
        // q > k
        assert!(ExperimentConfig::parse("family = square\nk = 1\nq = 2\nlevels = 2\n").is_err());
    }

    #[test]
    fn empty_levels_is_a_noop() {
        let c = ExperimentConfig::parse("family = square\nk = 1\nlevels =\n");
        // "levels =" parses as a single empty token -> error; omit instead
        assert!(c.is_err());
        let c = ExperimentConfig::parse("family = square\nk = 1\n").unwrap();
        assert!(c.levels.is_empty());
        let out = run(&c).unwrap();
        assert!(out.rows.is_empty());
        assert!(out.csv.lines().count() == 1); // header only
    }

    #[test]
    fn study_runs_and_renders() {
        let c = ExperimentConfig::parse(base_config()).unwrap();
        let out = run(&c).unwrap();
        assert_eq!(out.rows.len(), 2);
        assert!(out.failures.is_empty());
        assert_eq!(out.csv.lines().count(), 3);
        // orders column empty on the first row, present on the second
        let second = out.csv.lines().nth(2).unwrap();
        let fields: Vec<&str> = second.split(',').collect();
        assert_eq!(fields[0], "triangular");
        assert!(!fields[9].is_empty(), "l2 order missing: {second}");
        assert!(out.table.contains("| 3 |"));
    }

    #[test]
    fn csv_deterministic_modulo_timing() {
        let c = ExperimentConfig::parse(base_config()).unwrap();
        let a = run(&c).unwrap();
        let b = run(&c).unwrap();
        let strip = |csv: &str| -> String {
            csv.lines()
                .map(|l| l.rsplit_once(',').map(|(head, _)| head.to_string()).unwrap_or_default())
                .collect::<Vec<_>>()
                .join("\n")
        };
        assert_eq!(strip(&a.csv), strip(&b.csv));
        assert_eq!(a.table, b.table);
    }

    #[test]
    fn zero_solution_samples_are_zero() {
        let mesh = generate_mesh(&MeshFamily::new(FamilyKind::Square, 1));
        let space = WgSpace::family_default(1, 1, FamilyKind::Square).unwrap();
        let dofs = DofMap::new(&mesh, &space);
        let solution = WgSolution {
            coeffs: vec![0.0; dofs.full_dim],
            residual: 0.0,
            solve_ms: 0.0,
        };
        let text = sample_solution(&mesh, &space, &solution, 4).unwrap();
        for line in text.lines().filter(|l| !l.is_empty()) {
            let z: f64 = line.split_whitespace().nth(2).unwrap().parse().unwrap();
            assert_eq!(z, 0.0);
        }
        assert!(text.contains("\n\n"), "blocks must be blank-line separated");
    }
}
