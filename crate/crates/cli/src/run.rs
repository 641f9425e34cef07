//! Mode execution: assemble -> solve -> far field, convergence tables with
//! monotonicity flagging, and the on-disk reference cache used by
//! self-convergence runs.

use std::fs;
use std::io::{self, Write as _};
use std::path::Path;
use std::time::Instant;

use escat_core::assembly::{assemble_system, AssemblyContext};
use escat_core::fields::{
    error_sup, exact_pointsource_farfield_grid, farfield_from_densities, FarField, IncidentField,
    ObservationGrid,
};
use escat_core::geometry::Surface;
use escat_core::kernels::ElasticMedium;
use escat_core::solver::HarmonicCoefficients;
use nalgebra::Vector3;
use num_complex::Complex64;

use crate::config::{Mode, RunConfig};

type Result<T> = std::result::Result<T, Box<dyn std::error::Error + Send + Sync>>;

pub fn run(cfg: &RunConfig) -> Result<()> {
    match cfg.mode {
        Mode::Solve => run_solve(cfg),
        Mode::PointsourceTest | Mode::PlanewaveSelfconvergence | Mode::ConvergenceTable => {
            run_table(cfg)
        }
    }
}

fn medium(cfg: &RunConfig) -> Result<ElasticMedium> {
    Ok(ElasticMedium::new(cfg.omega, cfg.lambda, cfg.mu)?)
}

fn incident(cfg: &RunConfig, med: ElasticMedium) -> IncidentField {
    match cfg.incidence {
        crate::config::Incidence::PointSource => {
            IncidentField::point_source(med, cfg.source, cfg.polarization)
        }
        crate::config::Incidence::PlaneElastic => {
            IncidentField::plane_elastic(med, cfg.direction, cfg.polarization)
        }
        crate::config::Incidence::PlaneP => IncidentField::plane_p(med, cfg.direction),
        crate::config::Incidence::PlaneS => {
            IncidentField::plane_s(med, cfg.direction, cfg.polarization)
        }
    }
}

struct SolveOutput {
    coeffs: HarmonicCoefficients,
    far: FarField,
    t_coe: f64,
    t_sol: f64,
}

/// One full pipeline pass at ansatz order n. The incident amplitude scales
/// the right-hand side; amplitude 0 short-circuits to the zero solution in
/// the solver.
fn solve_at(cfg: &RunConfig, n: usize, nprime: usize) -> Result<SolveOutput> {
    let surface = Surface::by_name(&cfg.geometry)?;
    let med = medium(cfg)?;
    let ctx = AssemblyContext::new(surface.clone(), med, n, nprime)?;
    let inc = incident(cfg, med);

    let t0 = Instant::now();
    let mut system = assemble_system(&ctx, &inc)?;
    let t_coe = t0.elapsed().as_secs_f64();

    let amp = Complex64::from(cfg.amplitude);
    for r in 0..system.b.nrows() {
        system.b[(r, 0)] *= amp;
    }

    let t1 = Instant::now();
    let coeffs = escat_core::solver::solve(&system, &surface)?;
    let t_sol = t1.elapsed().as_secs_f64();

    let grid = ObservationGrid::equally_spaced(cfg.obs_grid.0, cfg.obs_grid.1);
    let far = farfield_from_densities(&coeffs, &med, &grid)?;
    Ok(SolveOutput {
        coeffs,
        far,
        t_coe,
        t_sol,
    })
}

fn run_solve(cfg: &RunConfig) -> Result<()> {
    let n = cfg.orders[0];
    let nprime = cfg.nprime.unwrap_or(2 * n + 1);
    let out = solve_at(cfg, n, nprime)?;
    eprintln!(
        "n = {n}: T_coe = {:.3} s, T_sol = {:.3} s",
        out.t_coe, out.t_sol
    );
    ensure_parent(&cfg.out).map_err(|e| at_path(&cfg.out, e))?;
    out.far
        .write_csv(&cfg.out)
        .map_err(|e| at_path(&cfg.out, e))?;
    eprintln!("wrote far field to {}", cfg.out.display());
    if let Some(path) = &cfg.coeffs_out {
        ensure_parent(path).map_err(|e| at_path(path, e))?;
        out.coeffs.write_csv(path).map_err(|e| at_path(path, e))?;
        eprintln!("wrote density coefficients to {}", path.display());
    }
    Ok(())
}

fn run_table(cfg: &RunConfig) -> Result<()> {
    let med = medium(cfg)?;
    let grid = ObservationGrid::equally_spaced(cfg.obs_grid.0, cfg.obs_grid.1);
    let (reference, label) = if cfg.incidence.is_plane() {
        (reference_farfield(cfg)?, "||eps_pw||_inf")
    } else {
        // Manufactured problem: the scattered field of an interior source
        // must reproduce the source's own far field, known in closed form.
        let exact =
            exact_pointsource_farfield_grid(&med, &cfg.source, &cfg.polarization.normalize(), &grid);
        (scaled(&exact, cfg.amplitude), "||eps_ps||_inf")
    };

    let mut rows = Vec::with_capacity(cfg.orders.len());
    for &n in &cfg.orders {
        let nprime = cfg.nprime.unwrap_or(2 * n + 1);
        let out = solve_at(cfg, n, nprime)?;
        let error = error_sup(&out.far, &reference)?;
        eprintln!(
            "n = {n}: error = {error:.4e}, T_coe = {:.3} s, T_sol = {:.3} s",
            out.t_coe, out.t_sol
        );
        rows.push(Row {
            n,
            error,
            t_coe: out.t_coe,
            t_sol: out.t_sol,
        });
    }
    emit_convergence_table(&rows, label, &cfg.out).map_err(|e| at_path(&cfg.out, e))?;
    eprintln!("wrote table csv to {}", cfg.out.display());
    Ok(())
}

fn at_path(path: &Path, e: io::Error) -> Box<dyn std::error::Error + Send + Sync> {
    format!("{}: {e}", path.display()).into()
}

pub struct Row {
    pub n: usize,
    pub error: f64,
    pub t_coe: f64,
    pub t_sol: f64,
}

/// Human-readable table on stdout plus a CSV copy; rows where the error
/// failed to decrease are marked '!' and counted in the return value.
fn emit_convergence_table(rows: &[Row], error_label: &str, out: &Path) -> io::Result<usize> {
    println!(
        "{:>6}  {:>16}  {:>11}  {:>11}",
        "n", error_label, "T_coe [s]", "T_sol [s]"
    );
    let mut violations = 0;
    for (i, row) in rows.iter().enumerate() {
        let mark = if i > 0 && row.error >= rows[i - 1].error {
            violations += 1;
            " !"
        } else {
            ""
        };
        println!(
            "{:>6}  {:>16}  {:>11.3}  {:>11.3}",
            row.n,
            format!("{:.4e}{mark}", row.error),
            row.t_coe,
            row.t_sol
        );
    }
    if violations > 0 {
        eprintln!(
            "warning: error column is not monotonically decreasing ({violations} increase(s) marked '!')"
        );
    }
    ensure_parent(out)?;
    let mut file = io::BufWriter::new(fs::File::create(out)?);
    writeln!(file, "n,error,t_coe_s,t_sol_s")?;
    for row in rows {
        writeln!(
            file,
            "{},{:.16e},{:.6e},{:.6e}",
            row.n, row.error, row.t_coe, row.t_sol
        )?;
    }
    Ok(violations)
}

/// Reference far field for self-convergence, cached on disk and keyed by
/// (geometry, omega, n*); a sidecar meta file pins the remaining physical
/// setup so a stale reference is recomputed instead of silently reused.
/// The reference always uses its own inner rule 2 n* + 1.
fn reference_farfield(cfg: &RunConfig) -> Result<FarField> {
    let nstar = cfg.reference_n.expect("validated by config");
    let nprime_star = 2 * nstar + 1;
    fs::create_dir_all(&cfg.cache_dir).map_err(|e| at_path(&cfg.cache_dir, e))?;
    let base = format!("{}-omega{:.12e}-n{}", cfg.geometry, cfg.omega, nstar);
    let csv = cfg.cache_dir.join(format!("{base}.csv"));
    let meta = cfg.cache_dir.join(format!("{base}.meta"));
    let want_meta = meta_string(cfg, nstar, nprime_star);

    if let Ok(have) = fs::read_to_string(&meta) {
        if have == want_meta {
            match read_farfield_csv(&csv) {
                Ok(far)
                    if far.grid.thetas.len() == cfg.obs_grid.0
                        && far.grid.phis.len() == cfg.obs_grid.1 =>
                {
                    eprintln!("reference n* = {nstar}: loaded from cache ({})", csv.display());
                    return Ok(far);
                }
                Ok(_) => eprintln!("reference cache has the wrong grid, recomputing"),
                Err(e) => eprintln!("reference cache unreadable ({e}), recomputing"),
            }
        }
    }

    eprintln!("reference n* = {nstar}: computing");
    let out = solve_at(cfg, nstar, nprime_star)?;
    eprintln!(
        "reference n* = {nstar}: T_coe = {:.3} s, T_sol = {:.3} s",
        out.t_coe, out.t_sol
    );
    out.far.write_csv(&csv).map_err(|e| at_path(&csv, e))?;
    // Meta written last: a crash mid-write leaves no valid-looking cache.
    fs::write(&meta, want_meta).map_err(|e| at_path(&meta, e))?;
    eprintln!("reference cached at {}", csv.display());
    Ok(out.far)
}

fn meta_string(cfg: &RunConfig, nstar: usize, nprime_star: usize) -> String {
    let vec = |v: &Vector3<f64>| format!("{:.17e},{:.17e},{:.17e}", v.x, v.y, v.z);
    format!(
        "geometry={}\nomega={:.17e}\nlambda={:.17e}\nmu={:.17e}\nnstar={nstar}\nnprime={nprime_star}\n\
         incidence={:?}\ndirection={}\npolarization={}\namplitude={:.17e}\nobs_grid={}x{}\n",
        cfg.geometry,
        cfg.omega,
        cfg.lambda,
        cfg.mu,
        cfg.incidence,
        vec(&cfg.direction),
        vec(&cfg.polarization),
        cfg.amplitude,
        cfg.obs_grid.0,
        cfg.obs_grid.1,
    )
}

fn scaled(far: &FarField, a: f64) -> FarField {
    let s = Complex64::from(a);
    FarField {
        grid: far.grid.clone(),
        vp: far.vp.iter().map(|v| v.map(|c| c * s)).collect(),
        vs: far.vs.iter().map(|v| v.map(|c| c * s)).collect(),
    }
}

const FARFIELD_HEADER: &str = "theta,phi,vp1_re,vp1_im,vp2_re,vp2_im,vp3_re,vp3_im,\
                               vs1_re,vs1_im,vs2_re,vs2_im,vs3_re,vs3_im";

/// Inverse of FarField::write_csv; the 17-significant-digit formatting there
/// round-trips f64 exactly, so the parsed grid matches bit for bit.
fn read_farfield_csv(path: &Path) -> io::Result<FarField> {
    let bad = |msg: String| io::Error::new(io::ErrorKind::InvalidData, msg);
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == FARFIELD_HEADER => {}
        _ => return Err(bad(format!("{}: missing far-field header", path.display()))),
    }

    let mut thetas: Vec<f64> = Vec::new();
    let mut phis: Vec<f64> = Vec::new();
    let mut vp = Vec::new();
    let mut vs = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<f64> = line
            .split(',')
            .map(|t| t.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| bad(format!("{}: row {}: {e}", path.display(), i + 1)))?;
        if fields.len() != 14 {
            return Err(bad(format!(
                "{}: row {}: expected 14 columns, got {}",
                path.display(),
                i + 1,
                fields.len()
            )));
        }
        let (theta, phi) = (fields[0], fields[1]);
        if thetas.last() != Some(&theta) {
            thetas.push(theta);
        }
        if thetas.len() == 1 {
            phis.push(phi);
        }
        let cv = |k: usize| Complex64::new(fields[k], fields[k + 1]);
        vp.push(Vector3::new(cv(2), cv(4), cv(6)));
        vs.push(Vector3::new(cv(8), cv(10), cv(12)));
    }
    if vp.len() != thetas.len() * phis.len() || vp.is_empty() {
        return Err(bad(format!(
            "{}: {} rows do not fill a {} x {} grid",
            path.display(),
            vp.len(),
            thetas.len(),
            phis.len()
        )));
    }
    Ok(FarField {
        grid: ObservationGrid { thetas, phis },
        vp,
        vs,
    })
}

fn ensure_parent(path: &Path) -> io::Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    Ok(())
}
