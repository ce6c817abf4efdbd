use std::fs;
use std::path::{Path, PathBuf};

use gaussalign::cluster::{self, DistanceMatrix, PairwiseMode};
use gaussalign::gaussian::fit_gaussian;
use gaussalign::io::{self, matrix_rows, read_gaussian, read_matrix_csv};
use gaussalign::multimarginal::{self, MultiCoupling};
use gaussalign::{igw, spectra, transport, DMatrix, Error, Gaussian, Result, SolverConfig, WeightedCollection};
use serde_json::{json, Value};

use crate::report::{check_finite, to_value, InputDigest, RunReport, Timings, SCHEMA};
use crate::{Cli, Command, IgwMethod, RgdArgs, RtrArgs};

/// Singular values below this fraction of the largest count as zero when
/// reporting coupling ranks.
const RANK_TOL: f64 = 1e-8;

struct Ctx {
    seed: u64,
    inputs: Vec<InputDigest>,
    warnings: Vec<String>,
    timings: Timings,
}

impl Ctx {
    fn digest(&mut self, path: &Path) -> Result<()> {
        self.inputs.push(InputDigest::of_file(path)?);
        Ok(())
    }

    fn gaussian(&mut self, path: &Path) -> Result<Gaussian> {
        self.digest(path)?;
        read_gaussian(path)
    }

    fn gaussians(&mut self, paths: &[PathBuf]) -> Result<Vec<Gaussian>> {
        paths.iter().map(|p| self.gaussian(p)).collect()
    }

    fn matrix(&mut self, path: &Path, header: bool) -> Result<DMatrix<f64>> {
        self.digest(path)?;
        read_matrix_csv(path, header)
    }
}

pub fn execute(cli: Cli) -> Result<()> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Error::InvalidInput("--threads must be positive".into()));
        }
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| Error::InvalidInput(format!("cannot start worker threads: {e}")))?;
    pool.install(|| execute_in_pool(cli))
}

fn execute_in_pool(cli: Cli) -> Result<()> {
    let mut ctx = Ctx { seed: cli.seed, inputs: Vec::new(), warnings: Vec::new(), timings: Timings::default() };
    let name = command_name(&cli.command);
    let (result, out) = dispatch(cli.command, &mut ctx)?;
    check_finite(&result, "result")?;
    let report = RunReport {
        schema: SCHEMA,
        command: name.to_string(),
        seed: ctx.seed,
        inputs: ctx.inputs,
        result,
        warnings: ctx.warnings,
        timings: cli.timings.then(|| ctx.timings.into_map()),
    };
    let text = report.to_json();
    match out {
        Some(path) => write_file(&path, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Fit { .. } => "fit",
        Command::W2 { .. } => "w2",
        Command::Igw { .. } => "igw",
        Command::IgwBarycenter { .. } => "igw-barycenter",
        Command::Mmot { .. } => "mmot",
        Command::MmIgw { .. } => "mm-igw",
        Command::Cluster { .. } => "cluster",
        Command::Mds { .. } => "mds",
        Command::Cka { .. } => "cka",
        Command::BenchMmot { .. } => "bench-mmot",
    }
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|source| Error::Io { path: path.display().to_string(), source })
}

fn gaussian_value(g: &Gaussian) -> Value {
    json!({ "mean": g.mean().as_slice(), "cov": matrix_rows(g.cov()) })
}

fn rgd_config(args: &RgdArgs, seed: u64) -> SolverConfig {
    SolverConfig {
        max_iters: args.max_iters,
        grad_tol: args.grad_tol,
        restarts: args.restarts,
        seed,
        ..SolverConfig::rgd()
    }
}

fn rtr_config(args: &RtrArgs, seed: u64) -> SolverConfig {
    SolverConfig {
        max_iters: args.max_iters,
        grad_tol: args.grad_tol,
        restarts: args.restarts,
        seed,
        ..SolverConfig::rtr()
    }
}

fn weights_or_uniform(weights: Option<Vec<f64>>, n: usize) -> Vec<f64> {
    weights.unwrap_or_else(|| vec![1.0 / n as f64; n])
}

fn dispatch(command: Command, ctx: &mut Ctx) -> Result<(Value, Option<PathBuf>)> {
    match command {
        Command::Fit { input, ridge, header, out } => {
            let samples = ctx.matrix(&input, header)?;
            let g = ctx.timings.time("fit", || fit_gaussian(&samples, ridge))?;
            let mut result = json!({
                "dim": g.dim(),
                "samples": samples.nrows(),
                "ridge": ridge,
                "gaussian": gaussian_value(&g),
            });
            if let Some(path) = out {
                io::write_gaussian(&path, &g)?;
                result["written"] = json!(path.display().to_string());
            }
            Ok((result, None))
        }
        Command::W2 { a, b, times, out } => {
            let (g1, g2) = (ctx.gaussian(&a)?, ctx.gaussian(&b)?);
            let (d2, map) = ctx.timings.time("solve", || {
                Ok::<_, Error>((transport::bw_distance_squared(&g1, &g2)?, transport::bw_map(&g1, &g2)?))
            })?;
            let path = times
                .iter()
                .map(|&t| {
                    let g = transport::displacement_interpolation(&g1, &map, t)?;
                    Ok(json!({ "t": t, "mean": g.mean().as_slice(), "cov": matrix_rows(g.cov()) }))
                })
                .collect::<Result<Vec<_>>>()?;
            let result = json!({
                "distance": d2.max(0.0).sqrt(),
                "distance_sq": d2,
                "map": {
                    "matrix": matrix_rows(&map.matrix),
                    "pivot": map.pivot.as_slice(),
                    "offset": map.offset.as_slice(),
                },
                "interpolation": path,
            });
            Ok((result, out.out))
        }
        Command::Igw { a, b, method, solver, out } => {
            let (g1, g2) = (ctx.gaussian(&a)?, ctx.gaussian(&b)?);
            let bounds = igw::igw_bounds(&g1, &g2)?;
            let mut result = json!({ "method": format!("{method:?}").to_lowercase(), "bounds": to_value(&bounds) });
            match method {
                IgwMethod::Bounds => {}
                IgwMethod::Closed => {
                    let (d, case) = igw::igw_closed_form_with_case(&g1, &g2)?.ok_or_else(|| {
                        Error::Unsupported(
                            "no closed form applies (inputs are neither centered, univariate nor co-centered); use --method rgd"
                                .into(),
                        )
                    })?;
                    result["distance"] = json!(d);
                    result["case"] = to_value(&case);
                }
                IgwMethod::Rgd => {
                    let cfg = rgd_config(&solver, ctx.seed);
                    let est = ctx.timings.time("rgd", || igw::igw_distance_rgd(&g1, &g2, &cfg))?;
                    let s = &est.solution;
                    if !s.converged {
                        ctx.warnings.push(format!(
                            "gradient ascent stopped after {} iterations with gradient norm {:e} (> {:e})",
                            s.iterations, s.grad_norm, cfg.grad_tol
                        ));
                    }
                    result["distance"] = json!(est.distance);
                    result["gamma"] = json!(s.gamma);
                    result["iterations"] = json!(s.iterations);
                    result["grad_norm"] = json!(s.grad_norm);
                    result["converged"] = json!(s.converged);
                    result["swapped"] = json!(est.swapped);
                    result["frame"] = json!(matrix_rows(s.c.matrix()));
                }
            }
            Ok((result, out.out))
        }
        Command::IgwBarycenter { inputs, weights, dim, out } => {
            let gs = ctx.gaussians(&inputs)?;
            let d = dim.unwrap_or_else(|| gs.iter().map(Gaussian::dim).max().unwrap_or(0));
            let col = WeightedCollection::new(gs, weights_or_uniform(weights, inputs.len()))?;
            let bary = ctx.timings.time("barycenter", || igw::igw_barycenter(&col, d))?;
            let spectrum: Vec<f64> = bary.cov().diagonal().iter().copied().collect();
            Ok((json!({ "dim": d, "spectrum": spectrum, "barycenter": gaussian_value(&bary) }), out.out))
        }
        Command::Mmot { inputs, weights, solver, csv, out } => {
            let gs = ctx.gaussians(&inputs)?;
            let weights = weights_or_uniform(weights, gs.len());
            let cfg = rtr_config(&solver, ctx.seed);
            let coupling = ctx.timings.time("solve", || multimarginal::mm_ot_solve(&gs, &cfg))?;
            let bary = ctx.timings.time("barycenter", || multimarginal::barycenter_from_mm(&coupling, &weights))?;
            let mut result = coupling_value(&coupling, &gs, ctx)?;
            result["weights"] = json!(weights);
            result["barycenter"] = gaussian_value(&bary);
            if let Some(path) = csv {
                write_file(&path, &io::matrix_to_csv(&coupling.stacked_covariance()))?;
            }
            Ok((result, out.out))
        }
        Command::MmIgw { inputs, csv, out } => {
            let gs = ctx.gaussians(&inputs)?;
            let coupling = ctx.timings.time("solve", || multimarginal::mm_igw_closed_form(&gs))?;
            let result = coupling_value(&coupling, &gs, ctx)?;
            if let Some(path) = csv {
                write_file(&path, &io::matrix_to_csv(&coupling.stacked_covariance()))?;
            }
            Ok((result, out.out))
        }
        Command::Cluster { dir, k, max_iters, ridge, header, drop_means, matrix, csv, out } => {
            let (names, gs) = load_dir(&dir, ridge, header, drop_means, ctx)?;
            let seed = ctx.seed;
            let fit = ctx.timings.time("kmeans", || cluster::kmeans_igw(&gs, k, seed, max_iters))?;
            let centers: Vec<Vec<f64>> =
                fit.centers.iter().map(|c| c.cov().diagonal().iter().copied().collect()).collect();
            let mut result = json!({
                "files": names,
                "k": k,
                "labels": fit.labels,
                "inertia": fit.inertia,
                "inertia_trace": fit.inertia_trace,
                "iterations": fit.iterations,
                "center_spectra": centers,
            });
            if fit.iterations >= max_iters {
                ctx.warnings
                    .push(format!("k-means stopped at the iteration cap ({max_iters}) before the labels settled"));
            }
            if let Some(mode) = matrix {
                let cfg = SolverConfig::rgd().with_seed(ctx.seed);
                let dm = pairwise(&gs, &cfg, mode.into(), ctx)?;
                result["matrix_mode"] = to_value(&PairwiseMode::from(mode));
                result["matrix"] = json!(matrix_rows(dm.entries()));
                if let Some(path) = csv {
                    write_file(&path, &io::matrix_to_csv(dm.entries()))?;
                }
            }
            Ok((result, out.out))
        }
        Command::Mds { matrix, dir, dim, pairwise: mode, ridge, header, drop_means, solver, csv, out } => {
            let mut result = json!({});
            let dm = match (matrix, dir) {
                (Some(path), _) => DistanceMatrix::new(ctx.matrix(&path, header)?)?,
                (None, Some(dir)) => {
                    let (names, gs) = load_dir(&dir, ridge, header, drop_means, ctx)?;
                    result["files"] = json!(names);
                    result["pairwise"] = to_value(&PairwiseMode::from(mode));
                    pairwise(&gs, &rgd_config(&solver, ctx.seed), mode.into(), ctx)?
                }
                (None, None) => return Err(Error::InvalidInput("give --matrix or --dir".into())),
            };
            let emb = ctx.timings.time("mds", || cluster::classical_mds(&dm, dim))?;
            if emb.negative_mass > 1e-8 {
                ctx.warnings.push(format!(
                    "distance matrix is not Euclidean: negative eigenvalues carry {:.3e} of the spectrum",
                    emb.negative_mass
                ));
            }
            result["dim"] = json!(dim);
            result["coords"] = json!(matrix_rows(&emb.coords));
            result["eigenvalues"] = json!(emb.eigenvalues);
            result["negative_mass"] = json!(emb.negative_mass);
            if let Some(path) = csv {
                write_file(&path, &io::matrix_to_csv(&emb.coords))?;
            }
            Ok((result, out.out))
        }
        Command::Cka { x, y, header, center, out } => {
            let (mx, my) = (ctx.matrix(&x, header)?, ctx.matrix(&y, header)?);
            let v = cluster::cka(&mx, &my, center)?;
            Ok((json!({ "cka": v, "centered": center, "rows": mx.nrows() }), out.out))
        }
        Command::BenchMmot { p, d, solver, csv, out } => {
            let cfg = rtr_config(&solver, ctx.seed);
            let mut rows = Vec::with_capacity(p.len());
            let mut table = String::from(
                "p,d,status,objective,glued_objective,marginal_error,min_eig_ratio,rank,grad_norm,hess_min_eig\n",
            );
            for &np in &p {
                let gs = multimarginal::random_marginals(np, d, ctx.seed);
                let coupling = ctx.timings.time(format!("p={np}"), || multimarginal::mm_ot_solve(&gs, &cfg))?;
                let glued = multimarginal::glued_coupling(&gs)?;
                let mut row = coupling_value(&coupling, &gs, ctx)?;
                row["p"] = json!(np);
                row["glued_objective"] = json!(glued.cross_trace());
                let cert = coupling.certificate.expect("solver couplings carry a certificate");
                table.push_str(&format!(
                    "{np},{d},{},{:?},{:?},{:?},{:?},{},{:?},{:?}\n",
                    status_name(&coupling),
                    coupling.cross_trace(),
                    glued.cross_trace(),
                    row["marginal_error"].as_f64().unwrap_or(f64::NAN),
                    row["min_eig_ratio"].as_f64().unwrap_or(f64::NAN),
                    row["rank"],
                    cert.grad_norm,
                    cert.hess_min_eig_estimate,
                ));
                rows.push(row);
            }
            if let Some(path) = csv {
                write_file(&path, &table)?;
            }
            Ok((json!({ "d": d, "runs": rows }), out.out))
        }
    }
}

fn status_name(c: &MultiCoupling) -> String {
    to_value(&c.status).as_str().unwrap_or_default().to_string()
}

/// Summary of a multimarginal coupling: objective, feasibility and
/// certificate. Adds a warning when optimality is not certified.
fn coupling_value(c: &MultiCoupling, gs: &[Gaussian], ctx: &mut Ctx) -> Result<Value> {
    let stacked = c.stacked_covariance();
    let eig = spectra::sym_eigenvalues(&stacked)?;
    let (lo, hi) = eig.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &l| (lo.min(l), hi.max(l)));
    let rank = eig.iter().filter(|&&l| l > RANK_TOL * hi.max(0.0)).count();
    if !c.is_certified() {
        ctx.warnings
            .push(format!("multimarginal solution for p = {} is not certified globally optimal", c.num_marginals()));
    }
    let marginal_error = if gs.iter().all(|g| g.dim() == c.dim()) { c.marginal_error(gs) } else { 0.0 };
    let mut v = json!({
        "status": status_name(c),
        "certified": c.is_certified(),
        "marginals": c.num_marginals(),
        "dim": c.dim(),
        "cost": c.cost,
        "objective": c.cross_trace(),
        "marginal_error": marginal_error,
        "min_eig_ratio": if hi > 0.0 { lo / hi } else { 0.0 },
        "rank": rank,
    });
    if let Some(r) = &c.certificate {
        v["certificate"] = to_value(r);
    }
    Ok(v)
}

fn pairwise(gs: &[Gaussian], cfg: &SolverConfig, mode: PairwiseMode, ctx: &mut Ctx) -> Result<DistanceMatrix> {
    let dm = ctx.timings.time("pairwise", || cluster::pairwise_igw_matrix(gs, cfg, mode))?;
    let violations = dm.triangle_violations(1e-8);
    if !violations.is_empty() {
        ctx.warnings.push(format!("{} triangle-inequality violations in the distance matrix", violations.len()));
    }
    Ok(dm)
}

/// Reads every `.json` (Gaussian) and `.csv` (point cloud, fitted with
/// `ridge`) file in `dir`, sorted by file name.
fn load_dir(
    dir: &Path,
    ridge: f64,
    header: bool,
    drop_means: bool,
    ctx: &mut Ctx,
) -> Result<(Vec<String>, Vec<Gaussian>)> {
    let entries = fs::read_dir(dir).map_err(|source| Error::Io { path: dir.display().to_string(), source })?;
    let mut paths = Vec::new();
    for entry in entries {
        let path = entry.map_err(|source| Error::Io { path: dir.display().to_string(), source })?.path();
        match path.extension().and_then(|e| e.to_str()) {
            Some("json") | Some("csv") => paths.push(path),
            _ => {}
        }
    }
    paths.sort();
    if paths.is_empty() {
        return Err(Error::EmptyInput(format!("no .json or .csv files in {}", dir.display())));
    }
    let mut names = Vec::with_capacity(paths.len());
    let mut gs = Vec::with_capacity(paths.len());
    for path in &paths {
        let g = if path.extension().and_then(|e| e.to_str()) == Some("csv") {
            fit_gaussian(&ctx.matrix(path, header)?, ridge)?
        } else {
            ctx.gaussian(path)?
        };
        gs.push(if drop_means { Gaussian::centered(g.cov().clone())? } else { g });
        names.push(path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default());
    }
    Ok((names, gs))
}
