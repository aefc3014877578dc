use std::path::Path;

use rbmelt::adjoint::DesiredState;
use rbmelt::forward::{run_forward, run_forward_observed, ForwardOutput, ForwardProblem, RunOptions};
use rbmelt::io::{fmt_num, write_plotdata, CampaignManifest, CsvOut, RunConfig, Snapshot};
use rbmelt::optimize::{
    fd_gradient, lbfgs_minimize_observed, pso_minimize, MeltObjective, Objective, PsoSettings,
};
use rbmelt::{Error, Grid, Result};

/// Critical Rayleigh number of a layer heated from below between rigid walls.
const RA_CRITICAL: f64 = 1707.76;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Method {
    Lbfgs,
    Pso,
}

fn wall(cfg: &RunConfig, grid: &Grid) -> Result<Vec<f64>> {
    match cfg.control.wall {
        Some(w) => Ok(vec![w; grid.nx()]),
        None => cfg.control.basis.wall(grid, &cfg.control.coefficients),
    }
}

fn write_fields(
    out: &Path,
    manifest: &mut CampaignManifest,
    grid: &Grid,
    tag: &str,
    output: &ForwardOutput,
) -> Result<()> {
    let (u, v) = output.state.centered_velocity(grid);
    let time = output.final_time();
    for (name, values) in [
        ("temperature", output.state.temperature.clone()),
        ("phi", output.phi.phi().to_vec()),
        ("u", u),
        ("v", v),
    ] {
        let rel = format!("fields/{name}_{tag}.txt");
        Snapshot::new(grid, time, name, values)?.write(&out.join(&rel))?;
        manifest.add(out, "snapshot", &rel)?;
    }
    Ok(())
}

/// Runs `body`, then seals the manifest as complete or failed. Files written
/// before a failure stay on disk and are listed.
fn campaign(
    command: &str,
    cfg: &RunConfig,
    out: &Path,
    body: impl FnOnce(&mut CampaignManifest) -> Result<()>,
) -> Result<()> {
    std::fs::create_dir_all(out)?;
    std::fs::write(out.join("config.toml"), cfg.to_toml())?;
    let mut manifest = CampaignManifest::start(command, cfg);
    manifest.add(out, "config", "config.toml")?;
    let result = body(&mut manifest);
    let status = if result.is_ok() { "complete" } else { "failed" };
    if let Err(e) = &result {
        manifest.note("error", e.to_string());
    }
    manifest.finish(out, status)?;
    result
}

pub fn forward(cfg: &RunConfig, out: &Path) -> Result<()> {
    let problem = cfg.forward_problem()?;
    let grid = problem.grid;
    let w = wall(cfg, &grid)?;
    problem.params.check_control(&w)?;
    campaign("forward", cfg, out, |manifest| {
        let mut csv = CsvOut::create(&out.join("diagnostics.csv"), &["t", "h_bar", "Ra_e", "max_u", "melted_volume"])?;
        let every = cfg.output.snapshot_every;
        let mut written: Vec<String> = Vec::new();
        let mut io_error: Option<Error> = None;
        let result = run_forward_observed(&problem, &w, RunOptions::default(), &mut |s| {
            if io_error.is_some() {
                return;
            }
            let r = s.row;
            let mut step = || -> Result<()> {
                csv.row(&[r.t, r.h_bar, r.ra_e, r.max_u, r.melted_volume])?;
                if every > 0 && s.step % every == 0 {
                    for (name, values) in [("temperature", &s.state.temperature), ("phi", &s.phi.phi().to_vec())] {
                        let rel = format!("snapshots/{name}_{:06}.txt", s.step);
                        Snapshot::new(&grid, r.t, name, values.clone())?.write(&out.join(&rel))?;
                        written.push(rel);
                    }
                }
                Ok(())
            };
            io_error = step().err();
        });
        csv.finish()?;
        manifest.add(out, "diagnostics", "diagnostics.csv")?;
        for rel in &written {
            manifest.add(out, "snapshot", rel)?;
        }
        if let Some(e) = io_error {
            return Err(e);
        }
        let output = result?;
        write_fields(out, manifest, &grid, "final", &output)?;
        let onset = output
            .diagnostics
            .iter()
            .find(|r| r.ra_e > RA_CRITICAL)
            .map(|r| r.t);
        let max_ra_e = output.diagnostics.iter().map(|r| r.ra_e).fold(0.0, f64::max);
        manifest.note("final_h_bar", output.diagnostics.last().map(|r| r.h_bar));
        manifest.note("max_Ra_e", max_ra_e);
        manifest.note("critical_crossing_time", onset);
        manifest.note("steps", output.steps);
        manifest.note("stopped_early", output.stopped_early);
        println!(
            "forward: {} steps, final h_bar {:e}, max Ra_e {:e} ({})",
            output.steps,
            output.diagnostics.last().map_or(0.0, |r| r.h_bar),
            max_ra_e,
            match onset {
                Some(t) => format!("critical value crossed at t = {t:e}"),
                None => "critical value not reached".into(),
            }
        );
        Ok(())
    })
}

/// Loads or generates the desired final state and stores it with the run.
fn desired_state(
    cfg: &RunConfig,
    problem: &ForwardProblem,
    out: &Path,
    manifest: &mut CampaignManifest,
) -> Result<DesiredState> {
    let grid = problem.grid;
    let t = &cfg.target;
    let desired = if let Some(dir) = &t.dir {
        let temp = Snapshot::read(&dir.join("temperature.txt"))?;
        let phi = Snapshot::read(&dir.join("phi.txt"))?;
        temp.check_grid(&grid)?;
        phi.check_grid(&grid)?;
        DesiredState::new(&grid, temp.values, phi.values)?
    } else {
        let w = match (&t.coefficients, t.wall) {
            (Some(c), _) => cfg.control.basis.wall(&grid, c)?,
            (None, Some(w)) => vec![w; grid.nx()],
            (None, None) => {
                return Err(Error::Domain(
                    "no desired state: set target.dir, target.coefficients or target.wall".into(),
                ))
            }
        };
        DesiredState::from_output(&run_forward(problem, &w, RunOptions::default())?)
    };
    let time = cfg.numerics.t_final;
    for (name, values) in [("temperature", &desired.temperature), ("phi", &desired.phi)] {
        let rel = format!("desired/{name}.txt");
        Snapshot::new(&grid, time, name, values.clone())?.write(&out.join(&rel))?;
        manifest.add(out, "desired", &rel)?;
    }
    Ok(desired)
}

fn objective(cfg: &RunConfig, out: &Path, manifest: &mut CampaignManifest) -> Result<MeltObjective> {
    let problem = cfg.forward_problem()?;
    let desired = desired_state(cfg, &problem, out, manifest)?;
    MeltObjective::new(problem, cfg.control.basis, desired, cfg.cost, cfg.adjoint)
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let n = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    dot / (n(a) * n(b))
}

pub fn gradcheck(cfg: &RunConfig, out: &Path) -> Result<()> {
    if cfg.target.is_empty() {
        return Err(Error::Domain("gradcheck needs a [target] block".into()));
    }
    campaign("gradcheck", cfg, out, |manifest| {
        let obj = objective(cfg, out, manifest)?;
        let grid = obj.problem.grid;
        let a = &cfg.control.coefficients;
        let eval = obj.solve_at(a)?;
        let fd = fd_gradient(&obj, a, cfg.gradcheck.fd_step, cfg.execution)?;
        let mut csv = CsvOut::create(&out.join("gradient.csv"), &["index", "adjoint", "fd", "relative_error"])?;
        let mut worst: f64 = 0.0;
        for (k, (ad, f)) in eval.gradient.iter().zip(&fd).enumerate() {
            let rel = (ad - f).abs() / f.abs();
            worst = worst.max(rel);
            csv.row(&[k as f64, *ad, *f, rel])?;
        }
        csv.finish()?;
        manifest.add(out, "gradient", "gradient.csv")?;
        for (name, values) in [("theta", &eval.adjoint.initial.theta), ("psi", &eval.adjoint.initial.psi)] {
            let rel = format!("adjoint/{name}_initial.txt");
            Snapshot::new(&grid, 0.0, name, values.clone())?.write(&out.join(&rel))?;
            manifest.add(out, "snapshot", &rel)?;
        }
        let cos = cosine(&eval.gradient, &fd);
        manifest.counters = obj.counts().into();
        manifest.note("J", eval.cost.total());
        manifest.note("cosine_similarity", cos);
        manifest.note("max_relative_error", worst);
        manifest.note("fd_step", cfg.gradcheck.fd_step);
        println!("gradcheck: cosine similarity {cos:e}, max relative error {worst:e}");
        Ok(())
    })
}

pub fn optimize(cfg: &RunConfig, out: &Path, method: Method) -> Result<()> {
    if cfg.target.is_empty() {
        return Err(Error::Domain("optimize needs a desired state: add a [target] block".into()));
    }
    campaign("optimize", cfg, out, |manifest| {
        let obj = objective(cfg, out, manifest)?;
        let grid = obj.problem.grid;
        let a0 = cfg.control.coefficients.clone();
        let dim = a0.len();
        manifest.note("method", format!("{method:?}").to_lowercase());
        let best = match method {
            Method::Lbfgs => {
                let mut header = vec!["k".to_string(), "J".into(), "J_over_J0".into(), "grad_norm".into()];
                header.extend((1..=dim).map(|i| format!("a{i}")));
                header.extend(["cost_calls".into(), "gradient_calls".into()]);
                let header: Vec<&str> = header.iter().map(String::as_str).collect();
                let mut csv = CsvOut::create(&out.join("history.csv"), &header)?;
                let mut j0 = None;
                let mut io_error = None;
                let result = lbfgs_minimize_observed(&obj, &a0, &cfg.lbfgs, &mut |rec| {
                    let j0 = *j0.get_or_insert(rec.j);
                    let mut row = vec![rec.k as f64, rec.j, rec.j / j0, rec.grad_norm];
                    row.extend(&rec.a);
                    row.extend([rec.counts.cost as f64, rec.counts.gradient as f64]);
                    if let Err(e) = csv.row(&row) {
                        io_error.get_or_insert(e);
                    }
                });
                csv.finish()?;
                manifest.add(out, "history", "history.csv")?;
                if let Some(e) = io_error {
                    return Err(e);
                }
                let r = result?;
                manifest.counters = r.counts.into();
                manifest.note("stop_reason", r.status);
                manifest.note("iterations", r.history.len() - 1);
                manifest.note("J0", r.history[0].j);
                manifest.note("J", r.j);
                manifest.note("J_over_J0", r.relative_cost());
                println!(
                    "lbfgs: {:?} after {} iterations, J/J0 = {:e}, {} cost and {} gradient calls",
                    r.status,
                    r.history.len() - 1,
                    r.relative_cost(),
                    r.counts.cost,
                    r.counts.gradient
                );
                r.a
            }
            Method::Pso => {
                let j0 = obj.value(&a0)?;
                let settings = PsoSettings {
                    target: None,
                    ..cfg.pso.settings()
                };
                let r = pso_minimize(&obj, &cfg.pso_bounds(), &settings, cfg.execution)?;
                let mut csv = CsvOut::create(&out.join("pso_evals.csv"), &["eval", "J", "best", "J_over_J0"])?;
                for e in &r.evals {
                    csv.row(&[(e.index + 1) as f64, e.j, e.best, e.best / j0])?;
                }
                csv.finish()?;
                manifest.add(out, "pso_evals", "pso_evals.csv")?;
                let mut csv = CsvOut::create(&out.join("pso_generations.csv"), &["generation", "phase", "factor", "best", "evals"])?;
                for g in &r.generations {
                    csv.record(&[
                        g.index.to_string(),
                        format!("{:?}", g.phase).to_lowercase(),
                        fmt_num(g.factor),
                        fmt_num(g.best),
                        g.evals.to_string(),
                    ])?;
                }
                csv.finish()?;
                manifest.add(out, "pso_generations", "pso_generations.csv")?;
                manifest.counters = obj.counts().into();
                manifest.note("J0", j0);
                manifest.note("J", r.j);
                manifest.note("J_over_J0", r.j / j0);
                println!("pso: {} evaluations, J/J0 = {:e}", r.evals.len(), r.j / j0);
                r.a
            }
        };

        let mut csv = CsvOut::create(&out.join("coefficients.csv"), &["index", "value"])?;
        for (k, v) in best.iter().enumerate() {
            csv.row(&[(k + 1) as f64, *v])?;
        }
        csv.finish()?;
        manifest.add(out, "coefficients", "coefficients.csv")?;
        manifest.note("coefficients", &best);

        // final fields, plus the wall adjoint history for the gradient method
        let output = if method == Method::Lbfgs {
            let eval = obj.solve_at(&best)?;
            let mut header = vec!["step".to_string(), "t".into()];
            header.extend((0..grid.nx()).map(|i| format!("c{i}")));
            let header: Vec<&str> = header.iter().map(String::as_str).collect();
            let mut csv = CsvOut::create(&out.join("wall_theta.csv"), &header)?;
            let mut t = 0.0;
            for (n, (row, dt)) in eval.adjoint.wall_theta.iter().zip(&eval.adjoint.dts).enumerate() {
                let mut r = vec![n as f64, t];
                r.extend(row);
                csv.row(&r)?;
                t += dt;
            }
            csv.finish()?;
            manifest.add(out, "wall_theta", "wall_theta.csv")?;
            eval.output
        } else {
            obj.forward(&best, false)?.1
        };
        write_fields(out, manifest, &grid, "final", &output)?;
        let w = cfg.control.basis.wall(&grid, &best)?;
        let mut csv = CsvOut::create(&out.join("wall.csv"), &["x", "w"])?;
        for (i, v) in w.iter().enumerate() {
            csv.row(&[grid.x_centered(i), *v])?;
        }
        csv.finish()?;
        manifest.add(out, "wall", "wall.csv")?;
        Ok(())
    })
}

pub fn plotdata(dir: &Path) -> Result<()> {
    let series = write_plotdata(dir)?;
    println!("plotdata: {} series written to {}", series.len(), dir.join(rbmelt::io::PLOTDATA_FILE).display());
    Ok(())
}
