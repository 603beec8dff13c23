//! One function per subcommand. Each writes its artifacts into `out` and
//! reports the files written plus any non-fatal failure.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use specgal_core::control::optimize;
use specgal_core::dynamics::integrate;
use specgal_core::lab::{
    control_error_bound_check, j_gap_bound_check, trajectory_convergence_sweep, uniform_convergence_estimate,
    value_convergence_sweep, value_gap_bound_check, write_bound_csv, ConvergenceReport, Steps,
};
use specgal_core::Error;

use crate::config::Experiment;
use crate::failure::Failure;
use crate::setup::Setup;

pub struct Outcome {
    pub files: Vec<String>,
    pub failure: Option<Failure>,
}

struct Writer<'a> {
    dir: &'a Path,
    files: Vec<String>,
}

impl Writer<'_> {
    fn write(
        &mut self,
        name: &str,
        body: impl FnOnce(&mut BufWriter<File>) -> specgal_core::Result<()>,
    ) -> Result<(), Failure> {
        let path = self.dir.join(name);
        let mut out = BufWriter::new(File::create(&path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?);
        body(&mut out)?;
        out.flush()?;
        self.files.push(name.to_string());
        Ok(())
    }

    fn report(&mut self, stem: &str, report: &ConvergenceReport) -> Result<(), Failure> {
        self.write(&format!("{stem}.csv"), |w| report.write_csv(w))?;
        let json = report.to_json()?;
        self.write(&format!("{stem}.json"), |w| Ok(writeln!(w, "{json}")?))
    }
}

pub fn run(experiment: Experiment, s: &Setup, seed: u64, out: &Path) -> Result<Outcome, Failure> {
    let mut w = Writer { dir: out, files: Vec::new() };
    let failure = match experiment {
        Experiment::Simulate => simulate(s, &mut w)?,
        Experiment::Optimize => optimize_run(s, &mut w)?,
        Experiment::TrajSweep => {
            let steps = Steps { dt: s.dt, dt_ref: s.dt_ref };
            let r = trajectory_convergence_sweep(&s.problem, &s.control, &s.n_values, s.n_ref, steps)?;
            w.report("traj_sweep", &r)?;
            None
        }
        Experiment::UniformSweep => {
            let steps = Steps { dt: s.dt, dt_ref: s.dt_ref };
            let r = uniform_convergence_estimate(&s.problem, &s.template, &s.n_values, s.n_ref, s.samples, seed, steps)?;
            w.report("uniform_sweep", &r)?;
            None
        }
        Experiment::ValueSweep => value_sweep(s, &mut w)?,
        Experiment::VerifyBounds => verify_bounds(s, &mut w)?,
        Experiment::TransformTest => transform_test(s, seed, &mut w)?,
    };
    Ok(Outcome { files: w.files, failure })
}

fn simulate(s: &Setup, w: &mut Writer) -> Result<Option<Failure>, Failure> {
    let traj = integrate(&s.problem, s.n, &s.control, s.dt)?;
    let header = format!("Galerkin trajectory, spectral coefficients of y_N, N = {}, dt = {}", s.n, s.dt);
    w.write("trajectory.csv", |out| traj.write_csv(&header, out))?;
    let ns: Vec<usize> = s.n_values.iter().copied().filter(|n| *n <= s.n).collect();
    let header = format!("norm and residual energy of the N = {} trajectory beyond each listed truncation", s.n);
    w.write("trajectory_summary.csv", |out| traj.write_summary_csv(&header, &ns, out))?;
    Ok(None)
}

fn optimize_run(s: &Setup, w: &mut Writer) -> Result<Option<Failure>, Failure> {
    let sol = optimize(&s.problem, s.n, &s.cost, &s.template, &s.value_options.optimizer)?;
    let op = &s.problem.control_op;
    let header = format!("projected-gradient optimal control of the N = {} Galerkin problem", s.n);
    w.write("control.csv", |out| sol.write_control_csv(op, &header, out))?;
    let header = format!("optimal Galerkin trajectory, N = {}", s.n);
    w.write("trajectory.csv", |out| sol.trajectory.write_csv(&header, out))?;
    let json = sol.to_json()?;
    w.write("solution.json", |out| Ok(writeln!(out, "{json}")?))?;
    Ok((!sol.converged).then(|| Failure::NonConvergence(sol.message.clone())))
}

fn value_sweep(s: &Setup, w: &mut Writer) -> Result<Option<Failure>, Failure> {
    let x = &s.problem.initial;
    let (report, table) = value_convergence_sweep(
        &s.problem,
        &s.cost,
        &s.template,
        &s.t_values,
        x,
        &s.n_values,
        s.n_ref,
        &s.value_options,
    )?;
    w.report("value_sweep", &report)?;
    let mut levels = s.n_values.clone();
    levels.push(s.n_ref);
    w.write("value_table.csv", |out| {
        writeln!(out, "# Galerkin value function estimates v_N(t, x) by multistart projected gradient")?;
        writeln!(out, "t,n,value")?;
        for (t, row) in table.t_values.iter().zip(&table.values) {
            for (n, v) in levels.iter().zip(row) {
                match v {
                    Some(v) => writeln!(out, "{t},{n},{v}")?,
                    None => writeln!(out, "{t},{n},")?,
                }
            }
        }
        Ok(())
    })?;
    let missing = table.values.iter().flatten().filter(|v| v.is_none()).count();
    Ok((missing > 0).then(|| Failure::NonConvergence(format!("{missing} value estimates did not converge"))))
}

fn verify_bounds(s: &Setup, w: &mut Writer) -> Result<Option<Failure>, Failure> {
    let mut reports = Vec::new();
    for &n in &s.n_values {
        reports.push(j_gap_bound_check(&s.problem, &s.cost, &s.control, n, s.n_ref, s.dt)?);
        for &t in &s.t_values {
            reports.push(value_gap_bound_check(
                &s.problem,
                &s.cost,
                &s.template,
                t,
                &s.problem.initial,
                n,
                s.n_ref,
                &s.value_options,
            )?);
        }
        reports.push(control_error_bound_check(
            &s.problem,
            &s.cost,
            &s.template,
            n,
            s.n_ref,
            &s.value_options,
            s.prefactor,
        )?);
    }
    let header = "cost-gap, value-gap and control-error estimates for Galerkin truncations against the reference";
    w.write("bounds.csv", |out| write_bound_csv(&reports, header, out))?;
    let json = serde_json::to_string_pretty(&reports).map_err(Error::from)?;
    w.write("bounds.json", |out| Ok(writeln!(out, "{json}")?))?;
    let failed: Vec<String> = reports
        .iter()
        .filter(|r| r.pass == Some(false))
        .map(|r| format!("{} at N = {}, t = {}", r.inequality_id, r.n, r.t))
        .collect();
    let inconclusive = reports.iter().filter(|r| r.pass.is_none()).count();
    Ok(if !failed.is_empty() {
        Some(Failure::Check(failed.join("; ")))
    } else if inconclusive > 0 {
        Some(Failure::NonConvergence(format!("{inconclusive} checks inconclusive")))
    } else {
        None
    })
}

const ROUNDTRIP_TOL: f64 = 1e-10;
const GRAM_TOL: f64 = 1e-8;

fn transform_test(s: &Setup, seed: u64, w: &mut Writer) -> Result<Option<Failure>, Failure> {
    let basis = &s.problem.basis;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coeffs: Vec<f64> = (0..basis.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
    let back = basis.analyze_slice(&basis.synthesize_slice(&coeffs), basis.len());
    let roundtrip = coeffs.iter().zip(&back).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let gram = basis.gram_error();
    w.write("transform.csv", |out| {
        writeln!(out, "# analysis/synthesis roundtrip and discrete orthonormality of {}", basis.id())?;
        writeln!(out, "metric,value,tolerance")?;
        writeln!(out, "roundtrip_error,{roundtrip},{ROUNDTRIP_TOL}")?;
        writeln!(out, "gram_error,{gram},{GRAM_TOL}")?;
        Ok(())
    })?;
    Ok((roundtrip >= ROUNDTRIP_TOL || gram >= GRAM_TOL)
        .then(|| Failure::Check(format!("roundtrip {roundtrip:.3e}, Gram error {gram:.3e}"))))
}
