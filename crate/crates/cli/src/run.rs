//! Executes a configuration and writes its CSV files and metadata sidecar.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;

use liouville::dynamics::{
    evolve_master, random_environment_benchmark, repeated_interaction_map, revival_time, EnvBenchParams,
    RepeatedInteractionParams,
};
use liouville::qec::logical_error_ratio;
use liouville::superop::{build_liouvillian, spectrum};
use liouville::trajectories::{ensemble_average, run_ensemble, InitialState, Scheme, TrajectoryConfig};
use liouville::DensityMatrix;

use crate::config::{ExperimentConfig, Kind, Loaded, SchemeName};
use crate::error::CliError;

/// Relative threshold used for the revival column of the environment summary.
const REVIVAL_THRESHOLD: f64 = 0.1;

fn num(x: f64) -> String {
    format!("{x:?}")
}

struct Csv {
    dir: PathBuf,
    written: Vec<PathBuf>,
}

impl Csv {
    fn write(&mut self, name: &str, header: &[String], rows: impl IntoIterator<Item = Vec<String>>) -> Result<(), CliError> {
        let path = self.dir.join(name);
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(header)?;
        for r in rows {
            w.write_record(&r)?;
        }
        w.flush()?;
        self.written.push(path);
        Ok(())
    }
}

fn complex_header(first: &[&str], stems: &[String]) -> Vec<String> {
    let mut h: Vec<String> = first.iter().map(|s| s.to_string()).collect();
    for s in stems {
        h.push(format!("{s}_re"));
        h.push(format!("{s}_im"));
    }
    h
}

/// Absolute output directory of a configuration.
pub fn output_dir(config: &ExperimentConfig) -> Result<PathBuf, CliError> {
    let p = Path::new(&config.output);
    Ok(if p.is_absolute() { p.to_path_buf() } else { std::env::current_dir()?.join(p) })
}

pub struct RunSummary {
    pub files: Vec<PathBuf>,
    pub metadata: PathBuf,
}

pub fn run(loaded: &Loaded) -> Result<RunSummary, CliError> {
    let started = Instant::now();
    let dir = output_dir(&loaded.config)?;
    fs::create_dir_all(&dir)?;
    let mut out = Csv { dir: dir.clone(), written: Vec::new() };
    let c = &loaded.config;
    let mut seed = None;
    match c.kind {
        Kind::Spectrum => {
            let s = spectrum(&build_liouvillian(&loaded.model()?)?)?;
            let header = ["index", "re_lambda", "im_lambda"].map(String::from);
            let rows = s.eigenvalues().iter().enumerate().map(|(k, z)| vec![k.to_string(), num(z.re), num(z.im)]);
            out.write("spectrum.csv", &header, rows)?;
        }
        Kind::Evolve => {
            let model = loaded.model()?;
            let rho0 = DensityMatrix::from_ket(&loaded.initial()?);
            let obs = loaded.observables()?;
            let states = evolve_master(&model, &rho0, &loaded.grid()?)?;
            write_master(&mut out, "evolve.csv", &obs, &states)?;
        }
        Kind::Trajectories => {
            let t = c.trajectories.as_ref().expect("validated");
            seed = Some(t.seed);
            let model = loaded.model()?;
            let psi0 = loaded.initial()?;
            let obs = loaded.observables()?;
            let g = c.grid.as_ref().expect("validated");
            let stems: Vec<String> = obs.iter().map(|(n, _)| n.clone()).collect();
            for scheme in &t.schemes {
                let mut cfg = TrajectoryConfig::new(g.dt, g.t1 - g.t0, t.seed)
                    .with_observables(obs.iter().map(|(_, o)| o.clone()).collect())
                    .with_sample_every(g.sample_every);
                cfg.scheme = match scheme {
                    SchemeName::Counting | SchemeName::NoJump => Scheme::Counting,
                    SchemeName::Homodyne => Scheme::HomodyneIdeal,
                    SchemeName::Offset => Scheme::CountingWithOffset(t.beta),
                };
                cfg.conditional_no_jump = *scheme == SchemeName::NoJump;
                let results = run_ensemble(&model, &InitialState::Pure(psi0.clone()), &cfg, t.n)?;
                let label = scheme.label();

                let mut rows = Vec::new();
                for r in &results {
                    for (s, time) in r.times.iter().enumerate() {
                        let mut row = vec![num(g.t0 + time), r.index.to_string()];
                        for z in &r.records[s] {
                            row.push(num(z.re));
                            row.push(num(z.im));
                        }
                        rows.push(row);
                    }
                }
                out.write(&format!("trajectories_{label}.csv"), &complex_header(&["time", "traj_id"], &stems), rows)?;

                let avg = ensemble_average(&results)?;
                let mut header = vec!["time".to_string()];
                for s in &stems {
                    for col in ["mean_re", "mean_im", "stderr_re", "stderr_im"] {
                        header.push(format!("{s}_{col}"));
                    }
                }
                let rows = avg.times.iter().enumerate().map(|(s, time)| {
                    let mut row = vec![num(g.t0 + time)];
                    for o in &avg.observables {
                        row.extend([num(o.mean[s].re), num(o.mean[s].im), num(o.stderr_re[s]), num(o.stderr_im[s])]);
                    }
                    row
                });
                out.write(&format!("avg_{label}.csv"), &header, rows)?;

                if *scheme != SchemeName::Homodyne {
                    let header = ["traj_id", "time", "channel"].map(String::from);
                    let rows = results.iter().flat_map(|r| {
                        r.jumps.iter().map(move |j| vec![r.index.to_string(), num(g.t0 + j.time), j.channel.to_string()])
                    });
                    out.write(&format!("jumps_{label}.csv"), &header, rows)?;
                }
            }
            if t.master_reference {
                let states = evolve_master(&model, &DensityMatrix::from_ket(&psi0), &loaded.grid()?)?;
                write_master(&mut out, "master.csv", &obs, &states)?;
            }
        }
        Kind::Qec => {
            let q = c.qec.as_ref().expect("validated");
            let rows = logical_error_ratio(q.gamma, &q.taus)?;
            let header = ["tau", "lambda_eff_logical", "bare_rate", "ratio"].map(String::from);
            let rows = rows.iter().map(|r| {
                vec![num(r.tau), num(r.lambda_logical), num(r.bare_rate), r.ratio.map_or("NA".to_string(), num)]
            });
            out.write("qec.csv", &header, rows)?;
        }
        Kind::Envbench => {
            let e = c.envbench.as_ref().expect("validated");
            seed = Some(e.seed);
            let grid = loaded.grid()?;
            let results = e
                .modes
                .par_iter()
                .map(|&m| {
                    let p = EnvBenchParams {
                        m,
                        omega: e.omega,
                        gbar1: e.gbar1,
                        rel_sigma: e.rel_sigma,
                        seed: e.seed,
                        rwa: e.rwa,
                    };
                    random_environment_benchmark(&p, &grid)
                })
                .collect::<liouville::Result<Vec<_>>>()?;
            let header = ["time", "excitation"].map(String::from);
            for (m, r) in e.modes.iter().zip(&results) {
                let rows = r.times.iter().zip(&r.excitation).map(|(t, x)| vec![num(*t), num(*x)]);
                out.write(&format!("envbench_M{m}.csv"), &header, rows)?;
            }
            let header = ["modes", "revival_time"].map(String::from);
            let rows = e.modes.iter().zip(&results).map(|(m, r)| {
                let rt = revival_time(&r.times, &r.excitation, REVIVAL_THRESHOLD);
                vec![m.to_string(), rt.map_or("NA".to_string(), num)]
            });
            out.write("envbench_summary.csv", &header, rows)?;
        }
        Kind::Zeno => {
            let z = c.zeno.as_ref().expect("validated");
            let results = z
                .taus
                .par_iter()
                .map(|&tau| {
                    repeated_interaction_map(&RepeatedInteractionParams {
                        g: z.g,
                        tau,
                        n_cycles: z.n_cycles,
                        cutoff: z.cutoff,
                    })
                })
                .collect::<liouville::Result<Vec<_>>>()?;
            let header = ["tau", "gamma_eff", "g_squared_tau"].map(String::from);
            let rows = z
                .taus
                .iter()
                .zip(&results)
                .map(|(tau, r)| vec![num(*tau), num(r.gamma_eff), num(z.g * z.g * tau)]);
            out.write("zeno.csv", &header, rows)?;
        }
    }

    let mut resolved = c.clone();
    resolved.output = dir.to_string_lossy().into_owned();
    let mut meta = toml::Table::new();
    meta.insert("tool_version".into(), env!("CARGO_PKG_VERSION").into());
    meta.insert("wall_time_s".into(), started.elapsed().as_secs_f64().into());
    if let Some(s) = seed {
        meta.insert("seed".into(), toml::Value::Integer(s as i64));
    }
    let files: Vec<toml::Value> = out
        .written
        .iter()
        .map(|p| p.file_name().unwrap_or_default().to_string_lossy().into_owned().into())
        .collect();
    meta.insert("files".into(), files.into());
    resolved.metadata = Some(meta);
    let text = toml::to_string(&resolved).map_err(|e| CliError::Io(format!("cannot serialise metadata: {e}")))?;
    let metadata = dir.join("metadata.toml");
    fs::write(&metadata, text)?;
    Ok(RunSummary { files: out.written, metadata })
}

fn write_master(
    out: &mut Csv,
    name: &str,
    obs: &[(String, liouville::Operator)],
    states: &liouville::dynamics::Sampled<DensityMatrix>,
) -> Result<(), CliError> {
    let stems: Vec<String> = obs.iter().map(|(n, _)| n.clone()).collect();
    let series = obs.iter().map(|(_, o)| states.expect(o)).collect::<liouville::Result<Vec<_>>>()?;
    let rows = states.times.iter().enumerate().map(|(s, t)| {
        let mut row = vec![num(*t)];
        for v in &series {
            row.push(num(v[s].re));
            row.push(num(v[s].im));
        }
        row
    });
    out.write(name, &complex_header(&["time"], &stems), rows)
}
