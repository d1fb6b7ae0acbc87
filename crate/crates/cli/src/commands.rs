//! Subcommand implementations. Each reads its settings from a [`Config`],
//! writes its outputs into the `out` directory and finishes with a manifest.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::{json, Value};

use thergm::dlsm::{fit_dlsm, DlsmSettings};
use thergm::dsbm::{fit_dsbm, SpectralSettings};
use thergm::eval::{
    self, auc, corrupt_labels, estimate_transition, gof, misclustering, predict_proba, DlsmBundle, EvalReport,
    ModelBundle, ThergmBundle,
};
use thergm::fit::{pooled_cluster_fit, shared_cluster_fit, FitResult, McmcMleSettings};
use thergm::generator::{calibrate_theta, simulate, ThergmConfig, TransitionMatrix};
use thergm::net::{DynamicNetwork, MembershipSeries};
use thergm::scenario::{Preset, DISSOLVE, TRIANGLE};
use thergm::stats::StatisticSpec;
use thergm::{io, par, seed};

use crate::config::{parse_list, parse_rows, Config};
use crate::failure::Failure;
use crate::manifest::{self, Manifest};

const DEFAULT_SPEC: &str = "edges,triangles,stability";

/// Output directory plus the list of files written so far.
struct Output {
    dir: PathBuf,
    artifacts: Vec<String>,
}

impl Output {
    fn create(dir: PathBuf) -> Result<Self, Failure> {
        std::fs::create_dir_all(&dir)
            .map_err(|e| Failure::data(format!("cannot create output directory {}: {e}", dir.display())))?;
        Ok(Self { dir, artifacts: Vec::new() })
    }

    fn file(&mut self, name: &str) -> Result<BufWriter<File>, Failure> {
        let path = self.dir.join(name);
        let f = File::create(&path).map_err(|e| Failure::data(format!("cannot write {}: {e}", path.display())))?;
        self.artifacts.push(name.to_string());
        Ok(BufWriter::new(f))
    }

    fn json<T: Serialize + ?Sized>(&mut self, name: &str, value: &T) -> Result<(), Failure> {
        let mut w = self.file(name)?;
        serde_json::to_writer_pretty(&mut w, value)?;
        writeln!(w)?;
        w.flush()?;
        Ok(())
    }

    fn csv(&mut self, name: &str, write: impl FnOnce(&mut BufWriter<File>) -> thergm::Result<()>) -> Result<(), Failure> {
        let mut w = self.file(name)?;
        write(&mut w)?;
        w.flush()?;
        Ok(())
    }
}

fn open(path: &Path) -> Result<BufReader<File>, Failure> {
    File::open(path).map(BufReader::new).map_err(|e| Failure::data(format!("cannot open {}: {e}", path.display())))
}

fn read_members(path: &Path, k: Option<usize>) -> Result<MembershipSeries, Failure> {
    io::read_membership(open(path)?, k).map_err(|e| in_file(path, e))
}

fn read_net(path: &Path, nodes: Option<usize>, times: Option<usize>) -> Result<DynamicNetwork, Failure> {
    io::read_edges(open(path)?, nodes, times).map_err(|e| in_file(path, e))
}

fn in_file(path: &Path, e: thergm::Error) -> Failure {
    let mut f = Failure::from(e);
    f.message = format!("{}: {}", path.display(), f.message);
    f
}

fn read_bundle(path: &Path) -> Result<ModelBundle, Failure> {
    serde_json::from_reader(open(path)?).map_err(|e| Failure::data(format!("{}: invalid bundle: {e}", path.display())))
}

pub fn execute(name: &str, mut cfg: Config, args: &[String]) -> Result<(), Failure> {
    let start = Instant::now();
    let dir: String = cfg.get_or("out", "thergm-out".to_string())?;
    let mut out = Output::create(PathBuf::from(dir))?;
    match name {
        "simulate" => run_simulate(&mut cfg, &mut out)?,
        "cluster" => run_cluster(&mut cfg, &mut out)?,
        "fit-tergm" => run_fit(&mut cfg, &mut out)?,
        "evaluate" => run_evaluate(&mut cfg, &mut out)?,
        "predict" => run_predict(&mut cfg, &mut out)?,
        "scenario" => run_scenario(&mut cfg, &mut out)?,
        other => return Err(Failure::config(format!("unknown command '{other}'"))),
    }
    let config = cfg.resolved().clone();
    let seed = config.get("seed").and_then(|s| s.parse().ok());
    let m = Manifest {
        command: name.to_string(),
        args: args.to_vec(),
        config,
        seed,
        artifacts: out.artifacts.clone(),
        wall_clock_secs: start.elapsed().as_secs_f64(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        threads: par::current_threads(),
    };
    out.json(manifest::FILE_NAME, &m)
}

fn spec_setting(cfg: &mut Config) -> Result<StatisticSpec, Failure> {
    cfg.get_or("spec", DEFAULT_SPEC.parse::<StatisticSpec>()?)
}

fn mcmc_settings(cfg: &mut Config, seed: u64) -> Result<McmcMleSettings, Failure> {
    let d = McmcMleSettings::default();
    Ok(McmcMleSettings {
        samples: cfg.get_or("mcmc_samples", d.samples)?,
        burn_in: cfg.get_or("mcmc_burnin", d.burn_in)?,
        thin: cfg.get_or("thin", d.thin)?,
        max_outer: cfg.get_or("max_iter", d.max_outer)?,
        tol: cfg.get_or("tol", d.tol)?,
        seed,
        ..d
    })
}

fn generator_config(cfg: &mut Config, seed: u64) -> Result<ThergmConfig, Failure> {
    let preset: Option<Preset> = cfg.get("preset")?;
    let k: usize = cfg.get_or("k", 3)?;
    let size: usize = cfg.get_or("n_per_cluster", if preset.is_some() { 100 } else { 30 })?;
    let times: usize = cfg.get_or("times", 5)?;
    if times < 2 {
        return Err(Failure::config("times must be at least 2"));
    }
    let spec = spec_setting(cfg)?;
    let (pw, pb) = preset.map(|p| p.densities()).unwrap_or((0.1, 0.01));
    let p_within: f64 = cfg.get_or("p_within", pw)?;
    let p_between: f64 = cfg.get_or("p_between", pb)?;
    let transition = match cfg.get::<String>("transition")? {
        Some(rows) => TransitionMatrix::new(parse_rows(&rows, "transition")?)?,
        None => TransitionMatrix::sticky(k, cfg.get_or("stay", preset.map(|p| p.stay()).unwrap_or(0.9))?),
    };
    let theta = match cfg.get::<String>("theta")? {
        Some(rows) => {
            let rows = parse_rows(&rows, "theta")?;
            if rows.len() == 1 { vec![rows[0].clone(); k] } else { rows }
        }
        None => {
            let dissolve: f64 = cfg.get_or("dissolve", DISSOLVE)?;
            let triangle: f64 = cfg.get_or("triangle", TRIANGLE)?;
            vec![calibrate_theta(&spec, p_within, dissolve, triangle, size)?; k]
        }
    };
    let d = ThergmConfig::default();
    let c = ThergmConfig {
        k,
        n_per_cluster: vec![size; k],
        steps: times - 1,
        spec,
        theta,
        transition,
        p_within,
        p_between,
        m_attach: cfg.get_or("m_attach", d.m_attach)?,
        gibbs_sweeps: cfg.get_or("gibbs_sweeps", d.gibbs_sweeps)?,
        seed,
    };
    c.validate()?;
    Ok(c)
}

fn run_simulate(cfg: &mut Config, out: &mut Output) -> Result<(), Failure> {
    let seed: u64 = cfg.get_or("seed", 1)?;
    let gen = generator_config(cfg, seed)?;
    let sim = simulate(&gen)?;
    out.csv("edges.csv", |w| io::write_edges(w, &sim.net))?;
    out.csv("membership.csv", |w| io::write_membership(w, &sim.truth))?;
    out.json("trace.json", &json!({ "config": sim.config, "steps": sim.trace }))
}

fn dlsm_settings(cfg: &mut Config, k: usize, seed: u64, burn: usize, samples: usize) -> Result<DlsmSettings, Failure> {
    let d = DlsmSettings::new(k);
    Ok(DlsmSettings {
        dim: cfg.get_or("dim", d.dim)?,
        burn_in: cfg.get_or("burnin", burn)?,
        samples: cfg.get_or("samples", samples)?,
        thin: cfg.get_or("thin", d.thin)?,
        step: cfg.get_or("step", d.step)?,
        rho: cfg.get_or("rho", d.rho)?,
        seed,
        ..d
    })
}

fn spectral_settings(cfg: &mut Config, k: usize, seed: u64) -> Result<SpectralSettings, Failure> {
    let d = SpectralSettings::new(k);
    Ok(SpectralSettings {
        tau: cfg.get("tau")?,
        smooth: cfg.get_or("smooth", d.smooth)?,
        restarts: cfg.get_or("restarts", d.restarts)?,
        seed,
        ..d
    })
}

fn run_cluster(cfg: &mut Config, out: &mut Output) -> Result<(), Failure> {
    let path = cfg.require_input("net")?;
    let nodes: Option<usize> = cfg.get("nodes")?;
    let times: Option<usize> = cfg.get("times")?;
    let net = read_net(&path, nodes, times)?;
    let model: String = cfg.get_or("model", "dlsm".to_string())?;
    let k: usize = cfg.get_or("k", 3)?;
    let seed: u64 = cfg.get_or("seed", 1)?;
    match model.as_str() {
        "dsbm" => {
            let fit = fit_dsbm(&net, &spectral_settings(cfg, k, seed)?)?;
            out.csv("membership.csv", |w| io::write_membership(w, &fit.membership))?;
            out.json(
                "diagnostics.json",
                &json!({ "model": "dsbm", "eigengaps": fit.eigengaps, "low_confidence": fit.low_confidence }),
            )
        }
        "dlsm" => {
            let d = DlsmSettings::new(k);
            let s = dlsm_settings(cfg, k, seed, d.burn_in, d.samples)?;
            let fit = fit_dlsm(&net, &s)?;
            out.csv("membership.csv", |w| io::write_membership(w, &fit.membership))?;
            let mut diag = serde_json::to_value(&fit.diagnostics)?;
            diag["model"] = json!("dlsm");
            out.json("diagnostics.json", &diag)?;
            if net.len() >= 2 {
                out.json("bundle.json", &ModelBundle::Dlsm(DlsmBundle::from_fit(&fit)?))?;
            }
            Ok(())
        }
        other => Err(Failure::config(format!("unknown model '{other}' (expected dlsm or dsbm)"))),
    }
}

/// Per-cluster fits, or one shared fit repeated for every cluster.
fn fit_clusters(
    spec: &StatisticSpec,
    net: &DynamicNetwork,
    m: &MembershipSeries,
    settings: &McmcMleSettings,
    pooled: bool,
) -> thergm::Result<Vec<thergm::Result<FitResult>>> {
    if pooled {
        let fit = shared_cluster_fit(spec, net, m, settings)?;
        Ok((0..m.k()).map(|_| Ok(fit.clone())).collect())
    } else {
        pooled_cluster_fit(spec, net, m, settings)
    }
}

fn run_fit(cfg: &mut Config, out: &mut Output) -> Result<(), Failure> {
    let mpath = cfg.require_input("members")?;
    let m = read_members(&mpath, None)?;
    let npath = cfg.require_input("net")?;
    let net = read_net(&npath, Some(m.n()), Some(m.len()))?;
    let spec = spec_setting(cfg)?;
    let pooled: bool = cfg.get_or("pooled", false)?;
    let seed: u64 = cfg.get_or("seed", 1)?;
    let settings = mcmc_settings(cfg, seed)?;
    let diagnostics: Option<Value> = match cfg.input_path("diagnostics")? {
        Some(p) => Some(serde_json::from_reader(open(&p)?)?),
        None => None,
    };
    let fits = fit_clusters(&spec, &net, &m, &settings, pooled)?;
    if fits.iter().all(|f| f.is_err()) {
        let first = fits.into_iter().find_map(|f| f.err()).expect("at least one cluster");
        let mut f = Failure::from(first);
        f.message = format!("no cluster could be fitted: {}", f.message);
        return Err(f);
    }
    let clusters: Vec<Value> = fits
        .iter()
        .enumerate()
        .map(|(c, f)| match f {
            Ok(fit) => json!({ "cluster": c + 1, "fit": fit }),
            Err(e) => json!({ "cluster": c + 1, "error": e.to_string() }),
        })
        .collect();
    let mut doc = json!({ "spec": spec, "pooled": pooled, "clusters": clusters });
    if let Some(d) = diagnostics {
        doc["diagnostics"] = d;
    }
    out.json("fit.json", &doc)?;
    let ok: Vec<FitResult> = fits.iter().filter_map(|f| f.as_ref().ok().cloned()).collect();
    if ok.len() == fits.len() {
        out.json("bundle.json", &ModelBundle::Thergm(ThergmBundle::new(&net, &m, &spec, &ok)?))
    } else {
        log::warn!("some clusters could not be fitted; no bundle written");
        Ok(())
    }
}

fn run_evaluate(cfg: &mut Config, out: &mut Output) -> Result<(), Failure> {
    let seed: u64 = cfg.get_or("seed", 1)?;
    let est = match cfg.input_path("est")? {
        Some(p) => Some(read_members(&p, None)?),
        None => None,
    };
    let truth = match cfg.input_path("truth")? {
        Some(p) => Some(read_members(&p, est.as_ref().map(|m| m.k()))?),
        None => None,
    };
    let bundle = match cfg.input_path("bundle")? {
        Some(p) => Some(read_bundle(&p)?),
        None => None,
    };
    let n_hint = est.as_ref().or(truth.as_ref()).map(|m| m.n()).or(bundle.as_ref().map(|b| b.n()));
    let t_hint = est.as_ref().or(truth.as_ref()).map(|m| m.len());
    let net = match cfg.input_path("net")? {
        Some(p) => Some(read_net(&p, n_hint, t_hint)?),
        None => None,
    };
    let mut report = EvalReport { misclustering: None, transition: None, gof: None, auc: None };
    if let (Some(e), Some(t)) = (&est, &truth) {
        let mc = misclustering(e, t)?;
        out.csv("misclustering.csv", |w| eval::write_misclustering_csv(w, &mc))?;
        report.misclustering = Some(mc);
    }
    if let Some(e) = &est {
        let tr = estimate_transition(e)?;
        out.csv("transition.csv", |w| eval::write_transition_csv(w, &tr))?;
        report.transition = Some(tr);
    }
    if let (Some(b), Some(net)) = (&bundle, &net) {
        let n_sims: usize = cfg.get_or("n_sims", 100)?;
        let g = gof(net, b, n_sims, seed)?;
        out.csv("gof.csv", |w| eval::write_gof_csv(w, std::slice::from_ref(&g)))?;
        report.gof = Some(g);
        if let Some(p) = cfg.input_path("next")? {
            let next = read_net(&p, Some(net.n()), None)?;
            let y_next = next.slice(next.last_time());
            let expect: bool = cfg.get_or("expect_moves", false)?;
            let scores = predict_proba(b, net.slice(net.last_time()), b.labels_last(), expect)?;
            let within = cfg.get_or("within_only", false)?.then(|| b.labels_last());
            report.auc = Some(auc(&scores, y_next, within)?);
        }
    }
    if report.misclustering.is_none() && report.transition.is_none() && report.gof.is_none() {
        return Err(Failure::config("nothing to evaluate: give --est, or --net with --bundle"));
    }
    out.json("report.json", &report)
}

fn run_predict(cfg: &mut Config, out: &mut Output) -> Result<(), Failure> {
    let b = read_bundle(&cfg.require_input("bundle")?)?;
    let net = read_net(&cfg.require_input("net")?, Some(b.n()), None)?;
    let expect: bool = cfg.get_or("expect_moves", false)?;
    let p = predict_proba(&b, net.slice(net.last_time()), b.labels_last(), expect)?;
    out.csv("probabilities.csv", |w| {
        let mut c = csv::Writer::from_writer(w);
        c.write_record(["source", "target", "probability"])?;
        for (i, row) in p.iter().enumerate() {
            for (j, v) in row.iter().enumerate().skip(i + 1) {
                c.write_record([i.to_string(), j.to_string(), v.to_string()])?;
            }
        }
        c.flush()?;
        Ok(())
    })
}

#[derive(Debug, Clone, Serialize)]
struct Replicate {
    misclustering: Vec<(String, f64)>,
    theta: Vec<ThetaRow>,
    auc: Vec<(f64, Option<f64>)>,
}

#[derive(Debug, Clone, Serialize)]
struct ThetaRow {
    corruption: f64,
    cluster: usize,
    term: String,
    estimate: f64,
    truth: f64,
}

struct ScenarioPlan {
    preset: Preset,
    k: usize,
    size: usize,
    times: usize,
    seed: u64,
    models: Vec<String>,
    corruption: Vec<f64>,
    cluster: bool,
    theta: bool,
    auc: bool,
    dlsm: DlsmSettings,
    spectral: SpectralSettings,
    mcmc: McmcMleSettings,
}

fn replicate(plan: &ScenarioPlan, r: usize) -> Result<Replicate, thergm::Error> {
    let rseed = seed::derive_seed(plan.seed, "replicate", r as u64, 0);
    let gen = plan.preset.config(plan.k, plan.size, plan.times, rseed)?;
    let sim = simulate(&gen)?;
    let mut rep = Replicate { misclustering: Vec::new(), theta: Vec::new(), auc: Vec::new() };
    if plan.cluster {
        for model in &plan.models {
            let m = match model.as_str() {
                "dlsm" => fit_dlsm(&sim.net, &DlsmSettings { seed: rseed, ..plan.dlsm.clone() })?.membership,
                _ => fit_dsbm(&sim.net, &SpectralSettings { seed: rseed, ..plan.spectral.clone() })?.membership,
            };
            rep.misclustering.push((model.clone(), misclustering(&m, &sim.truth)?.average));
        }
    }
    for (ci, &frac) in plan.corruption.iter().enumerate() {
        let mut rng = seed::stream(rseed, "corrupt", ci as u64, 0);
        let labels = corrupt_labels(&sim.truth, frac, &mut rng)?;
        let mcmc = McmcMleSettings { seed: seed::derive_seed(rseed, "scenario-fit", ci as u64, 0), ..plan.mcmc.clone() };
        if plan.theta {
            for (c, fit) in pooled_cluster_fit(&gen.spec, &sim.net, &labels, &mcmc)?.into_iter().enumerate() {
                let Ok(fit) = fit else { continue };
                for (p, term) in gen.spec.names().into_iter().enumerate() {
                    rep.theta.push(ThetaRow {
                        corruption: frac,
                        cluster: c + 1,
                        term,
                        estimate: fit.theta[p],
                        truth: gen.theta[c][p],
                    });
                }
            }
        }
        if plan.auc {
            rep.auc.push((frac, holdout_auc(&gen.spec, &sim.net, &labels, &mcmc).ok()));
        }
    }
    Ok(rep)
}

/// Fits on all but the final time point and scores the final slice.
fn holdout_auc(
    spec: &StatisticSpec,
    net: &DynamicNetwork,
    labels: &MembershipSeries,
    mcmc: &McmcMleSettings,
) -> thergm::Result<f64> {
    let last = net.last_time();
    let train = net.truncated(last)?;
    let m = MembershipSeries::new(labels.labels()[..last].to_vec(), labels.k())?;
    let fits: Vec<FitResult> = pooled_cluster_fit(spec, &train, &m, mcmc)?.into_iter().collect::<thergm::Result<_>>()?;
    let b = ModelBundle::Thergm(ThergmBundle::new(&train, &m, spec, &fits)?);
    let scores = predict_proba(&b, train.slice(last - 1), b.labels_last(), false)?;
    auc(&scores, net.slice(last), None)
}

fn mean(v: &[f64]) -> Option<f64> {
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

fn run_scenario(cfg: &mut Config, out: &mut Output) -> Result<(), Failure> {
    let preset: Preset = cfg.get_or("preset", "slow-easy".parse::<Preset>()?)?;
    let replicates: usize = cfg.get_or("replicates", 10)?;
    let k: usize = cfg.get_or("k", 3)?;
    let size: usize = cfg.get_or("n_per_cluster", 30)?;
    let times: usize = cfg.get_or("times", 5)?;
    let seed: u64 = cfg.get_or("seed", 1)?;
    let tasks: Vec<String> = parse_list(&cfg.get_or("tasks", "cluster,theta,auc".to_string())?, "tasks")?;
    if let Some(t) = tasks.iter().find(|t| !["cluster", "theta", "auc"].contains(&t.as_str())) {
        return Err(Failure::config(format!("unknown task '{t}' (expected cluster, theta or auc)")));
    }
    let models: Vec<String> = parse_list(&cfg.get_or("models", "dlsm,dsbm".to_string())?, "models")?;
    if let Some(m) = models.iter().find(|m| !["dlsm", "dsbm"].contains(&m.as_str())) {
        return Err(Failure::config(format!("unknown model '{m}' (expected dlsm or dsbm)")));
    }
    let corruption: Vec<f64> = parse_list(&cfg.get_or("corruption", "0,0.1,0.2,0.3".to_string())?, "corruption")?;
    if corruption.iter().any(|c| !(0.0..=1.0).contains(c)) {
        return Err(Failure::config("corruption fractions must lie in [0,1]"));
    }
    let plan = ScenarioPlan {
        preset,
        k,
        size,
        times,
        seed,
        models,
        corruption,
        cluster: tasks.iter().any(|t| t == "cluster"),
        theta: tasks.iter().any(|t| t == "theta"),
        auc: tasks.iter().any(|t| t == "auc"),
        dlsm: dlsm_settings(cfg, k, seed, 300, 300)?,
        spectral: spectral_settings(cfg, k, seed)?,
        mcmc: mcmc_settings(cfg, seed)?,
    };
    let reps: Vec<Replicate> = par::map_range(replicates, |r| replicate(&plan, r)).into_iter().collect::<thergm::Result<_>>()?;

    let mut summary = serde_json::Map::new();
    summary.insert("preset".into(), json!(preset.to_string()));
    summary.insert("replicates".into(), json!(replicates));
    if plan.cluster {
        out.csv("misclustering.csv", |w| {
            let mut c = csv::Writer::from_writer(w);
            c.write_record(["replicate", "model", "rate"])?;
            for (r, rep) in reps.iter().enumerate() {
                for (model, rate) in &rep.misclustering {
                    c.write_record([r.to_string(), model.clone(), rate.to_string()])?;
                }
            }
            c.flush()?;
            Ok(())
        })?;
        let by_model: serde_json::Map<String, Value> = plan
            .models
            .iter()
            .map(|m| {
                let v: Vec<f64> =
                    reps.iter().flat_map(|r| r.misclustering.iter().filter(|x| &x.0 == m).map(|x| x.1)).collect();
                (m.clone(), json!(mean(&v)))
            })
            .collect();
        summary.insert("mean_misclustering".into(), Value::Object(by_model));
    }
    if plan.theta {
        out.csv("theta.csv", |w| {
            let mut c = csv::Writer::from_writer(w);
            c.write_record(["replicate", "corruption", "cluster", "term", "estimate", "truth"])?;
            for (r, rep) in reps.iter().enumerate() {
                for row in &rep.theta {
                    c.write_record([
                        r.to_string(),
                        row.corruption.to_string(),
                        row.cluster.to_string(),
                        row.term.clone(),
                        row.estimate.to_string(),
                        row.truth.to_string(),
                    ])?;
                }
            }
            c.flush()?;
            Ok(())
        })?;
    }
    if plan.auc {
        out.csv("auc.csv", |w| {
            let mut c = csv::Writer::from_writer(w);
            c.write_record(["replicate", "corruption", "auc"])?;
            for (r, rep) in reps.iter().enumerate() {
                for (frac, a) in &rep.auc {
                    c.write_record([r.to_string(), frac.to_string(), a.map(|x| x.to_string()).unwrap_or_default()])?;
                }
            }
            c.flush()?;
            Ok(())
        })?;
        let means: Vec<Value> = plan
            .corruption
            .iter()
            .map(|&f| {
                let v: Vec<f64> =
                    reps.iter().flat_map(|r| r.auc.iter().filter(|x| x.0 == f).filter_map(|x| x.1)).collect();
                json!({ "corruption": f, "mean_auc": mean(&v), "scored": v.len() })
            })
            .collect();
        summary.insert("auc".into(), Value::Array(means));
    }
    out.json("summary.json", &Value::Object(summary))
}
