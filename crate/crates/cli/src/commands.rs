//! Subcommand bodies. Instances are computed on the worker pool, then written
//! one after another in instance order.

use std::f64::consts::LN_2;
use std::path::Path;

use nlts_core::hamiltonian::{
    build_layout, energy, ground_state, measurement_distribution, check_probability_bound_for_formula,
    QubitLayout, ProbabilityBoundReport, ENERGY_TOL,
};
use nlts_core::io::{bit_string, dimacs_string, distribution_table, histogram_table, read_formula,
    solution_set_table, write_state, CsvTable, FormulaSidecar};
use nlts_core::ksat::{generate_at_density, generate_formula, DensityParams, Formula, VarSet};
use nlts_core::landscape::{
    cluster, detect_ogp, enumerate_sat, enumerate_sat_eps, overlap_histogram, ClusterPartition, OgpReport,
    OverlapHistogram, SolutionSet,
};
use nlts_core::pspin::{
    generate_couplings, generate_regular_hypergraph, ground_state_bruteforce, near_ground_set, quantize,
    CouplingVector, RegularHypergraph,
};
use nlts_core::theory::{depth_lower_bound, scan_regime, ScanGrids, ScanRow};
use nlts_core::{par, LabError};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{instance_seed, required, ExperimentConfig};
use crate::output::{Manifest, Outputs};
use crate::{CliError, Command};

/// Largest deviation tolerated between the measured and classical distributions.
pub const DISTRIBUTION_TOL: f64 = 1e-12;

struct Report {
    summary: Value,
    failures: Vec<String>,
}

impl Report {
    fn ok(summary: Value) -> Self {
        Report {
            summary,
            failures: Vec::new(),
        }
    }
}

pub fn dispatch(command: Command, cfg: &ExperimentConfig, out: &Path) -> Result<Manifest, CliError> {
    let mut o = Outputs::create(out)?;
    let report = match command {
        Command::Gen => gen(cfg, &mut o)?,
        Command::Enumerate => enumerate(cfg, &mut o)?,
        Command::Ogp => ogp(cfg, &mut o)?,
        Command::Cluster => clusters(cfg, &mut o)?,
        Command::Hamiltonian => hamiltonian(cfg, &mut o)?,
        Command::Pspin => pspin(cfg, &mut o)?,
        Command::TheoryScan => theory_scan(cfg, &mut o)?,
        Command::DepthBound => depth_bound(cfg, &mut o)?,
    };
    let manifest = o.finish(command.name(), cfg, report.summary)?;
    if !report.failures.is_empty() {
        return Err(CliError::internal(report.failures.join("; ")));
    }
    Ok(manifest)
}

fn tag(i: usize) -> String {
    format!("{i:03}")
}

/// Run `work` on every instance in parallel; results come back in instance order.
fn per_instance<T, F>(len: usize, work: F) -> Result<Vec<T>, CliError>
where
    T: Send,
    F: Fn(usize) -> Result<T, CliError> + Sync + Send,
{
    par::map_range(len, work).into_iter().collect()
}

fn formulas(cfg: &ExperimentConfig) -> Result<Vec<Formula>, CliError> {
    if let Some(path) = &cfg.run.input {
        return Ok(vec![read_formula(path)?]);
    }
    let n = required(cfg.model.n, "n")?;
    let k = required(cfg.model.k, "k")?;
    let seeds = cfg.instance_seeds()?;
    per_instance(seeds.len(), |i| {
        let s = seeds[i];
        let f = match (cfg.model.m, cfg.model.alpha) {
            (Some(m), _) => generate_formula(n, m, k, s)?,
            (None, Some(a)) => generate_at_density(DensityParams::new(a, k, n)?, s)?,
            (None, None) => return Err(CliError::validation("missing parameter m or alpha")),
        };
        Ok(f)
    })
}

fn solutions(f: &Formula, cfg: &ExperimentConfig) -> Result<SolutionSet, CliError> {
    let ecfg = cfg.caps.enumeration();
    let r = cfg.analysis.r;
    Ok(match cfg.analysis.eps {
        Some(eps) if eps > 0.0 => enumerate_sat_eps(f, eps, r, &ecfg)?,
        _ => enumerate_sat(f, r, None, &ecfg)?,
    })
}

fn ln_per_var(count: usize, n: usize) -> Option<f64> {
    (count > 0).then(|| (count as f64).ln() / n as f64)
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

fn gen(cfg: &ExperimentConfig, o: &mut Outputs) -> Result<Report, CliError> {
    if cfg.run.input.is_some() {
        return Err(CliError::validation("gen does not take an input formula"));
    }
    let fs = formulas(cfg)?;
    let mut rows = Vec::new();
    for (i, f) in fs.iter().enumerate() {
        o.write(&format!("instance_{}.cnf", tag(i)), dimacs_string(f).as_bytes())?;
        o.json(&format!("instance_{}.json", tag(i)), &FormulaSidecar::of(f))?;
        rows.push(json!({
            "instance": i,
            "seed": f.seed(),
            "n": f.n(),
            "m": f.m(),
            "k": f.k(),
            "tautologies": f.tautology_count(),
            "repeated_variable_clauses": f.repeated_variable_count(),
        }));
    }
    Ok(Report::ok(json!({ "instances": rows })))
}

struct Enumerated {
    set: SolutionSet,
    hist: OverlapHistogram,
}

fn enumerate_all(fs: &[Formula], cfg: &ExperimentConfig) -> Result<Vec<Enumerated>, CliError> {
    let ecfg = cfg.caps.enumeration();
    per_instance(fs.len(), |i| {
        let set = solutions(&fs[i], cfg)?;
        let hist = overlap_histogram(&set, &ecfg)?;
        Ok(Enumerated { set, hist })
    })
}

fn count_row(i: usize, f: &Formula, e: &Enumerated, cfg: &ExperimentConfig) -> Value {
    json!({
        "instance": i,
        "seed": f.seed(),
        "n": f.n(),
        "m": f.m(),
        "k": f.k(),
        "r": cfg.analysis.r,
        "eps": cfg.analysis.eps,
        "count": e.set.len(),
        "ln_count_per_n": ln_per_var(e.set.len(), f.n()),
    })
}

fn write_sets(o: &mut Outputs, all: &[Enumerated]) -> Result<(), CliError> {
    for (i, e) in all.iter().enumerate() {
        o.csv(&format!("solutions_{}.csv", tag(i)), &solution_set_table(&e.set))?;
        o.csv(&format!("histogram_{}.csv", tag(i)), &histogram_table(&e.hist))?;
    }
    Ok(())
}

fn enumerate(cfg: &ExperimentConfig, o: &mut Outputs) -> Result<Report, CliError> {
    let fs = formulas(cfg)?;
    let all = enumerate_all(&fs, cfg)?;
    write_sets(o, &all)?;
    let mut t = CsvTable::new("counts", 1, &["instance", "seed", "n", "m", "k", "r", "count", "ln_count_per_n"]);
    let mut rows = Vec::new();
    for (i, (f, e)) in fs.iter().zip(&all).enumerate() {
        t.push(vec![
            i.to_string(),
            f.seed().to_string(),
            f.n().to_string(),
            f.m().to_string(),
            f.k().to_string(),
            cfg.analysis.r.to_string(),
            e.set.len().to_string(),
            opt(ln_per_var(e.set.len(), f.n())),
        ]);
        rows.push(count_row(i, f, e, cfg));
    }
    o.csv("counts.csv", &t)?;
    Ok(Report::ok(json!({ "instances": rows })))
}

fn gap_interval(cfg: &ExperimentConfig) -> Result<(f64, f64), CliError> {
    Ok((required(cfg.analysis.nu1, "nu1")?, required(cfg.analysis.nu2, "nu2")?))
}

fn ogp_reports(all: &[Enumerated], cfg: &ExperimentConfig) -> Result<Vec<OgpReport>, CliError> {
    let (nu1, nu2) = gap_interval(cfg)?;
    let ecfg = cfg.caps.enumeration();
    per_instance(all.len(), |i| Ok(detect_ogp(&all[i].set, nu1, nu2, &ecfg)?))
}

fn ogp(cfg: &ExperimentConfig, o: &mut Outputs) -> Result<Report, CliError> {
    let fs = formulas(cfg)?;
    let all = enumerate_all(&fs, cfg)?;
    let reports = ogp_reports(&all, cfg)?;
    write_sets(o, &all)?;
    let mut t = CsvTable::new(
        "ogp",
        1,
        &["instance", "seed", "count", "near", "far", "holds", "witness_x", "witness_y", "witness_distance"],
    );
    let mut rows = Vec::new();
    for (i, ((f, e), rep)) in fs.iter().zip(&all).zip(&reports).enumerate() {
        let w = rep.witness;
        t.push(vec![
            i.to_string(),
            f.seed().to_string(),
            e.set.len().to_string(),
            rep.thresholds.near.to_string(),
            rep.thresholds.far.to_string(),
            rep.holds.to_string(),
            opt(w.map(|w| w.x)),
            opt(w.map(|w| w.y)),
            opt(w.map(|w| w.distance)),
        ]);
        let mut row = count_row(i, f, e, cfg);
        row["ogp"] = serde_json::to_value(rep).map_err(LabError::from)?;
        rows.push(row);
    }
    o.csv("ogp.csv", &t)?;
    Ok(Report::ok(json!({ "instances": rows })))
}

fn clusters(cfg: &ExperimentConfig, o: &mut Outputs) -> Result<Report, CliError> {
    let (nu1, nu2) = gap_interval(cfg)?;
    if nu1 >= nu2 / 2.0 {
        return Err(CliError::validation(format!("clustering needs nu1 < nu2 / 2, got ({nu1}, {nu2})")));
    }
    let fs = formulas(cfg)?;
    let all = enumerate_all(&fs, cfg)?;
    let reports = ogp_reports(&all, cfg)?;
    let ecfg = cfg.caps.enumeration();
    let parts: Vec<Option<ClusterPartition>> = per_instance(all.len(), |i| {
        if reports[i].holds {
            Ok(Some(cluster(&all[i].set, nu1, nu2, &ecfg)?))
        } else {
            Ok(None)
        }
    })?;
    write_sets(o, &all)?;
    let mut overview = CsvTable::new(
        "clusters",
        1,
        &["instance", "seed", "count", "ogp_holds", "clusters", "max_size", "max_intra", "min_inter"],
    );
    let mut rows = Vec::new();
    for (i, ((f, e), part)) in fs.iter().zip(&all).zip(&parts).enumerate() {
        let mut row = count_row(i, f, e, cfg);
        row["ogp_holds"] = json!(reports[i].holds);
        match part {
            Some(p) => {
                let mut t = CsvTable::new("cluster_members", 1, &["cluster", "index", "word", "assignment"]);
                for (c, members) in p.clusters.iter().enumerate() {
                    for (idx, &x) in members.iter().enumerate() {
                        t.push(vec![c.to_string(), idx.to_string(), x.to_string(), bit_string(x, p.n)]);
                    }
                }
                o.csv(&format!("clusters_{}.csv", tag(i)), &t)?;
                let sizes: Vec<usize> = p.clusters.iter().map(Vec::len).collect();
                overview.push(vec![
                    i.to_string(),
                    f.seed().to_string(),
                    e.set.len().to_string(),
                    "true".into(),
                    p.clusters.len().to_string(),
                    opt(sizes.iter().max()),
                    p.max_intra.to_string(),
                    opt(p.min_inter),
                ]);
                row["clusters"] = json!(p.clusters.len());
                row["sizes"] = json!(sizes);
                row["max_intra"] = json!(p.max_intra);
                row["min_inter"] = json!(p.min_inter);
            }
            None => {
                overview.push(vec![
                    i.to_string(),
                    f.seed().to_string(),
                    e.set.len().to_string(),
                    "false".into(),
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                ]);
                row["clusters"] = Value::Null;
            }
        }
        rows.push(row);
    }
    o.csv("clusters.csv", &overview)?;
    Ok(Report::ok(json!({ "nu1": nu1, "nu2": nu2, "instances": rows })))
}

/// Ground-state checks shared by the K-SAT and quantized p-spin paths.
#[derive(Debug, Clone, Serialize)]
struct GroundCheck {
    qubits: usize,
    layout_hash: String,
    gamma: f64,
    energy: f64,
    terms: Vec<f64>,
    /// Max `|P(z) - gamma^(2 viol) / Z|` over all strings.
    max_abs_error: f64,
    /// Probability on strings that are not fiber-consistent.
    off_support_mass: f64,
}

impl GroundCheck {
    fn failures(&self, what: &str) -> Vec<String> {
        let mut v = Vec::new();
        if self.energy > ENERGY_TOL {
            v.push(format!("{what}: ground energy {} exceeds {ENERGY_TOL}", self.energy));
        }
        if self.max_abs_error > DISTRIBUTION_TOL {
            v.push(format!(
                "{what}: measurement distribution off by {} (tolerance {DISTRIBUTION_TOL})",
                self.max_abs_error
            ));
        }
        v
    }
}

fn ground_check(
    layout: &QubitLayout,
    gamma: f64,
) -> Result<(GroundCheck, nlts_core::hamiltonian::StateVector, nlts_core::hamiltonian::Distribution), CliError> {
    let psi = ground_state(layout, gamma)?;
    let (e, terms) = energy(layout, &psi, gamma)?;
    let dist = measurement_distribution(&psi)?;
    let sys = layout.system();
    // Variables outside every constraint share one slot string, so weights are set, not summed.
    let mut expected = vec![0.0; layout.dim()];
    for x in 0..1u64 << layout.n_vars() {
        expected[layout.embed(x) as usize] = gamma.powi(2 * sys.violations(x) as i32);
    }
    let z: f64 = expected.iter().sum();
    for w in &mut expected {
        *w /= z;
    }
    let max_abs_error = dist
        .probs
        .iter()
        .zip(&expected)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let off_support_mass = dist
        .support()
        .filter(|&(s, _)| !layout.is_fiber_consistent(s))
        .map(|(_, p)| p)
        .sum();
    Ok((
        GroundCheck {
            qubits: layout.qubits(),
            layout_hash: layout.layout_hash(),
            gamma,
            energy: e,
            terms,
            max_abs_error,
            off_support_mass,
        },
        psi,
        dist,
    ))
}

fn hamiltonian(cfg: &ExperimentConfig, o: &mut Outputs) -> Result<Report, CliError> {
    let gamma = required(cfg.analysis.gamma, "gamma")?;
    let fs = formulas(cfg)?;
    let cap = cfg.caps.qubit_cap;
    type Done = (GroundCheck, nlts_core::hamiltonian::StateVector, nlts_core::hamiltonian::Distribution, ProbabilityBoundReport, QubitLayout);
    let results: Vec<Done> = per_instance(fs.len(), |i| {
        let f = &fs[i];
        let layout = build_layout(f, cap)?;
        let (check, psi, dist) = ground_check(&layout, gamma)?;
        let bound =
            check_probability_bound_for_formula(f, &layout, gamma, &VarSet::full(f.n()), &psi, cfg.caps.eta_budget)?;
        Ok((check, psi, dist, bound, layout))
    })?;
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (i, (f, (check, psi, dist, bound, layout))) in fs.iter().zip(&results).enumerate() {
        o.csv(&format!("distribution_{}.csv", tag(i)), &distribution_table(dist))?;
        let record = json!({
            "instance": i,
            "seed": f.seed(),
            "n": f.n(),
            "m": f.m(),
            "k": f.k(),
            "ground": check,
            "probability_bound": bound,
        });
        o.json(&format!("hamiltonian_{}.json", tag(i)), &record)?;
        if cfg.run.dump_state {
            let stem = format!("state_{}", tag(i));
            write_state(psi, layout, gamma, &o.dir().join(&stem))?;
            o.adopt(&format!("{stem}.bin"))?;
            o.adopt(&format!("{stem}.json"))?;
        }
        failures.extend(check.failures(&format!("instance {i}")));
        if !bound.passed() {
            failures.push(format!("instance {i}: probability bound check failed"));
        }
        rows.push(json!({
            "instance": i,
            "seed": f.seed(),
            "qubits": check.qubits,
            "energy": check.energy,
            "max_abs_error": check.max_abs_error,
            "probability_bound_passed": bound.passed(),
        }));
    }
    Ok(Report {
        summary: json!({ "gamma": gamma, "instances": rows }),
        failures,
    })
}

#[derive(Serialize)]
struct PspinInstance<'a> {
    hypergraph: &'a RegularHypergraph,
    couplings: &'a CouplingVector,
}

struct PspinResult {
    g: RegularHypergraph,
    j: CouplingVector,
    ground: (u64, i64),
    near: SolutionSet,
    hist: OverlapHistogram,
    ogp: Option<OgpReport>,
    quantized: Option<GroundCheck>,
}

/// Coupling stream of an instance: `instance_seed(seed, 1)`, so it never shares the hypergraph's stream.
pub fn coupling_seed(seed: u64) -> u64 {
    instance_seed(seed, 1)
}

fn pspin(cfg: &ExperimentConfig, o: &mut Outputs) -> Result<Report, CliError> {
    let n = required(cfg.model.n, "n")?;
    let d = required(cfg.model.d, "d")?;
    let p = required(cfg.model.p, "p")?;
    if n > cfg.caps.max_n {
        return Err(LabError::Resource {
            what: "p-spin brute force",
            required: n as u128,
            budget: cfg.caps.max_n as u128,
        }
        .into());
    }
    let slack = cfg.analysis.slack.unwrap_or(0);
    let seeds = cfg.instance_seeds()?;
    let ecfg = cfg.caps.enumeration();
    let nus = match (cfg.analysis.nu1, cfg.analysis.nu2) {
        (Some(a), Some(b)) => Some((a, b)),
        (None, None) => None,
        _ => return Err(CliError::validation("give both nu1 and nu2 or neither")),
    };
    let results = per_instance(seeds.len(), |i| {
        let g = generate_regular_hypergraph(n, d, p, seeds[i])?;
        let j = generate_couplings(g.m(), coupling_seed(seeds[i]));
        let (sigma, e0) = ground_state_bruteforce(&g, &j)?;
        let bits = sigma
            .to_bits()
            .ok_or_else(|| CliError::internal("ground state does not pack into a word"))?;
        let near = near_ground_set(&g, &j, slack)?;
        let hist = overlap_histogram(&near, &ecfg)?;
        let ogp = match nus {
            Some((a, b)) => Some(detect_ogp(&near, a, b, &ecfg)?),
            None => None,
        };
        let quantized = match cfg.analysis.gamma {
            Some(gamma) => {
                let layout = quantize(&g, &j, cfg.caps.qubit_cap)?;
                Some(ground_check(&layout, gamma)?.0)
            }
            None => None,
        };
        Ok(PspinResult {
            g,
            j,
            ground: (bits, e0),
            near,
            hist,
            ogp,
            quantized,
        })
    })?;
    let mut t = CsvTable::new(
        "pspin_ground",
        1,
        &["instance", "seed", "n", "d", "p", "m", "ground_energy", "per_spin", "ground_bits", "near_count", "ogp_holds"],
    );
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (i, r) in results.iter().enumerate() {
        o.json(
            &format!("hypergraph_{}.json", tag(i)),
            &PspinInstance {
                hypergraph: &r.g,
                couplings: &r.j,
            },
        )?;
        o.csv(&format!("near_ground_{}.csv", tag(i)), &solution_set_table(&r.near))?;
        o.csv(&format!("histogram_{}.csv", tag(i)), &histogram_table(&r.hist))?;
        let per_spin = r.ground.1 as f64 / n as f64;
        t.push(vec![
            i.to_string(),
            seeds[i].to_string(),
            n.to_string(),
            d.to_string(),
            p.to_string(),
            r.g.m().to_string(),
            r.ground.1.to_string(),
            per_spin.to_string(),
            bit_string(r.ground.0, n),
            r.near.len().to_string(),
            opt(r.ogp.as_ref().map(|g| g.holds)),
        ]);
        if let Some(q) = &r.quantized {
            failures.extend(q.failures(&format!("instance {i} (quantized)")));
        }
        rows.push(json!({
            "instance": i,
            "seed": seeds[i],
            "m": r.g.m(),
            "ground_energy": r.ground.1,
            "per_spin": per_spin,
            "near_count": r.near.len(),
            "ogp": r.ogp,
            "quantized": r.quantized,
        }));
    }
    o.csv("ground.csv", &t)?;
    Ok(Report {
        summary: json!({ "n": n, "d": d, "p": p, "slack": slack, "instances": rows }),
        failures,
    })
}

fn scan_grids(cfg: &ExperimentConfig) -> ScanGrids {
    let mut g = ScanGrids::default();
    let a = &cfg.analysis;
    if let Some(v) = a.gamma {
        g.gamma = vec![v];
    }
    if let Some(v) = a.lambda {
        g.lambda = vec![v];
    }
    if let Some(v) = a.nu2 {
        g.nu2 = vec![v];
    }
    g
}

fn bool_cell(b: bool) -> String {
    if b { "1" } else { "0" }.into()
}

fn scan_row_cells(r: &ScanRow) -> Vec<String> {
    let p = &r.params;
    let c = &r.consistency;
    vec![
        p.k.to_string(),
        p.nu1.to_string(),
        p.nu2.to_string(),
        p.gamma.to_string(),
        p.lambda.to_string(),
        p.delta.to_string(),
        p.eta.to_string(),
        p.eps.to_string(),
        r.sup_rate.to_string(),
        (r.sup_rate / LN_2).to_string(),
        bool_cell(r.rate_ok),
        bool_cell(c.delta_ok.holds),
        bool_cell(c.gamma_lambda.holds),
        bool_cell(c.params1.holds),
        bool_cell(c.params2.holds),
        bool_cell(c.params3.holds),
        r.azuma.value.to_string(),
        bool_cell(r.azuma.in_regime),
        bool_cell(r.feasible),
    ]
}

pub const SCAN_COLUMNS: [&str; 19] = [
    "k",
    "nu1",
    "nu2",
    "gamma",
    "lambda",
    "delta",
    "eta",
    "eps",
    "sup_rate_nats",
    "sup_rate_bits",
    "rate_ok",
    "delta_ok",
    "gamma_lambda_ok",
    "params1_ok",
    "params2_ok",
    "params3_ok",
    "azuma_value",
    "azuma_in_regime",
    "feasible",
];

fn theory_scan(cfg: &ExperimentConfig, o: &mut Outputs) -> Result<Report, CliError> {
    let alpha = required(cfg.model.alpha, "alpha")?;
    let ks = cfg
        .analysis
        .ks
        .clone()
        .or_else(|| cfg.model.k.map(|k| vec![k as u32]))
        .ok_or_else(|| CliError::validation("missing parameter ks"))?;
    let grids = scan_grids(cfg);
    let result = scan_regime(alpha, &ks, &grids)?;
    let mut t = CsvTable::new("theory_scan", 1, &SCAN_COLUMNS);
    for r in &result.rows {
        t.push(scan_row_cells(r));
    }
    o.csv("scan.csv", &t)?;

    let fmin = |v: &mut dyn Iterator<Item = f64>| v.fold(None, |m: Option<f64>, x| Some(m.map_or(x, |m| m.min(x))));
    let fmax = |v: &mut dyn Iterator<Item = f64>| v.fold(None, |m: Option<f64>, x| Some(m.map_or(x, |m| m.max(x))));
    let per_k: Vec<Value> = ks
        .iter()
        .map(|&k| {
            let rows: Vec<&ScanRow> = result.rows.iter().filter(|r| r.params.k == k).collect();
            let feas: Vec<&ScanRow> = rows.iter().copied().filter(|r| r.feasible).collect();
            json!({
                "k": k,
                "points": rows.len(),
                "feasible": feas.len(),
                "min_sup_rate": fmin(&mut rows.iter().map(|r| r.sup_rate)),
                "nu2_min": fmin(&mut feas.iter().map(|r| r.params.nu2)),
                "nu2_max": fmax(&mut feas.iter().map(|r| r.params.nu2)),
                "nu1_min": fmin(&mut feas.iter().map(|r| r.params.nu1)),
                "nu1_max": fmax(&mut feas.iter().map(|r| r.params.nu1)),
                "gamma_min": fmin(&mut feas.iter().map(|r| r.params.gamma)),
                "gamma_max": fmax(&mut feas.iter().map(|r| r.params.gamma)),
                "lambda_min": fmin(&mut feas.iter().map(|r| r.params.lambda)),
                "eta_max": fmax(&mut feas.iter().map(|r| r.params.eta)),
                "eps_max": fmax(&mut feas.iter().map(|r| r.params.eps)),
            })
        })
        .collect();
    let summary = json!({
        "alpha": alpha,
        "ks": ks,
        "points": result.rows.len(),
        "feasible": result.rows.iter().filter(|r| r.feasible).count(),
        "rate_ceiling": grids.rate_ceiling,
        "s_step": grids.s_step,
        "per_k": per_k,
    });
    o.json("scan_summary.json", &summary)?;
    Ok(Report::ok(summary))
}

fn depth_bound(cfg: &ExperimentConfig, o: &mut Outputs) -> Result<Report, CliError> {
    let a = &cfg.analysis;
    let d = required(a.distance, "distance")?;
    let n_bits = required(a.n_bits, "n_bits")?;
    let mu = required(a.mu, "mu")?;
    let b = depth_lower_bound(d, n_bits, mu, a.log_base.into())?;
    let base = match a.log_base {
        crate::config::Base::Two => "two",
        crate::config::Base::Natural => "natural",
    };
    let mut t = CsvTable::new("depth_bound", 1, &["distance", "n_bits", "mu", "outer_log_base", "depth", "vacuous"]);
    t.push(vec![
        d.to_string(),
        n_bits.to_string(),
        mu.to_string(),
        base.into(),
        b.value.to_string(),
        bool_cell(b.vacuous),
    ]);
    o.csv("depth.csv", &t)?;
    let summary = json!({
        "distance": d,
        "n_bits": n_bits,
        "mu": mu,
        "outer_log_base": base,
        "inner_log": "natural",
        "depth": b.value,
        "vacuous": b.vacuous,
    });
    o.json("depth.json", &summary)?;
    Ok(Report::ok(summary))
}
