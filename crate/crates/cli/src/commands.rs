use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use multinorm::calderon::{MultiNormFamily, Profile};
use multinorm::grid::SampledFunction;
use multinorm::hardy::{h1_norm, AtomValidator, Decomposer, Decomposition, Verdict};
use multinorm::journe::{self, carbery_seeger_check, complete_string, random_open_set, string_contains, string_enlarge, Instance, Model};
use multinorm::kernels::{validate_multiplier, Expr, Multiplier};
use multinorm::partitions::ConeCensus;
use multinorm::plot::figure_svg;
use multinorm::scales::ScaleLattice;
use multinorm::squarefn::{corpus, equivalence_report, Analyzer, SquareFunctionSpec, SquareKind};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

pub const CACHE_ENV: &str = "MULTINORM_CACHE";

fn write(path: &Path, contents: impl AsRef<[u8]>) -> CliResult<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| CliError::File(dir.to_path_buf(), e))?;
    }
    fs::write(path, contents).map_err(|e| CliError::File(path.to_path_buf(), e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    write(path, serde_json::to_string_pretty(value)? + "\n")
}

fn csv_writer(path: &Path) -> CliResult<csv::Writer<fs::File>> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| CliError::File(dir.to_path_buf(), e))?;
    }
    Ok(csv::Writer::from_path(path)?)
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn rat_text(r: &multinorm::Rat) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

fn one_based(v: &[usize]) -> String {
    v.iter().map(|k| (k + 1).to_string()).collect::<Vec<_>>().join(" ")
}

/// A JSON report with the effective configuration attached.
#[derive(Serialize)]
struct Report<'a, T: Serialize> {
    config: &'a RunConfig,
    #[serde(flatten)]
    body: T,
}

pub fn validate(cfg: &RunConfig) -> CliResult<String> {
    let s = cfg.structure()?;
    let census = ConeCensus::new(&s.matrix);
    let nonempty = census.nonempty.iter().filter(|&&b| b).count();
    let mut out = format!("valid; {} partitions, {} cones nonempty\n", census.partitions.len(), nonempty);
    for (p, ok) in census.partitions.iter().zip(&census.nonempty) {
        out += &format!("{}\t{}\n", p.encode(), if *ok { "interior" } else { "empty" });
    }
    Ok(out)
}

pub fn scales(cfg: &RunConfig) -> CliResult<String> {
    let s = cfg.structure()?;
    let lattice = ScaleLattice::new(&s);
    let n = lattice.n();
    let path = cfg.output.join("scales.csv");
    let mut w = csv_writer(&path)?;
    let mut header: Vec<String> = (1..=n).map(|j| format!("l{j}")).collect();
    header.extend(["dotted".into(), "partition".into()]);
    w.write_record(&header)?;
    let list = lattice.enumerate(cfg.bound);
    for sc in &list {
        let mut row: Vec<String> = sc.l.iter().map(|v| v.to_string()).collect();
        row.push(one_based(&sc.dotted));
        row.push(sc.partition_label());
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| CliError::File(path.clone(), e))?;
    cfg.echo(&cfg.output)?;
    let cover = lattice.tube_cover_check(cfg.bound);
    let msg = format!("{} scales up to {}; tube cover: {} cubes, {} violations\n", list.len(), cfg.bound, cover.cubes_checked, cover.violations.len());
    if !cover.violations.is_empty() {
        return Err(CliError::Check(msg));
    }
    Ok(msg)
}

pub fn kappa(cfg: &RunConfig, bounds: &[i64]) -> CliResult<String> {
    let lattice = ScaleLattice::new(&cfg.structure()?);
    let path = cfg.output.join("kappa.csv");
    let mut w = csv_writer(&path)?;
    w.write_record(["bound", "kappa1", "kappa2", "kappa3", "kappa4", "crude"])?;
    let mut reports = Vec::new();
    for &b in bounds {
        let r = lattice.kappa_diagnostics(b);
        let mut row = vec![b.to_string()];
        row.extend(r.kappa.iter().map(rat_text));
        row.push(rat_text(&r.crude_bound));
        w.write_record(&row)?;
        reports.push(r);
    }
    w.flush().map_err(|e| CliError::File(path.clone(), e))?;
    cfg.echo(&cfg.output)?;
    let stable = reports.windows(2).all(|p| p[0].kappa == p[1].kappa);
    Ok(format!("kappa over bounds {bounds:?}: {}\n", if stable { "stable" } else { "changing" }))
}

pub fn plot(cfg: &RunConfig) -> CliResult<String> {
    let s = cfg.structure()?;
    let svg = figure_svg(&s.matrix, cfg.bound)?;
    let path = cfg.output.join("figure.svg");
    write(&path, svg)?;
    cfg.echo(&cfg.output)?;
    Ok(format!("wrote {}\n", path.display()))
}

pub fn equivalence(cfg: &RunConfig) -> CliResult<String> {
    let s = cfg.structure()?;
    let grid = cfg.grid(s.d())?;
    let tensor = Analyzer::new(MultiNormFamily::tensor(&s, Profile::default(), cfg.m, cfg.window)?, &grid)?;
    let conv = Analyzer::new(MultiNormFamily::convolution(&s, Profile::default(), cfg.m, cfg.window)?, &grid)?;
    let specs = [
        SquareFunctionSpec { name: "tensor".into(), kind: SquareKind::Tensor, analyzer: &tensor },
        SquareFunctionSpec { name: "pp".into(), kind: SquareKind::PlancherelPolya, analyzer: &tensor },
        SquareFunctionSpec { name: "conv".into(), kind: SquareKind::Convolution, analyzer: &conv },
        SquareFunctionSpec { name: "lattice".into(), kind: SquareKind::Lattice, analyzer: &conv },
    ];
    let members = corpus(&tensor.family, &grid, cfg.seed);
    let report = equivalence_report(&members, &specs, cfg.window, cfg.jobs)?;
    let path = cfg.output.join("equivalence.json");
    write_json(&path, &Report { config: cfg, body: &report })?;
    cfg.echo(&cfg.output)?;
    let mut out = String::new();
    for r in &report.ratios {
        let spread = r.spread.map_or("undefined".to_string(), |v| format!("{v:.4}"));
        out += &format!("{}/{}: [{:.4}, {:.4}] spread {spread}\n", r.numerator, r.denominator, r.min, r.max);
    }
    Ok(out)
}

#[derive(Serialize)]
struct DecomposeSummary {
    input: String,
    input_sha256: String,
    profile_sha256: String,
    terms: usize,
    pieces: usize,
    coefficient_sum: f64,
    h1_norm: f64,
    l1_norm: f64,
    input_l2: f64,
    residual_tail: f64,
    residual_assignment: f64,
    verdicts: Option<BTreeMap<String, usize>>,
    classes: BTreeMap<String, usize>,
}

/// Hash of the tabulated symbols the decomposition is built from.
fn profile_hash(analyzer: &Analyzer) -> String {
    let mut h = Sha256::new();
    for k in 0..analyzer.scales().len() {
        let (a, b) = analyzer.symbols(k);
        for v in a.iter().chain(b) {
            h.update(v.to_bits().to_le_bytes());
        }
    }
    hex(&h.finalize())
}

pub fn decompose(cfg: &RunConfig, input: &Path, validate: bool) -> CliResult<String> {
    let s = cfg.structure()?;
    let bytes = fs::read(input).map_err(|e| CliError::File(input.to_path_buf(), e))?;
    let f = SampledFunction::read_binary(&mut bytes.as_slice())?;
    let decomposer = Decomposer::new(&s, &f.grid, cfg.tau(), cfg.window)?;
    let input_sha = hex(&Sha256::digest(&bytes));
    let dir = cfg.output.join("decomposition");

    let cached = std::env::var_os(CACHE_ENV).map(|root| {
        let mut h = Sha256::new();
        h.update(env!("CARGO_PKG_VERSION"));
        h.update(&bytes);
        // outputs and worker counts do not change the result
        let key = RunConfig { output: PathBuf::new(), jobs: 1, ..cfg.clone() };
        h.update(key.to_toml());
        PathBuf::from(root).join(format!("decompose-{}", hex(&h.finalize())))
    });
    let dec = match &cached {
        Some(c) if c.join("decomposition.json").exists() => Decomposition::load(c, &s)?,
        _ => {
            let d = decomposer.decompose(&f, cfg.jobs)?;
            if let Some(c) = &cached {
                d.save(c)?;
            }
            d
        }
    };
    dec.save(&dir)?;

    let verdicts = if validate {
        let v = AtomValidator::new(&s);
        let mut counts = BTreeMap::from([("pass".to_string(), 0), ("borderline".to_string(), 0), ("fail".to_string(), 0)]);
        for t in &dec.terms {
            let key = match v.validate(&t.atom, cfg.epsilon())?.verdict {
                Verdict::Pass => "pass",
                Verdict::Borderline => "borderline",
                Verdict::Fail => "fail",
            };
            *counts.get_mut(key).expect("present") += 1;
        }
        Some(counts)
    } else {
        None
    };
    let summary = DecomposeSummary {
        input: input.file_name().map_or(String::new(), |n| n.to_string_lossy().into_owned()),
        input_sha256: input_sha,
        profile_sha256: profile_hash(&decomposer.analyzer),
        terms: dec.terms.len(),
        pieces: dec.diagnostics.pieces,
        coefficient_sum: dec.coefficient_sum(),
        h1_norm: h1_norm(&decomposer.analyzer, &f, cfg.window)?,
        l1_norm: f.quadrature_norm(1),
        input_l2: dec.diagnostics.input_l2,
        residual_tail: dec.diagnostics.residual_tail,
        residual_assignment: dec.diagnostics.residual_assignment,
        verdicts: verdicts.clone(),
        classes: dec.diagnostics.classes.iter().map(|(k, c)| (k.clone(), c.atoms)).collect(),
    };
    write_json(&cfg.output.join("decompose.json"), &Report { config: cfg, body: &summary })?;
    cfg.echo(&cfg.output)?;
    let msg = format!(
        "{} atoms over {} pieces; sum |lambda| = {:.6e}, h1 = {:.6e}, assignment residual {:.3e}, tail {:.3e}\n",
        summary.terms, summary.pieces, summary.coefficient_sum, summary.h1_norm, summary.residual_assignment, summary.residual_tail
    );
    if let Some(v) = &verdicts {
        if v["fail"] > 0 {
            return Err(CliError::Check(format!("{} atoms fail validation; outputs written to {}", v["fail"], cfg.output.display())));
        }
    }
    Ok(msg)
}

pub struct JourneArgs {
    pub instance: Option<PathBuf>,
    pub s: usize,
    pub depth: u32,
    pub count: usize,
    pub pieces: usize,
    pub max_degree: u32,
    pub constant: f64,
}

#[derive(Serialize)]
struct DepthSummary {
    s: usize,
    depth: u32,
    instances: usize,
    bar_over_omega: f64,
    hat_over_bar: f64,
    enlarged_over_omega: f64,
    worst_constant: f64,
    worst_degree: Option<u32>,
    all_pass: bool,
}

pub fn journe_cmd(cfg: &RunConfig, a: &JourneArgs) -> CliResult<String> {
    let instances: Vec<Instance> = match &a.instance {
        Some(p) => vec![Instance::load(p)?],
        None => {
            let model = Model::new(a.s, a.depth)?;
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            let string = complete_string(a.s);
            (0..a.count)
                .map(|k| Instance::new(&random_open_set(model, 1 + (k % a.pieces.max(1)), 3, &mut rng), None, &string))
                .collect()
        }
    };
    let options = journe::CarberySeegerOptions { max_degree: a.max_degree, bound: a.constant };
    let mut rows = csv_writer(&cfg.output.join("journe-rows.csv"))?;
    rows.write_record(["instance", "subset", "m", "lhs", "ratio"])?;
    let mut fits = csv_writer(&cfg.output.join("journe.csv"))?;
    fits.write_record(["instance", "s", "depth", "subset", "degree", "constant", "slope", "pass"])?;
    let mut measures = csv_writer(&cfg.output.join("journe-measures.csv"))?;
    measures.write_record(["instance", "omega", "bar", "hat", "enlarged", "bar_inside_enlarged"])?;
    let mut by_depth: BTreeMap<(usize, u32), DepthSummary> = BTreeMap::new();
    let mut failures = Vec::new();
    for (k, inst) in instances.iter().enumerate() {
        let name = format!("instance-{k:03}");
        if a.instance.is_none() {
            let dir = cfg.output.join("instances");
            fs::create_dir_all(&dir).map_err(|e| CliError::File(dir.clone(), e))?;
            inst.save(&cfg.output.join("instances").join(format!("{name}.json")))?;
        }
        let (omega, family, string) = inst.resolve()?;
        let state = string_enlarge(&omega, &family, &string)?;
        if !state.embedding_holds() {
            failures.push(format!("{name}: an enlarged rectangle leaves the next enlargement"));
        }
        let c = state.comparabilities()?;
        measures.write_record([name.clone(), c.omega.to_string(), c.bar.to_string(), c.hat.to_string(), c.enlarged.to_string(), c.bar_inside_enlarged.to_string()])?;
        let d = by_depth.entry((inst.s, inst.depth)).or_insert(DepthSummary {
            s: inst.s,
            depth: inst.depth,
            instances: 0,
            bar_over_omega: 0.0,
            hat_over_bar: 0.0,
            enlarged_over_omega: 0.0,
            worst_constant: 0.0,
            worst_degree: Some(0),
            all_pass: true,
        });
        d.instances += 1;
        d.bar_over_omega = d.bar_over_omega.max(c.bar / c.omega);
        d.hat_over_bar = d.hat_over_bar.max(c.hat / c.bar);
        d.enlarged_over_omega = d.enlarged_over_omega.max(c.enlarged / c.omega);
        if !c.bar_inside_enlarged {
            d.all_pass = false;
            failures.push(format!("{name}: the barred set is not inside the last enlargement"));
        }
        for mask in 1..1usize << inst.s {
            let b: Vec<usize> = (0..inst.s).filter(|r| mask >> r & 1 == 1).collect();
            if !string_contains(&string, &b) {
                continue;
            }
            let rep = carbery_seeger_check(&state, &b, &options)?;
            let label = one_based(&b);
            for r in &rep.rows {
                rows.write_record([name.clone(), label.clone(), r.m.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" "), rat_text(&r.lhs), r.ratio.to_string()])?;
            }
            fits.write_record([
                name.clone(),
                inst.s.to_string(),
                inst.depth.to_string(),
                label.clone(),
                rep.fitted_degree.map_or("none".into(), |p| p.to_string()),
                rep.constant.to_string(),
                rep.slope.to_string(),
                rep.pass.to_string(),
            ])?;
            d.worst_constant = d.worst_constant.max(rep.constant);
            d.worst_degree = match (d.worst_degree, rep.fitted_degree) {
                (Some(x), Some(y)) => Some(x.max(y)),
                _ => None,
            };
            if !rep.pass {
                d.all_pass = false;
                failures.push(format!("{name} B={{{label}}}: no degree up to {} within {}", a.max_degree, a.constant));
            }
        }
    }
    for w in [&mut rows, &mut fits, &mut measures] {
        w.flush().map_err(|e| CliError::File(cfg.output.clone(), e))?;
    }
    let summary: Vec<&DepthSummary> = by_depth.values().collect();
    write_json(&cfg.output.join("journe.json"), &Report { config: cfg, body: BTreeMap::from([("depths", &summary)]) })?;
    cfg.echo(&cfg.output)?;
    let mut out = String::new();
    for d in &summary {
        out += &format!(
            "s={} depth={}: {} instances, degree {}, constant {:.3}, |bar|/|omega| <= {:.3}, |hat|/|bar| <= {:.3}\n",
            d.s,
            d.depth,
            d.instances,
            d.worst_degree.map_or("none".into(), |p| p.to_string()),
            d.worst_constant,
            d.bar_over_omega,
            d.hat_over_bar
        );
    }
    if !failures.is_empty() {
        return Err(CliError::Check(failures.join("; ")));
    }
    Ok(out)
}

pub fn symbol(cfg: &RunConfig, expr: &str, order: u32, samples: usize) -> CliResult<String> {
    let s = cfg.structure()?;
    let e = Expr::parse(expr)?;
    e.check(&s)?;
    let m = Multiplier::from_expr(&e, &s);
    let report = validate_multiplier(&m, &s, order, samples, cfg.seed)?;
    #[derive(Serialize)]
    struct Body<'a> {
        expression: String,
        grammar_version: u32,
        report: &'a multinorm::kernels::ValidationReport,
    }
    let body = Body { expression: e.to_string(), grammar_version: multinorm::kernels::EXPR_GRAMMAR_VERSION, report: &report };
    write_json(&cfg.output.join("symbol.json"), &Report { config: cfg, body })?;
    cfg.echo(&cfg.output)?;
    if !report.pass {
        return Err(CliError::Check(report.failures.join("; ")));
    }
    let worst = report.constants.iter().map(|c| c.near.max(c.far)).fold(0.0, f64::max);
    Ok(format!("symbol passes through order {order}; largest constant {worst:.4e}\n"))
}

pub enum SampleKind {
    Bump { width: f64 },
    Corpus,
}

pub fn sample(cfg: &RunConfig, kind: SampleKind, path: Option<&Path>) -> CliResult<String> {
    let s = cfg.structure()?;
    let grid = cfg.grid(s.d())?;
    match kind {
        SampleKind::Bump { width } => {
            if width <= 0.0 {
                return Err(CliError::Config("bump width must be positive".into()));
            }
            let f = SampledFunction::from_real_fn(&grid, |x| {
                let r2: f64 = x.iter().map(|v| v * v).sum::<f64>() / (width * width);
                if r2 < 1.0 {
                    (-1.0 / (1.0 - r2)).exp()
                } else {
                    0.0
                }
            });
            let path = path.map(Path::to_path_buf).unwrap_or_else(|| cfg.output.join("bump.bin"));
            if let Some(dir) = path.parent() {
                fs::create_dir_all(dir).map_err(|e| CliError::File(dir.to_path_buf(), e))?;
            }
            f.save(&path)?;
            Ok(format!("wrote {}\n", path.display()))
        }
        SampleKind::Corpus => {
            let fam = MultiNormFamily::tensor(&s, Profile::default(), cfg.m, cfg.window)?;
            let dir = path.map(Path::to_path_buf).unwrap_or_else(|| cfg.output.join("corpus"));
            fs::create_dir_all(&dir).map_err(|e| CliError::File(dir.clone(), e))?;
            let members = corpus(&fam, &grid, cfg.seed);
            for m in &members {
                m.function.save(&dir.join(format!("{}.bin", m.name.replace([' ', '[', ']', ','], ""))))?;
            }
            cfg.echo(&dir)?;
            Ok(format!("wrote {} corpus members to {}\n", members.len(), dir.display()))
        }
    }
}
