//! The subcommands, as library functions over an [`ExperimentConfig`].

use std::collections::HashMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use ndarray::Array2;
use rand::Rng;

use rbm_complexity::bounds::{sauer_shelah_ln_card, BoundReport};
use rbm_complexity::format::{format_sig17, parse_dataset, parse_members, write_dataset, write_params};
use rbm_complexity::meanfield::{train_cd1, TrainSettings, TrainingTrace};
use rbm_complexity::rademacher::{
    estimate_r_cd1_log_z, estimate_r_f, estimate_r_finite_t, estimate_r_g, estimate_r_h, estimate_r_loglik_part1,
    estimate_r_t, project_l1_in_place, random_t_members, sample_sigma_batch, ClassName, ConstraintSpec,
    EstimateReport, OptimizerSettings,
};
use rbm_complexity::rbm::{sample_dataset, BinaryDataset, RbmParams};
use rbm_complexity::stream_rng;

use crate::config::{DataSource, ExperimentConfig};
use crate::error::{CliError, CliResult};

pub const DATASET_FILE: &str = "dataset.txt";
pub const GROUND_TRUTH_FILE: &str = "ground_truth.txt";
pub const BOUNDS_FILE: &str = "bounds.csv";
pub const COMPARISON_FILE: &str = "comparison.csv";
pub const INCREASE_FILE: &str = "complexity_increase.csv";
pub const TRACE_FILE: &str = "trace.csv";

/// Stream of the run seed reserved for the training initialization; the
/// epoch shuffles use streams `1..=epochs`.
const INIT_STREAM: u64 = 1 << 40;
const INIT_SCALE: f64 = 0.1;

pub const BOUNDS_HEADER: [&str; 10] = ["bound_name", "B", "W", "k", "m", "n", "d", "ln_card_T", "vc", "value"];
pub const ESTIMATE_HEADER: [&str; 12] = [
    "class_name",
    "n",
    "k",
    "m",
    "B_radius",
    "W_radius",
    "num_sigma",
    "restarts",
    "inner_sup_kind",
    "mean",
    "stderr",
    "seed",
];
pub const COMPARISON_HEADER: [&str; 6] = [
    "class_name",
    "estimate_mean",
    "estimate_stderr",
    "bound_name",
    "bound_value",
    "satisfied",
];
pub const INCREASE_HEADER: [&str; 5] = [
    "part1_mean",
    "part1_stderr",
    "combined_mean",
    "combined_stderr",
    "increase_holds",
];

pub fn estimate_file(class: ClassName) -> String {
    format!("estimate_{class}.csv")
}

fn write_text(path: &Path, text: &str) -> CliResult<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(CliError::io(parent))?;
    }
    fs::write(path, text).map_err(CliError::io(path))
}

fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> CliResult<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(CliError::io(parent))?;
    }
    let mut w = csv::Writer::from_path(path).map_err(CliError::csv(path))?;
    w.write_record(header).map_err(CliError::csv(path))?;
    for row in rows {
        w.write_record(row).map_err(CliError::csv(path))?;
    }
    w.flush().map_err(CliError::io(path))
}

pub fn read_dataset(path: &Path) -> CliResult<BinaryDataset> {
    let text = fs::read_to_string(path).map_err(CliError::io(path))?;
    Ok(parse_dataset(&text)?)
}

/// Fair coin flips, row by row.
pub fn bernoulli_half(n: usize, k: usize, seed: u64) -> CliResult<BinaryDataset> {
    let mut rng = stream_rng(seed, 0);
    let samples = Array2::from_shape_simple_fn((n, k), || u8::from(rng.gen::<bool>()));
    Ok(BinaryDataset::new(samples)?)
}

/// Bias-free machine whose weights are uniform in `[-1, 1]`, each column then
/// rescaled onto the ℓ1 sphere of radius `w_radius`.
pub fn ground_truth_rbm(k: usize, m: usize, w_radius: f64, seed: u64) -> CliResult<RbmParams> {
    if !(w_radius >= 0.0 && w_radius.is_finite()) {
        return Err(CliError::Config(format!("W_radius must be finite and >= 0, got {w_radius}")));
    }
    let mut rng = stream_rng(seed, 0);
    let mut w = Array2::from_shape_simple_fn((k, m), || rng.gen_range(-1.0..=1.0));
    for mut col in w.columns_mut() {
        let norm: f64 = col.iter().map(|x: &f64| x.abs()).sum();
        if norm > 0.0 {
            col.mapv_inplace(|x| x * w_radius / norm);
        }
    }
    Ok(RbmParams::from_weights(w)?)
}

/// Writes `dataset.txt` (and `ground_truth.txt` for the RBM source).
pub fn gen_data(cfg: &ExperimentConfig) -> CliResult<BinaryDataset> {
    cfg.validate()?;
    let data = match cfg.data_source {
        DataSource::BernoulliHalf => bernoulli_half(cfg.n, cfg.k, cfg.seed)?,
        DataSource::GroundTruthRbm => {
            let truth = ground_truth_rbm(cfg.k, cfg.m, cfg.w_radius, cfg.seed)?;
            let data = sample_dataset(&truth, cfg.n, cfg.seed.wrapping_add(1))?;
            write_text(&cfg.output_dir.join(GROUND_TRUTH_FILE), &write_params(&truth))?;
            data
        }
    };
    write_text(&cfg.output_dir.join(DATASET_FILE), &write_dataset(&data))?;
    Ok(data)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundsTable {
    pub rows: Vec<BoundReport>,
    /// Rows whose inputs fell outside a bound's domain.
    pub skipped: Vec<String>,
}

/// Every bound over the config grid, one block of rows per `vc`.
pub fn compute_bounds(cfg: &ExperimentConfig) -> CliResult<BoundsTable> {
    cfg.validate()?;
    let (b, w, k, m, n) = (cfg.b_radius, cfg.w_radius, cfg.k, cfg.m, cfg.n);
    let mut attempts: Vec<(String, rbm_complexity::Result<BoundReport>)> = vec![
        ("LEMMA1".into(), BoundReport::lemma1(b, k, n)),
        ("REMARK2".into(), BoundReport::remark2(w, k, n)),
        ("THEOREM1".into(), BoundReport::theorem1(b, w, k, m, n)),
        (
            format!("LEMMA4_FINITE num_members={}", cfg.num_members),
            BoundReport::lemma4_finite(w, (cfg.num_members as f64).ln(), n),
        ),
    ];
    for &vc in &cfg.vc_values {
        attempts.push((format!("SAUER_SHELAH vc={vc}"), BoundReport::sauer_shelah(vc, n)));
        let lemma4 = sauer_shelah_ln_card(vc, n).and_then(|ln_card| {
            let mut r = BoundReport::lemma4_finite(w, ln_card, n)?;
            r.inputs.insert("vc", f64::from(vc));
            Ok(r)
        });
        attempts.push((format!("LEMMA4_FINITE vc={vc}"), lemma4));
        attempts.push((format!("COROLLARY1 vc={vc}"), BoundReport::corollary1(w, k, m, n, vc)));
    }
    let mut table = BoundsTable {
        rows: Vec::new(),
        skipped: Vec::new(),
    };
    for (label, attempt) in attempts {
        match attempt {
            Ok(r) => table.rows.push(r),
            Err(e) => table.skipped.push(format!("{label}: {e}")),
        }
    }
    Ok(table)
}

fn render_input(column: &str, value: Option<&f64>) -> String {
    match (column, value) {
        (_, None) => String::new(),
        ("k" | "m" | "n" | "d" | "vc", Some(v)) => format!("{}", *v as u64),
        (_, Some(v)) => format_sig17(*v),
    }
}

/// Writes `bounds.csv`; skipped rows are reported on stderr.
pub fn bounds(cfg: &ExperimentConfig) -> CliResult<BoundsTable> {
    let table = compute_bounds(cfg)?;
    let rows: Vec<Vec<String>> = table
        .rows
        .iter()
        .map(|r| {
            let mut row = vec![r.bound_name.to_string()];
            row.extend(BOUNDS_HEADER[1..9].iter().map(|c| render_input(c, r.inputs.get(c))));
            row.push(format_sig17(r.value));
            row
        })
        .collect();
    for s in &table.skipped {
        eprintln!("skipped bound row ({s})");
    }
    write_csv(&cfg.output_dir.join(BOUNDS_FILE), &BOUNDS_HEADER, &rows)?;
    Ok(table)
}

pub fn optimizer_settings(cfg: &ExperimentConfig) -> OptimizerSettings {
    OptimizerSettings {
        restarts: cfg.restarts,
        iterations: cfg.iterations,
        step_size: cfg.step_size,
        ..OptimizerSettings::default()
    }
}

/// Runs one estimator and writes `estimate_<CLASS>.csv`.
///
/// `data` defaults to `dataset.txt` in the output directory. FINITE_T reads
/// its members from `members` when given, otherwise draws `num_members`
/// random members with columns of ℓ1 norm `W_radius`.
pub fn estimate(
    cfg: &ExperimentConfig,
    class: ClassName,
    data: Option<&Path>,
    members: Option<&Path>,
) -> CliResult<EstimateReport> {
    cfg.validate()?;
    let data_path = data.map_or_else(|| cfg.output_dir.join(DATASET_FILE), Path::to_path_buf);
    let data = read_dataset(&data_path)?;
    let mut batch = sample_sigma_batch(data.len(), cfg.num_sigma, cfg.seed)?;
    let spec = ConstraintSpec::new(cfg.b_radius, cfg.w_radius)?;
    let opt = optimizer_settings(cfg);
    let report = match class {
        ClassName::F => estimate_r_f(&data, &spec, &mut batch)?,
        ClassName::G => estimate_r_g(&data, &spec, &mut batch)?,
        ClassName::H => estimate_r_h(&data, &spec, &mut batch, &opt)?,
        ClassName::LoglikPart1 => estimate_r_loglik_part1(&data, &spec, cfg.m, &mut batch, &opt)?,
        ClassName::T => estimate_r_t(&data, &spec, cfg.m, &mut batch, &opt)?,
        ClassName::Cd1LogZ => estimate_r_cd1_log_z(&data, &spec, cfg.m, &mut batch, &opt)?,
        ClassName::FiniteT => {
            let members = match members {
                Some(path) => {
                    let text = fs::read_to_string(path).map_err(CliError::io(path))?;
                    parse_members(&text)?
                }
                None => random_t_members(data.dim(), cfg.m, cfg.num_members, cfg.w_radius, cfg.seed)?,
            };
            estimate_r_finite_t(&data, &members, &mut batch)?
        }
    };
    if report.excluded > 0 {
        eprintln!(
            "{class}: {} of {} sigma vectors excluded (non-finite objective)",
            report.excluded,
            batch.len()
        );
    }
    let opt_int = |v: Option<usize>| v.map_or_else(String::new, |v| v.to_string());
    let opt_real = |v: Option<f64>| v.map_or_else(String::new, format_sig17);
    let row = vec![
        report.class_name.to_string(),
        report.n.to_string(),
        report.k.to_string(),
        opt_int(report.m),
        opt_real(report.b_radius),
        opt_real(report.w_radius),
        report.num_sigma.to_string(),
        report.optimizer_restarts.to_string(),
        report.inner_sup_kind.to_string(),
        format_sig17(report.mean),
        format_sig17(report.stderr),
        report.seed.to_string(),
    ];
    write_csv(&cfg.output_dir.join(estimate_file(class)), &ESTIMATE_HEADER, &[row])?;
    Ok(report)
}

type Record = HashMap<String, String>;

fn read_records(path: &Path) -> CliResult<Vec<Record>> {
    let mut reader = csv::Reader::from_path(path).map_err(CliError::csv(path))?;
    let headers = reader.headers().map_err(CliError::csv(path))?.clone();
    reader
        .records()
        .map(|rec| {
            let rec = rec.map_err(CliError::csv(path))?;
            Ok(headers
                .iter()
                .zip(rec.iter())
                .map(|(h, v)| (h.to_string(), v.to_string()))
                .collect())
        })
        .collect()
}

fn field(rec: &Record, key: &str, path: &Path) -> CliResult<Option<f64>> {
    match rec.get(key).map(String::as_str) {
        None => Err(CliError::Config(format!("{}: missing column `{key}`", path.display()))),
        Some("") => Ok(None),
        Some(s) => s
            .parse()
            .map(Some)
            .map_err(|e| CliError::Config(format!("{}: bad `{key}` value `{s}`: {e}", path.display()))),
    }
}

#[derive(Debug, Clone)]
struct BoundRow {
    name: String,
    inputs: HashMap<&'static str, Option<f64>>,
    value: f64,
}

#[derive(Debug, Clone)]
struct EstimateRow {
    class: ClassName,
    inputs: HashMap<&'static str, Option<f64>>,
    mean: f64,
    stderr: f64,
}

#[derive(Debug, Clone, Copy)]
enum Key {
    /// Bound input must equal this estimate field.
    Eq(&'static str, &'static str),
    /// Bound input must be at least this estimate field, up to a relative
    /// 1e-12 (projected members can overshoot their radius by an ulp).
    AtLeast(&'static str, &'static str),
    /// Bound input must be empty.
    Absent(&'static str),
    /// Bound input must be present.
    Present(&'static str),
}

fn join_keys(class: ClassName) -> Vec<(&'static str, Vec<Key>)> {
    use Key::*;
    match class {
        ClassName::F => vec![("LEMMA1", vec![Eq("B", "B_radius"), Eq("d", "k"), Eq("n", "n")])],
        ClassName::G => vec![("REMARK2", vec![Eq("W", "W_radius"), Eq("d", "k"), Eq("n", "n")])],
        ClassName::H => vec![
            ("LEMMA1", vec![Eq("B", "B_radius"), Eq("d", "k"), Eq("n", "n")]),
            ("REMARK2", vec![Eq("W", "W_radius"), Eq("d", "k"), Eq("n", "n")]),
        ],
        ClassName::LoglikPart1 => vec![(
            "THEOREM1",
            vec![
                Eq("B", "B_radius"),
                Eq("W", "W_radius"),
                Eq("k", "k"),
                Eq("m", "m"),
                Eq("n", "n"),
            ],
        )],
        ClassName::FiniteT => vec![(
            "LEMMA4_FINITE",
            vec![AtLeast("W", "W_radius"), Eq("n", "n"), Absent("vc")],
        )],
        ClassName::T => vec![(
            "LEMMA4_FINITE",
            vec![Eq("W", "W_radius"), Eq("n", "n"), Present("vc")],
        )],
        ClassName::Cd1LogZ => vec![(
            "COROLLARY1",
            vec![Eq("W", "W_radius"), Eq("k", "k"), Eq("m", "m"), Eq("n", "n")],
        )],
    }
}

fn matches(bound: &BoundRow, est: &EstimateRow, keys: &[Key]) -> bool {
    let b = |c: &str| bound.inputs.get(c).copied().flatten();
    let e = |c: &str| est.inputs.get(c).copied().flatten();
    keys.iter().all(|key| match *key {
        Key::Eq(bc, ec) => matches!((b(bc), e(ec)), (Some(x), Some(y)) if x == y),
        Key::AtLeast(bc, ec) => matches!((b(bc), e(ec)), (Some(x), Some(y)) if x >= y - 1e-12 * y.abs()),
        Key::Absent(bc) => b(bc).is_none(),
        Key::Present(bc) => b(bc).is_some(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub class_name: ClassName,
    pub estimate_mean: f64,
    pub estimate_stderr: f64,
    pub bound_name: String,
    pub bound_value: f64,
    pub satisfied: bool,
}

/// R̂ of LOGLIK_PART1 against R̂(LOGLIK_PART1) + R̂(CD1_LOGZ).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexityIncrease {
    pub part1_mean: f64,
    pub part1_stderr: f64,
    pub combined_mean: f64,
    pub combined_stderr: f64,
    /// `combined_mean ≥ part1_mean − 3·combined_stderr`.
    pub increase_holds: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub rows: Vec<ComparisonRow>,
    /// Estimates with no matching bound row.
    pub mismatches: Vec<String>,
    pub increase: Option<ComplexityIncrease>,
}

pub fn satisfied(mean: f64, stderr: f64, bound: f64) -> bool {
    mean <= bound + 3.0 * stderr
}

fn load_bounds(path: &Path) -> CliResult<Vec<BoundRow>> {
    read_records(path)?
        .iter()
        .map(|rec| {
            let mut inputs = HashMap::new();
            for c in &BOUNDS_HEADER[1..9] {
                inputs.insert(*c, field(rec, c, path)?);
            }
            Ok(BoundRow {
                name: rec.get("bound_name").cloned().unwrap_or_default(),
                inputs,
                value: field(rec, "value", path)?.unwrap_or(f64::NAN),
            })
        })
        .collect()
}

fn load_estimates(dir: &Path) -> CliResult<Vec<EstimateRow>> {
    let mut out = Vec::new();
    for class in ClassName::ALL {
        let path = dir.join(estimate_file(class));
        if !path.exists() {
            continue;
        }
        for rec in read_records(&path)? {
            let mut inputs = HashMap::new();
            for c in ["n", "k", "m", "B_radius", "W_radius"] {
                inputs.insert(c, field(&rec, c, &path)?);
            }
            out.push(EstimateRow {
                class,
                inputs,
                mean: field(&rec, "mean", &path)?.unwrap_or(f64::NAN),
                stderr: field(&rec, "stderr", &path)?.unwrap_or(f64::NAN),
            });
        }
    }
    Ok(out)
}

fn label(bound: &BoundRow) -> String {
    match bound.inputs.get("vc").copied().flatten() {
        Some(vc) => format!("{}[vc={}]", bound.name, vc as u64),
        None => bound.name.clone(),
    }
}

/// Joins every `estimate_*.csv` in the output directory against
/// `bounds.csv`, writing `comparison.csv` and, when both the LOGLIK_PART1 and
/// CD1_LOGZ estimates exist, `complexity_increase.csv`.
pub fn compare(cfg: &ExperimentConfig) -> CliResult<Comparison> {
    let dir = &cfg.output_dir;
    let bounds = load_bounds(&dir.join(BOUNDS_FILE))?;
    let estimates = load_estimates(dir)?;
    if estimates.is_empty() {
        return Err(CliError::Io {
            path: dir.clone(),
            source: io::Error::new(io::ErrorKind::NotFound, "no estimate CSVs to compare"),
        });
    }
    let mut rows = Vec::new();
    let mut mismatches = Vec::new();
    for est in &estimates {
        let keys = join_keys(est.class);
        let found: Vec<Vec<&BoundRow>> = keys
            .iter()
            .map(|(name, keys)| {
                bounds
                    .iter()
                    .filter(|b| b.name == *name && matches(b, est, keys))
                    .collect()
            })
            .collect();
        if found.iter().any(Vec::is_empty) {
            mismatches.push(format!("{}: no bound row matches the estimate inputs", est.class));
            continue;
        }
        let mut push = |bound_name: String, bound_value: f64| {
            rows.push(ComparisonRow {
                class_name: est.class,
                estimate_mean: est.mean,
                estimate_stderr: est.stderr,
                bound_name,
                bound_value,
                satisfied: satisfied(est.mean, est.stderr, bound_value),
            })
        };
        if found.len() == 1 {
            for b in &found[0] {
                push(label(b), b.value);
            }
        } else {
            // sub-additive pairing: one row per combination
            for a in &found[0] {
                for b in &found[1] {
                    push(format!("{}+{}", label(a), label(b)), a.value + b.value);
                }
            }
        }
    }
    let csv_rows: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.class_name.to_string(),
                format_sig17(r.estimate_mean),
                format_sig17(r.estimate_stderr),
                r.bound_name.clone(),
                format_sig17(r.bound_value),
                r.satisfied.to_string(),
            ]
        })
        .collect();
    write_csv(&dir.join(COMPARISON_FILE), &COMPARISON_HEADER, &csv_rows)?;
    for m in &mismatches {
        eprintln!("join mismatch: {m}");
    }

    let find = |class| estimates.iter().find(|e| e.class == class);
    let increase = match (find(ClassName::LoglikPart1), find(ClassName::Cd1LogZ)) {
        (Some(p1), Some(cd)) => {
            let inc = complexity_increase(p1.mean, p1.stderr, cd.mean, cd.stderr);
            let row = vec![
                format_sig17(inc.part1_mean),
                format_sig17(inc.part1_stderr),
                format_sig17(inc.combined_mean),
                format_sig17(inc.combined_stderr),
                inc.increase_holds.to_string(),
            ];
            write_csv(&dir.join(INCREASE_FILE), &INCREASE_HEADER, &[row])?;
            Some(inc)
        }
        _ => None,
    };
    Ok(Comparison {
        rows,
        mismatches,
        increase,
    })
}

pub fn complexity_increase(part1_mean: f64, part1_stderr: f64, cd1_mean: f64, cd1_stderr: f64) -> ComplexityIncrease {
    let combined_mean = part1_mean + cd1_mean;
    let combined_stderr = part1_stderr.hypot(cd1_stderr);
    ComplexityIncrease {
        part1_mean,
        part1_stderr,
        combined_mean,
        combined_stderr,
        increase_holds: combined_mean >= part1_mean - 3.0 * combined_stderr,
    }
}

/// Bias-free starting point with weights uniform in `[-0.1, 0.1]`.
pub fn initial_params(k: usize, m: usize, seed: u64) -> CliResult<RbmParams> {
    let mut rng = stream_rng(seed, INIT_STREAM);
    let w = Array2::from_shape_simple_fn((k, m), || rng.gen_range(-INIT_SCALE..=INIT_SCALE));
    Ok(RbmParams::from_weights(w)?)
}

/// Trains on `data` (default `dataset.txt`) with `m` hidden units and writes
/// `trace.csv`.
pub fn train(cfg: &ExperimentConfig, data: Option<&Path>) -> CliResult<Vec<TrainingTrace>> {
    cfg.validate()?;
    let data_path: PathBuf = data.map_or_else(|| cfg.output_dir.join(DATASET_FILE), Path::to_path_buf);
    let data = read_dataset(&data_path)?;
    let init = initial_params(data.dim(), cfg.m, cfg.seed)?;
    let trace = train_cd1(
        &init,
        &data,
        TrainSettings {
            epochs: cfg.epochs,
            learning_rate: cfg.learning_rate,
            seed: cfg.seed,
            audit_every: cfg.audit_every,
        },
    )?;
    let rows: Vec<Vec<String>> = trace
        .iter()
        .map(|t| {
            vec![
                t.epoch.to_string(),
                format_sig17(t.mean_exact_loglik),
                format_sig17(t.learning_rate),
                t.seed.to_string(),
            ]
        })
        .collect();
    write_csv(
        &cfg.output_dir.join(TRACE_FILE),
        &["epoch", "mean_exact_loglik", "learning_rate", "seed"],
        &rows,
    )?;
    Ok(trace)
}

/// Random `k × m` weights with each column projected onto the ℓ1 ball of
/// radius `radius`.
pub(crate) fn projected_weights<R: Rng + ?Sized>(k: usize, m: usize, radius: f64, rng: &mut R) -> Array2<f64> {
    let mut w = Array2::from_shape_simple_fn((k, m), || rng.gen_range(-1.0..=1.0));
    for mut col in w.columns_mut() {
        let mut v = col.to_vec();
        project_l1_in_place(&mut v, radius).expect("non-negative radius");
        col.assign(&ndarray::ArrayView1::from(&v));
    }
    w
}
