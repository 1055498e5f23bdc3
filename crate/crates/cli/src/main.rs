//! Command-line front end for representation checks, coupling tables,
//! feature extraction, and the built-in demonstration fits.
//!
//! Exit codes: 0 success, 1 failed validation, 2 parse/file errors,
//! 3 missing coupling tables without compute permission, 4 demo below
//! threshold or numerical failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::{Arc, Mutex};

use clap::{Parser, Subcommand};

use liecluster::algebra::{Rep, COMMUTATOR_TOL};
use liecluster::cluster::{BuiltModel, CouplingProvider, ModelConfig, PointCloud};
use liecluster::coupling::{
    clebsch_gordan, coupling_file_key, symmetric_coupling, CouplingTensor,
};
use liecluster::demo::{run_demo, DemoTask};
use liecluster::error::{Error, Result};
use liecluster::irreps::{GroupKind, IrrepLabel};

#[derive(Parser)]
#[command(name = "liecluster", version, about = "Lie-group representations, couplings, and equivariant cluster features")]
struct Cli {
    /// Directory for cached coupling tables.
    #[arg(long, global = true, default_value = "cache")]
    cache_dir: PathBuf,

    /// Seed for all pseudo-random draws.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Override of the commutator-closure tolerance used by `check`.
    #[arg(long, global = true)]
    tol: Option<f64>,

    /// Worker threads for batch evaluation (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute Clebsch-Gordan coefficients label1 (x) label2 -> label_out.
    Cg {
        /// Group family: SU2, SO3, O3, SO13, or SU(N).
        group: String,
        label1: String,
        label2: String,
        label_out: String,
        /// Output path (default: the cache directory, keyed by content).
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Validate a representation file (commutator closure and discrete
    /// invertibility).
    Check {
        rep_path: PathBuf,
    },
    /// Compute the symmetric tensor-product coupling Sym^order(label) -> label_out.
    Couple {
        group: String,
        label: String,
        order: usize,
        label_out: String,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Evaluate equivariant features of a point cloud under a model config.
    Features {
        config_path: PathBuf,
        cloud_path: PathBuf,
        #[arg(short, long)]
        out: Option<PathBuf>,
        /// Fail (exit 3) instead of computing missing coupling tables.
        #[arg(long)]
        no_compute: bool,
    },
    /// Run a built-in desk-scale demonstration fit.
    Demo {
        /// Task name: o3-invariant or lorentz-mass.
        task: String,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(error_code(&e))
        }
    }
}

fn error_code(e: &Error) -> u8 {
    match e {
        Error::Parse(_) | Error::Json(_) | Error::Io(_) | Error::InvalidArgument(_) => 2,
        Error::Config(_) => 3,
        _ => 2,
    }
}

fn run(cli: &Cli) -> Result<ExitCode> {
    match &cli.command {
        Command::Cg { group, label1, label2, label_out, out } => {
            cmd_cg(cli, group, label1, label2, label_out, out.as_deref())
        }
        Command::Check { rep_path } => cmd_check(cli, rep_path),
        Command::Couple { group, label, order, label_out, out } => {
            cmd_couple(cli, group, label, *order, label_out, out.as_deref())
        }
        Command::Features { config_path, cloud_path, out, no_compute } => {
            cmd_features(cli, config_path, cloud_path, out.as_deref(), *no_compute)
        }
        Command::Demo { task } => cmd_demo(cli, task),
    }
}

/// Accepts either the full label text ("SU2(1)", "O3(2,-1)", "SU(3)[1,0,0]")
/// or the group-specific short form ("1", "2,-1", "[1,0,0]").
fn parse_label(group: GroupKind, arg: &str) -> Result<IrrepLabel> {
    if let Ok(label) = arg.parse::<IrrepLabel>() {
        if label.group() == group {
            return Ok(label);
        }
        return Err(Error::Parse(format!("label {arg:?} does not belong to the requested group")));
    }
    let arg = arg.trim();
    let ints = |s: &str| -> Result<Vec<i64>> {
        s.split(',')
            .map(|t| {
                t.trim()
                    .parse::<i64>()
                    .map_err(|_| Error::Parse(format!("bad integer in label: {t:?}")))
            })
            .collect()
    };
    match group {
        GroupKind::Su2 => {
            let v = ints(arg)?;
            if v.len() != 1 || v[0] < 0 {
                return Err(Error::Parse(format!("SU2 label needs one non-negative integer: {arg:?}")));
            }
            Ok(IrrepLabel::Su2 { two_j: v[0] as u32 })
        }
        GroupKind::So3 => {
            let v = ints(arg)?;
            if v.len() != 1 || v[0] < 0 {
                return Err(Error::Parse(format!("SO3 label needs one non-negative integer: {arg:?}")));
            }
            Ok(IrrepLabel::So3 { l: v[0] as u32 })
        }
        GroupKind::O3 => {
            let v = ints(arg)?;
            if v.len() != 2 || v[0] < 0 {
                return Err(Error::Parse(format!("O3 label needs l,parity: {arg:?}")));
            }
            Ok(IrrepLabel::O3 {
                l: v[0] as u32,
                parity: liecluster::irreps::Parity::from_sign(v[1])?,
            })
        }
        GroupKind::So13 => {
            let v = ints(arg)?;
            if v.len() != 2 || v.iter().any(|&x| x < 0) {
                return Err(Error::Parse(format!("SO13 label needs 2j1,2j2: {arg:?}")));
            }
            Ok(IrrepLabel::So13 { two_j1: v[0] as u32, two_j2: v[1] as u32 })
        }
        GroupKind::Sun(n) => {
            let body = arg.strip_prefix('[').and_then(|t| t.strip_suffix(']')).unwrap_or(arg);
            let v = ints(body)?;
            if v.len() != n || v.iter().any(|&x| x < 0) {
                return Err(Error::Parse(format!("SU({n}) label needs {n} non-negative integers: {arg:?}")));
            }
            IrrepLabel::sun(v.into_iter().map(|x| x as u32).collect())
        }
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    std::fs::write(path, text)?;
    Ok(())
}

fn write_table(
    cli: &Cli,
    tensor: &CouplingTensor,
    input_labels: &[String],
    output_label: &str,
    inputs: &[&Rep],
    order: usize,
    symmetric: bool,
    out_rep: &Rep,
    out: Option<&Path>,
) -> Result<PathBuf> {
    let text = tensor.to_table_json(input_labels, output_label);
    let path = match out {
        Some(p) => p.to_path_buf(),
        None => {
            let key = coupling_file_key(inputs, order, symmetric, out_rep);
            cli.cache_dir.join(format!("{key}.json"))
        }
    };
    write_text(&path, &text)?;
    Ok(path)
}

fn cmd_cg(
    cli: &Cli,
    group: &str,
    label1: &str,
    label2: &str,
    label_out: &str,
    out: Option<&Path>,
) -> Result<ExitCode> {
    let kind = GroupKind::parse(group)?;
    let l1 = parse_label(kind, label1)?;
    let l2 = parse_label(kind, label2)?;
    let lo = parse_label(kind, label_out)?;
    let r1 = l1.build()?;
    let r2 = l2.build()?;
    let ro = lo.build()?;
    let tensor = clebsch_gordan(&r1, &r2, &ro)?;
    let path = write_table(
        cli,
        &tensor,
        &[l1.to_string(), l2.to_string()],
        &lo.to_string(),
        &[&r1, &r2],
        2,
        false,
        &ro,
        out,
    )?;
    println!("coupling {} (x) {} -> {}", l1, l2, lo);
    println!("multiplicity: {}", tensor.multiplicity);
    if tensor.multiplicity == 0 {
        println!("warning: no intertwiners exist; wrote an empty table");
    }
    println!("entries: {}", tensor.entries.len());
    println!("wrote {}", path.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_check(cli: &Cli, rep_path: &Path) -> Result<ExitCode> {
    let text = std::fs::read_to_string(rep_path)?;
    let rep = Rep::from_json_str(&text)?;
    let tol = cli.tol.unwrap_or(COMMUTATOR_TOL);
    let report = rep.validate(tol);
    println!("representation: dim {}, {} infinitesimal + {} discrete generators",
        rep.dim(),
        rep.infinitesimal().len(),
        rep.discrete().len()
    );
    println!(
        "commutator closure: {} (max residual {:.17e}, tolerance {:.1e})",
        if report.commutator_pass { "pass" } else { "FAIL" },
        report.max_commutator_residual,
        tol
    );
    if let Some((i, j)) = report.worst_pair {
        println!("worst generator pair: ({i}, {j})");
    }
    match report.min_discrete_abs_det {
        Some(det) => println!(
            "discrete invertibility: {} (min |det| {:.17e})",
            if report.discrete_pass { "pass" } else { "FAIL" },
            det
        ),
        None => println!("discrete invertibility: pass (no discrete generators)"),
    }
    if report.pass() {
        println!("result: PASS");
        Ok(ExitCode::SUCCESS)
    } else {
        println!("result: FAIL");
        Ok(ExitCode::from(1))
    }
}

fn cmd_couple(
    cli: &Cli,
    group: &str,
    label: &str,
    order: usize,
    label_out: &str,
    out: Option<&Path>,
) -> Result<ExitCode> {
    let kind = GroupKind::parse(group)?;
    let l = parse_label(kind, label)?;
    let lo = parse_label(kind, label_out)?;
    let rep = l.build()?;
    let ro = lo.build()?;
    let tensor = symmetric_coupling(&rep, order, &ro)?;
    let path = write_table(
        cli,
        &tensor,
        &vec![l.to_string(); order],
        &lo.to_string(),
        &[&rep],
        order,
        true,
        &ro,
        out,
    )?;
    println!("symmetric coupling Sym^{order}({l}) -> {lo}");
    println!("multiplicity: {}", tensor.multiplicity);
    if tensor.multiplicity == 0 {
        println!("warning: no intertwiners exist; wrote an empty table");
    }
    println!("entries: {}", tensor.entries.len());
    println!("wrote {}", path.display());
    Ok(ExitCode::SUCCESS)
}

// ---------------------------------------------------------------------------
// File-backed coupling cache.
// ---------------------------------------------------------------------------

/// Coupling provider that persists every solve as `<hash>.json` under the
/// cache directory. With `allow_compute` unset, a cache miss is an error
/// (missing tables must be computed in advance).
struct FileCache {
    dir: PathBuf,
    allow_compute: bool,
    mem: Mutex<std::collections::HashMap<String, Arc<CouplingTensor>>>,
}

impl FileCache {
    fn new(dir: PathBuf, allow_compute: bool) -> Self {
        Self { dir, allow_compute, mem: Mutex::new(Default::default()) }
    }

    fn lookup(
        &self,
        key: String,
        labels: Vec<String>,
        output_label: String,
        compute: impl FnOnce() -> Result<CouplingTensor>,
    ) -> Result<Arc<CouplingTensor>> {
        if let Some(hit) = self.mem.lock().unwrap().get(&key) {
            return Ok(hit.clone());
        }
        let path = self.dir.join(format!("{key}.json"));
        if path.is_file() {
            let text = std::fs::read_to_string(&path)?;
            let (tensor, _, _) = CouplingTensor::from_table_json(&text)?;
            let tensor = Arc::new(tensor);
            self.mem.lock().unwrap().insert(key, tensor.clone());
            return Ok(tensor);
        }
        if !self.allow_compute {
            return Err(Error::Config(format!(
                "missing coupling table {} for {} -> {}",
                path.display(),
                labels.join(" (x) "),
                output_label
            )));
        }
        let tensor = Arc::new(compute()?);
        write_text(&path, &tensor.to_table_json(&labels, &output_label))?;
        self.mem.lock().unwrap().insert(key, tensor.clone());
        Ok(tensor)
    }
}

fn generic_label(rep: &Rep) -> String {
    format!("rep{}#{}", rep.dim(), &rep.content_hash()[..8])
}

impl CouplingProvider for FileCache {
    fn clebsch_gordan(&self, rep1: &Rep, rep2: &Rep, out: &Rep) -> Result<Arc<CouplingTensor>> {
        let key = coupling_file_key(&[rep1, rep2], 2, false, out);
        self.lookup(
            key,
            vec![generic_label(rep1), generic_label(rep2)],
            generic_label(out),
            || clebsch_gordan(rep1, rep2, out),
        )
    }

    fn symmetric(&self, rep: &Rep, order: usize, out: &Rep) -> Result<Arc<CouplingTensor>> {
        let key = coupling_file_key(&[rep], order, true, out);
        self.lookup(key, vec![generic_label(rep); order], generic_label(out), || {
            symmetric_coupling(rep, order, out)
        })
    }
}

fn cmd_features(
    cli: &Cli,
    config_path: &Path,
    cloud_path: &Path,
    out: Option<&Path>,
    no_compute: bool,
) -> Result<ExitCode> {
    let config_text = std::fs::read_to_string(config_path)?;
    let mut config = ModelConfig::from_json_str(&config_text)?;
    if config.seed == 0 {
        config.seed = cli.seed;
    }
    let cloud_text = std::fs::read_to_string(cloud_path)?;
    let cloud = PointCloud::parse_auto(&cloud_text)?;
    let cache = FileCache::new(cli.cache_dir.clone(), !no_compute);
    let model = config.build(&cache)?;
    let rendered = match &model {
        BuiltModel::Linear(m) => m.features(&cloud)?.to_json_string(),
        BuiltModel::MessagePassing(m) => {
            let history = m.run(&cloud)?;
            render_state_history(m, &history)
        }
    };
    let out_path = out
        .map(Path::to_path_buf)
        .unwrap_or_else(|| cloud_path.with_extension("features.json"));
    write_text(&out_path, &rendered)?;
    println!("wrote {}", out_path.display());
    Ok(ExitCode::SUCCESS)
}

fn render_state_history(model: &liecluster::cluster::MaceModel, history: &[liecluster::cluster::States]) -> String {
    use serde_json::json;
    let mut layers = Vec::new();
    for (t, states) in history.iter().enumerate().skip(1) {
        let slots = model.state_slots(t);
        let mut particles = Vec::new();
        for (i, per_channel) in states.iter().enumerate() {
            let mut channels = Vec::new();
            for per_slot in per_channel {
                let mut slot_values = Vec::new();
                for (si, v) in per_slot.iter().enumerate() {
                    let values: Vec<[f64; 2]> = v.iter().map(|z| [z.re, z.im]).collect();
                    slot_values.push(json!({
                        "output": slots[si].0.to_string(),
                        "values": values,
                    }));
                }
                channels.push(serde_json::Value::from(slot_values));
            }
            particles.push(json!({ "particle": i, "channels": channels }));
        }
        layers.push(json!({ "layer": t, "states": particles }));
    }
    let mut s = serde_json::to_string_pretty(&json!({ "layers": layers })).expect("serializable");
    s.push('\n');
    s
}

fn cmd_demo(cli: &Cli, task: &str) -> Result<ExitCode> {
    let task = DemoTask::parse(task)?;
    match run_demo(task, cli.seed) {
        Ok(report) => {
            print!("{}", report.render());
            if report.pass {
                Ok(ExitCode::SUCCESS)
            } else {
                Ok(ExitCode::from(4))
            }
        }
        Err(e) => {
            eprintln!("demo failed: {e}");
            Ok(ExitCode::from(4))
        }
    }
}
