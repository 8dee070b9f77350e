//! Command-line front end.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use tsp_tta_core::exec::Executor;
use tsp_tta_core::metrics::{format_percent, EvalReport};
use tsp_tta_core::model::{InputMode, ModelConfig, PolicyParams};
use tsp_tta_core::oracle::{solve, SolveMethod};
use tsp_tta_core::rng::derive_seed;
use tsp_tta_core::training::{train, validation_set, InstanceSource, TrainConfig};
use tsp_tta_core::tsp::{Tour, TspInstance};
use tsp_tta_core::tta::{gap_vs_m_sweep, AugmentPolicy, TtaConfig};

use crate::checkpoint::{ensure_city_count, load_checkpoint, save_checkpoint};
use crate::dataset::{load_dataset, save_dataset, Dataset};
use crate::decoder::DecoderChoice;
use crate::executor::RayonExecutor;
use crate::keyvalue::read_pairs;

const INIT_STREAM: u64 = 0x1417;

#[derive(Debug, Parser)]
#[command(name = "tsp-tta", version, about = "Transformer TSP policy with permutation test-time augmentation")]
pub struct Cli {
    /// Worker threads; 1 gives byte-identical reruns.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a dataset of uniform random instances.
    GenData {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a policy with REINFORCE and write a checkpoint.
    Train(TrainArgs),
    /// Decode a dataset and compare against a reference solver.
    Eval {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        ckpt: PathBuf,
        #[arg(long, default_value = "greedy")]
        decoder: DecoderChoice,
        #[arg(long, value_enum, default_value_t = Reference::HeldKarp)]
        oracle: Reference,
        #[command(flatten)]
        aug: AugmentArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Optimality gap as a function of the augmentation size.
    TtaSweep {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        ckpt: PathBuf,
        /// Comma-separated, strictly ascending.
        #[arg(long, value_delimiter = ',', default_value = "1,2,4,8,16,32,64,128,256")]
        m: Vec<usize>,
        #[arg(long, value_enum, default_value_t = Reference::HeldKarp)]
        oracle: Reference,
        #[command(flatten)]
        aug: AugmentArgs,
        /// Write 0 in the wall_time_ms column.
        #[arg(long)]
        no_timing: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Decode one inline instance with a trained policy.
    Solve {
        /// "x1,y1;x2,y2;..."
        #[arg(long)]
        instance_inline: String,
        #[arg(long)]
        ckpt: PathBuf,
        #[arg(long, default_value = "greedy")]
        decoder: DecoderChoice,
        #[command(flatten)]
        aug: AugmentArgs,
    },
    /// Solve one inline instance with a classical solver.
    Oracle {
        #[arg(long)]
        instance_inline: String,
        #[arg(long, default_value = "held-karp")]
        method: SolveMethod,
        /// Start city for nn and 2opt.
        #[arg(long, default_value_t = 0)]
        start: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Reference {
    HeldKarp,
    #[value(name = "2opt")]
    TwoOpt,
}

impl Reference {
    fn method(self) -> SolveMethod {
        match self {
            Reference::HeldKarp => SolveMethod::HeldKarp,
            Reference::TwoOpt => SolveMethod::TwoOpt,
        }
    }
}

#[derive(Debug, Args)]
pub struct AugmentArgs {
    /// permutation, rotation or rotation+permutation
    #[arg(long, default_value = "permutation")]
    pub augment: AugmentPolicy,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    /// 10 cities, width 64, 30 short epochs.
    Toy,
    /// Width 512, 6+2 layers, 100 epochs of 100 000 instances.
    Full,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long, value_enum, default_value_t = Preset::Toy)]
    pub preset: Preset,
    /// key=value file with model and training settings.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Training instances; fresh random instances every epoch if absent.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Validation instances for the baseline; generated from the seed if absent.
    #[arg(long)]
    pub val: Option<PathBuf>,
    #[arg(long)]
    pub out_ckpt: PathBuf,
    /// CSV with one row per epoch.
    #[arg(long)]
    pub log: Option<PathBuf>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub instances_per_epoch: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub val_size: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub input_mode: Option<InputMode>,
    /// Disable positional encodings.
    #[arg(long)]
    pub no_pe: bool,
}

pub fn parse_inline(text: &str) -> anyhow::Result<TspInstance> {
    let coords = text
        .split(';')
        .filter(|p| !p.trim().is_empty())
        .map(|p| {
            let (x, y) = p
                .split_once(',')
                .with_context(|| format!("point '{p}' is not 'x,y'"))?;
            let x: f64 = x.trim().parse().with_context(|| format!("bad x in '{p}'"))?;
            let y: f64 = y.trim().parse().with_context(|| format!("bad y in '{p}'"))?;
            Ok([x, y])
        })
        .collect::<anyhow::Result<Vec<_>>>()?;
    Ok(TspInstance::new(coords)?)
}

pub fn tour_line(tour: &Tour, len: f64) -> String {
    let order: Vec<String> = tour.order().iter().map(usize::to_string).collect();
    format!("tour={} len={len:.6}", order.join(","))
}

fn write_out(path: &Path, text: &str) -> anyhow::Result<()> {
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

fn reference_lengths<E: Executor>(insts: &[TspInstance], oracle: Reference, exec: &E) -> anyhow::Result<Vec<f64>> {
    let lens = exec.map(insts.iter().collect(), |inst| {
        solve(inst, oracle.method(), 0).map(|r| r.length)
    });
    Ok(lens.into_iter().collect::<tsp_tta_core::Result<Vec<_>>>()?)
}

fn load_pair(data: &Path, ckpt: &Path) -> anyhow::Result<(Dataset, ModelConfig, PolicyParams)> {
    let dataset = load_dataset(data).with_context(|| format!("loading {}", data.display()))?;
    let (config, params) = load_checkpoint(ckpt).with_context(|| format!("loading {}", ckpt.display()))?;
    ensure_city_count(&config, dataset.n)?;
    Ok((dataset, config, params))
}

fn training_setup(args: &TrainArgs) -> anyhow::Result<(ModelConfig, TrainConfig)> {
    let (mut model, mut cfg) = match args.preset {
        Preset::Toy => (ModelConfig::desk_scale(10), TrainConfig::desk_scale()),
        Preset::Full => (ModelConfig::full_scale(50), TrainConfig::full_scale()),
    };
    if let Some(path) = &args.config {
        for (k, v) in read_pairs(path).with_context(|| format!("reading {}", path.display()))? {
            if ModelConfig::is_model_key(&k) {
                model.apply_pair(&k, &v)?;
            } else {
                cfg.apply_pair(&k, &v)?;
            }
        }
    }
    if let Some(n) = args.n {
        model.n_cities = n;
    }
    if let Some(m) = args.input_mode {
        model.input_mode = m;
    }
    if args.no_pe {
        model.use_pe = false;
    }
    if let Some(v) = args.epochs {
        cfg.epochs = v;
    }
    if let Some(v) = args.instances_per_epoch {
        cfg.instances_per_epoch = v;
    }
    if let Some(v) = args.batch_size {
        cfg.batch_size = v;
    }
    if let Some(v) = args.val_size {
        cfg.val_size = v;
    }
    if let Some(v) = args.lr {
        cfg.adam.learning_rate = v;
    }
    if let Some(v) = args.seed {
        cfg.seed = v;
    }
    model.validate()?;
    cfg.validate()?;
    Ok((model, cfg))
}

fn run_train(args: &TrainArgs, exec: &RayonExecutor) -> anyhow::Result<String> {
    let (model, cfg) = training_setup(args)?;
    let data = args
        .data
        .as_deref()
        .map(|p| load_dataset(p).with_context(|| format!("loading {}", p.display())))
        .transpose()?;
    if let Some(d) = &data {
        if d.n != model.n_cities {
            bail!("training data has {} cities, model expects {}", d.n, model.n_cities);
        }
    }
    let val = match &args.val {
        Some(p) => {
            let v = load_dataset(p).with_context(|| format!("loading {}", p.display()))?;
            if v.n != model.n_cities {
                bail!("validation data has {} cities, model expects {}", v.n, model.n_cities);
            }
            v.instances
        }
        None => validation_set(model.n_cities, cfg.val_size, cfg.seed)?,
    };
    let source = match &data {
        Some(d) => InstanceSource::Dataset(&d.instances),
        None => InstanceSource::Generated,
    };
    let init = PolicyParams::init(&model, derive_seed(cfg.seed, INIT_STREAM, 0))?;
    let mut csv = String::from("epoch,train_len,val_len,baseline_len\n");
    let out = train(&model, &cfg, init, source, &val, exec, |row| {
        let _ = writeln!(
            csv,
            "{},{:.6},{:.6},{:.6}",
            row.epoch, row.train_len, row.val_len, row.baseline_len
        );
        eprintln!(
            "epoch {:>3}  train {:.4}  val {:.4}  baseline {:.4}",
            row.epoch, row.train_len, row.val_len, row.baseline_len
        );
    })?;
    save_checkpoint(&args.out_ckpt, &model, &out.baseline.params().clone())
        .with_context(|| format!("writing {}", args.out_ckpt.display()))?;
    if let Some(log) = &args.log {
        write_out(log, &csv)?;
    }
    Ok(format!(
        "epochs={} initial_val_len={:.6} best_val_len={:.6} ckpt={}",
        out.log.len(),
        out.initial_val_len,
        out.baseline.val_mean(),
        args.out_ckpt.display()
    ))
}

/// Runs one parsed invocation and returns the line to print on success.
pub fn run(cli: Cli) -> anyhow::Result<String> {
    let jobs = cli
        .jobs
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if jobs == 0 {
        bail!("--jobs must be at least 1");
    }
    let exec = RayonExecutor::new(jobs)?;
    match cli.command {
        Command::GenData { n, count, seed, out } => {
            let data = Dataset::generate(n, count, seed)?;
            save_dataset(&out, &data).with_context(|| format!("writing {}", out.display()))?;
            Ok(format!(
                "wrote {count} instances of {n} cities (seed {seed}, {} bytes) to {}",
                Dataset::byte_len(n, count),
                out.display()
            ))
        }
        Command::Train(args) => run_train(&args, &exec),
        Command::Eval {
            data,
            ckpt,
            decoder,
            oracle,
            aug,
            out,
        } => {
            let (dataset, config, params) = load_pair(&data, &ckpt)?;
            let insts = &dataset.instances;
            let jobs: Vec<(usize, &TspInstance)> = insts.iter().enumerate().collect();
            let preds = exec
                .map(jobs, |(i, inst)| {
                    decoder
                        .decode(inst, &config, &params, aug.augment, aug.seed, i)
                        .map(|d| d.length)
                })
                .into_iter()
                .collect::<tsp_tta_core::Result<Vec<_>>>()?;
            let opts = reference_lengths(insts, oracle, &exec)?;
            let report = EvalReport::new(&preds, &opts)?;
            if let Some(path) = &out {
                write_out(path, &report.to_csv())?;
            }
            Ok(format!(
                "k={} decoder={decoder} mean_gap={} avg_len={:.6}",
                report.k(),
                format_percent(report.mean_gap),
                report.avg_len
            ))
        }
        Command::TtaSweep {
            data,
            ckpt,
            m,
            oracle,
            aug,
            no_timing,
            out,
        } => {
            let (dataset, config, params) = load_pair(&data, &ckpt)?;
            let opts = reference_lengths(&dataset.instances, oracle, &exec)?;
            let tta = TtaConfig::new(1, aug.augment, aug.seed)?;
            let origin = Instant::now();
            let clock = move || origin.elapsed().as_millis() as u64;
            let clock_ref: Option<&dyn Fn() -> u64> = if no_timing { None } else { Some(&clock) };
            let sweep = gap_vs_m_sweep(&dataset.instances, &opts, &config, &params, &tta, &m, &exec, clock_ref)?;
            let ms: Vec<String> = m.iter().map(usize::to_string).collect();
            let mut csv = format!("# m_values={} augment={} seed={}\n", ms.join(","), aug.augment, aug.seed);
            csv.push_str("M,mean_gap,std_gap,mean_len,wall_time_ms\n");
            for r in &sweep.rows {
                let _ = writeln!(
                    csv,
                    "{},{:.6},{:.6},{:.6},{}",
                    r.m,
                    r.mean_gap,
                    r.std_gap,
                    r.mean_len,
                    r.wall_time_ms.unwrap_or(0)
                );
            }
            write_out(&out, &csv)?;
            let last = sweep.rows.last().expect("at least one M");
            Ok(format!(
                "m_values={} final_mean_gap={} rows={}",
                ms.join(","),
                format_percent(last.mean_gap),
                sweep.rows.len()
            ))
        }
        Command::Solve {
            instance_inline,
            ckpt,
            decoder,
            aug,
        } => {
            let inst = parse_inline(&instance_inline)?;
            let (config, params) = load_checkpoint(&ckpt).with_context(|| format!("loading {}", ckpt.display()))?;
            ensure_city_count(&config, inst.n())?;
            let d = decoder.decode(&inst, &config, &params, aug.augment, aug.seed, 0)?;
            Ok(tour_line(&d.tour, d.length))
        }
        Command::Oracle {
            instance_inline,
            method,
            start,
        } => {
            let inst = parse_inline(&instance_inline)?;
            let r = solve(&inst, method, start)?;
            Ok(tour_line(&r.tour, r.length))
        }
    }
}
