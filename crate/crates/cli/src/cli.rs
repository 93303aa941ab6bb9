//! Argument parsing and the non-server subcommands.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use nilnet::data::{generate_dataset, read_csv, split, DatasetConfig, DatasetKind, LabeledPoint};
use nilnet::network::Network;
use nilnet::trainer::{loss_and_accuracy, run_training, TrainConfig, TrainingSession};
use nilnet::{compile_with, evaluate_grid, explain_network, load_model, parse_expression, save_model, CompileOptions};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::server::{self, ServerConfig};

#[derive(Debug, Parser)]
#[command(name = "nilnet", version, about = "Interpretable networks from nilpotent logic")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compile a logical expression into a model file.
    Compile(CompileArgs),
    /// Train the learnable layers of a model with minibatch SGD.
    Train(TrainArgs),
    /// Report loss and accuracy of a model on a dataset.
    Eval(EvalArgs),
    /// Write the model output on a uniform grid over [-1, 1]^2 as CSV.
    Grid(GridArgs),
    /// Describe what every unit of a model computes.
    Explain(ExplainArgs),
    /// Serve the playground HTTP/JSON protocol.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct CompileArgs {
    /// Expression, e.g. "((x>0) AND (y>0)) OR ((x<0) AND (y<0))".
    #[arg(long)]
    pub expr: String,
    #[arg(long)]
    pub out: PathBuf,
    /// Use exact cutting activations instead of squashing.
    #[arg(long)]
    pub hard: bool,
    /// Freeze the first layer as well.
    #[arg(long)]
    pub freeze_atoms: bool,
    /// Factor applied to data coordinates before the first layer.
    #[arg(long, default_value_t = nilnet::network::DEFAULT_INPUT_SCALE)]
    pub input_scale: f64,
}

/// Where points come from: a dataset kind name or a CSV file.
#[derive(Debug, Args)]
pub struct DataArgs {
    /// Dataset kind (xor, preference, circle, triangle, concave) or a CSV
    /// path with columns x1,x2,label.
    #[arg(long)]
    pub data: String,
    /// Points to generate.
    #[arg(long, default_value_t = 500)]
    pub n: usize,
    /// Standard deviation of the coordinate jitter.
    #[arg(long, default_value_t = 0.05)]
    pub noise: f64,
    /// Redraw clean points closer than this to the class boundary.
    #[arg(long, default_value_t = 0.0)]
    pub margin: f64,
    /// Circle radius.
    #[arg(long, default_value_t = DatasetKind::DEFAULT_RADIUS)]
    pub radius: f64,
    /// Seed for data generation.
    #[arg(long = "data-seed")]
    pub data_seed: Option<u64>,
}

impl DataArgs {
    fn load(&self, fallback_seed: u64) -> Result<Vec<LabeledPoint>> {
        if let Some(kind) = DatasetKind::from_name(&self.data) {
            let kind = match kind {
                DatasetKind::Circle { .. } => DatasetKind::Circle { radius: self.radius },
                k => k,
            };
            let cfg = DatasetConfig::new(kind, self.n, self.noise, self.data_seed.unwrap_or(fallback_seed))
                .with_margin(self.margin);
            return Ok(generate_dataset(&cfg)?);
        }
        let path = Path::new(&self.data);
        if !path.exists() {
            bail!(
                "`{}` is neither a dataset kind ({}) nor an existing file",
                self.data,
                DatasetKind::NAMES.join(", ")
            );
        }
        let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
        read_csv(file).with_context(|| format!("reading {}", path.display()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Init {
    /// Start from the weights stored in the model file.
    Model,
    /// Draw learnable weights uniformly from [-1, 1].
    Random,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, default_value_t = 0.1)]
    pub lr: f64,
    #[arg(long, default_value_t = 200)]
    pub epochs: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 10)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 0.5)]
    pub train_fraction: f64,
    #[arg(long, default_value_t = 50.0)]
    pub beta: f64,
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    #[arg(long, default_value_t = 0.5)]
    pub center: f64,
    #[arg(long, value_enum, default_value_t = Init::Model)]
    pub init: Init,
    /// Print metrics every this many epochs; 0 prints only the summary.
    #[arg(long, default_value_t = 0)]
    pub log_every: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub model: PathBuf,
}

#[derive(Debug, Args)]
pub struct GridArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Cells per side, at least 2.
    #[arg(long, default_value_t = 51, value_parser = clap::value_parser!(u32).range(2..=2001))]
    pub resolution: u32,
    /// CSV destination; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExplainArgs {
    #[arg(long)]
    pub model: PathBuf,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: std::net::IpAddr,
    /// Directory with the UI bundle served at `/`.
    #[arg(long)]
    pub static_dir: Option<PathBuf>,
    /// Seconds of inactivity after which a session is dropped.
    #[arg(long, default_value_t = 900)]
    pub session_ttl: u64,
    /// Milliseconds to wait between training epochs of a running session.
    #[arg(long, default_value_t = 10)]
    pub pace_ms: u64,
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Compile(a) => compile(a),
        Command::Train(a) => train(a),
        Command::Eval(a) => eval(a),
        Command::Grid(a) => grid(a),
        Command::Explain(a) => {
            let net = load_model(&a.model).with_context(|| format!("loading {}", a.model.display()))?;
            print!("{}", explain_network(net.spec()));
            Ok(())
        }
        Command::Serve(a) => serve(a),
    }
}

fn load(path: &Path) -> Result<Network> {
    load_model(path).with_context(|| format!("loading {}", path.display()))
}

fn compile(a: CompileArgs) -> Result<()> {
    let expr = parse_expression(&a.expr)?;
    let mut opts = if a.hard {
        CompileOptions::hard()
    } else {
        CompileOptions::default()
    };
    opts.input_scale = a.input_scale;
    if a.freeze_atoms {
        opts = opts.frozen();
    }
    let net = Network::assemble(compile_with(&expr, &opts)?)?;
    save_model(&net, &a.out).with_context(|| format!("writing {}", a.out.display()))?;
    let dims: Vec<String> = net.layers().iter().map(|l| l.out_dim().to_string()).collect();
    println!("wrote {} (layers {})", a.out.display(), dims.join("-"));
    Ok(())
}

fn train(a: TrainArgs) -> Result<()> {
    let mut net = load(&a.model)?;
    if a.init == Init::Random {
        net.randomize_learnable(&mut ChaCha8Rng::seed_from_u64(a.seed));
    }
    let points = a.data.load(a.seed)?;
    let (train, test) = split(&points, a.train_fraction, a.seed)?;
    let config = TrainConfig {
        learning_rate: a.lr,
        epochs: a.epochs,
        batch_size: a.batch_size,
        seed: a.seed,
        a: a.center,
        lambda: a.lambda,
        beta: a.beta,
    };
    let mut session = TrainingSession::new(net, train, test, config)?;
    run_training(&mut session)?;
    let stdout = io::stdout();
    let mut out = stdout.lock();
    if a.log_every > 0 {
        for m in session.history().iter().filter(|m| m.epoch % a.log_every == 0) {
            writeln!(
                out,
                "epoch {:>5}  train loss {:.6}  accuracy {:.4}  test accuracy {:.4}",
                m.epoch,
                m.train_loss,
                m.train_accuracy,
                m.test_accuracy.unwrap_or(f64::NAN)
            )?;
        }
    }
    save_model(session.network(), &a.out).with_context(|| format!("writing {}", a.out.display()))?;
    match session.history().last() {
        Some(m) => writeln!(
            out,
            "trained {} epochs ({} steps): train loss {:.6}, train accuracy {:.4}, test accuracy {:.4}",
            m.epoch,
            m.step,
            m.train_loss,
            m.train_accuracy,
            m.test_accuracy.unwrap_or(f64::NAN)
        )?,
        None => writeln!(out, "no epochs run")?,
    }
    Ok(())
}

fn eval(a: EvalArgs) -> Result<()> {
    let net = load(&a.model)?;
    let points = a.data.load(0)?;
    let (loss, acc) = loss_and_accuracy(&net, &points)?;
    println!("points {}", points.len());
    println!("loss {loss:.6}");
    println!("accuracy {acc:.6}");
    Ok(())
}

fn grid(a: GridArgs) -> Result<()> {
    let net = load(&a.model)?;
    let g = evaluate_grid(&net, a.resolution as usize)?;
    let sink: Box<dyn Write> = match &a.out {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(io::stdout().lock()),
    };
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["x", "y", "output"])?;
    for (r, y) in g.axis.iter().enumerate() {
        for (c, x) in g.axis.iter().enumerate() {
            w.write_record([x.to_string(), y.to_string(), g.at(r, c).to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

fn serve(a: ServeArgs) -> Result<()> {
    let config = ServerConfig {
        session_ttl: Duration::from_secs(a.session_ttl),
        static_dir: a.static_dir,
        pace: Duration::from_millis(a.pace_ms),
    };
    let addr = SocketAddr::new(a.host, a.port);
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind(addr)
            .await
            .with_context(|| format!("binding {addr}"))?;
        eprintln!("listening on http://{}", listener.local_addr()?);
        server::serve(listener, config, async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
    })
}
