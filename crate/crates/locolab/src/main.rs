//! Command-line front end for training, evaluation, and the experiment
//! protocols. Exit codes: 0 success, 2 configuration error, 3 simulation
//! blowup.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use locolab::harness::{
    adapt_sweep, compare_modes, emit_plotdata, evaluate_checkpoint, online_protocol, sweep_kb,
    train, AdaptParameter, LearnMode, OnlineProtocolConfig, TrainConfig, TrainingLog,
};
use locolab::ppo::load_checkpoint;

#[derive(Parser)]
#[command(name = "locolab", about = "Planar legged-robot locomotion learning lab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// JSON run configuration; defaults apply for missing fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for logs, checkpoints, and plot data.
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
    /// Override the total environment-step budget.
    #[arg(long)]
    steps: Option<u64>,
    /// Override the number of parallel environment copies.
    #[arg(long)]
    envs: Option<usize>,
}

impl CommonArgs {
    fn load(&self) -> locolab::Result<TrainConfig> {
        let mut cfg = match &self.config {
            Some(path) => TrainConfig::from_file(path)?,
            None => TrainConfig::default(),
        };
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(steps) = self.steps {
            cfg.total_steps = steps;
        }
        if let Some(envs) = self.envs {
            cfg.env_copies = envs;
        }
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Train one policy and write train_log.csv + checkpoint.bin.
    Train(CommonArgs),
    /// Roll out a checkpoint with the deterministic (mean) policy.
    Eval {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        checkpoint: PathBuf,
        /// Simulated seconds to evaluate.
        #[arg(long, default_value_t = 30.0)]
        duration: f64,
    },
    /// Train IML / IML_RO / INL / INL_RO on one task across seeds.
    Compare {
        #[command(flatten)]
        common: CommonArgs,
        /// Comma-separated mode list.
        #[arg(long, default_value = "IML,IML_RO,INL,INL_RO")]
        modes: String,
        #[arg(long, default_value = "0,1,2,3,4", value_delimiter = ',')]
        seeds: Vec<u64>,
    },
    /// Sweep the feedback ratio on one task across seeds.
    SweepKb {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, default_value = "0.1,0.5,1.5", value_delimiter = ',')]
        k_values: Vec<f64>,
        #[arg(long, default_value = "0,1,2,3,4", value_delimiter = ',')]
        seeds: Vec<u64>,
    },
    /// Scale a trained feedforward's period or amplitude and find the
    /// feasible range.
    Adapt {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long, value_enum, default_value_t = AdaptParameterArg::Period)]
        parameter: AdaptParameterArg,
        #[arg(long, default_value = "0.5,0.75,1.0,1.25,1.5,2.0", value_delimiter = ',')]
        factors: Vec<f64>,
        #[arg(long, default_value_t = 30.0)]
        duration: f64,
    },
    /// Run the reset-free episodic online-learning schedule.
    Online {
        #[command(flatten)]
        common: CommonArgs,
        /// Total simulated minutes.
        #[arg(long, default_value_t = 20.0)]
        minutes: f64,
    },
    /// Re-emit plot CSVs from a stored training log.
    Plotdata {
        /// Training log CSV to re-emit.
        #[arg(long)]
        log: PathBuf,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
    },
}

#[derive(clap::ValueEnum, Clone, Copy)]
enum AdaptParameterArg {
    Period,
    Amplitude,
}

impl From<AdaptParameterArg> for AdaptParameter {
    fn from(v: AdaptParameterArg) -> Self {
        match v {
            AdaptParameterArg::Period => AdaptParameter::Period,
            AdaptParameterArg::Amplitude => AdaptParameter::Amplitude,
        }
    }
}

fn parse_modes(text: &str) -> locolab::Result<Vec<LearnMode>> {
    text.split(',')
        .map(|m| match m.trim() {
            "IML" => Ok(LearnMode::Iml),
            "IML_RO" => Ok(LearnMode::ImlRo),
            "INL" => Ok(LearnMode::Inl),
            "INL_RO" => Ok(LearnMode::InlRo),
            other => Err(locolab::Error::Config(format!("unknown mode {other}"))),
        })
        .collect()
}

fn run(cli: Cli) -> locolab::Result<()> {
    match cli.command {
        Command::Train(common) => {
            let cfg = common.load()?;
            std::fs::create_dir_all(&common.out_dir)?;
            let out = train(&cfg, Some(&common.out_dir))?;
            println!(
                "trained {} iterations; final mean episode reward {:.2}",
                out.log.rows.len(),
                out.log.final_reward(0.1)
            );
        }
        Command::Eval { common, checkpoint, duration } => {
            let cfg = common.load()?;
            let ckpt = load_checkpoint(&checkpoint)?;
            let m = evaluate_checkpoint(&ckpt, &cfg, duration)?;
            println!(
                "episodes {} falls {} mean_reward {:.2} mean_forward_velocity {:.3}",
                m.episode_lengths.len(),
                m.falls,
                m.mean_reward,
                m.mean_forward_velocity
            );
        }
        Command::Compare { common, modes, seeds } => {
            let cfg = common.load()?;
            let modes = parse_modes(&modes)?;
            let batch = compare_modes(&cfg, &modes, &seeds)?;
            emit_plotdata(&batch, &common.out_dir)?;
            for s in &batch.summaries {
                println!(
                    "{} seed {}: steps_to_threshold {:?} final_reward {:.2}",
                    s.label, s.seed, s.steps_to_threshold, s.final_reward
                );
            }
        }
        Command::SweepKb { common, k_values, seeds } => {
            let cfg = common.load()?;
            let batch = sweep_kb(&cfg, &k_values, &seeds)?;
            emit_plotdata(&batch, &common.out_dir)?;
            for s in &batch.summaries {
                println!(
                    "{} seed {}: steps_to_threshold {:?} final_reward {:.2} final_mimic {:.2}",
                    s.label, s.seed, s.steps_to_threshold, s.final_reward, s.final_mimic
                );
            }
        }
        Command::Adapt { common, checkpoint, parameter, factors, duration } => {
            let cfg = common.load()?;
            let ckpt = load_checkpoint(&checkpoint)?;
            let out = adapt_sweep(&ckpt, &cfg, parameter.into(), &factors, duration)?;
            std::fs::create_dir_all(&common.out_dir)?;
            let mut csv = String::from("factor,feasible,falls,mean_forward_velocity\n");
            for p in &out.points {
                csv.push_str(&format!(
                    "{},{},{},{}\n",
                    p.factor, p.feasible, p.falls, p.mean_forward_velocity
                ));
            }
            std::fs::write(common.out_dir.join("adapt.csv"), csv)?;
            println!(
                "feasible {} of {} factors; interval [{}, {}]",
                out.points.iter().filter(|p| p.feasible).count(),
                out.points.len(),
                out.feasible_interval[0],
                out.feasible_interval[1]
            );
        }
        Command::Online { common, minutes } => {
            let cfg = common.load()?;
            let proto =
                OnlineProtocolConfig { total_duration_s: minutes * 60.0, ..Default::default() };
            let out = online_protocol(&cfg, &proto)?;
            std::fs::create_dir_all(&common.out_dir)?;
            out.log.write_csv(&common.out_dir.join("online_log.csv"))?;
            println!(
                "episodes {} falls {} fall_rate {:.3} start_reward {:.2} end_reward {:.2}",
                out.episodes,
                out.falls,
                out.fall_rate(),
                out.edge_reward(11, false),
                out.edge_reward(11, true)
            );
        }
        Command::Plotdata { log, out_dir } => {
            let parsed = TrainingLog::read_csv(&log)?;
            std::fs::create_dir_all(&out_dir)?;
            parsed.write_csv(&out_dir.join("curve.csv"))?;
            println!("re-emitted {} rows", parsed.rows.len());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
