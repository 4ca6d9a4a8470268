use std::process::ExitCode;

use clap::Parser;
use simsync_envs::demo::ChaseArea;
use simsync_envs::{random_rollout, EnvConfig, Environment};
use simsync_framework::{ContextConfig, RandomSource, SyncContext};
use simsync_server::Server;

/// Two agents taking random actions in the chase area.
#[derive(Parser)]
struct Args {
    /// Connect to a running server instead of starting one in-process. It must be paused.
    #[arg(long)]
    addr: Option<String>,
    #[arg(long, default_value_t = 100)]
    steps: usize,
    #[arg(long, default_value_t = 10)]
    ticks_per_step: u64,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long, default_value_t = 200)]
    max_episode_steps: u32,
    /// Print every step as a JSON line.
    #[arg(long)]
    json: bool,
}

fn run(args: Args) -> Result<(), Box<dyn std::error::Error>> {
    let _server;
    let addr = match args.addr {
        Some(a) => a,
        None => {
            let s = Server::start_local()?;
            let a = s.local_addr().to_string();
            _server = s;
            a
        }
    };
    let ctx = SyncContext::connect(addr.as_str(), ContextConfig::default())?;
    let area = ChaseArea::spawn(&ctx, args.seed, args.max_episode_steps)?;
    let mut env = Environment::new(
        ctx,
        area,
        EnvConfig {
            ticks_per_step: args.ticks_per_step,
        },
    )?;
    let mut rng = RandomSource::new(args.seed);
    let results = random_rollout(&mut env, args.steps, &mut rng)?;
    let mut episodes = 0;
    for (i, r) in results.iter().enumerate() {
        if args.json {
            println!("{}", serde_json::to_string(r)?);
        } else {
            let rewards: Vec<String> = r.reward.iter().map(|(k, v)| format!("{k}={v:.3}")).collect();
            println!("step {:>4}  reward {}  done {:?}", i + 1, rewards.join(" "), r.done);
        }
        if r.all_done() {
            episodes += 1;
        }
    }
    eprintln!("{} steps, {} finished episodes", results.len(), episodes);
    Ok(())
}

fn main() -> ExitCode {
    match run(Args::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
