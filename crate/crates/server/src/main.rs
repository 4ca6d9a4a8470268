use std::net::{IpAddr, SocketAddr};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use simsync_server::{Server, ServerConfig, World};

/// Standalone world server.
#[derive(Parser, Debug)]
#[command(name = "simsync-server", version)]
struct Args {
    /// TCP port to listen on.
    #[arg(long, env = "SIMSYNC_PORT", default_value_t = simsync_protocol::DEFAULT_PORT)]
    port: u16,
    /// Interface to bind.
    #[arg(long, default_value = "127.0.0.1")]
    host: IpAddr,
    /// Simulation step in nanoseconds.
    #[arg(long, default_value_t = simsync_server::DEFAULT_STEP_NS)]
    step_ns: u64,
    /// Free-running ticks per second; 0 keeps the clock paused.
    #[arg(long, default_value_t = 0.0)]
    rate: f64,
    /// Publish state topics every this many ticks.
    #[arg(long, default_value_t = 10)]
    publish_every: u64,
    /// Model or light XML files to preload (repeatable).
    #[arg(long = "seed-world", value_name = "FILE")]
    seed_world: Vec<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let args = Args::parse();
    if args.step_ns == 0 {
        eprintln!("--step-ns must be positive");
        return ExitCode::from(2);
    }
    let mut world = World::new(args.step_ns);
    for path in &args.seed_world {
        let loaded = std::fs::read_to_string(path)
            .map_err(|e| e.to_string())
            .and_then(|text| world.load_seed(&text).map_err(|e| e.to_string()));
        if let Err(e) = loaded {
            eprintln!("{}: {e}", path.display());
            return ExitCode::from(2);
        }
    }
    let config = ServerConfig {
        bind: SocketAddr::new(args.host, args.port),
        rate: args.rate,
        publish_every: args.publish_every,
        ..ServerConfig::default()
    };
    match Server::start(config, world) {
        Ok(server) => {
            println!("listening on {}", server.local_addr());
            server.wait();
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("cannot start server: {e}");
            ExitCode::FAILURE
        }
    }
}
