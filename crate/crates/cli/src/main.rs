use clap::Parser;
use swroute_cli::{run, Cli};

fn main() {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("SW_LOG", "warn")).init();
    if let Err(e) = run(Cli::parse()) {
        for m in e.messages() {
            eprintln!("error: {m}");
        }
        std::process::exit(e.exit_code());
    }
}
