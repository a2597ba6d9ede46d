use clap::Parser;

use faraday_concurrence::cli::{emit, run, Cli};

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = cli.resolve().and_then(|config| {
        let emitted = run(&config)?;
        emit(&config, &emitted)
    });
    if let Err(e) = result {
        eprintln!("fconc: {e}");
        std::process::exit(e.exit_code());
    }
}
