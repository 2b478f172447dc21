use clap::Parser;

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = supportsim::cli::Cli::parse();
    if let Err(err) = supportsim::cli::run(cli) {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}
