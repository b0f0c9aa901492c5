use clap::Parser;

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = automn::Cli::parse();
    if let Err(e) = automn::run(cli) {
        eprintln!("error: {e:#}");
        std::process::exit(automn::exit_code(&e));
    }
}
