use clap::Parser;

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = jqf_cli::Cli::parse();
    if let Err(e) = jqf_cli::run(&cli) {
        eprintln!("{}", e.machine_line());
        std::process::exit(1);
    }
}
