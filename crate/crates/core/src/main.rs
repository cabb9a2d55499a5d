use clap::Parser;

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = bayes_geom::cli::Args::parse();
    std::process::exit(bayes_geom::cli::main_with_args(args));
}
