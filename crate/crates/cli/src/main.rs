use clap::Parser;

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match stereo_mcmc_cli::run(stereo_mcmc_cli::Cli::parse()) {
        Ok(text) => stereo_mcmc_cli::commands::print(&text),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(1);
        }
    }
}
