use clap::Parser;
use lumi_cli::args::Cli;

fn main() {
    env_logger::Builder::from_env(env_logger::Env::new().filter("LUMI_LOG")).init();
    let cli = Cli::parse();
    let code = lumi_cli::execute(cli, &mut std::io::stdout());
    std::process::exit(code);
}
