use clap::Parser;

fn main() {
    let cli = wts_core::cli::Cli::parse();
    std::process::exit(wts_core::cli::run(cli));
}
