use clap::Parser;

fn main() {
    let cli = atd::cli::Cli::parse();
    std::process::exit(atd::cli::run(cli));
}
