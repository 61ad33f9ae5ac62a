use clap::Parser;

fn main() {
    let cli = barwitt::cli::Cli::parse();
    std::process::exit(barwitt::cli::run(&cli));
}
