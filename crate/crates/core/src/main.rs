use clap::Parser;

fn main() {
    let cli = hardedge::cli::Cli::parse();
    std::process::exit(hardedge::cli::run(cli));
}
