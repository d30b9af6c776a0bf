use clap::Parser;

fn main() {
    let cli = regulens::cli::CliArgs::parse();
    std::process::exit(regulens::cli::run(cli));
}
