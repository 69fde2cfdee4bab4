use clap::Parser;

fn main() {
    let cli = nao::cli::Cli::parse();
    std::process::exit(nao::cli::run(cli));
}
