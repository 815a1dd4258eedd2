use clap::Parser;

fn main() {
    let cli = wavecrit_cli::Cli::parse();
    std::process::exit(wavecrit_cli::main_with(&cli));
}
