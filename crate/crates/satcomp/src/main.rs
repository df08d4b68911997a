use clap::Parser;

fn main() {
    let cli = satcomp::cli::Cli::parse();
    if let Err(e) = satcomp::cli::run(cli) {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
