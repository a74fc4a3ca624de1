use clap::Parser;

fn main() {
    let args = spherical_pw::cli::Args::parse();
    std::process::exit(spherical_pw::cli::main_with(args));
}
