fn main() {
    std::process::exit(lm05_decoy::cli::run(std::env::args_os()));
}
