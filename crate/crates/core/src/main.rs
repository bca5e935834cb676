fn main() {
    std::process::exit(almost_pyth::cli::run(std::env::args_os()));
}
