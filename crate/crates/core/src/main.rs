fn main() {
    std::process::exit(robin_convection::cli::run(std::env::args_os()));
}
