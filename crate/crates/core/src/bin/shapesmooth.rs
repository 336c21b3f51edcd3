fn main() {
    std::process::exit(shapesmooth::cli::run(std::env::args_os()));
}
