fn main() {
    std::process::exit(squeezelab::cli::run_from_args(std::env::args_os()));
}
