fn main() {
    std::process::exit(alesolve::cli::main_with_args(std::env::args_os()));
}
