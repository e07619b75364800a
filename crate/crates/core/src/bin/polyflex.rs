fn main() {
    std::process::exit(polyflex::cli::main_with_args(std::env::args_os()));
}
