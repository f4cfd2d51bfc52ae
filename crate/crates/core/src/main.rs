fn main() {
    std::process::exit(wsnsim::cli::main_with_args(std::env::args_os()));
}
