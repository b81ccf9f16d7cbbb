fn main() {
    std::process::exit(fracmit::cli::main_with_args(std::env::args_os()));
}
