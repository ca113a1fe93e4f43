fn main() {
    std::process::exit(quasilin_cli::main_with_args(std::env::args_os()));
}
