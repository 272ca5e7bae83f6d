fn main() {
    std::process::exit(etais::cli::main_with_args(std::env::args_os()));
}
