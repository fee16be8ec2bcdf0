fn main() {
    std::process::exit(seamless_core::cli::main_with_args(std::env::args_os()));
}
