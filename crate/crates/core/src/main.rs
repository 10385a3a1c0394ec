fn main() {
    std::process::exit(derange::cli::main_with_args(std::env::args_os()));
}
