fn main() {
    std::process::exit(cpdyn::cli::main_with_args(std::env::args_os()));
}
