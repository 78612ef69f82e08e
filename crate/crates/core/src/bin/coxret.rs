fn main() {
    std::process::exit(coxret::cli::main_with_args(std::env::args_os()));
}
