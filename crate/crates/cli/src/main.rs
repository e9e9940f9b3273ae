fn main() {
    std::process::exit(interviewer_cli::main_with_args(std::env::args_os()));
}
