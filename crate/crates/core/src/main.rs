fn main() {
    std::process::exit(qutrit_gpt::cli::main_with_args(std::env::args_os()));
}
