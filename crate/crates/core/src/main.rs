fn main() {
    std::process::exit(sigtau::cli::main_with_args(std::env::args_os()));
}
