fn main() {
    std::process::exit(burgers_lab::cli::main_with_args(std::env::args_os()));
}
