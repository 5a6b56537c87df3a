fn main() {
    std::process::exit(gjelab_cli::main_with_args(std::env::args_os()));
}
