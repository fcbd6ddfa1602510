fn main() {
    std::process::exit(spamlens::cli::main_with_args(std::env::args_os()));
}
