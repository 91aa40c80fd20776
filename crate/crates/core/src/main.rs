fn main() {
    std::process::exit(dptda::cli::main_with_args(std::env::args_os()));
}
