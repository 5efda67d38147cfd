fn main() {
    std::process::exit(ltcodes::cli::main_with_args(std::env::args_os()));
}
