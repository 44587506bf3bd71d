fn main() {
    std::process::exit(organ::cli::main_with(std::env::args_os()));
}
