fn main() {
    std::process::exit(incseg::cli::main_with(std::env::args_os().collect()));
}
