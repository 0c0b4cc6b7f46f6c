fn main() {
    std::process::exit(switchcode::cli::main_with(std::env::args_os()));
}
