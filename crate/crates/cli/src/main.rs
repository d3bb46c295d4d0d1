fn main() {
    std::process::exit(orlicz_finsler_cli::main_with(std::env::args_os()));
}
