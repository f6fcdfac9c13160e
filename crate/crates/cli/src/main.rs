fn main() {
    std::process::exit(semiflow_cli::app::main_with(std::env::args_os()));
}
