fn main() {
    std::process::exit(sadsp_cli::run(std::env::args_os()));
}
