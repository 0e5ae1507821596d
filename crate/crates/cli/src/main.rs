fn main() {
    std::process::exit(bcr_cli::run(std::env::args_os()));
}
