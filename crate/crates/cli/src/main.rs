fn main() {
    std::process::exit(agitrack_cli::run(std::env::args_os()));
}
