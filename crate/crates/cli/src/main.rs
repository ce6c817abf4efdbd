fn main() {
    std::process::exit(gaussalign_cli::run(std::env::args_os()));
}
