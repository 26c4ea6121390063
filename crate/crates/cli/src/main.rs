fn main() {
    std::process::exit(sinet_cli::run(std::env::args_os()));
}
