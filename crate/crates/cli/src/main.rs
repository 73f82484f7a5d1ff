fn main() {
    std::process::exit(neighborly_cli::run(std::env::args_os()));
}
