fn main() {
    std::process::exit(moire_cli::run(std::env::args_os()));
}
