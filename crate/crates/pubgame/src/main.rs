fn main() {
    std::process::exit(pubgame::cli::run_from(std::env::args_os()));
}
