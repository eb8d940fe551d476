fn main() {
    std::process::exit(dysalign_cli::run(std::env::args_os()));
}
